//! Survival and extinction of the rumor: the smallest fixed point of the
//! spreader p.g.f., the Cayley-tree root convention, the Binomial(3,p)
//! closed form, and critical-parameter location by certified bisection.

use crate::error::{Error, Result};
use crate::offspring::OffspringLaw;
use crate::spreader::{mean_with_bounds, SpreaderLaw};
use serde::Serialize;

/// Plain monotone iterations before Aitken extrapolation is allowed to
/// accelerate; the plain iterates remain the correctness reference.
const PLAIN_ITERATIONS: u64 = 10_000;

/// Hard cap on p.g.f. evaluations before giving up as non-convergent.
pub const ITERATION_CAP: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SurvivalResult {
    /// Extinction probability ψ: smallest nonnegative root of G(s) = s.
    pub psi: f64,
    /// Survival probability θ = 1 − ψ.
    pub theta: f64,
    pub mean_lower: f64,
    pub mean_upper: f64,
    /// Number of p.g.f. evaluations spent.
    pub iterations: u64,
    /// |G(ψ) − ψ| at the returned point.
    pub residual: f64,
}

/// Extinction probability by monotone fixed-point iteration from 0.
///
/// Iterating from 0 converges to the smallest root from below, so the
/// trivial root s = 1 can never be mistaken for ψ. When the certified mean
/// interval already proves E(X) ≤ 1 the answer is ψ = 1 with no iteration:
/// the survival dichotomy is decided on the mean interval, never on the
/// ill-conditioned solver output.
///
/// Past `PLAIN_ITERATIONS` steps, Aitken Δ² extrapolation proposes jumps; a
/// jump is taken only if it lands strictly below 1 with G(ŝ) ≥ ŝ, which
/// keeps the iterate at or below ψ, so acceleration can never overshoot the
/// smallest fixed point.
pub fn extinction_probability(sl: &SpreaderLaw, tol: f64) -> Result<SurvivalResult> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol = {tol} must be > 0")));
    }
    let (mean_lower, mean_upper) = sl.mean_interval();
    if mean_upper <= 1.0 {
        return Ok(SurvivalResult {
            psi: 1.0,
            theta: 0.0,
            mean_lower,
            mean_upper,
            iterations: 0,
            residual: 0.0,
        });
    }
    let mut s = 0.0_f64;
    let mut iterations = 0_u64;
    loop {
        let next = sl.pgf(s);
        iterations += 1;
        // Iterates of a p.g.f. from 0 are nondecreasing and capped by 1;
        // anything else is an implementation bug, not a data condition.
        assert!(
            next >= s - 1e-12 && next <= 1.0 + 1e-12,
            "fixed-point iterate left [s, 1]: s={s}, G(s)={next}"
        );
        if next - s < tol {
            s = next;
            break;
        }
        s = next;
        if iterations >= PLAIN_ITERATIONS {
            // Aitken phase: s, G(s), G(G(s)) -> extrapolated candidate.
            let s1 = sl.pgf(s);
            let s2 = sl.pgf(s1);
            iterations += 2;
            if s2 - s1 < tol {
                s = s2;
                break;
            }
            let d1 = s1 - s;
            let d2 = s2 - s1;
            let denom = d2 - d1;
            let mut advanced = s2;
            if denom != 0.0 {
                let candidate = s2 - d2 * d2 / denom;
                if candidate > s2 && candidate < 1.0 {
                    iterations += 1;
                    if sl.pgf(candidate) >= candidate {
                        advanced = candidate;
                    }
                }
            }
            s = advanced;
        }
        if iterations >= ITERATION_CAP {
            return Err(Error::NonConvergence {
                cap: ITERATION_CAP,
                increment: sl.pgf(s) - s,
            });
        }
    }
    let psi = s.min(1.0);
    let residual = (sl.pgf(psi) - psi).abs();
    Ok(SurvivalResult {
        psi,
        theta: 1.0 - psi,
        mean_lower,
        mean_upper,
        iterations,
        residual,
    })
}

/// Survival probability seen from the root of a Cayley tree with d+1
/// neighbors per vertex: every one of the root's d+1 subtrees is an
/// independent copy of the source-rooted process, and the root's own
/// contact reduction gives survival 1 − ψ² rather than 1 − ψ.
pub fn cayley_survival(d: u32, tol: f64) -> Result<f64> {
    if d < 1 {
        return Err(Error::InvalidParameter(format!(
            "cayley tree degree parameter d = {d} must be >= 1"
        )));
    }
    let law = OffspringLaw::fixed(d)?;
    let sl = SpreaderLaw::build(&law, 1e-12)?;
    let r = extinction_probability(&sl, tol)?;
    Ok(1.0 - r.psi * r.psi)
}

/// θ(3,p) in closed form: zero when 5p³ − 32p² + 144p − 96 ≤ 0, else
/// (−5p² + 32p − 2√(p(−5p³ − 8p² − 68p + 216))) / (9p²).
pub fn binom3_closed_form(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) || !p.is_finite() {
        return Err(Error::InvalidParameter(format!("p = {p} outside [0, 1]")));
    }
    let threshold = ((5.0 * p - 32.0) * p + 144.0) * p - 96.0;
    if threshold <= 0.0 {
        return Ok(0.0);
    }
    let radicand = p * (((-5.0 * p - 8.0) * p - 68.0) * p + 216.0);
    Ok(((-5.0 * p + 32.0) * p - 2.0 * radicand.sqrt()) / (9.0 * p * p))
}

/// One-parameter family to scan for the phase transition.
#[derive(Debug, Clone, Copy)]
pub enum ScanFamily {
    /// Binomial(n, ·) scanned in p.
    BinomialP { n: u32 },
    /// Poisson(·) scanned in λ.
    PoissonLambda,
    /// Geometric(·) scanned in p (mean decreasing in p, so survival sits
    /// below the critical point).
    GeometricP,
}

impl ScanFamily {
    fn law(&self, x: f64) -> Result<OffspringLaw> {
        match self {
            ScanFamily::BinomialP { n } => OffspringLaw::binomial(*n, x),
            ScanFamily::PoissonLambda => OffspringLaw::poisson(x),
            ScanFamily::GeometricP => OffspringLaw::geometric(x),
        }
    }

    pub fn parameter_name(&self) -> &'static str {
        match self {
            ScanFamily::BinomialP { .. } | ScanFamily::GeometricP => "p",
            ScanFamily::PoissonLambda => "lambda",
        }
    }

    /// Scan range used when the caller does not provide one.
    pub fn default_range(&self) -> (f64, f64) {
        match self {
            ScanFamily::BinomialP { .. } => (1e-3, 1.0),
            ScanFamily::PoissonLambda => (0.1, 20.0),
            ScanFamily::GeometricP => (0.05, 0.95),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    /// Mean increasing in the parameter: survival above the bracket.
    SurvivalAbove,
    /// Mean decreasing: survival below the bracket.
    SurvivalBelow,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CriticalBracket {
    pub parameter: &'static str,
    pub lower: f64,
    pub upper: f64,
    pub direction: Direction,
    /// Achieved bracket width guarantee: the requested tol, or the width at
    /// which interval classification became ambiguous at machine limits.
    pub tolerance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Class {
    Subcritical,
    Supercritical,
    Ambiguous,
}

/// Classify a parameter point by its certified mean interval, tightening
/// the truncation eps by 10³ per retry while the interval straddles 1.
fn classify(family: &ScanFamily, x: f64, eps: f64) -> Result<Class> {
    let mut eps = eps;
    loop {
        let (lo, hi) = mean_with_bounds(&family.law(x)?, eps)?;
        if lo > 1.0 {
            return Ok(Class::Supercritical);
        }
        if hi < 1.0 {
            return Ok(Class::Subcritical);
        }
        if eps <= 1e-15 {
            return Ok(Class::Ambiguous);
        }
        eps = (eps / 1e3).max(1e-15);
    }
}

/// Locate the critical parameter by bisection on certified mean intervals.
///
/// A midpoint is classified supercritical only when the certified lower
/// mean exceeds 1 and subcritical only when the upper mean stays below 1,
/// so the returned bracket provably contains the crossing. If tightening
/// eps cannot break a tie at machine precision, the residual bracket is
/// returned with its achieved width in `tolerance` rather than a point.
pub fn critical_parameter(
    family: ScanFamily,
    param_range: (f64, f64),
    tol: f64,
    eps: f64,
) -> Result<CriticalBracket> {
    let (a, b) = param_range;
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(Error::InvalidParameter(format!(
            "scan range [{a}, {b}] is not an ordered finite interval"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol = {tol} must be > 0")));
    }
    // Monotonicity probe on a coarse grid of interval midpoints.
    let grid: Vec<f64> = (0..=8).map(|k| a + (b - a) * k as f64 / 8.0).collect();
    let mut mids = Vec::with_capacity(grid.len());
    for &x in &grid {
        let (lo, hi) = mean_with_bounds(&family.law(x)?, eps)?;
        mids.push(0.5 * (lo + hi));
    }
    let increasing = mids.windows(2).all(|w| w[1] > w[0]);
    let decreasing = mids.windows(2).all(|w| w[1] < w[0]);
    if !increasing && !decreasing {
        return Err(Error::NonMonotoneScan { lo: a, hi: b });
    }
    let direction = if increasing {
        Direction::SurvivalAbove
    } else {
        Direction::SurvivalBelow
    };
    let class_a = classify(&family, a, eps)?;
    let class_b = classify(&family, b, eps)?;
    let (sub_end, super_end) = if increasing {
        (Class::Subcritical, Class::Supercritical)
    } else {
        (Class::Supercritical, Class::Subcritical)
    };
    if class_a != sub_end || class_b != super_end {
        return Err(Error::NoCrossing {
            lo: a,
            hi: b,
            mean_lo: mids[0],
            mean_hi: mids[8],
        });
    }
    let (mut lo, mut hi) = (a, b);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break; // interval no longer splittable in f64
        }
        match classify(&family, mid, eps)? {
            Class::Ambiguous => {
                // Residual bracket at the certification limit.
                return Ok(CriticalBracket {
                    parameter: family.parameter_name(),
                    lower: lo,
                    upper: hi,
                    direction,
                    tolerance: hi - lo,
                });
            }
            c => {
                let mid_is_sub = c == Class::Subcritical;
                if mid_is_sub == increasing {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
        }
    }
    Ok(CriticalBracket {
        parameter: family.parameter_name(),
        lower: lo,
        upper: hi,
        direction,
        tolerance: tol.max(hi - lo),
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LimitTableRow {
    pub n: u32,
    pub p_c: f64,
    pub n_p_c: f64,
}

/// Critical points p_c(n) for Binomial(n, ·) rows plus the Poisson λ_c they
/// approach: n·p_c(n) climbs toward λ_c as the binomial law converges to the
/// Poisson law of matching mean.
pub fn binomial_poisson_limit_table(
    n_values: &[u32],
    lambda_range: (f64, f64),
    tol: f64,
    eps: f64,
) -> Result<(Vec<LimitTableRow>, f64)> {
    let mut rows = Vec::with_capacity(n_values.len());
    for &n in n_values {
        if n < 3 {
            return Err(Error::InvalidParameter(format!(
                "binomial n = {n} has no supercritical phase (need n >= 3)"
            )));
        }
        let bracket = critical_parameter(
            ScanFamily::BinomialP { n },
            ScanFamily::BinomialP { n }.default_range(),
            tol,
            eps,
        )?;
        let p_c = 0.5 * (bracket.lower + bracket.upper);
        rows.push(LimitTableRow {
            n,
            p_c,
            n_p_c: f64::from(n) * p_c,
        });
    }
    let bracket = critical_parameter(ScanFamily::PoissonLambda, lambda_range, tol, eps)?;
    Ok((rows, 0.5 * (bracket.lower + bracket.upper)))
}
