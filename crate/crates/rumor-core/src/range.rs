//! Distribution of the rumor's range R: exact tail probabilities by p.g.f.
//! iteration, and two-sided bounds built from fractional linear generating
//! functions that sandwich the spreader p.g.f.
//!
//! With y = μ^{m+1}, both bounds share the kernel B(x, y) = (x−1)y/(x−y),
//! evaluated at two constants ℓ and u derived from G. B is increasing in x,
//! and max(ℓ, u) gives the upper tail bound, min the lower. The comparison
//! needs the hypothesis μ·G″(s) ≥ G′(s)·G″(1) on [0, 1]; it holds for the
//! fixed, binomial and poisson families but fails for every geometric law,
//! so `condition_holds` is reported and enforced rather than assumed.

use crate::error::{Error, Result};
use crate::special::CompensatedSum;
use crate::spreader::SpreaderLaw;
use serde::Serialize;

/// Hard cap on the per-m horizon; beyond this the geometric remainder
/// certificate is always the better tool.
pub const MAX_HORIZON: u32 = 2_000_000;

/// Grid resolution for verifying the comparison hypothesis on [0, 1].
const CONDITION_GRID: usize = 1024;

#[derive(Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct FlgfConstants {
    /// μ = G′(1), the spreader mean from the truncated table.
    pub mu: f64,
    /// ℓ = 1 − 2μ(μ−1)/G″(1).
    pub ell: f64,
    /// u = μ·q₀/(μ + q₀ − 1) with q₀ = G(0).
    pub u: f64,
    /// Sign of μG″(s) − G′(s)G″(1) verified on a 1024-point grid of [0, 1].
    pub condition_holds: bool,
    /// Contraction constant G″(1)/(2G′(1) + G″(1)) of the minorizing
    /// fractional linear p.g.f.; exported for reference only.
    pub c_l: f64,
    /// Counterpart (G′(1) + G(0) − 1)/G′(1) of the majorizing one.
    pub c_u: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PerM {
    pub m: u32,
    pub lower: f64,
    pub exact: f64,
    pub upper: f64,
}

#[derive(Debug, Clone)]
pub struct RangeBounds {
    pub mu: f64,
    pub ell: f64,
    pub u: f64,
    pub condition_holds: bool,
    /// Rows (m, lower, exact, upper) for m = 0..=m_max.
    pub per_m: Vec<PerM>,
    pub e_lower: f64,
    pub e_upper: f64,
    pub e_exact: f64,
}

/// Flat JSON record for the expected-range analysis.
#[derive(Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RangeSummary {
    pub mu: f64,
    pub ell: f64,
    pub u: f64,
    pub condition_holds: bool,
    pub e_lower: f64,
    pub e_exact: f64,
    pub e_upper: f64,
}

impl RangeBounds {
    pub fn summary(&self) -> RangeSummary {
        RangeSummary {
            mu: self.mu,
            ell: self.ell,
            u: self.u,
            condition_holds: self.condition_holds,
            e_lower: self.e_lower,
            e_exact: self.e_exact,
            e_upper: self.e_upper,
        }
    }
}

/// The two comparison constants plus the hypothesis check.
///
/// Requires G″(1) > 0: a law whose spreader count never exceeds one has a
/// linear p.g.f. and admits no fractional-linear sandwich.
pub fn flgf_constants(sl: &SpreaderLaw) -> Result<FlgfConstants> {
    let mu = sl.pgf_derivative(1.0, 1)?;
    let g2 = sl.pgf_derivative(1.0, 2)?;
    if g2 <= 0.0 {
        return Err(Error::BoundsNotApplicable(
            "G''(1) = 0: the spreader count never exceeds one, and the \
             fractional-linear comparison needs a strictly convex p.g.f."
                .into(),
        ));
    }
    let q0 = sl.q0();
    let denom = mu + q0 - 1.0;
    // For a subcritical law Markov's inequality gives 1 − q₀ ≤ μ, so the
    // denominator is positive; it can only close up under fp cancellation.
    if denom <= 0.0 {
        return Err(Error::BoundsNotApplicable(format!(
            "u undefined: G'(1) + G(0) - 1 = {denom} is not positive"
        )));
    }
    let ell = 1.0 - 2.0 * mu * (mu - 1.0) / g2;
    let u = mu * q0 / denom;
    let condition_holds = comparison_condition_holds(sl, mu, g2);
    Ok(FlgfConstants {
        mu,
        ell,
        u,
        condition_holds,
        c_l: g2 / (2.0 * mu + g2),
        c_u: denom / mu,
    })
}

/// Check μG″(s) − G′(s)G″(1) ≥ 0 on an even grid of [0, 1]. The expression
/// vanishes identically at s = 1, so the sign test carries a relative slack
/// for rounding noise.
fn comparison_condition_holds(sl: &SpreaderLaw, mu: f64, g2_at_1: f64) -> bool {
    let slack = 1e-12 * (1.0 + mu * g2_at_1);
    for k in 0..CONDITION_GRID {
        let s = k as f64 / (CONDITION_GRID - 1) as f64;
        let g1 = sl.pgf_derivative(s, 1).expect("order 1 is valid");
        let g2 = sl.pgf_derivative(s, 2).expect("order 2 is valid");
        if mu * g2 - g1 * g2_at_1 < -slack {
            return false;
        }
    }
    true
}

/// P(R > m) = 1 − G^{∘(m+1)}(0): the rumor reaches past distance m exactly
/// when the embedded process still has live vertices in generation m.
///
/// For infinite-support laws the truncated p.g.f. is defective by its tail
/// mass δ, so the iterates converge to a fixed point below 1 and the
/// returned tail cannot resolve values smaller than about δ/(1 − μ); treat
/// results at that absolute scale as zero.
pub fn exact_tail(sl: &SpreaderLaw, m: u32) -> f64 {
    let mut s = 0.0;
    for _ in 0..=m {
        s = sl.pgf(s);
    }
    (1.0 - s).max(0.0)
}

/// B(x, y) = (x−1)y/(x−y): the closed-form tail of an iterated fractional
/// linear p.g.f. with fixed point x and mean μ, at y = μ^{m+1}. Increasing
/// in x on x > y.
fn bound_kernel(x: f64, y: f64) -> f64 {
    (x - 1.0) * y / (x - y)
}

fn require_applicable(sl: &SpreaderLaw, constants: &FlgfConstants) -> Result<()> {
    if !constants.condition_holds {
        return Err(Error::BoundsNotApplicable(
            "comparison hypothesis mu*G''(s) >= G'(s)*G''(1) fails somewhere \
             on [0, 1] for this law (it fails for every geometric law)"
            .into(),
        ));
    }
    let (_, mean_upper) = sl.mean_interval();
    if mean_upper >= 1.0 {
        return Err(Error::BoundsNotApplicable(format!(
            "law is not certifiably subcritical (certified mean upper bound \
             {mean_upper} >= 1); the expected range is infinite on survival"
        )));
    }
    Ok(())
}

/// Lower and upper bounds on P(R > m), returned as (min, max) of the kernel
/// at ℓ and u. The u-side bound is tight at m = 0: B(u, μ) = 1 − q₀ exactly.
pub fn tail_bounds(sl: &SpreaderLaw, m: u32) -> Result<(f64, f64)> {
    let constants = flgf_constants(sl)?;
    require_applicable(sl, &constants)?;
    let y = powi_checked(constants.mu, m)?;
    let (x_lo, x_hi) = ordered(constants.ell, constants.u);
    if y >= x_lo {
        return Err(Error::BoundsNotApplicable(format!(
            "mu^(m+1) = {y} is not below min(ell, u) = {x_lo}"
        )));
    }
    Ok((bound_kernel(x_lo, y), bound_kernel(x_hi, y)))
}

fn ordered(a: f64, b: f64) -> (f64, f64) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

fn powi_checked(mu: f64, m: u32) -> Result<f64> {
    if m > MAX_HORIZON {
        return Err(Error::InvalidParameter(format!(
            "m = {m} exceeds the supported horizon {MAX_HORIZON}"
        )));
    }
    Ok(mu.powi(m as i32 + 1))
}

/// Shared walk over m = 0..=m_max accumulating the three tail sums; the
/// visitor sees each row. Returns (Σ lower, Σ exact, Σ upper-with-remainder).
fn walk_range(
    sl: &SpreaderLaw,
    constants: &FlgfConstants,
    m_max: u32,
    mut visit: impl FnMut(PerM),
) -> (f64, f64, f64) {
    let (x_lo, x_hi) = ordered(constants.ell, constants.u);
    let mu = constants.mu;
    let mut y = 1.0;
    let mut s = 0.0;
    let mut sum_lower = CompensatedSum::new();
    let mut sum_exact = CompensatedSum::new();
    let mut sum_upper = CompensatedSum::new();
    for m in 0..=m_max {
        y *= mu;
        s = sl.pgf(s);
        let row = PerM {
            m,
            lower: bound_kernel(x_lo, y),
            exact: (1.0 - s).max(0.0),
            upper: bound_kernel(x_hi, y),
        };
        sum_lower.add(row.lower);
        sum_exact.add(row.exact);
        sum_upper.add(row.upper);
        visit(row);
    }
    // Certified remainder: for m > m_max, B(x, μ^{m+1}) ≤ (x−1)μ^{m+1} /
    // (x − μ^{m_max+2}), and the remaining geometric series sums exactly.
    let y_next = y * mu;
    let remainder = (x_hi - 1.0) / (x_hi - y_next) * y_next / (1.0 - mu);
    (
        sum_lower.total(),
        sum_exact.total(),
        sum_upper.total() + remainder,
    )
}

/// E(R) interval and truncated exact value without materializing rows:
/// (eLower, eExact, eUpper). Same arithmetic as `expected_range_bounds`.
pub fn expected_range_interval(sl: &SpreaderLaw, m_max: u32) -> Result<(f64, f64, f64)> {
    if sl.q0() >= 1.0 {
        return Ok((0.0, 0.0, 0.0));
    }
    if m_max > MAX_HORIZON {
        return Err(Error::InvalidParameter(format!(
            "m_max = {m_max} exceeds the supported horizon {MAX_HORIZON}"
        )));
    }
    let constants = flgf_constants(sl)?;
    require_applicable(sl, &constants)?;
    Ok(walk_range(sl, &constants, m_max, |_| {}))
}

/// Full range analysis: per-m tail table for m ≤ m_max plus the E(R)
/// interval, where the upper endpoint carries a certified geometric
/// remainder for the discarded m > m_max terms and the lower endpoint and
/// the exact sum are plain truncations (both therefore genuine bounds).
///
/// A law whose spreader count is almost surely zero short-circuits to the
/// degenerate answer: every tail is 0 and E(R) = 0 with ℓ = u = 1.
pub fn expected_range_bounds(sl: &SpreaderLaw, m_max: u32) -> Result<RangeBounds> {
    if m_max > MAX_HORIZON {
        return Err(Error::InvalidParameter(format!(
            "m_max = {m_max} exceeds the supported horizon {MAX_HORIZON}"
        )));
    }
    if sl.q0() >= 1.0 {
        return Ok(RangeBounds {
            mu: 0.0,
            ell: 1.0,
            u: 1.0,
            condition_holds: true,
            per_m: (0..=m_max)
                .map(|m| PerM {
                    m,
                    lower: 0.0,
                    exact: 0.0,
                    upper: 0.0,
                })
                .collect(),
            e_lower: 0.0,
            e_upper: 0.0,
            e_exact: 0.0,
        });
    }
    let constants = flgf_constants(sl)?;
    require_applicable(sl, &constants)?;
    let mut per_m = Vec::with_capacity(m_max as usize + 1);
    let (e_lower, e_exact, e_upper) = walk_range(sl, &constants, m_max, |row| per_m.push(row));
    debug_assert!(e_lower <= e_exact + 1e-9 && e_exact <= e_upper + 1e-9);
    Ok(RangeBounds {
        mu: constants.mu,
        ell: constants.ell,
        u: constants.u,
        condition_holds: constants.condition_holds,
        per_m,
        e_lower,
        e_upper,
        e_exact,
    })
}

/// Horizon at which μ^{m} drops below the target resolution, clamped to
/// [fallback, MAX_HORIZON]. Used to pick m_max adaptively near criticality,
/// where the default horizon would leave a visible truncation gap.
pub fn adaptive_horizon(mu: f64, target: f64, fallback: u32) -> u32 {
    if !(0.0 < mu && mu < 1.0) || !(0.0 < target && target < 1.0) {
        return fallback;
    }
    let m = (target.ln() / mu.ln()).ceil();
    if !m.is_finite() {
        return fallback;
    }
    (m as u32).clamp(fallback, MAX_HORIZON)
}
