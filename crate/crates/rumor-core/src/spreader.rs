//! The law of X(ξ): how many spreaders one spreader creates.
//!
//! Conditional on its vertex having d children, a spreader faces d+1
//! equally likely contact targets (its already-informed parent plus the d
//! children) and keeps informing fresh children until the first contact with
//! an informed neighbor turns it into a stifler. The count of children
//! informed on the way is exactly the coupon-collector "distinct draws
//! before the first repeat" variable, giving
//! P(X = i | ξ = d) = (i+1)! C(d,i) (d+1)^{−(i+1)}.

use crate::error::{Error, Result};
use crate::offspring::{OffspringLaw, TruncatedPmf};
use crate::special::{ln_factorial, spreader_term_minus_one, CompensatedSum};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// P(X = i | ξ = d) = (i+1)! C(d,i) (d+1)^{−(i+1)} for 0 ≤ i ≤ d; zero
/// outside that range. Evaluated in the log domain so d in the thousands is
/// fine.
pub fn conditional_pmf(i: u32, d: u32) -> f64 {
    if i > d {
        return 0.0;
    }
    let (i, d) = (u64::from(i), u64::from(d));
    let ln = ln_factorial(i + 1) + ln_factorial(d)
        - ln_factorial(i)
        - ln_factorial(d - i)
        - (i + 1) as f64 * ((d + 1) as f64).ln();
    let v = ln.exp();
    if v < 1e-300 {
        0.0
    } else {
        v
    }
}

/// Fill `row[0..=d]` with P(X = · | ξ = d) via the ratio recurrence
/// c_{i+1} = c_i (i+2)(d−i) / ((i+1)(d+1)), c_0 = 1/(d+1).
/// One multiplication per entry; used by the O(D²) mixture build.
fn conditional_row_into(d: usize, row: &mut Vec<f64>) {
    row.clear();
    let dp1 = (d + 1) as f64;
    let mut c = 1.0 / dp1;
    row.push(c);
    for i in 0..d {
        c *= ((i + 2) * (d - i)) as f64 / ((i + 1) as f64 * dp1);
        row.push(c);
    }
}

/// The unconditional law of X(ξ) built from a truncated offspring pmf,
/// with its p.g.f. and a certified interval for E(X(ξ)).
///
/// Immutable after build; every query is pure, so values can be shared
/// freely across threads.
#[derive(Debug, Clone)]
pub struct SpreaderLaw {
    source: OffspringLaw,
    truncation: TruncatedPmf,
    /// q[i] = P(X = i) under the truncated mixture; length cutoff+1.
    q: Vec<f64>,
    mean_lower: f64,
    mean_upper: f64,
}

impl SpreaderLaw {
    /// Mix the conditional rows over the offspring law truncated at `eps`.
    ///
    /// The mean interval is certified: the lower end is the exact finite
    /// mixture Σ_{d≤D} (term(d)−1)·pmf(d); the upper end adds the truncated
    /// tail's mean contribution, which dominates Σ_{d>D}(term(d)−1)·pmf(d)
    /// because term(d) ≤ d+1.
    pub fn build(law: &OffspringLaw, eps: f64) -> Result<Self> {
        let truncation = law.truncate(eps)?;
        let cutoff = truncation.cutoff;
        let mut q_acc: Vec<CompensatedSum> = vec![CompensatedSum::new(); cutoff + 1];
        let mut mean_acc = CompensatedSum::new();
        let mut row: Vec<f64> = Vec::with_capacity(cutoff + 1);
        for (d, &pd) in truncation.probabilities.iter().enumerate() {
            if pd == 0.0 {
                continue;
            }
            conditional_row_into(d, &mut row);
            for (i, &c) in row.iter().enumerate() {
                q_acc[i].add(c * pd);
            }
            if d >= 1 {
                mean_acc.add(spreader_term_minus_one(d as u64) * pd);
            }
        }
        let q: Vec<f64> = q_acc.iter().map(|s| s.total()).collect();
        let mean_lower = mean_acc.total();
        let mean_upper = mean_lower + truncation.tail_mean_contribution;
        Ok(SpreaderLaw {
            source: law.clone(),
            truncation,
            q,
            mean_lower,
            mean_upper,
        })
    }

    pub fn source(&self) -> &OffspringLaw {
        &self.source
    }

    pub fn truncation(&self) -> &TruncatedPmf {
        &self.truncation
    }

    /// The pmf table of X; index i holds P(X = i).
    pub fn q(&self) -> &[f64] {
        &self.q
    }

    /// q₀ = P(X = 0) = G(0) = E(1/(ξ+1)) up to truncation.
    pub fn q0(&self) -> f64 {
        self.q[0]
    }

    /// Certified interval [lower, upper] containing E(X(ξ)).
    pub fn mean_interval(&self) -> (f64, f64) {
        (self.mean_lower, self.mean_upper)
    }

    /// G(s) = Σ q_i s^i by Horner; positive-coefficient evaluation, no
    /// cancellation anywhere on [0, 1].
    pub fn pgf(&self, s: f64) -> f64 {
        let mut acc = 0.0;
        for &qi in self.q.iter().rev() {
            acc = acc * s + qi;
        }
        acc
    }

    /// G'(s) or G''(s).
    pub fn pgf_derivative(&self, s: f64, order: u8) -> Result<f64> {
        match order {
            1 => {
                let mut acc = 0.0;
                for i in (1..self.q.len()).rev() {
                    acc = acc * s + i as f64 * self.q[i];
                }
                Ok(acc)
            }
            2 => {
                let mut acc = 0.0;
                for i in (2..self.q.len()).rev() {
                    acc = acc * s + (i * (i - 1)) as f64 * self.q[i];
                }
                Ok(acc)
            }
            _ => Err(Error::InvalidParameter(format!(
                "p.g.f. derivative order {order} not supported (use 1 or 2)"
            ))),
        }
    }
}

/// Certified interval for E(X(ξ)) without keeping the law around.
pub fn mean_with_bounds(law: &OffspringLaw, eps: f64) -> Result<(f64, f64)> {
    // The q table is not needed for the mean; redo only the cheap part.
    let truncation = law.truncate(eps)?;
    let mut mean_acc = CompensatedSum::new();
    for (d, &pd) in truncation.probabilities.iter().enumerate().skip(1) {
        if pd > 0.0 {
            mean_acc.add(spreader_term_minus_one(d as u64) * pd);
        }
    }
    let lower = mean_acc.total();
    Ok((lower, lower + truncation.tail_mean_contribution))
}

/// How the brute-force oracle explores the contact process.
#[derive(Debug, Clone, Copy)]
pub enum OracleMode {
    /// Enumerate every contact sequence with its exact probability.
    Exact,
    /// Simulate `samples` independent reductions.
    MonteCarlo { samples: u64, seed: u64 },
}

/// Independent oracle for the conditional law: runs the contact process
/// itself (uniform contacts among d+1 targets, stop at the first informed
/// one) instead of the closed-form pmf.
pub fn oracle_conditional_pmf(d: u32, mode: OracleMode) -> Result<Vec<f64>> {
    match mode {
        OracleMode::Exact => {
            if d > 12 {
                return Err(Error::EnumerationTooLarge(d));
            }
            let d = d as usize;
            let mut out = vec![0.0_f64; d + 1];
            // At `informed` children informed, the next contact hits an
            // informed target w.p. (informed+1)/(d+1) (parent included) and
            // each uninformed child w.p. 1/(d+1); uninformed children are
            // exchangeable, so a single branch weighted (d-informed)/(d+1)
            // covers them.
            fn rec(d: usize, informed: usize, prob: f64, out: &mut [f64]) {
                let targets = (d + 1) as f64;
                out[informed] += prob * (informed + 1) as f64 / targets;
                if informed < d {
                    rec(
                        d,
                        informed + 1,
                        prob * (d - informed) as f64 / targets,
                        out,
                    );
                }
            }
            rec(d, 0, 1.0, &mut out);
            Ok(out)
        }
        OracleMode::MonteCarlo { samples, seed } => {
            if samples == 0 {
                return Err(Error::InvalidParameter("samples must be >= 1".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut counts = vec![0u64; d as usize + 1];
            for _ in 0..samples {
                let mut informed = 0u32;
                loop {
                    let target = rng.random_range(0..=d);
                    if target < informed + 1 {
                        break; // hit the parent or an informed child
                    }
                    informed += 1;
                }
                counts[informed as usize] += 1;
            }
            Ok(counts
                .iter()
                .map(|&c| c as f64 / samples as f64)
                .collect())
        }
    }
}
