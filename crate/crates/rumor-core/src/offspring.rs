//! Offspring distributions ξ for the random tree: exact pmf evaluation,
//! truncation with certified tail bounds, sampling, and the CLI spec grammar.

use crate::error::{Error, Result};
use crate::special::{ln_factorial, CompensatedSum};
use rand::Rng;
use rand_distr::Distribution;

/// Largest admitted value for n, d, λ or a custom table length. Truncated
/// pmf tables are materialized, so this caps memory at a few megabytes.
pub const MAX_SUPPORT_PARAM: f64 = 1_000_000.0;

#[derive(Debug, Clone, PartialEq)]
pub enum OffspringLaw {
    /// ξ = d almost surely.
    Fixed(u32),
    Binomial { n: u32, p: f64 },
    Poisson { lambda: f64 },
    /// Number of failures before the first success: P(ξ=d) = p(1−p)^d on
    /// {0,1,2,…}. The d=0 atom is what makes the −(1−p) correction in the
    /// spreader mean come out right.
    Geometric { p: f64 },
    /// Finite table indexed by value; must sum to 1 within 1e-12.
    Custom { table: Vec<f64> },
}

/// Truncation of a law to {0,…,cutoff} with certified tail bounds.
#[derive(Debug, Clone)]
pub struct TruncatedPmf {
    pub cutoff: usize,
    /// probabilities[d] = P(ξ = d) for d ≤ cutoff.
    pub probabilities: Vec<f64>,
    /// Certified upper bound on P(ξ > cutoff).
    pub tail_mass: f64,
    /// Certified upper bound on Σ_{d>cutoff} d·P(ξ = d).
    pub tail_mean_contribution: f64,
}

impl OffspringLaw {
    pub fn fixed(d: u32) -> Result<Self> {
        let law = OffspringLaw::Fixed(d);
        law.validate()?;
        Ok(law)
    }

    pub fn binomial(n: u32, p: f64) -> Result<Self> {
        let law = OffspringLaw::Binomial { n, p };
        law.validate()?;
        Ok(law)
    }

    pub fn poisson(lambda: f64) -> Result<Self> {
        let law = OffspringLaw::Poisson { lambda };
        law.validate()?;
        Ok(law)
    }

    pub fn geometric(p: f64) -> Result<Self> {
        let law = OffspringLaw::Geometric { p };
        law.validate()?;
        Ok(law)
    }

    pub fn custom(table: Vec<f64>) -> Result<Self> {
        let law = OffspringLaw::Custom { table };
        law.validate()?;
        Ok(law)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        match self {
            OffspringLaw::Fixed(d) => {
                if f64::from(*d) > MAX_SUPPORT_PARAM {
                    return bad(format!("fixed offspring count {d} exceeds {MAX_SUPPORT_PARAM}"));
                }
            }
            OffspringLaw::Binomial { n, p } => {
                if f64::from(*n) > MAX_SUPPORT_PARAM {
                    return bad(format!("binomial n = {n} exceeds {MAX_SUPPORT_PARAM}"));
                }
                if !(0.0..=1.0).contains(p) || !p.is_finite() {
                    return bad(format!("binomial p = {p} outside [0, 1]"));
                }
            }
            OffspringLaw::Poisson { lambda } => {
                if !lambda.is_finite() || *lambda <= 0.0 || *lambda > MAX_SUPPORT_PARAM {
                    return bad(format!("poisson lambda = {lambda} outside (0, {MAX_SUPPORT_PARAM}]"));
                }
            }
            OffspringLaw::Geometric { p } => {
                if !p.is_finite() || *p <= 0.0 || *p > 1.0 {
                    return bad(format!("geometric p = {p} outside (0, 1]"));
                }
            }
            OffspringLaw::Custom { table } => {
                if table.is_empty() {
                    return Err(Error::CustomTable("empty table".into()));
                }
                if table.len() as f64 > MAX_SUPPORT_PARAM {
                    return Err(Error::CustomTable(format!(
                        "table length {} exceeds {MAX_SUPPORT_PARAM}",
                        table.len()
                    )));
                }
                let mut sum = CompensatedSum::new();
                for (i, &q) in table.iter().enumerate() {
                    if !(0.0..=1.0).contains(&q) || !q.is_finite() {
                        return Err(Error::CustomTable(format!(
                            "entry {i} = {q} is not a probability"
                        )));
                    }
                    sum.add(q);
                }
                if (sum.total() - 1.0).abs() > 1e-12 {
                    return Err(Error::CustomTable(format!(
                        "table sums to {:.15}, expected 1 within 1e-12",
                        sum.total()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Exact P(ξ = d). Poisson and Binomial go through the log domain and are
    /// exponentiated once, so large d never overflows the factorials.
    pub fn pmf(&self, d: u64) -> f64 {
        let v = match self {
            OffspringLaw::Fixed(k) => {
                if d == u64::from(*k) {
                    1.0
                } else {
                    0.0
                }
            }
            OffspringLaw::Binomial { n, p } => {
                let n = u64::from(*n);
                if d > n {
                    0.0
                } else if *p == 0.0 {
                    if d == 0 {
                        1.0
                    } else {
                        0.0
                    }
                } else if *p == 1.0 {
                    if d == n {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    let ln = ln_factorial(n) - ln_factorial(d) - ln_factorial(n - d)
                        + d as f64 * p.ln()
                        + (n - d) as f64 * (-p).ln_1p();
                    ln.exp()
                }
            }
            OffspringLaw::Poisson { lambda } => {
                (-lambda + d as f64 * lambda.ln() - ln_factorial(d)).exp()
            }
            OffspringLaw::Geometric { p } => {
                if *p == 1.0 {
                    if d == 0 {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    (d as f64 * (-p).ln_1p()).exp() * p
                }
            }
            OffspringLaw::Custom { table } => {
                table.get(d as usize).copied().unwrap_or(0.0)
            }
        };
        // Flush sub-representable dust so downstream tables stay clean.
        if v < 1e-300 {
            0.0
        } else {
            v
        }
    }

    /// E(ξ) in closed form.
    pub fn mean(&self) -> f64 {
        match self {
            OffspringLaw::Fixed(d) => f64::from(*d),
            OffspringLaw::Binomial { n, p } => f64::from(*n) * p,
            OffspringLaw::Poisson { lambda } => *lambda,
            OffspringLaw::Geometric { p } => (1.0 - p) / p,
            OffspringLaw::Custom { table } => {
                let mut s = CompensatedSum::new();
                for (i, &q) in table.iter().enumerate() {
                    s.add(i as f64 * q);
                }
                s.total()
            }
        }
    }

    /// Smallest cutoff D whose certified tail bound is ≤ eps, together with
    /// the pmf table on {0,…,D} and a certified bound on the tail mean.
    ///
    /// Certificates per family:
    /// - finite support: the true (zero) tail beyond the support end;
    /// - Poisson: P(ξ>D) ≤ pmf(D+1)/(1−λ/(D+2)) for D+2 > λ (geometric
    ///   domination of the term ratio), and Σ_{d>D} d·pmf(d) = λ·P(ξ≥D);
    /// - Geometric: exact tails (1−p)^{D+1} and (1−p)^{D+1}((D+1)+(1−p)/p).
    pub fn truncate(&self, eps: f64) -> Result<TruncatedPmf> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "truncation eps = {eps} outside (0, 1)"
            )));
        }
        match self {
            OffspringLaw::Fixed(d) => {
                let cutoff = *d as usize;
                let mut probabilities = vec![0.0; cutoff + 1];
                probabilities[cutoff] = 1.0;
                Ok(TruncatedPmf {
                    cutoff,
                    probabilities,
                    tail_mass: 0.0,
                    tail_mean_contribution: 0.0,
                })
            }
            OffspringLaw::Binomial { .. } | OffspringLaw::Custom { .. } => {
                let support_end = match self {
                    OffspringLaw::Binomial { n, .. } => *n as usize,
                    OffspringLaw::Custom { table } => table.len() - 1,
                    _ => unreachable!(),
                };
                let probabilities: Vec<f64> =
                    (0..=support_end as u64).map(|d| self.pmf(d)).collect();
                // Walk back from the support end; the dropped mass is an exact
                // finite sum, hence its own certificate.
                let mut cutoff = support_end;
                let mut tail_mass = CompensatedSum::new();
                let mut tail_mean = CompensatedSum::new();
                while cutoff > 0 {
                    let p = probabilities[cutoff];
                    if tail_mass.total() + p > eps {
                        break;
                    }
                    tail_mass.add(p);
                    tail_mean.add(cutoff as f64 * p);
                    cutoff -= 1;
                }
                Ok(TruncatedPmf {
                    cutoff,
                    probabilities: probabilities[..=cutoff].to_vec(),
                    tail_mass: tail_mass.total(),
                    tail_mean_contribution: tail_mean.total(),
                })
            }
            OffspringLaw::Poisson { lambda } => {
                let mut cutoff = lambda.ceil() as usize;
                loop {
                    let bound = self.poisson_tail_bound(cutoff);
                    if bound <= eps {
                        let probabilities: Vec<f64> =
                            (0..=cutoff as u64).map(|d| self.pmf(d)).collect();
                        // Σ_{d>D} d·pmf(d) = λ P(ξ ≥ D) ≤ λ (pmf(D) + tail bound)
                        let tail_mean_contribution =
                            lambda * (self.pmf(cutoff as u64) + bound);
                        return Ok(TruncatedPmf {
                            cutoff,
                            probabilities,
                            tail_mass: bound,
                            tail_mean_contribution,
                        });
                    }
                    cutoff += 1;
                    if cutoff as f64 > 64.0 * (MAX_SUPPORT_PARAM + 1.0) {
                        unreachable!("poisson tail bound is eventually decreasing");
                    }
                }
            }
            OffspringLaw::Geometric { p } => {
                if *p == 1.0 {
                    return Ok(TruncatedPmf {
                        cutoff: 0,
                        probabilities: vec![1.0],
                        tail_mass: 0.0,
                        tail_mean_contribution: 0.0,
                    });
                }
                let q = 1.0 - p;
                let certified = |d: usize| q.powi(d as i32 + 1) * (1.0 + 1e-12);
                // Smallest D whose certified tail is <= eps, adjusted for rounding.
                let mut cutoff = ((eps.ln() / q.ln()).ceil() - 1.0).max(0.0) as usize;
                while certified(cutoff) > eps {
                    cutoff += 1;
                }
                while cutoff > 0 && certified(cutoff - 1) <= eps {
                    cutoff -= 1;
                }
                let probabilities: Vec<f64> =
                    (0..=cutoff as u64).map(|d| self.pmf(d)).collect();
                // Inflate the closed forms by one part in 1e12 so the reported
                // figures stay upper bounds despite rounding in powi.
                let tail_mass = q.powi(cutoff as i32 + 1) * (1.0 + 1e-12);
                let tail_mean_contribution =
                    tail_mass * ((cutoff as f64 + 1.0) + q / p) * (1.0 + 1e-12);
                Ok(TruncatedPmf {
                    cutoff,
                    probabilities,
                    tail_mass,
                    tail_mean_contribution,
                })
            }
        }
    }

    /// P(ξ > D) ≤ pmf(D+1) · Σ_k (λ/(D+2))^k for a Poisson law, valid once
    /// D+2 > λ so the term ratio is below one.
    fn poisson_tail_bound(&self, cutoff: usize) -> f64 {
        let OffspringLaw::Poisson { lambda } = self else {
            unreachable!()
        };
        let ratio = lambda / (cutoff as f64 + 2.0);
        if ratio >= 1.0 {
            return 1.0;
        }
        self.pmf(cutoff as u64 + 1) / (1.0 - ratio)
    }

    /// Prebuild the family sampler once per replica; drawing then costs a
    /// handful of uniforms.
    pub fn sampler(&self) -> Sampler {
        match self {
            OffspringLaw::Fixed(d) => Sampler::Fixed(u64::from(*d)),
            OffspringLaw::Binomial { n, p } => {
                Sampler::Binomial(rand_distr::Binomial::new(u64::from(*n), *p).expect(
                    "validated binomial parameters are accepted by rand_distr",
                ))
            }
            OffspringLaw::Poisson { lambda } => Sampler::Poisson(
                rand_distr::Poisson::new(*lambda)
                    .expect("validated poisson lambda is accepted by rand_distr"),
            ),
            OffspringLaw::Geometric { p } => {
                if *p >= 1.0 {
                    Sampler::Fixed(0)
                } else {
                    Sampler::Geometric(
                        rand_distr::Geometric::new(*p)
                            .expect("validated geometric p is accepted by rand_distr"),
                    )
                }
            }
            OffspringLaw::Custom { table } => {
                let mut cdf = Vec::with_capacity(table.len());
                let mut acc = CompensatedSum::new();
                for &q in table {
                    acc.add(q);
                    cdf.push(acc.total());
                }
                if let Some(last) = cdf.last_mut() {
                    *last = 1.0; // absorb the 1e-12 normalization slack
                }
                Sampler::Custom(cdf)
            }
        }
    }

    /// Parse the CLI grammar:
    /// `fixed:d | binomial:n,p | poisson:lambda | geometric:p | custom:@table.csv`.
    ///
    /// A custom table file holds one `value,probability` pair per line
    /// (`#` comments and blank lines ignored); missing indices get 0.
    pub fn parse(spec: &str) -> Result<Self> {
        let parse_err = |reason: &str| Error::SpecParse {
            spec: spec.to_string(),
            reason: reason.to_string(),
        };
        let (family, args) = spec
            .split_once(':')
            .ok_or_else(|| parse_err("missing `:`"))?;
        match family {
            "fixed" => {
                let d: u32 = args
                    .trim()
                    .parse()
                    .map_err(|_| parse_err("d must be a nonnegative integer"))?;
                OffspringLaw::fixed(d)
            }
            "binomial" => {
                let (n, p) = args
                    .split_once(',')
                    .ok_or_else(|| parse_err("binomial needs n,p"))?;
                let n: u32 = n
                    .trim()
                    .parse()
                    .map_err(|_| parse_err("n must be a nonnegative integer"))?;
                let p: f64 = p.trim().parse().map_err(|_| parse_err("p must be a real"))?;
                OffspringLaw::binomial(n, p)
            }
            "poisson" => {
                let lambda: f64 = args
                    .trim()
                    .parse()
                    .map_err(|_| parse_err("lambda must be a real"))?;
                OffspringLaw::poisson(lambda)
            }
            "geometric" => {
                let p: f64 = args.trim().parse().map_err(|_| parse_err("p must be a real"))?;
                OffspringLaw::geometric(p)
            }
            "custom" => {
                let path = args
                    .strip_prefix('@')
                    .ok_or_else(|| parse_err("custom takes @path.csv"))?;
                let text = std::fs::read_to_string(path)?;
                Self::parse_custom_table(&text)
            }
            _ => Err(parse_err("unknown family")),
        }
    }

    /// Parse `value,probability` lines into a dense table.
    pub fn parse_custom_table(text: &str) -> Result<Self> {
        let mut entries: Vec<(usize, f64)> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (i, q) = line.split_once(',').ok_or_else(|| {
                Error::CustomTable(format!("line {}: expected `value,probability`", lineno + 1))
            })?;
            let i: usize = i.trim().parse().map_err(|_| {
                Error::CustomTable(format!("line {}: bad value index", lineno + 1))
            })?;
            let q: f64 = q.trim().parse().map_err(|_| {
                Error::CustomTable(format!("line {}: bad probability", lineno + 1))
            })?;
            entries.push((i, q));
        }
        let max_i = entries
            .iter()
            .map(|&(i, _)| i)
            .max()
            .ok_or_else(|| Error::CustomTable("no entries".into()))?;
        if max_i as f64 > MAX_SUPPORT_PARAM {
            return Err(Error::CustomTable(format!(
                "value {max_i} exceeds {MAX_SUPPORT_PARAM}"
            )));
        }
        let mut table = vec![0.0; max_i + 1];
        for (i, q) in entries {
            if table[i] != 0.0 {
                return Err(Error::CustomTable(format!("duplicate entry for value {i}")));
            }
            table[i] = q;
        }
        OffspringLaw::custom(table)
    }
}

#[derive(Debug, Clone)]
pub enum Sampler {
    Fixed(u64),
    Binomial(rand_distr::Binomial),
    Poisson(rand_distr::Poisson<f64>),
    Geometric(rand_distr::Geometric),
    Custom(Vec<f64>),
}

impl Sampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match self {
            Sampler::Fixed(d) => *d,
            Sampler::Binomial(b) => b.sample(rng),
            Sampler::Poisson(p) => p.sample(rng) as u64,
            Sampler::Geometric(g) => g.sample(rng),
            Sampler::Custom(cdf) => {
                let u: f64 = rng.random();
                cdf.partition_point(|&c| c < u) as u64
            }
        }
    }
}
