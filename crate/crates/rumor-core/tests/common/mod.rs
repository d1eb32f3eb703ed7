//! Chi-square helpers shared by the integration suites.
//!
//! The quantile comes from statrs; `chi2_quantiles_match_reference` pins it
//! against independently computed reference values so a regression in the
//! dependency cannot silently move the acceptance thresholds.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// 99% quantile of the chi-square distribution with `df` degrees of freedom.
pub fn chi2_critical_99(df: usize) -> f64 {
    ChiSquared::new(df as f64)
        .expect("degrees of freedom must be positive")
        .inverse_cdf(0.99)
}

#[derive(Debug)]
pub struct Chi2Report {
    pub statistic: f64,
    pub df: usize,
    pub critical: f64,
}

impl Chi2Report {
    /// True when the data are consistent with the null at the 99% level.
    pub fn accepts(&self) -> bool {
        self.statistic < self.critical
    }
}

/// Merge adjacent categories (left to right) until each pooled category's
/// weight reaches `min_weight`; the leftover run is folded into the last
/// pooled cell. Returns the pooled index ranges.
fn pool_ranges(weights: &[f64], min_weight: f64) -> Vec<std::ops::Range<usize>> {
    let mut ranges = Vec::new();
    let mut start = 0;
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if acc >= min_weight {
            ranges.push(start..i + 1);
            start = i + 1;
            acc = 0.0;
        }
    }
    if start < weights.len() {
        match ranges.last_mut() {
            Some(last) => last.end = weights.len(),
            None => ranges.push(0..weights.len()),
        }
    }
    ranges
}

/// One-sample goodness of fit of observed category counts against model
/// probabilities. Categories are pooled so every expected count is at
/// least 5, the usual validity floor for the chi-square approximation.
pub fn chi2_goodness_of_fit(observed: &[u64], probs: &[f64]) -> Chi2Report {
    assert_eq!(observed.len(), probs.len());
    let total: f64 = probs.iter().sum();
    assert!(
        (total - 1.0).abs() < 1e-9,
        "model probabilities sum to {total}, not 1"
    );
    let n: u64 = observed.iter().sum();
    let expected: Vec<f64> = probs.iter().map(|p| p * n as f64).collect();
    let ranges = pool_ranges(&expected, 5.0);
    assert!(ranges.len() >= 2, "too few categories after pooling");
    let mut statistic = 0.0;
    for r in &ranges {
        let o: u64 = observed[r.clone()].iter().sum();
        let e: f64 = expected[r.clone()].iter().sum();
        statistic += (o as f64 - e).powi(2) / e;
    }
    let df = ranges.len() - 1;
    Chi2Report {
        statistic,
        df,
        critical: chi2_critical_99(df),
    }
}

/// Two-sample homogeneity test: are the two count vectors draws from the
/// same categorical distribution? Categories are pooled so the expected
/// count is at least 5 in both rows of the 2 x k table.
pub fn chi2_homogeneity(a: &[u64], b: &[u64]) -> Chi2Report {
    assert_eq!(a.len(), b.len());
    let ta: u64 = a.iter().sum();
    let tb: u64 = b.iter().sum();
    assert!(ta > 0 && tb > 0);
    let grand = (ta + tb) as f64;
    // Pooled so that min(row total)/grand * column total >= 5.
    let min_col = 5.0 * grand / ta.min(tb) as f64;
    let cols: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| (x + y) as f64)
        .collect();
    let ranges = pool_ranges(&cols, min_col);
    assert!(ranges.len() >= 2, "too few categories after pooling");
    let mut statistic = 0.0;
    for r in &ranges {
        let oa: u64 = a[r.clone()].iter().sum();
        let ob: u64 = b[r.clone()].iter().sum();
        let col = (oa + ob) as f64;
        let ea = col * ta as f64 / grand;
        let eb = col * tb as f64 / grand;
        statistic += (oa as f64 - ea).powi(2) / ea;
        statistic += (ob as f64 - eb).powi(2) / eb;
    }
    let df = ranges.len() - 1;
    Chi2Report {
        statistic,
        df,
        critical: chi2_critical_99(df),
    }
}

#[test]
fn chi2_quantiles_match_reference() {
    // Frozen from an independent high-precision evaluation.
    assert!((chi2_critical_99(3) - 11.3448667301).abs() < 1e-6);
    assert!((chi2_critical_99(10) - 23.2092511590).abs() < 1e-6);
}

#[test]
fn pooling_respects_floor_and_keeps_everything() {
    let expected = [1.0, 2.0, 9.0, 0.5, 0.5, 7.0, 1.0];
    let ranges = pool_ranges(&expected, 5.0);
    let covered: usize = ranges.iter().map(|r| r.len()).sum();
    assert_eq!(covered, expected.len());
    for r in &ranges {
        let w: f64 = expected[r.clone()].iter().sum();
        assert!(w >= 5.0, "pooled weight {w} below the floor");
    }
    assert_eq!(ranges.first().unwrap().start, 0);
    assert_eq!(ranges.last().unwrap().end, expected.len());
}
