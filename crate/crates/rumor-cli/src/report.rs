//! Reproduction artifacts: the survival-probability curve, the
//! expected-range bound grid, and the critical-point table with its Poisson
//! limit. Each artifact carries CSV text plus a JSON summary; the summary is
//! computed by parsing that same CSV text, so re-reading the emitted file
//! and summarizing it reproduces the JSON bit for bit.

use rumor_core::error::Result;
use rumor_core::offspring::OffspringLaw;
use rumor_core::range::{adaptive_horizon, expected_range_bounds, flgf_constants};
use rumor_core::spreader::SpreaderLaw;
use rumor_core::survival::{binomial_poisson_limit_table, extinction_probability};
use serde_json::{json, Value};

use crate::fmt::sig12;

pub struct Artifact {
    pub csv: String,
    pub summary: Value,
}

/// Numeric rows of an emitted CSV, header skipped.
fn parse_rows(csv: &str) -> Vec<Vec<f64>> {
    csv.lines()
        .skip(1)
        .filter(|line| !line.trim().is_empty())
        .map(|line| {
            line.split(',')
                .map(|token| token.trim().parse().expect("artifact rows are numeric"))
                .collect()
        })
        .collect()
}

/// Survival probability theta for the three-child binomial family on the
/// grid p = k/200, k = 0..=200.
pub fn fig2(tol: f64, eps: f64) -> Result<Artifact> {
    let mut lines = vec!["p,theta".to_string()];
    for k in 0..=200u32 {
        let p = k as f64 / 200.0;
        let sl = SpreaderLaw::build(&OffspringLaw::binomial(3, p)?, eps)?;
        let theta = extinction_probability(&sl, tol)?.theta;
        lines.push(format!("{},{}", sig12(p), sig12(theta)));
    }
    let csv = lines.join("\n") + "\n";
    let rows = parse_rows(&csv);
    let first_supercritical = rows.iter().find(|r| r[1] > 0.0).map(|r| r[0]);
    let summary = json!({
        "curve": "theta(binomial(3,p))",
        "rows": rows.len(),
        "pStep": rows[1][0] - rows[0][0],
        "firstSupercriticalP": first_supercritical,
        "thetaAtPOne": rows.last().expect("grid is nonempty")[1],
    });
    Ok(Artifact { csv, summary })
}

/// Expected-range bounds for binomial(3, p) on the reference grid:
/// p = 0.05..0.75 in steps of 0.05, then 0.78 and 0.7875.
pub fn fig5(eps: f64) -> Result<Artifact> {
    let mut grid: Vec<f64> = (1..=15).map(|k| k as f64 * 0.05).collect();
    grid.push(0.78);
    grid.push(0.7875);
    let mut lines = vec!["p,lower,exact,upper".to_string()];
    for &p in &grid {
        let sl = SpreaderLaw::build(&OffspringLaw::binomial(3, p)?, eps)?;
        let mu = flgf_constants(&sl)?.mu;
        let bounds = expected_range_bounds(&sl, adaptive_horizon(mu, 1e-10, 512))?;
        lines.push(format!(
            "{},{},{},{}",
            sig12(p),
            sig12(bounds.e_lower),
            sig12(bounds.e_exact),
            sig12(bounds.e_upper)
        ));
    }
    let csv = lines.join("\n") + "\n";
    let rows = parse_rows(&csv);
    let last = rows.last().expect("grid is nonempty");
    let summary = json!({
        "curve": "expected range bounds, binomial(3,p)",
        "rows": rows.len(),
        "pMax": last[0],
        "lowerAtPMax": last[1],
        "upperAtPMax": last[3],
        "exactInsideEverywhere": rows.iter().all(|r| r[1] <= r[2] && r[2] <= r[3]),
    });
    Ok(Artifact { csv, summary })
}

/// Critical points p_c(n) for the binomial families, with n*p_c climbing
/// toward the Poisson critical value as n grows.
pub fn table1(tol: f64, eps: f64) -> Result<Artifact> {
    let n_values = [3u32, 4, 5, 10, 25, 50, 100, 150];
    let (table, _lambda_c) = binomial_poisson_limit_table(&n_values, (0.1, 20.0), tol, eps)?;
    let mut lines = vec!["n,p_c,n_p_c".to_string()];
    for row in &table {
        lines.push(format!("{},{},{}", row.n, sig12(row.p_c), sig12(row.n_p_c)));
    }
    let csv = lines.join("\n") + "\n";
    let rows = parse_rows(&csv);
    let summary = json!({
        "rows": rows.len(),
        "firstNPc": rows.first().expect("table is nonempty")[2],
        "lastNPc": rows.last().expect("table is nonempty")[2],
        "monotoneIncreasing": rows.windows(2).all(|w| w[1][2] > w[0][2]),
    });
    Ok(Artifact { csv, summary })
}
