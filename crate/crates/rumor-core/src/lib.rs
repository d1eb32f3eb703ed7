//! Phase-transition analysis of the Maki-Thompson rumor model on
//! Galton-Watson random trees.
//!
//! A rumor started at a source vertex spreads over a random tree whose
//! vertices get i.i.d. ξ children: spreaders contact uniform neighbors at
//! rate equal to their degree, inform ignorants, and turn stifler on first
//! contact with an already-informed vertex. The number of vertices one
//! spreader informs follows an explicit law X(ξ), and the informed vertices
//! per distance level form a branching process. Everything observable then
//! reduces to that process:
//!
//! * [`spreader`] builds the law of X(ξ) and its generating function with a
//!   certified interval for E X(ξ);
//! * [`survival`] finds the survival probability as a fixed point and
//!   locates critical family parameters by certified bisection;
//! * [`range`] bounds the distribution and expectation of the rumor's range
//!   with fractional-linear sandwich bounds plus exact tails;
//! * [`sim`] cross-validates all of it with an exact event-driven
//!   continuous-time simulator and a fast level-by-level one.

pub mod error;
pub mod offspring;
pub mod range;
pub mod sim;
pub mod special;
pub mod spreader;
pub mod survival;

pub use error::{Error, Result};
pub use offspring::{OffspringLaw, TruncatedPmf};
pub use range::{
    expected_range_bounds, expected_range_interval, exact_tail, flgf_constants, tail_bounds,
    FlgfConstants, RangeBounds, RangeSummary,
};
pub use sim::{
    estimate, simulate_ctmc, simulate_generation, simulate_replica, Engine, EstimateResult,
    ReplicaOutcome, SimConfig, SimSummary,
};
pub use spreader::{conditional_pmf, mean_with_bounds, SpreaderLaw};
pub use survival::{
    binom3_closed_form, binomial_poisson_limit_table, cayley_survival, critical_parameter,
    extinction_probability, CriticalBracket, Direction, ScanFamily, SurvivalResult,
};

/// Every tunable default in one place. The CLI exposes each as a flag; the
/// library never reads configuration from the environment.
pub mod defaults {
    /// Truncation tail budget for offspring laws.
    pub const EPS: f64 = 1e-12;
    /// Fixed-point and bisection tolerance.
    pub const TOL: f64 = 1e-10;
    /// Depth cap and survival proxy depth for simulations.
    pub const DEPTH: u32 = 60;
    /// Monte-Carlo replicas.
    pub const REPLICAS: u64 = 100_000;
    /// Horizon for per-m range tables and E(R) truncation.
    pub const M_MAX: u32 = 512;
    /// Contact budget per simulated replica.
    pub const MAX_EVENTS: u64 = 5_000_000;
    /// Seed for simulations when none is given.
    pub const SEED: u64 = 1;
}
