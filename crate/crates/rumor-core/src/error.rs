use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(
        "cannot parse distribution spec `{spec}`: {reason}; expected one of \
         fixed:d | binomial:n,p | poisson:lambda | geometric:p | custom:@table.csv"
    )]
    SpecParse { spec: String, reason: String },

    #[error("custom law table: {0}")]
    CustomTable(String),

    #[error(
        "fixed-point iteration did not converge within {cap} iterations \
         (last increment {increment:e}); the law sits too close to criticality"
    )]
    NonConvergence { cap: u64, increment: f64 },

    #[error("range bounds not applicable: {0}")]
    BoundsNotApplicable(String),

    #[error(
        "mean of the spreader law is not strictly monotone over the scan range \
         [{lo}, {hi}]; bisection needs a monotone sweep"
    )]
    NonMonotoneScan { lo: f64, hi: f64 },

    #[error(
        "mean of the spreader law does not cross 1 on [{lo}, {hi}] \
         (endpoint means {mean_lo:.6} and {mean_hi:.6}); widen the range"
    )]
    NoCrossing {
        lo: f64,
        hi: f64,
        mean_lo: f64,
        mean_hi: f64,
    },

    #[error("exact enumeration refused for d = {0}: the contact-sequence count grows like e\u{b7}d!, use d <= 12 or the monte-carlo mode")]
    EnumerationTooLarge(u32),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by malformed user input rather than by the
    /// mathematics of a well-formed request.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_) | Error::SpecParse { .. } | Error::CustomTable(_)
        )
    }
}
