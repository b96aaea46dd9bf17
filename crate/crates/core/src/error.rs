use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Constraint family of the feasible set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constraint {
    /// `z_i = s_i^(2/p) − ‖∇(u+g)|_{K_i}‖² > 0`
    Epigraph,
    /// `s_i > 0`
    Positivity,
    /// `τ_i = R − ω_i s_i > 0`
    Radius,
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constraint::Epigraph => f.write_str("epigraph"),
            Constraint::Positivity => f.write_str("positivity"),
            Constraint::Radius => f.write_str("radius"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// The smallness condition on the forcing is violated for `p = 1` or `p = inf`.
    #[error("energy may be unbounded below: L·‖f‖ = {product} ≥ 1")]
    UnboundedBelow { product: f64 },

    #[error("element {index} is degenerate (det = {det:e})")]
    DegenerateElement { index: usize, det: f64 },

    #[error("point is infeasible: {constraint} constraint of element {index} has margin {margin:e}")]
    Infeasible {
        constraint: Constraint,
        index: usize,
        margin: f64,
    },

    #[error("factorization failed at pivot {pivot} (value {value:e}) after regularization")]
    Factorization { pivot: usize, value: f64 },

    #[error("local norm is not positive ({value:e})")]
    NegativeNorm { value: f64 },

    #[error("line search step underflow at t = {t:e}")]
    LineSearch { t: f64 },

    #[error("{phase} phase exceeded the iteration cap of {cap}")]
    IterationCap { phase: &'static str, cap: usize },

    #[error("interrupted")]
    Interrupted,

    #[error("oracle did not converge within {sweeps} sweeps")]
    OracleNonConvergence { sweeps: usize },
}

impl Error {
    /// Stable machine-readable category.
    pub fn category(&self) -> &'static str {
        match self {
            Error::InvalidConfig(_) => "config",
            Error::UnboundedBelow { .. } => "unbounded_below",
            Error::Interrupted => "timeout",
            Error::DegenerateElement { .. }
            | Error::Infeasible { .. }
            | Error::Factorization { .. }
            | Error::NegativeNorm { .. }
            | Error::LineSearch { .. }
            | Error::IterationCap { .. }
            | Error::OracleNonConvergence { .. } => "numerical",
        }
    }
}
