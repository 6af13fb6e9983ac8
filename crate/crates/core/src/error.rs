use num_complex::Complex64;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid box: {0}")]
    InvalidBox(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// The spectral parameter sits on a pole of the free resolvent.
    #[error("spectral parameter z = {z} is not in the resolvent set")]
    Domain { z: Complex64 },

    #[error("{what} = {value} exceeds the supported maximum of {max}")]
    SizeLimit {
        what: &'static str,
        value: usize,
        max: usize,
    },

    #[error("momentum index {indices:?} lies outside the truncated basis")]
    OutsideBasis { indices: [i32; 3] },

    #[error("quadrature did not converge: error estimate {estimate:.3e} exceeds tolerance {tolerance:.3e}")]
    Quadrature { estimate: f64, tolerance: f64 },

    #[error("cutoff insufficient: no kappa <= p_max = {p_max} meets budget {budget:.3e} (best bound {best:.3e})")]
    CutoffInsufficient { p_max: f64, budget: f64, best: f64 },

    #[error("weight distribution `{0}` does not have support in (0, inf)")]
    UnsupportedDistribution(String),

    #[error("linear solve failed (relative residual {residual:.3e})")]
    Solver { residual: f64 },

    #[error("eigensolver failed: {0}")]
    Eigen(String),

    #[error("decay bound violated: weighted maximum {measured:.6e} exceeds bound {bound:.6e}")]
    BoundViolated { measured: f64, bound: f64 },
}
