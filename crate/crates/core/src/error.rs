use thiserror::Error;

/// Errors raised anywhere in the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid mismatch between operands")]
    GridMismatch,
    #[error("metric specification: {0}")]
    SpecParse(String),
    #[error("metric is not positive definite at node {node} (smallest eigenvalue {min_eigenvalue:e})")]
    PositivityViolation { node: usize, min_eigenvalue: f64 },
    #[error("wave vector component {component} exceeds band limit {limit} for N = {size}")]
    BandLimitExceeded { component: i64, limit: usize, size: usize },
    #[error("wedge product of degree {total} exceeds real dimension {max}")]
    DegreeOverflow { total: usize, max: usize },
    #[error("expected a top-degree form, got bidegree ({p},{q})")]
    NotTopForm { p: usize, q: usize },
    #[error("top form density has imaginary part {imag:e} (scale {scale:e})")]
    NonRealTopForm { imag: f64, scale: f64 },
    #[error("no convergence after {0} iterations")]
    NoConvergence(usize),
    #[error("kernel not one-dimensional: spectral gap {gap:e} below threshold {threshold:e}")]
    KernelDegenerate { gap: f64, threshold: f64 },
    #[error("Gauduchon factor is not positive (minimum {0:e})")]
    NotPositive(f64),
    #[error("factor is not in the kernel: residual {residual:e} above {limit:e}")]
    NotInKernel { residual: f64, limit: f64 },
    #[error("invalid inputs: {0}")]
    InvalidInputs(String),
    #[error("bound violated: sup rho = {sup_rho} exceeds C_G = exp({log_c_g})")]
    BoundViolated { sup_rho: f64, log_c_g: f64 },
    #[error("excluded branch region bound {bound:e} exceeds 10% of estimate {estimate:e}")]
    BranchDominates { bound: f64, estimate: f64 },
    #[error("invalid region: {0}")]
    RegionInvalid(String),
    #[error("bad cutoff radii: {0}")]
    BadRadii(String),
    #[error("quadrature failed to reach tolerance (estimated error {0:e})")]
    QuadratureFail(f64),
    #[error("field format: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
