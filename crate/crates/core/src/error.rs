use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid curve: {0}")]
    InvalidCurve(String),
    #[error("degenerate curve: branch points {0:.3e} apart")]
    DegenerateCurve(f64),
    #[error("point ({x}, {y}) is not on the curve (residual {residual:.3e})")]
    OffCurve { x: String, y: String, residual: f64 },
    #[error("sheet ambiguity while continuing y near x = {0}")]
    SheetAmbiguity(String),
    #[error("branch cuts cross: {0}")]
    CutCrossing(String),
    #[error("quadrature did not converge (relative disagreement {0:.3e})")]
    NoConvergence(f64),
    #[error("ill-conditioned period data: {0}")]
    IllConditioned(String),
    #[error("theta truncation radius {required} exceeds the cap {cap}")]
    RadiusCap { required: u32, cap: u32 },
    #[error("point is too close to the sigma divisor (|theta|/scale = {0:.3e})")]
    NearDivisor(f64),
    #[error("gamma calibration is inconsistent across probes (spread {0:.3e})")]
    InconsistentGamma(f64),
    #[error("no odd characteristic vanishes on the embedded curve (best {0:.3e})")]
    NoVanishingCharacteristic(f64),
    #[error("integration path passes too close to a branch point at {0}")]
    PathNearBranch(String),
    #[error("degenerate point: {0}")]
    DegeneratePoint(String),
    #[error("point is within {0:.3e} of a lattice point")]
    NearLattice(f64),
    #[error("singular dP-I fit (determinant ratio {0:.3e})")]
    SingularFit(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
