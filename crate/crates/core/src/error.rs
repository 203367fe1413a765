use num_complex::Complex64 as c64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("eigenvalue {lambda} is not embedded in the continuum [{lo}, {hi}]")]
    NotEmbedded { lambda: f64, lo: f64, hi: f64 },

    #[error("coupling density is not integrable: {0}")]
    NonIntegrable(String),

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("model violates an invariant: {0}")]
    InvalidModel(String),

    #[error("singular linear solve at z = {0}")]
    SingularSolve(c64),

    #[error("eigendecomposition failed to converge")]
    EigenFailed,

    #[error("Golden Rule width is not positive (Gamma = {0:.3e}); the eigenvalue must decay at second order")]
    GammaNotPositive(f64),

    #[error("-Im F(E+i0) must be positive on the interval, found Im F = {im:.3e} at E = {energy}")]
    NotDissipative { energy: f64, im: f64 },

    #[error("eta extrapolation did not converge: {0}")]
    ExtrapolationFailed(String),

    #[error("quadrature did not converge: {0}")]
    QuadratureFailed(String),

    #[error("Taylor approximant fails -Im F_n > 0 on the disc of radius {radius}")]
    ApproximantNotDissipative { radius: f64 },

    #[error("resonance iteration left the disc |z - lambda| < {radius} at z = {z}")]
    LeftDisc { z: c64, radius: f64 },

    #[error("resonance lies in the upper half-plane (Im = {0:.3e})")]
    UpperHalfPlane(f64),

    #[error("resonance search did not converge after {0} iterations")]
    RootNotConverged(usize),

    #[error("need at least {need} points, got {got}")]
    TooFewPoints { need: usize, got: usize },

    #[error("time {t} lies beyond the recurrence horizon {horizon:.3} of the discretization")]
    BeyondRecurrence { t: f64, horizon: f64 },

    #[error("fit window contains fewer than two samples")]
    EmptyWindow,

    #[error("survival amplitude vanishes inside the fit window at t = {0}")]
    ZeroCrossing(f64),

    #[error("argument must be nonzero")]
    ZeroArgument,

    #[error("spectral subspace for [{lo}, {hi}] is empty")]
    EmptySpectralSubspace { lo: f64, hi: f64 },

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Coarse classification used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// A mathematical contract of the pipeline does not hold.
    Contract,
    /// Bad input or configuration.
    Config,
    /// An iterative or adaptive numerical method gave up.
    NonConvergence,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        use Error::*;
        match self {
            GammaNotPositive(_)
            | NotDissipative { .. }
            | ApproximantNotDissipative { .. }
            | UpperHalfPlane(_)
            | InvalidModel(_)
            | ZeroCrossing(_) => ErrorClass::Contract,
            SingularSolve(_)
            | EigenFailed
            | ExtrapolationFailed(_)
            | QuadratureFailed(_)
            | LeftDisc { .. }
            | RootNotConverged(_) => ErrorClass::NonConvergence,
            InvalidParameter(_)
            | NotEmbedded { .. }
            | NonIntegrable(_)
            | GridTooCoarse(_)
            | TooFewPoints { .. }
            | BeyondRecurrence { .. }
            | EmptyWindow
            | ZeroArgument
            | EmptySpectralSubspace { .. }
            | Parse(_)
            | Io(_)
            | Json(_) => ErrorClass::Config,
        }
    }
}
