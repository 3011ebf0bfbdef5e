use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("angular frequency must be positive and finite (got {0})")]
    NonPositiveFrequency(f64),
    #[error("Re eps_zz does not change sign on [{lo:.4e}, {hi:.4e}] rad/s")]
    NoCrossing { lo: f64, hi: f64 },
    #[error("no lattice point falls inside the shape")]
    EmptyGrid,
    #[error("voxel count {count} exceeds the cap of {cap}")]
    TooLarge { count: usize, cap: usize },
    #[error("validity metric {metric:.3} exceeds 1.0; refine the grid spacing")]
    GridTooCoarse { metric: f64 },
    #[error("unknown material '{0}'")]
    UnknownMaterial(String),
    #[error("field point coincides with a source point")]
    SingularPoint,
    #[error("eps + 2I is numerically singular (|det| = {0:.3e})")]
    SingularDenominator(f64),
    #[error("solver did not converge: residual {residual:.3e} after {iterations} iterations")]
    NoConvergence { residual: f64, iterations: usize },
    #[error("solution has {solution} voxels but grid has {grid}")]
    Mismatch { solution: usize, grid: usize },
    #[error("incident amplitude must be non-zero")]
    ZeroAmplitude,
    #[error("operation requires a plane-wave solution")]
    NotPlaneWave,
    #[error("operation requires a point-dipole source")]
    NotPointSource,
    #[error("point source lies inside or on a voxel cell")]
    SourceInsideGrid,
    #[error("angular quadrature under-resolved: refining changed the power by {0:.3}%")]
    QuadratureUnderresolved(f64),
    #[error("non-finite value in Mie recurrences at order {0}")]
    NonFinite(usize),
    #[error("Mie series failed the tail criterion within {0} orders")]
    SlowConvergence(usize),
    #[error("training loss became non-finite at epoch {0}")]
    DivergedLoss(usize),
    #[error("scene is not a single isotropic sphere")]
    NotIsotropicSphere,
    #[error("config error at {field}: {message}")]
    Config { field: String, message: String },
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
