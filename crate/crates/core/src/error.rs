use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("server at stratum {stratum} is unsynchronized")]
    ServerUnsynchronized { stratum: u8 },

    #[error("stratum chain broken at hop {hop}: stratum {found} does not follow {previous}")]
    ChainBroken { hop: usize, previous: u8, found: u8 },

    #[error("calibration needs at least one sample")]
    EmptySampleSet,

    #[error("satellite geometry is singular ({satellites} satellites, rank deficient)")]
    SingularGeometry { satellites: usize },

    #[error("position solution did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("speed must be positive")]
    ZeroSpeed,

    #[error("coverages overlap: centers at {left_m} m and {right_m} m are closer than 2r = {min_gap_m} m")]
    OverlappingCoverage { left_m: f64, right_m: f64, min_gap_m: f64 },

    #[error("error statistics need at least one fix")]
    EmptyFixSet,

    #[error("deployment is infeasible: {0}")]
    InfeasibleDeployment(String),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
