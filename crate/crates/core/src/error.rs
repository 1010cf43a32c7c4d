use thiserror::Error;

/// Failures raised by the pose pipeline and its harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("need at least {required} correspondences, got {got}")]
    TooFewPoints { required: usize, got: usize },
    /// Collinear or coincident world points.
    #[error("world points span fewer than two dimensions (scatter rank {rank})")]
    RankDeficient { rank: usize },
    /// The reduced 2x2 observation covariance is numerically singular.
    #[error("observation covariance is degenerate (smallest eigenvalue {min_eigenvalue:e})")]
    DegenerateCovariance { min_eigenvalue: f64 },
    #[error("linear system is ill-conditioned (eigenvalue ratio {ratio:e})")]
    IllConditioned { ratio: f64 },
    #[error("Gauss-Newton normal matrix is singular")]
    SingularNormalMatrix,
    #[error("redundancy 2I-6 is not positive for I = {points}")]
    ZeroRedundancy { points: usize },
    #[error("estimated translation has zero norm")]
    ZeroEstimate,
    #[error("point has non-positive depth {depth} in the camera frame")]
    BehindCamera { depth: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
