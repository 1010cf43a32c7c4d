use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed correspondence or ground-truth file.
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    /// Invalid key=value configuration or option combination.
    #[error("{0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Solver(#[from] mlpnp::Error),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    /// Process exit status; see `docs/formats.md`.
    pub fn exit_code(&self) -> u8 {
        use mlpnp::Error as E;
        match self {
            CliError::Io { .. } | CliError::Csv(_) => 3,
            CliError::Parse { .. } => 4,
            CliError::Config(_) => 5,
            CliError::Solver(e) => match e {
                E::TooFewPoints { .. } => 10,
                E::RankDeficient { .. } => 11,
                E::DegenerateCovariance { .. } => 12,
                E::IllConditioned { .. } => 13,
                E::SingularNormalMatrix => 14,
                E::ZeroRedundancy { .. } => 15,
                E::ZeroEstimate => 16,
                E::BehindCamera { .. } => 17,
                E::InvalidInput(_) => 18,
            },
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Io { .. } | CliError::Csv(_) => "io",
            CliError::Parse { .. } => "parse",
            CliError::Config(_) => "config",
            CliError::Solver(e) => solver_error_kind(e),
        }
    }

    /// Single stderr line: `error kind=<kind> code=<code>: <message>`.
    pub fn error_line(&self) -> String {
        format!("error kind={} code={}: {}", self.kind(), self.exit_code(), self)
    }
}

pub fn solver_error_kind(e: &mlpnp::Error) -> &'static str {
    use mlpnp::Error as E;
    match e {
        E::TooFewPoints { .. } => "too_few_points",
        E::RankDeficient { .. } => "rank_deficient",
        E::DegenerateCovariance { .. } => "degenerate_covariance",
        E::IllConditioned { .. } => "ill_conditioned",
        E::SingularNormalMatrix => "singular_normal_matrix",
        E::ZeroRedundancy { .. } => "zero_redundancy",
        E::ZeroEstimate => "zero_estimate",
        E::BehindCamera { .. } => "behind_camera",
        E::InvalidInput(_) => "invalid_input",
    }
}
