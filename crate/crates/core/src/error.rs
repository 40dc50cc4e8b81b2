use thiserror::Error;

/// Errors surfaced by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("impossible outcome {outcome}: predictive mass {mass:e}")]
    ImpossibleOutcome { outcome: usize, mass: f64 },

    #[error("invalid base measure: {0}")]
    InvalidBaseMeasure(String),

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("calibration ambiguous: {0}")]
    CalibrationAmbiguous(String),

    #[error("not a diffusive family: {0}")]
    NotDiffusive(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("step size too large: {0}")]
    StepSize(String),

    #[error("invalid apparatus: {0}")]
    InvalidApparatus(String),

    #[error("interaction is not non-demolition: off-block norm {0:e}")]
    NotQnd(f64),

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("positivity lost at t = {time}: minimum eigenvalue {min_eigenvalue:e}")]
    PositivityLoss { time: f64, min_eigenvalue: f64 },

    #[error("no continuum limit: {0}")]
    NoContinuumLimit(String),

    #[error("wrong limit: {0}")]
    WrongLimit(String),

    #[error("impossible jump in channel {channel}: intensity {intensity:e}")]
    ImpossibleJump { channel: usize, intensity: f64 },

    #[error("{}", format_config_issues(.0))]
    Config(Vec<ConfigIssue>),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serialize(String),
}

/// One problem found while reading a configuration, located by a dotted
/// field path (or `line:col` for syntax errors).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIssue {
    pub path: String,
    pub message: String,
}

impl ConfigIssue {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

fn format_config_issues(issues: &[ConfigIssue]) -> String {
    let mut out = String::from("configuration error");
    for issue in issues {
        out.push_str(&format!("\n  {}: {}", issue.path, issue.message));
    }
    out
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
