use thiserror::Error;

use crate::pddl::PddlError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Pddl(#[from] PddlError),

    #[error("grounding: {0}")]
    Grounding(String),

    #[error("grounding produced more than {cap} ground actions")]
    GroundingCap { cap: usize },

    #[error("invalid task: {0}")]
    InvalidTask(String),

    #[error("action `{action}` is not applicable: {reason}")]
    Inapplicable { action: String, reason: String },

    #[error("unknown action `{0}`")]
    UnknownAction(String),

    #[error("vocabulary mismatch: {0}")]
    Vocabulary(String),

    #[error("unsupported model difference: {0}")]
    UnsupportedDifference(String),

    #[error("update `{0}` is not consistent with the robot model")]
    InconsistentUpdate(String),

    #[error("invalid augmented plan: {0}")]
    InvalidPlan(String),

    #[error("oracle resource cap exceeded: {0}")]
    OracleCap(String),

    #[error("perturbation: {0}")]
    Perturb(String),

    #[error("unknown {kind} `{name}` (available: {available})")]
    UnknownStrategy { kind: &'static str, name: String, available: String },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
