pub mod cost;
pub mod error;
pub mod grounding;
pub mod pddl;

pub use cost::Cost;
pub use error::{Error, Result};
pub mod baseline;
pub mod bench;
pub mod compile;
pub mod corpus;
pub mod oracle;
pub mod planner;
pub mod solve;
