//! Pipeline plumbing behind the `havok` binary: data loading, fitting,
//! report files, parameter sweeps and the named reproduction scenarios.

pub mod error;
pub mod input;
pub mod output;
pub mod pipeline;
pub mod scenarios;
pub mod sweep;

pub use error::{CliError, Result};
