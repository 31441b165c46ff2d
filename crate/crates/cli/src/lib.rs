//! Command-line front end for `shapnet`: model files, analysis commands and
//! versioned JSON or tabular reports.

pub mod cli;
pub mod commands;
pub mod error;
pub mod model;
pub mod render;
pub mod report;

pub use cli::{run, Cli};
pub use error::CliError;
pub use model::{load, Model, ModelFile};
pub use report::{Payload, ReportEnvelope};
