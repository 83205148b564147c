//! File formats, experiment drivers and report emission for the `mmbm`
//! command-line tool. The mathematics lives in `mmbm-core`.

pub mod error;
pub mod experiment;
pub mod io;
pub mod report;

pub use error::{CliError, CliResult};
