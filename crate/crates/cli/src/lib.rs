//! Command-line front end for the `chiral-potts` library: single runs,
//! coupling sweeps, the verification suite and machine-readable output.

pub mod config;
pub mod error;
pub mod output;
pub mod run;

pub use config::RunConfig;
pub use error::CliError;
pub use run::execute;
