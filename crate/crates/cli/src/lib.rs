//! Declarative runs of the `subspec` solvers: configuration, validation and
//! artifact output.

pub mod config;
pub mod run;

pub use config::{validate, RunConfig, Task};
pub use run::{run, Outcome, RunError};
