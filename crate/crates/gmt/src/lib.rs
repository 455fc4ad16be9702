//! File formats, run configuration and the batch runner behind the
//! `gmt-adjugate` command.

pub mod config;
pub mod formats;
pub mod runner;

pub use config::{CheckId, Overrides, Plan, RunConfig};
pub use runner::{run_plan, Outcome};
