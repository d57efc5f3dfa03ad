//! Visibility fringes, configuration and end-to-end experiment runs.

mod config;
mod experiment;
mod output;
mod visibility;

pub use config::*;
pub use experiment::*;
pub use output::{format_sig, write_atomic};
pub use visibility::*;
