//! Configuration and subcommands of the `selfsim` executable.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod commands;
pub mod config;

pub use commands::{cmd_analyze, cmd_pde, cmd_profile, cmd_properties, Outcome};
pub use config::RunConfig;
