//! Configuration, persistence and commands behind the `dampwave` binary.

pub mod commands;
pub mod config;
pub mod io;

pub use commands::{
    cmd_alpha, cmd_check, cmd_search, cmd_simulate, cmd_sweep, cmd_verify, exit, Options,
};
pub use config::{Resolved, RunConfig};
