//! Command implementations behind the `depth-regress` binary, kept in a library
//! so integration tests can drive them without spawning processes.

pub mod commands;
pub mod fixtures;
pub mod format;
