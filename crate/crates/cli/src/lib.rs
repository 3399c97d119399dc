//! Library surface of the `auvctl` command line tool: config parsing and
//! the run/compare/sweep commands, kept callable for integration tests.

pub mod commands;
pub mod config;
