//! Command-line front end for `dyncc`: text formats for graphs and operation
//! streams, and the `run`, `gen` and `bench` subcommands.

pub mod commands;
pub mod format;
