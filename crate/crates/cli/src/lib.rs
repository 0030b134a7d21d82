//! Command-line front end for `sagnac-core`.
//!
//! Each subcommand turns a resolved [`config::RunConfig`] into an
//! [`output::Table`], which is written as CSV or JSON with the configuration
//! embedded. Exit codes: 0 ok, 2 configuration, 3 numerical or truncation
//! failure, 4 threshold failure (the table is still written).

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
