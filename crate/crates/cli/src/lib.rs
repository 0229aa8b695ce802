//! Library side of the `umlskg` binary: configuration, subcommand bodies,
//! answer formatting and the HTTP service.

pub mod commands;
pub mod config;
pub mod error;
pub mod format;
pub mod service;
