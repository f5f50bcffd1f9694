//! Std-side tooling around [`har_core`]: CSV record/replay, TOML
//! configuration, report writers, model snapshots, the WebSocket stream
//! service with its client, and the `har` command line.

pub mod bench;
pub mod cli;
pub mod client;
pub mod config;
pub mod csvio;
pub mod report;
pub mod service;
pub mod snapshot;
pub mod wire;

pub use har_core;
