//! Library side of the `gcca` command-line harness: experiment configs,
//! Matrix Market I/O, dataset manifests, sweep execution, and the command
//! implementations. The binary in `main.rs` is a thin argument parser over
//! these modules, which keeps every code path callable from tests.

pub mod commands;
pub mod config;
pub mod manifest;
pub mod mm;
pub mod sweep;
