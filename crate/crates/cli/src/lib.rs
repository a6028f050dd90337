//! Configuration, orchestration and report emission for the sheetlab
//! experiments. The binary in `main.rs` is a thin wrapper over [`run::run`].

pub mod config;
pub mod report;
pub mod run;
