//! File formats, parallel execution and the command-line front end for
//! `balayage-core`.

pub mod cli;
pub mod exec;
pub mod io;

pub use exec::RayonExecutor;
