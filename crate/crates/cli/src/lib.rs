//! Experiment orchestration behind the `mibo` binary: dataset simulation,
//! training runs, run comparison and loss-curve export.

pub mod commands;
pub mod config;
pub mod error;
pub mod pipeline;
