//! Experiment runner behind the `spr-kinetics` command-line tool.

pub mod config;
pub mod experiment;
