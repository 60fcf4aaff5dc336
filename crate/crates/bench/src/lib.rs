//! Inverted-pendulum benchmark for online RBF network trainers: target
//! function, trajectories, experiment runs, CSV output and comparison tables.

pub mod cli;
pub mod compare;
pub mod config;
pub mod experiment;
pub mod output;
pub mod plant;
pub mod trajectory;
