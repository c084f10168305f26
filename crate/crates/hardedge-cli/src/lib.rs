//! Experiment harness for the hard-edge bidiagonal laboratory.
//!
//! The library half of the `hardedge` binary: configuration parsing,
//! deterministic replica scheduling, two-sample statistics, experiment
//! drivers (universality, mean/variance/CLT checks), report serialization,
//! and the deterministic selftest battery.  Everything here is pure library
//! code so that integration tests can drive the same entry points the CLI
//! dispatches to.

pub mod config;
pub mod experiments;
pub mod report;
pub mod runner;
pub mod selftest;
pub mod stats;
