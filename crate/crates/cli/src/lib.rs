//! Experiment harness around [`hotspot_core`]: declarative JSON configs,
//! dataset ingestion, a deterministic batch runner, and summary
//! comparison.
//!
//! The binary exposes two subcommands. `run` executes every
//! (seed × strategy) cell of a config and writes per-mission logs plus
//! aggregate CSVs; `compare` merges the summaries of several runs into
//! a side-by-side table. All artifacts are pure functions of
//! (config, seeds): missions run under a null clock, so re-running a
//! config reproduces every output byte for byte.

#![deny(unsafe_code)]

pub mod compare;
pub mod config;
pub mod dataset;
pub mod runner;
