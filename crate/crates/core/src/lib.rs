//! Wyckoff accumulation-phase tooling: synthetic trading-range (TR) and
//! secondary-test (ST) pattern generators, a from-scratch LSTM binary
//! classifier trained with Adam, ROC/AUC evaluation, and a swing-point
//! scanner for real OHLC price files.
//!
//! The crate is organized around five modules:
//!
//! - [`pattern_synth`] — labeled synthetic datasets and their CSV format
//! - [`wyckoff_rules`] — the TR validity predicate and swing extraction
//! - [`neural_core`] — LSTM cell, dense head, BCE loss, Adam, grad checking
//! - [`train_eval`] — training loop, splits, metrics, ROC/AUC, checkpoints
//! - [`cli`] — the subcommand implementations behind the `wyckoff` binary

pub mod cli;
pub mod neural_core;
pub mod pattern_synth;
pub mod train_eval;
pub mod wyckoff_rules;
