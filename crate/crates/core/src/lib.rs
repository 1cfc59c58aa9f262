//! Surrogate-data hypothesis tests for regime-switching geometric Lévy models.
//!
//! The pipeline runs in five stages:
//!
//! 1. [`timeseries`]: load equispaced prices and form simple returns.
//! 2. [`jumpsep`]: calibrate the jump-diffusion split (β̂, Λ̂, V) and strip jumps.
//! 3. [`volatility`]: moving-window drift/volatility and squeeze/expansion durations.
//! 4. [`diststats`]: the four-moment duration statistic and folded-rank α-values.
//! 5. [`harness`]: Monte Carlo surrogates over a model family from [`regimes`],
//!    simulated by [`simulate`].
//!
//! The [`cli`] module wires these into the `regime-surrogate` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod diststats;
pub mod error;
pub mod harness;
pub mod jumpsep;
pub mod regimes;
pub mod simulate;
pub mod special;
pub mod timeseries;
pub mod volatility;

pub use error::{Error, Result};
