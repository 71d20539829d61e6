//! Diagnostics for distribution shift between a labeled source sample and a
//! target sample: how much a classifier's error changes across the shift,
//! which two-sample statistics track that change, and a certified sandwich
//! bound on the change computed from finite hypothesis lists.
//!
//! The crate is organized bottom-up:
//!
//! - [`dataset`]: labeled datasets, CSV interchange, seeded splits, and
//!   synthetic shift scenarios.
//! - [`classifier`]: multinomial logistic and one-hidden-layer ReLU
//!   classifiers with a seeded SGD trainer.
//! - [`twosample`]: Friedman-Rafsky, energy, MMD, and score-space (BBSD)
//!   statistics over raw feature samples.
//! - [`discrepancy`]: the error gap, the hypothesis-class discrepancy between
//!   samples relabeled by a classifier, adaptability, and the certified upper
//!   bound combining the two.
//! - [`regression`]: OLS meta-analysis of sweep records with interaction and
//!   curvature terms, contrasts, and residual diagnostics.
//! - [`harness`]: manifest-driven experiment sweeps, correlation summaries,
//!   and deterministic report emission.

pub mod classifier;
pub mod dataset;
pub mod discrepancy;
pub mod error;
pub mod harness;
pub mod regression;
pub mod rng;
pub mod twosample;

pub use error::{Error, Result};
