//! Fixed-budget best-arm identification for two-armed Gaussian bandits.
//!
//! The main strategy draws arms with estimated Neyman allocation
//! `sigma_1 / (sigma_1 + sigma_2)` and recommends by comparing augmented
//! inverse probability weighting (AIPW) estimates of the two means. The
//! crate also carries the comparison strategies (IPW and sample-average
//! recommendation, the known-variance oracle, uniform alternation), the
//! closed-form error exponents, and a deterministic parallel Monte Carlo
//! harness that writes CSV tables.

pub mod cli;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod model;
pub mod strategies;
pub mod theory;

pub use error::{Error, Result};
pub use model::{
    best_arm, gap, truncate, ArmId, BanditInstance, ExperimentConfig, Observation, PerArm,
    TruncationConstants,
};
pub use strategies::{Strategy, StrategyKind, StrategyState};
