//! Country-level integrated assessment simulator for the national social
//! cost of carbon.
//!
//! The model couples a per-country growth economy, multi-gas emissions, a
//! global impulse-response climate, and sectoral or aggregate impact
//! functions. National social costs of carbon come from pulse experiments
//! discounted with each country's own consumption path, deterministically or
//! under seeded Monte Carlo uncertainty.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod climate;
pub mod config;
pub mod economy;
pub mod emissions;
pub mod engine;
pub mod impacts;
pub mod parallel;
pub mod report;
pub mod scenario;
pub mod stats;
