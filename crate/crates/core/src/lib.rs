//! Monte Carlo testbed for binary classification under monotone adversarial
//! corruption: adversaries that may only add points labeled by the target
//! hypothesis. The library provides the hypothesis-class constructions, the
//! corruption pipeline, ERM and subsample-voting learners, the one-inclusion
//! graph predictor, and seeded experiments over all of them.

pub mod adversary;
pub mod combin;
pub mod config;
pub mod domain;
pub mod error;
pub mod experiments;
pub mod learners;
pub mod oig;
pub mod pattern;
pub mod rng;
pub mod transcript;
