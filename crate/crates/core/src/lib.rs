//! Weighted L² goodness-of-fit test for exponentiality built on the
//! Puri–Rubin characterization: `X` is exponential iff `X` and `|X₁ - X₂|`
//! share a distribution.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// reference constants keep their published digits
#![allow(clippy::excessive_precision)]

pub mod cli;
pub mod data;
pub mod efficiency;
pub mod error;
pub mod montecarlo;
pub mod quadrature;
pub mod special;
pub mod spectral;
pub mod statistic;
pub mod summation;

pub use error::{Error, Result};
pub use statistic::{
    kernel_h, scale_sample, statistic_fast, statistic_from_raw, statistic_naive, PreparedSample,
    Sample, ScaledSample, StatisticValue,
};
