//! The weighted L² statistic `M_{n,a}` between the V-empirical Laplace
//! transforms of `Y` and `|Y₁ - Y₂|`, where `Y = X / X̄`.
//!
//! Expanding the square and integrating against `e^{-at}` gives
//! `M = S₁ - 2S₂ + S₃` with
//!
//! ```text
//! S₁ = n⁻² Σ_{i,k}   1 / (y_i + y_k + a)
//! S₂ = n⁻³ Σ_i Σ_{j,k} 1 / (y_i + |y_j - y_k| + a)
//! S₃ = n⁻⁴ Σ_{i,j} Σ_{k,l} 1 / (|y_i - y_j| + |y_k - y_l| + a)
//! ```
//!
//! The `n²` pairwise differences are materialized once and compressed by
//! exact bit-pattern equality, so `S₃` costs `O(u²)` in the number `u` of
//! distinct differences. Ties (e.g. in bootstrap resamples) shrink `u`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::summation::{pairwise_sum, pairwise_sum_by, weighted_reciprocal_sum, CompensatedSum};

/// Largest sample accepted by [`statistic_naive`].
pub const NAIVE_MAX_N: usize = 60;

/// Rows of the `S₃` double sum are spread over the rayon pool above this
/// many distinct differences.
const PARALLEL_ROWS: usize = 4096;

/// Raw observations, all finite and strictly positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Sample(Vec<f64>);

impl Sample {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySample);
        }
        for (index, &value) in values.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFinite { index });
            }
            if value <= 0.0 {
                return Err(Error::NonPositive { index, value });
            }
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn mean(&self) -> f64 {
        pairwise_sum(&self.0) / self.0.len() as f64
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl TryFrom<Vec<f64>> for Sample {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Sample::new(values)
    }
}

impl From<Sample> for Vec<f64> {
    fn from(s: Sample) -> Self {
        s.0
    }
}

/// Observations divided by their arithmetic mean.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledSample(Vec<f64>);

impl ScaledSample {
    /// Accepts already-scaled values: nonnegative with mean 1 (to 1e-12).
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySample);
        }
        if let Some(index) = values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Domain(format!(
                "scaled observation {index} must be finite and nonnegative"
            )));
        }
        let mean = pairwise_sum(&values) / values.len() as f64;
        if (mean - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!("scaled sample has mean {mean}, expected 1")));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatisticValue {
    pub value: f64,
    pub n: usize,
    pub a: f64,
}

/// `y_i = x_i / x̄`.
pub fn scale_sample(x: &Sample) -> ScaledSample {
    let mean = x.mean();
    ScaledSample(x.values().iter().map(|v| v / mean).collect())
}

fn check_a(a: f64) -> Result<()> {
    if a > 0.0 && a.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("tuning parameter must be positive, got {a}")))
    }
}

/// `∫₀^∞ g(x₁,x₂,t) g(x₃,x₄,t) e^{-at} dt` with `g(u,v,t) = e^{-tu} - e^{-t|u-v|}`.
#[inline]
pub fn kernel_h(x1: f64, x2: f64, x3: f64, x4: f64, a: f64) -> f64 {
    let d12 = (x1 - x2).abs();
    let d34 = (x3 - x4).abs();
    1.0 / (x1 + x3 + a) - 1.0 / (x3 + d12 + a) - 1.0 / (x1 + d34 + a) + 1.0 / (d12 + d34 + a)
}

/// Direct average of the kernel over all `n⁴` index tuples. Oracle only.
pub fn statistic_naive(y: &ScaledSample, a: f64) -> Result<StatisticValue> {
    check_a(a)?;
    let v = y.values();
    let n = v.len();
    if n > NAIVE_MAX_N {
        return Err(Error::Resource(format!(
            "naive statistic limited to n <= {NAIVE_MAX_N}, got {n}"
        )));
    }
    let mut acc = CompensatedSum::default();
    for &x1 in v {
        for &x2 in v {
            for &x3 in v {
                for &x4 in v {
                    acc.add(kernel_h(x1, x2, x3, x4, a));
                }
            }
        }
    }
    let nf = n as f64;
    Ok(StatisticValue {
        value: acc.value() / (nf * nf * nf * nf),
        n,
        a,
    })
}

/// A scaled sample with its value and difference multisets compressed,
/// ready to evaluate the statistic at any number of tuning parameters.
#[derive(Debug, Clone)]
pub struct PreparedSample {
    n: usize,
    values: Vec<f64>,
    value_weights: Vec<f64>,
    diffs: Vec<f64>,
    diff_weights: Vec<f64>,
}

fn compress(mut items: Vec<(f64, f64)>) -> (Vec<f64>, Vec<f64>) {
    items.sort_unstable_by(|p, q| p.0.total_cmp(&q.0));
    let mut keys: Vec<f64> = Vec::with_capacity(items.len());
    let mut weights: Vec<f64> = Vec::with_capacity(items.len());
    for (key, w) in items {
        match keys.last() {
            Some(last) if last.to_bits() == key.to_bits() => {
                *weights.last_mut().expect("paired") += w;
            }
            _ => {
                keys.push(key);
                weights.push(w);
            }
        }
    }
    (keys, weights)
}

impl PreparedSample {
    pub fn new(y: &ScaledSample) -> Self {
        let n = y.len();
        let (values, value_weights) = compress(y.values().iter().map(|&v| (v, 1.0)).collect());
        let k = values.len();
        let mut pairs = Vec::with_capacity(k * (k - 1) / 2 + 1);
        let zero_weight: f64 = value_weights.iter().map(|w| w * w).sum();
        pairs.push((0.0, zero_weight));
        for p in 0..k {
            for q in (p + 1)..k {
                pairs.push(((values[p] - values[q]).abs(), 2.0 * value_weights[p] * value_weights[q]));
            }
        }
        let (diffs, diff_weights) = compress(pairs);
        Self {
            n,
            values,
            value_weights,
            diffs,
            diff_weights,
        }
    }

    pub fn from_raw(x: &Sample) -> Self {
        Self::new(&scale_sample(x))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of distinct pairwise differences (including zero).
    pub fn distinct_differences(&self) -> usize {
        self.diffs.len()
    }

    /// Number of distinct observations.
    pub fn distinct_values(&self) -> usize {
        self.values.len()
    }

    /// The three sums `(S₁, S₂, S₃)`.
    pub fn components(&self, a: f64) -> (f64, f64, f64) {
        let nf = self.n as f64;
        let (v, w) = (&self.values, &self.value_weights);
        let (d, c) = (&self.diffs, &self.diff_weights);

        let s1 = symmetric_double_sum(v, w, a, false) / (nf * nf);

        let s2 = pairwise_sum_by(v.len(), &|p| {
            let base = v[p] + a;
            w[p] * weighted_reciprocal_sum(base, d, c)
        }) / (nf * nf * nf);

        let s3 = symmetric_double_sum(d, c, a, d.len() > PARALLEL_ROWS) / (nf * nf * nf * nf);
        (s1, s2, s3)
    }

    pub fn statistic(&self, a: f64) -> Result<StatisticValue> {
        check_a(a)?;
        let (s1, s2, s3) = self.components(a);
        Ok(StatisticValue {
            value: s1 - 2.0 * s2 + s3,
            n: self.n,
            a,
        })
    }
}

/// `Σ_{p,q} w_p w_q / (z_p + z_q + a)` using symmetry of the summand.
fn symmetric_double_sum(z: &[f64], w: &[f64], a: f64, parallel: bool) -> f64 {
    let row = |p: usize| {
        let zp = z[p] + a;
        let tail = weighted_reciprocal_sum(zp, &z[p + 1..], &w[p + 1..]);
        w[p] * (w[p] / (zp + z[p]) + 2.0 * tail)
    };
    if parallel {
        let rows: Vec<f64> = (0..z.len()).into_par_iter().map(row).collect();
        pairwise_sum(&rows)
    } else {
        pairwise_sum_by(z.len(), &row)
    }
}

/// `M_{n,a}` from an already scaled sample.
pub fn statistic_fast(y: &ScaledSample, a: f64) -> Result<StatisticValue> {
    check_a(a)?;
    PreparedSample::new(y).statistic(a)
}

/// `M_{n,a}` from raw observations.
pub fn statistic_from_raw(x: &Sample, a: f64) -> Result<StatisticValue> {
    statistic_fast(&scale_sample(x), a)
}

/// `M_{n,a}` at several tuning parameters, sharing the difference table.
pub fn statistic_grid(x: &Sample, grid: &[f64]) -> Result<Vec<StatisticValue>> {
    let prepared = PreparedSample::from_raw(x);
    grid.iter().map(|&a| prepared.statistic(a)).collect()
}
