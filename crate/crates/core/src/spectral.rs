//! Leading eigenvalue `δ₁` of the integral operator
//! `q ↦ ∫ h̃₂(·, y, a) q(y) dF(y)` under the unit exponential law.
//!
//! The operator is discretized on the grid `x_i = B·i/m`, `i = 0..=m`, as
//!
//! ```text
//! m_ij = h̃₂(x_i, x_j, a) · √w_i · √w_j / (1 - e^{-B}),
//! w_i  = e^{-x_i} - e^{-x_{i+1}}
//! ```
//!
//! where `w_i` is the exponential probability of cell `i`. Only the lower
//! triangle is stored. The dominant eigenvalue is found by power iteration
//! from a fixed start vector, so results are reproducible.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::{OnceLock, RwLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::ProjectionKernel;

pub const DEFAULT_M: usize = 4500;
pub const DEFAULT_TRUNCATION: f64 = 10.0;
pub const DEFAULT_TOLERANCE: f64 = 1e-10;

/// Fixed number of row blocks in the mat-vec reduction, independent of the
/// thread count.
const MATVEC_BLOCKS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralConfig {
    pub a: f64,
    /// Grid resolution; the matrix has side `m + 1`.
    pub m: usize,
    /// Truncation point `B` of the half-line.
    pub truncation: f64,
    /// Residual tolerance `‖Mv - δv‖` for a unit `v`.
    pub tol: f64,
    pub max_iterations: usize,
    /// Upper bound on stored matrix entries.
    pub max_entries: usize,
}

impl SpectralConfig {
    pub fn new(a: f64) -> Self {
        Self {
            a,
            m: DEFAULT_M,
            truncation: DEFAULT_TRUNCATION,
            tol: DEFAULT_TOLERANCE,
            max_iterations: 10_000,
            max_entries: 60_000_000,
        }
    }

    pub fn with_grid(mut self, m: usize, truncation: f64) -> Self {
        self.m = m;
        self.truncation = truncation;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.m < 2 {
            return Err(Error::Domain(format!("grid resolution m must be >= 2, got {}", self.m)));
        }
        if !(self.truncation > 0.0 && self.truncation.is_finite()) {
            return Err(Error::Domain(format!("truncation B must be positive, got {}", self.truncation)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Domain("tolerance must be positive".into()));
        }
        let side = self.m + 1;
        let entries = side * (side + 1) / 2;
        if entries > self.max_entries {
            return Err(Error::Resource(format!(
                "{entries} matrix entries exceed the budget of {}",
                self.max_entries
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralResult {
    pub delta1: f64,
    pub iterations: usize,
    pub residual: f64,
}

/// Dense symmetric matrix, lower triangle packed row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    side: usize,
    packed: Vec<f64>,
}

#[inline]
fn row_start(i: usize) -> usize {
    i * (i + 1) / 2
}

impl SymmetricMatrix {
    /// Builds from full rows; the input must be square and symmetric.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let side = rows.len();
        if side == 0 || rows.iter().any(|r| r.len() != side) {
            return Err(Error::Domain("matrix must be square and non-empty".into()));
        }
        let mut packed = Vec::with_capacity(row_start(side));
        for (i, row) in rows.iter().enumerate() {
            for (j, &value) in row.iter().enumerate().take(i + 1) {
                if value != rows[j][i] {
                    return Err(Error::Domain(format!("matrix not symmetric at ({i}, {j})")));
                }
                packed.push(value);
            }
        }
        Ok(Self { side, packed })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        self.packed[row_start(r) + c]
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.packed[row_start(i)..row_start(i + 1)]
    }

    /// `y = M v`, reduced over a fixed partition of rows.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let n = self.side;
        assert_eq!(v.len(), n, "dimension mismatch");
        let bounds = self.block_bounds();
        let partials: Vec<Vec<f64>> = bounds
            .par_windows(2)
            .map(|w| {
                let mut y = vec![0.0; n];
                for i in w[0]..w[1] {
                    let row = self.row(i);
                    let vi = v[i];
                    let mut dot = row[i] * vi;
                    for (j, (&mij, yj)) in row[..i].iter().zip(y[..i].iter_mut()).enumerate() {
                        dot += mij * v[j];
                        *yj += mij * vi;
                    }
                    y[i] += dot;
                }
                y
            })
            .collect();
        let mut y = vec![0.0; n];
        for part in &partials {
            for (acc, p) in y.iter_mut().zip(part) {
                *acc += p;
            }
        }
        y
    }

    /// Row boundaries splitting the packed entries into roughly equal blocks.
    fn block_bounds(&self) -> Vec<usize> {
        let n = self.side;
        let blocks = MATVEC_BLOCKS.min(n);
        let total = self.packed.len();
        let mut bounds = vec![0];
        let mut target = 1;
        for i in 0..n {
            if row_start(i + 1) * blocks >= target * total && target < blocks {
                bounds.push(i + 1);
                target += 1;
            }
        }
        if *bounds.last().expect("non-empty") != n {
            bounds.push(n);
        }
        bounds
    }
}

/// Discretized operator matrix of side `m + 1`.
pub fn build_operator_matrix(cfg: &SpectralConfig) -> Result<SymmetricMatrix> {
    cfg.validate()?;
    let kernel = ProjectionKernel::new(cfg.a)?;
    let side = cfg.m + 1;
    let (b, m) = (cfg.truncation, cfg.m as f64);
    let node = |i: usize| b * i as f64 / m;
    let points: Vec<_> = (0..side).map(|i| kernel.point(node(i))).collect();
    let root_mass: Vec<f64> = (0..side)
        .map(|i| ((-node(i)).exp() - (-node(i + 1)).exp()).sqrt())
        .collect();
    let scale = 1.0 / (1.0 - (-b).exp());

    let mut packed = vec![0.0; row_start(side)];
    let mut rows: Vec<&mut [f64]> = Vec::with_capacity(side);
    let mut rest = packed.as_mut_slice();
    for i in 0..side {
        let (head, tail) = rest.split_at_mut(i + 1);
        rows.push(head);
        rest = tail;
    }
    rows.into_par_iter().enumerate().for_each(|(i, row)| {
        for (j, entry) in row.iter_mut().enumerate() {
            let h = kernel.eval_points(&points[i], &points[j]);
            *entry = h * (root_mass[i] * root_mass[j]) * scale;
        }
    });
    Ok(SymmetricMatrix { side, packed })
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

fn power_iterate(
    matrix: &SymmetricMatrix,
    mut v: Vec<f64>,
    tol: f64,
    max_iterations: usize,
) -> Result<SpectralResult> {
    normalize(&mut v);
    let mut residual = f64::INFINITY;
    for iteration in 1..=max_iterations {
        let mut w = matrix.mul_vec(&v);
        let lambda: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
        residual = w
            .iter()
            .zip(&v)
            .map(|(wi, vi)| (wi - lambda * vi).powi(2))
            .sum::<f64>()
            .sqrt();
        if residual <= tol {
            return Ok(SpectralResult {
                delta1: lambda,
                iterations: iteration,
                residual,
            });
        }
        if normalize(&mut w) == 0.0 {
            return Ok(SpectralResult {
                delta1: 0.0,
                iterations: iteration,
                residual: 0.0,
            });
        }
        v = w;
    }
    Err(Error::NotConverged {
        iterations: max_iterations,
        residual,
    })
}

/// Dominant eigenvalue of a symmetric matrix by power iteration, required
/// to be positive.
///
/// The primary run starts from the all-ones vector. A second run from a
/// fixed non-constant vector guards against a start that is orthogonal to
/// the dominant eigenvector and detects a tie in modulus between `+δ` and
/// `-δ`, which is reported as [`Error::Indefinite`].
pub fn largest_eigenvalue(matrix: &SymmetricMatrix, tol: f64) -> Result<SpectralResult> {
    largest_eigenvalue_with(matrix, tol, 10_000)
}

pub fn largest_eigenvalue_with(
    matrix: &SymmetricMatrix,
    tol: f64,
    max_iterations: usize,
) -> Result<SpectralResult> {
    if !(tol > 0.0) {
        return Err(Error::Domain("tolerance must be positive".into()));
    }
    let n = matrix.side();
    let primary = power_iterate(matrix, vec![1.0; n], tol, max_iterations);
    let probe_start: Vec<f64> = (0..n).map(|i| ((i + 1) as f64).cos()).collect();
    let probe = power_iterate(matrix, probe_start, tol, max_iterations);

    let chosen = match (primary, probe) {
        (Err(e), Err(_)) => return Err(e),
        (Ok(_), Err(_)) | (Err(_), Ok(_)) => return Err(Error::Indefinite),
        (Ok(p), Ok(q)) => {
            let scale = p.delta1.abs().max(q.delta1.abs());
            if (p.delta1 - q.delta1).abs() <= 1e-6 * scale + 10.0 * tol {
                p
            } else if (p.delta1.abs() - q.delta1.abs()).abs() <= 1e-6 * scale + 10.0 * tol {
                return Err(Error::Indefinite);
            } else if p.delta1.abs() > q.delta1.abs() {
                p
            } else {
                q
            }
        }
    };
    if chosen.delta1 <= 0.0 {
        return Err(Error::NotPositive(chosen.delta1));
    }
    Ok(chosen)
}

type CacheKey = (u64, usize, u64);

fn cache() -> &'static RwLock<HashMap<CacheKey, SpectralResult>> {
    static CACHE: OnceLock<RwLock<HashMap<CacheKey, SpectralResult>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

fn key(cfg: &SpectralConfig) -> CacheKey {
    (cfg.a.to_bits(), cfg.m, cfg.truncation.to_bits())
}

/// `δ₁` for an explicit configuration, memoized on `(a, m, B)`.
pub fn delta1_with(cfg: &SpectralConfig) -> Result<SpectralResult> {
    if let Some(hit) = cache().read().expect("cache poisoned").get(&key(cfg)) {
        return Ok(*hit);
    }
    let matrix = build_operator_matrix(cfg)?;
    let result = largest_eigenvalue_with(&matrix, cfg.tol, cfg.max_iterations)?;
    cache().write().expect("cache poisoned").insert(key(cfg), result);
    Ok(result)
}

/// `δ₁(a)` at the default discretization (`m = 4500`, `B = 10`).
pub fn delta1(a: f64) -> Result<SpectralResult> {
    delta1_with(&SpectralConfig::new(a))
}

/// Writes every cached `(a, m, B) → δ₁` as CSV, replacing the file atomically.
pub fn save_cache(path: &Path) -> Result<()> {
    let mut rows: Vec<(CacheKey, SpectralResult)> = cache()
        .read()
        .expect("cache poisoned")
        .iter()
        .map(|(k, v)| (*k, *v))
        .collect();
    rows.sort_by(|x, y| {
        f64::from_bits(x.0 .0)
            .total_cmp(&f64::from_bits(y.0 .0))
            .then(x.0 .1.cmp(&y.0 .1))
            .then(f64::from_bits(x.0 .2).total_cmp(&f64::from_bits(y.0 .2)))
    });
    let mut out = String::from("a,m,B,delta1,iterations,residual\n");
    for ((a, m, b), r) in rows {
        out.push_str(&format!(
            "{:.14e},{},{:.14e},{:.14e},{},{:.14e}\n",
            f64::from_bits(a),
            m,
            f64::from_bits(b),
            r.delta1,
            r.iterations,
            r.residual
        ));
    }
    write_atomically(path, out.as_bytes())
}

/// Loads cached values written by [`save_cache`]. Missing files are ignored.
pub fn load_cache(path: &Path) -> Result<usize> {
    if !path.exists() {
        return Ok(0);
    }
    let mut reader = csv::Reader::from_path(path)?;
    let mut loaded = 0;
    let mut guard = cache().write().expect("cache poisoned");
    for record in reader.deserialize() {
        let (a, m, b, delta1, iterations, residual): (f64, usize, f64, f64, usize, f64) = record?;
        guard.insert(
            (a.to_bits(), m, b.to_bits()),
            SpectralResult {
                delta1,
                iterations,
                residual,
            },
        );
        loaded += 1;
    }
    Ok(loaded)
}

pub(crate) fn write_atomically(path: &Path, bytes: &[u8]) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err)?;
    }
    let tmp = path.with_extension(format!("tmp.{}", std::process::id()));
    let mut file = fs::File::create(&tmp).map_err(io_err)?;
    file.write_all(bytes).map_err(io_err)?;
    file.sync_all().map_err(io_err)?;
    fs::rename(&tmp, path).map_err(io_err)
}
