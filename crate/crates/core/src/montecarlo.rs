//! Null and alternative sampling, Monte Carlo critical values and p-values,
//! power studies and bootstrap selection of the tuning parameter.
//!
//! Every replicate draws from its own ChaCha8 stream derived from
//! `(seed, purpose, replicate index)`, so results do not depend on the
//! number of worker threads.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::statistic::{PreparedSample, Sample};

/// Default tuning grid.
pub const DEFAULT_GRID: [f64; 4] = [0.5, 1.0, 2.0, 5.0];

/// Fewest null replicates accepted for critical values and p-values.
pub const MIN_REPLICATES: usize = 1000;

/// Fewest bootstrap resamples accepted by [`select_tuning`].
pub const MIN_BOOTSTRAP: usize = 100;

// Purpose tags for top-level substreams.
const NULL_STREAM: u64 = 0x6e75_6c6c;
const ALT_STREAM: u64 = 0x616c_7473;
const BOOT_STREAM: u64 = 0x626f_6f74;
const FINAL_NULL_STREAM: u64 = 0x6669_6e6c;
const FINAL_ALT_STREAM: u64 = 0x6669_6e61;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A reproducible random stream identified by `(seed, stream)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self { seed, stream: 0 }
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    /// A ChaCha8 generator positioned at the start of this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }

    /// Child stream `index`; distinct parents give unrelated children.
    pub fn substream(&self, index: u64) -> Self {
        Self {
            seed: splitmix64(splitmix64(self.seed) ^ self.stream.wrapping_mul(0xd6e8_feb8_6659_fd93)),
            stream: index,
        }
    }
}

fn open01<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(Open01)
}

fn exp1<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    -open01(rng).ln()
}

/// Alternatives of the power study, parameterized as follows:
///
/// | label | law |
/// |---|---|
/// | `W(k)` | cdf `1 - exp(-x^k)` |
/// | `Γ(k)` | gamma, shape `k`, rate 1 |
/// | `HN` | `|N(0,1)|` |
/// | `U` | uniform on `(0,1)` |
/// | `CH(k)` | cdf `1 - exp(2(1 - exp(x^k)))` |
/// | `LF(k)` | cdf `1 - exp(-x - k x²/2)` |
/// | `EW(k)` | cdf `(1 - exp(-x))^k` |
/// | `EMNW(β,θ)` | density `(1+θ)e^{-x} - θβe^{-βx}` |
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params")]
pub enum PowerAlternative {
    Weibull(f64),
    Gamma(f64),
    HalfNormal,
    Uniform,
    Chen(f64),
    LinearFailure(f64),
    ExpWeibull(f64),
    Emnw { beta: f64, theta: f64 },
}

impl PowerAlternative {
    /// Columns of the power tables.
    pub const TABLE: [PowerAlternative; 10] = [
        PowerAlternative::Weibull(1.4),
        PowerAlternative::Gamma(2.0),
        PowerAlternative::HalfNormal,
        PowerAlternative::Uniform,
        PowerAlternative::Chen(0.5),
        PowerAlternative::Chen(1.0),
        PowerAlternative::Chen(1.5),
        PowerAlternative::LinearFailure(2.0),
        PowerAlternative::LinearFailure(4.0),
        PowerAlternative::ExpWeibull(1.5),
    ];

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Domain(format!("{name} parameter must be positive, got {v}")))
            }
        };
        match *self {
            PowerAlternative::Weibull(k) => positive("W", k),
            PowerAlternative::Gamma(k) => positive("Γ", k),
            PowerAlternative::Chen(k) => positive("CH", k),
            PowerAlternative::LinearFailure(k) => positive("LF", k),
            PowerAlternative::ExpWeibull(k) => positive("EW", k),
            PowerAlternative::HalfNormal | PowerAlternative::Uniform => Ok(()),
            PowerAlternative::Emnw { beta, theta } => {
                if !(beta > 1.0 && beta.is_finite()) {
                    return Err(Error::Domain(format!("EMNW needs beta > 1, got {beta}")));
                }
                if !(theta >= 0.0 && theta <= 1.0 / (beta - 1.0)) {
                    return Err(Error::Domain(format!(
                        "EMNW theta must lie in [0, {}], got {theta}",
                        1.0 / (beta - 1.0)
                    )));
                }
                Ok(())
            }
        }
    }

    /// One draw; parameters must already be validated.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let x = self.draw_raw(rng);
            if x > 0.0 && x.is_finite() {
                return x;
            }
        }
    }

    fn draw_raw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            PowerAlternative::Weibull(k) => exp1(rng).powf(1.0 / k),
            PowerAlternative::Gamma(k) => Gamma::new(k, 1.0).expect("validated").sample(rng),
            PowerAlternative::HalfNormal => {
                let z: f64 = StandardNormal.sample(rng);
                z.abs()
            }
            PowerAlternative::Uniform => open01(rng),
            PowerAlternative::Chen(k) => (0.5 * exp1(rng)).ln_1p().powf(1.0 / k),
            PowerAlternative::LinearFailure(k) => {
                let e = exp1(rng);
                2.0 * e / (1.0 + (1.0 + 2.0 * k * e).sqrt())
            }
            PowerAlternative::ExpWeibull(k) => -(-open01(rng).powf(1.0 / k)).ln_1p(),
            PowerAlternative::Emnw { beta, theta } => loop {
                // envelope (1+θ)e^{-x}
                let x = exp1(rng);
                let accept = 1.0 - theta * beta * (-(beta - 1.0) * x).exp() / (1.0 + theta);
                if open01(rng) <= accept {
                    break x;
                }
            },
        }
    }

    /// Exact cdf, used for goodness-of-fit checks of the samplers.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match *self {
            PowerAlternative::Weibull(k) => -(-x.powf(k)).exp_m1(),
            PowerAlternative::Gamma(k) => statrs::function::gamma::gamma_lr(k, x),
            PowerAlternative::HalfNormal => statrs::function::erf::erf(x / std::f64::consts::SQRT_2),
            PowerAlternative::Uniform => x.min(1.0),
            PowerAlternative::Chen(k) => -(2.0 * -x.powf(k).exp_m1()).exp_m1(),
            PowerAlternative::LinearFailure(k) => -(-x - 0.5 * k * x * x).exp_m1(),
            PowerAlternative::ExpWeibull(k) => (-(-x).exp_m1()).powf(k),
            PowerAlternative::Emnw { beta, theta } => {
                1.0 - (1.0 + theta) * (-x).exp() + theta * (-beta * x).exp()
            }
        }
    }
}

impl fmt::Display for PowerAlternative {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PowerAlternative::Weibull(k) => write!(f, "W({k})"),
            PowerAlternative::Gamma(k) => write!(f, "G({k})"),
            PowerAlternative::HalfNormal => write!(f, "HN"),
            PowerAlternative::Uniform => write!(f, "U"),
            PowerAlternative::Chen(k) => write!(f, "CH({k})"),
            PowerAlternative::LinearFailure(k) => write!(f, "LF({k})"),
            PowerAlternative::ExpWeibull(k) => write!(f, "EW({k})"),
            PowerAlternative::Emnw { beta, theta } => write!(f, "EMNW({beta},{theta})"),
        }
    }
}

impl FromStr for PowerAlternative {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("unknown alternative {s:?}"));
        let t = s.trim();
        let (label, args) = match t.find('(') {
            Some(open) => {
                let inner = t[open + 1..].strip_suffix(')').ok_or_else(bad)?;
                let args = inner
                    .split(',')
                    .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
                    .collect::<Result<Vec<f64>>>()?;
                (&t[..open], args)
            }
            None => (t, Vec::new()),
        };
        let alt = match (label.to_ascii_uppercase().as_str(), args.as_slice()) {
            ("W", [k]) => PowerAlternative::Weibull(*k),
            ("G" | "GAMMA" | "Γ", [k]) => PowerAlternative::Gamma(*k),
            ("HN", []) => PowerAlternative::HalfNormal,
            ("U", []) => PowerAlternative::Uniform,
            ("CH", [k]) => PowerAlternative::Chen(*k),
            ("LF", [k]) => PowerAlternative::LinearFailure(*k),
            ("EW", [k]) => PowerAlternative::ExpWeibull(*k),
            ("EMNW", [beta, theta]) => PowerAlternative::Emnw {
                beta: *beta,
                theta: *theta,
            },
            _ if label == "Γ" && args.len() == 1 => PowerAlternative::Gamma(args[0]),
            _ => return Err(bad()),
        };
        alt.validate()?;
        Ok(alt)
    }
}

fn draw_sample<F: FnMut() -> f64>(n: usize, mut draw: F) -> Result<Sample> {
    if n == 0 {
        return Err(Error::InvalidConfig("sample size must be at least 1".into()));
    }
    Sample::new((0..n).map(|_| draw()).collect())
}

/// `n` i.i.d. unit exponential draws by inversion.
pub fn sample_null(n: usize, stream: &RngStream) -> Result<Sample> {
    let mut rng = stream.rng();
    draw_sample(n, || exp1(&mut rng))
}

pub fn sample_alternative(alt: &PowerAlternative, n: usize, stream: &RngStream) -> Result<Sample> {
    alt.validate()?;
    let mut rng = stream.rng();
    draw_sample(n, || alt.draw(&mut rng))
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidConfig("tuning grid is empty".into()));
    }
    match grid.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
        Some(a) => Err(Error::InvalidConfig(format!("tuning values must be positive, got {a}"))),
        None => Ok(()),
    }
}

/// Simulated null statistics at one `(n, a)`, sorted ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullDistribution {
    pub n: usize,
    pub a: f64,
    pub seed: u64,
    statistics: Vec<f64>,
}

impl NullDistribution {
    pub fn from_statistics(n: usize, a: f64, seed: u64, mut statistics: Vec<f64>) -> Self {
        statistics.sort_by(f64::total_cmp);
        Self {
            n,
            a,
            seed,
            statistics,
        }
    }

    pub fn replicates(&self) -> usize {
        self.statistics.len()
    }

    pub fn statistics(&self) -> &[f64] {
        &self.statistics
    }

    /// The `⌈N(1-α)⌉`-th order statistic.
    pub fn critical_value(&self, alpha: f64) -> Result<f64> {
        check_alpha(alpha)?;
        let len = self.statistics.len();
        if len == 0 {
            return Err(Error::InvalidConfig("empty null distribution".into()));
        }
        // the small offset keeps N(1-α) = integer from rounding up
        let k = ((len as f64) * (1.0 - alpha) - 1e-9).ceil().clamp(1.0, len as f64) as usize;
        Ok(self.statistics[k - 1])
    }

    /// `(#{T ≥ m_obs} + 1) / (N + 1)`.
    pub fn p_value(&self, m_obs: f64) -> f64 {
        let below = self.statistics.partition_point(|&t| t < m_obs);
        let count = self.statistics.len() - below;
        (count as f64 + 1.0) / (self.statistics.len() as f64 + 1.0)
    }
}

fn simulate_null_from(
    n: usize,
    grid: &[f64],
    replicates: usize,
    seed: u64,
    purpose: u64,
) -> Result<Vec<NullDistribution>> {
    check_grid(grid)?;
    if n < 3 {
        return Err(Error::InvalidConfig(format!(
            "null simulation needs n >= 3, got {n}"
        )));
    }
    if replicates < MIN_REPLICATES {
        return Err(Error::InvalidConfig(format!(
            "need at least {MIN_REPLICATES} null replicates, got {replicates}"
        )));
    }
    let base = RngStream::new(seed).substream(purpose);
    let rows = (0..replicates)
        .into_par_iter()
        .map(|i| {
            let x = sample_null(n, &base.substream(i as u64))?;
            let prepared = PreparedSample::from_raw(&x);
            grid.iter()
                .map(|&a| Ok(prepared.statistic(a)?.value))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    Ok(grid
        .iter()
        .enumerate()
        .map(|(j, &a)| NullDistribution::from_statistics(n, a, seed, rows.iter().map(|r| r[j]).collect()))
        .collect())
}

/// Null distributions at every grid point, sharing the simulated samples.
/// Replicate `i` always uses the same substream of `seed`, so the result at
/// a given `a` does not depend on the rest of the grid.
pub fn simulate_null(n: usize, grid: &[f64], replicates: usize, seed: u64) -> Result<Vec<NullDistribution>> {
    simulate_null_from(n, grid, replicates, seed, NULL_STREAM)
}

pub fn critical_value(n: usize, a: f64, alpha: f64, replicates: usize, seed: u64) -> Result<f64> {
    check_alpha(alpha)?;
    simulate_null(n, &[a], replicates, seed)?[0].critical_value(alpha)
}

pub fn p_value(m_obs: f64, n: usize, a: f64, replicates: usize, seed: u64) -> Result<f64> {
    Ok(simulate_null(n, &[a], replicates, seed)?[0].p_value(m_obs))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct TableKey {
    n: usize,
    a: u64,
    alpha: u64,
    replicates: usize,
    seed: u64,
}

impl TableKey {
    fn new(n: usize, a: f64, alpha: f64, replicates: usize, seed: u64) -> Self {
        Self {
            n,
            a: a.to_bits(),
            alpha: alpha.to_bits(),
            replicates,
            seed,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct TableRow {
    n: usize,
    a: f64,
    alpha: f64,
    #[serde(rename = "N")]
    replicates: usize,
    seed: u64,
    critical_value: f64,
}

/// Critical values keyed by `(n, a, α, N, seed)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CriticalValueTable {
    entries: BTreeMap<TableKey, f64>,
}

impl CriticalValueTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, n: usize, a: f64, alpha: f64, replicates: usize, seed: u64) -> Option<f64> {
        self.entries.get(&TableKey::new(n, a, alpha, replicates, seed)).copied()
    }

    pub fn insert(&mut self, n: usize, a: f64, alpha: f64, replicates: usize, seed: u64, value: f64) {
        self.entries.insert(TableKey::new(n, a, alpha, replicates, seed), value);
    }

    /// Critical values for every grid point, simulating only the missing ones.
    pub fn ensure(
        &mut self,
        n: usize,
        grid: &[f64],
        alpha: f64,
        replicates: usize,
        seed: u64,
    ) -> Result<Vec<f64>> {
        check_alpha(alpha)?;
        let missing: Vec<f64> = grid
            .iter()
            .copied()
            .filter(|&a| self.get(n, a, alpha, replicates, seed).is_none())
            .collect();
        if !missing.is_empty() {
            for dist in simulate_null(n, &missing, replicates, seed)? {
                let c = dist.critical_value(alpha)?;
                self.insert(n, dist.a, alpha, replicates, seed, c);
            }
        }
        Ok(grid
            .iter()
            .map(|&a| self.get(n, a, alpha, replicates, seed).expect("just filled"))
            .collect())
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        for (k, v) in &self.entries {
            writer.serialize(TableRow {
                n: k.n,
                a: f64::from_bits(k.a),
                alpha: f64::from_bits(k.alpha),
                replicates: k.replicates,
                seed: k.seed,
                critical_value: *v,
            })?;
        }
        writer.flush().map_err(|source| Error::Io {
            path: "<csv output>".into(),
            source,
        })
    }

    pub fn read_csv<R: std::io::Read>(input: R) -> Result<Self> {
        let mut table = Self::new();
        for row in csv::Reader::from_reader(input).deserialize() {
            let row: TableRow = row?;
            table.insert(row.n, row.a, row.alpha, row.replicates, row.seed, row.critical_value);
        }
        Ok(table)
    }

    /// Reads a table file; a missing file gives an empty table.
    pub fn load(path: &Path) -> Result<Self> {
        match std::fs::File::open(path) {
            Ok(file) => Self::read_csv(file),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Self::new()),
            Err(source) => Err(Error::Io {
                path: path.to_path_buf(),
                source,
            }),
        }
    }

    /// Merges with whatever is on disk and replaces the file atomically.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut merged = Self::load(path)?;
        merged.entries.extend(self.entries.iter().map(|(k, v)| (*k, *v)));
        let mut bytes = Vec::new();
        merged.write_csv(&mut bytes)?;
        crate::spectral::write_atomically(path, &bytes)
    }
}

/// Result of testing one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub statistic: f64,
    pub a: f64,
    pub n: usize,
    pub alpha: f64,
    pub critical_value: f64,
    pub p_value: f64,
    pub reject: bool,
    #[serde(rename = "N")]
    pub replicates: usize,
    pub seed: u64,
}

/// Tests `x` at tuning `a` against `replicates` simulated null samples.
pub fn run_test(x: &Sample, a: f64, alpha: f64, replicates: usize, seed: u64) -> Result<TestOutcome> {
    check_alpha(alpha)?;
    let statistic = PreparedSample::from_raw(x).statistic(a)?.value;
    let null = &simulate_null(x.len(), &[a], replicates, seed)?[0];
    let critical_value = null.critical_value(alpha)?;
    Ok(TestOutcome {
        statistic,
        a,
        n: x.len(),
        alpha,
        critical_value,
        p_value: null.p_value(statistic),
        reject: statistic >= critical_value,
        replicates,
        seed,
    })
}

/// Selects `a` by bootstrap, then tests `x` at the selected value. One null
/// simulation serves both the grid-stage critical values and the final test.
pub fn run_test_auto(
    x: &Sample,
    grid: &[f64],
    alpha: f64,
    replicates: usize,
    bootstrap: usize,
    seed: u64,
) -> Result<(TuningSelection, TestOutcome)> {
    check_alpha(alpha)?;
    let nulls = simulate_null(x.len(), grid, replicates, seed)?;
    let critical_values = nulls
        .iter()
        .map(|d| d.critical_value(alpha))
        .collect::<Result<Vec<f64>>>()?;
    let stream = RngStream::new(seed).substream(BOOT_STREAM);
    let selection = select_tuning_with(x, grid, &critical_values, bootstrap, &stream)?;
    let k = grid.iter().position(|&a| a == selection.chosen).expect("chosen from grid");
    let statistic = PreparedSample::from_raw(x).statistic(selection.chosen)?.value;
    let outcome = TestOutcome {
        statistic,
        a: selection.chosen,
        n: x.len(),
        alpha,
        critical_value: critical_values[k],
        p_value: nulls[k].p_value(statistic),
        reject: statistic >= critical_values[k],
        replicates,
        seed,
    };
    Ok((selection, outcome))
}

/// Rejection rates at each grid point for fixed-`a` tests.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerReport {
    pub alternative: String,
    pub n: usize,
    pub alpha: f64,
    #[serde(rename = "N")]
    pub replicates: usize,
    pub seed: u64,
    pub grid: Vec<f64>,
    pub critical_values: Vec<f64>,
    pub power: Vec<f64>,
}

fn alternative_statistics(
    alt: &PowerAlternative,
    n: usize,
    grid: &[f64],
    replicates: usize,
    base: RngStream,
) -> Result<Vec<Vec<f64>>> {
    (0..replicates)
        .into_par_iter()
        .map(|i| {
            let x = sample_alternative(alt, n, &base.substream(i as u64))?;
            let prepared = PreparedSample::from_raw(&x);
            grid.iter()
                .map(|&a| Ok(prepared.statistic(a)?.value))
                .collect::<Result<Vec<f64>>>()
        })
        .collect()
}

/// Power of the fixed-`a` tests at every grid point. Critical values come
/// from `table` (simulated with the same `replicates` and `seed` if absent);
/// the alternative samples use an independent stream.
pub fn power_grid(
    alt: &PowerAlternative,
    n: usize,
    grid: &[f64],
    alpha: f64,
    replicates: usize,
    seed: u64,
    table: &mut CriticalValueTable,
) -> Result<PowerReport> {
    alt.validate()?;
    let critical_values = table.ensure(n, grid, alpha, replicates, seed)?;
    let base = RngStream::new(seed).substream(ALT_STREAM);
    let stats = alternative_statistics(alt, n, grid, replicates, base)?;
    let power = critical_values
        .iter()
        .enumerate()
        .map(|(j, c)| stats.iter().filter(|r| r[j] >= *c).count() as f64 / replicates as f64)
        .collect();
    Ok(PowerReport {
        alternative: alt.to_string(),
        n,
        alpha,
        replicates,
        seed,
        grid: grid.to_vec(),
        critical_values,
        power,
    })
}

pub fn power(alt: &PowerAlternative, n: usize, a: f64, alpha: f64, replicates: usize, seed: u64) -> Result<f64> {
    let report = power_grid(alt, n, &[a], alpha, replicates, seed, &mut CriticalValueTable::new())?;
    Ok(report.power[0])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TuningSelection {
    pub chosen: f64,
    pub grid: Vec<f64>,
    /// Bootstrap rejection rate at each grid point.
    pub bootstrap_power: Vec<f64>,
}

/// Bootstrap choice of `a`: resample `x` `bootstrap` times, estimate the
/// rejection rate at each grid point against the null critical values
/// `critical_values` (aligned with `grid`), return the argmax. Ties go to
/// the smaller `a`.
pub fn select_tuning_with(
    x: &Sample,
    grid: &[f64],
    critical_values: &[f64],
    bootstrap: usize,
    stream: &RngStream,
) -> Result<TuningSelection> {
    check_grid(grid)?;
    if critical_values.len() != grid.len() {
        return Err(Error::InvalidConfig("critical values do not match the grid".into()));
    }
    if bootstrap < MIN_BOOTSTRAP {
        return Err(Error::InvalidConfig(format!(
            "need at least {MIN_BOOTSTRAP} bootstrap resamples, got {bootstrap}"
        )));
    }
    let values = x.values();
    if values.iter().all(|v| v.to_bits() == values[0].to_bits()) {
        return Err(Error::Degenerate(
            "all observations are equal; bootstrap statistics collapse".into(),
        ));
    }
    let n = values.len();
    let hits = (0..bootstrap)
        .into_par_iter()
        .map(|j| {
            let mut rng = stream.substream(j as u64).rng();
            let resample: Vec<f64> = (0..n).map(|_| values[rng.random_range(0..n)]).collect();
            let prepared = PreparedSample::from_raw(&Sample::new(resample)?);
            grid.iter()
                .zip(critical_values)
                .map(|(&a, &c)| Ok(prepared.statistic(a)?.value >= c))
                .collect::<Result<Vec<bool>>>()
        })
        .collect::<Result<Vec<Vec<bool>>>>()?;
    let bootstrap_power: Vec<f64> = (0..grid.len())
        .map(|i| hits.iter().filter(|h| h[i]).count() as f64 / bootstrap as f64)
        .collect();
    let mut best = 0;
    for i in 1..grid.len() {
        let better = bootstrap_power[i] > bootstrap_power[best]
            || (bootstrap_power[i] == bootstrap_power[best] && grid[i] < grid[best]);
        if better {
            best = i;
        }
    }
    Ok(TuningSelection {
        chosen: grid[best],
        grid: grid.to_vec(),
        bootstrap_power,
    })
}

/// [`select_tuning_with`] using null critical values from `table`
/// (simulated with `replicates` and `seed` when absent).
#[allow(clippy::too_many_arguments)]
pub fn select_tuning(
    x: &Sample,
    grid: &[f64],
    bootstrap: usize,
    alpha: f64,
    replicates: usize,
    seed: u64,
    table: &mut CriticalValueTable,
) -> Result<TuningSelection> {
    check_grid(grid)?;
    let critical_values = table.ensure(x.len(), grid, alpha, replicates, seed)?;
    let stream = RngStream::new(seed).substream(BOOT_STREAM);
    select_tuning_with(x, grid, &critical_values, bootstrap, &stream)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataDrivenConfig {
    pub n: usize,
    pub grid: Vec<f64>,
    pub alpha: f64,
    /// Outer replicates `N` (also the size of the grid-stage null simulation).
    pub replicates: usize,
    pub bootstrap: usize,
    /// Null replicates `N₁` for the critical value at the selected `a`.
    pub final_replicates: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DataDrivenReport {
    pub alternative: String,
    pub n: usize,
    pub alpha: f64,
    #[serde(rename = "N")]
    pub replicates: usize,
    #[serde(rename = "B")]
    pub bootstrap: usize,
    pub seed: u64,
    pub grid: Vec<f64>,
    /// Fixed-`a` rejection rates on the same alternative samples.
    pub fixed_power: Vec<f64>,
    /// Share of replicates selecting each grid point.
    pub selection_frequency: Vec<f64>,
    /// Rejection rate at each grid point over the new alternative samples.
    pub final_power: Vec<f64>,
    /// Mean over replicates of the new-sample rejection rate at `â`.
    pub power: f64,
}

/// Power of the test with bootstrap-selected `a`. Each replicate draws an
/// alternative sample and selects `â` by bootstrap against grid-stage
/// critical values. Its power `p_i` is the rejection rate at `â` over
/// `final_replicates` new alternative samples, against the critical value of
/// a null simulation of the same size; the reported power averages `p_i`.
///
/// The new-sample rates are simulated once per grid point and shared by all
/// replicates selecting that point.
pub fn power_datadriven(alt: &PowerAlternative, cfg: &DataDrivenConfig) -> Result<DataDrivenReport> {
    alt.validate()?;
    check_alpha(cfg.alpha)?;
    check_grid(&cfg.grid)?;
    let grid = &cfg.grid;
    let stage: Vec<f64> = simulate_null(cfg.n, grid, cfg.replicates, cfg.seed)?
        .iter()
        .map(|d| d.critical_value(cfg.alpha))
        .collect::<Result<_>>()?;
    let fresh: Vec<f64> = simulate_null_from(cfg.n, grid, cfg.final_replicates, cfg.seed, FINAL_NULL_STREAM)?
        .iter()
        .map(|d| d.critical_value(cfg.alpha))
        .collect::<Result<_>>()?;

    let root = RngStream::new(cfg.seed);
    let alt_base = root.substream(ALT_STREAM);
    let boot_base = root.substream(BOOT_STREAM);
    let outcomes = (0..cfg.replicates)
        .into_par_iter()
        .map(|i| {
            let x = sample_alternative(alt, cfg.n, &alt_base.substream(i as u64))?;
            let prepared = PreparedSample::from_raw(&x);
            let stats = grid
                .iter()
                .map(|&a| Ok(prepared.statistic(a)?.value))
                .collect::<Result<Vec<f64>>>()?;
            let selection = select_tuning_with(&x, grid, &stage, cfg.bootstrap, &boot_base.substream(i as u64))?;
            let k = grid.iter().position(|&a| a == selection.chosen).expect("chosen from grid");
            Ok((stats, k))
        })
        .collect::<Result<Vec<(Vec<f64>, usize)>>>()?;

    let final_stats = alternative_statistics(
        alt,
        cfg.n,
        grid,
        cfg.final_replicates,
        root.substream(FINAL_ALT_STREAM),
    )?;
    let final_power: Vec<f64> = (0..grid.len())
        .map(|j| final_stats.iter().filter(|s| s[j] >= fresh[j]).count() as f64 / cfg.final_replicates as f64)
        .collect();

    let total = cfg.replicates as f64;
    let fixed_power = (0..grid.len())
        .map(|j| outcomes.iter().filter(|(s, _)| s[j] >= stage[j]).count() as f64 / total)
        .collect();
    let selection_frequency = (0..grid.len())
        .map(|j| outcomes.iter().filter(|(_, k)| *k == j).count() as f64 / total)
        .collect();
    let power = outcomes.iter().map(|(_, k)| final_power[*k]).sum::<f64>() / total;
    Ok(DataDrivenReport {
        alternative: alt.to_string(),
        n: cfg.n,
        alpha: cfg.alpha,
        replicates: cfg.replicates,
        bootstrap: cfg.bootstrap,
        seed: cfg.seed,
        grid: grid.clone(),
        fixed_power,
        selection_frequency,
        final_power,
        power,
    })
}
