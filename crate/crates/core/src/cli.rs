//! Command-line front end.
//!
//! Results go to the supplied writer in JSON, CSV or plain text; warnings go
//! to stderr. When `EXPTEST_CACHE_DIR` is set, critical values and `δ₁`
//! values are read from and written back to CSV files in that directory.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::efficiency::{efficiency_curve, write_curves_csv, Alternative, SlopeCurve, SlopeSettings};
use crate::error::{Error, Result};
use crate::montecarlo::{
    power_datadriven, power_grid, run_test, run_test_auto, select_tuning, CriticalValueTable,
    DataDrivenConfig, DataDrivenReport, PowerAlternative, PowerReport, TestOutcome, TuningSelection,
    DEFAULT_GRID,
};
use crate::spectral::{self, SpectralConfig, DEFAULT_M, DEFAULT_TRUNCATION};
use crate::statistic::{PreparedSample, Sample};

pub const CACHE_ENV: &str = "EXPTEST_CACHE_DIR";
pub const DEFAULT_REPLICATES: usize = 10_000;
pub const FAST_REPLICATES: usize = 2_000;
pub const DEFAULT_BOOTSTRAP: usize = 1_000;
pub const DEFAULT_SEED: u64 = 1;

const CRITICAL_FILE: &str = "critical_values.csv";
const DELTA_FILE: &str = "delta1.csv";

/// Default tuning grid for efficiency curves.
pub const EFFICIENCY_GRID: [f64; 11] = [0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 4.0, 5.0, 7.0, 10.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

/// Tuning parameter: a positive number or `auto`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tuning {
    Fixed(f64),
    Auto,
}

fn parse_tuning(s: &str) -> std::result::Result<Tuning, String> {
    if s.eq_ignore_ascii_case("auto") {
        return Ok(Tuning::Auto);
    }
    match s.parse::<f64>() {
        Ok(a) if a > 0.0 && a.is_finite() => Ok(Tuning::Fixed(a)),
        _ => Err(format!("expected a positive number or 'auto', got {s:?}")),
    }
}

fn parse_alpha(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(a) if a > 0.0 && a < 1.0 => Ok(a),
        _ => Err(format!("alpha must lie in (0, 1), got {s:?}")),
    }
}

fn parse_positive(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(a) if a > 0.0 && a.is_finite() => Ok(a),
        _ => Err(format!("expected a positive number, got {s:?}")),
    }
}

#[derive(Debug, Parser)]
#[command(name = "exptest", version, about = "Weighted L2 test for exponentiality")]
pub struct Cli {
    /// Output format.
    #[arg(long, value_enum, global = true, default_value = "text")]
    pub format: Format,

    /// Desk-scale preset: 2000 Monte Carlo replicates unless --N is given.
    #[arg(long, global = true)]
    pub fast: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct SimArgs {
    /// Significance level.
    #[arg(long, default_value = "0.05", value_parser = parse_alpha)]
    pub alpha: f64,

    /// Monte Carlo replicates (default 10000, or 2000 with --fast).
    #[arg(long = "N")]
    pub replicates: Option<usize>,

    /// Random seed.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Test a sample for exponentiality.
    Test {
        /// Embedded dataset id (pyke1965, barlow1975) or path to a data file.
        #[arg(long)]
        data: String,
        /// Tuning parameter, or `auto` for bootstrap selection over --grid.
        #[arg(long, default_value = "1", value_parser = parse_tuning)]
        a: Tuning,
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_GRID, value_parser = parse_positive)]
        grid: Vec<f64>,
        /// Bootstrap resamples for `--a auto`.
        #[arg(long = "B", default_value_t = DEFAULT_BOOTSTRAP)]
        bootstrap: usize,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Simulate Monte Carlo critical values.
    CriticalValues {
        /// Sample sizes.
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_GRID, value_parser = parse_positive)]
        grid: Vec<f64>,
        /// Extra significance levels besides --alpha.
        #[arg(long, value_delimiter = ',', value_parser = parse_alpha)]
        levels: Vec<f64>,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Empirical power against the standard alternatives.
    Power {
        #[arg(long, default_value_t = 20)]
        n: usize,
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_GRID, value_parser = parse_positive)]
        grid: Vec<f64>,
        /// Alternatives, e.g. "W(1.4),G(2),U"; default: all ten table columns.
        #[arg(long, value_delimiter = ';')]
        alternatives: Vec<String>,
        /// Also run the bootstrap-selected test.
        #[arg(long)]
        datadriven: bool,
        #[arg(long = "B", default_value_t = DEFAULT_BOOTSTRAP)]
        bootstrap: usize,
        /// Null replicates for the critical value at the selected a (default: N).
        #[arg(long = "N1")]
        final_replicates: Option<usize>,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Local approximate Bahadur efficiency curves against the LRT.
    Efficiency {
        /// weibull, gamma, lfr, emnw(beta) or all.
        #[arg(long, default_value = "all")]
        family: String,
        #[arg(long, value_delimiter = ',', default_values_t = EFFICIENCY_GRID, value_parser = parse_positive)]
        grid: Vec<f64>,
        #[arg(long, default_value_t = DEFAULT_M)]
        m: usize,
        #[arg(long = "B", default_value_t = DEFAULT_TRUNCATION)]
        truncation: f64,
    },
    /// Largest eigenvalue of the limiting operator.
    Eigen {
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_GRID, value_parser = parse_positive)]
        grid: Vec<f64>,
        #[arg(long, default_value_t = DEFAULT_M)]
        m: usize,
        #[arg(long = "B", default_value_t = DEFAULT_TRUNCATION)]
        truncation: f64,
    },
    /// Bootstrap selection of the tuning parameter.
    SelectA {
        #[arg(long)]
        data: String,
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_GRID, value_parser = parse_positive)]
        grid: Vec<f64>,
        #[arg(long = "B", default_value_t = DEFAULT_BOOTSTRAP)]
        bootstrap: usize,
        #[command(flatten)]
        sim: SimArgs,
    },
}

impl SimArgs {
    fn replicates(&self, fast: bool) -> usize {
        self.replicates
            .unwrap_or(if fast { FAST_REPLICATES } else { DEFAULT_REPLICATES })
    }
}

fn cache_dir() -> Option<PathBuf> {
    std::env::var_os(CACHE_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
}

fn load_table() -> Result<CriticalValueTable> {
    match cache_dir() {
        Some(dir) => CriticalValueTable::load(&dir.join(CRITICAL_FILE)),
        None => Ok(CriticalValueTable::new()),
    }
}

fn store_table(table: &CriticalValueTable) -> Result<()> {
    match cache_dir() {
        Some(dir) if !table.is_empty() => table.save(&dir.join(CRITICAL_FILE)),
        _ => Ok(()),
    }
}

fn with_delta_cache<T>(body: impl FnOnce() -> Result<T>) -> Result<T> {
    let dir = cache_dir();
    if let Some(d) = &dir {
        spectral::load_cache(&d.join(DELTA_FILE))?;
    }
    let out = body()?;
    if let Some(d) = &dir {
        spectral::save_cache(&d.join(DELTA_FILE))?;
    }
    Ok(out)
}

fn io_error(source: std::io::Error) -> Error {
    Error::Io {
        path: "<output>".into(),
        source,
    }
}

fn emit_json<W: Write, T: Serialize>(out: &mut W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, value).map_err(|e| io_error(e.into()))?;
    writeln!(out).map_err(io_error)
}

/// Report of the `test` subcommand.
#[derive(Debug, Clone, Serialize)]
pub struct TestReport {
    pub data: String,
    pub n: usize,
    pub statistic: f64,
    pub a: f64,
    pub outcome: Option<TestOutcome>,
    pub selection: Option<TuningSelection>,
    pub warning: Option<String>,
}

#[allow(clippy::too_many_arguments)]
pub fn test_sample(
    data: &str,
    x: &Sample,
    tuning: Tuning,
    grid: &[f64],
    bootstrap: usize,
    alpha: f64,
    replicates: usize,
    seed: u64,
) -> Result<TestReport> {
    let n = x.len();
    if n < 3 {
        let a = match tuning {
            Tuning::Fixed(a) => a,
            Tuning::Auto => {
                return Err(Error::InvalidConfig(format!(
                    "automatic tuning needs n >= 3, got {n}"
                )))
            }
        };
        return Ok(TestReport {
            data: data.into(),
            n,
            statistic: PreparedSample::from_raw(x).statistic(a)?.value,
            a,
            outcome: None,
            selection: None,
            warning: Some(format!("inference refused: n = {n} < 3")),
        });
    }
    let (outcome, selection) = match tuning {
        Tuning::Fixed(a) => (run_test(x, a, alpha, replicates, seed)?, None),
        Tuning::Auto => {
            let (sel, out) = run_test_auto(x, grid, alpha, replicates, bootstrap, seed)?;
            (out, Some(sel))
        }
    };
    Ok(TestReport {
        data: data.into(),
        n,
        statistic: outcome.statistic,
        a: outcome.a,
        outcome: Some(outcome),
        selection,
        warning: None,
    })
}

fn render_test<W: Write>(out: &mut W, r: &TestReport, format: Format) -> Result<()> {
    match format {
        Format::Json => emit_json(out, r),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut *out);
            w.write_record(["data", "n", "a", "statistic", "critical_value", "p_value", "reject", "alpha", "N", "seed"])?;
            let opt = |f: fn(&TestOutcome) -> String| r.outcome.as_ref().map(f).unwrap_or_default();
            w.write_record([
                r.data.clone(),
                r.n.to_string(),
                r.a.to_string(),
                format!("{:e}", r.statistic),
                opt(|o| format!("{:e}", o.critical_value)),
                opt(|o| o.p_value.to_string()),
                opt(|o| o.reject.to_string()),
                opt(|o| o.alpha.to_string()),
                opt(|o| o.replicates.to_string()),
                opt(|o| o.seed.to_string()),
            ])?;
            w.flush().map_err(io_error)
        }
        Format::Text => {
            let mut s = format!("data: {}\nn: {}\na: {}\nstatistic: {:.6e}\n", r.data, r.n, r.a, r.statistic);
            if let Some(sel) = &r.selection {
                s += &format!("grid: {:?}\nbootstrap power: {:?}\n", sel.grid, sel.bootstrap_power);
            }
            if let Some(o) = &r.outcome {
                s += &format!(
                    "critical value: {:.6e}\np-value: {:.4}\ndecision: {}\nalpha: {}\nN: {}\nseed: {}\n",
                    o.critical_value,
                    o.p_value,
                    if o.reject { "reject exponentiality" } else { "fail to reject" },
                    o.alpha,
                    o.replicates,
                    o.seed
                );
            }
            if let Some(wn) = &r.warning {
                s += &format!("warning: {wn}\n");
            }
            out.write_all(s.as_bytes()).map_err(io_error)
        }
    }
}

#[derive(Debug, Serialize)]
struct CriticalRow {
    n: usize,
    a: f64,
    alpha: f64,
    #[serde(rename = "N")]
    replicates: usize,
    seed: u64,
    critical_value: f64,
}

#[derive(Debug, Serialize)]
struct EigenRow {
    a: f64,
    m: usize,
    #[serde(rename = "B")]
    truncation: f64,
    delta1: f64,
    iterations: usize,
    residual: f64,
}

fn emit_rows<W: Write, T: Serialize>(out: &mut W, rows: &[T], format: Format, text: impl Fn(&T) -> String) -> Result<()> {
    match format {
        Format::Json => emit_json(out, &rows),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut *out);
            for r in rows {
                w.serialize(r)?;
            }
            w.flush().map_err(io_error)
        }
        Format::Text => {
            for r in rows {
                writeln!(out, "{}", text(r)).map_err(io_error)?;
            }
            Ok(())
        }
    }
}

fn resolve_alternatives(names: &[String]) -> Result<Vec<PowerAlternative>> {
    if names.is_empty() {
        return Ok(PowerAlternative::TABLE.to_vec());
    }
    names
        .iter()
        .flat_map(|s| s.split(';'))
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.parse())
        .collect()
}

fn render_power<W: Write>(out: &mut W, reports: &[PowerReport], format: Format) -> Result<()> {
    match format {
        Format::Json => emit_json(out, &reports),
        Format::Csv | Format::Text => {
            // rows are tests, columns are alternatives
            let mut w = csv::WriterBuilder::new()
                .delimiter(if format == Format::Csv { b',' } else { b'\t' })
                .from_writer(&mut *out);
            let mut header = vec!["test".to_string()];
            header.extend(reports.iter().map(|r| r.alternative.clone()));
            w.write_record(&header)?;
            if let Some(first) = reports.first() {
                for (j, a) in first.grid.iter().enumerate() {
                    let mut row = vec![format!("M_{{n,{a}}}")];
                    row.extend(reports.iter().map(|r| format!("{:.3}", r.power[j])));
                    w.write_record(&row)?;
                }
            }
            w.flush().map_err(io_error)
        }
    }
}

fn render_datadriven<W: Write>(out: &mut W, reports: &[DataDrivenReport], format: Format) -> Result<()> {
    match format {
        Format::Json => emit_json(out, &reports),
        Format::Csv | Format::Text => {
            let mut w = csv::WriterBuilder::new()
                .delimiter(if format == Format::Csv { b',' } else { b'\t' })
                .from_writer(&mut *out);
            if let Some(first) = reports.first() {
                let mut header = vec!["alternative".to_string()];
                for a in &first.grid {
                    header.push(format!("power_{a}"));
                    header.push(format!("selected_{a}"));
                }
                header.push("power_selected".into());
                w.write_record(&header)?;
            }
            for r in reports {
                let mut row = vec![r.alternative.clone()];
                for (p, f) in r.fixed_power.iter().zip(&r.selection_frequency) {
                    row.push(format!("{p:.3}"));
                    row.push(format!("{f:.3}"));
                }
                row.push(format!("{:.3}", r.power));
                w.write_record(&row)?;
            }
            w.flush().map_err(io_error)
        }
    }
}

fn render_curves<W: Write>(out: &mut W, curves: &[SlopeCurve], format: Format) -> Result<()> {
    match format {
        Format::Json => emit_json(out, &curves),
        Format::Csv => write_curves_csv(&mut *out, curves),
        Format::Text => {
            for c in curves {
                writeln!(out, "{}", c.alternative).map_err(io_error)?;
                for ((a, e), bad) in c.a_grid.iter().zip(&c.values).zip(&c.unstable) {
                    let flag = if *bad { "  (unstable extrapolation)" } else { "" };
                    writeln!(out, "  a = {a:<6} efficiency = {e:.4}{flag}").map_err(io_error)?;
                }
            }
            Ok(())
        }
    }
}

fn resolve_families(family: &str) -> Result<Vec<Alternative>> {
    if family.eq_ignore_ascii_case("all") {
        Ok(Alternative::STANDARD.to_vec())
    } else {
        family.split(';').map(|f| f.parse()).collect()
    }
}

/// Executes a parsed command line.
pub fn run<W: Write>(cli: Cli, out: &mut W) -> Result<()> {
    let format = cli.format;
    match cli.command {
        Command::Test {
            data,
            a,
            grid,
            bootstrap,
            sim,
        } => {
            let x = crate::data::load_sample(&data)?;
            let report = test_sample(&data, &x, a, &grid, bootstrap, sim.alpha, sim.replicates(cli.fast), sim.seed)?;
            if let Some(wn) = &report.warning {
                eprintln!("warning: {wn}");
            }
            render_test(out, &report, format)
        }
        Command::CriticalValues { n, grid, levels, sim } => {
            let replicates = sim.replicates(cli.fast);
            let mut alphas = vec![sim.alpha];
            alphas.extend(levels.iter().copied().filter(|l| *l != sim.alpha));
            let mut table = load_table()?;
            let mut rows = Vec::new();
            for &size in &n {
                for &alpha in &alphas {
                    let values = table.ensure(size, &grid, alpha, replicates, sim.seed)?;
                    for (&a, critical_value) in grid.iter().zip(values) {
                        rows.push(CriticalRow {
                            n: size,
                            a,
                            alpha,
                            replicates,
                            seed: sim.seed,
                            critical_value,
                        });
                    }
                }
            }
            store_table(&table)?;
            emit_rows(out, &rows, format, |r| {
                format!("n={} a={} alpha={} N={} seed={} critical value={:.6e}", r.n, r.a, r.alpha, r.replicates, r.seed, r.critical_value)
            })
        }
        Command::Power {
            n,
            grid,
            alternatives,
            datadriven,
            bootstrap,
            final_replicates,
            sim,
        } => {
            let alts = resolve_alternatives(&alternatives)?;
            let replicates = sim.replicates(cli.fast);
            if datadriven {
                let cfg = DataDrivenConfig {
                    n,
                    grid,
                    alpha: sim.alpha,
                    replicates,
                    bootstrap,
                    final_replicates: final_replicates.unwrap_or(replicates),
                    seed: sim.seed,
                };
                let reports = alts
                    .iter()
                    .map(|alt| power_datadriven(alt, &cfg))
                    .collect::<Result<Vec<_>>>()?;
                render_datadriven(out, &reports, format)
            } else {
                let mut table = load_table()?;
                let reports = alts
                    .iter()
                    .map(|alt| power_grid(alt, n, &grid, sim.alpha, replicates, sim.seed, &mut table))
                    .collect::<Result<Vec<_>>>()?;
                store_table(&table)?;
                render_power(out, &reports, format)
            }
        }
        Command::Efficiency {
            family,
            grid,
            m,
            truncation,
        } => {
            let families = resolve_families(&family)?;
            let settings = SlopeSettings { m, truncation };
            let curves = with_delta_cache(|| {
                families
                    .iter()
                    .map(|f| efficiency_curve(f, &grid, &settings))
                    .collect::<Result<Vec<_>>>()
            })?;
            render_curves(out, &curves, format)
        }
        Command::Eigen { grid, m, truncation } => {
            let rows = with_delta_cache(|| {
                grid.iter()
                    .map(|&a| {
                        let r = spectral::delta1_with(&SpectralConfig::new(a).with_grid(m, truncation))?;
                        Ok(EigenRow {
                            a,
                            m,
                            truncation,
                            delta1: r.delta1,
                            iterations: r.iterations,
                            residual: r.residual,
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })?;
            emit_rows(out, &rows, format, |r| {
                format!("a={} m={} B={} delta1={:.6e} iterations={}", r.a, r.m, r.truncation, r.delta1, r.iterations)
            })
        }
        Command::SelectA {
            data,
            grid,
            bootstrap,
            sim,
        } => {
            let x = crate::data::load_sample(&data)?;
            let mut table = load_table()?;
            let sel = select_tuning(&x, &grid, bootstrap, sim.alpha, sim.replicates(cli.fast), sim.seed, &mut table)?;
            store_table(&table)?;
            match format {
                Format::Json => emit_json(out, &sel),
                Format::Csv => {
                    let mut w = csv::Writer::from_writer(&mut *out);
                    w.write_record(["a", "bootstrap_power", "chosen"])?;
                    for (a, p) in sel.grid.iter().zip(&sel.bootstrap_power) {
                        w.write_record([a.to_string(), p.to_string(), (*a == sel.chosen).to_string()])?;
                    }
                    w.flush().map_err(io_error)
                }
                Format::Text => {
                    writeln!(out, "chosen a: {}", sel.chosen).map_err(io_error)?;
                    for (a, p) in sel.grid.iter().zip(&sel.bootstrap_power) {
                        writeln!(out, "  a = {a:<6} bootstrap power = {p:.3}").map_err(io_error)?;
                    }
                    Ok(())
                }
            }
        }
    }
}

/// Process exit code for an error: 2 for bad input, 3 for numeric failure.
pub fn exit_code(err: &Error) -> u8 {
    if err.is_input_error() {
        2
    } else {
        3
    }
}
