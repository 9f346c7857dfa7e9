//! Local approximate Bahadur efficiency of the test against the likelihood
//! ratio test, for close alternatives `g(x; θ)` that reduce to the unit
//! exponential density at `θ = 0`.
//!
//! Under such an alternative the statistic converges to
//! `b(θ) = C(a)·θ² + o(θ²)` with `C(a) = 6 ∬ h̃₂(x,y,a) f(x) f(y) dx dy`
//! and `f = ∂g/∂θ |_{θ=0}`. With the tail constant `1/(6δ₁)` of the
//! limiting law the approximate slope is `C(a)·θ² / (6δ₁(a))`. The LRT
//! benchmark slope is `2K(θ)`, where `K` is the Kullback–Leibler distance
//! from `g(·; θ)` to the closest exponential law.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::quadrature::{minimize_golden, Quadrature};
use crate::special::{ProjectionKernel, EULER_GAMMA};
use crate::spectral::{delta1_with, SpectralConfig};

/// Upper truncation of every half-line integral; all integrands carry an
/// `e^{-x}` factor.
pub const TRUNCATION: f64 = 50.0;

/// Breakpoints on `[0, TRUNCATION]`, refined geometrically towards 0 where
/// the Weibull and Gamma scores have a logarithmic singularity.
const BREAKS: [f64; 17] = [
    0.0, 1e-12, 1e-9, 1e-7, 1e-5, 1e-4, 1e-3, 1e-2, 0.1, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 30.0,
    TRUNCATION,
];

/// Small parameters used to extrapolate the slope ratio to `θ → 0`.
pub const EXTRAPOLATION_THETAS: [f64; 3] = [0.02, 0.01, 0.005];

/// Upper clamp on reported efficiencies.
pub const EFFICIENCY_CAP: f64 = 1.05;

/// Close alternatives to the unit exponential law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Alternative {
    /// `g = (1+θ) x^θ e^{-x^{1+θ}}`
    Weibull,
    /// `g = x^θ e^{-x} / Γ(θ+1)`
    Gamma,
    /// Linear failure rate, `g = (1+θx) e^{-x-θx²/2}`
    Lfr,
    /// Exponential mixture with a negative weight,
    /// `g = (1+θ) e^{-x} - θβ e^{-βx}`, `0 < θ ≤ 1/(β-1)`.
    Emnw { beta: f64 },
}

impl Alternative {
    /// The four families used for the efficiency curves (EMNW with `β = 3`).
    pub const STANDARD: [Alternative; 4] = [
        Alternative::Weibull,
        Alternative::Gamma,
        Alternative::Lfr,
        Alternative::Emnw { beta: 3.0 },
    ];

    pub fn name(&self) -> String {
        match self {
            Alternative::Weibull => "weibull".into(),
            Alternative::Gamma => "gamma".into(),
            Alternative::Lfr => "lfr".into(),
            Alternative::Emnw { beta } => format!("emnw({beta})"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Alternative::Emnw { beta } if !(*beta > 1.0 && beta.is_finite()) => {
                Err(Error::Domain(format!("EMNW needs beta > 1, got {beta}")))
            }
            _ => Ok(()),
        }
    }

    /// Largest admissible `θ`.
    pub fn theta_max(&self) -> f64 {
        match self {
            Alternative::Emnw { beta } => 1.0 / (beta - 1.0),
            _ => f64::INFINITY,
        }
    }

    fn check_theta(&self, theta: f64) -> Result<()> {
        self.validate()?;
        if theta >= 0.0 && theta <= self.theta_max() {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "theta = {theta} outside [0, {}] for {}",
                self.theta_max(),
                self.name()
            )))
        }
    }

    /// Density `g(x; θ)`.
    pub fn density(&self, x: f64, theta: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        match *self {
            Alternative::Weibull => {
                if x == 0.0 {
                    return if theta == 0.0 { 1.0 } else { 0.0 };
                }
                let p = (theta * x.ln()).exp();
                (1.0 + theta) * p * (-x * p).exp()
            }
            Alternative::Gamma => {
                if x == 0.0 {
                    return if theta == 0.0 { 1.0 } else { 0.0 };
                }
                (theta * x.ln() - x - ln_gamma(theta + 1.0)).exp()
            }
            Alternative::Lfr => (1.0 + theta * x) * (-x - 0.5 * theta * x * x).exp(),
            Alternative::Emnw { beta } => (1.0 + theta) * (-x).exp() - theta * beta * (-beta * x).exp(),
        }
    }

    /// Mean of `g(·; θ)` in closed form.
    pub fn mean(&self, theta: f64) -> Result<f64> {
        self.check_theta(theta)?;
        Ok(match *self {
            // E X = Γ(1 + 1/(1+θ))
            Alternative::Weibull => ln_gamma(1.0 + 1.0 / (1.0 + theta)).exp(),
            Alternative::Gamma => 1.0 + theta,
            Alternative::Lfr => {
                if theta == 0.0 {
                    1.0
                } else {
                    // E X = ∫ S(x) dx with S = e^{-x-θx²/2}
                    let q = Quadrature::with_tolerance(1e-15, 1e-14);
                    q.integrate_pieces(|x| (-x - 0.5 * theta * x * x).exp(), &BREAKS)?
                        .value
                }
            }
            Alternative::Emnw { beta } => 1.0 + theta - theta / beta,
        })
    }
}

impl fmt::Display for Alternative {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for Alternative {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "weibull" | "w" => Ok(Alternative::Weibull),
            "gamma" | "g" => Ok(Alternative::Gamma),
            "lfr" | "linear-failure-rate" => Ok(Alternative::Lfr),
            "emnw" => Ok(Alternative::Emnw { beta: 3.0 }),
            other => {
                if let Some(inner) = other.strip_prefix("emnw(").and_then(|r| r.strip_suffix(')')) {
                    let beta: f64 = inner
                        .parse()
                        .map_err(|_| Error::InvalidConfig(format!("bad EMNW parameter in {s:?}")))?;
                    let alt = Alternative::Emnw { beta };
                    alt.validate()?;
                    Ok(alt)
                } else {
                    Err(Error::InvalidConfig(format!(
                        "unknown family {s:?}; expected weibull, gamma, lfr or emnw(beta)"
                    )))
                }
            }
        }
    }
}

/// `f(x) = ∂g(x; θ)/∂θ` at `θ = 0`.
///
/// The Weibull and Gamma scores diverge logarithmically at `x = 0`; there
/// the value is `-∞`.
pub fn null_derivative(model: &Alternative, x: f64) -> Result<f64> {
    model.validate()?;
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("null derivative needs x >= 0, got {x}")));
    }
    let e = (-x).exp();
    Ok(match *model {
        Alternative::Weibull => {
            if x == 0.0 {
                f64::NEG_INFINITY
            } else {
                e * (1.0 + (1.0 - x) * x.ln())
            }
        }
        Alternative::Gamma => {
            if x == 0.0 {
                f64::NEG_INFINITY
            } else {
                e * (x.ln() + EULER_GAMMA)
            }
        }
        Alternative::Lfr => e * (x - 0.5 * x * x),
        Alternative::Emnw { beta } => e - beta * (-beta * x).exp(),
    })
}

fn curvature_quadrature() -> (Quadrature, Quadrature) {
    (
        Quadrature::with_tolerance(1e-13, 1e-11),
        Quadrature::with_tolerance(1e-12, 1e-10),
    )
}

/// `6 ∬ h̃₂(x, y, a) f(x) f(y) dx dy` for an arbitrary score `f`.
pub fn curvature_of<F: Fn(f64) -> f64>(score: F, a: f64) -> Result<f64> {
    let kernel = ProjectionKernel::new(a)?;
    let (inner_q, outer_q) = curvature_quadrature();
    let failure = std::cell::Cell::new(None);
    let inner = |x: f64| -> f64 {
        let fx = score(x);
        if fx == 0.0 {
            return 0.0;
        }
        let px = kernel.point(x);
        match inner_q.integrate_pieces(|y| kernel.eval_points(&px, &kernel.point(y)) * score(y), &BREAKS) {
            Ok(est) => est.value * fx,
            Err(e) => {
                failure.set(Some(e));
                0.0
            }
        }
    };
    let outer = outer_q.integrate_pieces(inner, &BREAKS)?;
    if let Some(e) = failure.take() {
        return Err(e);
    }
    Ok(6.0 * outer.value)
}

/// `C(a)`, the coefficient of `θ²` in the limit of the statistic.
pub fn b_curvature(model: &Alternative, a: f64) -> Result<f64> {
    model.validate()?;
    let m = *model;
    curvature_of(move |x| null_derivative(&m, x).unwrap_or(0.0), a)
}

/// Discretization used for `δ₁` inside slope computations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeSettings {
    pub m: usize,
    pub truncation: f64,
}

impl Default for SlopeSettings {
    fn default() -> Self {
        Self {
            m: crate::spectral::DEFAULT_M,
            truncation: crate::spectral::DEFAULT_TRUNCATION,
        }
    }
}

impl SlopeSettings {
    pub fn delta1(&self, a: f64) -> Result<f64> {
        Ok(delta1_with(&SpectralConfig::new(a).with_grid(self.m, self.truncation))?.delta1)
    }
}

/// Approximate Bahadur slope `C(a)·θ² / (6δ₁(a))`.
pub fn approx_slope(model: &Alternative, a: f64, theta: f64) -> Result<f64> {
    approx_slope_with(model, a, theta, &SlopeSettings::default())
}

pub fn approx_slope_with(
    model: &Alternative,
    a: f64,
    theta: f64,
    settings: &SlopeSettings,
) -> Result<f64> {
    model.check_theta(theta)?;
    if theta == 0.0 {
        return Ok(0.0);
    }
    let c = b_curvature(model, a)?;
    Ok(c * theta * theta / (6.0 * settings.delta1(a)?))
}

/// `(1+r) ln(1+r) - r`, accurate for small `r`.
fn entropy_gap(r: f64) -> f64 {
    if r <= -1.0 {
        return 1.0;
    }
    if r.abs() < 0.1 {
        // Σ_{k≥2} (-1)^k r^k / (k(k-1))
        let mut sum = 0.0;
        let mut pow = r;
        for k in 2..40 {
            pow *= r;
            let kf = k as f64;
            let term = pow / (kf * (kf - 1.0));
            sum += if k % 2 == 0 { term } else { -term };
            if term.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        sum
    } else {
        (1.0 + r) * r.ln_1p() - r
    }
}

/// `∫ g ln(g / (λ e^{-λx})) dx`, computed as `∫ q·φ(g/q - 1)` with
/// `q = λe^{-λx}` and `φ(r) = (1+r)ln(1+r) - r ≥ 0`, which integrates to the
/// same value because both densities have unit mass.
pub fn kl_to_exponential(model: &Alternative, theta: f64, lambda: f64) -> Result<f64> {
    model.check_theta(theta)?;
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!("rate must be positive, got {lambda}")));
    }
    let q = Quadrature::with_tolerance(1e-17, 1e-11);
    let integrand = |x: f64| {
        let ref_density = lambda * (-lambda * x).exp();
        if ref_density == 0.0 {
            return 0.0;
        }
        let g = model.density(x, theta);
        ref_density * entropy_gap((g - ref_density) / ref_density)
    };
    Ok(q.integrate_pieces(integrand, &BREAKS)?.value)
}

/// LRT slope `2 inf_λ KL(g_θ ‖ Exp(λ))`, with the infimum found by
/// golden-section search around `1/E_θ X`.
pub fn lrt_slope(model: &Alternative, theta: f64) -> Result<f64> {
    model.check_theta(theta)?;
    if theta == 0.0 {
        return Ok(0.0);
    }
    let guess = 1.0 / model.mean(theta)?;
    let (_, k) = minimize_golden(
        |lambda| kl_to_exponential(model, theta, lambda),
        0.7 * guess,
        1.4 * guess,
        1e-10,
    )?;
    Ok(2.0 * k)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalEfficiency {
    pub a: f64,
    /// Extrapolated `θ → 0` ratio, clamped to `[0, EFFICIENCY_CAP]`.
    pub value: f64,
    /// Unclamped intercept of the linear fit.
    pub intercept: f64,
    pub slope: f64,
    pub thetas: Vec<f64>,
    pub ratios: Vec<f64>,
    /// Set when the ratios are not monotone in θ or the fit moves the
    /// intercept far from the smallest-θ ratio.
    pub unstable: bool,
}

/// Local approximate Bahadur efficiency against the LRT at tuning `a`.
pub fn local_efficiency(model: &Alternative, a: f64) -> Result<LocalEfficiency> {
    local_efficiency_with(model, a, &SlopeSettings::default())
}

pub fn local_efficiency_with(
    model: &Alternative,
    a: f64,
    settings: &SlopeSettings,
) -> Result<LocalEfficiency> {
    model.validate()?;
    let c = b_curvature(model, a)?;
    let tail = 1.0 / (6.0 * settings.delta1(a)?);
    let thetas = EXTRAPOLATION_THETAS.to_vec();
    let ratios = thetas
        .iter()
        .map(|&t| Ok(c * t * t * tail / lrt_slope(model, t)?))
        .collect::<Result<Vec<f64>>>()?;

    let k = thetas.len() as f64;
    let mt = thetas.iter().sum::<f64>() / k;
    let mr = ratios.iter().sum::<f64>() / k;
    let sxy: f64 = thetas.iter().zip(&ratios).map(|(t, r)| (t - mt) * (r - mr)).sum();
    let sxx: f64 = thetas.iter().map(|t| (t - mt) * (t - mt)).sum();
    let slope = sxy / sxx;
    let intercept = mr - slope * mt;

    let increasing = ratios.windows(2).all(|w| w[1] >= w[0]);
    let decreasing = ratios.windows(2).all(|w| w[1] <= w[0]);
    let nearest = ratios[ratios.len() - 1];
    let unstable = !(increasing || decreasing)
        || !intercept.is_finite()
        || (intercept - nearest).abs() > 0.1 * nearest.abs();

    Ok(LocalEfficiency {
        a,
        value: intercept.clamp(0.0, EFFICIENCY_CAP),
        intercept,
        slope,
        thetas,
        ratios,
        unstable,
    })
}

/// Efficiency as a function of the tuning parameter.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlopeCurve {
    pub alternative: Alternative,
    pub a_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub unstable: Vec<bool>,
}

pub fn efficiency_curve(
    model: &Alternative,
    a_grid: &[f64],
    settings: &SlopeSettings,
) -> Result<SlopeCurve> {
    let points = a_grid
        .iter()
        .map(|&a| local_efficiency_with(model, a, settings))
        .collect::<Result<Vec<_>>>()?;
    Ok(SlopeCurve {
        alternative: *model,
        a_grid: a_grid.to_vec(),
        values: points.iter().map(|p| p.value).collect(),
        unstable: points.iter().map(|p| p.unstable).collect(),
    })
}

/// Writes `family,a,efficiency` rows for each curve.
pub fn write_curves_csv<W: Write>(out: W, curves: &[SlopeCurve]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(["family", "a", "efficiency"])?;
    for curve in curves {
        for (a, e) in curve.a_grid.iter().zip(&curve.values) {
            writer.write_record([curve.alternative.name(), format!("{a}"), format!("{e:.6}")])?;
        }
    }
    writer.flush().map_err(|source| Error::Io {
        path: "<csv output>".into(),
        source,
    })?;
    Ok(())
}
