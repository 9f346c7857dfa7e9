//! Exponential integral and the second-order projection of the test kernel.
//!
//! `Ei(x) = -∫_{-x}^∞ e^{-t}/t dt`, taken as a Cauchy principal value for
//! `x > 0`. Evaluation strategy by region:
//!
//! - `x < -1`: continued fraction for `E1(-x)` (modified Lentz).
//! - `-1 ≤ x < 0` and `0 < x ≤ 40`: power series `γ + ln|x| + Σ xᵏ/(k·k!)`.
//! - `|x - x₀| < 0.05`, with `x₀` the positive root of `Ei`: Taylor series
//!   about the root, so the relative error stays bounded where the power
//!   series cancels.
//! - `x > 40`: asymptotic series `eˣ/x · Σ k!/xᵏ`, truncated at its
//!   smallest term.

use crate::error::{Error, Result};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Positive zero of `Ei`.
pub const EI_ROOT: f64 = 0.372_507_410_781_366_6;

const EPS: f64 = 1e-17;
const SERIES_MAX: f64 = 40.0;
const ROOT_WINDOW: f64 = 0.05;

/// Exponential integral `Ei(x)`.
pub fn expi(x: f64) -> Result<f64> {
    if x.is_nan() {
        return Err(Error::Domain("Ei(NaN)".into()));
    }
    if x == 0.0 {
        return Err(Error::Domain("Ei is singular at 0".into()));
    }
    let value = if x < -1.0 {
        -e1_scaled_cf(-x) * (x).exp()
    } else if (x - EI_ROOT).abs() < ROOT_WINDOW {
        root_taylor(x)
    } else if x <= SERIES_MAX {
        power_series(x)
    } else {
        let (sum, _) = asymptotic_sum(x);
        // e^x / x overflows before e^x · sum / x does for x near 709.
        (x - x.ln()).exp() * sum
    };
    if value.is_infinite() {
        return Err(Error::Overflow(format!("Ei({x})")));
    }
    Ok(value)
}

/// `e^{-x} Ei(x)` for `x > 0`. Finite for every positive argument.
pub fn expi_scaled(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("scaled Ei needs x > 0, got {x}")));
    }
    Ok(expi_scaled_unchecked(x))
}

/// `e^{z} E1(z) = -e^{z} Ei(-z)` for `z > 0`.
pub fn e1_scaled(z: f64) -> Result<f64> {
    if !(z > 0.0) {
        return Err(Error::Domain(format!("scaled E1 needs z > 0, got {z}")));
    }
    Ok(e1_scaled_unchecked(z))
}

fn expi_scaled_unchecked(x: f64) -> f64 {
    if x <= SERIES_MAX {
        let ei = if (x - EI_ROOT).abs() < ROOT_WINDOW {
            root_taylor(x)
        } else {
            power_series(x)
        };
        (-x).exp() * ei
    } else {
        asymptotic_sum(x).0 / x
    }
}

fn e1_scaled_unchecked(z: f64) -> f64 {
    if z > 1.0 {
        e1_scaled_cf(z)
    } else {
        -power_series(-z) * z.exp()
    }
}

fn power_series(x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 0.0;
    for k in 1..500 {
        let kf = k as f64;
        term *= x / kf;
        let contrib = term / kf;
        sum += contrib;
        if contrib.abs() < EPS * sum.abs() {
            break;
        }
    }
    EULER_GAMMA + x.abs().ln() + sum
}

/// Returns the asymptotic sum `Σ k!/xᵏ` and the number of terms used.
fn asymptotic_sum(x: f64) -> (f64, usize) {
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1;
    while k < 200 {
        let next = term * k as f64 / x;
        if next >= term || next < EPS * sum {
            break;
        }
        term = next;
        sum += term;
        k += 1;
    }
    (sum, k)
}

/// `e^{z} E1(z)` by continued fraction, valid for `z > 1`.
fn e1_scaled_cf(z: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = z + 1.0;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..1000 {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}

/// Taylor expansion of `Ei` about its positive root. `Ei^{(n)} = g^{(n-1)}`
/// with `g(x) = eˣ/x`, and `g^{(k)}(x) = eˣ Σ_j C(k,j) (-1)^j j! / x^{j+1}`.
fn root_taylor(x: f64) -> f64 {
    let d = x - EI_ROOT;
    let x0 = EI_ROOT;
    let ex0 = x0.exp();
    // u[j] = (-1)^j j! / x0^{j+1}
    const TERMS: usize = 24;
    let mut u = [0.0f64; TERMS];
    u[0] = 1.0 / x0;
    for j in 1..TERMS {
        u[j] = -(j as f64) * u[j - 1] / x0;
    }
    let mut sum = 0.0;
    let mut dpow_over_fact = 1.0;
    for n in 1..TERMS {
        // g^{(n-1)}(x0) / ex0
        let k = n - 1;
        let mut binom = 1.0;
        let mut deriv = 0.0;
        for (j, uj) in u.iter().enumerate().take(k + 1) {
            deriv += binom * uj;
            binom = binom * (k - j) as f64 / (j + 1) as f64;
        }
        dpow_over_fact *= d / n as f64;
        let contrib = deriv * dpow_over_fact;
        sum += contrib;
        if contrib.abs() < EPS * sum.abs() {
            break;
        }
    }
    ex0 * sum
}

/// Second-order projection of the symmetrized test kernel for a fixed
/// tuning parameter, with the `a`-only factors evaluated once.
///
/// The printed closed form multiplies `Ei` values by `e^{±(a+x+y)}`; here
/// every such product is carried as a scaled exponential integral so the
/// evaluation stays finite for large arguments. Each expression is
/// written symmetrically in `x` and `y`, so swapping them reproduces the
/// same bits.
#[derive(Debug, Clone, Copy)]
pub struct ProjectionKernel {
    a: f64,
    /// `e^{a} Ei(-a)`
    neg_scaled: f64,
    /// `e^{-a} Ei(a)`
    pos_scaled: f64,
}

/// Per-point quantities reused along a row or column of a grid.
#[derive(Debug, Clone, Copy)]
pub struct ProjectionPoint {
    pub x: f64,
    /// `e^{-x}`
    pub exp_neg: f64,
    /// `e^{-(a+x)} Ei(a+x)`
    pub shifted: f64,
}

impl ProjectionKernel {
    pub fn new(a: f64) -> Result<Self> {
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::Domain(format!("tuning parameter must be positive, got {a}")));
        }
        Ok(Self {
            a,
            neg_scaled: -e1_scaled_unchecked(a),
            pos_scaled: expi_scaled_unchecked(a),
        })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn point(&self, x: f64) -> ProjectionPoint {
        ProjectionPoint {
            x,
            exp_neg: (-x).exp(),
            shifted: expi_scaled_unchecked(self.a + x),
        }
    }

    pub fn eval_points(&self, p: &ProjectionPoint, q: &ProjectionPoint) -> f64 {
        let a = self.a;
        let (ex, ey) = (p.exp_neg, q.exp_neg);
        let exy = ex * ey;
        let esum = ex + ey;
        let sum = p.x + q.x;
        let s_all = a + sum;

        let t1 = self.neg_scaled * (a * ((1.0 - 2.0 * ex) * (1.0 - 2.0 * ey)) - esum + 4.0 * exy);
        let cross = p.shifted * (4.0 * (a + p.x - 1.0) * ey + 1.0)
            + q.shifted * (4.0 * (a + q.x - 1.0) * ex + 1.0);
        let t2 = self.pos_scaled * (4.0 * a * exy + esum - 4.0 * exy) - cross
            + 4.0 * (s_all - 1.0) * expi_scaled_unchecked(s_all);

        -0.5 + esum / 3.0 + (t1 + t2) / 6.0 + 1.0 / (6.0 * s_all)
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.eval_points(&self.point(x), &self.point(y))
    }
}

/// `h̃₂(x, y, a)`: conditional expectation of the symmetrized kernel given
/// two of its four arguments, under the unit exponential law.
pub fn h2_tilde(x: f64, y: f64, a: f64) -> Result<f64> {
    if !(x >= 0.0) || !(y >= 0.0) {
        return Err(Error::Domain(format!("h2 needs x, y >= 0, got ({x}, {y})")));
    }
    let value = ProjectionKernel::new(a)?.eval(x, y);
    if !value.is_finite() {
        return Err(Error::Overflow(format!("h2({x}, {y}, {a})")));
    }
    Ok(value)
}
