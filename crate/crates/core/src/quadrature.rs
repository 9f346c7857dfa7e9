//! Globally adaptive Gauss–Kronrod (10/21) quadrature on finite intervals
//! and a golden-section minimizer.

use crate::error::{Error, Result};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_015_259_851,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Gauss weights for the nodes XGK[1], XGK[3], ..., XGK[9].
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_intervals: 4000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> Panel {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center);
    let mut kronrod = WGK[10] * fc;
    let mut gauss = 0.0;
    for j in 0..10 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Panel {
        lo,
        hi,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

impl Quadrature {
    pub fn with_tolerance(abs_tol: f64, rel_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol,
            ..Self::default()
        }
    }

    /// Integrates `f` over `[lo, hi]`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, lo: f64, hi: f64) -> Result<Estimate> {
        self.integrate_pieces(f, &[lo, hi])
    }

    /// Integrates `f` over `[points[0], points[last]]`, treating the interior
    /// points as known kinks or singular spots. Points must be ascending.
    pub fn integrate_pieces<F: Fn(f64) -> f64>(&self, f: F, points: &[f64]) -> Result<Estimate> {
        if points.len() < 2 {
            return Err(Error::Domain("quadrature needs at least two points".into()));
        }
        if points.windows(2).any(|w| !(w[0] <= w[1])) {
            return Err(Error::Domain("quadrature points must ascend".into()));
        }
        let mut panels: Vec<Panel> = points
            .windows(2)
            .filter(|w| w[1] > w[0])
            .map(|w| gauss_kronrod(&f, w[0], w[1]))
            .collect();
        if panels.is_empty() {
            return Ok(Estimate { value: 0.0, error: 0.0 });
        }
        loop {
            let value: f64 = panels.iter().map(|p| p.value).sum();
            let error: f64 = panels.iter().map(|p| p.error).sum();
            if !value.is_finite() {
                return Err(Error::Quadrature { estimate: f64::INFINITY });
            }
            if error <= self.abs_tol.max(self.rel_tol * value.abs()) {
                return Ok(Estimate { value, error });
            }
            let (worst, _) = panels
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.error.total_cmp(&b.1.error))
                .expect("non-empty");
            let p = panels[worst];
            let mid = 0.5 * (p.lo + p.hi);
            if panels.len() >= self.max_intervals || !(mid > p.lo && mid < p.hi) {
                return Err(Error::Quadrature { estimate: error });
            }
            panels[worst] = gauss_kronrod(&f, p.lo, mid);
            panels.push(gauss_kronrod(&f, mid, p.hi));
        }
    }
}

/// Golden-section search for a minimum of a unimodal `f` on `[lo, hi]`,
/// stopping when the bracket is narrower than `x_tol · (1 + |x|)`.
pub fn minimize_golden<F: Fn(f64) -> Result<f64>>(
    f: F,
    lo: f64,
    hi: f64,
    x_tol: f64,
) -> Result<(f64, f64)> {
    if !(lo < hi) {
        return Err(Error::Minimization(format!("empty bracket [{lo}, {hi}]")));
    }
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    for _ in 0..500 {
        if (b - a).abs() <= x_tol * (1.0 + 0.5 * (a + b).abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    let (x, fx) = if fc < fd { (c, fc) } else { (d, fd) };
    if x - lo < 1e-3 * (hi - lo) || hi - x < 1e-3 * (hi - lo) {
        return Err(Error::Minimization(format!(
            "minimum at bracket edge ({x}) of [{lo}, {hi}]"
        )));
    }
    Ok((x, fx))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let q = Quadrature::default();
        let r = q.integrate(|x| x.powi(5) - 3.0 * x * x, 0.0, 2.0).unwrap();
        assert!((r.value - (64.0 / 6.0 - 8.0)).abs() < 1e-13);
    }

    #[test]
    fn exponential_tail() {
        let q = Quadrature::with_tolerance(1e-13, 1e-13);
        let r = q.integrate(|x| (-x).exp(), 0.0, 50.0).unwrap();
        assert!((r.value - (1.0 - (-50f64).exp())).abs() < 1e-13);
    }

    #[test]
    fn log_singularity_at_origin() {
        let q = Quadrature::with_tolerance(1e-12, 1e-12);
        let r = q
            .integrate_pieces(|x| x.ln(), &[0.0, 1e-8, 1e-4, 1e-2, 1.0])
            .unwrap();
        assert!((r.value + 1.0).abs() < 1e-11, "{}", r.value);
    }

    #[test]
    fn kink_with_breakpoint() {
        let q = Quadrature::with_tolerance(1e-13, 0.0);
        let r = q.integrate_pieces(|x| (x - 0.3f64).abs(), &[0.0, 0.3, 1.0]).unwrap();
        assert!((r.value - (0.045 + 0.245)).abs() < 1e-14);
    }

    #[test]
    fn reports_failure_when_budget_exhausted() {
        let q = Quadrature {
            abs_tol: 1e-15,
            rel_tol: 0.0,
            max_intervals: 4,
        };
        assert!(matches!(
            q.integrate(|x| 1.0 / x.sqrt(), 0.0, 1.0),
            Err(Error::Quadrature { .. })
        ));
    }

    #[test]
    fn golden_section_finds_parabola_vertex() {
        let (x, fx) = minimize_golden(|x| Ok((x - 1.3) * (x - 1.3) + 2.0), 0.0, 4.0, 1e-10).unwrap();
        assert!((x - 1.3).abs() < 1e-7);
        assert!((fx - 2.0).abs() < 1e-15);
        assert!(minimize_golden(Ok, 0.0, 1.0, 1e-8).is_err());
    }
}
