use exptest::montecarlo::{
    power, power_datadriven, sample_alternative, sample_null, simulate_null, DataDrivenConfig, PowerAlternative,
    RngStream,
};

fn ks_distance(values: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}

fn unit_exponential_cdf(x: f64) -> f64 {
    -(-x).exp_m1()
}

#[test]
fn null_sampler_matches_exponential() {
    let x = sample_null(1_000_000, &RngStream::new(11)).unwrap();
    assert!((x.mean() - 1.0).abs() < 0.004, "mean {}", x.mean());
    let d = ks_distance(x.values(), unit_exponential_cdf);
    assert!(d < 0.002, "ks {d}");
}

#[test]
fn unit_shape_alternatives_reduce_to_exponential() {
    for alt in [PowerAlternative::Weibull(1.0), PowerAlternative::ExpWeibull(1.0)] {
        let x = sample_alternative(&alt, 100_000, &RngStream::new(12)).unwrap();
        let d = ks_distance(x.values(), unit_exponential_cdf);
        assert!(d < 0.006, "{alt}: ks {d}");
    }
}

#[test]
fn samplers_follow_their_cdfs() {
    for alt in PowerAlternative::TABLE {
        let x = sample_alternative(&alt, 100_000, &RngStream::new(13)).unwrap();
        let d = ks_distance(x.values(), |v| alt.cdf(v));
        assert!(d < 0.006, "{alt}: ks {d}");
    }
}

#[test]
fn linear_failure_mass_below_one() {
    let alt = PowerAlternative::LinearFailure(2.0);
    let x = sample_alternative(&alt, 1_000_000, &RngStream::new(14)).unwrap();
    let share = x.values().iter().filter(|&&v| v <= 1.0).count() as f64 / 1e6;
    assert!((share - (1.0 - (-2f64).exp())).abs() < 0.002, "{share}");
}

#[test]
fn critical_values_decrease_with_level() {
    let dist = &simulate_null(20, &[1.0], 4000, 3).unwrap()[0];
    let levels = [0.01, 0.05, 0.1, 0.2];
    let c: Vec<f64> = levels.iter().map(|&l| dist.critical_value(l).unwrap()).collect();
    assert!(c.windows(2).all(|w| w[0] >= w[1]), "{c:?}");
}

#[test]
fn independent_seeds_agree_on_critical_value() {
    let replicates = 100_000;
    let alpha = 0.05;
    let first = &simulate_null(20, &[1.0], replicates, 101).unwrap()[0];
    let second = &simulate_null(20, &[1.0], replicates, 202).unwrap()[0];
    // order-statistic band of two binomial standard errors around the quantile
    let se = (replicates as f64 * alpha * (1.0 - alpha)).sqrt();
    let k = (replicates as f64 * (1.0 - alpha)).ceil();
    let lo = first.statistics()[(k - 2.0 * se).floor() as usize - 1];
    let hi = first.statistics()[(k + 2.0 * se).ceil() as usize - 1];
    let c2 = second.critical_value(alpha).unwrap();
    assert!(lo <= c2 && c2 <= hi, "{c2} outside [{lo}, {hi}]");
}

#[test]
fn null_p_values_are_uniform() {
    let dist = &simulate_null(20, &[1.0], 2000, 21).unwrap()[0];
    let base = RngStream::with_stream(22, 9);
    let p: Vec<f64> = (0..1000)
        .map(|i| {
            let x = sample_null(20, &base.substream(i)).unwrap();
            dist.p_value(exptest::statistic_from_raw(&x, 1.0).unwrap().value)
        })
        .collect();
    let d = ks_distance(&p, |u| u.clamp(0.0, 1.0));
    assert!(d < 0.06, "ks {d}");
}

#[test]
fn size_under_exponential_alternative() {
    let replicates = 10_000;
    let alpha = 0.05;
    let rate = power(&PowerAlternative::Weibull(1.0), 20, 1.0, alpha, replicates, 31).unwrap();
    let se = (alpha * (1.0 - alpha) / replicates as f64).sqrt();
    assert!((rate - alpha).abs() <= 3.0 * se, "size {rate}");
}

#[test]
fn power_grows_with_sample_size() {
    let replicates = 2000;
    let rates: Vec<f64> = [10, 20, 40]
        .iter()
        .map(|&n| power(&PowerAlternative::Uniform, n, 1.0, 0.05, replicates, 41).unwrap())
        .collect();
    for w in rates.windows(2) {
        let se = (w[0] * (1.0 - w[0]) / replicates as f64).sqrt();
        assert!(w[1] >= w[0] - 2.0 * se, "{rates:?}");
    }
    assert!(rates[2] > rates[0]);
}

#[test]
fn fixed_seed_reproduces() {
    let a = simulate_null(15, &[0.5, 2.0], 1000, 5).unwrap();
    let b = simulate_null(15, &[0.5, 2.0], 1000, 5).unwrap();
    assert_eq!(a, b);
    let p1 = power(&PowerAlternative::Gamma(2.0), 15, 1.0, 0.05, 1000, 5).unwrap();
    let p2 = power(&PowerAlternative::Gamma(2.0), 15, 1.0, 0.05, 1000, 5).unwrap();
    assert_eq!(p1, p2);
}

#[test]
fn selection_frequencies_sum_to_one() {
    let cfg = DataDrivenConfig {
        n: 15,
        grid: vec![0.5, 1.0, 2.0, 5.0],
        alpha: 0.05,
        replicates: 1000,
        bootstrap: 100,
        final_replicates: 1000,
        seed: 7,
    };
    let report = power_datadriven(&PowerAlternative::Gamma(2.0), &cfg).unwrap();
    let total: f64 = report.selection_frequency.iter().sum();
    assert!((total - 1.0).abs() < 1e-12);
    assert!((0.0..=1.0).contains(&report.power));
    assert_eq!(report.fixed_power.len(), 4);
}
