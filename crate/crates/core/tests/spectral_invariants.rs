//! Discretization behaviour of the leading eigenvalue. These build matrices
//! with up to 6000 rows and take tens of seconds in total.

use exptest::special::h2_tilde;
use exptest::spectral::{build_operator_matrix, delta1_with, SpectralConfig};

const GRID_A: [f64; 4] = [0.5, 1.0, 2.0, 5.0];

fn delta(a: f64, m: usize, b: f64) -> f64 {
    delta1_with(&SpectralConfig::new(a).with_grid(m, b)).unwrap().delta1
}

#[test]
fn grid_refinement_stabilizes() {
    for &a in &GRID_A {
        let coarse = delta(a, 3000, 10.0);
        let fine = delta(a, 6000, 10.0);
        let change = (coarse - fine).abs() / fine;
        assert!(change <= 0.01, "a={a}: {coarse} -> {fine} ({change:.4})");
    }
}

#[test]
fn truncation_insensitive() {
    for &a in &GRID_A {
        let b10 = delta(a, 4500, 10.0);
        let b14 = delta(a, 4500, 14.0);
        let change = (b10 - b14).abs() / b10;
        assert!(change < 0.005, "a={a}: {b10} vs {b14} ({change:.4})");
    }
}

#[test]
fn decreasing_in_tuning() {
    let values: Vec<f64> = GRID_A.iter().map(|&a| delta(a, 1500, 10.0)).collect();
    assert!(values.windows(2).all(|w| w[0] > w[1]), "{values:?}");
}

#[test]
fn rayleigh_bound_and_residual() {
    let cfg = SpectralConfig::new(1.0).with_grid(800, 10.0);
    let m = build_operator_matrix(&cfg).unwrap();
    let side = m.side();
    let v: Vec<f64> = (0..side).map(|i| (-(i as f64) / 200.0).exp()).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let v: Vec<f64> = v.iter().map(|x| x / norm).collect();
    let mv = m.mul_vec(&v);
    let quotient: f64 = v.iter().zip(&mv).map(|(a, b)| a * b).sum();
    let r = delta1_with(&cfg).unwrap();
    assert!(r.delta1 >= quotient);
    assert!(r.residual <= cfg.tol);
}

#[test]
fn entries_follow_projection_kernel() {
    let cfg = SpectralConfig::new(2.0).with_grid(4, 8.0);
    let m = build_operator_matrix(&cfg).unwrap();
    let node = |i: usize| 2.0 * i as f64;
    let mass = |i: usize| (-node(i)).exp() - (-node(i + 1)).exp();
    for i in 0..5 {
        for j in 0..5 {
            let expected = h2_tilde(node(i), node(j), 2.0).unwrap() * (mass(i) * mass(j)).sqrt()
                / (1.0 - (-8f64).exp());
            assert!((m.get(i, j) - expected).abs() < 1e-14, "({i},{j})");
            assert_eq!(m.get(i, j), m.get(j, i));
        }
    }
}
