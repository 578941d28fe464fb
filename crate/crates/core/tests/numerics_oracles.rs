//! Distribution functions against mpmath grids (50 digits, see
//! `data/gen_oracles.py`) and Gauss-Legendre exactness on polynomials.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thicknull_core::numerics::{normal_cdf, student_t_cdf, GaussLegendre, Integrator, QuadratureSpec};

fn grid(name: &str) -> Vec<Vec<f64>> {
    let path = format!("{}/tests/data/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("{path}: {e}"))
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn normal_cdf_matches_oracle_grid() {
    let rows = grid("normal_cdf_grid.csv");
    assert_eq!(rows.len(), 1000);
    let worst = rows.iter().map(|r| (normal_cdf(r[0]).unwrap().get() - r[1]).abs()).fold(0.0, f64::max);
    assert!(worst <= 1e-12, "max abs error {worst:e}");
}

#[test]
fn student_t_cdf_matches_oracle_grid() {
    let rows = grid("student_t_cdf_grid.csv");
    assert_eq!(rows.len(), 1000);
    let worst = rows.iter().map(|r| (student_t_cdf(r[0], r[1]).unwrap().get() - r[2]).abs()).fold(0.0, f64::max);
    assert!(worst <= 1e-12, "max abs error {worst:e}");
}

/// Integral of `sum c_k x^k` over `[a, b]`, by the antiderivative.
fn exact_poly_integral(c: &[f64], a: f64, b: f64) -> f64 {
    let anti = |x: f64| c.iter().enumerate().rev().fold(0.0, |acc, (k, ck)| acc * x + ck / (k + 1) as f64) * x;
    anti(b) - anti(a)
}

#[test]
fn gauss_legendre_is_exact_for_degree_63() {
    let mut rng = ChaCha8Rng::seed_from_u64(63);
    // 32 nodes integrate degree 2 * 32 - 1 exactly
    let gl = GaussLegendre::<f64>::new(32).unwrap();
    for _ in 0..500 {
        let degree = rng.random_range(0..=63);
        let c: Vec<f64> = (0..=degree).map(|_| rng.random_range(-1.0..1.0)).collect();
        let a = rng.random_range(-2.0..0.5);
        let b = a + rng.random_range(0.1..2.5);
        let f = |x: f64| c.iter().rev().fold(0.0, |acc, ck| acc * x + ck);
        let exact = exact_poly_integral(&c, a, b);
        let got = gl.apply(f, a, b);
        assert!((got - exact).abs() <= 1e-9 * exact.abs(), "degree {degree}: {got} vs {exact}");
    }
}

#[test]
fn adaptive_integrator_handles_polynomials_too() {
    let integ = Integrator::new(QuadratureSpec::default()).unwrap();
    let c = [0.5, -1.0, 0.25, 2.0, -0.75];
    let got = integ.integrate(|x| c.iter().rev().fold(0.0, |acc, ck| acc * x + ck), -1.5, 2.0).unwrap();
    assert!((got - exact_poly_integral(&c, -1.5, 2.0)).abs() < 1e-11);
}
