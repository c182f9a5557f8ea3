mod common;

use std::f64::consts::PI;

use mzcg_core::geometry::benchmark_map;
use mzcg_core::kernel::{
    approx_kernel, approx_kernel_div, decay_rate, default_lag_grid, empirical_kernel,
    empirical_kernel_matrix, memory_integral_closed_form, orthogonal_trajectory,
};
use mzcg_core::{BenchmarkParams, IntegratorConfig, NoiseStream};

fn kernel_cfg(p: &BenchmarkParams, lags: &[f64]) -> IntegratorConfig {
    IntegratorConfig::new(1e-4 / p.lambda, *lags.last().unwrap(), 1).unwrap()
}

fn agreement(p: BenchmarkParams) {
    let x0 = 0.0;
    let lags = default_lag_grid(&p, x0, 40, 2.0);
    let k = empirical_kernel(
        &p,
        x0,
        &lags,
        2000,
        &NoiseStream::new(0, 0),
        &kernel_cfg(&p, &lags),
    )
    .unwrap();
    for (i, &s) in k.lags.iter().enumerate() {
        let a = approx_kernel(&p, s, x0);
        let tol = (0.1 * a.abs()).max(3.0 * k.stderr[i]);
        assert!(
            (k.values[i] - a).abs() <= tol,
            "s={s}: empirical {} vs approx {a} (tol {tol})",
            k.values[i]
        );
    }
}

#[test]
fn agreement_steep_valley() {
    agreement(BenchmarkParams::steep_valley());
}

#[test]
fn agreement_shallow_valley() {
    agreement(BenchmarkParams::shallow_valley());
}

#[test]
fn vanishes_where_cosine_does() {
    let p = BenchmarkParams::steep_valley();
    let x0 = PI / (2.0 * p.omega);
    let lags = default_lag_grid(&p, x0, 20, 3.0);
    let k = empirical_kernel(
        &p,
        x0,
        &lags,
        200,
        &NoiseStream::new(3, 0),
        &kernel_cfg(&p, &lags),
    )
    .unwrap();
    for (v, se) in k.values.iter().zip(&k.stderr) {
        assert!(v.abs() <= 3.0 * se + 1e-12, "{v} +- {se}");
    }
}

#[test]
fn matrix_block_11_is_the_scalar_kernel() {
    let p = BenchmarkParams::steep_valley();
    let map = benchmark_map();
    let stream = NoiseStream::new(5, 0);
    let lags = default_lag_grid(&p, 0.0, 15, 5.0);
    let cfg = kernel_cfg(&p, &lags);
    let k = empirical_kernel(&p, 0.0, &lags, 300, &stream, &cfg).unwrap();
    let m = empirical_kernel_matrix(&p, &map, 0.0, &lags, 300, &stream, &cfg).unwrap();
    assert_eq!(m.entry(0, 0), k.values);

    // Off-diagonal entry vanishes at s = 0 where cos(ωx0) = 0.
    let x0 = PI / (2.0 * p.omega);
    let lags = default_lag_grid(&p, x0, 15, 5.0);
    let m =
        empirical_kernel_matrix(&p, &map, x0, &lags, 300, &stream, &kernel_cfg(&p, &lags)).unwrap();
    assert!(m.values[0][0][1].abs() <= 3.0 * m.stderr[0][0][1] + 1e-12);
}

#[test]
fn off_diagonal_decays_rapidly() {
    let p = BenchmarkParams::steep_valley();
    let lags = default_lag_grid(&p, 0.0, 30, 10.0);
    let m = empirical_kernel_matrix(
        &p,
        &benchmark_map(),
        0.0,
        &lags,
        2000,
        &NoiseStream::new(0, 0),
        &kernel_cfg(&p, &lags),
    )
    .unwrap();
    let first = m.values[0][0][1].abs().ln();
    let last = m.values.last().unwrap()[0][1].abs().ln();
    assert!(first - last >= 4.0, "log|m12| drop {}", first - last);
}

#[test]
fn divergence_matches_finite_differences() {
    let mut cloud = NoiseStream::new(11, 0);
    for p in [
        BenchmarkParams::steep_valley(),
        BenchmarkParams::shallow_valley(),
    ] {
        let scale = p.lambda * p.tau * p.tau * p.omega.powi(3);
        for _ in 0..500 {
            let h = 2.0 * cloud.gaussian();
            let rate = decay_rate(&p, h);
            let s = 2.0 * cloud.gaussian().abs() / rate;
            let fd = common::derivative(|hh| approx_kernel(&p, s, hh), h, 1e-4 / p.omega);
            let err = (fd - approx_kernel_div(&p, s, h)).abs() / (scale * (-rate * s).exp());
            assert!(err < 1e-6, "h={h} s={s}: {err}");
        }
    }
}

#[test]
fn memory_integrals_match_quadrature() {
    let mut cloud = NoiseStream::new(12, 0);
    for p in [
        BenchmarkParams::steep_valley(),
        BenchmarkParams::shallow_valley().with_beta(3.0),
    ] {
        for _ in 0..100 {
            let h = cloud.gaussian();
            let rate = decay_rate(&p, h);
            let end = 50.0 / rate;
            let (drift, div) = memory_integral_closed_form(&p, h);
            let tol = 1e-12 * approx_kernel(&p, 0.0, h) * p.mu * h.abs() / rate;
            let q = common::simpson(&|s| approx_kernel(&p, s, h) * p.mu * h, 0.0, end, tol);
            assert!(
                (q - drift).abs() <= 1e-6 * drift.abs(),
                "drift {q} vs {drift}"
            );
            let tol = 1e-12 * approx_kernel_div(&p, 0.0, h).abs() / rate;
            let q = -common::simpson(&|s| approx_kernel_div(&p, s, h), 0.0, end, tol) / p.beta;
            assert!((q - div).abs() <= 1e-6 * div.abs(), "div {q} vs {div}");
        }
    }
}

/// RK4 global error drops by 2⁴ when the step is halved.
#[test]
fn rk4_is_fourth_order() {
    let p = BenchmarkParams::shallow_valley();
    let (x0, y0) = (0.3, 0.5);
    let horizon = 0.2;
    let end = |dt: f64| {
        let cfg = IntegratorConfig::new(dt, horizon, 1_000_000).unwrap();
        let t = orthogonal_trajectory(&p, x0, y0, &cfg).unwrap();
        t.last_state().unwrap().to_vec()
    };
    let reference = end(1e-5);
    let err = |dt: f64| {
        let e = end(dt);
        ((e[0] - reference[0]).powi(2) + (e[1] - reference[1]).powi(2)).sqrt()
    };
    let ratio = err(4e-3) / err(2e-3);
    assert!((12.0..20.0).contains(&ratio), "ratio {ratio}");
}

/// Near the valley floor the orthogonal drift is linear in the displacement
/// `y − τ sin(ωx)`, with rate `λ(1 + τ²ω²cos²)`.
#[test]
fn linearised_velocity() {
    let p = BenchmarkParams::steep_valley();
    let x0 = 0.01;
    let eps = 1e-6;
    let y0 = p.valley_floor(x0) + eps;
    let dt = 1e-7;
    let cfg = IntegratorConfig::new(dt, dt, 1).unwrap();
    let t = orthogonal_trajectory(&p, x0, y0, &cfg).unwrap();
    let s = t.last_state().unwrap();
    let before = y0 - p.valley_floor(x0);
    let after = s[1] - p.valley_floor(s[0]);
    let measured = -(after - before) / (dt * before);
    let expected = decay_rate(&p, x0);
    assert!(
        (measured - expected).abs() / expected < 0.01,
        "{measured} vs {expected}"
    );
}
