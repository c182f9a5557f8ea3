use mzcg_core::sde::{ensemble_mean, par_map, simulate_full, simulate_full_run};
use mzcg_core::stats::variance;
use mzcg_core::{BenchmarkParams, IntegratorConfig, NoiseStream, Thermostat};

/// A valley so shallow that `x` is an Ornstein–Uhlenbeck process with rate μ.
fn ou(mu: f64, beta: f64) -> BenchmarkParams {
    BenchmarkParams::new(mu, 20.0, 1e-300, 1.0, beta).unwrap()
}

#[test]
fn ou_variance() {
    let (mu, beta, t) = (0.5, 2.0, 1.0);
    let p = ou(mu, beta);
    let cfg = IntegratorConfig::new(1e-3, t, 1000).unwrap();
    let ends: Vec<f64> = par_map(10_000, None, |i| {
        let tr = simulate_full(
            &p,
            [0.0, 0.0],
            &cfg,
            NoiseStream::new(21, i as u64),
            Thermostat::On,
        )
        .unwrap();
        tr.last_state().unwrap()[0]
    });
    let expected = (1.0 - (-2.0 * mu * t).exp()) / (beta * mu);
    let v = variance(&ends);
    let se = expected * (2.0 / ends.len() as f64).sqrt();
    assert!((v - expected).abs() < 3.0 * se, "{v} vs {expected} +- {se}");
}

#[test]
fn ou_mean() {
    let (mu, x0) = (2.0, 1.0);
    let p = ou(mu, 1.0);
    let cfg = IntegratorConfig::new(1e-4, 1.0, 1000).unwrap();
    let runs: Vec<_> = (0..500)
        .map(|i| {
            simulate_full(&p, [x0, 0.0], &cfg, NoiseStream::new(22, i), Thermostat::On).unwrap()
        })
        .collect();
    let stats = ensemble_mean(&runs).unwrap();
    for (k, &t) in stats.mean.times().iter().enumerate().skip(1) {
        let m = stats.mean.state(k)[0];
        let se = stats.stderr.state(k)[0];
        let exact = x0 * (-mu * t).exp();
        assert!(
            (m - exact).abs() < 3.0 * se + 1e-3,
            "t={t}: {m} vs {exact} +- {se}"
        );
    }
}

#[test]
fn unstable_step_reports_blowup_with_partial_trajectory() {
    let p = BenchmarkParams::steep_valley();
    let cfg = IntegratorConfig::new(0.5, 100.0, 1).unwrap();
    let run = simulate_full_run(
        &p,
        [1.0, 0.0],
        &cfg,
        NoiseStream::new(0, 0),
        Thermostat::Off,
    )
    .unwrap();
    let b = run
        .blowup
        .expect("dt=0.5 is far beyond the stability limit");
    assert_eq!(run.trajectory.len() as u64, b.step);
    assert!(run.into_result().is_err());
}

/// Long-run Gibbs check in the steep valley. With dt=1e-3 the explicit scheme
/// is unstable there (the stiff direction has rate λ(1+τ²ω²) ≈ 8000), so this
/// does not hold; the stationary experiment defaults to the shallow valley.
#[test]
#[ignore]
fn steep_valley_long_run_variance() {
    let p = BenchmarkParams::steep_valley();
    let cfg = IntegratorConfig::new(1e-3, 2000.0, 10).unwrap();
    let run =
        simulate_full_run(&p, [0.0, 0.0], &cfg, NoiseStream::new(0, 0), Thermostat::On).unwrap();
    assert!(run.blowup.is_none());
    let xs = run.trajectory.component(0);
    let v = variance(&xs[xs.len() / 100..]);
    assert!((v - 0.5).abs() < 0.05, "Var(x) = {v}");
}
