//! Memory kernels of the benchmark.
//!
//! The empirical kernel is sampled from characteristics of the orthogonal
//! dynamics: starting from `(x0, y0)` with `y0 ~ N(τ sin(ωx0), 1/(βλ))`, the
//! deterministic ODE `ẋ = QLF(x)` is integrated and
//! `M_s(x0) = β E[a_s a_0]`, where `a_s` is the reaction-coordinate component
//! of the orthogonal drift at lag `s`.
//!
//! Linearising the same ODE about the valley floor gives the closed forms
//! implemented by [`approx_kernel`], [`approx_kernel_div`] and
//! [`memory_integral_closed_form`].

use crate::benchmark::{conditional_y_sample, orthogonal_drift, BenchmarkParams};
use crate::error::{Error, Result};
use crate::geometry::CgMap;
use crate::noise::NoiseStream;
use crate::sde::{par_map, IntegratorConfig, Trajectory};
use crate::stats::{linear_fit, mean_and_stderr};

/// Kernel values below this fraction of the peak are left out of decay fits.
pub const FIT_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct KernelEstimate {
    pub x0: f64,
    pub lags: Vec<f64>,
    pub values: Vec<f64>,
    pub stderr: Vec<f64>,
    pub n_samples: usize,
}

/// Per-lag 2×2 kernel matrices in the `(Σ⁻¹Φ, Ψ)` block basis.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrixEstimate {
    pub x0: f64,
    pub lags: Vec<f64>,
    pub values: Vec<[[f64; 2]; 2]>,
    pub stderr: Vec<[[f64; 2]; 2]>,
    pub n_samples: usize,
}

impl KernelMatrixEstimate {
    pub fn entry(&self, j: usize, k: usize) -> Vec<f64> {
        self.values.iter().map(|m| m[j][k]).collect()
    }
}

/// Decay rate `λ(1 + τ²ω²cos²(ωh))` of the linearised orthogonal dynamics.
pub fn decay_rate(p: &BenchmarkParams, h: f64) -> f64 {
    p.lambda * p.valley_factor(h)
}

/// `λτ²ω²cos²(ωh) exp(−λ(1 + τ²ω²cos²(ωh)) s)`.
pub fn approx_kernel(p: &BenchmarkParams, s: f64, h: f64) -> f64 {
    let c = (p.omega * h).cos();
    let amp = p.lambda * p.tau * p.tau * p.omega * p.omega * c * c;
    amp * (-decay_rate(p, h) * s).exp()
}

/// `∂_h` of [`approx_kernel`]:
/// `−λτ²ω³ sin(2ωh)(1 − λτ²ω²cos²(ωh) s) exp(−λ(1 + τ²ω²cos²(ωh)) s)`.
pub fn approx_kernel_div(p: &BenchmarkParams, s: f64, h: f64) -> f64 {
    let c = (p.omega * h).cos();
    let t2w2 = p.tau * p.tau * p.omega * p.omega;
    -p.lambda
        * t2w2
        * p.omega
        * (2.0 * p.omega * h).sin()
        * (1.0 - p.lambda * t2w2 * c * c * s)
        * (-decay_rate(p, h) * s).exp()
}

/// Steepest-descent values of the two memory integrals with `h` frozen:
/// `∫₀^∞ M_s(h) ∇S(h) ds` and `−(1/β) ∫₀^∞ div M_s(h) ds`.
pub fn memory_integral_closed_form(p: &BenchmarkParams, h: f64) -> (f64, f64) {
    let c = (p.omega * h).cos();
    let t2w2c2 = p.tau * p.tau * p.omega * p.omega * c * c;
    let f = 1.0 + t2w2c2;
    let drift_term = t2w2c2 / f * p.mu * h;
    let div_term = p.tau * p.tau * p.omega.powi(3) * (2.0 * p.omega * h).sin() / (p.beta * f * f);
    (drift_term, div_term)
}

fn rk4_step(p: &BenchmarkParams, z: [f64; 2], h: f64) -> [f64; 2] {
    let f = |z: [f64; 2]| orthogonal_drift(p, z[0], z[1]);
    let k1 = f(z);
    let k2 = f([z[0] + 0.5 * h * k1[0], z[1] + 0.5 * h * k1[1]]);
    let k3 = f([z[0] + 0.5 * h * k2[0], z[1] + 0.5 * h * k2[1]]);
    let k4 = f([z[0] + h * k3[0], z[1] + h * k3[1]]);
    [
        z[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        z[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ]
}

fn check_finite(z: [f64; 2], step: u64, time: f64) -> Result<()> {
    if z.iter()
        .any(|v| !v.is_finite() || v.abs() > crate::sde::BLOWUP_THRESHOLD)
    {
        return Err(Error::NumericalBlowup {
            step,
            time,
            sample: None,
        });
    }
    Ok(())
}

/// Characteristic of the orthogonal dynamics from `(x0, y0)`, integrated with
/// classical fourth-order Runge–Kutta at step `cfg.dt`.
pub fn orthogonal_trajectory(
    p: &BenchmarkParams,
    x0: f64,
    y0: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    let n = cfg.n_steps();
    let mut traj = Trajectory::with_capacity(2, (n / cfg.record_stride + 2) as usize);
    let mut z = [x0, y0];
    traj.push(0.0, &z);
    for step in 1..=n {
        z = rk4_step(p, z, cfg.dt);
        let t = step as f64 * cfg.dt;
        check_finite(z, step, t)?;
        if step % cfg.record_stride == 0 || step == n {
            traj.push(t, &z);
        }
    }
    Ok(traj)
}

/// States of the characteristic at each lag. Each inter-lag interval is split
/// into the fewest equal RK4 steps no longer than `max_dt`.
fn states_at_lags(
    p: &BenchmarkParams,
    start: [f64; 2],
    lags: &[f64],
    max_dt: f64,
) -> Result<Vec<[f64; 2]>> {
    let mut out = Vec::with_capacity(lags.len());
    let mut z = start;
    let mut t = 0.0;
    let mut step = 0u64;
    for &lag in lags {
        let span = lag - t;
        if span > 0.0 {
            let n = (span / max_dt).ceil().max(1.0) as u64;
            let h = span / n as f64;
            for _ in 0..n {
                z = rk4_step(p, z, h);
                step += 1;
            }
            check_finite(z, step, lag)?;
        }
        t = lag;
        out.push(z);
    }
    Ok(out)
}

fn validate_lags(lags: &[f64], n_samples: usize, cfg: &IntegratorConfig) -> Result<()> {
    cfg.validate()?;
    if n_samples < 2 {
        return Err(Error::InvalidConfig(
            "kernel estimation needs at least 2 samples".into(),
        ));
    }
    match lags.first() {
        Some(&s) if s == 0.0 => {}
        _ => return Err(Error::InvalidConfig("lag grid must start at 0".into())),
    }
    if lags.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidConfig(
            "lag grid must be strictly increasing".into(),
        ));
    }
    if lags
        .last()
        .is_some_and(|&s| s > cfg.t_final * (1.0 + 1e-12))
    {
        return Err(Error::InvalidConfig(format!(
            "largest lag {} exceeds the integration horizon {}",
            lags.last().unwrap(),
            cfg.t_final
        )));
    }
    Ok(())
}

/// Orthogonal drift vectors at every lag for each sample, in sample order.
fn sample_drifts(
    p: &BenchmarkParams,
    x0: f64,
    lags: &[f64],
    n_samples: usize,
    stream: &NoiseStream,
    cfg: &IntegratorConfig,
) -> Result<Vec<Vec<[f64; 2]>>> {
    par_map(n_samples, None, |i| {
        let mut s = stream.substream(i as u64);
        let y0 = conditional_y_sample(p, x0, &mut s);
        let states = states_at_lags(p, [x0, y0], lags, cfg.dt).map_err(|e| e.with_sample(i))?;
        Ok(states
            .into_iter()
            .map(|z| orthogonal_drift(p, z[0], z[1]))
            .collect())
    })
    .into_iter()
    .collect()
}

/// Monte Carlo estimate of the scalar memory kernel `M_s(x0)` on `lags`.
///
/// Sample `i` draws its `y0` from `stream.substream(i)`; `cfg.dt` is the
/// largest RK4 step and `cfg.t_final` bounds the lag grid.
pub fn empirical_kernel(
    p: &BenchmarkParams,
    x0: f64,
    lags: &[f64],
    n_samples: usize,
    stream: &NoiseStream,
    cfg: &IntegratorConfig,
) -> Result<KernelEstimate> {
    p.validate()?;
    validate_lags(lags, n_samples, cfg)?;
    let drifts = sample_drifts(p, x0, lags, n_samples, stream, cfg)?;

    let mut values = Vec::with_capacity(lags.len());
    let mut stderr = Vec::with_capacity(lags.len());
    let mut products = Vec::with_capacity(n_samples);
    for k in 0..lags.len() {
        products.clear();
        products.extend(drifts.iter().map(|d| p.beta * d[k][0] * d[0][0]));
        let (m, se) = mean_and_stderr(&products);
        values.push(m);
        stderr.push(se);
    }
    Ok(KernelEstimate {
        x0,
        lags: lags.to_vec(),
        values,
        stderr,
        n_samples,
    })
}

/// Monte Carlo estimate of the full kernel matrix, with drift vectors expressed
/// as `(Σ⁻¹Φ d, Ψ d)`; entry `(j, k)` is `β E[z_j(s) z_k(0)]`.
pub fn empirical_kernel_matrix(
    p: &BenchmarkParams,
    map: &CgMap,
    x0: f64,
    lags: &[f64],
    n_samples: usize,
    stream: &NoiseStream,
    cfg: &IntegratorConfig,
) -> Result<KernelMatrixEstimate> {
    p.validate()?;
    if map.full_dim() != 2 || map.resolved_dim() != 1 {
        return Err(Error::DimensionMismatch(format!(
            "benchmark kernel needs a 1×2 selector, got {}×{}",
            map.resolved_dim(),
            map.full_dim()
        )));
    }
    validate_lags(lags, n_samples, cfg)?;
    let drifts = sample_drifts(p, x0, lags, n_samples, stream, cfg)?;

    let resolved = map.sigma_inv() * map.phi();
    let (r0, r1) = (resolved[(0, 0)], resolved[(0, 1)]);
    let (o0, o1) = (map.psi()[(0, 0)], map.psi()[(0, 1)]);
    let block = |d: [f64; 2]| [r0 * d[0] + r1 * d[1], o0 * d[0] + o1 * d[1]];

    let blocked: Vec<Vec<[f64; 2]>> = drifts
        .iter()
        .map(|sample| sample.iter().map(|&d| block(d)).collect())
        .collect();

    let mut values = Vec::with_capacity(lags.len());
    let mut stderr = Vec::with_capacity(lags.len());
    let mut products = Vec::with_capacity(n_samples);
    for k in 0..lags.len() {
        let mut m = [[0.0; 2]; 2];
        let mut se = [[0.0; 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                products.clear();
                products.extend(blocked.iter().map(|z| p.beta * z[k][a] * z[0][b]));
                (m[a][b], se[a][b]) = mean_and_stderr(&products);
            }
        }
        values.push(m);
        stderr.push(se);
    }
    Ok(KernelMatrixEstimate {
        x0,
        lags: lags.to_vec(),
        values,
        stderr,
        n_samples,
    })
}

/// `n` lags on `[0, span / rate]`: zero followed by `n − 1` geometrically
/// spaced points from `10⁻³` of the window up to its end.
pub fn default_lag_grid(p: &BenchmarkParams, x0: f64, n: usize, span: f64) -> Vec<f64> {
    let end = span / decay_rate(p, x0);
    let mut lags = vec![0.0];
    if n < 2 {
        return lags;
    }
    let k = n - 1;
    for i in 0..k {
        let frac = if k == 1 {
            1.0
        } else {
            i as f64 / (k - 1) as f64
        };
        lags.push(end * 10f64.powf(-3.0 * (1.0 - frac)));
    }
    lags
}

/// OLS slope of `log|values|` against lag, over lags `≤ window_end` whose
/// magnitude is above [`FIT_FLOOR`] of the peak magnitude.
pub fn fit_decay_rate(lags: &[f64], values: &[f64], window_end: f64) -> Option<f64> {
    let peak = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(peak > 0.0) {
        return None;
    }
    let (s, logv): (Vec<f64>, Vec<f64>) = lags
        .iter()
        .zip(values)
        .filter(|(&s, &v)| s <= window_end && v.abs() > FIT_FLOOR * peak)
        .map(|(&s, &v)| (s, v.abs().ln()))
        .unzip();
    linear_fit(&s, &logv).map(|(_, slope)| slope)
}
