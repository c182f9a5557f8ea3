//! The benchmark potential `V(x, y) = μx²/2 + λ(τ sin(ωx) − y)²/2` and the
//! drift fields derived from it.
//!
//! With the reaction coordinate `h = x`, the conditional law of `y` given `x` is
//! `N(τ sin(ωx), 1/(βλ))`, the effective potential is `μh²/2` up to a constant,
//! and the projected drift is `−μx`. The remainder of the full drift is the
//! orthogonal drift that drives the fluctuating force.

use crate::error::{Error, Result};
use crate::noise::NoiseStream;

/// Ratio `λ/μ` below which the scale separation assumed by the reduced models is weak.
pub const SCALE_SEPARATION_ADVISORY: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchmarkParams {
    /// Stiffness of the resolved mode.
    pub mu: f64,
    /// Stiffness of the unresolved mode.
    pub lambda: f64,
    /// Valley amplitude.
    pub tau: f64,
    /// Valley wavenumber.
    pub omega: f64,
    /// Inverse temperature.
    pub beta: f64,
    /// Zero-temperature limit: conditional draws collapse onto their mean and
    /// thermal noise is switched off. `beta` is still used wherever it appears
    /// as a finite parameter.
    pub deterministic: bool,
}

impl BenchmarkParams {
    pub fn new(mu: f64, lambda: f64, tau: f64, omega: f64, beta: f64) -> Result<Self> {
        let p = Self {
            mu,
            lambda,
            tau,
            omega,
            beta,
            deterministic: false,
        };
        p.validate()?;
        Ok(p)
    }

    /// `μ = 2, λ = 20, τ = 2, ω = 10, β = 1`.
    pub fn steep_valley() -> Self {
        Self::new(2.0, 20.0, 2.0, 10.0, 1.0).expect("valid constants")
    }

    /// `μ = 2, λ = 20, τ = 0.2, ω = 4, β = 1`.
    pub fn shallow_valley() -> Self {
        Self::new(2.0, 20.0, 0.2, 4.0, 1.0).expect("valid constants")
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn with_deterministic(mut self, deterministic: bool) -> Self {
        self.deterministic = deterministic;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("mu", self.mu),
            ("lambda", self.lambda),
            ("tau", self.tau),
            ("omega", self.omega),
            ("beta", self.beta),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParams(format!(
                    "{name} must be finite and strictly positive, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Warning text when `λ/μ` is below [`SCALE_SEPARATION_ADVISORY`].
    pub fn scale_separation_warning(&self) -> Option<String> {
        let ratio = self.lambda / self.mu;
        (ratio < SCALE_SEPARATION_ADVISORY).then(|| {
            format!("lambda/mu = {ratio} is below {SCALE_SEPARATION_ADVISORY}; the reduced models assume lambda >> mu")
        })
    }

    /// Temperature `1/β`, or zero in the deterministic limit.
    pub fn temperature(&self) -> f64 {
        if self.deterministic {
            0.0
        } else {
            1.0 / self.beta
        }
    }

    /// `1 + τ²ω²cos²(ωh)`, the local slowdown factor of motion along the valley.
    pub fn valley_factor(&self, h: f64) -> f64 {
        let c = (self.omega * h).cos();
        1.0 + self.tau * self.tau * self.omega * self.omega * c * c
    }

    /// Valley floor `τ sin(ωx)`.
    pub fn valley_floor(&self, x: f64) -> f64 {
        self.tau * (self.omega * x).sin()
    }
}

pub fn potential(p: &BenchmarkParams, x: f64, y: f64) -> f64 {
    let d = p.valley_floor(x) - y;
    0.5 * p.mu * x * x + 0.5 * p.lambda * d * d
}

pub fn grad_potential(p: &BenchmarkParams, x: f64, y: f64) -> [f64; 2] {
    let (s, c) = (p.omega * x).sin_cos();
    let d = p.tau * s - y;
    [p.mu * x + p.lambda * p.tau * p.omega * d * c, -p.lambda * d]
}

/// `∇S(h) = μh`; the additive constant of the effective potential never enters.
pub fn effective_potential_grad(p: &BenchmarkParams, h: f64) -> f64 {
    p.mu * h
}

/// Standard deviation of `y` conditioned on `x`: `sqrt(1/(βλ))`, zero when deterministic.
pub fn conditional_y_std(p: &BenchmarkParams) -> f64 {
    (p.temperature() / p.lambda).sqrt()
}

/// One draw of `y ~ N(τ sin(ωx), 1/(βλ))`.
///
/// Always consumes one position of `stream`, including in the deterministic limit.
pub fn conditional_y_sample(p: &BenchmarkParams, x: f64, stream: &mut NoiseStream) -> f64 {
    let z = stream.gaussian();
    if p.deterministic {
        return p.valley_floor(x);
    }
    p.valley_floor(x) + conditional_y_std(p) * z
}

/// The part of the full drift `−∇V` orthogonal to the projected drift `(−μx, 0)`.
pub fn orthogonal_drift(p: &BenchmarkParams, x: f64, y: f64) -> [f64; 2] {
    let (s, c) = (p.omega * x).sin_cos();
    let d = p.tau * s - y;
    [-p.lambda * p.tau * p.omega * d * c, p.lambda * d]
}
