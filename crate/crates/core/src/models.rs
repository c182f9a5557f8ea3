//! Reduced one-dimensional models for the reaction coordinate `h`.
//!
//! Each model is an SDE `dh = b(h) dt + σ(h) sqrt(2/β) dB`:
//!
//! | model             | drift `b(h)`                                   | `σ(h)`                   |
//! |-------------------|------------------------------------------------|--------------------------|
//! | memory-corrected  | `−μh / (1 + τ²ω²cos²(ωh))`                     | `(1 + τ²ω²cos²(ωh))^-½`  |
//! | memory-free       | `−μh`                                          | `1`                      |
//! | naive-memory      | `(λτ²ω²cos²(ωh) − 1)μh + (λ/β)τ²ω³ sin(2ωh)`   | none                     |

use std::fmt;
use std::str::FromStr;

use crate::benchmark::{effective_potential_grad, BenchmarkParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    MemoryCorrected,
    MemoryFree,
    NaiveMemory,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [
        ModelKind::MemoryCorrected,
        ModelKind::MemoryFree,
        ModelKind::NaiveMemory,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::MemoryCorrected => "memory-corrected",
            ModelKind::MemoryFree => "memory-free",
            ModelKind::NaiveMemory => "naive-memory",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s.trim())
            .ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "unknown model '{s}' (expected memory-corrected, memory-free or naive-memory)"
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveModel {
    pub kind: ModelKind,
    pub params: BenchmarkParams,
}

impl EffectiveModel {
    pub fn new(kind: ModelKind, params: BenchmarkParams) -> Result<Self> {
        params.validate()?;
        Ok(Self { kind, params })
    }

    pub fn drift(&self, h: f64) -> f64 {
        let p = &self.params;
        match self.kind {
            ModelKind::MemoryCorrected => -effective_potential_grad(p, h) / p.valley_factor(h),
            // ΦΦᵀ = 1 for the benchmark selector
            ModelKind::MemoryFree => -effective_potential_grad(p, h),
            ModelKind::NaiveMemory => {
                let c = (p.omega * h).cos();
                let t2w2 = p.tau * p.tau * p.omega * p.omega;
                (p.lambda * t2w2 * c * c - 1.0) * p.mu * h
                    + p.lambda / p.beta * t2w2 * p.omega * (2.0 * p.omega * h).sin()
            }
        }
    }

    /// Multiplier `σ(h)` on the thermal increment `sqrt(2dt/β)ξ`.
    pub fn diffusion(&self, h: f64) -> Result<f64> {
        match self.kind {
            ModelKind::MemoryCorrected => Ok(self.params.valley_factor(h).sqrt().recip()),
            ModelKind::MemoryFree => Ok(1.0),
            ModelKind::NaiveMemory => Err(Error::UnsupportedModel(self.kind.name().into())),
        }
    }

    pub fn supports_thermostat(&self) -> bool {
        self.kind != ModelKind::NaiveMemory
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::kernel::memory_integral_closed_form;

    fn model(kind: ModelKind) -> EffectiveModel {
        EffectiveModel::new(kind, BenchmarkParams::steep_valley()).unwrap()
    }

    #[test]
    fn names_round_trip() {
        for k in ModelKind::ALL {
            assert_eq!(k.name().parse::<ModelKind>().unwrap(), k);
        }
        assert!("memoryless".parse::<ModelKind>().is_err());
    }

    #[test]
    fn memory_corrected_drift() {
        let m = model(ModelKind::MemoryCorrected);
        // cos(ωh) = 0
        let h = PI / 20.0;
        assert!((m.drift(h) + 2.0 * h).abs() < 1e-12);
        // cos²(ωh) = 1
        let h = PI / 10.0;
        assert!((m.drift(h) + 2.0 * h / 401.0).abs() < 1e-15);
        assert!((m.drift(1.0) - m.params.mu * -1.0 / m.params.valley_factor(1.0)).abs() < 1e-15);
    }

    #[test]
    fn naive_drift_repels_at_valley_bottom() {
        let m = model(ModelKind::NaiveMemory);
        let h = PI / 10.0;
        let b = m.drift(h);
        let expected = 7999.0 * 2.0 * PI / 10.0;
        assert!((b - expected).abs() < 1e-9, "b = {b}");
        assert!((b - 5026.0).abs() < 0.1);
    }

    #[test]
    fn diffusion_coefficients() {
        let mc = model(ModelKind::MemoryCorrected);
        assert!((mc.diffusion(PI / 20.0).unwrap() - 1.0).abs() < 1e-14);
        assert!((mc.diffusion(0.0).unwrap() - 1.0 / 401f64.sqrt()).abs() < 1e-15);
        assert!((mc.diffusion(0.0).unwrap() - 0.04994).abs() < 1e-5);
        let mf = model(ModelKind::MemoryFree);
        assert_eq!(mf.diffusion(3.3).unwrap(), 1.0);
        assert!(matches!(
            model(ModelKind::NaiveMemory).diffusion(0.0),
            Err(Error::UnsupportedModel(_))
        ));
    }

    #[test]
    fn drifts_vanish_at_origin() {
        for k in ModelKind::ALL {
            assert_eq!(model(k).drift(0.0), 0.0);
        }
    }

    #[test]
    fn memory_corrected_matches_memory_integral() {
        let m = model(ModelKind::MemoryCorrected);
        for i in 0..200 {
            let h = -3.0 + 6.0 * (i as f64 + 0.37) / 200.0;
            let (drift_term, _) = memory_integral_closed_form(&m.params, h);
            let lhs = m.drift(h);
            let rhs = -(m.params.mu * h - drift_term);
            assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()), "h = {h}");
        }
    }

    #[test]
    fn memory_corrected_is_temperature_independent_and_slower() {
        let cold = EffectiveModel::new(
            ModelKind::MemoryCorrected,
            BenchmarkParams::steep_valley().with_beta(100.0),
        )
        .unwrap();
        let hot = model(ModelKind::MemoryCorrected);
        for i in 0..100 {
            let h = -2.0 + 4.0 * i as f64 / 99.0;
            assert_eq!(hot.drift(h).to_bits(), cold.drift(h).to_bits());
            assert!(hot.drift(h).abs() <= hot.params.mu * h.abs());
        }
    }
}
