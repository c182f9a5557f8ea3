//! Mori–Zwanzig coarse-graining of overdamped Langevin dynamics.
//!
//! The crate is organised around a two-dimensional benchmark potential
//! `V(x, y) = μx²/2 + λ(τ sin(ωx) − y)²/2` whose slow coordinate `x` is
//! retained by a linear reaction coordinate. It provides
//!
//! * [`geometry`]: the linear coarse-graining map and its orthogonal complement,
//! * [`benchmark`]: the potential, its gradient and the projected drift fields,
//! * [`noise`] / [`sde`]: counter-based Gaussian streams and Euler–Maruyama integration,
//! * [`kernel`]: Monte Carlo memory-kernel estimation and its closed-form approximation,
//! * [`models`]: the reduced one-dimensional models,
//! * [`experiments`]: the CSV-producing experiment drivers behind the `mzcg` binary.

pub mod benchmark;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod kernel;
pub mod models;
pub mod noise;
pub mod sde;
pub mod stats;

pub use benchmark::BenchmarkParams;
pub use error::{Error, Result};
pub use geometry::{CgMap, SelectorMatrix};
pub use kernel::{KernelEstimate, KernelMatrixEstimate};
pub use models::{EffectiveModel, ModelKind};
pub use noise::NoiseStream;
pub use sde::{IntegratorConfig, Thermostat, Trajectory};
