//! Counter-based Gaussian noise.
//!
//! Every draw is a pure function of `(master_seed, stream_id, position)`: the
//! stream is a ChaCha8 keystream selected by the seed and stream id, and draw
//! number `position` always occupies the same four 32-bit words of it. Replaying
//! a stream, or evaluating trajectories on any number of threads, therefore
//! reproduces identical increments.
//!
//! Each position yields a pair of independent standard normals via Box–Muller.
//! A scalar draw is the first member of that pair, so a one-dimensional model and
//! the two-dimensional system driven by the same stream see the same `x` noise.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

const WORDS_PER_DRAW: u128 = 4;
const TWO_POW_MINUS_53: f64 = 1.0 / (1u64 << 53) as f64;

#[derive(Debug, Clone)]
pub struct NoiseStream {
    master_seed: u64,
    stream_id: u64,
    position: u64,
    rng: ChaCha8Rng,
}

impl NoiseStream {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        Self::at(master_seed, stream_id, 0)
    }

    pub fn at(master_seed: u64, stream_id: u64, position: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(stream_id);
        rng.set_word_pos(position as u128 * WORDS_PER_DRAW);
        Self {
            master_seed,
            stream_id,
            position,
            rng,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    pub fn position(&self) -> u64 {
        self.position
    }

    /// A fresh stream for Monte Carlo sample `index`, derived from this one's identifiers.
    pub fn substream(&self, index: u64) -> Self {
        Self::new(self.master_seed, self.stream_id.wrapping_add(index))
    }

    /// Two independent standard normal variates; advances the position by one.
    pub fn gaussian_pair(&mut self) -> [f64; 2] {
        let a = self.rng.next_u64();
        let b = self.rng.next_u64();
        self.position += 1;
        // u1 ∈ (0, 1], u2 ∈ [0, 1)
        let u1 = ((a >> 11) + 1) as f64 * TWO_POW_MINUS_53;
        let u2 = (b >> 11) as f64 * TWO_POW_MINUS_53;
        let r = (-2.0 * u1.ln()).sqrt();
        let (sin, cos) = (std::f64::consts::TAU * u2).sin_cos();
        [r * cos, r * sin]
    }

    /// One standard normal variate: the first component of [`gaussian_pair`](Self::gaussian_pair).
    pub fn gaussian(&mut self) -> f64 {
        self.gaussian_pair()[0]
    }
}
