//! Reproducible random streams.
//!
//! Each [`RngStream`] names a ChaCha20 keystream: the seed fixes the key and
//! the stream id selects one of 2^64 independent nonces, so replication `r`
//! of a simulation can draw from stream `r` regardless of execution order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
    /// Position in the keystream, in 32-bit words.
    #[serde(default)]
    pub word_pos: u128,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DrawLaw {
    Uniform,
    Normal,
    Gamma { shape: f64, scale: f64 },
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self {
            seed,
            stream_id,
            word_pos: 0,
        }
    }

    /// A generator positioned at this descriptor.
    pub fn generator(&self) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng.set_word_pos(self.word_pos);
        rng
    }

    /// The descriptor for the state `rng` has advanced to.
    pub fn advanced_to(&self, rng: &ChaCha20Rng) -> Self {
        Self {
            word_pos: rng.get_word_pos(),
            ..*self
        }
    }

    /// Draws `n` values and returns them with the advanced descriptor.
    pub fn draw(&self, law: DrawLaw, n: usize) -> Result<(Vec<f64>, RngStream)> {
        if n == 0 {
            return domain("rng_draws needs n >= 1");
        }
        let mut rng = self.generator();
        let values = match law {
            DrawLaw::Uniform => (0..n).map(|_| rng.random::<f64>()).collect(),
            DrawLaw::Normal => (0..n).map(|_| StandardNormal.sample(&mut rng)).collect(),
            DrawLaw::Gamma { shape, scale } => {
                let dist = gamma_law(shape, scale)?;
                (0..n).map(|_| dist.sample(&mut rng)).collect()
            }
        };
        Ok((values, self.advanced_to(&rng)))
    }
}

pub(crate) fn gamma_law(shape: f64, scale: f64) -> Result<Gamma<f64>> {
    if !(shape > 0.0 && shape.is_finite() && scale > 0.0 && scale.is_finite()) {
        return domain(format!("gamma law needs positive shape and scale, got ({shape}, {scale})"));
    }
    Gamma::new(shape, scale).or_else(|e| domain(e.to_string()))
}
