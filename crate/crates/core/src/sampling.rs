//! Seeded, chunked uniform sampling of the torus `𝕋²`.
//!
//! Sample `i` always comes from chunk `i / CHUNK` on the ChaCha stream numbered
//! by that chunk, so results are identical for every thread count.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub const CHUNK: u64 = 1 << 14;

fn chunk_rng(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

/// Run `per_chunk` over every chunk of `samples` uniform points `(x, t)` and
/// return the per-chunk results in chunk order.
pub fn map_chunks<T, F>(seed: u64, samples: u64, per_chunk: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut dyn Iterator<Item = (f64, f64)>) -> T + Sync,
{
    let chunks = samples.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let count = CHUNK.min(samples - c * CHUNK);
            let mut rng = chunk_rng(seed, c);
            let mut points = (0..count).map(move |_| {
                let x: f64 = rng.gen();
                let t: f64 = rng.gen();
                (x, t)
            });
            per_chunk(&mut points)
        })
        .collect()
}

/// Streaming mean/variance (Welford) with Chan's pairwise merge.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub count: u64,
    pub mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, v: f64) {
        self.count += 1;
        let delta = v - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (v - self.mean);
    }

    pub fn merge(&self, other: &Moments) -> Moments {
        if self.count == 0 {
            return *other;
        }
        if other.count == 0 {
            return *self;
        }
        let n = self.count + other.count;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * other.count as f64 / n as f64;
        let m2 = self.m2
            + other.m2
            + delta * delta * (self.count as f64 * other.count as f64) / n as f64;
        Moments { count: n, mean, m2 }
    }

    /// Sample standard deviation (n − 1 denominator).
    pub fn std_dev(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2 / (self.count - 1) as f64).max(0.0).sqrt()
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.std_dev() / (self.count as f64).sqrt()
        }
    }
}
