//! Seeded Monte Carlo plumbing.
//!
//! Every estimator splits its sample budget into fixed-size chunks. Chunk `i`
//! draws from its own ChaCha stream, and partial statistics are merged in
//! chunk order, so results do not depend on the rayon thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub type StreamRng = ChaCha8Rng;

pub const CHUNK: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_samples: usize,
    pub n_discarded: usize,
}

impl McEstimate {
    pub fn exact(value: f64) -> Self {
        McEstimate { mean: value, stderr: 0.0, n_samples: 1, n_discarded: 0 }
    }

    pub fn scale(self, c: f64) -> Self {
        McEstimate { mean: self.mean * c, stderr: self.stderr * c.abs(), ..self }
    }
}

pub fn stream_rng(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draw a base seed from a caller-provided generator.
pub fn derive_seed<R: Rng + ?Sized>(rng: &mut R) -> u64 {
    rng.next_u64()
}

#[derive(Clone, Copy, Default)]
struct Partial {
    n: usize,
    mean: f64,
    m2: f64,
    discarded: usize,
}

impl Partial {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, o: Partial) -> Partial {
        if self.n == 0 {
            return Partial { discarded: self.discarded + o.discarded, ..o };
        }
        if o.n == 0 {
            return Partial { discarded: self.discarded + o.discarded, ..self };
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        let mean = self.mean + d * o.n as f64 / n as f64;
        let m2 = self.m2 + o.m2 + d * d * (self.n as f64) * (o.n as f64) / n as f64;
        Partial { n, mean, m2, discarded: self.discarded + o.discarded }
    }
}

/// Mean of `f` over `n` draws. `f` returns `None` for a discarded sample.
pub fn chunked_mean<F>(seed: u64, n: usize, f: F) -> McEstimate
where
    F: Fn(&mut StreamRng) -> Option<f64> + Sync,
{
    let chunks = n.div_ceil(CHUNK);
    let parts: Vec<Partial> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(seed, c as u64);
            let len = CHUNK.min(n - c * CHUNK);
            let mut p = Partial::default();
            for _ in 0..len {
                match f(&mut rng) {
                    Some(x) => p.push(x),
                    None => p.discarded += 1,
                }
            }
            p
        })
        .collect();
    let total = parts.into_iter().fold(Partial::default(), Partial::merge);
    let stderr = if total.n > 1 {
        (total.m2 / (total.n - 1) as f64 / total.n as f64).sqrt()
    } else {
        0.0
    };
    McEstimate { mean: total.mean, stderr, n_samples: total.n, n_discarded: total.discarded }
}

/// Run `f` once per sample and return the outputs in sample order.
pub fn chunked_collect<T, F>(seed: u64, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut StreamRng) -> T + Sync,
{
    let chunks = n.div_ceil(CHUNK);
    let parts: Vec<Vec<T>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(seed, c as u64);
            let len = CHUNK.min(n - c * CHUNK);
            (0..len).map(|_| f(&mut rng)).collect()
        })
        .collect();
    parts.into_iter().flatten().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_mean_is_half() {
        let e = chunked_mean(3, 50_000, |r| Some(r.random::<f64>()));
        assert!((e.mean - 0.5).abs() < 4.0 * e.stderr + 1e-12);
        assert_eq!(e.n_samples, 50_000);
    }

    #[test]
    fn independent_of_thread_count() {
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| chunked_mean(11, 20_001, |r| Some(r.random::<f64>().powi(2))))
        };
        let a = run(1);
        let b = run(4);
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    }

    #[test]
    fn discards_are_counted() {
        let e = chunked_mean(5, 1000, |r| if r.random::<f64>() < 0.5 { None } else { Some(1.0) });
        assert_eq!(e.n_samples + e.n_discarded, 1000);
        assert_eq!(e.mean, 1.0);
    }
}
