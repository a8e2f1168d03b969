use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Purpose tag separating independent randomness consumers that share the
/// same (worker, iteration) slot, e.g. a compressor draw vs. an inner batch
/// draw inside one distributed round.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StreamKind {
    /// Batch / coordinate sampling of single-machine estimators.
    Sampling,
    /// Shared per-round coin (Bernoulli branch of MARINA-style rounds).
    Coin,
    /// Compressor randomness.
    Compressor,
    /// Inner minibatch randomness of variance-reduced distributed rounds.
    InnerBatch,
    /// Worker selection.
    WorkerChoice,
}

impl StreamKind {
    fn tag(self) -> u64 {
        match self {
            StreamKind::Sampling => 0,
            StreamKind::Coin => 1,
            StreamKind::Compressor => 2,
            StreamKind::InnerBatch => 3,
            StreamKind::WorkerChoice => 4,
        }
    }
}

/// Counter-based deterministic random stream.
///
/// The stream key is a hash of (seed, worker, iteration, kind), so any
/// (worker, round) cell of a simulation can be replayed independently of
/// execution order, and identical keys yield identical draw sequences on
/// every platform.
pub struct RngStream {
    rng: ChaCha8Rng,
}

fn splitmix(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(seed: u64, worker: u64, iteration: u64, kind: StreamKind) -> Self {
        let mut state = seed;
        let mut acc = splitmix(&mut state);
        for v in [worker, iteration, kind.tag()] {
            state ^= v.wrapping_mul(0xD6E8_FEB8_6659_FD93);
            acc ^= splitmix(&mut state);
        }
        let mut key = [0u8; 32];
        let mut s = acc;
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix(&mut s).to_le_bytes());
        }
        RngStream {
            rng: ChaCha8Rng::from_seed(key),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform double in [0, 1) with 53 bits of precision.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    /// Unbiased uniform index in [0, n) by rejection.
    pub fn index(&mut self, n: usize) -> usize {
        assert!(n > 0, "index range must be nonempty");
        let n = n as u64;
        let limit = u64::MAX - u64::MAX % n;
        loop {
            let v = self.next_u64();
            if v < limit {
                return (v % n) as usize;
            }
        }
    }

    /// Index drawn with probability proportional to `weights[i]`.
    pub fn weighted_index(&mut self, weights: &[f64]) -> usize {
        let total: f64 = weights.iter().sum();
        let mut target = self.uniform() * total;
        for (i, w) in weights.iter().enumerate() {
            target -= w;
            if target < 0.0 {
                return i;
            }
        }
        weights.len() - 1
    }

    /// Uniform size-`b` subset of [0, n) without replacement, returned
    /// sorted ascending so downstream summation order is deterministic.
    /// Floyd's algorithm.
    pub fn subset(&mut self, n: usize, b: usize) -> Vec<usize> {
        assert!(b <= n, "subset size exceeds range");
        let mut chosen = std::collections::BTreeSet::new();
        for j in n - b..n {
            let t = self.index(j + 1);
            if !chosen.insert(t) {
                chosen.insert(j);
            }
        }
        chosen.into_iter().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_keys_reproduce() {
        let mut a = RngStream::new(7, 3, 11, StreamKind::Compressor);
        let mut b = RngStream::new(7, 3, 11, StreamKind::Compressor);
        for _ in 0..32 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn distinct_slots_decorrelate() {
        let a = RngStream::new(7, 0, 0, StreamKind::Sampling).next_u64();
        let b = RngStream::new(7, 1, 0, StreamKind::Sampling).next_u64();
        let c = RngStream::new(7, 0, 1, StreamKind::Sampling).next_u64();
        let d = RngStream::new(7, 0, 0, StreamKind::Coin).next_u64();
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }

    #[test]
    fn subset_is_sorted_and_in_range() {
        let mut rng = RngStream::new(1, 0, 0, StreamKind::Sampling);
        for _ in 0..100 {
            let s = rng.subset(10, 4);
            assert_eq!(s.len(), 4);
            assert!(s.windows(2).all(|w| w[0] < w[1]));
            assert!(s.iter().all(|&i| i < 10));
        }
    }

    #[test]
    fn subset_full_range_is_identity() {
        let mut rng = RngStream::new(1, 0, 0, StreamKind::Sampling);
        assert_eq!(rng.subset(5, 5), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn index_covers_range_uniformly() {
        let mut rng = RngStream::new(9, 0, 0, StreamKind::Sampling);
        let mut counts = [0usize; 5];
        for _ in 0..50_000 {
            counts[rng.index(5)] += 1;
        }
        for c in counts {
            assert!((c as f64 - 10_000.0).abs() < 600.0, "counts {c}");
        }
    }

    #[test]
    fn weighted_index_respects_weights() {
        let mut rng = RngStream::new(9, 0, 0, StreamKind::WorkerChoice);
        let mut counts = [0usize; 2];
        for _ in 0..40_000 {
            counts[rng.weighted_index(&[1.0, 3.0])] += 1;
        }
        let frac = counts[1] as f64 / 40_000.0;
        assert!((frac - 0.75).abs() < 0.01, "frac {frac}");
    }
}
