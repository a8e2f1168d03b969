//! Communication compression operators.
//!
//! Unbiased operators Q satisfy E[Q(x)] = x and E||Q(x) - x||^2 <= omega ||x||^2;
//! biased (contractive) ones satisfy ||C(x) - x||^2 <= (1 - 1/delta) ||x||^2.
//! RandK is scaled by dim/k — the scaling is forced by unbiasedness even
//! though sparsification is often quoted without it.
//!
//! Wire-size model: a transmitted sparse coordinate is index + value =
//! 96 bits (32-bit index, 64-bit float); a full dense vector is dim * 64 bits
//! with no index overhead.

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::vector::Vector;

pub const BITS_PER_SPARSE_COORD: u64 = 96;
pub const BITS_PER_DENSE_COORD: u64 = 64;

/// Output of one compression call: the compressed vector plus the number of
/// coordinates and bits that would cross the wire.
#[derive(Clone, Debug)]
pub struct Compressed {
    pub vector: Vector,
    pub coords: u64,
    pub bits: u64,
}

fn full_packet(x: &Vector) -> Compressed {
    Compressed {
        vector: x.clone(),
        coords: x.dim() as u64,
        bits: x.dim() as u64 * BITS_PER_DENSE_COORD,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum UnbiasedCompressor {
    Identity,
    RandK { k: usize },
}

impl UnbiasedCompressor {
    pub fn parse(kind: &str, k: Option<usize>) -> Result<Self> {
        match kind {
            "identity" => Ok(UnbiasedCompressor::Identity),
            "rand_k" | "randk" => {
                let k = k.ok_or(Error::MissingParam("compressor.k"))?;
                Ok(UnbiasedCompressor::RandK { k })
            }
            other => Err(Error::Config(format!(
                "unknown unbiased compressor kind `{other}`"
            ))),
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if let UnbiasedCompressor::RandK { k } = self {
            if *k == 0 || *k > dim {
                return Err(Error::InvalidParam {
                    name: "compressor.k",
                    msg: format!("must be in 1..={dim}, got {k}"),
                });
            }
        }
        Ok(())
    }

    /// Variance parameter omega: 0 for identity, dim/k - 1 for RandK.
    pub fn omega(&self, dim: usize) -> f64 {
        match self {
            UnbiasedCompressor::Identity => 0.0,
            UnbiasedCompressor::RandK { k } => dim as f64 / *k as f64 - 1.0,
        }
    }

    pub fn compress(&self, x: &Vector, rng: &mut RngStream) -> Compressed {
        match self {
            UnbiasedCompressor::Identity => full_packet(x),
            UnbiasedCompressor::RandK { k } => {
                let subset = rng.subset(x.dim(), *k);
                rand_k_with_subset(x, *k, &subset)
            }
        }
    }
}

/// RandK restricted to a given support, the deterministic core used both by
/// the sampler and by exact subset-enumeration tests.
pub fn rand_k_with_subset(x: &Vector, k: usize, subset: &[usize]) -> Compressed {
    debug_assert_eq!(subset.len(), k);
    let scale = x.dim() as f64 / k as f64;
    let mut out = Vector::zeros(x.dim());
    for &j in subset {
        out[j] = scale * x[j];
    }
    Compressed {
        vector: out,
        coords: k as u64,
        bits: k as u64 * BITS_PER_SPARSE_COORD,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BiasedCompressor {
    Identity,
    TopK { k: usize },
}

impl BiasedCompressor {
    pub fn parse(kind: &str, k: Option<usize>) -> Result<Self> {
        match kind {
            "identity" => Ok(BiasedCompressor::Identity),
            "top_k" | "topk" => {
                let k = k.ok_or(Error::MissingParam("compressor.k"))?;
                Ok(BiasedCompressor::TopK { k })
            }
            other => Err(Error::Config(format!(
                "unknown biased compressor kind `{other}`"
            ))),
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if let BiasedCompressor::TopK { k } = self {
            if *k == 0 || *k > dim {
                return Err(Error::InvalidParam {
                    name: "compressor.k",
                    msg: format!("must be in 1..={dim}, got {k}"),
                });
            }
        }
        Ok(())
    }

    /// Contraction parameter delta: 1 for identity, dim/k for TopK.
    pub fn delta(&self, dim: usize) -> f64 {
        match self {
            BiasedCompressor::Identity => 1.0,
            BiasedCompressor::TopK { k } => dim as f64 / *k as f64,
        }
    }

    pub fn compress(&self, x: &Vector) -> Compressed {
        match self {
            BiasedCompressor::Identity => full_packet(x),
            BiasedCompressor::TopK { k } => top_k(x, *k),
        }
    }
}

/// Keep the k largest-magnitude entries unscaled, zero the rest; magnitude
/// ties break toward the lower index. Deterministic.
pub fn top_k(x: &Vector, k: usize) -> Compressed {
    let mut order: Vec<usize> = (0..x.dim()).collect();
    order.sort_by(|&a, &b| {
        x[b].abs()
            .partial_cmp(&x[a].abs())
            .unwrap()
            .then(a.cmp(&b))
    });
    let mut out = Vector::zeros(x.dim());
    for &j in order.iter().take(k) {
        out[j] = x[j];
    }
    Compressed {
        vector: out,
        coords: k as u64,
        bits: k as u64 * BITS_PER_SPARSE_COORD,
    }
}

/// All k-subsets of 0..n in lexicographic order, for exact enumeration of
/// RandK randomness in tests and certificates.
pub fn k_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for j in start..n {
            cur.push(j);
            rec(j + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamKind;
    use proptest::prelude::*;

    #[test]
    fn rand_k_scaling_on_fixed_subset() {
        let x = Vector::from_vec(vec![1.0, 2.0, 3.0, 4.0]);
        let c = rand_k_with_subset(&x, 2, &[0, 2]);
        assert_eq!(c.vector.as_slice(), &[2.0, 0.0, 6.0, 0.0]);
        assert_eq!(c.coords, 2);
        assert_eq!(c.bits, 192);
    }

    #[test]
    fn rand_k_full_budget_is_identity() {
        let x = Vector::from_vec(vec![1.0, -2.0, 0.5]);
        let mut rng = RngStream::new(1, 0, 0, StreamKind::Compressor);
        let q = UnbiasedCompressor::RandK { k: 3 };
        let c = q.compress(&x, &mut rng);
        assert_eq!(c.vector.as_slice(), x.as_slice());
        assert_eq!(q.omega(3), 0.0);
    }

    #[test]
    fn rand_k_enumeration_certifies_unbiasedness_and_omega() {
        // dim=4, k=2: mean over all 6 subsets equals x, and the mean squared
        // deviation equals omega ||x||^2 with omega = 1.
        let x = Vector::from_vec(vec![1.0, 2.0, 3.0, 4.0]);
        let subsets = k_subsets(4, 2);
        assert_eq!(subsets.len(), 6);
        let mut mean = Vector::zeros(4);
        let mut dev = 0.0;
        for s in &subsets {
            let c = rand_k_with_subset(&x, 2, s);
            mean.add_scaled(1.0 / 6.0, &c.vector);
            dev += c.vector.dist_sq(&x) / 6.0;
        }
        for j in 0..4 {
            assert!((mean[j] - x[j]).abs() < 1e-12);
        }
        let omega = UnbiasedCompressor::RandK { k: 2 }.omega(4);
        assert_eq!(omega, 1.0);
        assert!((dev - omega * x.norm_sq()).abs() < 1e-9);
    }

    #[test]
    fn top_k_selects_by_magnitude() {
        let x = Vector::from_vec(vec![1.0, -3.0, 2.0]);
        let c = top_k(&x, 1);
        assert_eq!(c.vector.as_slice(), &[0.0, -3.0, 0.0]);
    }

    #[test]
    fn top_k_full_budget_is_exact() {
        let x = Vector::from_vec(vec![1.0, -3.0, 2.0]);
        let c = top_k(&x, 3);
        assert_eq!(c.vector.as_slice(), x.as_slice());
        assert_eq!(c.vector.dist_sq(&x), 0.0);
    }

    #[test]
    fn top_k_contraction_tight_on_all_equal() {
        let x = Vector::from_vec(vec![1.0, 1.0, 1.0]);
        let c = top_k(&x, 1);
        let delta = BiasedCompressor::TopK { k: 1 }.delta(3);
        assert_eq!(delta, 3.0);
        let err = c.vector.dist_sq(&x);
        assert!((err - (1.0 - 1.0 / delta) * x.norm_sq()).abs() < 1e-12);
        assert_eq!(err, 2.0);
        // worst case over sign/permutation grid of all-equal magnitudes
        for signs in 0..8u32 {
            let v = Vector::from_vec(
                (0..3)
                    .map(|j| if signs >> j & 1 == 1 { -1.0 } else { 1.0 })
                    .collect(),
            );
            let cv = top_k(&v, 1);
            assert!((cv.vector.dist_sq(&v) - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn top_k_ties_break_low_index() {
        let x = Vector::from_vec(vec![2.0, -2.0, 2.0]);
        let c = top_k(&x, 2);
        assert_eq!(c.vector.as_slice(), &[2.0, -2.0, 0.0]);
    }

    #[test]
    fn parameter_certificates() {
        assert_eq!(UnbiasedCompressor::RandK { k: 2 }.omega(10), 4.0);
        assert_eq!(BiasedCompressor::TopK { k: 2 }.delta(10), 5.0);
        assert_eq!(UnbiasedCompressor::Identity.omega(10), 0.0);
        assert_eq!(BiasedCompressor::Identity.delta(10), 1.0);
    }

    #[test]
    fn out_of_range_budget_rejected() {
        assert!(UnbiasedCompressor::RandK { k: 0 }.validate(4).is_err());
        assert!(UnbiasedCompressor::RandK { k: 5 }.validate(4).is_err());
        assert!(BiasedCompressor::TopK { k: 9 }.validate(4).is_err());
    }

    proptest! {
        #[test]
        fn top_k_contracts(vals in proptest::collection::vec(-10f64..10.0, 2..7), k in 1usize..6) {
            let dim = vals.len();
            let k = k.min(dim);
            let x = Vector::from_vec(vals);
            let c = top_k(&x, k);
            let delta = dim as f64 / k as f64;
            prop_assert!(c.vector.dist_sq(&x) <= (1.0 - 1.0/delta) * x.norm_sq() + 1e-12);
            prop_assert_eq!(c.coords, k as u64);
        }

        #[test]
        fn rand_k_support_and_accounting(vals in proptest::collection::vec(-10f64..10.0, 2..7), k in 1usize..6, seed in 0u64..1000) {
            let dim = vals.len();
            let k = k.min(dim);
            let x = Vector::from_vec(vals);
            let mut rng = RngStream::new(seed, 0, 0, StreamKind::Compressor);
            let c = UnbiasedCompressor::RandK { k }.compress(&x, &mut rng);
            let nz = c.vector.iter().filter(|v| **v != 0.0).count();
            prop_assert!(nz <= k);
            prop_assert_eq!(c.coords, k as u64);
            prop_assert_eq!(c.bits, 96 * k as u64);
        }
    }
}
