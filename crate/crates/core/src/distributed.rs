//! Deterministic in-process simulation of a parameter server with n workers.
//!
//! Each worker owns one shard of the finite sum (its local objective is the
//! shard mean) and the server aggregates with weights m_i/n, which reduces
//! to the uniform average whenever shards have equal sizes. Workers execute
//! sequentially in id order, but every draw comes from a counter-based
//! stream keyed by (seed, worker, round), so results are independent of
//! execution order.
//!
//! Uplink traffic (worker -> server) is metered under the wire model of the
//! compression module and is the headline communication metric; downlink
//! broadcasts are tracked separately.
//!
//! Each round type splits into a `Draw` (plain data holding every random
//! outcome) and an `apply` consuming it, so exhaustive enumeration tests
//! drive exactly the code the sampler drives.

use crate::compression::{
    rand_k_with_subset, BiasedCompressor, Compressed, UnbiasedCompressor, BITS_PER_DENSE_COORD,
};
use crate::error::{Error, Result};
use crate::estimators::{Counters, GradientEstimator};
use crate::objective::{Dataset, Partition};
use crate::rng::{RngStream, StreamKind};
use crate::vector::Vector;

fn worker_stream(seed: u64, worker: usize, round: u64, kind: StreamKind) -> RngStream {
    RngStream::new(seed, worker as u64 + 1, round, kind)
}

fn server_stream(seed: u64, round: u64, kind: StreamKind) -> RngStream {
    RngStream::new(seed, 0, round, kind)
}

/// One random compression outcome: either the dense pass-through of the
/// identity operator or the support of a RandK draw.
#[derive(Clone, Debug)]
pub enum PacketDraw {
    Dense,
    Subset(Vec<usize>),
}

fn draw_packet(q: &UnbiasedCompressor, dim: usize, rng: &mut RngStream) -> PacketDraw {
    match q {
        UnbiasedCompressor::Identity => PacketDraw::Dense,
        UnbiasedCompressor::RandK { k } => PacketDraw::Subset(rng.subset(dim, *k)),
    }
}

fn packet_with(q: &UnbiasedCompressor, x: &Vector, draw: &PacketDraw) -> Compressed {
    match (q, draw) {
        (UnbiasedCompressor::Identity, PacketDraw::Dense) => Compressed {
            vector: x.clone(),
            coords: x.dim() as u64,
            bits: x.dim() as u64 * BITS_PER_DENSE_COORD,
        },
        (UnbiasedCompressor::RandK { k }, PacketDraw::Subset(s)) => rand_k_with_subset(x, *k, s),
        _ => panic!("packet draw does not match compressor kind"),
    }
}

/// Cumulative uplink accounting across rounds.
#[derive(Clone, Copy, Debug, Default)]
struct Uplink {
    bits: u64,
    coords: u64,
    rounds: u64,
    downlink_bits: u64,
}

impl Uplink {
    fn packet(&mut self, c: &Compressed) {
        self.bits += c.bits;
        self.coords += c.coords;
    }

    fn dense_vector(&mut self, dim: usize) {
        self.bits += dim as u64 * BITS_PER_DENSE_COORD;
        self.coords += dim as u64;
    }

    fn end_round(&mut self, n_workers: usize, dim: usize) {
        self.rounds += 1;
        // one broadcast vector per round
        self.downlink_bits += (n_workers * dim) as u64 * BITS_PER_DENSE_COORD;
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BitsReport {
    pub total_bits: u64,
    pub per_round_mean: f64,
}

macro_rules! bits_report_impl {
    () => {
        /// Uplink totals; requires at least one executed round.
        pub fn bits_report(&self) -> Result<BitsReport> {
            if self.uplink.rounds == 0 {
                return Err(Error::InvalidParam {
                    name: "rounds",
                    msg: "no rounds executed yet".into(),
                });
            }
            Ok(BitsReport {
                total_bits: self.uplink.bits,
                per_round_mean: self.uplink.bits as f64 / self.uplink.rounds as f64,
            })
        }

        /// Mean transmitted coordinates per worker per round.
        pub fn mean_coords_per_worker_round(&self) -> f64 {
            self.uplink.coords as f64
                / (self.partition.n_workers() as u64 * self.uplink.rounds.max(1)) as f64
        }

        pub fn rounds(&self) -> u64 {
            self.uplink.rounds
        }
    };
}

fn shard_gradients(data: &Dataset, partition: &Partition, x: &Vector) -> Vec<Vector> {
    (0..partition.n_workers())
        .map(|w| data.mean_gradient_over(partition.shard(w), x))
        .collect()
}

fn weighted_sum(partition: &Partition, vectors: &[Vector], dim: usize) -> Vector {
    let mut acc = Vector::zeros(dim);
    for (w, v) in vectors.iter().enumerate() {
        acc.add_scaled(partition.weight(w), v);
    }
    acc
}

fn sync_counters(c: &mut Counters, uplink: &Uplink) {
    c.bits_sent = uplink.bits;
    c.coords_sent = uplink.coords;
    c.downlink_bits = uplink.downlink_bits;
}

// ---------------------------------------------------------------------------
// DIANA

#[derive(Clone, Debug)]
pub struct DianaDraw {
    pub packets: Vec<PacketDraw>,
}

/// Shift-compression rounds: every worker compresses the difference between
/// its fresh local gradient and its memory vector; memories move by alpha
/// times the compressed packet on both sides.
pub struct Diana {
    partition: Partition,
    compressor: UnbiasedCompressor,
    alpha: f64,
    worker_shift: Vec<Vector>,
    server_shift: Vector,
    g: Vector,
    counters: Counters,
    uplink: Uplink,
}

impl Diana {
    pub fn new(
        data: &Dataset,
        partition: Partition,
        compressor: UnbiasedCompressor,
        alpha: f64,
    ) -> Result<Self> {
        compressor.validate(data.dim())?;
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidParam {
                name: "alpha",
                msg: format!("must be in (0,1], got {alpha}"),
            });
        }
        let x0 = Vector::zeros(data.dim());
        let worker_shift = shard_gradients(data, &partition, &x0);
        let server_shift = weighted_sum(&partition, &worker_shift, data.dim());
        let g = data.full_gradient(&x0);
        Ok(Diana {
            partition,
            compressor,
            alpha,
            worker_shift,
            server_shift,
            g,
            counters: Counters {
                grad_calls: data.n_samples() as u64,
                ..Counters::default()
            },
            uplink: Uplink::default(),
        })
    }

    pub fn draw(&self, data: &Dataset, k: u64, seed: u64) -> DianaDraw {
        let packets = (0..self.partition.n_workers())
            .map(|w| {
                let mut rng = worker_stream(seed, w, k, StreamKind::Compressor);
                draw_packet(&self.compressor, data.dim(), &mut rng)
            })
            .collect();
        DianaDraw { packets }
    }

    pub fn apply(&mut self, data: &Dataset, x_next: &Vector, draw: &DianaDraw) {
        let dim = data.dim();
        let mut packet_mean = Vector::zeros(dim);
        for w in 0..self.partition.n_workers() {
            let grad_w = data.mean_gradient_over(self.partition.shard(w), x_next);
            self.counters.grad_calls += self.partition.shard(w).len() as u64;
            let mut delta = grad_w;
            delta.add_scaled(-1.0, &self.worker_shift[w]);
            let packet = packet_with(&self.compressor, &delta, &draw.packets[w]);
            self.uplink.packet(&packet);
            self.worker_shift[w].add_scaled(self.alpha, &packet.vector);
            packet_mean.add_scaled(self.partition.weight(w), &packet.vector);
        }
        // estimate uses the pre-update server shift plus the fresh packets
        let mut g = self.server_shift.clone();
        g.add_scaled(1.0, &packet_mean);
        self.g = g;
        self.server_shift.add_scaled(self.alpha, &packet_mean);
        self.uplink.end_round(self.partition.n_workers(), dim);
        sync_counters(&mut self.counters, &self.uplink);
        debug_assert!(self.shift_consistency_gap() < 1e-9);
    }

    /// Distance between the server shift and the weighted mean of worker
    /// shifts; an invariant of the protocol up to rounding.
    pub fn shift_consistency_gap(&self) -> f64 {
        let mean = weighted_sum(&self.partition, &self.worker_shift, self.server_shift.dim());
        mean.dist_sq(&self.server_shift).sqrt()
    }

    bits_report_impl!();
}

impl GradientEstimator for Diana {
    fn gradient(&self) -> &Vector {
        &self.g
    }

    fn step(&mut self, data: &Dataset, x_next: &Vector, _x_curr: &Vector, k: u64, seed: u64) {
        let draw = self.draw(data, k, seed);
        self.apply(data, x_next, &draw);
    }

    fn counters(&self) -> &Counters {
        &self.counters
    }

    fn sigma_sq(&self, data: &Dataset, x_curr: &Vector) -> Option<f64> {
        let grads = shard_gradients(data, &self.partition, x_curr);
        Some(
            grads
                .iter()
                .zip(&self.worker_shift)
                .map(|(g, h)| g.dist_sq(h))
                .sum(),
        )
    }
}

// ---------------------------------------------------------------------------
// MARINA / VR-MARINA

#[derive(Clone, Debug)]
pub struct MarinaDraw {
    pub exact: bool,
    pub packets: Vec<PacketDraw>,
}

/// Difference-compression rounds with a shared per-round coin: on the rare
/// exact branch all workers upload uncompressed local gradients, otherwise
/// compressed gradient differences accumulate onto both worker and server
/// estimates.
pub struct Marina {
    partition: Partition,
    compressor: UnbiasedCompressor,
    p: f64,
    worker_est: Vec<Vector>,
    g: Vector,
    counters: Counters,
    uplink: Uplink,
}

impl Marina {
    pub fn new(
        data: &Dataset,
        partition: Partition,
        compressor: UnbiasedCompressor,
        p: f64,
    ) -> Result<Self> {
        compressor.validate(data.dim())?;
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::InvalidParam {
                name: "p",
                msg: format!("must be in (0,1], got {p}"),
            });
        }
        let x0 = Vector::zeros(data.dim());
        let worker_est = shard_gradients(data, &partition, &x0);
        let g = data.full_gradient(&x0);
        Ok(Marina {
            partition,
            compressor,
            p,
            worker_est,
            g,
            counters: Counters {
                grad_calls: data.n_samples() as u64,
                ..Counters::default()
            },
            uplink: Uplink::default(),
        })
    }

    pub fn draw(&self, data: &Dataset, k: u64, seed: u64) -> MarinaDraw {
        // one coin per round: the server broadcasts the branch
        let exact = server_stream(seed, k, StreamKind::Coin).bernoulli(self.p);
        let packets = if exact {
            vec![PacketDraw::Dense; self.partition.n_workers()]
        } else {
            (0..self.partition.n_workers())
                .map(|w| {
                    let mut rng = worker_stream(seed, w, k, StreamKind::Compressor);
                    draw_packet(&self.compressor, data.dim(), &mut rng)
                })
                .collect()
        };
        MarinaDraw { exact, packets }
    }

    pub fn apply(&mut self, data: &Dataset, x_next: &Vector, x_curr: &Vector, draw: &MarinaDraw) {
        let dim = data.dim();
        let mut acc = Vector::zeros(dim);
        for w in 0..self.partition.n_workers() {
            let shard = self.partition.shard(w);
            if draw.exact {
                let grad_w = data.mean_gradient_over(shard, x_next);
                self.counters.grad_calls += shard.len() as u64;
                let mut c = grad_w.clone();
                c.add_scaled(-1.0, &self.worker_est[w]);
                self.uplink.dense_vector(dim);
                self.worker_est[w] = grad_w;
                acc.add_scaled(self.partition.weight(w), &c);
            } else {
                let diff = data.mean_gradient_diff_over(shard, x_next, x_curr);
                self.counters.grad_calls += 2 * shard.len() as u64;
                let packet = packet_with(&self.compressor, &diff, &draw.packets[w]);
                self.uplink.packet(&packet);
                self.worker_est[w].add_scaled(1.0, &packet.vector);
                acc.add_scaled(self.partition.weight(w), &packet.vector);
            }
        }
        self.g.add_scaled(1.0, &acc);
        self.uplink.end_round(self.partition.n_workers(), dim);
        sync_counters(&mut self.counters, &self.uplink);
        debug_assert!(self.estimate_consistency_gap() < 1e-9);
    }

    /// Distance between the server estimate and the weighted mean of worker
    /// estimates.
    pub fn estimate_consistency_gap(&self) -> f64 {
        let mean = weighted_sum(&self.partition, &self.worker_est, self.g.dim());
        mean.dist_sq(&self.g).sqrt()
    }

    bits_report_impl!();
}

impl GradientEstimator for Marina {
    fn gradient(&self) -> &Vector {
        &self.g
    }

    fn step(&mut self, data: &Dataset, x_next: &Vector, x_curr: &Vector, k: u64, seed: u64) {
        let draw = self.draw(data, k, seed);
        self.apply(data, x_next, x_curr, &draw);
    }

    fn counters(&self) -> &Counters {
        &self.counters
    }
}

#[derive(Clone, Debug)]
pub struct VrMarinaDraw {
    pub exact: bool,
    /// Absolute sample indices of each worker's inner minibatch.
    pub inner: Vec<Vec<usize>>,
    pub packets: Vec<PacketDraw>,
}

/// MARINA rounds whose compressed branch uses an inner minibatch of the
/// worker's shard for the gradient difference.
pub struct VrMarina {
    partition: Partition,
    compressor: UnbiasedCompressor,
    p: f64,
    b_inner: usize,
    worker_est: Vec<Vector>,
    g: Vector,
    counters: Counters,
    uplink: Uplink,
}

impl VrMarina {
    pub fn new(
        data: &Dataset,
        partition: Partition,
        compressor: UnbiasedCompressor,
        p: f64,
        b_inner: usize,
    ) -> Result<Self> {
        compressor.validate(data.dim())?;
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::InvalidParam {
                name: "p",
                msg: format!("must be in (0,1], got {p}"),
            });
        }
        let min_shard = (0..partition.n_workers())
            .map(|w| partition.shard(w).len())
            .min()
            .unwrap();
        if b_inner == 0 || b_inner > min_shard {
            return Err(Error::InvalidParam {
                name: "b",
                msg: format!("inner batch must be in 1..={min_shard}, got {b_inner}"),
            });
        }
        let x0 = Vector::zeros(data.dim());
        let worker_est = shard_gradients(data, &partition, &x0);
        let g = data.full_gradient(&x0);
        Ok(VrMarina {
            partition,
            compressor,
            p,
            b_inner,
            worker_est,
            g,
            counters: Counters {
                grad_calls: data.n_samples() as u64,
                ..Counters::default()
            },
            uplink: Uplink::default(),
        })
    }

    pub fn draw(&self, data: &Dataset, k: u64, seed: u64) -> VrMarinaDraw {
        let exact = server_stream(seed, k, StreamKind::Coin).bernoulli(self.p);
        let n_workers = self.partition.n_workers();
        if exact {
            return VrMarinaDraw {
                exact,
                inner: vec![Vec::new(); n_workers],
                packets: vec![PacketDraw::Dense; n_workers],
            };
        }
        let inner = (0..n_workers)
            .map(|w| {
                let shard = self.partition.shard(w);
                let mut rng = worker_stream(seed, w, k, StreamKind::InnerBatch);
                rng.subset(shard.len(), self.b_inner)
                    .into_iter()
                    .map(|pos| shard[pos])
                    .collect()
            })
            .collect();
        let packets = (0..n_workers)
            .map(|w| {
                let mut rng = worker_stream(seed, w, k, StreamKind::Compressor);
                draw_packet(&self.compressor, data.dim(), &mut rng)
            })
            .collect();
        VrMarinaDraw {
            exact,
            inner,
            packets,
        }
    }

    pub fn apply(&mut self, data: &Dataset, x_next: &Vector, x_curr: &Vector, draw: &VrMarinaDraw) {
        let dim = data.dim();
        let mut acc = Vector::zeros(dim);
        for w in 0..self.partition.n_workers() {
            let shard = self.partition.shard(w);
            if draw.exact {
                let grad_w = data.mean_gradient_over(shard, x_next);
                self.counters.grad_calls += shard.len() as u64;
                let mut c = grad_w.clone();
                c.add_scaled(-1.0, &self.worker_est[w]);
                self.uplink.dense_vector(dim);
                self.worker_est[w] = grad_w;
                acc.add_scaled(self.partition.weight(w), &c);
            } else {
                let diff = data.mean_gradient_diff_over(&draw.inner[w], x_next, x_curr);
                self.counters.grad_calls += 2 * draw.inner[w].len() as u64;
                let packet = packet_with(&self.compressor, &diff, &draw.packets[w]);
                self.uplink.packet(&packet);
                self.worker_est[w].add_scaled(1.0, &packet.vector);
                acc.add_scaled(self.partition.weight(w), &packet.vector);
            }
        }
        self.g.add_scaled(1.0, &acc);
        self.uplink.end_round(self.partition.n_workers(), dim);
        sync_counters(&mut self.counters, &self.uplink);
    }

    bits_report_impl!();
}

impl GradientEstimator for VrMarina {
    fn gradient(&self) -> &Vector {
        &self.g
    }

    fn step(&mut self, data: &Dataset, x_next: &Vector, x_curr: &Vector, k: u64, seed: u64) {
        let draw = self.draw(data, k, seed);
        self.apply(data, x_next, x_curr, &draw);
    }

    fn counters(&self) -> &Counters {
        &self.counters
    }
}

// ---------------------------------------------------------------------------
// EF21

/// Error-feedback rounds with a contractive compressor; fully deterministic
/// given the iterates.
pub struct Ef21 {
    partition: Partition,
    compressor: BiasedCompressor,
    worker_est: Vec<Vector>,
    g: Vector,
    counters: Counters,
    uplink: Uplink,
}

impl Ef21 {
    pub fn new(data: &Dataset, partition: Partition, compressor: BiasedCompressor) -> Result<Self> {
        compressor.validate(data.dim())?;
        let x0 = Vector::zeros(data.dim());
        let worker_est = shard_gradients(data, &partition, &x0);
        let g = data.full_gradient(&x0);
        Ok(Ef21 {
            partition,
            compressor,
            worker_est,
            g,
            counters: Counters {
                grad_calls: data.n_samples() as u64,
                ..Counters::default()
            },
            uplink: Uplink::default(),
        })
    }

    pub fn apply(&mut self, data: &Dataset, x_next: &Vector) {
        let dim = data.dim();
        let mut acc = Vector::zeros(dim);
        for w in 0..self.partition.n_workers() {
            let shard = self.partition.shard(w);
            let grad_w = data.mean_gradient_over(shard, x_next);
            self.counters.grad_calls += shard.len() as u64;
            let mut delta = grad_w;
            delta.add_scaled(-1.0, &self.worker_est[w]);
            let packet = self.compressor.compress(&delta);
            self.uplink.packet(&packet);
            self.worker_est[w].add_scaled(1.0, &packet.vector);
            acc.add_scaled(self.partition.weight(w), &packet.vector);
        }
        self.g.add_scaled(1.0, &acc);
        self.uplink.end_round(self.partition.n_workers(), dim);
        sync_counters(&mut self.counters, &self.uplink);
        debug_assert!(self.estimate_consistency_gap() < 1e-9);
    }

    pub fn estimate_consistency_gap(&self) -> f64 {
        let mean = weighted_sum(&self.partition, &self.worker_est, self.g.dim());
        mean.dist_sq(&self.g).sqrt()
    }

    /// Worker-estimate residuals against the true shard gradients at x.
    pub fn residual_sq(&self, data: &Dataset, x: &Vector) -> f64 {
        let grads = shard_gradients(data, &self.partition, x);
        grads
            .iter()
            .zip(&self.worker_est)
            .enumerate()
            .map(|(w, (g, e))| self.partition.weight(w) * g.dist_sq(e))
            .sum()
    }

    bits_report_impl!();
}

impl GradientEstimator for Ef21 {
    fn gradient(&self) -> &Vector {
        &self.g
    }

    fn step(&mut self, data: &Dataset, x_next: &Vector, _x_curr: &Vector, _k: u64, _seed: u64) {
        self.apply(data, x_next);
    }

    fn counters(&self) -> &Counters {
        &self.counters
    }

    fn sigma_sq(&self, data: &Dataset, x_curr: &Vector) -> Option<f64> {
        Some(self.residual_sq(data, x_curr))
    }
}

// ---------------------------------------------------------------------------
// Q-L-SVRG

#[derive(Clone, Debug)]
pub struct QLSvrgDraw {
    pub refresh: bool,
    pub packets: Vec<PacketDraw>,
}

/// Anchor-based distributed rounds: compression randomness replaces the
/// batch randomness of loopless SVRG. Every round uploads compressed
/// differences against cached anchor gradients; the anchor refresh uploads
/// full vectors.
pub struct QLSvrg {
    partition: Partition,
    compressor: UnbiasedCompressor,
    p: f64,
    anchor: Vector,
    cached: Vec<Vector>,
    anchor_full: Vector,
    g: Vector,
    counters: Counters,
    uplink: Uplink,
}

impl QLSvrg {
    pub fn new(
        data: &Dataset,
        partition: Partition,
        compressor: UnbiasedCompressor,
        p: f64,
    ) -> Result<Self> {
        compressor.validate(data.dim())?;
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::InvalidParam {
                name: "p",
                msg: format!("must be in (0,1], got {p}"),
            });
        }
        let x0 = Vector::zeros(data.dim());
        let cached = shard_gradients(data, &partition, &x0);
        let anchor_full = weighted_sum(&partition, &cached, data.dim());
        let g = data.full_gradient(&x0);
        Ok(QLSvrg {
            partition,
            compressor,
            p,
            anchor: x0,
            cached,
            anchor_full,
            g,
            counters: Counters {
                grad_calls: data.n_samples() as u64,
                ..Counters::default()
            },
            uplink: Uplink::default(),
        })
    }

    pub fn draw(&self, data: &Dataset, k: u64, seed: u64) -> QLSvrgDraw {
        let refresh = server_stream(seed, k, StreamKind::Coin).bernoulli(self.p);
        let packets = (0..self.partition.n_workers())
            .map(|w| {
                let mut rng = worker_stream(seed, w, k, StreamKind::Compressor);
                draw_packet(&self.compressor, data.dim(), &mut rng)
            })
            .collect();
        QLSvrgDraw { refresh, packets }
    }

    pub fn apply(&mut self, data: &Dataset, x_next: &Vector, x_curr: &Vector, draw: &QLSvrgDraw) {
        let dim = data.dim();
        if draw.refresh {
            self.anchor = x_curr.clone();
            self.cached = shard_gradients(data, &self.partition, &self.anchor);
            self.anchor_full = weighted_sum(&self.partition, &self.cached, dim);
            self.counters.grad_calls += data.n_samples() as u64;
            for _ in 0..self.partition.n_workers() {
                self.uplink.dense_vector(dim);
            }
        }
        let mut acc = Vector::zeros(dim);
        for w in 0..self.partition.n_workers() {
            let shard = self.partition.shard(w);
            let fresh = data.mean_gradient_over(shard, x_next);
            self.counters.grad_calls += shard.len() as u64;
            let mut delta = fresh;
            delta.add_scaled(-1.0, &self.cached[w]);
            let packet = packet_with(&self.compressor, &delta, &draw.packets[w]);
            self.uplink.packet(&packet);
            acc.add_scaled(self.partition.weight(w), &packet.vector);
        }
        let mut g = acc;
        g.add_scaled(1.0, &self.anchor_full);
        self.g = g;
        self.uplink.end_round(self.partition.n_workers(), dim);
        sync_counters(&mut self.counters, &self.uplink);
    }

    pub fn anchor(&self) -> &Vector {
        &self.anchor
    }

    bits_report_impl!();
}

impl GradientEstimator for QLSvrg {
    fn gradient(&self) -> &Vector {
        &self.g
    }

    fn step(&mut self, data: &Dataset, x_next: &Vector, x_curr: &Vector, k: u64, seed: u64) {
        let draw = self.draw(data, k, seed);
        self.apply(data, x_next, x_curr, &draw);
    }

    fn counters(&self) -> &Counters {
        &self.counters
    }

    fn sigma_sq(&self, _data: &Dataset, x_curr: &Vector) -> Option<f64> {
        Some(x_curr.dist_sq(&self.anchor))
    }
}

// ---------------------------------------------------------------------------
// PP-L-SVRG

#[derive(Clone, Debug)]
pub struct PpLSvrgDraw {
    pub refresh: bool,
    pub worker: usize,
}

/// Partial-participation rounds: only one worker (chosen with probability
/// proportional to its shard weight) uploads per round; anchor refreshes
/// pull a full gradient from everyone. By default the correction uses the
/// post-refresh anchor gradient; `lagged_anchor_mean` reproduces the literal
/// listing where the final term lags one refresh behind.
pub struct PpLSvrg {
    partition: Partition,
    p: f64,
    pub lagged_anchor_mean: bool,
    anchor: Vector,
    cached: Vec<Vector>,
    anchor_full: Vector,
    prev_anchor_full: Vector,
    g: Vector,
    counters: Counters,
    uplink: Uplink,
}

impl PpLSvrg {
    pub fn new(data: &Dataset, partition: Partition, p: f64) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::InvalidParam {
                name: "p",
                msg: format!("must be in (0,1], got {p}"),
            });
        }
        let x0 = Vector::zeros(data.dim());
        let cached = shard_gradients(data, &partition, &x0);
        let anchor_full = weighted_sum(&partition, &cached, data.dim());
        let g = data.full_gradient(&x0);
        Ok(PpLSvrg {
            partition,
            p,
            lagged_anchor_mean: false,
            anchor: x0,
            cached,
            prev_anchor_full: anchor_full.clone(),
            anchor_full,
            g,
            counters: Counters {
                grad_calls: data.n_samples() as u64,
                ..Counters::default()
            },
            uplink: Uplink::default(),
        })
    }

    pub fn draw(&self, k: u64, seed: u64) -> PpLSvrgDraw {
        let refresh = server_stream(seed, k, StreamKind::Coin).bernoulli(self.p);
        let weights: Vec<f64> = (0..self.partition.n_workers())
            .map(|w| self.partition.weight(w))
            .collect();
        let worker = server_stream(seed, k, StreamKind::WorkerChoice).weighted_index(&weights);
        PpLSvrgDraw { refresh, worker }
    }

    pub fn apply(&mut self, data: &Dataset, x_next: &Vector, x_curr: &Vector, draw: &PpLSvrgDraw) {
        let dim = data.dim();
        if draw.refresh {
            self.prev_anchor_full = self.anchor_full.clone();
            self.anchor = x_curr.clone();
            self.cached = shard_gradients(data, &self.partition, &self.anchor);
            self.anchor_full = weighted_sum(&self.partition, &self.cached, dim);
            self.counters.grad_calls += data.n_samples() as u64;
            for _ in 0..self.partition.n_workers() {
                self.uplink.dense_vector(dim);
            }
        }
        let w = draw.worker;
        let shard = self.partition.shard(w);
        let fresh = data.mean_gradient_over(shard, x_next);
        self.counters.grad_calls += shard.len() as u64;
        self.uplink.dense_vector(dim);
        let anchor_mean = if self.lagged_anchor_mean {
            &self.prev_anchor_full
        } else {
            &self.anchor_full
        };
        let mut g = Vector::zeros(dim);
        for j in 0..dim {
            g[j] = fresh[j] + (anchor_mean[j] - self.cached[w][j]);
        }
        self.g = g;
        self.uplink.end_round(self.partition.n_workers(), dim);
        sync_counters(&mut self.counters, &self.uplink);
    }

    pub fn anchor(&self) -> &Vector {
        &self.anchor
    }

    bits_report_impl!();
}

impl GradientEstimator for PpLSvrg {
    fn gradient(&self) -> &Vector {
        &self.g
    }

    fn step(&mut self, data: &Dataset, x_next: &Vector, x_curr: &Vector, k: u64, seed: u64) {
        let draw = self.draw(k, seed);
        self.apply(data, x_next, x_curr, &draw);
    }

    fn counters(&self) -> &Counters {
        &self.counters
    }

    fn sigma_sq(&self, _data: &Dataset, x_curr: &Vector) -> Option<f64> {
        Some(x_curr.dist_sq(&self.anchor))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compression::k_subsets;

    /// 4 samples, dim 2; splits evenly across 1 or 2 workers.
    fn quad() -> Dataset {
        Dataset::from_rows(
            vec![
                vec![(0, 1.0), (1, -1.0)],
                vec![(0, 2.0)],
                vec![(1, 1.5)],
                vec![(0, -0.5), (1, 0.5)],
            ],
            vec![1.0, -1.0, 1.0, -1.0],
            0,
        )
        .unwrap()
    }

    fn assert_close(a: &Vector, b: &Vector, tol: f64, what: &str) {
        for j in 0..a.dim() {
            assert!(
                (a[j] - b[j]).abs() <= tol,
                "{what}: coord {j} {} vs {}",
                a[j],
                b[j]
            );
        }
    }

    fn part(n: usize, w: usize) -> Partition {
        Partition::contiguous(n, w).unwrap()
    }

    // ---------------- DIANA ----------------

    #[test]
    fn diana_identity_reconstructs_gradient() {
        let data = quad();
        let mut sim = Diana::new(&data, part(4, 2), UnbiasedCompressor::Identity, 1.0).unwrap();
        let x1 = Vector::from_vec(vec![0.3, -0.2]);
        sim.step(&data, &x1, &Vector::zeros(2), 0, 1);
        assert_close(sim.gradient(), &data.full_gradient(&x1), 1e-14, "diana identity");
        let x2 = Vector::from_vec(vec![-0.1, 0.4]);
        sim.step(&data, &x2, &x1, 1, 1);
        assert_close(sim.gradient(), &data.full_gradient(&x2), 1e-13, "diana identity 2");
    }

    #[test]
    fn diana_enumerated_mean_is_unbiased() {
        // n=2 workers, dim=2, rand_1: 2 subset choices per worker
        let data = quad();
        let x1 = Vector::from_vec(vec![0.3, -0.2]);
        let mut mean = Vector::zeros(2);
        let combos: Vec<(usize, usize)> =
            (0..2).flat_map(|a| (0..2).map(move |b| (a, b))).collect();
        for (s0, s1) in &combos {
            let mut sim =
                Diana::new(&data, part(4, 2), UnbiasedCompressor::RandK { k: 1 }, 0.5).unwrap();
            let draw = DianaDraw {
                packets: vec![PacketDraw::Subset(vec![*s0]), PacketDraw::Subset(vec![*s1])],
            };
            sim.apply(&data, &x1, &draw);
            mean.add_scaled(1.0 / combos.len() as f64, sim.gradient());
        }
        assert_close(&mean, &data.full_gradient(&x1), 1e-13, "diana mean");
    }

    #[test]
    fn diana_shift_consistency_over_rounds() {
        let data = quad();
        let mut sim =
            Diana::new(&data, part(4, 2), UnbiasedCompressor::RandK { k: 1 }, 0.5).unwrap();
        let mut x = Vector::zeros(2);
        for k in 0..100u64 {
            let x_next = Vector::from_vec(vec![0.3 * (k as f64 * 0.1).sin(), -0.2]);
            sim.step(&data, &x_next, &x, k, 9);
            x = x_next;
            assert!(sim.shift_consistency_gap() < 1e-9);
        }
    }

    // ---------------- MARINA ----------------

    #[test]
    fn marina_always_exact_branch_is_exact() {
        let data = quad();
        let mut sim =
            Marina::new(&data, part(4, 2), UnbiasedCompressor::RandK { k: 1 }, 1.0).unwrap();
        let mut x = Vector::zeros(2);
        for k in 0..20u64 {
            let x_next = Vector::from_vec(vec![0.1 * (k as f64).sin(), 0.05]);
            sim.step(&data, &x_next, &x, k, 3);
            assert_close(sim.gradient(), &data.full_gradient(&x_next), 1e-13, "marina p=1");
            x = x_next;
        }
    }

    #[test]
    fn marina_identity_tails_telescope() {
        // forced compressed branch with the identity operator keeps the
        // estimate equal to the exact gradient
        let data = quad();
        let mut sim = Marina::new(&data, part(4, 2), UnbiasedCompressor::Identity, 0.5).unwrap();
        let mut x = Vector::zeros(2);
        for k in 0..50 {
            let x_next = Vector::from_vec(vec![0.1 * (k as f64).cos(), -0.07]);
            let draw = MarinaDraw {
                exact: false,
                packets: vec![PacketDraw::Dense; 2],
            };
            sim.apply(&data, &x_next, &x, &draw);
            assert_close(sim.gradient(), &data.full_gradient(&x_next), 1e-12, "marina tails");
            x = x_next;
        }
    }

    #[test]
    fn marina_expected_uplink_coords() {
        // dim=10, RandK k=2, p=0.2: expected coords/worker/round = 3.6,
        // Monte Carlo band [3.42, 3.78]
        let rows: Vec<Vec<(usize, f64)>> = (0..4)
            .map(|i| vec![(i % 10, 1.0), (9, 0.5)].into_iter().filter(|(a, _)| *a < 9 || i % 2 == 0).collect())
            .collect();
        let data = Dataset::from_rows(rows, vec![1.0, -1.0, 1.0, -1.0], 10).unwrap();
        let mut sim =
            Marina::new(&data, part(4, 1), UnbiasedCompressor::RandK { k: 2 }, 0.2).unwrap();
        let x0 = Vector::zeros(10);
        let x1 = Vector::from_vec((0..10).map(|j| 0.01 * j as f64).collect());
        for k in 0..10_000u64 {
            sim.step(&data, &x1, &x0, k, 77);
        }
        let mean = sim.mean_coords_per_worker_round();
        assert!((3.42..=3.78).contains(&mean), "mean coords {mean}");
    }

    // ---------------- VR-MARINA ----------------

    #[test]
    fn vr_marina_full_inner_batch_matches_marina_bitwise() {
        let data = quad();
        let x0 = Vector::zeros(2);
        let mut marina =
            Marina::new(&data, part(4, 2), UnbiasedCompressor::RandK { k: 1 }, 0.4).unwrap();
        let mut vr = VrMarina::new(
            &data,
            part(4, 2),
            UnbiasedCompressor::RandK { k: 1 },
            0.4,
            2, // = shard size
        )
        .unwrap();
        let mut x = x0.clone();
        for k in 0..60u64 {
            let x_next = Vector::from_vec(vec![0.2 * (k as f64 * 0.3).sin(), 0.1]);
            marina.step(&data, &x_next, &x, k, 5);
            vr.step(&data, &x_next, &x, k, 5);
            assert_eq!(
                marina.gradient().as_slice(),
                vr.gradient().as_slice(),
                "round {k}"
            );
            x = x_next;
        }
    }

    #[test]
    fn vr_marina_exact_branch() {
        let data = quad();
        let mut sim = VrMarina::new(
            &data,
            part(4, 2),
            UnbiasedCompressor::RandK { k: 1 },
            1.0,
            1,
        )
        .unwrap();
        let x1 = Vector::from_vec(vec![0.3, -0.2]);
        sim.step(&data, &x1, &Vector::zeros(2), 0, 3);
        assert_close(sim.gradient(), &data.full_gradient(&x1), 1e-13, "vr p=1");
    }

    #[test]
    fn vr_marina_inner_batch_means_shard_difference() {
        // single worker shard of 2 samples, identity compressor: the
        // enumerated mean of inner-batch difference packets equals the full
        // shard gradient difference
        let data = Dataset::from_rows(
            vec![vec![(0, 1.0), (1, -1.0)], vec![(0, 2.0), (1, 0.5)]],
            vec![1.0, -1.0],
            0,
        )
        .unwrap();
        let x0 = Vector::zeros(2);
        let x1 = Vector::from_vec(vec![0.3, -0.4]);
        let mut mean = Vector::zeros(2);
        for inner in k_subsets(2, 1) {
            let mut sim =
                VrMarina::new(&data, part(2, 1), UnbiasedCompressor::Identity, 0.5, 1).unwrap();
            let draw = VrMarinaDraw {
                exact: false,
                inner: vec![inner],
                packets: vec![PacketDraw::Dense],
            };
            sim.apply(&data, &x1, &x0, &draw);
            mean.add_scaled(0.5, sim.gradient());
        }
        // with g0 = grad f(x0) exactly, E[g1] = g0 + [grad f(x1) - grad f(x0)]
        let g0 = data.full_gradient(&x0);
        let g1 = data.full_gradient(&x1);
        let mut expected = g0.clone();
        for j in 0..2 {
            expected[j] += g1[j] - g0[j];
        }
        assert_close(&mean, &expected, 1e-14, "vr inner mean");
    }

    // ---------------- EF21 ----------------

    #[test]
    fn ef21_identity_is_exact() {
        let data = quad();
        let mut sim = Ef21::new(&data, part(4, 2), BiasedCompressor::Identity).unwrap();
        let x1 = Vector::from_vec(vec![0.3, -0.2]);
        sim.step(&data, &x1, &Vector::zeros(2), 0, 1);
        assert_close(sim.gradient(), &data.full_gradient(&x1), 1e-14, "ef21 identity");
    }

    #[test]
    fn ef21_residual_contracts_geometrically_at_fixed_point() {
        let data = quad();
        let mut sim = Ef21::new(&data, part(4, 2), BiasedCompressor::TopK { k: 1 }).unwrap();
        // jump somewhere, then hold x fixed and watch residuals contract
        let x = Vector::from_vec(vec![0.8, -0.6]);
        let delta = BiasedCompressor::TopK { k: 1 }.delta(2);
        let mut prev = f64::INFINITY;
        for k in 0..50u64 {
            sim.step(&data, &x, &x, k, 1);
            let res = sim.residual_sq(&data, &x);
            if k > 0 && prev > 1e-28 {
                assert!(
                    res <= (1.0 - 1.0 / delta) * prev + 1e-15,
                    "round {k}: {res} vs prev {prev}"
                );
            }
            prev = res;
        }
        assert!(prev < 1e-12, "residual should have vanished, got {prev}");
    }

    #[test]
    fn ef21_single_worker_full_budget_exact() {
        let data = quad();
        let mut sim = Ef21::new(&data, part(4, 1), BiasedCompressor::TopK { k: 2 }).unwrap();
        let x1 = Vector::from_vec(vec![0.3, -0.2]);
        sim.step(&data, &x1, &Vector::zeros(2), 0, 1);
        assert_close(sim.gradient(), &data.full_gradient(&x1), 1e-14, "ef21 n=1 k=dim");
    }

    // ---------------- Q-L-SVRG ----------------

    #[test]
    fn qlsvrg_identity_is_exact() {
        let data = quad();
        let mut sim = QLSvrg::new(&data, part(4, 2), UnbiasedCompressor::Identity, 0.5).unwrap();
        let mut x = Vector::zeros(2);
        for k in 0..30u64 {
            let x_next = Vector::from_vec(vec![0.2 * (k as f64 * 0.4).sin(), -0.1]);
            sim.step(&data, &x_next, &x, k, 8);
            assert_close(sim.gradient(), &data.full_gradient(&x_next), 1e-13, "qlsvrg id");
            x = x_next;
        }
    }

    #[test]
    fn qlsvrg_refresh_moves_anchor_to_previous_iterate() {
        let data = quad();
        let mut sim =
            QLSvrg::new(&data, part(4, 2), UnbiasedCompressor::RandK { k: 1 }, 1.0).unwrap();
        let x1 = Vector::from_vec(vec![0.3, -0.2]);
        let x2 = Vector::from_vec(vec![0.1, 0.2]);
        sim.step(&data, &x1, &Vector::zeros(2), 0, 2);
        assert_eq!(sim.anchor().as_slice(), &[0.0, 0.0]);
        sim.step(&data, &x2, &x1, 1, 2);
        assert_eq!(sim.anchor().as_slice(), x1.as_slice());
    }

    #[test]
    fn qlsvrg_enumerated_mean_fixed_anchor() {
        let data = quad();
        let x1 = Vector::from_vec(vec![0.3, -0.2]);
        let mut mean = Vector::zeros(2);
        let combos: Vec<(usize, usize)> =
            (0..2).flat_map(|a| (0..2).map(move |b| (a, b))).collect();
        for (s0, s1) in &combos {
            let mut sim =
                QLSvrg::new(&data, part(4, 2), UnbiasedCompressor::RandK { k: 1 }, 0.5).unwrap();
            let draw = QLSvrgDraw {
                refresh: false,
                packets: vec![PacketDraw::Subset(vec![*s0]), PacketDraw::Subset(vec![*s1])],
            };
            sim.apply(&data, &x1, &Vector::zeros(2), &draw);
            mean.add_scaled(1.0 / combos.len() as f64, sim.gradient());
        }
        assert_close(&mean, &data.full_gradient(&x1), 1e-13, "qlsvrg mean");
    }

    // ---------------- PP-L-SVRG ----------------

    #[test]
    fn pplsvrg_single_worker_is_exact() {
        let data = quad();
        let mut sim = PpLSvrg::new(&data, part(4, 1), 0.5).unwrap();
        let mut x = Vector::zeros(2);
        for k in 0..20u64 {
            let x_next = Vector::from_vec(vec![0.1 * (k as f64).cos(), 0.05]);
            sim.step(&data, &x_next, &x, k, 4);
            assert_close(sim.gradient(), &data.full_gradient(&x_next), 1e-14, "pp n=1");
            x = x_next;
        }
    }

    #[test]
    fn pplsvrg_enumerated_worker_mean() {
        let data = quad();
        let x1 = Vector::from_vec(vec![0.3, -0.2]);
        let mut mean = Vector::zeros(2);
        for worker in 0..2 {
            let mut sim = PpLSvrg::new(&data, part(4, 2), 0.5).unwrap();
            sim.apply(
                &data,
                &x1,
                &Vector::zeros(2),
                &PpLSvrgDraw {
                    refresh: false,
                    worker,
                },
            );
            mean.add_scaled(0.5, sim.gradient());
        }
        assert_close(&mean, &data.full_gradient(&x1), 1e-14, "pp worker mean");
    }

    #[test]
    fn pplsvrg_refresh_formula() {
        // p = 1: anchor is the previous iterate each round
        let data = quad();
        let mut sim = PpLSvrg::new(&data, part(4, 2), 1.0).unwrap();
        let x1 = Vector::from_vec(vec![0.3, -0.2]);
        let x2 = Vector::from_vec(vec![-0.2, 0.25]);
        sim.step(&data, &x1, &Vector::zeros(2), 0, 6);
        let draw = PpLSvrgDraw {
            refresh: true,
            worker: 1,
        };
        sim.apply(&data, &x2, &x1, &draw);
        assert_eq!(sim.anchor().as_slice(), x1.as_slice());
        let partition = part(4, 2);
        let shard1 = partition.shard(1);
        let fresh = data.mean_gradient_over(shard1, &x2);
        let cached = data.mean_gradient_over(shard1, &x1);
        let anchor_full = data.full_gradient(&x1);
        for j in 0..2 {
            let expected = fresh[j] + (anchor_full[j] - cached[j]);
            assert!((sim.gradient()[j] - expected).abs() < 1e-13);
        }
    }

    // ---------------- bits accounting ----------------

    #[test]
    fn ef21_bits_exact_per_round() {
        // k=3, n=5 workers: exactly 5*3*96 bits per round
        let rows: Vec<Vec<(usize, f64)>> = (0..10).map(|i| vec![(i % 4, 1.0)]).collect();
        let labels: Vec<f64> = (0..10).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let data = Dataset::from_rows(rows, labels, 4).unwrap();
        let mut sim = Ef21::new(&data, part(10, 5), BiasedCompressor::TopK { k: 3 }).unwrap();
        let x1 = Vector::from_vec(vec![0.1, 0.2, -0.1, 0.05]);
        for k in 0..7u64 {
            sim.step(&data, &x1, &x1, k, 1);
        }
        let report = sim.bits_report().unwrap();
        assert_eq!(report.total_bits, 7 * 5 * 3 * 96);
        assert_eq!(report.per_round_mean, (5 * 3 * 96) as f64);
    }

    #[test]
    fn identity_compressor_full_vector_bits() {
        let data = quad();
        let mut sim = Diana::new(&data, part(4, 2), UnbiasedCompressor::Identity, 1.0).unwrap();
        let x1 = Vector::from_vec(vec![0.3, -0.2]);
        sim.step(&data, &x1, &Vector::zeros(2), 0, 1);
        // n * dim * 64
        assert_eq!(sim.bits_report().unwrap().total_bits, 2 * 2 * 64);
    }

    #[test]
    fn bits_report_requires_a_round() {
        let data = quad();
        let sim = Diana::new(&data, part(4, 2), UnbiasedCompressor::Identity, 1.0).unwrap();
        assert!(sim.bits_report().is_err());
    }
}
