//! Single-machine gradient estimators for the stochastic conditional
//! gradient iteration.
//!
//! Common contract: construction at x0 sets g0 = grad f(x0) exactly and
//! charges its cost; `step` advances the estimate from iterate x_curr to
//! x_next, drawing randomness from counter-based streams keyed by
//! (seed, iteration). Each estimator splits its transition into a plain-data
//! `Decision` and a deterministic `apply`, so tests can enumerate the
//! randomness exhaustively through the same code path the sampler uses.
//!
//! Cost counters: `grad_calls` counts per-sample gradient evaluations,
//! `coord_calls` single partial derivatives, `func_evals` zero-order
//! function evaluations.

use crate::objective::Dataset;
use crate::rng::{RngStream, StreamKind};
use crate::vector::Vector;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Counters {
    pub grad_calls: u64,
    pub coord_calls: u64,
    pub func_evals: u64,
    pub bits_sent: u64,
    pub coords_sent: u64,
    pub downlink_bits: u64,
}

/// A gradient estimate that the Frank-Wolfe driver advances once per
/// iteration. Implemented by the single-machine estimators here and by the
/// simulated distributed rounds.
pub trait GradientEstimator {
    fn gradient(&self) -> &Vector;

    /// Advance the estimate after the step x_curr -> x_next, using the
    /// randomness of iteration `k` of the stream family `seed`.
    fn step(&mut self, data: &Dataset, x_next: &Vector, x_curr: &Vector, k: u64, seed: u64);

    fn counters(&self) -> &Counters;

    /// The method's companion variance sequence, where it has one; purely a
    /// diagnostic.
    fn sigma_sq(&self, _data: &Dataset, _x_curr: &Vector) -> Option<f64> {
        None
    }
}

fn sampling_stream(seed: u64, k: u64) -> RngStream {
    RngStream::new(seed, 0, k, StreamKind::Sampling)
}

// ---------------------------------------------------------------------------
// deterministic

/// Exact-gradient baseline: g = grad f(x) every step.
pub struct Deterministic {
    g: Vector,
    counters: Counters,
}

impl Deterministic {
    pub fn new(data: &Dataset, x0: &Vector) -> Self {
        let g = data.full_gradient(x0);
        let counters = Counters {
            grad_calls: data.n_samples() as u64,
            ..Counters::default()
        };
        Deterministic { g, counters }
    }
}

impl GradientEstimator for Deterministic {
    fn gradient(&self) -> &Vector {
        &self.g
    }

    fn step(&mut self, data: &Dataset, x_next: &Vector, _x_curr: &Vector, _k: u64, _seed: u64) {
        self.g = data.full_gradient(x_next);
        self.counters.grad_calls += data.n_samples() as u64;
    }

    fn counters(&self) -> &Counters {
        &self.counters
    }
}

// ---------------------------------------------------------------------------
// loopless SVRG

#[derive(Clone, Debug)]
pub struct LSvrgDecision {
    pub refresh: bool,
    pub batch: Vec<usize>,
}

/// Anchor-based variance reduction: with probability p the anchor moves to
/// the current iterate and its full gradient is recomputed and cached; the
/// batch term corrects the anchor gradient toward the new point.
pub struct LSvrg {
    pub p: f64,
    pub b: usize,
    g: Vector,
    anchor: Vector,
    anchor_grad: Vector,
    counters: Counters,
}

impl LSvrg {
    pub fn new(data: &Dataset, x0: &Vector, p: f64, b: usize) -> Self {
        assert!(p > 0.0 && p <= 1.0, "p in (0,1]");
        assert!(b >= 1 && b <= data.n_samples(), "batch size out of range");
        let g = data.full_gradient(x0);
        LSvrg {
            p,
            b,
            anchor: x0.clone(),
            anchor_grad: g.clone(),
            g,
            counters: Counters {
                grad_calls: data.n_samples() as u64,
                ..Counters::default()
            },
        }
    }

    pub fn draw(&self, data: &Dataset, rng: &mut RngStream) -> LSvrgDecision {
        LSvrgDecision {
            refresh: rng.bernoulli(self.p),
            batch: rng.subset(data.n_samples(), self.b),
        }
    }

    pub fn apply(
        &mut self,
        data: &Dataset,
        x_next: &Vector,
        x_curr: &Vector,
        decision: &LSvrgDecision,
    ) {
        if decision.refresh {
            self.anchor = x_curr.clone();
            self.anchor_grad = data.full_gradient(&self.anchor);
            self.counters.grad_calls += data.n_samples() as u64;
        }
        let mean_next = data.mean_gradient_over(&decision.batch, x_next);
        let mean_anchor = data.mean_gradient_over(&decision.batch, &self.anchor);
        self.counters.grad_calls += 2 * decision.batch.len() as u64;
        let mut g = Vector::zeros(data.dim());
        for j in 0..data.dim() {
            g[j] = mean_next[j] + (self.anchor_grad[j] - mean_anchor[j]);
        }
        self.g = g;
    }

    pub fn anchor(&self) -> &Vector {
        &self.anchor
    }
}

impl GradientEstimator for LSvrg {
    fn gradient(&self) -> &Vector {
        &self.g
    }

    fn step(&mut self, data: &Dataset, x_next: &Vector, x_curr: &Vector, k: u64, seed: u64) {
        let mut rng = sampling_stream(seed, k);
        let decision = self.draw(data, &mut rng);
        self.apply(data, x_next, x_curr, &decision);
    }

    fn counters(&self) -> &Counters {
        &self.counters
    }

    fn sigma_sq(&self, _data: &Dataset, x_curr: &Vector) -> Option<f64> {
        Some(x_curr.dist_sq(&self.anchor))
    }
}

// ---------------------------------------------------------------------------
// loopless SARAH

#[derive(Clone, Debug)]
pub struct SarahDecision {
    pub full_refresh: bool,
    pub batch: Vec<usize>,
}

/// Recursive (biased) estimator: rare full-gradient restarts, otherwise the
/// previous estimate plus a minibatch gradient difference.
pub struct Sarah {
    pub p: f64,
    pub b: usize,
    g: Vector,
    counters: Counters,
}

impl Sarah {
    pub fn new(data: &Dataset, x0: &Vector, p: f64, b: usize) -> Self {
        assert!(p > 0.0 && p <= 1.0, "p in (0,1]");
        assert!(b >= 1 && b <= data.n_samples(), "batch size out of range");
        Sarah {
            p,
            b,
            g: data.full_gradient(x0),
            counters: Counters {
                grad_calls: data.n_samples() as u64,
                ..Counters::default()
            },
        }
    }

    pub fn draw(&self, data: &Dataset, rng: &mut RngStream) -> SarahDecision {
        let full_refresh = rng.bernoulli(self.p);
        let batch = if full_refresh {
            Vec::new()
        } else {
            rng.subset(data.n_samples(), self.b)
        };
        SarahDecision {
            full_refresh,
            batch,
        }
    }

    pub fn apply(
        &mut self,
        data: &Dataset,
        x_next: &Vector,
        x_curr: &Vector,
        decision: &SarahDecision,
    ) {
        if decision.full_refresh {
            self.g = data.full_gradient(x_next);
            self.counters.grad_calls += data.n_samples() as u64;
        } else {
            let diff = data.mean_gradient_diff_over(&decision.batch, x_next, x_curr);
            self.counters.grad_calls += 2 * decision.batch.len() as u64;
            self.g.add_scaled(1.0, &diff);
        }
    }
}

impl GradientEstimator for Sarah {
    fn gradient(&self) -> &Vector {
        &self.g
    }

    fn step(&mut self, data: &Dataset, x_next: &Vector, x_curr: &Vector, k: u64, seed: u64) {
        let mut rng = sampling_stream(seed, k);
        let decision = self.draw(data, &mut rng);
        self.apply(data, x_next, x_curr, &decision);
    }

    fn counters(&self) -> &Counters {
        &self.counters
    }
}

// ---------------------------------------------------------------------------
// SAGA

/// Per-sample gradient table. For the logistic objective grad f_i(x) is a
/// scalar multiple of the data row, so the table stores one coefficient per
/// sample and the running sum of the table as a dense vector, maintained
/// incrementally with sparse updates.
struct GradientTable {
    coeffs: Vec<f64>,
    sum: Vector,
}

impl GradientTable {
    fn new(data: &Dataset, x0: &Vector) -> Self {
        let mut sum = Vector::zeros(data.dim());
        let coeffs: Vec<f64> = (0..data.n_samples())
            .map(|i| {
                let c = data.gradient_coeff(i, x0);
                data.add_row_scaled(i, c, &mut sum);
                c
            })
            .collect();
        GradientTable { coeffs, sum }
    }

    /// Overwrite entry i with the gradient coefficient at x; returns the new
    /// coefficient.
    fn write(&mut self, data: &Dataset, i: usize, x: &Vector) -> f64 {
        let c = data.gradient_coeff(i, x);
        data.add_row_scaled(i, c - self.coeffs[i], &mut self.sum);
        self.coeffs[i] = c;
        c
    }

    fn mean(&self, n: usize) -> Vector {
        let mut m = self.sum.clone();
        m.scale(1.0 / n as f64);
        m
    }

    /// Freshly recomputed table mean, for consistency checks against the
    /// incrementally maintained sum.
    fn mean_recomputed(&self, data: &Dataset) -> Vector {
        let mut m = Vector::zeros(data.dim());
        for (i, &c) in self.coeffs.iter().enumerate() {
            data.add_row_scaled(i, c, &mut m);
        }
        m.scale(1.0 / data.n_samples() as f64);
        m
    }

    fn deviation_sq(&self, data: &Dataset, x: &Vector) -> f64 {
        (0..data.n_samples())
            .map(|i| {
                let dc = data.gradient_coeff(i, x) - self.coeffs[i];
                let (_, vals) = data.row(i);
                dc * dc * vals.iter().map(|v| v * v).sum::<f64>()
            })
            .sum::<f64>()
            / data.n_samples() as f64
    }
}

#[derive(Clone, Debug)]
pub struct SagaDecision {
    pub batch: Vec<usize>,
}

/// Table-based variance reduction: no full-gradient restarts; the batch
/// entries of the table move to the previous iterate and the delayed table
/// mean anchors the estimate.
pub struct Saga {
    pub b: usize,
    g: Vector,
    table: GradientTable,
    counters: Counters,
}

impl Saga {
    pub fn new(data: &Dataset, x0: &Vector, b: usize) -> Self {
        assert!(b >= 1 && b <= data.n_samples(), "batch size out of range");
        let table = GradientTable::new(data, x0);
        let g = table.mean(data.n_samples());
        Saga {
            b,
            g,
            table,
            counters: Counters {
                grad_calls: data.n_samples() as u64,
                ..Counters::default()
            },
        }
    }

    pub fn draw(&self, data: &Dataset, rng: &mut RngStream) -> SagaDecision {
        SagaDecision {
            batch: rng.subset(data.n_samples(), self.b),
        }
    }

    pub fn apply(
        &mut self,
        data: &Dataset,
        x_next: &Vector,
        x_curr: &Vector,
        decision: &SagaDecision,
    ) {
        let n = data.n_samples();
        let b = decision.batch.len() as f64;
        // batch terms at x_next and the freshly written table values (which
        // sit at x_curr)
        let mut mean_next = Vector::zeros(data.dim());
        let mut mean_written = Vector::zeros(data.dim());
        for &i in &decision.batch {
            let c_next = data.gradient_coeff(i, x_next);
            data.add_row_scaled(i, c_next, &mut mean_next);
            let c_written = self.table.write(data, i, x_curr);
            data.add_row_scaled(i, c_written, &mut mean_written);
        }
        mean_next.scale(1.0 / b);
        mean_written.scale(1.0 / b);
        self.counters.grad_calls += 2 * decision.batch.len() as u64;
        let ybar = self.table.mean(n);
        let mut g = Vector::zeros(data.dim());
        for j in 0..data.dim() {
            g[j] = mean_next[j] - mean_written[j] + ybar[j];
        }
        self.g = g;
    }

    /// Gap between the incrementally maintained table sum and a fresh
    /// recomputation; bounded by accumulated rounding only.
    pub fn table_mean_drift(&self, data: &Dataset) -> f64 {
        let fresh = self.table.mean_recomputed(data);
        let inc = self.table.mean(data.n_samples());
        fresh.dist_sq(&inc).sqrt()
    }
}

impl GradientEstimator for Saga {
    fn gradient(&self) -> &Vector {
        &self.g
    }

    fn step(&mut self, data: &Dataset, x_next: &Vector, x_curr: &Vector, k: u64, seed: u64) {
        let mut rng = sampling_stream(seed, k);
        let decision = self.draw(data, &mut rng);
        self.apply(data, x_next, x_curr, &decision);
    }

    fn counters(&self) -> &Counters {
        &self.counters
    }

    fn sigma_sq(&self, data: &Dataset, x_curr: &Vector) -> Option<f64> {
        Some(self.table.deviation_sq(data, x_curr))
    }
}

// ---------------------------------------------------------------------------
// SAGA-SARAH

#[derive(Clone, Debug)]
pub struct SagaSarahDecision {
    pub batch: Vec<usize>,
}

/// Blend of the recursive difference estimator with a SAGA table, mixing
/// weight lambda = b/(2n). The table entries read inside the mixing term are
/// the freshly written ones; the pre-update reading (the other way the
/// update equation can be parsed) is available behind `read_pre_update`.
pub struct SagaSarah {
    pub b: usize,
    pub lambda: f64,
    pub read_pre_update: bool,
    g: Vector,
    table: GradientTable,
    counters: Counters,
}

impl SagaSarah {
    pub fn new(data: &Dataset, x0: &Vector, b: usize) -> Self {
        Self::with_table_reading(data, x0, b, false)
    }

    pub fn with_table_reading(data: &Dataset, x0: &Vector, b: usize, read_pre_update: bool) -> Self {
        assert!(b >= 1 && b <= data.n_samples(), "batch size out of range");
        let table = GradientTable::new(data, x0);
        let g = table.mean(data.n_samples());
        let lambda = b as f64 / (2.0 * data.n_samples() as f64);
        SagaSarah {
            b,
            lambda,
            read_pre_update,
            g,
            table,
            counters: Counters {
                grad_calls: data.n_samples() as u64,
                ..Counters::default()
            },
        }
    }

    pub fn draw(&self, data: &Dataset, rng: &mut RngStream) -> SagaSarahDecision {
        SagaSarahDecision {
            batch: rng.subset(data.n_samples(), self.b),
        }
    }

    pub fn apply(
        &mut self,
        data: &Dataset,
        x_next: &Vector,
        x_curr: &Vector,
        decision: &SagaSarahDecision,
    ) {
        let n = data.n_samples();
        let b = decision.batch.len() as f64;
        let ybar_pre = self.table.mean(n);
        let mut diff = Vector::zeros(data.dim());
        let mut mixing_batch = Vector::zeros(data.dim());
        for &i in &decision.batch {
            let c_next = data.gradient_coeff(i, x_next);
            let c_old = self.table.coeffs[i];
            let c_curr = self.table.write(data, i, x_curr);
            data.add_row_scaled(i, c_next - c_curr, &mut diff);
            let c_read = if self.read_pre_update { c_old } else { c_curr };
            data.add_row_scaled(i, c_curr - c_read, &mut mixing_batch);
        }
        diff.scale(1.0 / b);
        mixing_batch.scale(1.0 / b);
        self.counters.grad_calls += 2 * decision.batch.len() as u64;
        let ybar = if self.read_pre_update {
            ybar_pre
        } else {
            self.table.mean(n)
        };
        let lam = self.lambda;
        let mut g = Vector::zeros(data.dim());
        for j in 0..data.dim() {
            g[j] = diff[j] + (1.0 - lam) * self.g[j] + lam * (mixing_batch[j] + ybar[j]);
        }
        self.g = g;
    }
}

impl GradientEstimator for SagaSarah {
    fn gradient(&self) -> &Vector {
        &self.g
    }

    fn step(&mut self, data: &Dataset, x_next: &Vector, x_curr: &Vector, k: u64, seed: u64) {
        let mut rng = sampling_stream(seed, k);
        let decision = self.draw(data, &mut rng);
        self.apply(data, x_next, x_curr, &decision);
    }

    fn counters(&self) -> &Counters {
        &self.counters
    }

    fn sigma_sq(&self, data: &Dataset, x_curr: &Vector) -> Option<f64> {
        Some(self.table.deviation_sq(data, x_curr))
    }
}

// ---------------------------------------------------------------------------
// SEGA (simplified uniform-sampling variant)

#[derive(Clone, Copy, Debug)]
pub struct CoordDecision {
    pub coord: usize,
}

/// Coordinate memory estimator: refresh one memory coordinate at the
/// previous iterate, then debias the fresh partial derivative at the new
/// iterate against it.
pub struct Sega {
    h: Vector,
    g: Vector,
    counters: Counters,
}

impl Sega {
    pub fn new(data: &Dataset, x0: &Vector) -> Self {
        let g = data.full_gradient(x0);
        Sega {
            h: g.clone(),
            g,
            counters: Counters {
                coord_calls: data.dim() as u64,
                ..Counters::default()
            },
        }
    }

    pub fn draw(&self, data: &Dataset, rng: &mut RngStream) -> CoordDecision {
        CoordDecision {
            coord: rng.index(data.dim()),
        }
    }

    pub fn apply(
        &mut self,
        data: &Dataset,
        x_next: &Vector,
        x_curr: &Vector,
        decision: &CoordDecision,
    ) {
        let i = decision.coord;
        let d_curr = data.partial_derivative(i, x_curr).expect("coord in range");
        let d_next = data.partial_derivative(i, x_next).expect("coord in range");
        self.counters.coord_calls += 2;
        self.h[i] = d_curr;
        let dim = data.dim() as f64;
        let mut g = self.h.clone();
        g[i] = dim * (d_next - d_curr) + d_curr;
        self.g = g;
    }

    pub fn memory(&self) -> &Vector {
        &self.h
    }
}

impl GradientEstimator for Sega {
    fn gradient(&self) -> &Vector {
        &self.g
    }

    fn step(&mut self, data: &Dataset, x_next: &Vector, x_curr: &Vector, k: u64, seed: u64) {
        let mut rng = sampling_stream(seed, k);
        let decision = self.draw(data, &mut rng);
        self.apply(data, x_next, x_curr, &decision);
    }

    fn counters(&self) -> &Counters {
        &self.counters
    }

    fn sigma_sq(&self, data: &Dataset, x_curr: &Vector) -> Option<f64> {
        Some(self.h.dist_sq(&data.full_gradient(x_curr)))
    }
}

// ---------------------------------------------------------------------------
// JAGUAR

/// Coordinate-overwrite estimator: one fresh partial derivative per step
/// replaces the corresponding entry of the running estimate.
pub struct Jaguar {
    g: Vector,
    counters: Counters,
}

impl Jaguar {
    pub fn new(data: &Dataset, x0: &Vector) -> Self {
        Jaguar {
            g: data.full_gradient(x0),
            counters: Counters {
                coord_calls: data.dim() as u64,
                ..Counters::default()
            },
        }
    }

    pub fn draw(&self, data: &Dataset, rng: &mut RngStream) -> CoordDecision {
        CoordDecision {
            coord: rng.index(data.dim()),
        }
    }

    pub fn apply(&mut self, data: &Dataset, x_next: &Vector, decision: &CoordDecision) {
        let i = decision.coord;
        self.g[i] = data.partial_derivative(i, x_next).expect("coord in range");
        self.counters.coord_calls += 1;
    }
}

impl GradientEstimator for Jaguar {
    fn gradient(&self) -> &Vector {
        &self.g
    }

    fn step(&mut self, data: &Dataset, x_next: &Vector, _x_curr: &Vector, k: u64, seed: u64) {
        let mut rng = sampling_stream(seed, k);
        let decision = self.draw(data, &mut rng);
        self.apply(data, x_next, &decision);
    }

    fn counters(&self) -> &Counters {
        &self.counters
    }
}

// ---------------------------------------------------------------------------
// ZOJA (zero-order JAGUAR)

/// Like the coordinate-overwrite estimator, but the refreshed entry is a
/// forward finite difference of function values at the new iterate, so only
/// zero-order access is needed after initialization.
pub struct Zoja {
    pub tau: f64,
    g: Vector,
    counters: Counters,
}

impl Zoja {
    pub fn new(data: &Dataset, x0: &Vector, tau: f64) -> Self {
        assert!(tau > 0.0, "tau must be positive");
        Zoja {
            tau,
            g: data.full_gradient(x0),
            counters: Counters {
                coord_calls: data.dim() as u64,
                ..Counters::default()
            },
        }
    }

    pub fn draw(&self, data: &Dataset, rng: &mut RngStream) -> CoordDecision {
        CoordDecision {
            coord: rng.index(data.dim()),
        }
    }

    pub fn apply(&mut self, data: &Dataset, x_next: &Vector, decision: &CoordDecision) {
        let i = decision.coord;
        let f0 = data.value(x_next);
        let mut shifted = x_next.clone();
        shifted[i] += self.tau;
        let f1 = data.value(&shifted);
        self.g[i] = (f1 - f0) / self.tau;
        self.counters.func_evals += 2;
        self.counters.coord_calls += 1;
    }
}

impl GradientEstimator for Zoja {
    fn gradient(&self) -> &Vector {
        &self.g
    }

    fn step(&mut self, data: &Dataset, x_next: &Vector, _x_curr: &Vector, k: u64, seed: u64) {
        let mut rng = sampling_stream(seed, k);
        let decision = self.draw(data, &mut rng);
        self.apply(data, x_next, &decision);
    }

    fn counters(&self) -> &Counters {
        &self.counters
    }
}
