//! The conditional-gradient loop and its convergence metrics.
//!
//! One iteration moves x along the segment toward the LMO vertex of the
//! current gradient estimate: x <- (1 - eta) x + eta s. Runs start from zero
//! and are fully determined by (config, seed). The reported gap is computed
//! with the exact gradient even inside stochastic runs; neither the gap's
//! gradient nor the objective values entering the trace are charged to the
//! oracle-call counters, so the cost columns reflect the estimator only.

use std::time::Instant;

use crate::compression::{BiasedCompressor, UnbiasedCompressor};
use crate::constants::{constants_for, ConstantsParams, Method, MethodConstants};
use crate::distributed::{Diana, Ef21, Marina, PpLSvrg, QLSvrg, VrMarina};
use crate::error::{Error, Result};
use crate::estimators::{
    Counters, Deterministic, GradientEstimator, Jaguar, LSvrg, Saga, SagaSarah, Sarah, Sega, Zoja,
};
use crate::objective::{Dataset, Partition};
use crate::sets::FeasibleSet;
use crate::vector::Vector;

/// One conditional-gradient step.
pub fn fw_step(x: &Vector, g: &Vector, eta: f64, set: &dyn FeasibleSet) -> Result<Vector> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::InvalidParam {
            name: "eta",
            msg: format!("must be in (0,1], got {eta}"),
        });
    }
    let s = set.lmo(g)?;
    Ok(Vector::convex_combination(x, &s, eta))
}

/// Frank-Wolfe gap at x: max over the set of <grad f(x), x - v>, always
/// nonnegative and zero exactly at first-order stationary points. Uses the
/// exact gradient; diagnostic only.
pub fn fw_gap(x: &Vector, data: &Dataset, set: &dyn FeasibleSet) -> f64 {
    let g = data.full_gradient(x);
    let s = set.lmo(&g).expect("finite gradient");
    let mut diff = x.clone();
    diff.add_scaled(-1.0, &s);
    g.dot(&diff)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    pub f_value: f64,
    pub fw_gap: f64,
    pub grad_calls: u64,
    pub coord_calls: u64,
    pub bits_sent: u64,
    pub elapsed_ms: f64,
}

/// Per-run record log plus an optional reference optimum for suboptimality
/// reporting.
#[derive(Clone, Debug, Default)]
pub struct Trace {
    pub records: Vec<IterationRecord>,
    pub f_star: Option<f64>,
}

impl Trace {
    pub fn final_f(&self) -> f64 {
        self.records.last().expect("nonempty trace").f_value
    }

    pub fn min_gap(&self) -> f64 {
        self.records
            .iter()
            .map(|r| r.fw_gap)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Method choice with its parameters, resolved and validated.
#[derive(Clone, Debug)]
pub enum MethodSpec {
    Deterministic,
    LSvrg {
        p: f64,
        b: usize,
    },
    Sarah {
        p: f64,
        b: usize,
    },
    Saga {
        b: usize,
    },
    SagaSarah {
        b: usize,
        read_pre_update: bool,
    },
    Sega,
    Jaguar,
    Zoja {
        tau: f64,
    },
    Diana {
        n_workers: usize,
        compressor: UnbiasedCompressor,
        alpha: f64,
    },
    Marina {
        n_workers: usize,
        compressor: UnbiasedCompressor,
        p: f64,
    },
    VrMarina {
        n_workers: usize,
        compressor: UnbiasedCompressor,
        p: f64,
        b_inner: usize,
    },
    Ef21 {
        n_workers: usize,
        compressor: BiasedCompressor,
    },
    QLSvrg {
        n_workers: usize,
        compressor: UnbiasedCompressor,
        p: f64,
    },
    PpLSvrg {
        n_workers: usize,
        p: f64,
        lagged_anchor_mean: bool,
    },
}

impl MethodSpec {
    pub fn method(&self) -> Method {
        match self {
            MethodSpec::Deterministic => Method::Deterministic,
            MethodSpec::LSvrg { .. } => Method::LSvrg,
            MethodSpec::Sarah { .. } => Method::Sarah,
            MethodSpec::Saga { .. } => Method::Saga,
            MethodSpec::SagaSarah { .. } => Method::SagaSarah,
            MethodSpec::Sega => Method::Sega,
            MethodSpec::Jaguar => Method::Jaguar,
            MethodSpec::Zoja { .. } => Method::Zoja,
            MethodSpec::Diana { .. } => Method::Diana,
            MethodSpec::Marina { .. } => Method::Marina,
            MethodSpec::VrMarina { .. } => Method::VrMarina,
            MethodSpec::Ef21 { .. } => Method::Ef21,
            MethodSpec::QLSvrg { .. } => Method::QLSvrg,
            MethodSpec::PpLSvrg { .. } => Method::PpLSvrg,
        }
    }

    /// The variance-recursion constants of this instance on the given data,
    /// used to derive the convex schedule constant.
    pub fn constants(&self, data: &Dataset) -> Result<MethodConstants> {
        let meta = data.smoothness();
        let mut params = ConstantsParams::new(data.n_samples(), data.dim())
            .with_smoothness(meta.l, meta.l_tilde);
        params.l_inner = meta.l_max;
        match self {
            MethodSpec::Deterministic | MethodSpec::Sega | MethodSpec::Jaguar => {}
            MethodSpec::LSvrg { p, b } | MethodSpec::Sarah { p, b } => {
                params = params.with_p(*p).with_b(*b);
            }
            MethodSpec::Saga { b } => params = params.with_b(*b),
            MethodSpec::SagaSarah { b, .. } => params = params.with_b(*b),
            MethodSpec::Zoja { tau } => params = params.with_tau(*tau),
            MethodSpec::Diana {
                n_workers,
                compressor,
                ..
            } => {
                params = params
                    .with_workers(*n_workers)
                    .with_omega(compressor.omega(data.dim()));
            }
            MethodSpec::Marina {
                n_workers,
                compressor,
                p,
            } => {
                params = params
                    .with_workers(*n_workers)
                    .with_omega(compressor.omega(data.dim()))
                    .with_p(*p);
            }
            MethodSpec::VrMarina {
                n_workers,
                compressor,
                p,
                b_inner,
            } => {
                params = params
                    .with_workers(*n_workers)
                    .with_omega(compressor.omega(data.dim()))
                    .with_p(*p)
                    .with_b(*b_inner);
            }
            MethodSpec::Ef21 {
                n_workers,
                compressor,
            } => {
                params = params
                    .with_workers(*n_workers)
                    .with_delta(compressor.delta(data.dim()));
            }
            MethodSpec::QLSvrg {
                n_workers,
                compressor,
                p,
            } => {
                params = params
                    .with_workers(*n_workers)
                    .with_omega(compressor.omega(data.dim()))
                    .with_p(*p);
            }
            MethodSpec::PpLSvrg { n_workers, p, .. } => {
                params = params.with_workers(*n_workers).with_p(*p);
            }
        }
        constants_for(self.method(), &params)
    }

    fn build(&self, data: &Dataset, x0: &Vector, shuffle_partition: Option<u64>) -> Result<Box<dyn GradientEstimator>> {
        let partition = |n_workers: usize| -> Result<Partition> {
            match shuffle_partition {
                Some(seed) => Partition::shuffled(data.n_samples(), n_workers, seed),
                None => Partition::contiguous(data.n_samples(), n_workers),
            }
        };
        Ok(match self {
            MethodSpec::Deterministic => Box::new(Deterministic::new(data, x0)),
            MethodSpec::LSvrg { p, b } => Box::new(LSvrg::new(data, x0, *p, *b)),
            MethodSpec::Sarah { p, b } => Box::new(Sarah::new(data, x0, *p, *b)),
            MethodSpec::Saga { b } => Box::new(Saga::new(data, x0, *b)),
            MethodSpec::SagaSarah { b, read_pre_update } => Box::new(
                SagaSarah::with_table_reading(data, x0, *b, *read_pre_update),
            ),
            MethodSpec::Sega => Box::new(Sega::new(data, x0)),
            MethodSpec::Jaguar => Box::new(Jaguar::new(data, x0)),
            MethodSpec::Zoja { tau } => Box::new(Zoja::new(data, x0, *tau)),
            MethodSpec::Diana {
                n_workers,
                compressor,
                alpha,
            } => Box::new(Diana::new(data, partition(*n_workers)?, *compressor, *alpha)?),
            MethodSpec::Marina {
                n_workers,
                compressor,
                p,
            } => Box::new(Marina::new(data, partition(*n_workers)?, *compressor, *p)?),
            MethodSpec::VrMarina {
                n_workers,
                compressor,
                p,
                b_inner,
            } => Box::new(VrMarina::new(
                data,
                partition(*n_workers)?,
                *compressor,
                *p,
                *b_inner,
            )?),
            MethodSpec::Ef21 {
                n_workers,
                compressor,
            } => Box::new(Ef21::new(data, partition(*n_workers)?, *compressor)?),
            MethodSpec::QLSvrg {
                n_workers,
                compressor,
                p,
            } => Box::new(QLSvrg::new(data, partition(*n_workers)?, *compressor, *p)?),
            MethodSpec::PpLSvrg {
                n_workers,
                p,
                lagged_anchor_mean,
            } => {
                let mut sim = PpLSvrg::new(data, partition(*n_workers)?, *p)?;
                sim.lagged_anchor_mean = *lagged_anchor_mean;
                Box::new(sim)
            }
        })
    }
}

/// Everything a run needs besides the dataset and the set.
#[derive(Clone, Debug)]
pub struct RunSpec {
    pub method: MethodSpec,
    pub schedule: crate::schedule::ScheduleMode,
    pub iterations: usize,
    pub seed: u64,
    pub log_every: usize,
    /// Shuffle the worker partition with this seed instead of the default
    /// contiguous heterogeneity-preserving blocks.
    pub shuffle_partition: Option<u64>,
}

impl RunSpec {
    pub fn new(method: MethodSpec, schedule: crate::schedule::ScheduleMode, iterations: usize, seed: u64) -> Self {
        RunSpec {
            method,
            schedule,
            iterations,
            seed,
            log_every: (iterations / 500).max(1),
            shuffle_partition: None,
        }
    }
}

/// Execute a run: init at x0 = 0 with g0 = grad f(x0), then `iterations`
/// conditional-gradient steps with the estimator advancing behind the step.
/// Records are written at iteration 0, every `log_every` iterations, and at
/// the horizon. Deterministic given (spec, seed), except for wall-clock
/// `elapsed_ms`.
pub fn run(data: &Dataset, set: &dyn FeasibleSet, spec: &RunSpec) -> Result<Trace> {
    if set.dim() != data.dim() {
        return Err(Error::DimensionMismatch {
            expected: data.dim(),
            got: set.dim(),
        });
    }
    let constants = spec.method.constants(data)?;
    let schedule = crate::schedule::Schedule::new(
        spec.schedule,
        spec.iterations,
        constants.rho1,
        constants.rho2,
    );
    let start = Instant::now();
    let mut x = Vector::zeros(data.dim());
    let mut estimator = spec.method.build(data, &x, spec.shuffle_partition)?;

    let mut trace = Trace::default();
    let record = |trace: &mut Trace, k: usize, x: &Vector, c: &Counters, start: &Instant| {
        trace.records.push(IterationRecord {
            k,
            f_value: data.value(x),
            fw_gap: fw_gap(x, data, set),
            grad_calls: c.grad_calls,
            coord_calls: c.coord_calls,
            bits_sent: c.bits_sent,
            elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        });
    };
    record(&mut trace, 0, &x, estimator.counters(), &start);

    for k in 0..spec.iterations {
        let eta = schedule.eta(k);
        let x_next = fw_step(&x, estimator.gradient(), eta, set)?;
        debug_assert!(set.contains(&x_next, 1e-9), "iterate left the set");
        debug_assert!(x_next.is_finite());
        estimator.step(data, &x_next, &x, k as u64, spec.seed);
        x = x_next;
        let done = k + 1;
        if done % spec.log_every == 0 || done == spec.iterations {
            record(&mut trace, done, &x, estimator.counters(), &start);
        }
    }
    Ok(trace)
}

/// Long deterministic run used to produce a reference optimum f* for
/// suboptimality reporting; returns the best objective value seen.
pub fn reference_optimum(data: &Dataset, set: &dyn FeasibleSet, iterations: usize) -> Result<f64> {
    let spec = RunSpec {
        method: MethodSpec::Deterministic,
        schedule: crate::schedule::ScheduleMode::Convex,
        iterations,
        seed: 0,
        log_every: (iterations / 64).max(1),
        shuffle_partition: None,
    };
    let trace = run(data, set, &spec)?;
    Ok(trace
        .records
        .iter()
        .map(|r| r.f_value)
        .fold(f64::INFINITY, f64::min))
}
