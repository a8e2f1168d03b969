//! Self-check suite behind the `verify` CLI command: fast certificates for
//! the oracle, the compressors, estimator unbiasedness and the reduction
//! identities. Each check returns a failure description instead of
//! panicking so the command can report one line per property.

use crate::compression::{k_subsets, rand_k_with_subset, top_k, UnbiasedCompressor};
use crate::constants::Method;
use crate::driver::{run, MethodSpec, RunSpec};
use crate::estimators::{GradientEstimator, LSvrg, LSvrgDecision, Saga, SagaDecision, Sega};
use crate::objective::Dataset;
use crate::rng::{RngStream, StreamKind};
use crate::schedule::{schedule_convex, ScheduleMode};
use crate::sets::{l1_vertices, FeasibleSet, L1Ball};
use crate::vector::Vector;

type Check = (&'static str, fn() -> std::result::Result<(), String>);

fn toy_dataset() -> Dataset {
    Dataset::from_rows(
        vec![
            vec![(0, 1.0), (2, -2.0)],
            vec![(1, 0.5), (2, 1.0)],
            vec![(0, -1.0), (1, 1.0)],
        ],
        vec![1.0, -1.0, 1.0],
        0,
    )
    .expect("toy rows")
}

fn check_lmo_vertex_optimality() -> Result<(), String> {
    for dim in 1..=8usize {
        let ball = L1Ball::new(1.5, dim).map_err(|e| e.to_string())?;
        let mut rng = RngStream::new(11, 0, dim as u64, StreamKind::Sampling);
        for _ in 0..200 {
            let g = Vector::from_vec((0..dim).map(|_| rng.uniform() * 2.0 - 1.0).collect());
            let s = ball.lmo(&g).map_err(|e| e.to_string())?;
            if (s.norm1() - 1.5).abs() > 0.0 {
                return Err(format!("lmo output l1 norm {} != radius", s.norm1()));
            }
            let val = g.dot(&s);
            for v in l1_vertices(1.5, dim) {
                if val > g.dot(&v) {
                    return Err(format!("lmo value {val} beaten by a vertex at dim {dim}"));
                }
            }
        }
    }
    Ok(())
}

fn check_rand_k_certificate() -> Result<(), String> {
    for dim in 2..=6usize {
        for k in 1..=dim {
            let mut rng = RngStream::new(5, 0, (dim * 10 + k) as u64, StreamKind::Sampling);
            let x = Vector::from_vec((0..dim).map(|_| rng.uniform() * 4.0 - 2.0).collect());
            let subsets = k_subsets(dim, k);
            let mut mean = Vector::zeros(dim);
            let mut dev = 0.0;
            for s in &subsets {
                let c = rand_k_with_subset(&x, k, s);
                mean.add_scaled(1.0 / subsets.len() as f64, &c.vector);
                dev += c.vector.dist_sq(&x) / subsets.len() as f64;
            }
            if mean.dist_sq(&x).sqrt() > 1e-12 {
                return Err(format!("RandK biased at dim={dim} k={k}"));
            }
            let omega = UnbiasedCompressor::RandK { k }.omega(dim);
            if (dev - omega * x.norm_sq()).abs() > 1e-9 * x.norm_sq().max(1.0) {
                return Err(format!(
                    "RandK variance {dev} != omega*||x||^2 at dim={dim} k={k}"
                ));
            }
        }
    }
    Ok(())
}

fn check_top_k_contraction() -> Result<(), String> {
    let mut rng = RngStream::new(6, 0, 0, StreamKind::Sampling);
    for dim in 2..=6usize {
        for k in 1..dim {
            let delta = dim as f64 / k as f64;
            for _ in 0..400 {
                let x = Vector::from_vec((0..dim).map(|_| rng.uniform() * 4.0 - 2.0).collect());
                let c = top_k(&x, k);
                if c.vector.dist_sq(&x) > (1.0 - 1.0 / delta) * x.norm_sq() + 1e-12 {
                    return Err(format!("TopK contraction violated at dim={dim} k={k}"));
                }
            }
            let all_equal = Vector::from_vec(vec![1.0; dim]);
            let c = top_k(&all_equal, k);
            let err = c.vector.dist_sq(&all_equal);
            if (err - (1.0 - 1.0 / delta) * all_equal.norm_sq()).abs() > 1e-12 {
                return Err(format!("TopK bound not tight on all-equal at dim={dim} k={k}"));
            }
        }
    }
    Ok(())
}

fn check_gradient_finite_difference() -> Result<(), String> {
    let data = toy_dataset();
    let mut rng = RngStream::new(7, 0, 0, StreamKind::Sampling);
    for _ in 0..20 {
        let x = Vector::from_vec((0..data.dim()).map(|_| rng.uniform() * 2.0 - 1.0).collect());
        let g = data.full_gradient(&x);
        for j in 0..data.dim() {
            let h = 1e-6;
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            let fd = (data.value(&xp) - data.value(&xm)) / (2.0 * h);
            if (g[j] - fd).abs() / fd.abs().max(1.0) > 1e-5 {
                return Err(format!("gradient coord {j}: {} vs fd {}", g[j], fd));
            }
        }
    }
    Ok(())
}

fn check_estimator_unbiasedness() -> Result<(), String> {
    let data = toy_dataset();
    let n = data.n_samples();
    let x0 = Vector::zeros(data.dim());
    let x_next = Vector::from_vec(vec![0.3, -0.2, 0.1]);
    let target = data.full_gradient(&x_next);

    // SAGA over all batches from the post-init state
    let mut mean = Vector::zeros(data.dim());
    let batches = k_subsets(n, 1);
    for batch in &batches {
        let mut saga = Saga::new(&data, &x0, 1);
        saga.apply(
            &data,
            &x_next,
            &x0,
            &SagaDecision {
                batch: batch.clone(),
            },
        );
        mean.add_scaled(1.0 / batches.len() as f64, saga.gradient());
    }
    if mean.dist_sq(&target).sqrt() > 1e-12 {
        return Err("SAGA conditional mean differs from the exact gradient".into());
    }

    // SEGA over all coordinates from the post-init state
    let mut mean = Vector::zeros(data.dim());
    for coord in 0..data.dim() {
        let mut sega = Sega::new(&data, &x0);
        sega.apply(
            &data,
            &x_next,
            &x0,
            &crate::estimators::CoordDecision { coord },
        );
        mean.add_scaled(1.0 / data.dim() as f64, sega.gradient());
    }
    if mean.dist_sq(&target).sqrt() > 1e-12 {
        return Err("SEGA conditional mean differs from the exact gradient".into());
    }

    // loopless SVRG conditioned on its anchor, over all batches
    let mut mean = Vector::zeros(data.dim());
    for batch in &batches {
        let mut est = LSvrg::new(&data, &x0, 0.5, 1);
        est.apply(
            &data,
            &x_next,
            &x0,
            &LSvrgDecision {
                refresh: false,
                batch: batch.clone(),
            },
        );
        mean.add_scaled(1.0 / batches.len() as f64, est.gradient());
    }
    if mean.dist_sq(&target).sqrt() > 1e-12 {
        return Err("loopless-SVRG conditional mean differs from the exact gradient".into());
    }
    Ok(())
}

fn check_reduction_identity() -> Result<(), String> {
    let data = toy_dataset();
    let ball = L1Ball::new(2.0, data.dim()).map_err(|e| e.to_string())?;
    // shared constant schedule so only the estimators can differ
    let mut det_spec = RunSpec::new(MethodSpec::Deterministic, ScheduleMode::Nonconvex, 50, 1);
    det_spec.log_every = 1;
    let mut red_spec = det_spec.clone();
    red_spec.method = MethodSpec::LSvrg {
        p: 1.0,
        b: data.n_samples(),
    };
    let det = run(&data, &ball, &det_spec).map_err(|e| e.to_string())?;
    let red = run(&data, &ball, &red_spec).map_err(|e| e.to_string())?;
    for (a, b) in det.records.iter().zip(&red.records) {
        if (a.f_value - b.f_value).abs() > 1e-12 {
            return Err(format!(
                "full-batch loopless SVRG diverged from the exact run at k={}",
                a.k
            ));
        }
    }
    Ok(())
}

fn check_schedule_ranges() -> Result<(), String> {
    for big_k in [1usize, 2, 10, 1000] {
        for rho in [1.0, 0.3, 1e-3] {
            for k in 0..big_k.min(512) {
                let eta = schedule_convex(k, big_k, rho, 1.0);
                if !(eta > 0.0 && eta <= 1.0) {
                    return Err(format!("eta {eta} out of range at k={k} K={big_k}"));
                }
            }
        }
    }
    Ok(())
}

fn check_constants_table() -> Result<(), String> {
    use crate::constants::{constants_for, ConstantsParams};
    let params = ConstantsParams::new(16, 8)
        .with_p(0.25)
        .with_b(4)
        .with_omega(3.0)
        .with_delta(4.0)
        .with_workers(2)
        .with_tau(1e-4);
    for m in [
        Method::Deterministic,
        Method::LSvrg,
        Method::Sarah,
        Method::Saga,
        Method::SagaSarah,
        Method::Sega,
        Method::Jaguar,
        Method::Zoja,
        Method::Diana,
        Method::Marina,
        Method::VrMarina,
        Method::Ef21,
        Method::QLSvrg,
        Method::PpLSvrg,
    ] {
        let c = constants_for(m, &params).map_err(|e| e.to_string())?;
        if c.schedule_d() < 2.0 {
            return Err(format!("{m:?}: schedule constant below 2"));
        }
    }
    Ok(())
}

pub fn all_checks() -> Vec<Check> {
    vec![
        ("lmo vertex optimality", check_lmo_vertex_optimality),
        ("RandK unbiasedness certificate", check_rand_k_certificate),
        ("TopK contraction certificate", check_top_k_contraction),
        ("gradient vs finite differences", check_gradient_finite_difference),
        ("estimator conditional unbiasedness", check_estimator_unbiasedness),
        ("full-batch reduction identity", check_reduction_identity),
        ("step-size schedule ranges", check_schedule_ranges),
        ("recursion constants table", check_constants_table),
    ]
}

/// Run every property, print one line each, return overall success.
pub fn run_all(mut out: impl std::io::Write) -> bool {
    let mut ok = true;
    for (name, check) in all_checks() {
        match check() {
            Ok(()) => {
                let _ = writeln!(out, "PASS {name}");
            }
            Err(msg) => {
                ok = false;
                let _ = writeln!(out, "FAIL {name}: {msg}");
            }
        }
    }
    ok
}
