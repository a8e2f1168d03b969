//! Experiment configuration: a flat key=value text file (one key per line,
//! `#` comments allowed, nested keys dotted as in `compressor.kind`).
//!
//! Method parameters left unset fall back to the theory presets where one
//! exists: loopless-SVRG and SAGA batch b = ceil(n^(2/3)), loopless-SVRG
//! p = b^(1/4)/sqrt(n), MARINA and VR-MARINA p = k/(dim+k), Q-L-SVRG
//! p = k/dim, PP-L-SVRG p = 1/(n_workers+1), DIANA alpha = 1/(1+omega).
//! SARAH and SAGA-SARAH have no preset here and require explicit values.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::compression::{BiasedCompressor, UnbiasedCompressor};
use crate::constants::Method;
use crate::driver::{MethodSpec, RunSpec};
use crate::error::{Error, Result};
use crate::objective::Dataset;
use crate::schedule::ScheduleMode;
use crate::sets::L1Ball;

/// Fully validated run configuration, dataset already loaded.
pub struct RunConfig {
    pub dataset: Dataset,
    pub ball: L1Ball,
    pub spec: RunSpec,
    pub out: PathBuf,
}

const KNOWN_KEYS: &[&str] = &[
    "method",
    "dataset",
    "l1_radius",
    "schedule",
    "eta",
    "K",
    "seed",
    "log_every",
    "out",
    "p",
    "b",
    "tau",
    "alpha",
    "n_workers",
    "compressor.kind",
    "compressor.k",
    "partition",
    "partition_seed",
    "table_read",
    "anchor_mean",
];

struct Raw {
    map: BTreeMap<String, String>,
}

impl Raw {
    fn parse(text: &str) -> Result<Raw> {
        let mut map = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key=value, got `{line}`", i + 1))
            })?;
            let key = key.trim();
            let value = value.trim();
            if !KNOWN_KEYS.contains(&key) {
                return Err(Error::Config(format!("unknown key `{key}`")));
            }
            if map.insert(key.to_string(), value.to_string()).is_some() {
                return Err(Error::Config(format!("duplicate key `{key}`")));
            }
        }
        Ok(Raw { map })
    }

    fn take(&mut self, key: &str) -> Option<String> {
        self.map.remove(key)
    }

    fn f64(&mut self, key: &'static str) -> Result<Option<f64>> {
        match self.take(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::Config(format!("key `{key}`: bad number `{v}`"))),
        }
    }

    fn usize(&mut self, key: &'static str) -> Result<Option<usize>> {
        match self.take(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::Config(format!("key `{key}`: bad integer `{v}`"))),
        }
    }

    fn u64(&mut self, key: &'static str) -> Result<Option<u64>> {
        match self.take(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::Config(format!("key `{key}`: bad integer `{v}`"))),
        }
    }

    fn reject_leftover_method_params(&self, method: Method) -> Result<()> {
        if let Some(key) = self.map.keys().next() {
            return Err(Error::Config(format!(
                "key `{key}` is not valid for method `{}`",
                method.name()
            )));
        }
        Ok(())
    }
}

fn preset_b(n: usize) -> usize {
    (n as f64).powf(2.0 / 3.0).ceil() as usize
}

fn rand_k_budget(c: &UnbiasedCompressor, dim: usize) -> usize {
    match c {
        UnbiasedCompressor::Identity => dim,
        UnbiasedCompressor::RandK { k } => *k,
    }
}

/// Raw method parameters as a caller may supply them; `resolve` applies the
/// theory presets and validates against the chosen method.
#[derive(Clone, Debug, Default)]
pub struct MethodParams {
    pub p: Option<f64>,
    pub b: Option<usize>,
    pub tau: Option<f64>,
    pub alpha: Option<f64>,
    pub n_workers: Option<usize>,
    pub compressor_kind: Option<String>,
    pub compressor_k: Option<usize>,
    pub table_read: Option<String>,
    pub anchor_mean: Option<String>,
}

impl MethodParams {
    pub fn resolve(self, method: Method, n: usize, dim: usize) -> Result<MethodSpec> {
        resolve_method_spec(method, n, dim, self)
    }
}

/// Parse, load the dataset, resolve defaults and validate everything against
/// the chosen method.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    load_config_str(&text, path.parent())
}

pub fn load_config_str(text: &str, base_dir: Option<&Path>) -> Result<RunConfig> {
    let mut raw = Raw::parse(text)?;

    let method_name = raw
        .take("method")
        .ok_or(Error::Config("missing key `method`".into()))?;
    let method = Method::parse(&method_name)?;

    let dataset_path = raw
        .take("dataset")
        .ok_or(Error::Config("missing key `dataset`".into()))?;
    let dataset_path = match base_dir {
        Some(dir) if !Path::new(&dataset_path).is_absolute() => dir.join(&dataset_path),
        _ => PathBuf::from(&dataset_path),
    };
    let file = std::fs::File::open(&dataset_path)?;
    let dataset = crate::objective::parse_libsvm(std::io::BufReader::new(file))?;
    let n = dataset.n_samples();
    let dim = dataset.dim();

    let radius = raw.f64("l1_radius")?.unwrap_or(2e3);
    let ball = L1Ball::new(radius, dim)?;

    let eta = raw.f64("eta")?;
    let schedule_name = raw.take("schedule").unwrap_or_else(|| "convex".into());
    let schedule = ScheduleMode::parse(&schedule_name, eta)?;

    let iterations = raw
        .usize("K")?
        .ok_or(Error::Config("missing key `K`".into()))?;
    let seed = raw.u64("seed")?.unwrap_or(0);
    let log_every = raw.usize("log_every")?.unwrap_or((iterations / 500).max(1));
    if log_every == 0 {
        return Err(Error::Config("log_every must be >= 1".into()));
    }
    let out = raw
        .take("out")
        .unwrap_or_else(|| format!("{}.csv", method.name()));

    let shuffle_partition = match raw.take("partition").as_deref() {
        None | Some("contiguous") => None,
        Some("shuffled") => Some(raw.u64("partition_seed")?.unwrap_or(seed)),
        Some(other) => {
            return Err(Error::Config(format!(
                "unknown partition layout `{other}`"
            )))
        }
    };

    // method parameters
    let params = MethodParams {
        p: raw.f64("p")?,
        b: raw.usize("b")?,
        tau: raw.f64("tau")?,
        alpha: raw.f64("alpha")?,
        n_workers: raw.usize("n_workers")?,
        compressor_kind: raw.take("compressor.kind"),
        compressor_k: raw.usize("compressor.k")?,
        table_read: raw.take("table_read"),
        anchor_mean: raw.take("anchor_mean"),
    };
    raw.reject_leftover_method_params(method)?;
    let method_spec = params.resolve(method, n, dim)?;

    let spec = RunSpec {
        method: method_spec,
        schedule,
        iterations,
        seed,
        log_every,
        shuffle_partition,
    };
    Ok(RunConfig {
        dataset,
        ball,
        spec,
        out: PathBuf::from(out),
    })
}

fn resolve_method_spec(
    method: Method,
    n: usize,
    dim: usize,
    params: MethodParams,
) -> Result<MethodSpec> {
    let MethodParams {
        p,
        b,
        tau,
        alpha,
        n_workers,
        compressor_kind: comp_kind,
        compressor_k: comp_k,
        table_read,
        anchor_mean,
    } = params;

    let check_b = |b: usize| -> Result<usize> {
        if b == 0 || b > n {
            return Err(Error::Config(format!("b must be in 1..={n}, got {b}")));
        }
        Ok(b)
    };
    let check_p = |p: f64| -> Result<f64> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::Config(format!("p must be in (0,1], got {p}")));
        }
        Ok(p)
    };
    let need_workers = || -> Result<usize> {
        let w = n_workers.ok_or(Error::Config(
            "distributed methods require n_workers".into(),
        ))?;
        if w == 0 || w > n {
            return Err(Error::Config(format!(
                "n_workers must be in 1..={n}, got {w}"
            )));
        }
        Ok(w)
    };
    let unbiased = |comp_kind: &Option<String>| -> Result<UnbiasedCompressor> {
        let kind = comp_kind
            .as_deref()
            .ok_or(Error::Config("missing key `compressor.kind`".into()))?;
        let c = UnbiasedCompressor::parse(kind, comp_k)?;
        c.validate(dim)?;
        Ok(c)
    };

    // reject parameters that do not belong to the method
    let allowed: &[&str] = match method {
        Method::Deterministic | Method::Sega | Method::Jaguar => &[],
        Method::LSvrg | Method::Sarah => &["p", "b"],
        Method::Saga => &["b"],
        Method::SagaSarah => &["b", "table_read"],
        Method::Zoja => &["tau"],
        Method::Diana => &["alpha", "n_workers", "compressor.kind", "compressor.k"],
        Method::Marina | Method::QLSvrg => &["p", "n_workers", "compressor.kind", "compressor.k"],
        Method::VrMarina => &["p", "b", "n_workers", "compressor.kind", "compressor.k"],
        Method::Ef21 => &["n_workers", "compressor.kind", "compressor.k"],
        Method::PpLSvrg => &["p", "n_workers", "anchor_mean"],
    };
    let given: &[(&str, bool)] = &[
        ("p", p.is_some()),
        ("b", b.is_some()),
        ("tau", tau.is_some()),
        ("alpha", alpha.is_some()),
        ("n_workers", n_workers.is_some()),
        ("compressor.kind", comp_kind.is_some()),
        ("compressor.k", comp_k.is_some()),
        ("table_read", table_read.is_some()),
        ("anchor_mean", anchor_mean.is_some()),
    ];
    for (key, present) in given {
        if *present && !allowed.contains(key) {
            return Err(Error::Config(format!(
                "key `{key}` is not valid for method `{}`",
                method.name()
            )));
        }
    }

    let method_spec = match method {
        Method::Deterministic => MethodSpec::Deterministic,
        Method::LSvrg => {
            let b = check_b(b.unwrap_or_else(|| preset_b(n)))?;
            let p = check_p(p.unwrap_or((b as f64).powf(0.25) / (n as f64).sqrt()))?;
            MethodSpec::LSvrg { p, b }
        }
        Method::Sarah => {
            let p = check_p(p.ok_or(Error::Config("sarah requires p".into()))?)?;
            let b = check_b(b.ok_or(Error::Config("sarah requires b".into()))?)?;
            MethodSpec::Sarah { p, b }
        }
        Method::Saga => {
            let b = check_b(b.unwrap_or_else(|| preset_b(n)))?;
            MethodSpec::Saga { b }
        }
        Method::SagaSarah => {
            let b = check_b(b.ok_or(Error::Config("saga_sarah requires b".into()))?)?;
            let read_pre_update = match table_read.as_deref() {
                None | Some("post") => false,
                Some("pre") => true,
                Some(other) => {
                    return Err(Error::Config(format!(
                        "table_read must be post|pre, got `{other}`"
                    )))
                }
            };
            MethodSpec::SagaSarah { b, read_pre_update }
        }
        Method::Sega => MethodSpec::Sega,
        Method::Jaguar => MethodSpec::Jaguar,
        Method::Zoja => {
            let tau = tau.ok_or(Error::Config("zoja requires tau".into()))?;
            if !(tau > 0.0) {
                return Err(Error::Config(format!("tau must be > 0, got {tau}")));
            }
            MethodSpec::Zoja { tau }
        }
        Method::Diana => {
            let n_workers = need_workers()?;
            let compressor = unbiased(&comp_kind)?;
            let omega = compressor.omega(dim);
            let alpha = alpha.unwrap_or(1.0 / (1.0 + omega));
            if !(alpha > 0.0 && alpha <= 1.0) {
                return Err(Error::Config(format!(
                    "alpha must be in (0,1], got {alpha}"
                )));
            }
            MethodSpec::Diana {
                n_workers,
                compressor,
                alpha,
            }
        }
        Method::Marina => {
            let n_workers = need_workers()?;
            let compressor = unbiased(&comp_kind)?;
            let k = rand_k_budget(&compressor, dim);
            let p = check_p(p.unwrap_or(k as f64 / (dim + k) as f64))?;
            MethodSpec::Marina {
                n_workers,
                compressor,
                p,
            }
        }
        Method::VrMarina => {
            let n_workers = need_workers()?;
            let compressor = unbiased(&comp_kind)?;
            let k = rand_k_budget(&compressor, dim);
            let p = check_p(p.unwrap_or(k as f64 / (dim + k) as f64))?;
            let b_inner = b.ok_or(Error::Config("vr_marina requires b (inner batch)".into()))?;
            let min_shard = n / n_workers;
            if b_inner == 0 || b_inner > min_shard {
                return Err(Error::Config(format!(
                    "inner batch b must be in 1..={min_shard}, got {b_inner}"
                )));
            }
            MethodSpec::VrMarina {
                n_workers,
                compressor,
                p,
                b_inner,
            }
        }
        Method::Ef21 => {
            let n_workers = need_workers()?;
            let kind = comp_kind
                .as_deref()
                .ok_or(Error::Config("missing key `compressor.kind`".into()))?;
            let compressor = BiasedCompressor::parse(kind, comp_k)?;
            compressor.validate(dim)?;
            MethodSpec::Ef21 {
                n_workers,
                compressor,
            }
        }
        Method::QLSvrg => {
            let n_workers = need_workers()?;
            let compressor = unbiased(&comp_kind)?;
            let k = rand_k_budget(&compressor, dim);
            let p = check_p(p.unwrap_or(k as f64 / dim as f64))?;
            MethodSpec::QLSvrg {
                n_workers,
                compressor,
                p,
            }
        }
        Method::PpLSvrg => {
            let n_workers = need_workers()?;
            let p = check_p(p.unwrap_or(1.0 / (n_workers as f64 + 1.0)))?;
            let lagged_anchor_mean = match anchor_mean.as_deref() {
                None | Some("post") => false,
                Some("lagged") => true,
                Some(other) => {
                    return Err(Error::Config(format!(
                        "anchor_mean must be post|lagged, got `{other}`"
                    )))
                }
            };
            MethodSpec::PpLSvrg {
                n_workers,
                p,
                lagged_anchor_mean,
            }
        }
    };
    Ok(method_spec)
}
