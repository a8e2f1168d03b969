//! Per-method variance-recursion constants.
//!
//! Every supported gradient estimator satisfies a two-sequence recursion on
//! its error E||g^k - grad f(x^k)||^2 governed by the tuple
//! (rho1, rho2, A, B, C, E). The step-size schedules only consume
//! d = 2 / min(rho1, rho2); the full tuple is exposed for diagnostics and for
//! the recursion tests. Where the appendix statement of a rate lemma differs
//! from the main-text one (JAGUAR's rho1, EF21's rho2, the 1/n factor of
//! Q-L-SVRG), the appendix version is used: it is the one with a proof.

use crate::error::{Error, Result};

/// Supported gradient estimators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    Deterministic,
    LSvrg,
    Sarah,
    Saga,
    SagaSarah,
    Sega,
    Jaguar,
    Zoja,
    Diana,
    Marina,
    VrMarina,
    Ef21,
    QLSvrg,
    PpLSvrg,
}

impl Method {
    pub fn parse(name: &str) -> Result<Method> {
        Ok(match name {
            "deterministic" | "fw" => Method::Deterministic,
            "lsvrg" | "l-svrg" | "l_svrg" => Method::LSvrg,
            "sarah" => Method::Sarah,
            "saga" => Method::Saga,
            "saga_sarah" | "saga-sarah" => Method::SagaSarah,
            "sega" => Method::Sega,
            "jaguar" => Method::Jaguar,
            "zoja" => Method::Zoja,
            "diana" => Method::Diana,
            "marina" => Method::Marina,
            "vr_marina" | "vr-marina" => Method::VrMarina,
            "ef21" => Method::Ef21,
            "qlsvrg" | "q-l-svrg" | "q_l_svrg" => Method::QLSvrg,
            "pplsvrg" | "pp-l-svrg" | "pp_l_svrg" => Method::PpLSvrg,
            other => return Err(Error::UnknownMethod(other.to_string())),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Method::Deterministic => "deterministic",
            Method::LSvrg => "lsvrg",
            Method::Sarah => "sarah",
            Method::Saga => "saga",
            Method::SagaSarah => "saga_sarah",
            Method::Sega => "sega",
            Method::Jaguar => "jaguar",
            Method::Zoja => "zoja",
            Method::Diana => "diana",
            Method::Marina => "marina",
            Method::VrMarina => "vr_marina",
            Method::Ef21 => "ef21",
            Method::QLSvrg => "qlsvrg",
            Method::PpLSvrg => "pplsvrg",
        }
    }

    pub fn is_distributed(&self) -> bool {
        matches!(
            self,
            Method::Diana
                | Method::Marina
                | Method::VrMarina
                | Method::Ef21
                | Method::QLSvrg
                | Method::PpLSvrg
        )
    }
}

/// The error-recursion tuple of one method instance.
///
/// The companion variance sequence sigma_k^2 is a proof device (per method it
/// is e.g. ||x^k - w^k||^2 for loopless SVRG or the memory-vs-gradient gap for
/// SEGA); estimators expose it only as an optional diagnostic.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MethodConstants {
    pub rho1: f64,
    pub rho2: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub e: f64,
}

impl MethodConstants {
    /// Schedule constant d = 2 / min(rho1, rho2); always >= 2.
    pub fn schedule_d(&self) -> f64 {
        2.0 / self.rho1.min(self.rho2)
    }

    fn validate(self) -> Result<Self> {
        let ok_rho = |r: f64| r > 0.0 && r <= 1.0;
        if !ok_rho(self.rho1) || !ok_rho(self.rho2) {
            return Err(Error::InvalidParam {
                name: "rho",
                msg: format!("rho1={}, rho2={} outside (0,1]", self.rho1, self.rho2),
            });
        }
        for (name, v) in [("A", self.a), ("B", self.b), ("C", self.c), ("E", self.e)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParam {
                    name: "constants",
                    msg: format!("{name}={v} must be a nonnegative real"),
                });
            }
        }
        Ok(self)
    }
}

/// Inputs needed to instantiate the constants of a particular method.
/// Smoothness constants default to 1, which is enough when only the
/// rho's (and hence the schedule) are needed.
#[derive(Clone, Debug)]
pub struct ConstantsParams {
    pub n_samples: usize,
    pub dim: usize,
    pub p: Option<f64>,
    pub b: Option<usize>,
    pub omega: Option<f64>,
    pub delta: Option<f64>,
    pub n_workers: Option<usize>,
    pub tau: Option<f64>,
    /// Smoothness of the averaged objective.
    pub l: f64,
    /// Root-mean-square per-sample smoothness.
    pub l_tilde: f64,
    /// Bound for the inner-minibatch smoothness of variance-reduced
    /// distributed rounds (max per-sample constant is always valid).
    pub l_inner: f64,
}

impl ConstantsParams {
    pub fn new(n_samples: usize, dim: usize) -> Self {
        ConstantsParams {
            n_samples,
            dim,
            p: None,
            b: None,
            omega: None,
            delta: None,
            n_workers: None,
            tau: None,
            l: 1.0,
            l_tilde: 1.0,
            l_inner: 1.0,
        }
    }

    pub fn with_p(mut self, p: f64) -> Self {
        self.p = Some(p);
        self
    }

    pub fn with_b(mut self, b: usize) -> Self {
        self.b = Some(b);
        self
    }

    pub fn with_omega(mut self, omega: f64) -> Self {
        self.omega = Some(omega);
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = Some(delta);
        self
    }

    pub fn with_workers(mut self, n: usize) -> Self {
        self.n_workers = Some(n);
        self
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = Some(tau);
        self
    }

    pub fn with_smoothness(mut self, l: f64, l_tilde: f64) -> Self {
        self.l = l;
        self.l_tilde = l_tilde;
        self
    }

    fn p(&self) -> Result<f64> {
        let p = self.p.ok_or(Error::MissingParam("p"))?;
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::InvalidParam {
                name: "p",
                msg: format!("must be in (0,1], got {p}"),
            });
        }
        Ok(p)
    }

    fn b(&self) -> Result<usize> {
        let b = self.b.ok_or(Error::MissingParam("b"))?;
        if b == 0 || b > self.n_samples {
            return Err(Error::InvalidParam {
                name: "b",
                msg: format!("must be in 1..={}, got {b}", self.n_samples),
            });
        }
        Ok(b)
    }

    fn omega(&self) -> Result<f64> {
        let omega = self.omega.ok_or(Error::MissingParam("omega"))?;
        if !(omega >= 0.0) {
            return Err(Error::InvalidParam {
                name: "omega",
                msg: format!("must be >= 0, got {omega}"),
            });
        }
        Ok(omega)
    }

    fn delta(&self) -> Result<f64> {
        let delta = self.delta.ok_or(Error::MissingParam("delta"))?;
        if !(delta >= 1.0) {
            return Err(Error::InvalidParam {
                name: "delta",
                msg: format!("must be >= 1, got {delta}"),
            });
        }
        Ok(delta)
    }

    fn n_workers(&self) -> Result<usize> {
        let n = self.n_workers.ok_or(Error::MissingParam("n_workers"))?;
        if n == 0 {
            return Err(Error::InvalidParam {
                name: "n_workers",
                msg: "must be >= 1".into(),
            });
        }
        Ok(n)
    }
}

/// The recursion tuple for a method instance, exactly as stated by the
/// corresponding rate lemma.
pub fn constants_for(method: Method, params: &ConstantsParams) -> Result<MethodConstants> {
    let lt2 = params.l_tilde * params.l_tilde;
    let l2 = params.l * params.l;
    let n = params.n_samples as f64;
    let d = params.dim as f64;
    let c = match method {
        Method::Deterministic => MethodConstants {
            rho1: 1.0,
            rho2: 1.0,
            a: 0.0,
            b: 0.0,
            c: 0.0,
            e: 0.0,
        },
        Method::LSvrg => {
            let p = params.p()?;
            let b = params.b()? as f64;
            MethodConstants {
                rho1: 1.0,
                rho2: p / 2.0,
                a: lt2 / b * (1.0 - p / 2.0),
                b: 8.0 * lt2 / (p * b),
                c: 0.0,
                e: 8.0 / p,
            }
        }
        Method::Sarah => {
            let p = params.p()?;
            let b = params.b()? as f64;
            MethodConstants {
                rho1: p,
                rho2: 1.0,
                a: 0.0,
                b: (1.0 - p) / b * lt2,
                c: 0.0,
                e: 0.0,
            }
        }
        Method::Saga => {
            let b = params.b()? as f64;
            MethodConstants {
                rho1: 1.0,
                rho2: b / (2.0 * n),
                a: (1.0 + b / (2.0 * n)) / b,
                b: lt2 / b * (1.0 + 2.0 * n / b),
                c: 0.0,
                e: 2.0 * n / b * lt2,
            }
        }
        Method::SagaSarah => {
            let b = params.b()? as f64;
            MethodConstants {
                rho1: b / (2.0 * n),
                rho2: b / (2.0 * n),
                a: b / (2.0 * n * n),
                b: 2.0 * lt2 / b,
                c: 0.0,
                e: 2.0 * n * lt2 / b,
            }
        }
        Method::Sega => MethodConstants {
            rho1: 1.0,
            rho2: 1.0 / (2.0 * d),
            a: d,
            b: d * d * l2,
            c: 0.0,
            e: 3.0 * l2 * d,
        },
        Method::Jaguar => MethodConstants {
            rho1: 1.0 / (2.0 * d),
            rho2: 1.0,
            a: 0.0,
            b: 3.0 * d * l2,
            c: 0.0,
            e: 0.0,
        },
        Method::Zoja => {
            let tau = params.tau.ok_or(Error::MissingParam("tau"))?;
            if !(tau > 0.0) {
                return Err(Error::InvalidParam {
                    name: "tau",
                    msg: format!("must be > 0, got {tau}"),
                });
            }
            MethodConstants {
                rho1: 1.0 / (4.0 * d),
                rho2: 1.0,
                a: 0.0,
                b: 3.0 * d * l2,
                c: 5.0 * d * l2 * tau * tau / 4.0,
                e: 0.0,
            }
        }
        Method::Diana => {
            let omega = params.omega()?;
            let nw = params.n_workers()? as f64;
            MethodConstants {
                rho1: 1.0,
                rho2: 1.0 / (2.0 * (1.0 + omega)),
                a: omega / (nw * nw),
                b: 2.0 * omega * (omega + 1.0) * lt2 / nw,
                c: 0.0,
                e: 2.0 * (omega + 1.0) * nw * lt2,
            }
        }
        Method::Marina => {
            let p = params.p()?;
            let omega = params.omega()?;
            let nw = params.n_workers()? as f64;
            MethodConstants {
                rho1: p,
                rho2: 1.0,
                a: 0.0,
                b: (1.0 - p) * omega * l2 / nw,
                c: 0.0,
                e: 0.0,
            }
        }
        Method::VrMarina => {
            let p = params.p()?;
            let omega = params.omega()?;
            let nw = params.n_workers()? as f64;
            let b = params.b()? as f64;
            let cal_l2 = params.l_inner * params.l_inner;
            MethodConstants {
                rho1: p,
                rho2: 1.0,
                a: 0.0,
                b: (1.0 - p) / nw * (omega * l2 + (1.0 + omega) * cal_l2 / b),
                c: 0.0,
                e: 0.0,
            }
        }
        Method::Ef21 => {
            let delta = params.delta()?;
            MethodConstants {
                rho1: 1.0,
                rho2: (delta + 1.0) / (2.0 * delta * delta),
                a: 1.0,
                b: 0.0,
                c: 0.0,
                e: 2.0 * delta * lt2,
            }
        }
        Method::QLSvrg => {
            let p = params.p()?;
            let omega = params.omega()?;
            let nw = params.n_workers()? as f64;
            MethodConstants {
                rho1: 1.0,
                rho2: p / 2.0,
                a: omega * lt2 / nw * (1.0 - p / 2.0),
                b: omega * lt2 / nw * (1.0 + 8.0 * (1.0 - p) / p),
                c: 0.0,
                e: 1.0 + 8.0 * (1.0 - p) / p,
            }
        }
        Method::PpLSvrg => {
            let p = params.p()?;
            params.n_workers()?;
            MethodConstants {
                rho1: 1.0,
                rho2: p / 2.0,
                a: 1.0 + p / 2.0,
                b: lt2 * (1.0 + 2.0 / p),
                c: 0.0,
                e: 2.0 * lt2 / p,
            }
        }
    };
    c.validate()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lsvrg_rho_values() {
        let c = constants_for(
            Method::LSvrg,
            &ConstantsParams::new(10, 4).with_p(0.5).with_b(2),
        )
        .unwrap();
        assert_eq!(c.rho1, 1.0);
        assert_eq!(c.rho2, 0.25);
    }

    #[test]
    fn sarah_tuple() {
        let c = constants_for(
            Method::Sarah,
            &ConstantsParams::new(10, 4).with_p(0.1).with_b(2),
        )
        .unwrap();
        assert_eq!(c.rho1, 0.1);
        assert_eq!(c.rho2, 1.0);
        assert_eq!(c.a, 0.0);
        assert_eq!(c.c, 0.0);
        assert_eq!(c.e, 0.0);
        // B = (1-p)/b * Ltilde^2 with unit smoothness
        assert!((c.b - 0.9 / 2.0).abs() < 1e-15);
    }

    #[test]
    fn saga_full_batch_rho2() {
        let c = constants_for(Method::Saga, &ConstantsParams::new(8, 4).with_b(8)).unwrap();
        assert_eq!(c.rho2, 0.5);
    }

    #[test]
    fn schedule_d_at_least_two_for_all_methods() {
        let base = ConstantsParams::new(20, 6)
            .with_p(0.3)
            .with_b(4)
            .with_omega(2.0)
            .with_delta(3.0)
            .with_workers(4)
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
            let c = constants_for(m, &base).unwrap();
            assert!(c.schedule_d() >= 2.0, "{m:?}");
            assert!(c.rho1 > 0.0 && c.rho1 <= 1.0, "{m:?}");
            assert!(c.rho2 > 0.0 && c.rho2 <= 1.0, "{m:?}");
            assert!(c.a >= 0.0 && c.b >= 0.0 && c.c >= 0.0 && c.e >= 0.0, "{m:?}");
        }
    }

    #[test]
    fn missing_and_invalid_params_rejected() {
        assert!(matches!(
            constants_for(Method::Sarah, &ConstantsParams::new(10, 4).with_b(2)),
            Err(Error::MissingParam("p"))
        ));
        assert!(constants_for(
            Method::LSvrg,
            &ConstantsParams::new(10, 4).with_p(0.5).with_b(11)
        )
        .is_err());
        assert!(Method::parse("bogus").is_err());
    }

    #[test]
    fn ef21_uses_proved_rho2() {
        let c = constants_for(Method::Ef21, &ConstantsParams::new(10, 4).with_delta(4.0)).unwrap();
        assert!((c.rho2 - 5.0 / 32.0).abs() < 1e-15);
    }

    #[test]
    fn jaguar_uses_proved_rho1() {
        let c = constants_for(Method::Jaguar, &ConstantsParams::new(10, 4)).unwrap();
        assert_eq!(c.rho1, 1.0 / 8.0);
    }
}
