//! Step-size schedules.
//!
//! The convex schedule runs a constant warm-up phase at 1/d and then decays
//! as 2/(2d + k - k0) from the midpoint k0 = ceil(K/2), where
//! d = 2/min(rho1, rho2) comes from the method's recursion constants. The
//! hand-off is continuous: the decaying branch starts at exactly 1/d. The
//! non-convex schedule is the constant 1/sqrt(K).

use crate::error::{Error, Result};

/// Step size at iteration k (0-based) of a K-iteration convex-mode run.
pub fn schedule_convex(k: usize, big_k: usize, rho1: f64, rho2: f64) -> f64 {
    let d = 2.0 / rho1.min(rho2);
    let k0 = big_k.div_ceil(2);
    if (big_k as f64) <= d || k < k0 {
        1.0 / d
    } else {
        2.0 / (2.0 * d + (k - k0) as f64)
    }
}

/// Constant step size for the non-convex gap guarantee.
pub fn schedule_nonconvex(big_k: usize) -> f64 {
    assert!(big_k >= 1);
    1.0 / (big_k as f64).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ScheduleMode {
    Convex,
    Nonconvex,
    Fixed(f64),
}

impl ScheduleMode {
    pub fn parse(name: &str, eta: Option<f64>) -> Result<Self> {
        match name {
            "convex" => Ok(ScheduleMode::Convex),
            "nonconvex" => Ok(ScheduleMode::Nonconvex),
            "fixed" => {
                let eta = eta.ok_or(Error::MissingParam("eta"))?;
                if !(eta > 0.0 && eta <= 1.0) {
                    return Err(Error::InvalidParam {
                        name: "eta",
                        msg: format!("must be in (0,1], got {eta}"),
                    });
                }
                Ok(ScheduleMode::Fixed(eta))
            }
            other => Err(Error::Config(format!("unknown schedule `{other}`"))),
        }
    }
}

/// Fully resolved schedule for a run of horizon K.
#[derive(Clone, Copy, Debug)]
pub struct Schedule {
    mode: ScheduleMode,
    big_k: usize,
    rho1: f64,
    rho2: f64,
}

impl Schedule {
    pub fn new(mode: ScheduleMode, big_k: usize, rho1: f64, rho2: f64) -> Self {
        Schedule {
            mode,
            big_k,
            rho1,
            rho2,
        }
    }

    pub fn eta(&self, k: usize) -> f64 {
        match self.mode {
            ScheduleMode::Convex => schedule_convex(k, self.big_k, self.rho1, self.rho2),
            ScheduleMode::Nonconvex => schedule_nonconvex(self.big_k),
            ScheduleMode::Fixed(eta) => eta,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn convex_warmup_phase() {
        // rho = 1 so d = 2, K = 10, k0 = 5; k < k0 stays at 1/d
        assert_eq!(schedule_convex(3, 10, 1.0, 1.0), 0.5);
    }

    #[test]
    fn convex_decay_phase() {
        // k = 7 >= k0 = 5: 2 / (4 + 7 - 5) = 1/3
        assert!((schedule_convex(7, 10, 1.0, 1.0) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn convex_short_horizon_constant() {
        // d = 20 >= K = 15: always 1/20
        for k in 0..15 {
            assert_eq!(schedule_convex(k, 15, 0.1, 1.0), 0.05);
        }
    }

    #[test]
    fn convex_handoff_is_continuous() {
        for (big_k, rho) in [(10usize, 1.0), (101, 0.4), (999, 0.03)] {
            let k0 = big_k.div_ceil(2);
            let before = schedule_convex(k0 - 1, big_k, rho, 1.0);
            let at = schedule_convex(k0, big_k, rho, 1.0);
            assert_eq!(before, at, "K={big_k} rho={rho}");
        }
    }

    #[test]
    fn nonconvex_values() {
        assert_eq!(schedule_nonconvex(100), 0.1);
        assert_eq!(schedule_nonconvex(1), 1.0);
        assert_eq!(schedule_nonconvex(4), 0.5);
    }

    proptest! {
        #[test]
        fn eta_always_in_unit_interval(
            k in 0usize..2000,
            big_k in 1usize..2000,
            rho1 in 1e-4f64..1.0,
            rho2 in 1e-4f64..1.0,
        ) {
            let k = k.min(big_k.saturating_sub(1));
            let eta = schedule_convex(k, big_k, rho1, rho2);
            prop_assert!(eta > 0.0 && eta <= 1.0);
            let etan = schedule_nonconvex(big_k);
            prop_assert!(etan > 0.0 && etan <= 1.0);
        }
    }
}
