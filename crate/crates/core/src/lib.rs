//! Projection-free constrained optimization built around the stochastic
//! conditional-gradient iteration
//!
//!   s^k = argmin_{s in X} <g^k, s>,    x^{k+1} = (1 - eta_k) x^k + eta_k s^k,
//!
//! where g^k is one of a zoo of gradient estimators: exact, variance-reduced
//! minibatch (loopless SVRG, SARAH, SAGA and their blend), coordinate-wise
//! (SEGA, JAGUAR and its zero-order variant), or distributed with compressed
//! uplink communication (DIANA, MARINA, VR-MARINA, EF21, Q-L-SVRG,
//! PP-L-SVRG) simulated deterministically in-process with exact bits
//! accounting.
//!
//! The crate ships the l1-ball feasible set, a sparse logistic-regression
//! objective with LibSVM ingestion, theory-backed step-size schedules, and a
//! benchmark driver producing per-iteration traces.

pub mod certify;
pub mod cli;
pub mod compression;
pub mod config;
pub mod constants;
pub mod distributed;
pub mod driver;
pub mod error;
pub mod estimators;
pub mod objective;
pub mod plot;
pub mod rng;
pub mod schedule;
pub mod sets;
pub mod synthetic;
pub mod trace_io;
pub mod vector;

pub use constants::{constants_for, ConstantsParams, Method, MethodConstants};
pub use driver::{fw_gap, fw_step, run, MethodSpec, RunSpec, Trace};
pub use error::{Error, Result};
pub use objective::{parse_libsvm, Dataset, Partition};
pub use schedule::{schedule_convex, schedule_nonconvex, ScheduleMode};
pub use sets::{FeasibleSet, L1Ball};
pub use vector::Vector;
