use crate::error::{Error, Result};
use crate::vector::Vector;

/// A compact convex constraint set exposed through a linear minimization
/// oracle, its diameter and a membership predicate. New sets plug in by
/// implementing this trait.
pub trait FeasibleSet {
    /// argmin over the set of the linear function <g, s>.
    fn lmo(&self, g: &Vector) -> Result<Vector>;

    /// Maximum Euclidean distance between two points of the set.
    fn diameter(&self) -> f64;

    /// Membership up to relative tolerance `tol`.
    fn contains(&self, x: &Vector, tol: f64) -> bool;

    fn dim(&self) -> usize;
}

/// The l1-ball of a given radius. Its extreme points are the signed scaled
/// basis vectors, so the LMO has a closed form.
#[derive(Clone, Debug)]
pub struct L1Ball {
    radius: f64,
    dim: usize,
}

impl L1Ball {
    pub fn new(radius: f64, dim: usize) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParam {
                name: "radius",
                msg: format!("must be positive and finite, got {radius}"),
            });
        }
        if dim == 0 {
            return Err(Error::InvalidParam {
                name: "dim",
                msg: "must be positive".into(),
            });
        }
        Ok(L1Ball { radius, dim })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }
}

/// sign with sign(0) = +1, the tie convention for vertex selection.
fn sign_pos(v: f64) -> f64 {
    if v < 0.0 {
        -1.0
    } else {
        1.0
    }
}

impl FeasibleSet for L1Ball {
    /// Returns the vertex -r * sign(g_i) * e_i with i = argmax_j |g_j|.
    /// Ties break toward the lowest index so traces are reproducible.
    fn lmo(&self, g: &Vector) -> Result<Vector> {
        if g.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: g.dim(),
            });
        }
        if !g.is_finite() {
            return Err(Error::NonFinite("lmo input"));
        }
        let mut best = 0usize;
        let mut best_abs = g[0].abs();
        for j in 1..self.dim {
            let a = g[j].abs();
            if a > best_abs {
                best = j;
                best_abs = a;
            }
        }
        let mut s = Vector::zeros(self.dim);
        s[best] = -self.radius * sign_pos(g[best]);
        Ok(s)
    }

    fn diameter(&self) -> f64 {
        2.0 * self.radius
    }

    fn contains(&self, x: &Vector, tol: f64) -> bool {
        x.dim() == self.dim && x.norm1() <= self.radius * (1.0 + tol)
    }

    fn dim(&self) -> usize {
        self.dim
    }
}

/// All 2*dim vertices of the l1-ball, for brute-force oracles and gap checks.
pub fn l1_vertices(radius: f64, dim: usize) -> Vec<Vector> {
    let mut out = Vec::with_capacity(2 * dim);
    for j in 0..dim {
        for sgn in [1.0, -1.0] {
            let mut v = Vector::zeros(dim);
            v[j] = sgn * radius;
            out.push(v);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{RngStream, StreamKind};
    use proptest::prelude::*;

    #[test]
    fn lmo_closed_form() {
        let ball = L1Ball::new(2.0, 3).unwrap();
        let s = ball.lmo(&Vector::from_vec(vec![3.0, -1.0, 0.0])).unwrap();
        assert_eq!(s.as_slice(), &[-2.0, 0.0, 0.0]);
    }

    #[test]
    fn lmo_tie_break_and_sign_zero() {
        let ball = L1Ball::new(5.0, 2).unwrap();
        let s = ball.lmo(&Vector::from_vec(vec![0.0, 0.0])).unwrap();
        assert_eq!(s.as_slice(), &[-5.0, 0.0]);
    }

    #[test]
    fn lmo_matches_vertex_enumeration() {
        let ball = L1Ball::new(1.0, 3).unwrap();
        let g = Vector::from_vec(vec![1.0, -4.0, 2.0]);
        let s = ball.lmo(&g).unwrap();
        assert_eq!(s.as_slice(), &[0.0, 1.0, 0.0]);
        let best = l1_vertices(1.0, 3)
            .iter()
            .map(|v| g.dot(v))
            .fold(f64::INFINITY, f64::min);
        assert_eq!(g.dot(&s), -4.0);
        assert_eq!(g.dot(&s), best);
    }

    #[test]
    fn lmo_rejects_nan() {
        let ball = L1Ball::new(1.0, 2).unwrap();
        let err = ball.lmo(&Vector::from_vec(vec![f64::NAN, 0.0]));
        assert!(err.is_err());
    }

    #[test]
    fn diameters() {
        assert_eq!(L1Ball::new(2000.0, 4).unwrap().diameter(), 4000.0);
        assert_eq!(L1Ball::new(1.0, 4).unwrap().diameter(), 2.0);
        assert_eq!(L1Ball::new(0.5, 4).unwrap().diameter(), 1.0);
    }

    #[test]
    fn lmo_optimal_over_vertices_exhaustive() {
        // Every gradient on small dims: the oracle value never exceeds any
        // vertex value, and the output is a vertex with exact l1 norm.
        for dim in 1..=8usize {
            let ball = L1Ball::new(1.5, dim).unwrap();
            let mut rng = RngStream::new(42, 0, dim as u64, StreamKind::Sampling);
            for _ in 0..50 {
                let g = Vector::from_vec(
                    (0..dim).map(|_| rng.uniform() * 2.0 - 1.0).collect(),
                );
                let s = ball.lmo(&g).unwrap();
                assert_eq!(s.norm1(), 1.5);
                assert_eq!(s.iter().filter(|v| **v != 0.0).count(), 1);
                for v in l1_vertices(1.5, dim) {
                    assert!(g.dot(&s) <= g.dot(&v));
                }
            }
        }
    }

    proptest! {
        #[test]
        fn lmo_output_in_ball_and_optimal(
            vals in proptest::collection::vec(-1e3f64..1e3, 1..6),
            radius in 0.1f64..100.0,
        ) {
            let dim = vals.len();
            let ball = L1Ball::new(radius, dim).unwrap();
            let g = Vector::from_vec(vals);
            let s = ball.lmo(&g).unwrap();
            prop_assert!(ball.contains(&s, 1e-9));
            prop_assert_eq!(s.norm1(), radius);
            for v in l1_vertices(radius, dim) {
                prop_assert!(g.dot(&s) <= g.dot(&v));
            }
        }
    }
}
