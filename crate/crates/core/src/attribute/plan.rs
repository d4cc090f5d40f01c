use nalgebra::{DMatrix, DVector, Dyn, QR};

use crate::attribute::weights::chebyshev_nodes;
use crate::error::{Error, Result};

/// Solves beyond this relative residual are flagged as ill-conditioned.
pub const RESIDUAL_FLAG: f64 = 1e-6;

/// Node counts above this trigger a conditioning warning.
pub const CONDITIONING_WARN_NODES: usize = 30;

/// Interpolation nodes with a cached QR factorization of their
/// monomial-basis Vandermonde matrix `V[ℓ][s] = t_ℓ^s`.
#[derive(Debug, Clone)]
pub struct ProbePlan {
    nodes: Vec<f64>,
    vandermonde: DMatrix<f64>,
    qr: QR<f64, Dyn, Dyn>,
    condition: f64,
}

/// Polynomial coefficients recovered from node values.
#[derive(Debug, Clone, PartialEq)]
pub struct PolySolve {
    /// Monomial coefficients, lowest degree first.
    pub coeffs: Vec<f64>,
    /// `‖V c − q‖∞` after refinement.
    pub residual: f64,
    /// Residual exceeded [`RESIDUAL_FLAG`] relative to `max(1, ‖q‖∞)`.
    pub ill_conditioned: bool,
}

impl ProbePlan {
    /// `m` Chebyshev-Gauss nodes on (0, 1).
    pub fn chebyshev(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::Config("a probe plan needs at least one node".into()));
        }
        Self::from_nodes(chebyshev_nodes(m))
    }

    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        let m = nodes.len();
        if m == 0 {
            return Err(Error::Config("a probe plan needs at least one node".into()));
        }
        if let Some(bad) = nodes.iter().find(|t| !t.is_finite()) {
            return Err(Error::Config(format!("interpolation node {bad} is not finite")));
        }
        let mut sorted = nodes.clone();
        sorted.sort_by(f64::total_cmp);
        let gap = sorted
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min);
        if gap <= 1e-12 {
            return Err(Error::DegenerateNodes { gap });
        }
        if m > CONDITIONING_WARN_NODES {
            log::warn!(
                "{m} interpolation nodes: monomial Vandermonde conditioning degrades at this size"
            );
        }
        let vandermonde = DMatrix::from_fn(m, m, |l, s| nodes[l].powi(s as i32));
        let sv = vandermonde.singular_values();
        let condition = sv.max() / sv.min();
        let qr = vandermonde.clone().qr();
        Ok(Self {
            nodes,
            vandermonde,
            qr,
            condition,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn vandermonde(&self) -> &DMatrix<f64> {
        &self.vandermonde
    }

    /// 2-norm condition number of the Vandermonde matrix.
    pub fn condition(&self) -> f64 {
        self.condition
    }

    /// Solves `V c = q` with the cached QR and one refinement step.
    pub fn solve(&self, values: &[f64]) -> Result<PolySolve> {
        let m = self.len();
        if values.len() != m {
            return Err(Error::DimensionMismatch {
                mode: 0,
                expected: m,
                found: values.len(),
            });
        }
        if m == 1 {
            // constant polynomial: the single node value is the coefficient
            return Ok(PolySolve {
                coeffs: vec![values[0]],
                residual: 0.0,
                ill_conditioned: false,
            });
        }
        let q = DVector::from_column_slice(values);
        let mut c = self
            .qr
            .solve(&q)
            .ok_or_else(|| Error::Solve("singular Vandermonde matrix".into()))?;
        let r = &q - &self.vandermonde * &c;
        if let Some(dc) = self.qr.solve(&r) {
            c += dc;
        }
        let residual = (&q - &self.vandermonde * &c).amax();
        let scale = q.amax().max(1.0);
        Ok(PolySolve {
            coeffs: c.as_slice().to_vec(),
            residual,
            ill_conditioned: !(residual <= RESIDUAL_FLAG * scale),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_cubic() {
        let plan = ProbePlan::chebyshev(4).unwrap();
        let p = |t: f64| 1.0 - 2.0 * t + 0.5 * t * t + 3.0 * t * t * t;
        let q: Vec<f64> = plan.nodes().iter().map(|&t| p(t)).collect();
        let sol = plan.solve(&q).unwrap();
        for (c, e) in sol.coeffs.iter().zip([1.0, -2.0, 0.5, 3.0]) {
            assert!((c - e).abs() < 1e-12);
        }
        assert!(!sol.ill_conditioned);
    }

    #[test]
    fn duplicate_nodes_rejected() {
        assert!(matches!(
            ProbePlan::from_nodes(vec![0.2, 0.5, 0.2]),
            Err(Error::DegenerateNodes { .. })
        ));
    }

    #[test]
    fn single_node_is_identity() {
        let plan = ProbePlan::chebyshev(1).unwrap();
        assert_eq!(plan.solve(&[4.25]).unwrap().coeffs, vec![4.25]);
    }
}
