//! Gauss–Hermite nodes and weights for the weight `e^{−ξ²}` on ℝ.

use crate::error::{Error, Result};

/// One-dimensional Gauss–Hermite rule. Weights are normalized by `√π`, so
/// they sum to one and `Σ wᵢ f(ξᵢ) ≈ π^{−1/2} ∫ e^{−ξ²} f(ξ) dξ`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    /// Roots of `H_n` located by Sturm-sequence bisection on the symmetric
    /// Jacobi matrix (zero diagonal, off-diagonal `√(k/2)`), then polished by
    /// Newton steps on the orthonormal three-term recurrence, which also
    /// yields the weights `2/(√(2n)·h_{n−1}(ξ))²`.
    pub fn new(order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidParameter("Gauss–Hermite order must be ≥ 1".into()));
        }
        let n = order;
        let nf = n as f64;
        let off_sq: Vec<f64> = (1..n).map(|k| k as f64 / 2.0).collect();
        // number of Jacobi eigenvalues strictly below x
        let count_below = |x: f64| -> usize {
            let mut count = 0;
            let mut d = -x;
            if d < 0.0 {
                count += 1;
            }
            for b2 in &off_sq {
                let prev = if d == 0.0 { f64::MIN_POSITIVE } else { d };
                d = -x - b2 / prev;
                if d < 0.0 {
                    count += 1;
                }
            }
            count
        };
        let bound = (2.0 * nf + 1.0).sqrt() + 1.0;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for (i, node) in nodes.iter_mut().enumerate() {
            // i-th smallest eigenvalue
            let (mut lo, mut hi) = (-bound, bound);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid == lo || mid == hi {
                    break;
                }
                if count_below(mid) > i {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            *node = 0.5 * (lo + hi);
        }
        const PI_M4: f64 = 0.751_125_544_464_942_5; // π^{-1/4}
        for (z, w) in nodes.iter_mut().zip(weights.iter_mut()) {
            let mut deriv = 1.0;
            for _ in 0..3 {
                let (mut p1, mut p2) = (PI_M4, 0.0);
                for j in 1..=n {
                    let jf = j as f64;
                    let p3 = p2;
                    p2 = p1;
                    p1 = *z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
                }
                deriv = (2.0 * nf).sqrt() * p2;
                if deriv != 0.0 {
                    *z -= p1 / deriv;
                }
            }
            *w = 2.0 / (deriv * deriv);
        }
        // exact antisymmetry of the rule
        for i in 0..n / 2 {
            let x = 0.5 * (nodes[n - 1 - i] - nodes[i]);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            let w = 0.5 * (weights[i] + weights[n - 1 - i]);
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        let inv_sqrt_pi = 1.0 / std::f64::consts::PI.sqrt();
        for w in &mut weights {
            *w *= inv_sqrt_pi;
        }
        Ok(Self { nodes, weights })
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}
