//! Gauss–Hermite rules for the weight `exp(-x²)` and their tensor products.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::{pairwise_sum, Scalar};

pub const MIN_ORDER: usize = 2;
pub const MAX_ORDER: usize = 128;

/// Nodes and weights of the `n`-point rule, `∫ exp(-x²) p(x) dx` exact for
/// polynomials of degree `< 2n`. Nodes ascend.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    /// Newton iteration on the orthonormal Hermite recurrence, seeded with
    /// the classical asymptotic root guesses.
    pub fn new(n: usize) -> Result<Self> {
        if !(1..=MAX_ORDER).contains(&n) {
            return Err(Error::InvalidQuadrature(format!(
                "Gauss-Hermite order must be in [1, {MAX_ORDER}], got {n}"
            )));
        }
        let pim4 = std::f64::consts::PI.powf(-0.25);
        let nf = n as f64;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        let mut z = 0.0f64;
        for i in 0..m {
            z = match i {
                0 => (2.0 * nf + 1.0).sqrt() - 1.855_75 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
                1 => z - 1.14 * nf.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * nodes[0],
                3 => 1.91 * z - 0.91 * nodes[1],
                _ => 2.0 * z - nodes[i - 2],
            };
            let mut pp = 0.0;
            for _ in 0..100 {
                let (p1, dp) = orthonormal_hermite(n, z, pim4);
                pp = dp;
                let dz = p1 / pp;
                z -= dz;
                if dz.abs() <= 1e-15 * z.abs().max(1.0) {
                    break;
                }
            }
            let (_, dp) = orthonormal_hermite(n, z, pim4);
            pp = if dp != 0.0 { dp } else { pp };
            nodes[i] = z;
            nodes[n - 1 - i] = -z;
            weights[i] = 2.0 / (pp * pp);
            weights[n - 1 - i] = weights[i];
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        nodes.reverse();
        weights.reverse();
        Ok(GaussHermite { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `∫ exp(-x²) f(x) dx`.
    pub fn integrate<T: Scalar>(&self, f: impl Fn(T) -> T) -> T {
        let terms: Vec<T> = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| T::lit(w) * f(T::lit(x)))
            .collect();
        pairwise_sum(&terms)
    }
}

/// Returns `(p_n(z), p_n'(z))` for the orthonormal Hermite polynomials.
fn orthonormal_hermite(n: usize, z: f64, pim4: f64) -> (f64, f64) {
    let mut p1 = pim4;
    let mut p2 = 0.0;
    for j in 1..=n {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
    }
    (p1, (2.0 * n as f64).sqrt() * p2)
}

/// `∫_{R⁴} exp(-|w|²) g(w) d⁴w` on the tensor grid of `rule`.
///
/// Terms are summed pairwise: each outer node's n³ slab in fixed order,
/// then the slab totals. The result does not depend on the thread count.
pub fn tensor_integrate_4d<T, G>(rule: &GaussHermite, g: G) -> T
where
    T: Scalar,
    G: Fn([T; 4]) -> T + Sync,
{
    let x: Vec<T> = rule.nodes.iter().map(|&v| T::lit(v)).collect();
    let w: Vec<T> = rule.weights.iter().map(|&v| T::lit(v)).collect();
    let n = x.len();
    let slabs: Vec<T> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut terms = Vec::with_capacity(n * n * n);
            for j in 0..n {
                let wij = w[i] * w[j];
                for k in 0..n {
                    let wijk = wij * w[k];
                    for l in 0..n {
                        terms.push(wijk * w[l] * g([x[i], x[j], x[k], x[l]]));
                    }
                }
            }
            pairwise_sum(&terms)
        })
        .collect();
    pairwise_sum(&slabs)
}

/// `∫_{R²} exp(-|v|²) g(v) d²v` on the tensor grid of `rule`.
pub fn tensor_integrate_2d<T: Scalar>(rule: &GaussHermite, g: impl Fn([T; 2]) -> T) -> T {
    let mut terms = Vec::with_capacity(rule.len() * rule.len());
    for (&xi, &wi) in rule.nodes.iter().zip(&rule.weights) {
        for (&xj, &wj) in rule.nodes.iter().zip(&rule.weights) {
            terms.push(T::lit(wi * wj) * g([T::lit(xi), T::lit(xj)]));
        }
    }
    pairwise_sum(&terms)
}
