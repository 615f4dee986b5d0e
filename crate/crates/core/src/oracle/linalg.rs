//! Dense complex linear algebra for the oracle: matrix exponential,
//! exponential action, LU solves and norms.

use ndarray::{s, Array1, Array2, ArrayView1, Axis};
use num_complex::Complex64;

pub type CMat = Array2<Complex64>;
pub type CVec = Array1<Complex64>;

const C0: Complex64 = Complex64::new(0.0, 0.0);
const C1: Complex64 = Complex64::new(1.0, 0.0);

pub fn identity(n: usize) -> CMat {
    CMat::eye(n)
}

/// `kron(a, b)` for square matrices.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (na, nb) = (a.nrows(), b.nrows());
    let mut out = CMat::zeros((na * nb, na * nb));
    for ((i, k), &av) in a.indexed_iter() {
        if av == C0 {
            continue;
        }
        out.slice_mut(s![i * nb..(i + 1) * nb, k * nb..(k + 1) * nb])
            .assign(&b.mapv(|bv| av * bv));
    }
    out
}

pub fn adjoint(a: &CMat) -> CMat {
    a.t().mapv(|v| v.conj())
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a.dot(b) - b.dot(a)
}

/// Induced 1-norm (maximum absolute column sum).
pub fn norm_1(a: &CMat) -> f64 {
    a.axis_iter(Axis(1))
        .map(|c| c.iter().map(|v| v.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn frobenius(a: &CMat) -> f64 {
    a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

pub fn vec_norm(v: ArrayView1<Complex64>) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// `⟨a, b⟩ = Σ conj(a_i) b_i`.
pub fn vdot(a: &CVec, b: &CVec) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Spectral norm by power iteration on `AᴴA` from a fixed start vector;
/// deterministic and accurate to a few digits, which is all the residual
/// checks need.
pub fn norm_2(a: &CMat) -> f64 {
    let n = a.ncols();
    if n == 0 || a.nrows() == 0 {
        return 0.0;
    }
    let ah = adjoint(a);
    let mut v = CVec::from_shape_fn(n, |i| {
        Complex64::new(1.0 + 0.37 * (i as f64).sin(), 0.11 * (i as f64).cos())
    });
    let mut sigma = 0.0;
    for _ in 0..200 {
        let nv = vec_norm(v.view());
        if nv == 0.0 {
            return 0.0;
        }
        v.mapv_inplace(|x| x / nv);
        let w = ah.dot(&a.dot(&v));
        let next = vec_norm(w.view()).sqrt();
        let done = (next - sigma).abs() <= 1e-10 * next;
        sigma = next;
        v = w;
        if done {
            break;
        }
    }
    sigma
}

/// LU factorization with partial pivoting, stored in place.
struct Lu {
    lu: CMat,
    perm: Vec<usize>,
}

impl Lu {
    fn new(mut a: CMat) -> Option<Lu> {
        let n = a.nrows();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (piv, max) = (k..n)
                .map(|i| (i, a[[i, k]].norm()))
                .fold((k, -1.0), |m, x| if x.1 > m.1 { x } else { m });
            if max == 0.0 {
                return None;
            }
            if piv != k {
                for j in 0..n {
                    a.swap([k, j], [piv, j]);
                }
                perm.swap(k, piv);
            }
            let inv = C1 / a[[k, k]];
            for i in k + 1..n {
                let f = a[[i, k]] * inv;
                a[[i, k]] = f;
                if f != C0 {
                    for j in k + 1..n {
                        let akj = a[[k, j]];
                        a[[i, j]] -= f * akj;
                    }
                }
            }
        }
        Some(Lu { lu: a, perm })
    }

    fn solve(&self, b: &CMat) -> CMat {
        let n = self.lu.nrows();
        let mut x = CMat::zeros(b.raw_dim());
        for (i, &p) in self.perm.iter().enumerate() {
            x.row_mut(i).assign(&b.row(p));
        }
        for i in 0..n {
            for k in 0..i {
                let l = self.lu[[i, k]];
                if l != C0 {
                    let rk = x.row(k).to_owned();
                    x.row_mut(i).scaled_add(-l, &rk);
                }
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                let u = self.lu[[i, k]];
                if u != C0 {
                    let rk = x.row(k).to_owned();
                    x.row_mut(i).scaled_add(-u, &rk);
                }
            }
            let d = C1 / self.lu[[i, i]];
            x.row_mut(i).mapv_inplace(|v| v * d);
        }
        x
    }
}

/// Solves `A X = B`; `None` if `A` is singular.
pub fn solve(a: &CMat, b: &CMat) -> Option<CMat> {
    Some(Lu::new(a.clone())?.solve(b))
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

/// `exp(A)` by scaling and squaring with the degree-13 Padé approximant.
/// The scaling keeps `‖A/2^s‖₁ <= θ13`, which bounds the backward error
/// by unit roundoff in exact arithmetic.
pub fn expm(a: &CMat) -> CMat {
    let n = a.nrows();
    let norm = norm_1(a);
    let s = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let scale = Complex64::from(0.5f64.powi(s));
    let a = a.mapv(|v| v * scale);
    let b = PADE13.map(Complex64::from);
    let eye = identity(n);
    let a2 = a.dot(&a);
    let a4 = a2.dot(&a2);
    let a6 = a4.dot(&a2);
    let lin = |c6: Complex64, c4: Complex64, c2: Complex64| &a6 * c6 + &a4 * c4 + &a2 * c2;
    let u_inner = a6.dot(&lin(b[13], b[11], b[9])) + lin(b[7], b[5], b[3]) + &eye * b[1];
    let u = a.dot(&u_inner);
    let v = a6.dot(&lin(b[12], b[10], b[8])) + lin(b[6], b[4], b[2]) + &eye * b[0];
    let mut r =
        solve(&(&v - &u), &(&v + &u)).expect("Pade denominator is nonsingular for scaled input");
    for _ in 0..s {
        r = r.dot(&r);
    }
    r
}

/// Compressed sparse rows, used where the generator is banded.
#[derive(Debug, Clone)]
pub struct Csr {
    n: usize,
    row_start: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
}

impl Csr {
    /// Drops exact zeros of `a`.
    pub fn from_dense(a: &CMat) -> Self {
        let n = a.nrows();
        let mut row_start = Vec::with_capacity(n + 1);
        let (mut cols, mut vals) = (Vec::new(), Vec::new());
        row_start.push(0);
        for row in a.rows() {
            for (j, &v) in row.iter().enumerate() {
                if v != C0 {
                    cols.push(j);
                    vals.push(v);
                }
            }
            row_start.push(cols.len());
        }
        Csr {
            n,
            row_start,
            cols,
            vals,
        }
    }

    pub fn scaled(mut self, c: Complex64) -> Self {
        self.vals.iter_mut().for_each(|v| *v *= c);
        self
    }

    pub fn dot(&self, v: &CVec) -> CVec {
        CVec::from_shape_fn(self.n, |i| {
            (self.row_start[i]..self.row_start[i + 1])
                .map(|k| self.vals[k] * v[self.cols[k]])
                .sum()
        })
    }

    pub fn norm_1(&self) -> f64 {
        let mut col = vec![0.0; self.n];
        for (&j, v) in self.cols.iter().zip(&self.vals) {
            col[j] += v.norm();
        }
        col.into_iter().fold(0.0, f64::max)
    }
}

/// `exp(A) v` by Taylor steps on `A/s` with `‖A/s‖₁ <= 1`, each series
/// truncated once two consecutive terms fall below `tol` relative to the
/// partial sum.
pub fn expm_action(a: &Csr, v: &CVec, tol: f64) -> CVec {
    let steps = a.norm_1().ceil().max(1.0) as usize;
    let inv = 1.0 / steps as f64;
    let mut out = v.clone();
    for _ in 0..steps {
        let mut term = out.clone();
        let mut sum = out.clone();
        let mut small = 0;
        for k in 1..=80 {
            term = a.dot(&term).mapv(|x| x * (inv / k as f64));
            sum += &term;
            if vec_norm(term.view()) <= tol * vec_norm(sum.view()) {
                small += 1;
                if small == 2 {
                    break;
                }
            } else {
                small = 0;
            }
        }
        out = sum;
    }
    out
}

/// Columns `idx` of `a`.
pub fn select_columns(a: &CMat, idx: &[usize]) -> CMat {
    a.select(Axis(1), idx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn expm_of_rotation_generator() {
        // exp([[0, -t], [t, 0]]) is a rotation.
        let t = 7.3;
        let a = CMat::from_shape_vec((2, 2), vec![C0, c(-t, 0.0), c(t, 0.0), C0]).unwrap();
        let e = expm(&a);
        assert!((e[[0, 0]] - c(t.cos(), 0.0)).norm() < 1e-13);
        assert!((e[[1, 0]] - c(t.sin(), 0.0)).norm() < 1e-13);
    }

    #[test]
    fn expm_of_diagonal_and_nilpotent() {
        let d = CMat::from_diag(&CVec::from(vec![c(0.5, 2.0), c(-3.0, 0.0), c(0.0, -20.0)]));
        let e = expm(&d);
        for i in 0..3 {
            assert!((e[[i, i]] - d[[i, i]].exp()).norm() < 1e-12 * d[[i, i]].exp().norm().max(1.0));
        }
        let n = CMat::from_shape_vec((2, 2), vec![C0, c(4.0, 1.0), C0, C0]).unwrap();
        let e = expm(&n);
        assert!((e[[0, 0]] - C1).norm() < 1e-15);
        assert!((e[[0, 1]] - c(4.0, 1.0)).norm() < 1e-14);
    }

    #[test]
    fn expm_of_hermitian_generator_is_unitary_and_matches_action() {
        let n = 12;
        let h = CMat::from_shape_fn((n, n), |(i, j)| {
            let x = (i * 7 + j * 3) as f64;
            let y = (j * 7 + i * 3) as f64;
            c(x.sin() + y.sin(), x.cos() - y.cos())
        });
        let a = h.mapv(|v| v * c(0.0, 1.3));
        let u = expm(&a);
        let err = frobenius(&(adjoint(&u).dot(&u) - identity(n)));
        assert!(err < 1e-12, "{err}");
        let v = CVec::from_shape_fn(n, |i| c(1.0 / (1.0 + i as f64), 0.5));
        let direct = u.dot(&v);
        let action = expm_action(&Csr::from_dense(&a), &v, 1e-16);
        assert!(vec_norm((&direct - &action).view()) < 1e-12 * vec_norm(direct.view()));
    }

    #[test]
    fn solve_and_norms() {
        let a = CMat::from_shape_vec(
            (3, 3),
            vec![
                c(2.0, 1.0),
                C1,
                C0,
                C0,
                c(0.0, 3.0),
                C1,
                C1,
                C0,
                c(4.0, 0.0),
            ],
        )
        .unwrap();
        let b = identity(3);
        let x = solve(&a, &b).unwrap();
        assert!(frobenius(&(a.dot(&x) - &b)) < 1e-14);
        let d = CMat::from_diag(&CVec::from(vec![c(3.0, 4.0), c(1.0, 0.0)]));
        assert!((norm_2(&d) - 5.0).abs() < 1e-9);
        assert_eq!(norm_1(&d), 5.0);
        assert!(solve(&CMat::zeros((2, 2)), &identity(2)).is_none());
    }

    #[test]
    fn kron_layout_is_row_major() {
        let a = CMat::from_shape_vec(
            (2, 2),
            vec![c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0), c(4.0, 0.0)],
        )
        .unwrap();
        let k = kron(&a, &identity(2));
        // kron(a, I)[(i,j),(k,l)] = a[i,k] δ_jl
        assert_eq!(k[[3, 1]], c(3.0, 0.0));
        assert_eq!(k[[3, 0]], C0);
    }
}
