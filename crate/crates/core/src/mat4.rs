//! Minimal dense 4×4 real matrices for phase-space maps.

use crate::function::PhaseVector;
use crate::scalar::Scalar;

pub type Mat4<T> = [[T; 4]; 4];

pub fn identity<T: Scalar>() -> Mat4<T> {
    let mut m = [[T::zero(); 4]; 4];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = T::one();
    }
    m
}

/// Block form `[[0, 1], [-1, 0]]` in the order `(x1, x2, y1, y2)`.
pub fn symplectic_form<T: Scalar>() -> Mat4<T> {
    let mut m = [[T::zero(); 4]; 4];
    m[0][2] = T::one();
    m[1][3] = T::one();
    m[2][0] = -T::one();
    m[3][1] = -T::one();
    m
}

pub fn mul<T: Scalar>(a: &Mat4<T>, b: &Mat4<T>) -> Mat4<T> {
    let mut c = [[T::zero(); 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            c[i][j] = (0..4).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

pub fn transpose<T: Scalar>(a: &Mat4<T>) -> Mat4<T> {
    let mut t = [[T::zero(); 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            t[j][i] = a[i][j];
        }
    }
    t
}

pub fn sub<T: Scalar>(a: &Mat4<T>, b: &Mat4<T>) -> Mat4<T> {
    let mut c = *a;
    for i in 0..4 {
        for j in 0..4 {
            c[i][j] = c[i][j] - b[i][j];
        }
    }
    c
}

pub fn add<T: Scalar>(a: &Mat4<T>, b: &Mat4<T>) -> Mat4<T> {
    let mut c = *a;
    for i in 0..4 {
        for j in 0..4 {
            c[i][j] = c[i][j] + b[i][j];
        }
    }
    c
}

pub fn frobenius<T: Scalar>(a: &Mat4<T>) -> T {
    a.iter().flatten().map(|&v| v * v).sum::<T>().sqrt()
}

pub fn apply<T: Scalar>(a: &Mat4<T>, r: &PhaseVector<T>) -> PhaseVector<T> {
    let v = r.to_array();
    let mut out = [T::zero(); 4];
    for (o, row) in out.iter_mut().zip(a) {
        *o = row[0] * v[0] + row[1] * v[1] + row[2] * v[2] + row[3] * v[3];
    }
    PhaseVector::from_array(out)
}

/// LU with partial pivoting; returns the permutation sign and factors.
#[allow(clippy::needless_range_loop)]
fn lu<T: Scalar>(a: &Mat4<T>) -> Option<(Mat4<T>, [usize; 4], T)> {
    let mut m = *a;
    let mut perm = [0, 1, 2, 3];
    let mut sign = T::one();
    for col in 0..4 {
        let piv =
            (col..4).max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap())?;
        if m[piv][col] == T::zero() {
            return None;
        }
        if piv != col {
            m.swap(piv, col);
            perm.swap(piv, col);
            sign = -sign;
        }
        for i in col + 1..4 {
            let f = m[i][col] / m[col][col];
            m[i][col] = f;
            for j in col + 1..4 {
                m[i][j] = m[i][j] - f * m[col][j];
            }
        }
    }
    Some((m, perm, sign))
}

pub fn det<T: Scalar>(a: &Mat4<T>) -> T {
    match lu(a) {
        Some((m, _, sign)) => sign * m[0][0] * m[1][1] * m[2][2] * m[3][3],
        None => T::zero(),
    }
}

#[allow(clippy::needless_range_loop)]
pub fn inverse<T: Scalar>(a: &Mat4<T>) -> Option<Mat4<T>> {
    let (m, perm, _) = lu(a)?;
    let mut inv = [[T::zero(); 4]; 4];
    for col in 0..4 {
        // Solve L U x = P e_col.
        let mut x = [T::zero(); 4];
        for i in 0..4 {
            let rhs = if perm[i] == col { T::one() } else { T::zero() };
            x[i] = rhs - (0..i).map(|k| m[i][k] * x[k]).sum::<T>();
        }
        for i in (0..4).rev() {
            x[i] = (x[i] - (i + 1..4).map(|k| m[i][k] * x[k]).sum::<T>()) / m[i][i];
        }
        for i in 0..4 {
            inv[i][col] = x[i];
        }
    }
    Some(inv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_and_det() {
        let a: Mat4<f64> = [
            [2.0, 1.0, 0.0, 0.5],
            [0.0, 3.0, -1.0, 0.0],
            [1.0, 0.0, 0.0, 4.0],
            [0.0, 2.0, 1.0, 1.0],
        ];
        let inv = inverse(&a).unwrap();
        let e = frobenius(&sub(&mul(&a, &inv), &identity()));
        assert!(e < 1e-14, "{e}");
        // numpy.linalg.det: -38.5
        assert!((det(&a) + 38.5).abs() < 1e-13, "{}", det(&a));
        assert_eq!(det(&symplectic_form::<f64>()), 1.0);
    }

    #[test]
    fn singular_has_no_inverse() {
        let mut a = identity::<f64>();
        a[2] = [0.0; 4];
        assert!(inverse(&a).is_none());
        assert_eq!(det(&a), 0.0);
    }
}
