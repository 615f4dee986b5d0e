//! Physical inputs and the derived scalars of the two-oscillator model.
//!
//! Units are whatever the caller uses consistently: `hbar` is an action,
//! `theta` an area (length²), `mass` a mass and `omega` an angular
//! frequency. Tests and examples work in `mass = omega = 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat4::Mat4;
use crate::scalar::Scalar;

/// Relative tolerance for the two independent routes to `beta`; narrower
/// scalars use `BETA_CONSISTENCY_ULPS * epsilon` when that is larger.
pub const BETA_CONSISTENCY_TOL: f64 = 1e-12;
pub const BETA_CONSISTENCY_ULPS: f64 = 4096.0;

/// The four physical inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysParams<T = f64> {
    /// Reduced Planck constant (action), `>= 0`.
    pub hbar: T,
    /// Configuration-space non-commutativity, `[x1, x2] = i theta` (area), `>= 0`.
    pub theta: T,
    /// Oscillator mass, `> 0`.
    pub mass: T,
    /// Oscillator angular frequency, `> 0`.
    pub omega: T,
}

impl<T: Scalar> Default for PhysParams<T> {
    /// `hbar = theta = mass = omega = 1`.
    fn default() -> Self {
        PhysParams {
            hbar: T::one(),
            theta: T::one(),
            mass: T::one(),
            omega: T::one(),
        }
    }
}

impl<T: Scalar> PhysParams<T> {
    pub fn new(hbar: T, theta: T, mass: T, omega: T) -> Result<Self> {
        let p = PhysParams {
            hbar,
            theta,
            mass,
            omega,
        };
        p.validate()?;
        Ok(p)
    }

    /// `mass = omega = 1` with the given deformation parameters.
    pub fn unit(hbar: T, theta: T) -> Result<Self> {
        Self::new(hbar, theta, T::one(), T::one())
    }

    pub fn validate(&self) -> Result<()> {
        let check_nonneg = |name, v: T| {
            if !v.is_finite() || v < T::zero() {
                Err(Error::param(
                    name,
                    format!("must be finite and >= 0, got {v}"),
                ))
            } else {
                Ok(())
            }
        };
        let check_pos = |name, v: T| {
            if !v.is_finite() || v <= T::zero() {
                Err(Error::param(
                    name,
                    format!("must be finite and > 0, got {v}"),
                ))
            } else {
                Ok(())
            }
        };
        check_nonneg("hbar", self.hbar)?;
        check_nonneg("theta", self.theta)?;
        check_pos("mass", self.mass)?;
        check_pos("omega", self.omega)?;
        if self.hbar == T::zero() && self.theta == T::zero() {
            return Err(Error::FullyDegenerate);
        }
        Ok(())
    }

    /// `m * omega`, the scale that converts between position and momentum.
    #[inline]
    pub fn m_omega(&self) -> T {
        self.mass * self.omega
    }

    pub fn with_hbar(self, hbar: T) -> Self {
        PhysParams { hbar, ..self }
    }

    pub fn with_theta(self, theta: T) -> Self {
        PhysParams { theta, ..self }
    }

    pub fn derive(&self) -> Result<DerivedParams<T>> {
        derive(self)
    }
}

/// Scalars derived from [`PhysParams`].
///
/// When `hbar = 0` the quantities that carry `1/hbar` take their IEEE limit
/// values: `k_plus = +inf`, `beta = -inf`; `k_minus`, `j_det` are `0` and
/// `norm_n` equals its finite limit `theta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams<T = f64> {
    pub lambda_plus: T,
    pub lambda_minus: T,
    pub k_plus: T,
    pub k_minus: T,
    /// Action scale `lambda_plus / (m omega)` used by the Weyl operators.
    pub mu: T,
    pub gamma_plus: T,
    pub gamma_minus: T,
    pub omega_plus: T,
    pub omega_minus: T,
    /// Ground-state exponent; `<= 0`.
    pub beta: T,
    pub norm_n: T,
    /// Determinant of the real-to-complex coherent label map, `hbar² / (4 mu⁴)`.
    pub j_det: T,
}

/// Computes every derived scalar.
///
/// All differences of nearly equal quantities are rationalized so that the
/// `hbar -> 0` and `theta -> 0` corners keep full relative precision:
/// with `a = m omega`, `s = sqrt(4 hbar² + a² theta²)` and `d = s + a theta`,
/// `lambda_+ = a d / 2`, `lambda_- = 2 a hbar² / d`, `mu = d / 2`.
pub fn derive<T: Scalar>(p: &PhysParams<T>) -> Result<DerivedParams<T>> {
    p.validate()?;
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    let half = T::lit(0.5);
    let (h, th, m) = (p.hbar, p.theta, p.mass);
    let a = p.m_omega();
    let a_th = a * th;

    let s = (four * h * h + a_th * a_th).sqrt();
    let s2 = (four * h * h + two * a_th * a_th).sqrt();
    let d = s + a_th;

    let lambda_plus = half * a * d;
    let lambda_minus = two * a * h * h / d;
    let mu = half * d;

    let gamma_plus = half * (T::one() + a_th / s2);
    // Sterbenz: exact because gamma_plus lies in [1/2, 1].
    let gamma_minus = T::one() - gamma_plus;

    let omega_plus = lambda_plus / (m * mu);
    let omega_minus = lambda_minus / (m * mu);

    // theta * lambda_- / hbar² in closed form, finite at hbar = 0.
    let q_minus = two * a_th / d;
    let k_minus = lambda_minus * (four - two * q_minus);

    let (k_plus, beta, j_det) = if h > T::zero() {
        let q_plus = th * lambda_plus / (h * h);
        let k_plus = lambda_plus * (four + two * q_plus);
        // ln(1 - q_-): log1p while q_- is small, else 1 - q_- = 4 hbar² / d².
        let beta_a = if q_minus < half {
            (-q_minus).ln_1p()
        } else {
            (four * h * h / (d * d)).ln()
        };
        let beta_b = -q_plus.ln_1p();
        let scale = beta_a.abs().max(beta_b.abs());
        let tol = T::lit(BETA_CONSISTENCY_TOL).max(T::epsilon() * T::lit(BETA_CONSISTENCY_ULPS));
        if (beta_a - beta_b).abs() > tol * scale {
            return Err(Error::BetaMismatch {
                route_a: beta_a.as_f64(),
                route_b: beta_b.as_f64(),
            });
        }
        let j_det = h * h / (four * mu * mu * mu * mu);
        (k_plus, beta_a, j_det)
    } else {
        (T::infinity(), T::neg_infinity(), T::zero())
    };

    // hbar⁴ / (2 hbar² lambda_- - theta lambda_-²) = d² / (4 a s).
    let norm_n = d * d / (four * a * s);

    Ok(DerivedParams {
        lambda_plus,
        lambda_minus,
        k_plus,
        k_minus,
        mu,
        gamma_plus,
        gamma_minus,
        omega_plus,
        omega_minus,
        beta,
        norm_n,
        j_det,
    })
}

/// Real-to-complex coherent label map `J`: rows give
/// `(Re z1, Re z2, Im z1, Im z2)` of the label `z_r` of the coherent state
/// at phase-space point `r`. Requires `hbar > 0`.
pub fn coherent_label_matrix<T: Scalar>(
    p: &PhysParams<T>,
    d: &DerivedParams<T>,
) -> Result<Mat4<T>> {
    if !(p.hbar > T::zero()) {
        return Err(Error::HbarZero);
    }
    let h = p.hbar;
    let c = (T::lit(2.0) * d.mu * (d.lambda_plus + d.lambda_minus)).recip();
    let (sp, sm) = (d.k_plus.sqrt(), d.k_minus.sqrt());
    let z = T::zero();
    Ok([
        [c * d.lambda_minus * sp, z, z, -c * h * sp],
        [-c * d.lambda_plus * sm, z, z, -c * h * sm],
        [z, c * d.lambda_minus * sp, c * h * sp, z],
        [z, c * d.lambda_plus * sm, -c * h * sm, z],
    ])
}

/// Which limit branch a parameter point is probing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// Neither deformation is small relative to the other.
    Generic,
    /// `m omega theta << hbar`: configuration space almost commutative.
    NearCommutativeConfig,
    /// `hbar << m omega theta`: quantum non-commutativity almost removed.
    NearClassical,
    /// `mu < eps`: both deformations small together.
    FullyDegenerate,
}

/// Classifies a parameter point by comparing `m omega theta / hbar` and
/// `mu` against `eps`.
pub fn limit_regime<T: Scalar>(p: &PhysParams<T>, eps: T) -> Result<Regime> {
    if !(eps > T::zero()) {
        return Err(Error::param("eps", "must be > 0"));
    }
    let d = p.derive()?;
    if d.mu < eps {
        return Ok(Regime::FullyDegenerate);
    }
    let ratio = if p.hbar == T::zero() {
        T::infinity()
    } else {
        p.m_omega() * p.theta / p.hbar
    };
    Ok(if ratio < eps {
        Regime::NearCommutativeConfig
    } else if ratio > eps.recip() {
        Regime::NearClassical
    } else {
        Regime::Generic
    })
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn commutative_point() {
        let d = PhysParams::unit(1.0, 0.0).unwrap().derive().unwrap();
        assert_eq!(d.lambda_plus, 1.0);
        assert_eq!(d.lambda_minus, 1.0);
        assert_eq!(d.k_plus, 4.0);
        assert_eq!(d.k_minus, 4.0);
        assert_eq!(d.mu, 1.0);
        assert_eq!(d.gamma_plus, 0.5);
        assert_eq!(d.gamma_minus, 0.5);
        assert_eq!(d.omega_plus, 1.0);
        assert_eq!(d.omega_minus, 1.0);
        assert_eq!(d.beta, 0.0);
    }

    #[test]
    fn classical_point_is_admitted_exactly() {
        let d = PhysParams::<f64>::unit(0.0, 1.0).unwrap().derive().unwrap();
        assert_eq!(d.lambda_plus, 1.0);
        assert_eq!(d.lambda_minus, 0.0);
        assert_eq!(d.mu, 1.0);
        assert_eq!(d.omega_plus, 1.0);
        assert_eq!(d.omega_minus, 0.0);
        assert!(d.k_plus.is_infinite() && d.beta == f64::NEG_INFINITY);
        assert_eq!(d.norm_n, 1.0);
        assert_relative_eq!(
            d.gamma_plus,
            0.5 * (1.0 + 1.0 / 2f64.sqrt()),
            max_relative = 1e-15
        );
    }

    // 40-digit values from an independent mpmath evaluation of the defining
    // (non-rationalized) formulas at hbar = theta = m = omega = 1.
    #[test]
    fn unit_point_matches_arbitrary_precision() {
        let d = PhysParams::unit(1.0, 1.0).unwrap().derive().unwrap();
        let tol = 1e-14;
        assert_relative_eq!(d.lambda_plus, 1.618_033_988_749_894_8, max_relative = tol);
        assert_relative_eq!(d.lambda_minus, 0.618_033_988_749_894_8, max_relative = tol);
        assert_relative_eq!(d.k_plus, 11.708_203_932_499_369, max_relative = tol);
        assert_relative_eq!(d.k_minus, 1.708_203_932_499_369, max_relative = tol);
        assert_relative_eq!(d.mu, d.lambda_plus, max_relative = tol);
        assert_relative_eq!(d.beta, -0.962_423_650_119_206_9, max_relative = tol);
        assert_relative_eq!(d.norm_n, 1.170_820_393_249_936_9, max_relative = tol);
        assert_relative_eq!(d.gamma_plus, 0.704_124_145_231_931_5, max_relative = tol);
        assert_relative_eq!(d.omega_minus, 0.381_966_011_250_105_15, max_relative = tol);
        assert_relative_eq!(d.j_det, 0.036_474_508_437_578_864, max_relative = tol);
        let sqrt5 = 5f64.sqrt();
        assert_relative_eq!(
            d.k_plus,
            d.lambda_plus * (4.0 + 2.0 * d.lambda_plus),
            max_relative = tol
        );
        assert_relative_eq!(
            d.k_minus,
            d.lambda_minus * (4.0 - 2.0 * d.lambda_minus),
            max_relative = tol
        );
        assert_relative_eq!(d.lambda_plus, (sqrt5 + 1.0) / 2.0, max_relative = tol);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert_eq!(
            PhysParams::unit(0.0, 0.0).unwrap_err(),
            Error::FullyDegenerate
        );
        assert!(matches!(
            PhysParams::unit(-1.0, 1.0),
            Err(Error::InvalidParameter { name: "hbar", .. })
        ));
        assert!(matches!(
            PhysParams::new(1.0, -1e-3, 1.0, 1.0),
            Err(Error::InvalidParameter { name: "theta", .. })
        ));
        assert!(PhysParams::new(1.0, 1.0, 0.0, 1.0).is_err());
        assert!(PhysParams::new(1.0, 1.0, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn dimensioned_units() {
        // m = 2, omega = 3: lambda_+ - lambda_- = m² omega² theta.
        let p = PhysParams::new(0.7, 0.2, 2.0, 3.0).unwrap();
        let d = p.derive().unwrap();
        assert_relative_eq!(
            d.lambda_plus - d.lambda_minus,
            36.0 * 0.2,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            d.lambda_plus * d.lambda_minus,
            36.0 * 0.49,
            max_relative = 1e-13
        );
        assert_relative_eq!(d.mu, d.lambda_plus / 6.0, max_relative = 1e-15);
        assert_relative_eq!(d.omega_plus, 3.0, max_relative = 1e-15);
    }

    #[test]
    fn generic_over_f32() {
        let d = PhysParams::<f32>::unit(1.0, 1.0).unwrap().derive().unwrap();
        assert!((d.lambda_plus - 1.618_034).abs() < 1e-6);
        assert!(d.beta < 0.0);
    }

    #[test]
    fn regimes() {
        let eps = 1e-6;
        let r = |h, t| limit_regime(&PhysParams::unit(h, t).unwrap(), eps).unwrap();
        assert_eq!(r(1.0, 1e-12), Regime::NearCommutativeConfig);
        assert_eq!(r(1e-12, 1.0), Regime::NearClassical);
        assert_eq!(r(0.0, 1.0), Regime::NearClassical);
        assert_eq!(r(1.0, 1.0), Regime::Generic);
        assert_eq!(r(1e-9, 1e-9), Regime::FullyDegenerate);
        assert!(limit_regime(&PhysParams::unit(1.0, 1.0).unwrap(), 0.0).is_err());
    }

    #[test]
    fn theta_to_zero_is_linear() {
        let mut prev = None;
        for k in 2..=8 {
            let th = 10f64.powi(-k);
            let d = PhysParams::unit(1.0, th).unwrap().derive().unwrap();
            let dev = (d.mu - 1.0).abs();
            // mu = 1 + theta/2 + O(theta²) at hbar = m = omega = 1.
            assert_relative_eq!(dev, th / 2.0, max_relative = 1e-6 + th);
            if let Some(p) = prev {
                assert_relative_eq!(p / dev, 10.0, max_relative = 1e-2);
            }
            prev = Some(dev);
        }
    }

    #[test]
    fn label_matrix_determinant() {
        for (h, t, m, w) in [
            (1.0, 1.0, 1.0, 1.0),
            (0.3, 2.0, 1.5, 0.7),
            (2.0, 1e-3, 1.0, 1.0),
        ] {
            let p = PhysParams::new(h, t, m, w).unwrap();
            let d = p.derive().unwrap();
            let j = coherent_label_matrix(&p, &d).unwrap();
            assert_relative_eq!(crate::mat4::det(&j), d.j_det, max_relative = 1e-12);
        }
        let p = PhysParams::unit(0.0, 1.0).unwrap();
        assert_eq!(
            coherent_label_matrix(&p, &p.derive().unwrap()).unwrap_err(),
            Error::HbarZero
        );
    }

    #[test]
    fn hbar_to_zero_gives_m_omega_theta() {
        let p = PhysParams::new(1e-9, 0.5, 2.0, 1.5).unwrap();
        let d = p.derive().unwrap();
        assert_relative_eq!(d.mu, 3.0 * 0.5, max_relative = 1e-15);
        assert!(d.lambda_minus < 1e-15);
    }
}
