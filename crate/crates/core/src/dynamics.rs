//! Linear phase-space flow generated by the oscillator Hamiltonian, and the
//! time-evolved smoothing map.
//!
//! Two evolution matrices are provided:
//!
//! * [`evolution_matrix`]: the block rotation with frequencies `ω±`, acting
//!   on the pairs `(x1, y1)` and `(x2, y2)`. It is symplectic for the
//!   standard form and exact for `theta = 0` in `m = ω = 1` units.
//! * [`coherent_flow`]: `C_t = J⁻¹ R(ω± t) J`, the rotation
//!   `z_i -> z_i exp(i ω_i t)` of the coherent-state labels pulled back to
//!   phase space. This is the exact Heisenberg flow of the Weyl operators
//!   for every `theta` and is the default for [`smooth_evolved`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::{Coord, PhaseVector, SepGaussFunction};
use crate::mat4::{self, Mat4};
use crate::params::{coherent_label_matrix, DerivedParams, PhysParams};
use crate::scalar::Scalar;
use crate::smoothing::{
    kernel_widths, smear_factor, Estimate, KernelVariant, QuadratureSpec, Smoother,
};

/// A real 4×4 evolution matrix at time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymplecticMatrix4<T = f64> {
    pub matrix: Mat4<T>,
    pub t: T,
    pub omega_plus: T,
    pub omega_minus: T,
}

impl<T: Scalar> SymplecticMatrix4<T> {
    pub fn apply(&self, r: &PhaseVector<T>) -> PhaseVector<T> {
        mat4::apply(&self.matrix, r)
    }

    pub fn det(&self) -> T {
        mat4::det(&self.matrix)
    }
}

/// Rotation by `ω+ t` in the `(x1, y1)` plane and by `ω- t` in `(x2, y2)`.
fn block_rotation<T: Scalar>(wp_t: T, wm_t: T) -> Mat4<T> {
    let (s1, c1) = wp_t.sin_cos();
    let (s2, c2) = wm_t.sin_cos();
    let z = T::zero();
    [
        [c1, z, -s1, z],
        [z, c2, z, -s2],
        [s1, z, c1, z],
        [z, s2, z, c2],
    ]
}

/// Block evolution matrix with frequencies `ω±`.
pub fn evolution_matrix<T: Scalar>(t: T, d: &DerivedParams<T>) -> SymplecticMatrix4<T> {
    SymplecticMatrix4 {
        matrix: block_rotation(d.omega_plus * t, d.omega_minus * t),
        t,
        omega_plus: d.omega_plus,
        omega_minus: d.omega_minus,
    }
}

/// Exact flow `C_t = J⁻¹ R(ω± t) J` of the coherent-state labels, with `J`
/// the real label matrix. Formed as `I + J⁻¹ (R - I) J` so that `C_0 = I`
/// exactly. Requires `hbar > 0`.
pub fn coherent_flow<T: Scalar>(
    t: T,
    p: &PhysParams<T>,
    d: &DerivedParams<T>,
) -> Result<SymplecticMatrix4<T>> {
    let j = coherent_label_matrix(p, d)?;
    let j_inv =
        mat4::inverse(&j).ok_or_else(|| Error::param("hbar", "label matrix is singular"))?;
    // Label rows are (Re z1, Re z2, Im z1, Im z2): same layout as the block rotation.
    let rot = block_rotation(d.omega_plus * t, d.omega_minus * t);
    let delta = mat4::sub(&rot, &mat4::identity());
    let matrix = mat4::add(
        &mat4::identity(),
        &mat4::mul(&j_inv, &mat4::mul(&delta, &j)),
    );
    Ok(SymplecticMatrix4 {
        matrix,
        t,
        omega_plus: d.omega_plus,
        omega_minus: d.omega_minus,
    })
}

/// Which evolution matrix drives the evolved map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Flow {
    /// [`coherent_flow`], exact for all `theta`.
    #[default]
    CoherentState,
    /// [`evolution_matrix`].
    Block,
}

/// `A` or `C` at time `t` for the chosen flow.
pub fn flow_matrix<T: Scalar>(
    flow: Flow,
    t: T,
    p: &PhysParams<T>,
    d: &DerivedParams<T>,
) -> Result<SymplecticMatrix4<T>> {
    match flow {
        Flow::CoherentState => coherent_flow(t, p, d),
        Flow::Block => Ok(evolution_matrix(t, d)),
    }
}

/// Skew form `σ = Ωᵀ Θ Ω` preserved by [`coherent_flow`], where `Θ` holds
/// the commutators of `(X1, X2, P1, P2)` divided by `i`. Equals `hbar Ω`
/// when `theta = 0`.
pub fn noncommutative_form<T: Scalar>(p: &PhysParams<T>) -> Mat4<T> {
    let z = T::zero();
    let (h, th) = (p.hbar, p.theta);
    let big_theta = [[z, th, h, z], [-th, z, z, h], [-h, z, z, z], [z, -h, z, z]];
    let om = mat4::symplectic_form();
    mat4::mul(&mat4::transpose(&om), &mat4::mul(&big_theta, &om))
}

/// Residuals of the structural identities of a one-parameter flow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowResiduals<T = f64> {
    /// `‖Ω A_t − A_{−t}ᵀ Ω‖_F`.
    pub symplectic: T,
    /// `‖A_tᵀ σ A_t − σ‖_F / ‖σ‖_F` for the non-commutative form.
    pub nc_symplectic: T,
    /// `|det A_t − 1|`.
    pub det: T,
    /// `‖A_t A_s − A_{t+s}‖_F`.
    pub group: T,
    /// `‖A_0 − I‖_F`.
    pub identity: T,
}

/// Evaluates [`FlowResiduals`] at `(t, s)`.
pub fn flow_residuals<T: Scalar>(
    flow: Flow,
    t: T,
    s: T,
    p: &PhysParams<T>,
    d: &DerivedParams<T>,
) -> Result<FlowResiduals<T>> {
    let a_t = flow_matrix(flow, t, p, d)?.matrix;
    let a_mt = flow_matrix(flow, -t, p, d)?.matrix;
    let a_s = flow_matrix(flow, s, p, d)?.matrix;
    let a_ts = flow_matrix(flow, t + s, p, d)?.matrix;
    let a_0 = flow_matrix(flow, T::zero(), p, d)?.matrix;
    let om = mat4::symplectic_form();
    let sigma = noncommutative_form(p);
    let nc = mat4::sub(
        &mat4::mul(&mat4::transpose(&a_t), &mat4::mul(&sigma, &a_t)),
        &sigma,
    );
    Ok(FlowResiduals {
        symplectic: mat4::frobenius(&mat4::sub(
            &mat4::mul(&om, &a_t),
            &mat4::mul(&mat4::transpose(&a_mt), &om),
        )),
        nc_symplectic: mat4::frobenius(&nc) / mat4::frobenius(&sigma),
        det: (mat4::det(&a_t) - T::one()).abs(),
        group: mat4::frobenius(&mat4::sub(&mat4::mul(&a_t, &a_s), &a_ts)),
        identity: mat4::frobenius(&mat4::sub(&a_0, &mat4::identity())),
    })
}

/// Smallest `t > 0` with `A_t = I`, searched on `(0, t_max]`.
///
/// A grid scan of `‖A_t − I‖_F` brackets the first local minimum that is
/// below `0.5`; golden-section search refines it. Returns `None` when the
/// flow does not return to the identity within `t_max`.
pub fn recover_period<T: Scalar>(
    flow: Flow,
    t_max: T,
    p: &PhysParams<T>,
    d: &DerivedParams<T>,
) -> Result<Option<T>> {
    const GRID: usize = 4096;
    let dist = |t: T| -> Result<T> {
        Ok(mat4::frobenius(&mat4::sub(
            &flow_matrix(flow, t, p, d)?.matrix,
            &mat4::identity(),
        )))
    };
    let step = t_max / T::lit(GRID as f64);
    let mut vals = Vec::with_capacity(GRID + 1);
    for k in 0..=GRID {
        vals.push(dist(step * T::lit(k as f64))?);
    }
    let Some(k) = (1..GRID)
        .find(|&k| vals[k] <= vals[k - 1] && vals[k] <= vals[k + 1] && vals[k] < T::lit(0.5))
    else {
        return Ok(None);
    };
    let (mut lo, mut hi) = (step * T::lit((k - 1) as f64), step * T::lit((k + 1) as f64));
    let g = T::lit(0.5 * (5f64.sqrt() - 1.0));
    let mut c = hi - g * (hi - lo);
    let mut e = lo + g * (hi - lo);
    let (mut fc, mut fe) = (dist(c)?, dist(e)?);
    for _ in 0..200 {
        if hi - lo <= T::epsilon() * hi.abs() {
            break;
        }
        if fc < fe {
            hi = e;
            e = c;
            fe = fc;
            c = hi - g * (hi - lo);
            fc = dist(c)?;
        } else {
            lo = c;
            c = e;
            fc = fe;
            e = lo + g * (hi - lo);
            fe = dist(e)?;
        }
    }
    Ok(Some(T::lit(0.5) * (lo + hi)))
}

/// Time-evolved smoothing map
/// `F_t(r) = π⁻² ∫ d⁴w exp(-|w|²) F(A_{-t} (r + h(w)))`.
///
/// At `t = 0` this runs exactly the code path of [`Smoother::smooth`], so
/// the two agree bitwise.
pub fn smooth_evolved<T: Scalar>(
    f: &SepGaussFunction<T>,
    r: &PhaseVector<T>,
    t: T,
    p: &PhysParams<T>,
    q: &QuadratureSpec,
    flow: Flow,
) -> Result<Estimate<T>> {
    Smoother::new(*p, *q)?.smooth_evolved(f, r, t, flow)
}

impl<T: Scalar> Smoother<T> {
    /// See [`smooth_evolved`].
    pub fn smooth_evolved(
        &self,
        f: &SepGaussFunction<T>,
        r: &PhaseVector<T>,
        t: T,
        flow: Flow,
    ) -> Result<Estimate<T>> {
        if t == T::zero() {
            return self.integrate(f, r, None);
        }
        let back = flow_matrix(flow, -t, self.params(), self.derived())?;
        self.integrate(f, r, Some(&back.matrix))
    }
}

/// Classical trajectory value `F(A_{-t} r)`.
pub fn classical_evolved<T: Scalar>(
    f: &SepGaussFunction<T>,
    r: &PhaseVector<T>,
    t: T,
    p: &PhysParams<T>,
    flow: Flow,
) -> Result<T> {
    let d = p.derive()?;
    Ok(f.evaluate(&flow_matrix(flow, -t, p, &d)?.apply(r)))
}

/// `hbar -> 0` limit of the evolved map at fixed `theta > 0`:
/// `π^{-1/2} ∫ dv exp(-v²) F∞(y2 + mω sqrt(2θ) v)`, with `F∞` the limit
/// over `x1, x2, y1 -> +infinity`. Independent of `t`, `x1`, `x2`, `y1`.
pub fn evolved_hbar0<T: Scalar>(
    f: &SepGaussFunction<T>,
    r: &PhaseVector<T>,
    _t: T,
    p: &PhysParams<T>,
) -> Result<T> {
    if !(p.theta > T::zero()) {
        return Err(Error::ThetaZero);
    }
    let lim = f
        .f_infinity(&[Coord::X1, Coord::X2, Coord::Y1])
        .map_err(|_| Error::CallableNotSupported {
            op: "evolved_hbar0",
        })?;
    let factors = lim.factors().expect("separable after f_infinity");
    let a = p.m_omega();
    let constant = factors[0].offset * factors[1].offset * factors[2].offset;
    Ok(constant * smear_factor(&factors[3], r.y2, a * a * p.theta))
}

/// One point of the `hbar -> 0` cancellation sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CancellationPoint<T = f64> {
    pub hbar: T,
    pub omega_minus: T,
    /// Largest `|f_coeff_±|`.
    pub f_coeff: T,
    /// `max |f_coeff_±| · |sin(ω₋ t)|`.
    pub product: T,
}

/// Exhibits that the diverging `f` coefficients times `sin(ω₋ t)` vanish as
/// `hbar -> 0` at fixed `theta`.
pub fn cancellation_sweep<T: Scalar>(
    p: &PhysParams<T>,
    t: T,
    hbars: &[T],
) -> Result<Vec<CancellationPoint<T>>> {
    hbars
        .iter()
        .map(|&h| {
            let q = p.with_hbar(h);
            let d = q.derive()?;
            let w = kernel_widths(&d, &q, KernelVariant::A)?;
            let f_coeff = w.f_coeff_plus.abs().max(w.f_coeff_minus.abs());
            Ok(CancellationPoint {
                hbar: h,
                omega_minus: d.omega_minus,
                f_coeff,
                product: f_coeff * (d.omega_minus * t).sin().abs(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function::GaussFactor;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn unit(h: f64, t: f64) -> PhysParams<f64> {
        PhysParams::unit(h, t).unwrap()
    }

    #[test]
    fn block_form_limits() {
        let d = unit(1.0, 0.0).derive().unwrap();
        assert_eq!(evolution_matrix(0.0, &d).matrix, mat4::identity::<f64>());
        let a = evolution_matrix(0.9, &d).matrix;
        assert_relative_eq!(a[0][0], 0.9f64.cos(), max_relative = 1e-15);
        assert_relative_eq!(a[1][1], 0.9f64.cos(), max_relative = 1e-15);
        assert_relative_eq!(a[3][1], 0.9f64.sin(), max_relative = 1e-15);
        let b = evolution_matrix(2.0, &unit(0.0, 1.0).derive().unwrap()).matrix;
        assert_eq!([b[1][1], b[3][3], b[1][3], b[3][1]], [1.0, 1.0, 0.0, 0.0]);
        assert_relative_eq!(b[2][0], 2f64.sin(), max_relative = 1e-15);
    }

    #[test]
    fn coherent_flow_equals_block_form_at_theta_zero() {
        let p = unit(0.7, 0.0);
        let d = p.derive().unwrap();
        for t in [0.3, -1.2, 5.0] {
            let c = coherent_flow(t, &p, &d).unwrap().matrix;
            let a = evolution_matrix(t, &d).matrix;
            assert!(mat4::frobenius(&mat4::sub(&c, &a)) < 1e-14);
        }
        assert_eq!(
            coherent_flow(0.0, &unit(1.0, 1.0), &unit(1.0, 1.0).derive().unwrap())
                .unwrap()
                .matrix,
            mat4::identity::<f64>()
        );
    }

    #[test]
    fn coherent_flow_with_dimensions_is_classical_oscillator() {
        // m = 2, ω = 3: x(t) = x cos ωt + y sin ωt / (mω).
        let p = PhysParams::new(0.5, 0.0, 2.0, 3.0).unwrap();
        let d = p.derive().unwrap();
        let t = 0.4;
        let c = coherent_flow(-t, &p, &d).unwrap();
        let r = PhaseVector::new(1.0, 0.0, 0.6, 0.0);
        let got = c.apply(&r);
        let (s, co) = (3.0_f64 * t).sin_cos();
        assert_relative_eq!(got.x1, co + 0.6 * s / 6.0, max_relative = 1e-13);
        assert_relative_eq!(got.y1, -6.0 * s + 0.6 * co, max_relative = 1e-13);
    }

    #[test]
    fn structural_residuals() {
        let p = unit(1.0, 1.0);
        let d = p.derive().unwrap();
        let block = flow_residuals(Flow::Block, 0.77, -2.1, &p, &d).unwrap();
        assert!(block.symplectic < 1e-15 && block.det < 1e-15 && block.group < 1e-15);
        let coh = flow_residuals(Flow::CoherentState, 0.77, -2.1, &p, &d).unwrap();
        assert!(
            coh.nc_symplectic < 1e-14 && coh.det < 1e-14 && coh.group < 1e-13,
            "{coh:?}"
        );
        assert_eq!(coh.identity, 0.0);
        // Not symplectic for the standard form once theta > 0.
        assert!(coh.symplectic > 0.1);
    }

    #[test]
    fn period_at_theta_zero() {
        let p = PhysParams::new(1.0, 0.0, 1.0, 2.5).unwrap();
        let d = p.derive().unwrap();
        let want = 2.0 * PI / 2.5;
        for flow in [Flow::Block, Flow::CoherentState] {
            let t = recover_period(flow, 1.5 * want, &p, &d).unwrap().unwrap();
            assert!((t - want).abs() < 1e-9, "{flow:?}: {t}");
        }
        assert_eq!(
            recover_period(Flow::Block, 0.5 * want, &p, &d).unwrap(),
            None
        );
    }

    #[test]
    fn evolved_at_zero_is_smooth_bitwise() {
        let p = unit(0.05, 0.04);
        let q = QuadratureSpec {
            hermite_order: 24,
            ..Default::default()
        };
        let f = SepGaussFunction::limit_ordering_demo();
        let r = PhaseVector::new(0.2, -0.1, 0.4, 0.3);
        let s = Smoother::new(p, q).unwrap();
        let a = s.smooth(&f, &r).unwrap();
        let b = smooth_evolved(&f, &r, 0.0, &p, &q, Flow::CoherentState).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
    }

    #[test]
    fn commutative_branch_tracks_classical_orbit() {
        let p = unit(1e-6, 0.0);
        let q = QuadratureSpec {
            hermite_order: 6,
            ..Default::default()
        };
        let f = SepGaussFunction::unit_gaussian();
        let r = PhaseVector::new(0.5, -0.3, 0.2, 0.7);
        for t in [0.5, 2.0, 4.0] {
            let v = smooth_evolved(&f, &r, t, &p, &q, Flow::CoherentState)
                .unwrap()
                .value;
            let c = classical_evolved(&f, &r, t, &p, Flow::Block).unwrap();
            assert!((v - c).abs() < 1e-5, "t={t}: {v} vs {c}");
        }
    }

    #[test]
    fn hbar0_evolution_is_frozen() {
        let f = SepGaussFunction::separable([
            GaussFactor::gaussian_plus(1.0),
            GaussFactor::gaussian_plus(2.0),
            GaussFactor::gaussian_plus(1.0),
            GaussFactor::unit_gaussian(),
        ])
        .unwrap();
        let p = unit(0.0, 0.5);
        let r = PhaseVector::new(0.0, 0.0, 0.0, 0.3);
        let v0 = evolved_hbar0(&f, &r, 0.0, &p).unwrap();
        for t in [1.0, 10.0] {
            assert_eq!(evolved_hbar0(&f, &r, t, &p).unwrap(), v0);
        }
        for x1 in [5.0, 50.0] {
            assert_eq!(
                evolved_hbar0(&f, &r.with(Coord::X1, x1), 1.0, &p).unwrap(),
                v0
            );
        }
        // F∞ = 2 exp(-y2²), smeared with variance θ.
        assert_relative_eq!(
            v0,
            2.0 * (-0.09f64 / 2.0).exp() / 2f64.sqrt(),
            max_relative = 1e-15
        );
        let tiny = evolved_hbar0(&f, &r, 3.0, &unit(0.0, 1e-10)).unwrap();
        assert!((tiny - 2.0 * (-0.09f64).exp()).abs() < 1e-9);
        // The demo function has no offset in y1, so its limit vanishes.
        let demo = SepGaussFunction::limit_ordering_demo();
        assert_eq!(evolved_hbar0(&demo, &r, 1.0, &p).unwrap(), 0.0);
        assert_eq!(
            evolved_hbar0(&f, &r, 0.0, &unit(1.0, 0.0)),
            Err(Error::ThetaZero)
        );
    }

    #[test]
    fn cancellation_trend() {
        let p = unit(1e-2, 1.0);
        let sweep = cancellation_sweep(&p, 1.0, &[1e-2, 1e-3, 1e-4, 1e-5]).unwrap();
        for w in sweep.windows(2) {
            assert!(w[1].f_coeff > w[0].f_coeff);
            assert!(w[1].product < 0.2 * w[0].product);
        }
        assert!(sweep.last().unwrap().product < 1e-4);
    }
}
