//! The composed de-quantize∘quantize map `F -> F_{hbar,theta}` and its
//! limit branches.
//!
//! For `hbar > 0` the map is a unit-mass Gaussian convolution
//!
//! ```text
//! F_{hbar,theta}(r) = π⁻² ∫ d⁴w exp(-|w|²) F(r + h(w)),
//! h(w) = (f(w1,w2), f(w3,w4), g(w3,w4), -g(w1,w2)),
//! ```
//!
//! with `f`, `g` linear and their coefficients held in [`KernelWidths`].
//! It is evaluated by tensor Gauss–Hermite quadrature, by Monte Carlo, and
//! exactly on the separable Gaussian family.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::{Coord, GaussFactor, PhaseVector, SepGaussFunction};
use crate::mat4::{self, Mat4};
use crate::params::{DerivedParams, PhysParams};
use crate::quadrature::{tensor_integrate_4d, GaussHermite, MAX_ORDER, MIN_ORDER};
use crate::scalar::{pairwise_sum, Scalar};

/// Which set of constants builds the kernel coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum KernelVariant {
    /// `f` carries `(4hbar² + m²ω²θ²)^{1/4}`, `g` carries it over
    /// `sqrt(4hbar² + 2m²ω²θ²)`. Agrees with the Fock-space oracle.
    #[default]
    A,
    /// Every radicand replaced by `4hbar² + 2m²ω²θ²`.
    B,
}

impl KernelVariant {
    pub const ALL: [KernelVariant; 2] = [KernelVariant::A, KernelVariant::B];
}

impl std::fmt::Display for KernelVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            KernelVariant::A => "A",
            KernelVariant::B => "B",
        })
    }
}

/// Coefficients of `f(x, y) = f_plus x + f_minus y` (length) and
/// `g(x, y) = g_plus x + g_minus y` (momentum).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelWidths<T = f64> {
    pub f_coeff_plus: T,
    pub f_coeff_minus: T,
    pub g_coeff_plus: T,
    pub g_coeff_minus: T,
}

/// 2×2 covariance `[[var_a, cov], [cov, var_b]]` of a coordinate pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairCovariance<T> {
    pub var_a: T,
    pub var_b: T,
    pub cov: T,
}

impl<T: Scalar> PairCovariance<T> {
    fn det(&self) -> T {
        self.var_a * self.var_b - self.cov * self.cov
    }
}

impl<T: Scalar> KernelWidths<T> {
    /// Displacement `h(w)`.
    #[inline]
    pub fn displacement(&self, w: [T; 4]) -> PhaseVector<T> {
        let f = |a: T, b: T| self.f_coeff_plus * a + self.f_coeff_minus * b;
        let g = |a: T, b: T| self.g_coeff_plus * a + self.g_coeff_minus * b;
        PhaseVector::new(f(w[0], w[1]), f(w[2], w[3]), g(w[2], w[3]), -g(w[0], w[1]))
    }

    /// Covariance of `h(w)` under the density `π⁻² exp(-|w|²)`, for the
    /// coupled pairs `(x1, y2)` and `(x2, y1)`.
    pub fn covariances(&self) -> (PairCovariance<T>, PairCovariance<T>) {
        let half = T::lit(0.5);
        let (fp, fm, gp, gm) = (
            self.f_coeff_plus,
            self.f_coeff_minus,
            self.g_coeff_plus,
            self.g_coeff_minus,
        );
        let var_x = half * (fp * fp + fm * fm);
        let var_y = half * (gp * gp + gm * gm);
        let cross = half * (fp * gp + fm * gm);
        (
            PairCovariance {
                var_a: var_x,
                var_b: var_y,
                cov: -cross,
            },
            PairCovariance {
                var_a: var_x,
                var_b: var_y,
                cov: cross,
            },
        )
    }

    /// Exponent `E(u)` of the kernel `exp(-E(r' - r))`: the quadratic form
    /// `u^T (2 Σ)^{-1} u` with `Σ` the covariance of `h`.
    pub fn kernel_exponent(&self, u: &PhaseVector<T>) -> T {
        let (c14, c23) = self.covariances();
        let form = |c: &PairCovariance<T>, a: T, b: T| {
            (c.var_b * a * a - T::lit(2.0) * c.cov * a * b + c.var_a * b * b)
                / (T::lit(2.0) * c.det())
        };
        form(&c14, u.x1, u.y2) + form(&c23, u.x2, u.y1)
    }
}

/// Kernel coefficients for the given constants variant. Requires `hbar > 0`.
pub fn kernel_widths<T: Scalar>(
    d: &DerivedParams<T>,
    p: &PhysParams<T>,
    variant: KernelVariant,
) -> Result<KernelWidths<T>> {
    if !(p.hbar > T::zero()) {
        return Err(Error::HbarZero);
    }
    let a = p.m_omega();
    let a_th = a * p.theta;
    let four_h2 = T::lit(4.0) * p.hbar * p.hbar;
    let s = (four_h2 + a_th * a_th).sqrt();
    let s2 = (four_h2 + T::lit(2.0) * a_th * a_th).sqrt();
    let root = match variant {
        KernelVariant::A => s.sqrt(),
        KernelVariant::B => s2.sqrt(),
    };
    let f_base = d.mu * root / (T::lit(2.0) * a.sqrt() * p.hbar);
    let g_base = d.mu * a.sqrt() * root / s2;
    let (sp, sm) = (d.gamma_plus.sqrt(), d.gamma_minus.sqrt());
    Ok(KernelWidths {
        f_coeff_plus: f_base / sp,
        f_coeff_minus: f_base / sm,
        g_coeff_plus: g_base / sp,
        g_coeff_minus: -g_base / sm,
    })
}

/// Quadrature and sampling controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// Gauss–Hermite points per axis; the error estimate uses half of it.
    pub hermite_order: usize,
    pub mc_samples: usize,
    pub rng_seed: u64,
    pub rel_tol: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            hermite_order: 20,
            mc_samples: 1_000_000,
            rng_seed: 0x5eed,
            rel_tol: 1e-6,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(MIN_ORDER..=MAX_ORDER).contains(&self.hermite_order) {
            return Err(Error::InvalidQuadrature(format!(
                "hermite_order must be in [{MIN_ORDER}, {MAX_ORDER}], got {}",
                self.hermite_order
            )));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::InvalidQuadrature(format!(
                "rel_tol must be > 0, got {}",
                self.rel_tol
            )));
        }
        Ok(())
    }

    fn rules(&self) -> Result<(GaussHermite, GaussHermite)> {
        self.validate()?;
        let coarse = (self.hermite_order / 2).max(1);
        Ok((
            GaussHermite::new(self.hermite_order)?,
            GaussHermite::new(coarse)?,
        ))
    }
}

/// A quadrature value with the `|Q_n - Q_{n/2}|` error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate<T = f64> {
    pub value: T,
    pub error_estimate: T,
}

/// A Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate<T = f64> {
    pub value: T,
    pub std_error: T,
    pub samples: usize,
}

/// Accepted error estimate for `value`: `rel_tol·|value|` plus a rounding
/// floor relative to `sup |F|`.
pub fn convergence_tolerance<T: Scalar>(f: &SepGaussFunction<T>, value: T, rel_tol: f64) -> T {
    let scale = f.sup_abs().unwrap_or(value.abs());
    T::lit(rel_tol) * value.abs() + T::lit(16.0) * T::epsilon() * scale
}

fn check_convergence<T: Scalar>(
    f: &SepGaussFunction<T>,
    fine: T,
    coarse: T,
    rel_tol: f64,
) -> Result<Estimate<T>> {
    let est = (fine - coarse).abs();
    let tol = convergence_tolerance(f, fine, rel_tol);
    if !(est <= tol) {
        return Err(Error::NotConverged {
            value: fine.as_f64(),
            estimate: est.as_f64(),
            tolerance: tol.as_f64(),
        });
    }
    Ok(Estimate {
        value: fine,
        error_estimate: est,
    })
}

/// Reusable evaluator for one parameter point: holds the kernel and both
/// Gauss–Hermite rules.
#[derive(Debug, Clone)]
pub struct Smoother<T: Scalar = f64> {
    params: PhysParams<T>,
    derived: DerivedParams<T>,
    widths: KernelWidths<T>,
    variant: KernelVariant,
    spec: QuadratureSpec,
    fine: GaussHermite,
    coarse: GaussHermite,
}

impl<T: Scalar> Smoother<T> {
    pub fn new(params: PhysParams<T>, spec: QuadratureSpec) -> Result<Self> {
        Self::with_variant(params, spec, KernelVariant::default())
    }

    pub fn with_variant(
        params: PhysParams<T>,
        spec: QuadratureSpec,
        variant: KernelVariant,
    ) -> Result<Self> {
        let derived = params.derive()?;
        let widths = kernel_widths(&derived, &params, variant)?;
        let (fine, coarse) = spec.rules()?;
        Ok(Smoother {
            params,
            derived,
            widths,
            variant,
            spec,
            fine,
            coarse,
        })
    }

    pub fn params(&self) -> &PhysParams<T> {
        &self.params
    }

    pub fn derived(&self) -> &DerivedParams<T> {
        &self.derived
    }

    pub fn widths(&self) -> &KernelWidths<T> {
        &self.widths
    }

    pub fn variant(&self) -> KernelVariant {
        self.variant
    }

    pub fn spec(&self) -> &QuadratureSpec {
        &self.spec
    }

    fn quadrature(
        &self,
        rule: &GaussHermite,
        f: &SepGaussFunction<T>,
        r: &PhaseVector<T>,
        map: Option<&Mat4<T>>,
    ) -> T {
        let inv_pi2 = (T::PI() * T::PI()).recip();
        let total = tensor_integrate_4d(rule, |w| {
            let arg = *r + self.widths.displacement(w);
            match map {
                None => f.evaluate(&arg),
                Some(m) => f.evaluate(&mat4::apply(m, &arg)),
            }
        });
        total * inv_pi2
    }

    /// The same tensor rule for a separable `F` without a map: `h` couples
    /// `(x1, y2)` through `(w1, w2)` and `(x2, y1)` through `(w3, w4)`, so the
    /// 4-D sum factorizes into two 2-D sums.
    fn separable_quadrature(
        &self,
        rule: &GaussHermite,
        fs: &[GaussFactor<T>; 4],
        r: &PhaseVector<T>,
    ) -> T {
        let kw = &self.widths;
        let pair = |fa: &GaussFactor<T>, xa: T, fb: &GaussFactor<T>, xb: T, sign_b: T| {
            let mut terms = Vec::with_capacity(rule.len() * rule.len());
            for (&ui, &wi) in rule.nodes.iter().zip(&rule.weights) {
                for (&uj, &wj) in rule.nodes.iter().zip(&rule.weights) {
                    let (ui, uj) = (T::lit(ui), T::lit(uj));
                    let dx = kw.f_coeff_plus * ui + kw.f_coeff_minus * uj;
                    let dy = kw.g_coeff_plus * ui + kw.g_coeff_minus * uj;
                    terms.push(T::lit(wi * wj) * fa.eval(xa + dx) * fb.eval(xb + sign_b * dy));
                }
            }
            pairwise_sum(&terms) / T::PI()
        };
        let block_a = pair(
            &fs[Coord::X1.index()],
            r.x1,
            &fs[Coord::Y2.index()],
            r.y2,
            -T::one(),
        );
        let block_b = pair(
            &fs[Coord::X2.index()],
            r.x2,
            &fs[Coord::Y1.index()],
            r.y1,
            T::one(),
        );
        block_a * block_b
    }

    /// Shared path for the static and evolved maps: `map = None` evaluates
    /// `F(r + h(w))`, `Some(M)` evaluates `F(M (r + h(w)))`.
    pub(crate) fn integrate(
        &self,
        f: &SepGaussFunction<T>,
        r: &PhaseVector<T>,
        map: Option<&Mat4<T>>,
    ) -> Result<Estimate<T>> {
        let (fine, coarse) = match (f.factors(), map) {
            (Some(fs), None) => (
                self.separable_quadrature(&self.fine, fs, r),
                self.separable_quadrature(&self.coarse, fs, r),
            ),
            _ => (
                self.quadrature(&self.fine, f, r, map),
                self.quadrature(&self.coarse, f, r, map),
            ),
        };
        check_convergence(f, fine, coarse, self.spec.rel_tol)
    }

    pub fn smooth(&self, f: &SepGaussFunction<T>, r: &PhaseVector<T>) -> Result<Estimate<T>> {
        self.integrate(f, r, None)
    }

    pub fn closed_form(&self, f: &SepGaussFunction<T>, r: &PhaseVector<T>) -> Result<T> {
        let factors = f.require_factors("smooth_closed_form")?;
        let (c14, c23) = self.widths.covariances();
        let block_a = pair_expectation(
            &factors[Coord::X1.index()],
            r.x1,
            &factors[Coord::Y2.index()],
            r.y2,
            &c14,
        );
        let block_b = pair_expectation(
            &factors[Coord::X2.index()],
            r.x2,
            &factors[Coord::Y1.index()],
            r.y1,
            &c23,
        );
        Ok(block_a * block_b)
    }

    /// Monte Carlo estimate over `w ~ N(0, I/2)`.
    ///
    /// Samples are drawn in fixed blocks, block `k` from ChaCha8 stream `k`
    /// of `rng_seed`, so the estimate is bitwise reproducible and
    /// independent of the thread count.
    pub fn smooth_mc(&self, f: &SepGaussFunction<T>, r: &PhaseVector<T>) -> Result<McEstimate<T>> {
        const BLOCK: usize = 4096;
        let n = self.spec.mc_samples;
        if n < 1000 {
            return Err(Error::InvalidQuadrature(format!(
                "mc_samples must be >= 1000, got {n}"
            )));
        }
        let scale = std::f64::consts::FRAC_1_SQRT_2;
        let values: Vec<T> = (0..n.div_ceil(BLOCK))
            .into_par_iter()
            .flat_map_iter(|block| {
                let mut rng = ChaCha8Rng::seed_from_u64(self.spec.rng_seed);
                rng.set_stream(block as u64);
                let len = BLOCK.min(n - block * BLOCK);
                (0..len)
                    .map(|_| {
                        let mut w = [T::zero(); 4];
                        for wi in &mut w {
                            let z: f64 = rng.sample(StandardNormal);
                            *wi = T::lit(z * scale);
                        }
                        f.evaluate(&(*r + self.widths.displacement(w)))
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
        let count = T::from_usize(n).expect("sample count fits scalar");
        let mean = pairwise_sum(&values) / count;
        let sq: Vec<T> = values.iter().map(|&v| (v - mean) * (v - mean)).collect();
        let var = pairwise_sum(&sq) / (count - T::one());
        Ok(McEstimate {
            value: mean,
            std_error: (var / count).sqrt(),
            samples: n,
        })
    }
}

/// `E[φa(xa + ha) φb(xb + hb)]` for `(ha, hb)` centred Gaussian with
/// covariance `c` and `φ(u) = A exp(-(u-b)²/s²) + C`.
fn pair_expectation<T: Scalar>(
    fa: &GaussFactor<T>,
    xa: T,
    fb: &GaussFactor<T>,
    xb: T,
    c: &PairCovariance<T>,
) -> T {
    let two = T::lit(2.0);
    let single = |f: &GaussFactor<T>, x: T, var: T| {
        let s2 = f.width * f.width;
        let den = s2 + two * var;
        let m = x - f.center;
        f.width / den.sqrt() * (-m * m / den).exp()
    };
    let mut total = fa.offset * fb.offset;
    if !fa.is_constant() {
        total = total + fa.amplitude * fb.offset * single(fa, xa, c.var_a);
    }
    if !fb.is_constant() {
        total = total + fa.offset * fb.amplitude * single(fb, xb, c.var_b);
    }
    if !fa.is_constant() && !fb.is_constant() {
        // S = diag(sa², sb²) + 2C; E = sa sb / sqrt(det S) exp(-m^T S^{-1} m).
        let s11 = fa.width * fa.width + two * c.var_a;
        let s22 = fb.width * fb.width + two * c.var_b;
        let s12 = two * c.cov;
        let det = s11 * s22 - s12 * s12;
        let (ma, mb) = (xa - fa.center, xb - fb.center);
        let quad = (s22 * ma * ma - two * s12 * ma * mb + s11 * mb * mb) / det;
        total =
            total + fa.amplitude * fb.amplitude * fa.width * fb.width / det.sqrt() * (-quad).exp();
    }
    total
}

/// `F_{hbar,theta}(r)` by tensor Gauss–Hermite quadrature (kernel variant A).
pub fn smooth<T: Scalar>(
    f: &SepGaussFunction<T>,
    r: &PhaseVector<T>,
    p: &PhysParams<T>,
    q: &QuadratureSpec,
) -> Result<Estimate<T>> {
    Smoother::new(*p, *q)?.smooth(f, r)
}

/// Exact `F_{hbar,theta}(r)` on the separable family (kernel variant A).
pub fn smooth_closed_form<T: Scalar>(
    f: &SepGaussFunction<T>,
    r: &PhaseVector<T>,
    p: &PhysParams<T>,
) -> Result<T> {
    let d = p.derive()?;
    let widths = kernel_widths(&d, p, KernelVariant::A)?;
    let factors = f.require_factors("smooth_closed_form")?;
    let (c14, c23) = widths.covariances();
    Ok(pair_expectation(&factors[0], r.x1, &factors[3], r.y2, &c14)
        * pair_expectation(&factors[1], r.x2, &factors[2], r.y1, &c23))
}

/// Monte Carlo estimate of `F_{hbar,theta}(r)` (kernel variant A).
pub fn smooth_mc<T: Scalar>(
    f: &SepGaussFunction<T>,
    r: &PhaseVector<T>,
    p: &PhysParams<T>,
    q: &QuadratureSpec,
) -> Result<McEstimate<T>> {
    Smoother::new(*p, *q)?.smooth_mc(f, r)
}

/// Commutative-configuration branch `theta = 0`: independent Gaussian
/// smearing with variance `hbar/(m omega)` in positions and `hbar m omega`
/// in momenta. `p.theta` is ignored.
pub fn smooth_theta0<T: Scalar>(
    f: &SepGaussFunction<T>,
    r: &PhaseVector<T>,
    p: &PhysParams<T>,
    q: &QuadratureSpec,
) -> Result<Estimate<T>> {
    if !(p.hbar > T::zero()) {
        return Err(Error::HbarZero);
    }
    let (fine, coarse) = q.rules()?;
    let two = T::lit(2.0);
    let a = p.m_omega();
    let sx = (two * p.hbar / a).sqrt();
    let sy = (two * p.hbar * a).sqrt();
    let eval = |rule: &GaussHermite| match f.factors() {
        // Independent axes: the tensor rule is a product of 1-D rules.
        Some(fs) => {
            let scales = [sx, sx, sy, sy];
            let coords = r.to_array();
            (0..4)
                .map(|k| {
                    rule.integrate(|u: T| fs[k].eval(coords[k] + scales[k] * u)) / T::PI().sqrt()
                })
                .fold(T::one(), |acc, v| acc * v)
        }
        None => {
            let total = tensor_integrate_4d(rule, |u| {
                f.evaluate(&PhaseVector::new(
                    r.x1 + sx * u[0],
                    r.x2 + sx * u[1],
                    r.y1 + sy * u[2],
                    r.y2 + sy * u[3],
                ))
            });
            total / (T::PI() * T::PI())
        }
    };
    check_convergence(f, eval(&fine), eval(&coarse), q.rel_tol)
}

/// Gaussian smearing of a single factor by `u -> u + sigma·sqrt(2)·v`,
/// `v ~ exp(-v²)/sqrt(π)`, i.e. variance `sigma²`.
pub(crate) fn smear_factor<T: Scalar>(f: &GaussFactor<T>, u: T, variance: T) -> T {
    if f.is_constant() {
        return f.offset;
    }
    let den = f.width * f.width + T::lit(2.0) * variance;
    let m = u - f.center;
    f.amplitude * f.width / den.sqrt() * (-m * m / den).exp() + f.offset
}

/// Quantum-first branch `hbar -> 0` at fixed `theta > 0`:
/// `π⁻¹ ∫ d²v exp(-|v|²) F∞(y1 + mω sqrt(2θ) v1, y2 + mω sqrt(2θ) v2)`
/// with `F∞` the limit over `x1, x2 -> +infinity`. Depends only on
/// `(y1, y2)`.
pub fn smooth_hbar0<T: Scalar>(
    f: &SepGaussFunction<T>,
    r: &PhaseVector<T>,
    p: &PhysParams<T>,
) -> Result<T> {
    if !(p.theta > T::zero()) {
        return Err(Error::ThetaZero);
    }
    let lim = f
        .f_infinity(&[Coord::X1, Coord::X2])
        .map_err(|_| Error::CallableNotSupported { op: "smooth_hbar0" })?;
    let factors = lim.factors().expect("separable after f_infinity");
    let a = p.m_omega();
    let variance = a * a * p.theta;
    Ok(factors[0].offset
        * factors[1].offset
        * smear_factor(&factors[2], r.y1, variance)
        * smear_factor(&factors[3], r.y2, variance))
}
