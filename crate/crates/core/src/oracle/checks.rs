//! Residual checks of the model's algebraic identities against the
//! truncated representation. Each check reports a [`CheckRecord`].

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use super::linalg::{self, vdot, vec_norm, CMat, CVec};
use super::ops::{phase_space_from_a, FockOracle, FockTruncation, HsSuperOp, MAX_WEYL_LEVELS};
use crate::dynamics::{coherent_flow, evolution_matrix, noncommutative_form};
use crate::error::{Error, Result};
use crate::function::PhaseVector;
use crate::mat4::{self, Mat4};
use crate::params::PhysParams;
use crate::quadrature::GaussHermite;
use crate::smoothing::{kernel_widths, KernelVariant};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

pub const COMMUTATOR_TOL: f64 = 1e-10;
pub const MODE_COMMUTATOR_TOL: f64 = 1e-8;
pub const MOMENTUM_TOL: f64 = 1e-12;
pub const GROUND_TOL: f64 = 1e-8;
pub const IDENTITY_TOL: f64 = 1e-10;
pub const UNITARITY_TOL: f64 = 1e-9;
pub const EIGEN_TOL: f64 = 1e-6;
pub const COMPOSE_TOL: f64 = 1e-6;
pub const KERNEL_TOL: f64 = 1e-5;
pub const HAMILTONIAN_TOL: f64 = 1e-8;
pub const EVOLVE_TOL: f64 = 1e-6;
pub const INVARIANCE_TOL: f64 = 1e-9;
pub const RESOLUTION_TOL: f64 = 1e-3;
/// Truncation at which the coherent-state checks are run when the
/// requested one is smaller.
pub const COHERENT_LEVELS: usize = 24;

/// One residual check, as dumped to JSON.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub check_name: String,
    pub params: PhysParams,
    pub n_max: usize,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub details: BTreeMap<String, f64>,
}

impl CheckRecord {
    pub fn new(name: impl Into<String>, o: &FockOracle, residual: f64, tolerance: f64) -> Self {
        CheckRecord {
            check_name: name.into(),
            params: o.params,
            n_max: o.trunc.n_max(),
            residual,
            tolerance,
            passed: residual < tolerance,
            details: BTreeMap::new(),
        }
    }

    pub fn detail(mut self, key: &str, value: f64) -> Self {
        self.details.insert(key.to_string(), value);
        self
    }
}

fn col_residual(o: &FockOracle, op: &HsSuperOp, c: Complex64) -> f64 {
    op.residual_on(c, &o.trunc.low_lying())
}

/// Phase-space and mode commutators on the low-lying subspace.
pub fn commutator_checks(o: &FockOracle) -> Vec<CheckRecord> {
    let (x, a) = (&o.ops, &o.a);
    let (h, th) = (o.params.hbar, o.params.theta);
    let cases: [(&str, &HsSuperOp, &HsSuperOp, Complex64, f64); 11] = [
        ("commutator_x1_x2", &x.x1, &x.x2, I * th, COMMUTATOR_TOL),
        ("commutator_x1_p1", &x.x1, &x.p1, I * h, COMMUTATOR_TOL),
        ("commutator_x2_p2", &x.x2, &x.p2, I * h, COMMUTATOR_TOL),
        ("commutator_x1_p2", &x.x1, &x.p2, ZERO, COMMUTATOR_TOL),
        ("commutator_x2_p1", &x.x2, &x.p1, ZERO, COMMUTATOR_TOL),
        ("commutator_p1_p2", &x.p1, &x.p2, ZERO, MOMENTUM_TOL),
        (
            "commutator_a1_a1dag",
            &a.a1,
            &a.a1_dag,
            ONE,
            MODE_COMMUTATOR_TOL,
        ),
        (
            "commutator_a2_a2dag",
            &a.a2,
            &a.a2_dag,
            ONE,
            MODE_COMMUTATOR_TOL,
        ),
        (
            "commutator_a1_a2dag",
            &a.a1,
            &a.a2_dag,
            ZERO,
            MODE_COMMUTATOR_TOL,
        ),
        (
            "commutator_a2_a1dag",
            &a.a2,
            &a.a1_dag,
            ZERO,
            MODE_COMMUTATOR_TOL,
        ),
        ("commutator_a1_a2", &a.a1, &a.a2, ZERO, COMMUTATOR_TOL),
    ];
    cases
        .iter()
        .map(|(name, p, q, c, tol)| {
            CheckRecord::new(*name, o, col_residual(o, &p.commutator(q), *c), *tol)
        })
        .collect()
}

/// Largest `‖([A_i, A_i†] − 1)|n1, n2⟩‖` over `n1 + n2 = k`, for each
/// total level `k ≤ n_max / 2`: how the mode algebra degrades toward the
/// truncation boundary.
pub fn mode_degradation_profile(o: &FockOracle) -> Result<Vec<(usize, f64)>> {
    let psi0 = o.ground_state()?;
    let c1 = o.a.a1.commutator(&o.a.a1_dag);
    let c2 = o.a.a2.commutator(&o.a.a2_dag);
    let top = o.trunc.n_max() / 2;
    Ok((0..=top)
        .map(|k| {
            let worst = (0..=k)
                .map(|n1| {
                    let v = o.number_state(n1, k - n1, &psi0);
                    let r1 = vec_norm((c1.apply(&v) - &v).view());
                    let r2 = vec_norm((c2.apply(&v) - &v).view());
                    r1.max(r2) / vec_norm(v.view())
                })
                .fold(0.0, f64::max);
            (k, worst)
        })
        .collect())
}

/// Annihilation of the ground state and its normalization identities.
pub fn ground_state_checks(o: &FockOracle) -> Result<Vec<CheckRecord>> {
    let (psi, norm2) = super::ops::ground_state(&o.trunc, &o.derived, &o.params)?;
    let v = psi.flat();
    let d = &o.derived;
    let eb = d.beta.exp();
    let series = eb / (1.0 - (2.0 * d.beta).exp());
    let from_n = d.norm_n * eb * o.params.hbar.powi(2) / o.params.theta;
    let tail = super::ops::ground_state_tail(&o.trunc, d);
    Ok(vec![
        CheckRecord::new(
            "ground_a1",
            o,
            vec_norm(o.a.a1.apply(&v).view()),
            GROUND_TOL,
        ),
        CheckRecord::new(
            "ground_a2",
            o,
            vec_norm(o.a.a2.apply(&v).view()),
            GROUND_TOL,
        ),
        CheckRecord::new(
            "ground_geometric_series",
            o,
            ((norm2 - series) / series).abs(),
            tail.max(1e-14) * 2.0,
        )
        .detail("truncated_sum", norm2)
        .detail("closed_form", series),
        CheckRecord::new(
            "ground_norm_identity",
            o,
            ((from_n - series) / series).abs(),
            IDENTITY_TOL,
        )
        .detail("norm_n", d.norm_n)
        .detail("beta", d.beta),
    ])
}

/// Phase-space operators rebuilt from the mode operators.
pub fn inverse_relation_check(o: &FockOracle) -> CheckRecord {
    let rec = phase_space_from_a(&o.a, &o.derived, &o.params);
    let pairs = [
        (&rec.x1, &o.ops.x1),
        (&rec.x2, &o.ops.x2),
        (&rec.p1, &o.ops.p1),
        (&rec.p2, &o.ops.p2),
    ];
    let worst = pairs
        .iter()
        .map(|(a, b)| linalg::frobenius(&(&a.0 - &b.0)) / linalg::frobenius(&b.0))
        .fold(0.0, f64::max);
    CheckRecord::new("inverse_relations", o, worst, IDENTITY_TOL)
}

/// Unitarity of `W(r)` on the low-lying subspace.
pub fn weyl_unitarity_check(o: &FockOracle, r: &PhaseVector) -> Result<CheckRecord> {
    let w = o.weyl_op(r)?;
    Ok(CheckRecord::new(
        "weyl_unitarity",
        o,
        col_residual(o, &w.adjoint().compose(&w), ONE),
        UNITARITY_TOL,
    ))
}

/// `A_i |z_r⟩ = z_i |z_r⟩`.
pub fn eigen_relation_check(o: &FockOracle, r: &PhaseVector) -> Result<CheckRecord> {
    let psi0 = o.ground_state()?;
    let z = o.coherent_state(r, &psi0);
    let label = o.label_of(r);
    let res = [(&o.a.a1, label[0]), (&o.a.a2, label[1])]
        .iter()
        .map(|(a, zi)| vec_norm((a.apply(&z) - z.mapv(|v| v * zi)).view()))
        .fold(0.0, f64::max);
    Ok(CheckRecord::new(
        "coherent_eigen_relation",
        o,
        res,
        EIGEN_TOL,
    ))
}

/// Composition of two Weyl operators on the ground state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComposeReport {
    /// `c` minimizing `‖W(r)W(r')ψ0 − c W(r+r')ψ0‖`.
    pub measured_phase: Complex64,
    pub residual: f64,
    /// `exp(−(i/2μ²) rᵀσr')` from the commutator of the generators.
    pub commutator_phase: Complex64,
    /// `exp(−i(ℏ+θ)μ²/2 (r, Ωr'))`, built from the standard symplectic
    /// form; reported for comparison only.
    pub symplectic_phase: Complex64,
    pub commutator_phase_error: f64,
    pub symplectic_phase_error: f64,
}

pub fn weyl_compose(o: &FockOracle, r: &PhaseVector, rp: &PhaseVector) -> Result<ComposeReport> {
    let psi0 = o.ground_state()?;
    let lhs = o.coherent_state(r, &o.coherent_state(rp, &psi0));
    let rhs = o.coherent_state(&(*r + *rp), &psi0);
    let phase = vdot(&rhs, &lhs) / vdot(&rhs, &rhs);
    let residual = vec_norm((&lhs - &rhs.mapv(|v| v * phase)).view());
    let (p, mu) = (&o.params, o.derived.mu);
    let form = |m: &Mat4<f64>| {
        let v = mat4::apply(m, rp);
        r.x1 * v.x1 + r.x2 * v.x2 + r.y1 * v.y1 + r.y2 * v.y2
    };
    let commutator_phase = (-I * form(&noncommutative_form(p)) / (2.0 * mu * mu)).exp();
    let symplectic_phase =
        (-I * (p.hbar + p.theta) * mu * mu / 2.0 * form(&mat4::symplectic_form())).exp();
    Ok(ComposeReport {
        measured_phase: phase,
        residual,
        commutator_phase,
        symplectic_phase,
        commutator_phase_error: (phase - commutator_phase).norm(),
        symplectic_phase_error: (phase - symplectic_phase).norm(),
    })
}

pub fn compose_check(o: &FockOracle, r: &PhaseVector, rp: &PhaseVector) -> Result<CheckRecord> {
    let c = weyl_compose(o, r, rp)?;
    Ok(CheckRecord::new(
        "weyl_compose",
        o,
        c.residual.max(c.commutator_phase_error),
        COMPOSE_TOL,
    )
    .detail("phase_re", c.measured_phase.re)
    .detail("phase_im", c.measured_phase.im)
    .detail("symplectic_phase_error", c.symplectic_phase_error))
}

/// One row of the kernel fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelFitRow {
    pub r: PhaseVector,
    pub r_prime: PhaseVector,
    pub oracle: f64,
    pub variant_a: f64,
    pub variant_b: f64,
}

/// Comparison of `|⟨z_r|z_r'⟩|²` against `exp(−E)` for both kernel
/// variants; the variant with the smaller least-squares misfit is selected.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelFitReport {
    pub rows: Vec<KernelFitRow>,
    pub sum_sq_a: f64,
    pub sum_sq_b: f64,
    pub max_rel_a: f64,
    pub max_rel_b: f64,
    pub selected: KernelVariant,
}

impl KernelFitReport {
    pub fn max_rel_selected(&self) -> f64 {
        match self.selected {
            KernelVariant::A => self.max_rel_a,
            KernelVariant::B => self.max_rel_b,
        }
    }
}

/// Uniform sample from the ball `‖r‖ ≤ radius`.
pub fn sample_ball(rng: &mut impl Rng, radius: f64) -> PhaseVector {
    let g: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
    let n = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    let s = radius * rng.random::<f64>().powf(0.25) / n;
    PhaseVector::from_array(g.map(|v| v * s))
}

pub fn kernel_fit(o: &FockOracle, pairs: usize, seed: u64) -> Result<KernelFitReport> {
    let psi0 = o.ground_state()?;
    let wa = kernel_widths(&o.derived, &o.params, KernelVariant::A)?;
    let wb = kernel_widths(&o.derived, &o.params, KernelVariant::B)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<(PhaseVector, PhaseVector)> = (0..pairs)
        .map(|_| (sample_ball(&mut rng, 1.0), sample_ball(&mut rng, 1.0)))
        .collect();
    let rows: Vec<KernelFitRow> = points
        .par_iter()
        .map(|(r, rp)| {
            let u = *rp - *r;
            KernelFitRow {
                r: *r,
                r_prime: *rp,
                oracle: o.overlap(r, rp, &psi0).norm_sqr(),
                variant_a: (-wa.kernel_exponent(&u)).exp(),
                variant_b: (-wb.kernel_exponent(&u)).exp(),
            }
        })
        .collect();
    let stats = |pick: fn(&KernelFitRow) -> f64| {
        rows.iter().fold((0.0, 0.0f64), |(sq, mx), row| {
            let d = pick(row) - row.oracle;
            (sq + d * d, mx.max((d / row.oracle).abs()))
        })
    };
    let (sum_sq_a, max_rel_a) = stats(|r| r.variant_a);
    let (sum_sq_b, max_rel_b) = stats(|r| r.variant_b);
    let selected = if sum_sq_b < sum_sq_a {
        KernelVariant::B
    } else {
        KernelVariant::A
    };
    Ok(KernelFitReport {
        rows,
        sum_sq_a,
        sum_sq_b,
        max_rel_a,
        max_rel_b,
        selected,
    })
}

pub fn kernel_fit_check(o: &FockOracle, pairs: usize, seed: u64) -> Result<CheckRecord> {
    let f = kernel_fit(o, pairs, seed)?;
    Ok(
        CheckRecord::new("kernel_fit", o, f.max_rel_selected(), KERNEL_TOL)
            .detail("max_rel_a", f.max_rel_a)
            .detail("max_rel_b", f.max_rel_b)
            .detail("selected_b", (f.selected == KernelVariant::B) as u8 as f64),
    )
}

/// Matrix element of the coherent-state resolution of identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResolutionElement {
    pub value: Complex64,
    pub expected: f64,
    pub residual: f64,
    /// Change of the value when the rule order is raised by one.
    pub quadrature_estimate: f64,
    /// The claimed `J = ℏ²/4μ⁴` and the determinant of the label map.
    pub j_claimed: f64,
    pub j_numeric: f64,
}

/// `(J/π²) ∫ d⁴r ⟨n|z_r⟩⟨z_r|m⟩` for mode-number states `n = (n1, n2)`,
/// `m = (m1, m2)`. The integral is taken in the label variables `ζ = Ĵ r`,
/// where the integrand is a Gaussian times a polynomial of degree
/// `n1 + n2 + m1 + m2` and Gauss–Hermite of `order` points per axis is exact
/// once `2·order > n1 + n2 + m1 + m2 + 1`.
pub fn resolution_element(
    o: &FockOracle,
    n: (usize, usize),
    m: (usize, usize),
    order: usize,
) -> Result<ResolutionElement> {
    if n.0.max(n.1).max(m.0).max(m.1) > 3 {
        return Err(Error::param("n", "mode numbers must be <= 3"));
    }
    let psi0 = o.ground_state()?;
    let bra = o.number_state(n.0, n.1, &psi0);
    let ket = o.number_state(m.0, m.1, &psi0);
    let inv =
        mat4::inverse(&o.label).ok_or_else(|| Error::param("label", "label map is singular"))?;
    let integrate = |k: usize| -> Result<Complex64> {
        let terms: Vec<Complex64> = tensor_nodes(k)?
            .par_iter()
            .map(|(w, zeta)| {
                let r = mat4::apply(&inv, &PhaseVector::from_array(*zeta));
                let z = o.coherent_state(&r, &psi0);
                let weight = w * zeta.iter().map(|v| v * v).sum::<f64>().exp();
                vdot(&bra, &z) * vdot(&z, &ket) * weight
            })
            .collect();
        Ok(terms.iter().sum::<Complex64>() / std::f64::consts::PI.powi(2))
    };
    let value = integrate(order)?;
    let higher = integrate(order + 1)?;
    let expected = if n == m { 1.0 } else { 0.0 };
    let mu = o.derived.mu;
    Ok(ResolutionElement {
        value,
        expected,
        residual: (value - expected).norm(),
        quadrature_estimate: (value - higher).norm(),
        j_claimed: o.params.hbar.powi(2) / (4.0 * mu.powi(4)),
        j_numeric: mat4::det(&o.label).abs(),
    })
}

/// Gauss–Hermite nodes and weights of the `order⁴` tensor rule.
fn tensor_nodes(order: usize) -> Result<Vec<(f64, [f64; 4])>> {
    let rule = GaussHermite::new(order)?;
    let (x, w) = (&rule.nodes, &rule.weights);
    let mut nodes = Vec::with_capacity(order.pow(4));
    for i in 0..order {
        for j in 0..order {
            for l in 0..order {
                for q in 0..order {
                    nodes.push((w[i] * w[j] * w[l] * w[q], [x[i], x[j], x[l], x[q]]));
                }
            }
        }
    }
    Ok(nodes)
}

/// Matrix `M[a][b] = (J/π²) ∫ d⁴r ⟨s_a|z_r⟩⟨z_r|s_b⟩` over the mode-number
/// states `s = (n1, n2)` with `n1, n2 <= max_level`, ordered `n1`-major.
/// Coherent states are computed once per node and shared by all entries.
pub fn resolution_matrix(o: &FockOracle, max_level: usize, order: usize) -> Result<CMat> {
    if max_level > 3 {
        return Err(Error::param("max_level", "mode numbers must be <= 3"));
    }
    let psi0 = o.ground_state()?;
    let states: Vec<CVec> = (0..=max_level)
        .flat_map(|n1| (0..=max_level).map(move |n2| (n1, n2)))
        .map(|(n1, n2)| o.number_state(n1, n2, &psi0))
        .collect();
    let inv =
        mat4::inverse(&o.label).ok_or_else(|| Error::param("label", "label map is singular"))?;
    let k = states.len();
    let nodes = tensor_nodes(order)?;
    let parts: Vec<CMat> = nodes
        .par_iter()
        .map(|(w, zeta)| {
            let r = mat4::apply(&inv, &PhaseVector::from_array(*zeta));
            let z = o.coherent_state(&r, &psi0);
            let weight = w * zeta.iter().map(|v| v * v).sum::<f64>().exp();
            let proj: Vec<Complex64> = states.iter().map(|s| vdot(s, &z)).collect();
            CMat::from_shape_fn((k, k), |(a, b)| proj[a] * proj[b].conj() * weight)
        })
        .collect();
    let mut total = CMat::zeros((k, k));
    for p in &parts {
        total += p;
    }
    Ok(total.mapv(|v| v / std::f64::consts::PI.powi(2)))
}

/// Hamiltonian in its two forms, and its spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HamiltonianReport {
    /// `‖(H − H_normal) restricted‖ / ‖H restricted‖` on the low-lying subspace.
    pub operator_residual: f64,
    pub ground_energy: Option<f64>,
    pub ground_energy_expected: f64,
    /// `⟨1,0|H|1,0⟩ − E0` and `⟨0,1|H|0,1⟩ − E0`.
    pub gaps: Option<[f64; 2]>,
    /// `λ±/m`.
    pub gaps_expected: [f64; 2],
    /// Gaps from `[H, A_i†] = g_i A_i†` on the low-lying subspace; needs
    /// no ground state, so it stays available as `θ → 0`.
    pub ladder_gaps: [f64; 2],
}

pub fn hamiltonian_report(o: &FockOracle) -> HamiltonianReport {
    let h = o.hamiltonian();
    let hn = o.hamiltonian_normal_form();
    let idx = o.trunc.low_lying();
    let restricted = |m: &CMat| linalg::norm_2(&linalg::select_columns(m, &idx));
    let operator_residual = restricted(&(&h.0 - &hn.0)) / restricted(&h.0);
    let (d, m) = (&o.derived, o.params.mass);
    let ladder = |ad: &HsSuperOp| {
        let c = linalg::select_columns(&h.commutator(ad).0, &idx);
        let a = linalg::select_columns(&ad.0, &idx);
        let num: Complex64 = a.iter().zip(c.iter()).map(|(x, y)| x.conj() * y).sum();
        num.re / a.iter().map(|v| v.norm_sqr()).sum::<f64>()
    };
    let (ground_energy, gaps) = match o.ground_state() {
        Ok(psi0) => {
            let energy = |v: &CVec| (vdot(v, &h.apply(v)) / vdot(v, v)).re;
            let e0 = energy(&psi0);
            let g1 = energy(&o.number_state(1, 0, &psi0)) - e0;
            let g2 = energy(&o.number_state(0, 1, &psi0)) - e0;
            (Some(e0), Some([g1, g2]))
        }
        Err(_) => (None, None),
    };
    HamiltonianReport {
        operator_residual,
        ground_energy,
        ground_energy_expected: (d.lambda_plus + d.lambda_minus) / (2.0 * m),
        gaps,
        gaps_expected: [d.lambda_plus / m, d.lambda_minus / m],
        ladder_gaps: [ladder(&o.a.a1_dag), ladder(&o.a.a2_dag)],
    }
}

pub fn hamiltonian_checks(o: &FockOracle) -> Vec<CheckRecord> {
    let rep = hamiltonian_report(o);
    let mut out = vec![CheckRecord::new(
        "hamiltonian_forms",
        o,
        rep.operator_residual,
        HAMILTONIAN_TOL,
    )];
    if let Some(e0) = rep.ground_energy {
        let rel = |a: f64, b: f64| ((a - b) / b).abs();
        out.push(
            CheckRecord::new(
                "ground_energy",
                o,
                rel(e0, rep.ground_energy_expected),
                HAMILTONIAN_TOL,
            )
            .detail("energy", e0),
        );
    }
    let rel = |a: f64, b: f64| ((a - b) / b).abs();
    let gap_res = rel(rep.ladder_gaps[0], rep.gaps_expected[0])
        .max(rel(rep.ladder_gaps[1], rep.gaps_expected[1]));
    let mut gaps = CheckRecord::new("excitation_gaps", o, gap_res, HAMILTONIAN_TOL)
        .detail("gap_plus", rep.ladder_gaps[0])
        .detail("gap_minus", rep.ladder_gaps[1]);
    if let Some(g) = rep.gaps {
        gaps = gaps
            .detail("number_state_gap_plus", g[0])
            .detail("number_state_gap_minus", g[1]);
    }
    out.push(gaps);
    out
}

/// Heisenberg evolution of a Weyl operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvolveReport {
    /// `‖U_t† W(r) U_t − W(C_t r)‖` on the test vectors, `C_t` the
    /// coherent-state flow.
    pub flow_residual: f64,
    /// The same with the block matrix `A_{−t}` in place of `C_t`.
    pub block_residual: f64,
    /// `‖U_t ψ0 − ⟨ψ0, U_t ψ0⟩ ψ0‖`.
    pub ground_invariance: f64,
    /// `‖U_t† U_t − 1‖` on the low-lying subspace.
    pub unitarity: f64,
}

/// Evolution operator `U_t = exp(−i t H / μ)`.
pub fn evolution_operator(o: &FockOracle, t: f64) -> Result<HsSuperOp> {
    if o.trunc.n_max() > MAX_WEYL_LEVELS {
        return Err(Error::param(
            "n_max",
            format!("evolution operator needs n_max <= {MAX_WEYL_LEVELS}"),
        ));
    }
    let c = -I * t / o.derived.mu;
    Ok(HsSuperOp(linalg::expm(&o.hamiltonian().0.mapv(|v| v * c))))
}

/// Residuals are measured on the ground state and on the coherent states
/// `|z_s⟩` for the given probe labels `s`.
pub fn evolve_report(
    o: &FockOracle,
    r: &PhaseVector,
    t: f64,
    probes: &[PhaseVector],
) -> Result<EvolveReport> {
    let psi0 = o.ground_state()?;
    let u = evolution_operator(o, t)?;
    let ud = u.adjoint();
    let exact = coherent_flow(t, &o.params, &o.derived)?.apply(r);
    let block = evolution_matrix(-t, &o.derived).apply(r);
    let mut vecs = vec![psi0.clone()];
    vecs.extend(probes.iter().map(|s| o.coherent_state(s, &psi0)));
    let (mut flow_residual, mut block_residual) = (0.0f64, 0.0f64);
    for v in &vecs {
        let heis = ud.apply(&o.coherent_state(r, &u.apply(v)));
        flow_residual = flow_residual.max(vec_norm((&heis - &o.coherent_state(&exact, v)).view()));
        block_residual =
            block_residual.max(vec_norm((&heis - &o.coherent_state(&block, v)).view()));
    }
    let evolved = u.apply(&psi0);
    let overlap = vdot(&psi0, &evolved);
    let ground_invariance = vec_norm((&evolved - &psi0.mapv(|v| v * overlap)).view());
    let unitarity = ud.compose(&u).residual_on(ONE, &o.trunc.low_lying());
    Ok(EvolveReport {
        flow_residual,
        block_residual,
        ground_invariance,
        unitarity,
    })
}

pub fn evolve_checks(
    o: &FockOracle,
    r: &PhaseVector,
    t: f64,
    probes: &[PhaseVector],
) -> Result<Vec<CheckRecord>> {
    let rep = evolve_report(o, r, t, probes)?;
    Ok(vec![
        CheckRecord::new("evolve_weyl", o, rep.flow_residual, EVOLVE_TOL)
            .detail("block_residual", rep.block_residual),
        CheckRecord::new(
            "evolve_ground_invariance",
            o,
            rep.ground_invariance,
            INVARIANCE_TOL,
        ),
        CheckRecord::new("evolve_unitarity", o, rep.unitarity, UNITARITY_TOL),
    ])
}

pub fn resolution_checks(o: &FockOracle) -> Result<Vec<CheckRecord>> {
    let cases = [
        ((0, 0), (0, 0)),
        ((1, 0), (0, 0)),
        ((1, 1), (1, 1)),
        ((2, 1), (1, 2)),
        ((3, 0), (3, 0)),
    ];
    cases
        .iter()
        .map(|&(n, m)| {
            let e = resolution_element(o, n, m, 4)?;
            Ok(CheckRecord::new(
                format!("resolution_{}{}_{}{}", n.0, n.1, m.0, m.1),
                o,
                e.residual,
                RESOLUTION_TOL,
            )
            .detail("re", e.value.re)
            .detail("im", e.value.im)
            .detail("quadrature_estimate", e.quadrature_estimate)
            .detail("j_claimed", e.j_claimed)
            .detail("j_numeric", e.j_numeric))
        })
        .collect()
}

/// Every check at one parameter point. Algebraic checks run at `n_max`;
/// the coherent-state checks (eigen-relation, composition, kernel fit,
/// resolution, evolution) at `max(n_max, COHERENT_LEVELS)`, capped by the
/// dense-exponential limit.
pub fn run_suite(params: PhysParams, n_max: usize, seed: u64) -> Result<Vec<CheckRecord>> {
    let base = FockOracle::new(FockTruncation::new(n_max)?, params)?;
    base.ground_state()?;
    let wide_n = n_max.clamp(COHERENT_LEVELS, MAX_WEYL_LEVELS);
    let wide = if wide_n == n_max {
        base.clone()
    } else {
        FockOracle::new(FockTruncation::new(wide_n)?, params)?
    };
    let r = PhaseVector::new(0.3, -0.2, 0.25, 0.1);
    let rp = PhaseVector::new(-0.15, 0.35, 0.05, -0.3);
    let mut out = commutator_checks(&base);
    out.extend(ground_state_checks(&base)?);
    out.push(inverse_relation_check(&base));
    out.extend(hamiltonian_checks(&base));
    out.push(weyl_unitarity_check(&base, &r)?);
    out.push(eigen_relation_check(&wide, &r)?);
    out.push(compose_check(&wide, &r, &rp)?);
    out.push(kernel_fit_check(&wide, 100, seed)?);
    out.extend(resolution_checks(&wide)?);
    out.extend(evolve_checks(&wide, &r, 0.7, &[rp])?);
    Ok(out)
}
