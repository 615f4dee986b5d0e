//! Truncated configuration Fock space, the Hilbert–Schmidt representation
//! and the operators built on it.
//!
//! An HS vector `ψ` (an `n × n` matrix) is stored row-major as a vector of
//! length `n²`; left and right multiplication become `kron(a, I)` and
//! `kron(I, aᵀ)`.

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::linalg::{self, adjoint, expm, expm_action, kron, CMat, CVec, Csr};
use crate::error::{Error, Result};
use crate::function::PhaseVector;
use crate::mat4::{self, Mat4};
use crate::params::{coherent_label_matrix, DerivedParams, PhysParams};

pub const MIN_LEVELS: usize = 4;
pub const MAX_LEVELS: usize = 64;
/// Largest truncation for which dense superoperators are assembled
/// (`n_max⁴` complex entries each).
pub const MAX_SUPEROP_LEVELS: usize = 32;
/// Largest truncation for dense superoperator exponentials.
pub const MAX_WEYL_LEVELS: usize = 24;
/// Discarded ground-state mass `e^{2 β n_max}` must stay below this.
pub const TAIL_LIMIT: f64 = 1e-8;
/// Series tolerance for exponential actions on vectors.
const ACTION_TOL: f64 = 1e-16;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Number of retained configuration Fock levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FockTruncation {
    n_max: usize,
}

impl FockTruncation {
    pub fn new(n_max: usize) -> Result<Self> {
        if !(MIN_LEVELS..=MAX_LEVELS).contains(&n_max) {
            return Err(Error::param(
                "n_max",
                format!("must be in [{MIN_LEVELS}, {MAX_LEVELS}], got {n_max}"),
            ));
        }
        Ok(FockTruncation { n_max })
    }

    /// Smallest truncation of at least `min` levels whose discarded
    /// ground-state mass is below [`TAIL_LIMIT`].
    pub fn for_params(d: &DerivedParams, min: usize) -> Result<Self> {
        let needed = if d.beta < 0.0 {
            (TAIL_LIMIT.ln() / (2.0 * d.beta)).floor() as usize + 1
        } else {
            usize::MAX
        };
        Self::new(needed.max(min))
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn hs_dim(&self) -> usize {
        self.n_max * self.n_max
    }

    /// Flat index of the HS matrix entry `(i, j)`.
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.n_max + j
    }

    /// HS basis vectors `|i⟩⟨j|` with `i, j < n_max / 2`: every operator of
    /// degree two in `X`, `P` acts on them without reaching the boundary.
    pub fn low_lying(&self) -> Vec<usize> {
        let h = self.n_max / 2;
        (0..h)
            .flat_map(|i| (0..h).map(move |j| (i, j)))
            .map(|(i, j)| self.index(i, j))
            .collect()
    }
}

/// A Hilbert–Schmidt vector: an `n × n` matrix with `⟨φ, ψ⟩ = tr(φ†ψ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HsVector(pub CMat);

impl HsVector {
    pub fn from_flat(v: &CVec, n: usize) -> Self {
        HsVector(Array2::from_shape_vec((n, n), v.to_vec()).expect("length n²"))
    }

    pub fn flat(&self) -> CVec {
        CVec::from_iter(self.0.iter().copied())
    }

    pub fn norm(&self) -> f64 {
        linalg::frobenius(&self.0)
    }

    pub fn inner(&self, other: &HsVector) -> Complex64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

/// A linear map on HS vectors, as an `n² × n²` matrix in the flat basis.
#[derive(Debug, Clone, PartialEq)]
pub struct HsSuperOp(pub CMat);

impl HsSuperOp {
    pub fn left(a: &CMat) -> Self {
        HsSuperOp(kron(a, &linalg::identity(a.nrows())))
    }

    pub fn right(a: &CMat) -> Self {
        HsSuperOp(kron(&linalg::identity(a.nrows()), &a.t().to_owned()))
    }

    pub fn identity(dim: usize) -> Self {
        HsSuperOp(linalg::identity(dim))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn apply(&self, v: &CVec) -> CVec {
        self.0.dot(v)
    }

    pub fn adjoint(&self) -> Self {
        HsSuperOp(adjoint(&self.0))
    }

    pub fn compose(&self, other: &HsSuperOp) -> Self {
        HsSuperOp(self.0.dot(&other.0))
    }

    pub fn commutator(&self, other: &HsSuperOp) -> Self {
        HsSuperOp(linalg::commutator(&self.0, &other.0))
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        HsSuperOp(self.0.mapv(|v| v * c))
    }

    pub fn add(&self, other: &HsSuperOp) -> Self {
        HsSuperOp(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &HsSuperOp) -> Self {
        HsSuperOp(&self.0 - &other.0)
    }

    /// `‖(self − c·1) restricted to columns idx‖₂`.
    pub fn residual_on(&self, c: Complex64, idx: &[usize]) -> f64 {
        let mut m = linalg::select_columns(&self.0, idx);
        for (col, &row) in idx.iter().enumerate() {
            m[[row, col]] -= c;
        }
        linalg::norm_2(&m)
    }
}

/// Truncated ladder `b`, `b†` with `⟨n−1|b|n⟩ = sqrt(n)`.
pub fn build_ladder(trunc: &FockTruncation) -> (CMat, CMat) {
    let n = trunc.n_max;
    let mut b = CMat::zeros((n, n));
    for k in 1..n {
        b[[k - 1, k]] = re((k as f64).sqrt());
    }
    let bd = adjoint(&b);
    (b, bd)
}

/// Configuration operators `x̂1 = sqrt(θ/2)(b + b†)`, `x̂2 = i sqrt(θ/2)(b† − b)`.
pub fn configuration_ops(trunc: &FockTruncation, theta: f64) -> (CMat, CMat) {
    let (b, bd) = build_ladder(trunc);
    let c = (0.5 * theta).sqrt();
    let x1 = (&b + &bd).mapv(|v| v * c);
    let x2 = (&bd - &b).mapv(|v| v * I * c);
    (x1, x2)
}

/// `X_i ψ = x̂_i ψ`, `P_i ψ = (ħ/θ) ε_ij [x̂_j, ψ]`.
#[derive(Debug, Clone)]
pub struct PhaseSpaceOps {
    pub x1: HsSuperOp,
    pub x2: HsSuperOp,
    pub p1: HsSuperOp,
    pub p2: HsSuperOp,
}

fn require_oracle_params(p: &PhysParams) -> Result<()> {
    p.validate()?;
    if !(p.hbar > 0.0) {
        return Err(Error::HbarZero);
    }
    if !(p.theta > 0.0) {
        return Err(Error::ThetaZero);
    }
    Ok(())
}

fn require_superop_size(trunc: &FockTruncation, cap: usize, what: &str) -> Result<()> {
    if trunc.n_max > cap {
        return Err(Error::param(
            "n_max",
            format!("{what} needs n_max <= {cap}, got {}", trunc.n_max),
        ));
    }
    Ok(())
}

pub fn build_phase_space_ops(trunc: &FockTruncation, p: &PhysParams) -> Result<PhaseSpaceOps> {
    require_oracle_params(p)?;
    require_superop_size(trunc, MAX_SUPEROP_LEVELS, "superoperator assembly")?;
    let (x1, x2) = configuration_ops(trunc, p.theta);
    let k = re(p.hbar / p.theta);
    let ad = |x: &CMat| HsSuperOp::left(x).sub(&HsSuperOp::right(x));
    Ok(PhaseSpaceOps {
        x1: HsSuperOp::left(&x1),
        x2: HsSuperOp::left(&x2),
        p1: ad(&x2).scaled(k),
        p2: ad(&x1).scaled(-k),
    })
}

/// Annihilation/creation pairs of the two normal modes.
#[derive(Debug, Clone)]
pub struct AOps {
    pub a1: HsSuperOp,
    pub a2: HsSuperOp,
    pub a1_dag: HsSuperOp,
    pub a2_dag: HsSuperOp,
}

/// `Σ c_k · op_k`.
fn combine(terms: &[(Complex64, &HsSuperOp)]) -> HsSuperOp {
    let mut out = CMat::zeros(terms[0].1 .0.raw_dim());
    for (c, op) in terms {
        out.scaled_add(*c, &op.0);
    }
    HsSuperOp(out)
}

pub fn build_a_ops(ops: &PhaseSpaceOps, d: &DerivedParams, p: &PhysParams) -> AOps {
    let h = p.hbar;
    let (lp, lm) = (d.lambda_plus / h, d.lambda_minus / h);
    let (np, nm) = (re(1.0 / d.k_plus.sqrt()), re(1.0 / d.k_minus.sqrt()));
    let one = re(1.0);
    let PhaseSpaceOps { x1, x2, p1, p2 } = ops;
    let a1 = combine(&[(re(-lp), x1), (-I, p1), (-I * lp, x2), (one, p2)]).scaled(np);
    let a1_dag = combine(&[(re(-lp), x1), (I, p1), (I * lp, x2), (one, p2)]).scaled(np);
    let a2 = combine(&[(re(lm), x1), (I, p1), (-I * lm, x2), (one, p2)]).scaled(nm);
    let a2_dag = combine(&[(re(lm), x1), (-I, p1), (I * lm, x2), (one, p2)]).scaled(nm);
    AOps {
        a1,
        a2,
        a1_dag,
        a2_dag,
    }
}

/// Phase-space operators reassembled from the mode operators by the
/// inverse relations.
pub fn phase_space_from_a(a: &AOps, d: &DerivedParams, p: &PhysParams) -> PhaseSpaceOps {
    let h = p.hbar;
    let (lp, lm) = (d.lambda_plus, d.lambda_minus);
    let (sp, sm) = (d.k_plus.sqrt(), d.k_minus.sqrt());
    let c = 1.0 / (2.0 * (lp + lm));
    let s1 = a.a1.add(&a.a1_dag);
    let d1 = a.a1.sub(&a.a1_dag);
    let s2 = a.a2.add(&a.a2_dag);
    let d2 = a.a2.sub(&a.a2_dag);
    let inv_i = -I;
    PhaseSpaceOps {
        x1: combine(&[(re(h * c * sm), &s2), (re(-h * c * sp), &s1)]),
        x2: combine(&[(-inv_i * h * c * sp, &d1), (-inv_i * h * c * sm, &d2)]),
        p1: combine(&[(inv_i * c * lp * sm, &d2), (-inv_i * c * lm * sp, &d1)]),
        p2: combine(&[(re(c * lp * sm), &s2), (re(c * lm * sp), &s1)]),
    }
}

/// Discarded HS mass of the ground state beyond `n_max` levels.
pub fn ground_state_tail(trunc: &FockTruncation, d: &DerivedParams) -> f64 {
    (2.0 * d.beta * trunc.n_max as f64).exp()
}

/// Normalized ground state `ψ0 ∝ diag(e^{β(n+1/2)})`, with its
/// un-normalized squared norm.
pub fn ground_state(
    trunc: &FockTruncation,
    d: &DerivedParams,
    p: &PhysParams,
) -> Result<(HsVector, f64)> {
    require_oracle_params(p)?;
    let tail = ground_state_tail(trunc, d);
    if !(tail < TAIL_LIMIT) {
        return Err(Error::TruncationInsufficient {
            n_max: trunc.n_max,
            tail,
            limit: TAIL_LIMIT,
        });
    }
    let n = trunc.n_max;
    let mut psi = CMat::zeros((n, n));
    for k in 0..n {
        psi[[k, k]] = re((d.beta * (k as f64 + 0.5)).exp());
    }
    let norm2 = psi.iter().map(|v| v.norm_sqr()).sum::<f64>();
    let inv = re(1.0 / norm2.sqrt());
    Ok((HsVector(psi.mapv(|v| v * inv)), norm2))
}

/// The truncated model at one parameter point: phase-space and mode
/// operators plus the coherent-state label map.
#[derive(Debug, Clone)]
pub struct FockOracle {
    pub trunc: FockTruncation,
    pub params: PhysParams,
    pub derived: DerivedParams,
    pub ops: PhaseSpaceOps,
    pub a: AOps,
    pub label: Mat4<f64>,
}

impl FockOracle {
    pub fn new(trunc: FockTruncation, params: PhysParams) -> Result<Self> {
        require_oracle_params(&params)?;
        let derived = params.derive()?;
        let ops = build_phase_space_ops(&trunc, &params)?;
        let a = build_a_ops(&ops, &derived, &params);
        let label = coherent_label_matrix(&params, &derived)?;
        Ok(FockOracle {
            trunc,
            params,
            derived,
            ops,
            a,
            label,
        })
    }

    pub fn ground_state(&self) -> Result<CVec> {
        Ok(ground_state(&self.trunc, &self.derived, &self.params)?
            .0
            .flat())
    }

    /// `(r, Ω r̂) = x1 P1 + x2 P2 − y1 X1 − y2 X2`.
    pub fn weyl_generator(&self, r: &PhaseVector) -> CMat {
        let o = &self.ops;
        let mut g = CMat::zeros(o.x1.0.raw_dim());
        g.scaled_add(re(r.x1), &o.p1.0);
        g.scaled_add(re(r.x2), &o.p2.0);
        g.scaled_add(re(-r.y1), &o.x1.0);
        g.scaled_add(re(-r.y2), &o.x2.0);
        g
    }

    /// Dense `W(r) = exp((i/μ)(r, Ω r̂))`.
    pub fn weyl_op(&self, r: &PhaseVector) -> Result<HsSuperOp> {
        require_superop_size(&self.trunc, MAX_WEYL_LEVELS, "weyl_op")?;
        let c = I / self.derived.mu;
        Ok(HsSuperOp(expm(&self.weyl_generator(r).mapv(|v| v * c))))
    }

    /// `|z_r⟩ = W(r) |0,0⟩`, via the exponential action.
    pub fn coherent_state(&self, r: &PhaseVector, psi0: &CVec) -> CVec {
        let gen = Csr::from_dense(&self.weyl_generator(r)).scaled(I / self.derived.mu);
        expm_action(&gen, psi0, ACTION_TOL)
    }

    /// Complex label `z_r = (Re z1 + i Im z1, Re z2 + i Im z2)`.
    pub fn label_of(&self, r: &PhaseVector) -> [Complex64; 2] {
        let v = mat4::apply(&self.label, r);
        [Complex64::new(v.x1, v.y1), Complex64::new(v.x2, v.y2)]
    }

    /// `⟨z_r | z_r'⟩`.
    pub fn overlap(&self, r: &PhaseVector, r_prime: &PhaseVector, psi0: &CVec) -> Complex64 {
        linalg::vdot(
            &self.coherent_state(r, psi0),
            &self.coherent_state(r_prime, psi0),
        )
    }

    /// Hamiltonian `Σ P_i²/2m + m ω² X_i²/2`.
    pub fn hamiltonian(&self) -> HsSuperOp {
        let o = &self.ops;
        let (m, w) = (self.params.mass, self.params.omega);
        let sq = |a: &HsSuperOp| a.compose(a);
        combine(&[
            (re(0.5 / m), &sq(&o.p1)),
            (re(0.5 / m), &sq(&o.p2)),
            (re(0.5 * m * w * w), &sq(&o.x1)),
            (re(0.5 * m * w * w), &sq(&o.x2)),
        ])
    }

    /// Normal-mode form `(λ+/m) A1†A1 + (λ−/m) A2†A2 + (λ+ + λ−)/2m`.
    pub fn hamiltonian_normal_form(&self) -> HsSuperOp {
        let (d, m) = (&self.derived, self.params.mass);
        let n1 = self.a.a1_dag.compose(&self.a.a1);
        let n2 = self.a.a2_dag.compose(&self.a.a2);
        let id = HsSuperOp::identity(self.trunc.hs_dim());
        combine(&[
            (re(d.lambda_plus / m), &n1),
            (re(d.lambda_minus / m), &n2),
            (re((d.lambda_plus + d.lambda_minus) / (2.0 * m)), &id),
        ])
    }

    /// Mode-number state `(A1†)^n1 (A2†)^n2 |0,0⟩ / sqrt(n1! n2!)`.
    pub fn number_state(&self, n1: usize, n2: usize, psi0: &CVec) -> CVec {
        let mut v = psi0.clone();
        for k in 1..=n2 {
            v = self.a.a2_dag.apply(&v).mapv(|x| x / (k as f64).sqrt());
        }
        for k in 1..=n1 {
            v = self.a.a1_dag.apply(&v).mapv(|x| x / (k as f64).sqrt());
        }
        v
    }
}
