//! Anti-Wick quantization and de-quantization for two harmonic oscillators
//! on a non-commutative plane `[x1, x2] = i theta`.
//!
//! The phase-space side ([`params`], [`function`], [`smoothing`],
//! [`dynamics`]) is generic over the real scalar via [`Scalar`]; the
//! truncated Fock-space [`oracle`] works in `f64`/`Complex64`.

// `!(x > 0)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod function;
pub mod mat4;
pub mod oracle;
pub mod params;
pub mod quadrature;
pub mod scalar;
pub mod smoothing;

pub use dynamics::{
    classical_evolved, coherent_flow, evolution_matrix, evolved_hbar0, smooth_evolved, Flow,
    SymplecticMatrix4,
};
pub use error::{Error, Result};
pub use experiments::{
    classical_rate, log_space, run_dynamics, run_limits, DynamicsMode, DynamicsReport, DynamicsRow,
    LimitPath, LimitsReport, LimitsRow, RateReport, Sweep, SweepAxis,
};
pub use function::{Coord, FunctionDescription, GaussFactor, PhaseVector, SepGaussFunction};
pub use oracle::{CheckRecord, FockOracle, FockTruncation, KernelFitReport};
pub use params::{derive, limit_regime, DerivedParams, PhysParams, Regime};
pub use scalar::Scalar;
pub use smoothing::{
    kernel_widths, smooth, smooth_closed_form, smooth_hbar0, smooth_mc, smooth_theta0, Estimate,
    KernelVariant, KernelWidths, McEstimate, QuadratureSpec, Smoother,
};

/// Double-precision aliases.
pub type PhysParams64 = PhysParams<f64>;
pub type DerivedParams64 = DerivedParams<f64>;
pub type PhaseVector64 = PhaseVector<f64>;
pub type GaussFactor64 = GaussFactor<f64>;
pub type SepGaussFunction64 = SepGaussFunction<f64>;
pub type KernelWidths64 = KernelWidths<f64>;
pub type Smoother64 = Smoother<f64>;
pub type SymplecticMatrix64 = SymplecticMatrix4<f64>;

/// Single-precision aliases.
pub type PhysParams32 = PhysParams<f32>;
pub type DerivedParams32 = DerivedParams<f32>;
pub type PhaseVector32 = PhaseVector<f32>;
pub type GaussFactor32 = GaussFactor<f32>;
pub type SepGaussFunction32 = SepGaussFunction<f32>;
pub type KernelWidths32 = KernelWidths<f32>;
pub type Smoother32 = Smoother<f32>;
pub type SymplecticMatrix32 = SymplecticMatrix4<f32>;
