//! Classical observables on the phase space R⁴.
//!
//! The workhorse is [`SepGaussFunction`]: a product over the four
//! coordinates of `a·exp(-(u-b)²/s²) + c` factors. The family is closed
//! under Gaussian smoothing and every limit at infinity is explicit. A
//! callable escape hatch admits arbitrary bounded functions for
//! quadrature-only evaluation.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Phase-space coordinate index, in storage order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Coord {
    X1,
    X2,
    Y1,
    Y2,
}

impl Coord {
    pub const ALL: [Coord; 4] = [Coord::X1, Coord::X2, Coord::Y1, Coord::Y2];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }
}

/// A point `r = (x1, x2, y1, y2)`: two positions and two momenta.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PhaseVector<T = f64> {
    pub x1: T,
    pub x2: T,
    pub y1: T,
    pub y2: T,
}

impl<T: Scalar> PhaseVector<T> {
    pub fn new(x1: T, x2: T, y1: T, y2: T) -> Self {
        PhaseVector { x1, x2, y1, y2 }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero(), T::zero())
    }

    pub fn from_array(a: [T; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn to_array(self) -> [T; 4] {
        [self.x1, self.x2, self.y1, self.y2]
    }

    pub fn get(&self, c: Coord) -> T {
        self.to_array()[c.index()]
    }

    pub fn with(mut self, c: Coord, v: T) -> Self {
        match c {
            Coord::X1 => self.x1 = v,
            Coord::X2 => self.x2 = v,
            Coord::Y1 => self.y1 = v,
            Coord::Y2 => self.y2 = v,
        }
        self
    }

    pub fn norm(&self) -> T {
        self.to_array().iter().map(|&v| v * v).sum::<T>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

impl<T: Scalar> std::ops::Add for PhaseVector<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(
            self.x1 + o.x1,
            self.x2 + o.x2,
            self.y1 + o.y1,
            self.y2 + o.y2,
        )
    }
}

impl<T: Scalar> std::ops::Sub for PhaseVector<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(
            self.x1 - o.x1,
            self.x2 - o.x2,
            self.y1 - o.y1,
            self.y2 - o.y2,
        )
    }
}

/// One factor `amplitude·exp(-(u - center)²/width²) + offset`.
///
/// JSON field names follow the short form `{a, b, s, c}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussFactor<T = f64> {
    #[serde(rename = "a")]
    pub amplitude: T,
    #[serde(rename = "b")]
    pub center: T,
    #[serde(rename = "s")]
    pub width: T,
    #[serde(rename = "c")]
    pub offset: T,
}

impl<T: Scalar> GaussFactor<T> {
    pub fn new(amplitude: T, center: T, width: T, offset: T) -> Result<Self> {
        let f = GaussFactor {
            amplitude,
            center,
            width,
            offset,
        };
        f.validate()?;
        Ok(f)
    }

    /// `exp(-u²)`.
    pub fn unit_gaussian() -> Self {
        GaussFactor {
            amplitude: T::one(),
            center: T::zero(),
            width: T::one(),
            offset: T::zero(),
        }
    }

    /// `exp(-u²) + c`.
    pub fn gaussian_plus(c: T) -> Self {
        GaussFactor {
            offset: c,
            ..Self::unit_gaussian()
        }
    }

    /// The constant `c`.
    pub fn constant(c: T) -> Self {
        GaussFactor {
            amplitude: T::zero(),
            center: T::zero(),
            width: T::one(),
            offset: c,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all_finite = [self.amplitude, self.center, self.width, self.offset]
            .iter()
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::InvalidFunction("non-finite factor entry".into()));
        }
        if !(self.width > T::zero()) {
            return Err(Error::InvalidFunction(format!(
                "width must be > 0, got {}",
                self.width
            )));
        }
        if self.offset < T::zero() {
            return Err(Error::InvalidFunction(format!(
                "offset must be >= 0, got {}",
                self.offset
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn eval(&self, u: T) -> T {
        if self.amplitude == T::zero() {
            return self.offset;
        }
        let z = (u - self.center) / self.width;
        self.amplitude * (-z * z).exp() + self.offset
    }

    /// Value at `u -> ±infinity`.
    #[inline]
    pub fn at_infinity(&self) -> T {
        self.offset
    }

    pub fn is_constant(&self) -> bool {
        self.amplitude == T::zero()
    }

    /// Limit factor: the constant it tends to at infinity.
    pub fn limit(&self) -> Self {
        Self::constant(self.offset)
    }

    /// Supremum of `|factor|` over the real line.
    pub fn sup_abs(&self) -> T {
        let peak = self.amplitude + self.offset;
        peak.abs().max(self.offset.abs())
    }

    /// Infimum over the real line.
    pub fn inf(&self) -> T {
        self.offset.min(self.amplitude + self.offset)
    }
}

type CallableFn<T> = dyn Fn(&PhaseVector<T>) -> T + Send + Sync;

/// Observable on R⁴.
#[derive(Clone)]
pub enum SepGaussFunction<T = f64> {
    /// Product of four factors in the order `(x1, x2, y1, y2)`.
    Separable([GaussFactor<T>; 4]),
    /// Arbitrary bounded continuous function; must be pure.
    Callable(Arc<CallableFn<T>>),
}

impl<T: Scalar> fmt::Debug for SepGaussFunction<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Separable(factors) => f.debug_tuple("Separable").field(factors).finish(),
            Self::Callable(_) => f.write_str("Callable(..)"),
        }
    }
}

impl<T: Scalar> SepGaussFunction<T> {
    pub fn separable(factors: [GaussFactor<T>; 4]) -> Result<Self> {
        for f in &factors {
            f.validate()?;
        }
        Ok(Self::Separable(factors))
    }

    pub fn callable(f: impl Fn(&PhaseVector<T>) -> T + Send + Sync + 'static) -> Self {
        Self::Callable(Arc::new(f))
    }

    /// The identity function `F ≡ 1`.
    pub fn one() -> Self {
        Self::Separable([GaussFactor::constant(T::one()); 4])
    }

    /// `exp(-u²)` in coordinate `c`, constant 1 elsewhere.
    pub fn gaussian_in(c: Coord) -> Self {
        let mut factors = [GaussFactor::constant(T::one()); 4];
        factors[c.index()] = GaussFactor::unit_gaussian();
        Self::Separable(factors)
    }

    /// Product of unit Gaussians in all four coordinates.
    pub fn unit_gaussian() -> Self {
        Self::Separable([GaussFactor::unit_gaussian(); 4])
    }

    /// `(e^{-x1²}+1)(e^{-x2²}+1)e^{-y1²}e^{-y2²}`: equals 4 at the origin
    /// while its limit over `x1, x2 -> infinity` is 1 there.
    pub fn limit_ordering_demo() -> Self {
        Self::Separable([
            GaussFactor::gaussian_plus(T::one()),
            GaussFactor::gaussian_plus(T::one()),
            GaussFactor::unit_gaussian(),
            GaussFactor::unit_gaussian(),
        ])
    }

    pub fn factors(&self) -> Option<&[GaussFactor<T>; 4]> {
        match self {
            Self::Separable(f) => Some(f),
            Self::Callable(_) => None,
        }
    }

    pub(crate) fn require_factors(&self, op: &'static str) -> Result<&[GaussFactor<T>; 4]> {
        self.factors().ok_or(Error::CallableNotSupported { op })
    }

    #[inline]
    pub fn evaluate(&self, r: &PhaseVector<T>) -> T {
        match self {
            Self::Separable(f) => {
                f[0].eval(r.x1) * f[1].eval(r.x2) * f[2].eval(r.y1) * f[3].eval(r.y2)
            }
            Self::Callable(g) => g(r),
        }
    }

    /// Replaces every factor in `dirs` by its value at `+infinity`.
    ///
    /// The result is constant along `dirs`, so it is effectively a function
    /// of the remaining coordinates.
    pub fn f_infinity(&self, dirs: &[Coord]) -> Result<Self> {
        let mut factors = *self.require_factors("f_infinity")?;
        for &c in dirs {
            factors[c.index()] = factors[c.index()].limit();
        }
        Ok(Self::Separable(factors))
    }

    /// `sup |F|` over R⁴ (separable family only).
    pub fn sup_abs(&self) -> Option<T> {
        self.factors()
            .map(|f| f.iter().map(|g| g.sup_abs()).fold(T::one(), |a, b| a * b))
    }

    /// Whether `F >= 0` everywhere (separable family only).
    pub fn is_nonnegative(&self) -> Option<bool> {
        self.factors()
            .map(|f| f.iter().all(|g| g.inf() >= T::zero()))
    }
}

/// JSON shape of a separable function: `{"factors": [{a,b,s,c} x 4]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FunctionDescription<T = f64> {
    pub factors: Vec<GaussFactor<T>>,
}

impl<T: Scalar> TryFrom<FunctionDescription<T>> for SepGaussFunction<T> {
    type Error = Error;

    fn try_from(d: FunctionDescription<T>) -> Result<Self> {
        let factors: [GaussFactor<T>; 4] = d.factors.try_into().map_err(|v: Vec<_>| {
            Error::InvalidFunction(format!("expected 4 factors, got {}", v.len()))
        })?;
        Self::separable(factors)
    }
}

impl<T: Scalar> TryFrom<&SepGaussFunction<T>> for FunctionDescription<T> {
    type Error = Error;

    fn try_from(f: &SepGaussFunction<T>) -> Result<Self> {
        Ok(FunctionDescription {
            factors: f.require_factors("serialize")?.to_vec(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sep(f: [GaussFactor<f64>; 4]) -> SepGaussFunction<f64> {
        SepGaussFunction::separable(f).unwrap()
    }

    #[test]
    fn evaluate_examples() {
        let r0 = PhaseVector::zero();
        let any = PhaseVector::new(0.3, -2.0, 7.5, 1e3);
        assert_eq!(SepGaussFunction::one().evaluate(&any), 1.0);
        assert_eq!(SepGaussFunction::gaussian_in(Coord::X1).evaluate(&r0), 1.0);
        let f = sep([
            GaussFactor::gaussian_plus(1.0),
            GaussFactor::gaussian_plus(2.0),
            GaussFactor::unit_gaussian(),
            GaussFactor::unit_gaussian(),
        ]);
        assert_eq!(f.evaluate(&r0), 6.0);
    }

    #[test]
    fn limits_at_infinity() {
        let f = sep([
            GaussFactor::gaussian_plus(1.0),
            GaussFactor::gaussian_plus(2.0),
            GaussFactor::unit_gaussian(),
            GaussFactor::constant(1.0),
        ]);
        let lim = f.f_infinity(&[Coord::X1, Coord::X2]).unwrap();
        for y1 in [-1.0, 0.0, 0.5] {
            let r = PhaseVector::new(13.0, -4.0, y1, 0.0);
            assert_eq!(lim.evaluate(&r), 2.0 * (-y1 * y1).exp());
        }
        let one = SepGaussFunction::<f64>::one()
            .f_infinity(&Coord::ALL)
            .unwrap();
        assert_eq!(one.evaluate(&PhaseVector::zero()), 1.0);

        let g = sep([
            GaussFactor::unit_gaussian(),
            GaussFactor::constant(1.0),
            GaussFactor::constant(1.0),
            GaussFactor::unit_gaussian(),
        ]);
        let lim = g.f_infinity(&[Coord::X1]).unwrap();
        assert_eq!(lim.evaluate(&PhaseVector::zero()), 0.0);
    }

    #[test]
    fn callable_escape_hatch() {
        let f = SepGaussFunction::callable(|r: &PhaseVector<f64>| (r.x1 * r.y2).cos());
        assert_eq!(f.evaluate(&PhaseVector::zero()), 1.0);
        assert!(matches!(
            f.f_infinity(&[Coord::X1]),
            Err(Error::CallableNotSupported { op: "f_infinity" })
        ));
        assert!(f.sup_abs().is_none());
    }

    #[test]
    fn rejects_bad_factors() {
        assert!(GaussFactor::new(1.0, 0.0, 0.0, 0.0).is_err());
        assert!(GaussFactor::new(1.0, 0.0, 1.0, -0.5).is_err());
        assert!(GaussFactor::new(f64::NAN, 0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn json_shape() {
        let f = SepGaussFunction::<f64>::limit_ordering_demo();
        let d = FunctionDescription::try_from(&f).unwrap();
        let s = serde_json::to_string(&d).unwrap();
        assert!(s.starts_with(r#"{"factors":[{"a":1.0,"b":0.0,"s":1.0,"c":1.0}"#));
        let back: FunctionDescription<f64> = serde_json::from_str(&s).unwrap();
        let g = SepGaussFunction::try_from(back).unwrap();
        assert_eq!(g.factors(), f.factors());

        let three: FunctionDescription<f64> =
            serde_json::from_str(r#"{"factors":[{"a":1,"b":0,"s":1,"c":0},{"a":1,"b":0,"s":1,"c":0},{"a":1,"b":0,"s":1,"c":0}]}"#)
                .unwrap();
        assert!(SepGaussFunction::try_from(three).is_err());
    }

    #[test]
    fn sup_and_positivity() {
        let f = SepGaussFunction::<f64>::limit_ordering_demo();
        assert_eq!(f.sup_abs(), Some(4.0));
        assert_eq!(f.is_nonnegative(), Some(true));
        let g = sep([
            GaussFactor::new(-0.5, 0.0, 1.0, 0.2).unwrap(),
            GaussFactor::constant(1.0),
            GaussFactor::constant(1.0),
            GaussFactor::constant(1.0),
        ]);
        assert_eq!(g.is_nonnegative(), Some(false));
        assert_eq!(g.sup_abs(), Some(0.3));
    }
}
