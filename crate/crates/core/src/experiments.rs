//! Drivers for the parameter sweeps, limit-ordering and dynamics
//! experiments. Sweep points run on the rayon pool; rows come back in sweep
//! order.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{classical_evolved, evolved_hbar0, recover_period, Flow};
use crate::error::{Error, Result};
use crate::function::{PhaseVector, SepGaussFunction};
use crate::params::{DerivedParams, PhysParams};
use crate::smoothing::{
    convergence_tolerance, smooth_closed_form, smooth_hbar0, smooth_theta0, KernelVariant,
    QuadratureSpec, Smoother,
};

/// Parameter a sweep runs over. `Mu` moves `hbar` and `theta` together.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    Hbar,
    Theta,
    Mass,
    Omega,
    Mu,
}

impl SweepAxis {
    pub fn apply(self, p: PhysParams, v: f64) -> PhysParams {
        match self {
            SweepAxis::Hbar => PhysParams { hbar: v, ..p },
            SweepAxis::Theta => PhysParams { theta: v, ..p },
            SweepAxis::Mass => PhysParams { mass: v, ..p },
            SweepAxis::Omega => PhysParams { omega: v, ..p },
            SweepAxis::Mu => PhysParams {
                hbar: v,
                theta: v,
                ..p
            },
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepAxis::Hbar => "hbar",
            SweepAxis::Theta => "theta",
            SweepAxis::Mass => "mass",
            SweepAxis::Omega => "omega",
            SweepAxis::Mu => "mu",
        })
    }
}

impl FromStr for SweepAxis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hbar" => Ok(SweepAxis::Hbar),
            "theta" => Ok(SweepAxis::Theta),
            "mass" => Ok(SweepAxis::Mass),
            "omega" => Ok(SweepAxis::Omega),
            "mu" => Ok(SweepAxis::Mu),
            _ => Err(Error::param("sweep", format!("unknown axis `{s}`"))),
        }
    }
}

/// Log-spaced sweep `axis:start:stop:points`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub axis: SweepAxis,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Sweep {
    pub fn new(axis: SweepAxis, start: f64, stop: f64, points: usize) -> Result<Self> {
        let s = Sweep {
            axis,
            start,
            stop,
            points,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.start > 0.0 && self.stop > 0.0 && self.start.is_finite() && self.stop.is_finite())
        {
            return Err(Error::param("sweep", "range must be positive and finite"));
        }
        if self.points < 3 {
            return Err(Error::param(
                "sweep",
                format!("needs at least 3 points, got {}", self.points),
            ));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        log_space(self.start, self.stop, self.points)
    }
}

impl FromStr for Sweep {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let [axis, start, stop, points] = parts[..] else {
            return Err(Error::param(
                "sweep",
                format!("expected axis:start:stop:points, got `{s}`"),
            ));
        };
        let num = |v: &str| {
            v.parse::<f64>()
                .map_err(|e| Error::param("sweep", format!("`{v}`: {e}")))
        };
        let points = points
            .parse::<usize>()
            .map_err(|e| Error::param("sweep", format!("`{points}`: {e}")))?;
        Sweep::new(axis.parse()?, num(start)?, num(stop)?, points)
    }
}

/// `n` points from `start` to `stop`, equally spaced in `ln`.
pub fn log_space(start: f64, stop: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![start];
    }
    let (a, b) = (start.ln(), stop.ln());
    (0..n)
        .map(|k| match k {
            0 => start,
            k if k == n - 1 => stop,
            k => (a + (b - a) * k as f64 / (n - 1) as f64).exp(),
        })
        .collect()
}

/// Value at `s = 0` of the line through the two points of smallest `|s|`;
/// removes the first-order term of a sweep converging as `O(s)`.
pub fn richardson_to_zero(points: &[(f64, f64)]) -> Option<f64> {
    let mut sorted: Vec<(f64, f64)> = points.to_vec();
    sorted.sort_by(|a, b| a.0.abs().total_cmp(&b.0.abs()));
    let [(s1, v1), (s2, v2), ..] = sorted[..] else {
        return None;
    };
    Some(v1 - (v2 - v1) * s1 / (s2 - s1))
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let (mx, my) = (
        pts.iter().map(|p| p.0).sum::<f64>() / n,
        pts.iter().map(|p| p.1).sum::<f64>() / n,
    );
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Derived scalars over a sweep.
pub fn params_sweep(base: PhysParams, sweep: &Sweep) -> Result<Vec<(f64, DerivedParams)>> {
    sweep
        .values()
        .into_par_iter()
        .map(|v| Ok((v, sweep.axis.apply(base, v).derive()?)))
        .collect()
}

/// One smoothed value in a sweep. Rows whose error estimate exceeds the
/// tolerance are kept with `converged = false`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothRow {
    pub params: PhysParams,
    pub value: f64,
    pub error_estimate: f64,
    pub tolerance: f64,
    pub converged: bool,
    /// Exact value for separable functions under kernel variant A.
    pub closed_form: Option<f64>,
}

impl SmoothRow {
    /// Evaluates one point, folding non-convergence into the row.
    pub fn evaluate(
        f: &SepGaussFunction,
        r: &PhaseVector,
        p: PhysParams,
        q: &QuadratureSpec,
        variant: KernelVariant,
    ) -> Result<Self> {
        let (value, error_estimate, tolerance, converged) =
            match Smoother::with_variant(p, *q, variant)?.smooth(f, r) {
                Ok(e) => (
                    e.value,
                    e.error_estimate,
                    convergence_tolerance(f, e.value, q.rel_tol),
                    true,
                ),
                Err(Error::NotConverged {
                    value,
                    estimate,
                    tolerance,
                }) => (value, estimate, tolerance, false),
                Err(e) => return Err(e),
            };
        let closed_form = match (f.factors(), variant) {
            (Some(_), KernelVariant::A) => Some(smooth_closed_form(f, r, &p)?),
            _ => None,
        };
        Ok(SmoothRow {
            params: p,
            value,
            error_estimate,
            tolerance,
            converged,
            closed_form,
        })
    }

    /// The row's non-convergence as an error, if any.
    pub fn convergence(&self) -> Result<()> {
        if self.converged {
            return Ok(());
        }
        Err(Error::NotConverged {
            value: self.value,
            estimate: self.error_estimate,
            tolerance: self.tolerance,
        })
    }
}

/// `F_{hbar,theta}(r)` by quadrature at every sweep point.
pub fn smooth_sweep(
    f: &SepGaussFunction,
    r: &PhaseVector,
    base: PhysParams,
    sweep: &Sweep,
    q: &QuadratureSpec,
    variant: KernelVariant,
) -> Result<Vec<SmoothRow>> {
    sweep
        .values()
        .into_par_iter()
        .map(|v| SmoothRow::evaluate(f, r, sweep.axis.apply(base, v), q, variant))
        .collect()
}

/// Which route to the classical point a limits row belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LimitPath {
    /// `theta = 0` first, then `hbar` swept toward 0.
    ThetaFirst,
    /// `hbar = 0` first, then `theta` swept toward 0.
    HbarFirst,
    /// `hbar = theta` swept toward 0 together.
    Diagonal,
    /// Extrapolated end points of the two iterated paths.
    Extrapolated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitsRow {
    pub path: LimitPath,
    pub theta: f64,
    pub hbar: f64,
    pub f_theta_first: Option<f64>,
    pub f_hbar_first: Option<f64>,
    /// Diagonal path only: the full smoothed value.
    pub f_diagonal: Option<f64>,
    pub gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitsReport {
    pub r: PhaseVector,
    pub rows: Vec<LimitsRow>,
    pub theta_first_limit: f64,
    pub hbar_first_limit: f64,
    pub gap: f64,
    /// `F(r)` itself, the classical value the diagonal path approaches.
    pub classical_value: f64,
    /// Log–log slope of `|F_{μ}(r) − F(r)|` against `μ` on the diagonal.
    pub diagonal_slope: Option<f64>,
}

/// Both iterated limits of `F_{hbar,theta}(r)` and the diagonal path, each
/// over `values` (positive, swept toward 0). The iterated branches use
/// their reduced formulas; the diagonal uses the exact separable formula,
/// or the quadrature for a callable `F`.
pub fn run_limits(
    f: &SepGaussFunction,
    r: &PhaseVector,
    base: PhysParams,
    values: &[f64],
    q: &QuadratureSpec,
) -> Result<LimitsReport> {
    if values.len() < 3 || values.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::param(
            "sweep",
            "limits need at least 3 positive sweep values",
        ));
    }
    let theta_first: Vec<(f64, f64)> = values
        .par_iter()
        .map(|&h| {
            Ok((
                h,
                smooth_theta0(
                    f,
                    r,
                    &PhysParams {
                        hbar: h,
                        theta: 0.0,
                        ..base
                    },
                    q,
                )?
                .value,
            ))
        })
        .collect::<Result<_>>()?;
    let hbar_first: Vec<(f64, f64)> = values
        .par_iter()
        .map(|&th| {
            Ok((
                th,
                smooth_hbar0(
                    f,
                    r,
                    &PhysParams {
                        hbar: 0.0,
                        theta: th,
                        ..base
                    },
                )?,
            ))
        })
        .collect::<Result<_>>()?;
    let diagonal: Vec<(f64, f64, f64)> = values
        .par_iter()
        .map(|&s| {
            let p = PhysParams {
                hbar: s,
                theta: s,
                ..base
            };
            let mu = p.derive()?.mu;
            let v = match f.factors() {
                Some(_) => smooth_closed_form(f, r, &p)?,
                None => Smoother::new(p, *q)?.smooth(f, r)?.value,
            };
            Ok((s, mu, v))
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(3 * values.len() + 1);
    rows.extend(theta_first.iter().map(|&(h, v)| LimitsRow {
        path: LimitPath::ThetaFirst,
        theta: 0.0,
        hbar: h,
        f_theta_first: Some(v),
        f_hbar_first: None,
        f_diagonal: None,
        gap: None,
    }));
    rows.extend(hbar_first.iter().map(|&(th, v)| LimitsRow {
        path: LimitPath::HbarFirst,
        theta: th,
        hbar: 0.0,
        f_theta_first: None,
        f_hbar_first: Some(v),
        f_diagonal: None,
        gap: None,
    }));
    rows.extend(diagonal.iter().map(|&(s, _, v)| LimitsRow {
        path: LimitPath::Diagonal,
        theta: s,
        hbar: s,
        f_theta_first: None,
        f_hbar_first: None,
        f_diagonal: Some(v),
        gap: None,
    }));
    let theta_first_limit = richardson_to_zero(&theta_first).expect("at least 3 points");
    let hbar_first_limit = richardson_to_zero(&hbar_first).expect("at least 3 points");
    let gap = theta_first_limit - hbar_first_limit;
    rows.push(LimitsRow {
        path: LimitPath::Extrapolated,
        theta: 0.0,
        hbar: 0.0,
        f_theta_first: Some(theta_first_limit),
        f_hbar_first: Some(hbar_first_limit),
        f_diagonal: None,
        gap: Some(gap),
    });
    let classical_value = f.evaluate(r);
    let dev: Vec<(f64, f64)> = diagonal
        .iter()
        .map(|&(_, mu, v)| (mu, (v - classical_value).abs()))
        .collect();
    Ok(LimitsReport {
        r: *r,
        rows,
        theta_first_limit,
        hbar_first_limit,
        gap,
        classical_value,
        diagonal_slope: log_log_slope(&dev),
    })
}

/// Sup over `grid` of `|F_{μ} − F|` along `hbar = theta = s`, for each `s`,
/// and the log–log slope against `μ`. Uses the exact separable formula.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    /// `(μ, sup deviation)`.
    pub points: Vec<(f64, f64)>,
    pub slope: Option<f64>,
}

pub fn classical_rate(
    f: &SepGaussFunction,
    grid: &[PhaseVector],
    base: PhysParams,
    values: &[f64],
) -> Result<RateReport> {
    let points: Vec<(f64, f64)> = values
        .par_iter()
        .map(|&s| {
            let p = PhysParams {
                hbar: s,
                theta: s,
                ..base
            };
            let mu = p.derive()?.mu;
            let mut sup = 0.0f64;
            for r in grid {
                sup = sup.max((smooth_closed_form(f, r, &p)? - f.evaluate(r)).abs());
            }
            Ok((mu, sup))
        })
        .collect::<Result<_>>()?;
    let slope = log_log_slope(&points);
    Ok(RateReport { points, slope })
}

/// Uniform tensor grid on `[-half_width, half_width]⁴` with `n` points per
/// axis.
pub fn cube_grid(half_width: f64, n: usize) -> Vec<PhaseVector> {
    let axis: Vec<f64> = (0..n)
        .map(|k| {
            if n == 1 {
                0.0
            } else {
                -half_width + 2.0 * half_width * k as f64 / (n - 1) as f64
            }
        })
        .collect();
    let mut out = Vec::with_capacity(n.pow(4));
    for &a in &axis {
        for &b in &axis {
            for &c in &axis {
                for &d in &axis {
                    out.push(PhaseVector::new(a, b, c, d));
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DynamicsRow {
    pub t: f64,
    pub smoothed_value: f64,
    pub classical_value: f64,
    pub abs_error: f64,
}

/// Which branch the dynamics experiment runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DynamicsMode {
    /// Quadrature of the evolved map against the classical orbit.
    #[default]
    Trajectory,
    /// The `hbar -> 0` branch, compared against its `t = 0` value.
    Hbar0,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicsReport {
    pub mode: DynamicsMode,
    pub flow: Flow,
    pub rows: Vec<DynamicsRow>,
    pub max_abs_error: f64,
    /// Period of the flow found numerically on `[0, 1.5·2π/ω]`.
    pub period: Option<f64>,
    pub expected_period: f64,
}

/// `times` evenly spaced points on one period `[0, 2π/ω]`.
pub fn period_times(p: &PhysParams, points: usize) -> Vec<f64> {
    let period = std::f64::consts::TAU / p.omega;
    let n = points.max(2);
    (0..n).map(|k| period * k as f64 / (n - 1) as f64).collect()
}

pub fn run_dynamics(
    f: &SepGaussFunction,
    r: &PhaseVector,
    p: PhysParams,
    times: &[f64],
    q: &QuadratureSpec,
    flow: Flow,
    mode: DynamicsMode,
) -> Result<DynamicsReport> {
    let rows: Vec<DynamicsRow> = match mode {
        DynamicsMode::Trajectory => {
            let smoother = Smoother::new(p, *q)?;
            times
                .par_iter()
                .map(|&t| {
                    let s = smoother.smooth_evolved(f, r, t, flow)?.value;
                    let c = classical_evolved(f, r, t, &p, flow)?;
                    Ok(DynamicsRow {
                        t,
                        smoothed_value: s,
                        classical_value: c,
                        abs_error: (s - c).abs(),
                    })
                })
                .collect::<Result<_>>()?
        }
        DynamicsMode::Hbar0 => {
            let reference = evolved_hbar0(f, r, 0.0, &p)?;
            times
                .iter()
                .map(|&t| {
                    let s = evolved_hbar0(f, r, t, &p)?;
                    Ok(DynamicsRow {
                        t,
                        smoothed_value: s,
                        classical_value: reference,
                        abs_error: (s - reference).abs(),
                    })
                })
                .collect::<Result<_>>()?
        }
    };
    let max_abs_error = rows.iter().map(|r| r.abs_error).fold(0.0, f64::max);
    let expected_period = std::f64::consts::TAU / p.omega;
    let period = match (mode, p.hbar > 0.0) {
        (DynamicsMode::Trajectory, true) => {
            recover_period(flow, 1.5 * expected_period, &p, &p.derive()?)?
        }
        _ => None,
    };
    Ok(DynamicsReport {
        mode,
        flow,
        rows,
        max_abs_error,
        period,
        expected_period,
    })
}
