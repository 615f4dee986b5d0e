//! One function per subcommand, each returning a [`Report`].

use anyhow::bail;
use ncphase::experiments::{params_sweep, period_times, smooth_sweep, SmoothRow};
use ncphase::oracle::{kernel_fit, run_suite, CheckRecord, FockOracle, FockTruncation};
use ncphase::{
    log_space, run_dynamics, run_limits, DerivedParams, KernelVariant, LimitPath, PhaseVector,
    PhysParams, SepGaussFunction, Smoother,
};
use serde_json::{json, Value};

use crate::config::{Command, ExperimentConfig, VariantChoice};
use crate::output::{Cell, Report, Table};

/// Least truncation used by `--variant auto` and, by default, `kernel-fit`;
/// raised as needed to hold the ground state.
const FIT_LEVELS: usize = 16;

/// A failed oracle check, reported with exit code 3.
#[derive(Debug, thiserror::Error)]
#[error("oracle check `{0}` failed")]
pub struct OracleFailure(pub String);

/// Runs one subcommand. A failure that still produced a report (failed
/// oracle check, unconverged smoothing row) comes back alongside it so the
/// report is written before the process exits non-zero.
pub fn run(cfg: &ExperimentConfig) -> anyhow::Result<(Report, Option<anyhow::Error>)> {
    Ok(match cfg.command {
        Command::Params => (params(cfg)?, None),
        Command::Smooth => smooth(cfg)?,
        Command::Limits => (limits(cfg)?, None),
        Command::Dynamics => (dynamics(cfg)?, None),
        Command::Oracle => {
            let (report, failure) = oracle(cfg)?;
            (report, failure.map(Into::into))
        }
        Command::KernelFit => (kernel_fit_report(cfg)?, None),
    })
}

fn param_cells(p: &PhysParams) -> Vec<Cell> {
    vec![p.hbar.into(), p.theta.into(), p.mass.into(), p.omega.into()]
}

fn point_cells(r: &PhaseVector) -> Vec<Cell> {
    r.to_array().into_iter().map(Cell::Num).collect()
}

fn derived_cells(d: &DerivedParams) -> Vec<Cell> {
    [
        d.lambda_plus,
        d.lambda_minus,
        d.k_plus,
        d.k_minus,
        d.mu,
        d.gamma_plus,
        d.gamma_minus,
        d.omega_plus,
        d.omega_minus,
        d.beta,
        d.norm_n,
        d.j_det,
    ]
    .into_iter()
    .map(Cell::Num)
    .collect()
}

const PARAM_HEADERS: [&str; 4] = ["hbar", "theta", "mass", "omega"];
const DERIVED_HEADERS: [&str; 12] = [
    "lambda_plus",
    "lambda_minus",
    "k_plus",
    "k_minus",
    "mu",
    "gamma_plus",
    "gamma_minus",
    "omega_plus",
    "omega_minus",
    "beta",
    "norm_n",
    "j_det",
];

fn params(cfg: &ExperimentConfig) -> anyhow::Result<Report> {
    let points: Vec<(PhysParams, DerivedParams)> = match &cfg.sweep {
        Some(s) => params_sweep(cfg.params, s)?
            .into_iter()
            .map(|(v, d)| (s.axis.apply(cfg.params, v), d))
            .collect(),
        None => vec![(cfg.params, cfg.params.derive()?)],
    };
    let headers: Vec<&str> = PARAM_HEADERS
        .iter()
        .chain(&DERIVED_HEADERS)
        .copied()
        .collect();
    let mut table = Table::new(&headers);
    let mut rows = Vec::new();
    for (p, d) in &points {
        let mut cells = param_cells(p);
        cells.extend(derived_cells(d));
        table.push(cells);
        rows.push(json!({"params": p, "derived": d}));
    }
    Ok(Report {
        json: json!({"experiment": "params", "rows": rows}),
        table,
    })
}

fn function_or(cfg: &ExperimentConfig, default: fn() -> SepGaussFunction) -> SepGaussFunction {
    cfg.function.clone().unwrap_or_else(default)
}

/// Variant from `--variant`; `auto` runs the oracle fit at the base point.
fn resolve_variant(cfg: &ExperimentConfig) -> anyhow::Result<(KernelVariant, Option<Value>)> {
    Ok(match cfg.variant {
        VariantChoice::A => (KernelVariant::A, None),
        VariantChoice::B => (KernelVariant::B, None),
        VariantChoice::Auto if cfg.params.theta == 0.0 => (KernelVariant::A, None),
        VariantChoice::Auto => {
            let trunc = FockTruncation::for_params(&cfg.params.derive()?, FIT_LEVELS)?;
            let o = FockOracle::new(trunc, cfg.params)?;
            let fit = kernel_fit(&o, cfg.pairs, cfg.quad.rng_seed)?;
            let summary = json!({
                "selected": fit.selected.to_string(),
                "sum_sq_a": fit.sum_sq_a,
                "sum_sq_b": fit.sum_sq_b,
                "max_rel_a": fit.max_rel_a,
                "max_rel_b": fit.max_rel_b,
            });
            (fit.selected, Some(summary))
        }
    })
}

fn smooth(cfg: &ExperimentConfig) -> anyhow::Result<(Report, Option<anyhow::Error>)> {
    let f = function_or(cfg, SepGaussFunction::unit_gaussian);
    let (variant, fit) = resolve_variant(cfg)?;
    let r = cfg.point;
    let rows = match &cfg.sweep {
        Some(s) => smooth_sweep(&f, &r, cfg.params, s, &cfg.quad, variant)?,
        None => vec![SmoothRow::evaluate(&f, &r, cfg.params, &cfg.quad, variant)?],
    };
    let mut headers: Vec<&str> = PARAM_HEADERS.to_vec();
    headers.extend([
        "x1",
        "x2",
        "y1",
        "y2",
        "value",
        "error_estimate",
        "converged",
        "closed_form",
    ]);
    if cfg.mc {
        headers.extend(["mc_value", "mc_std_error"]);
    }
    headers.push("variant");
    let mut table = Table::new(&headers);
    let mut json_rows = Vec::new();
    for row in &rows {
        let mut cells = param_cells(&row.params);
        cells.extend(point_cells(&r));
        cells.extend([
            row.value.into(),
            row.error_estimate.into(),
            Cell::Text(row.converged.to_string()),
            row.closed_form.map_or(Cell::Empty, Cell::Num),
        ]);
        let mut jr = json!({
            "params": row.params,
            "r": r,
            "value": row.value,
            "error_estimate": row.error_estimate,
            "tolerance": row.tolerance,
            "converged": row.converged,
            "closed_form": row.closed_form,
        });
        if cfg.mc {
            let mc = Smoother::with_variant(row.params, cfg.quad, variant)?.smooth_mc(&f, &r)?;
            cells.extend([mc.value.into(), mc.std_error.into()]);
            jr["mc"] = json!(mc);
        }
        cells.push(Cell::Text(variant.to_string()));
        table.push(cells);
        json_rows.push(jr);
    }
    let failure = rows
        .iter()
        .find_map(|row| row.convergence().err())
        .map(Into::into);
    let report = Report {
        json: json!({"experiment": "smooth", "variant": variant.to_string(), "variant_fit": fit, "rows": json_rows}),
        table,
    };
    Ok((report, failure))
}

fn limits(cfg: &ExperimentConfig) -> anyhow::Result<Report> {
    let f = function_or(cfg, SepGaussFunction::limit_ordering_demo);
    let values = match &cfg.sweep {
        Some(s) => s.values(),
        None => log_space(1e-1, 1e-4, 4),
    };
    let rep = run_limits(&f, &cfg.point, cfg.params, &values, &cfg.quad)?;
    let mut table = Table::new(&[
        "path",
        "theta",
        "hbar",
        "F_theta_first",
        "F_hbar_first",
        "F_diagonal",
        "gap",
    ]);
    for row in &rep.rows {
        let path = match row.path {
            LimitPath::ThetaFirst => "theta-first",
            LimitPath::HbarFirst => "hbar-first",
            LimitPath::Diagonal => "diagonal",
            LimitPath::Extrapolated => "extrapolated",
        };
        table.push(vec![
            Cell::Text(path.into()),
            row.theta.into(),
            row.hbar.into(),
            row.f_theta_first.into(),
            row.f_hbar_first.into(),
            row.f_diagonal.into(),
            row.gap.into(),
        ]);
    }
    Ok(Report {
        json: json!({"experiment": "limits", "report": rep}),
        table,
    })
}

fn dynamics(cfg: &ExperimentConfig) -> anyhow::Result<Report> {
    let f = function_or(cfg, SepGaussFunction::unit_gaussian);
    let times = period_times(&cfg.params, cfg.points);
    let rep = run_dynamics(
        &f, &cfg.point, cfg.params, &times, &cfg.quad, cfg.flow, cfg.mode,
    )?;
    let mut table = Table::new(&["t", "smoothed_value", "classical_value", "abs_error"]);
    for row in &rep.rows {
        table.push(vec![
            row.t.into(),
            row.smoothed_value.into(),
            row.classical_value.into(),
            row.abs_error.into(),
        ]);
    }
    Ok(Report {
        json: json!({"experiment": "dynamics", "report": rep}),
        table,
    })
}

fn oracle(cfg: &ExperimentConfig) -> anyhow::Result<(Report, Option<OracleFailure>)> {
    let records = run_suite(cfg.params, cfg.n_max.unwrap_or(12), cfg.quad.rng_seed)?;
    let mut table = Table::new(&["check_name", "n_max", "residual", "tolerance", "passed"]);
    for r in &records {
        table.push(vec![
            Cell::Text(r.check_name.clone()),
            Cell::Int(r.n_max as u64),
            r.residual.into(),
            r.tolerance.into(),
            Cell::Text(r.passed.to_string()),
        ]);
    }
    let failure = records
        .iter()
        .find(|r| !r.passed)
        .map(|r: &CheckRecord| OracleFailure(r.check_name.clone()));
    let all = failure.is_none();
    Ok((
        Report {
            json: json!({"experiment": "oracle", "all_passed": all, "checks": records}),
            table,
        },
        failure,
    ))
}

fn kernel_fit_report(cfg: &ExperimentConfig) -> anyhow::Result<Report> {
    let trunc = match cfg.n_max {
        Some(n) => FockTruncation::new(n)?,
        None => FockTruncation::for_params(&cfg.params.derive()?, FIT_LEVELS)?,
    };
    let n = trunc.n_max();
    let o = FockOracle::new(trunc, cfg.params)?;
    let fit = kernel_fit(&o, cfg.pairs, cfg.quad.rng_seed)?;
    if fit.rows.is_empty() {
        bail!("kernel fit produced no rows");
    }
    let mut table = Table::new(&[
        "r_x1",
        "r_x2",
        "r_y1",
        "r_y2",
        "rp_x1",
        "rp_x2",
        "rp_y1",
        "rp_y2",
        "oracle",
        "variant_a",
        "variant_b",
    ]);
    for row in &fit.rows {
        let mut cells = point_cells(&row.r);
        cells.extend(point_cells(&row.r_prime));
        cells.extend([
            row.oracle.into(),
            row.variant_a.into(),
            row.variant_b.into(),
        ]);
        table.push(cells);
    }
    eprintln!(
        "selected variant {} (max relative error A {:e}, B {:e})",
        fit.selected, fit.max_rel_a, fit.max_rel_b
    );
    Ok(Report {
        json: json!({"experiment": "kernel-fit", "n_max": n, "params": cfg.params, "fit": fit}),
        table,
    })
}
