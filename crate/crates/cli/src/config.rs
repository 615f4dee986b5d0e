//! Command-line flags, the optional JSON config file, and their merge.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use ncphase::function::FunctionDescription;
use ncphase::{
    DynamicsMode, Flow, PhaseVector, PhysParams, QuadratureSpec, SepGaussFunction, Sweep,
};
use serde::Deserialize;

/// Anti-Wick quantization experiments for two non-commutative oscillators.
#[derive(Parser, Debug)]
#[command(name = "ncphase", version, about, allow_negative_numbers = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: Opts,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Derived scalars at a point or over a sweep.
    #[command(allow_negative_numbers = true)]
    Params,
    /// Smoothed value F_{hbar,theta}(r) at a point or over a sweep.
    #[command(allow_negative_numbers = true)]
    Smooth,
    /// Iterated and diagonal classical limits.
    #[command(allow_negative_numbers = true)]
    Limits,
    /// Evolved smoothed values over one period.
    #[command(allow_negative_numbers = true)]
    Dynamics,
    /// Every Fock-space residual check.
    #[command(allow_negative_numbers = true)]
    Oracle,
    /// Kernel-variant fit against the oracle overlaps.
    #[command(allow_negative_numbers = true)]
    KernelFit,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Params => "params",
            Command::Smooth => "smooth",
            Command::Limits => "limits",
            Command::Dynamics => "dynamics",
            Command::Oracle => "oracle",
            Command::KernelFit => "kernel-fit",
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum VariantChoice {
    A,
    B,
    #[value(name = "auto")]
    #[serde(rename = "auto")]
    Auto,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FlowArg {
    CoherentState,
    Block,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeArg {
    Trajectory,
    Hbar0,
}

#[derive(Args, Debug, Default, Clone)]
pub struct Opts {
    #[arg(long, global = true)]
    pub hbar: Option<f64>,
    #[arg(long, global = true)]
    pub theta: Option<f64>,
    #[arg(long, global = true)]
    pub mass: Option<f64>,
    #[arg(long, global = true)]
    pub omega: Option<f64>,
    /// Gauss–Hermite points per axis.
    #[arg(long, global = true)]
    pub order: Option<usize>,
    /// Monte Carlo samples; `smooth` adds a Monte Carlo column when set.
    #[arg(long, global = true)]
    pub mc_samples: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Relative tolerance of the quadrature convergence check.
    #[arg(long, global = true)]
    pub rel_tol: Option<f64>,
    /// Separable function as JSON: {"factors": [{"a":..,"b":..,"s":..,"c":..} x 4]}.
    #[arg(long, global = true, value_name = "JSON_FILE")]
    pub function: Option<PathBuf>,
    /// Log-spaced sweep, e.g. hbar:1e-1:1e-4:4.
    #[arg(long, global = true, value_name = "AXIS:START:STOP:POINTS")]
    pub sweep: Option<String>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[arg(long, global = true, value_enum)]
    pub variant: Option<VariantChoice>,
    /// JSON config file; flags override its fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Phase-space point x1,x2,y1,y2.
    #[arg(
        long,
        global = true,
        value_name = "X1,X2,Y1,Y2",
        allow_hyphen_values = true
    )]
    pub point: Option<String>,
    /// Fock truncation for `oracle` and `kernel-fit`.
    #[arg(long, global = true)]
    pub n_max: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub flow: Option<FlowArg>,
    #[arg(long, global = true, value_enum)]
    pub mode: Option<ModeArg>,
    /// Time points over the period for `dynamics`.
    #[arg(long, global = true)]
    pub points: Option<usize>,
    /// Random pairs for `kernel-fit`.
    #[arg(long, global = true)]
    pub pairs: Option<usize>,
}

/// Config file: every field optional, same names as the flags.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub experiment: Option<String>,
    pub hbar: Option<f64>,
    pub theta: Option<f64>,
    pub mass: Option<f64>,
    pub omega: Option<f64>,
    pub order: Option<usize>,
    pub mc_samples: Option<usize>,
    pub seed: Option<u64>,
    pub rel_tol: Option<f64>,
    pub function: Option<FunctionDescription>,
    pub sweep: Option<String>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub variant: Option<VariantChoice>,
    pub point: Option<[f64; 4]>,
    pub n_max: Option<usize>,
    pub flow: Option<FlowArg>,
    pub mode: Option<ModeArg>,
    pub points: Option<usize>,
    pub pairs: Option<usize>,
}

/// Fully resolved settings for one run.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub command: Command,
    pub params: PhysParams,
    pub quad: QuadratureSpec,
    pub mc: bool,
    pub function: Option<SepGaussFunction>,
    pub sweep: Option<Sweep>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub variant: VariantChoice,
    pub point: PhaseVector,
    pub n_max: Option<usize>,
    pub flow: Flow,
    pub mode: DynamicsMode,
    pub points: usize,
    pub pairs: usize,
}

fn read_function(path: &Path) -> anyhow::Result<SepGaussFunction> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading function file {}", path.display()))?;
    let desc: FunctionDescription = serde_json::from_str(&text)
        .with_context(|| format!("parsing function file {}", path.display()))?;
    Ok(desc.try_into()?)
}

fn parse_point(s: &str) -> anyhow::Result<PhaseVector> {
    let vals: Vec<f64> = s
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .with_context(|| format!("bad coordinate `{v}` in --point"))
        })
        .collect::<anyhow::Result<_>>()?;
    let Ok(arr) = <[f64; 4]>::try_from(vals) else {
        bail!("--point needs exactly 4 coordinates")
    };
    Ok(PhaseVector::from_array(arr))
}

impl ExperimentConfig {
    pub fn resolve(command: Command, o: &Opts) -> anyhow::Result<Self> {
        let file = match &o.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("reading config {}", path.display()))?;
                serde_json::from_str::<FileConfig>(&text)
                    .with_context(|| format!("parsing config {}", path.display()))?
            }
            None => FileConfig::default(),
        };
        if let Some(exp) = &file.experiment {
            if exp != command.name() {
                bail!(
                    "config file is for experiment `{exp}`, not `{}`",
                    command.name()
                );
            }
        }
        let base = PhysParams::<f64>::default();
        let params = PhysParams::new(
            o.hbar.or(file.hbar).unwrap_or(base.hbar),
            o.theta.or(file.theta).unwrap_or(base.theta),
            o.mass.or(file.mass).unwrap_or(base.mass),
            o.omega.or(file.omega).unwrap_or(base.omega),
        )?;
        let dq = QuadratureSpec::default();
        let mc_samples = o.mc_samples.or(file.mc_samples);
        let quad = QuadratureSpec {
            hermite_order: o.order.or(file.order).unwrap_or(dq.hermite_order),
            mc_samples: mc_samples.unwrap_or(dq.mc_samples),
            rng_seed: o.seed.or(file.seed).unwrap_or(dq.rng_seed),
            rel_tol: o.rel_tol.or(file.rel_tol).unwrap_or(dq.rel_tol),
        };
        quad.validate()?;
        let function = match (&o.function, file.function) {
            (Some(path), _) => Some(read_function(path)?),
            (None, Some(desc)) => Some(desc.try_into()?),
            (None, None) => None,
        };
        let sweep = o
            .sweep
            .clone()
            .or(file.sweep)
            .map(|s| s.parse::<Sweep>())
            .transpose()?;
        let point = match (&o.point, file.point) {
            (Some(s), _) => parse_point(s)?,
            (None, Some(a)) => PhaseVector::from_array(a),
            (None, None) => PhaseVector::zero(),
        };
        if !point.is_finite() {
            bail!("--point must be finite");
        }
        let flow = match o.flow.or(file.flow) {
            Some(FlowArg::Block) => Flow::Block,
            _ => Flow::CoherentState,
        };
        let mode = match o.mode.or(file.mode) {
            Some(ModeArg::Hbar0) => DynamicsMode::Hbar0,
            _ => DynamicsMode::Trajectory,
        };
        let points = o.points.or(file.points).unwrap_or(65);
        if points < 2 {
            bail!("--points must be at least 2");
        }
        let pairs = o.pairs.or(file.pairs).unwrap_or(100);
        if pairs == 0 {
            bail!("--pairs must be positive");
        }
        Ok(ExperimentConfig {
            command,
            params,
            quad,
            mc: mc_samples.is_some(),
            function,
            sweep,
            out: o.out.clone().or(file.out),
            format: o.format.or(file.format),
            variant: o.variant.or(file.variant).unwrap_or(VariantChoice::A),
            point,
            n_max: o.n_max.or(file.n_max),
            flow,
            mode,
            points,
            pairs,
        })
    }
}
