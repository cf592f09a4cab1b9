//! `msgain` command-line front end.
//!
//! Exit codes: 0 stable/feasible/bounded, 2 unstable/infeasible/divergent,
//! 3 inconclusive, 1 on any error.

use std::collections::BTreeMap;
use std::io::Write;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::error::{Error, Result};
use crate::io::{parse_covariance, parse_plant, read_source, Plant};
use crate::lti::{
    closed_loop_block, transfer_matrix_to_state_space, FrequencyGrid, TransferMatrix, DEFAULT_GRID_POINTS,
};
use crate::mc::{simulate_loop, simulate_two_agent, Classification, NoiseModel, SimConfig};
use crate::ms::{
    is_ms_stable, ms_operator_radius, MsMethod, MsVerdict, UncertaintyCovariance, DEFAULT_POWER_ITERS,
};
use crate::stabilizability::{
    condition_case1, condition_case2, condition_consensus, min_g, optimal_consensus_gain,
    DEFAULT_REFINE_TOL, DEFAULT_SEARCH_GRID,
};
use crate::sweep::{run_sweep, Axis, Param, SweepMode, SweepSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_NEGATIVE: i32 = 2;
pub const EXIT_INCONCLUSIVE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "msgain", version, about = "Mean-square stability analysis under correlated stochastic uncertainty")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mean-square small-gain test of a stable block, or of the closed loop
    /// formed with a constant gain.
    Analyze(AnalyzeArgs),
    /// Closed-form stabilizability or consensusability condition.
    Stabilizability(StabArgs),
    /// Sweep a condition over a parameter grid and emit CSV or JSON.
    Sweep(SweepArgs),
    /// Monte Carlo simulation of the stochastic loop.
    Simulate(SimArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RadiusMethod {
    Kron,
    Power,
}

#[derive(Debug, Args)]
pub struct CovarianceArgs {
    /// Covariance JSON (inline or path): {"s1sq","s2sq","s12"} or {"pi": [[..]]}
    #[arg(long)]
    pub pi: Option<String>,
    #[arg(long, requires_all = ["s2sq", "s12"], conflicts_with = "pi")]
    pub s1sq: Option<f64>,
    #[arg(long)]
    pub s2sq: Option<f64>,
    #[arg(long)]
    pub s12: Option<f64>,
    /// Multiply the covariance by this factor.
    #[arg(long, default_value_t = 1.0)]
    pub pi_scale: f64,
}

impl CovarianceArgs {
    fn load(&self) -> Result<UncertaintyCovariance> {
        let base = match (&self.pi, self.s1sq, self.s2sq, self.s12) {
            (Some(src), _, _, _) => parse_covariance(&read_source(src)?)?,
            (None, Some(a), Some(b), Some(c)) => UncertaintyCovariance::two_channel(a, b, c)?,
            _ => return Err(Error::Parse("give --pi or all of --s1sq, --s2sq, --s12".into())),
        };
        if self.pi_scale == 1.0 {
            Ok(base)
        } else {
            base.scaled(self.pi_scale)
        }
    }
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Plant JSON (inline or path): {"num": [..], "den": [..]}
    #[arg(long)]
    pub plant: String,
    #[command(flatten)]
    pub cov: CovarianceArgs,
    /// Close the loop with this constant gain first.
    #[arg(long, allow_negative_numbers = true)]
    pub gain: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
    pub grid_points: usize,
    #[arg(long, value_enum, default_value_t = RadiusMethod::Kron)]
    pub method: RadiusMethod,
    /// Relative convergence tolerance for the power method.
    #[arg(long, default_value_t = 1e-13)]
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StabKind {
    Case1,
    Case2,
    Consensus,
}

#[derive(Debug, Args)]
pub struct StabArgs {
    #[arg(value_enum)]
    pub kind: StabKind,
    #[arg(long, allow_negative_numbers = true)]
    pub p1: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub s1: Option<f64>,
    #[command(flatten)]
    pub cov: CovarianceArgs,
    /// Also report the minimum of g over all closed-loop poles (case2).
    #[arg(long)]
    pub sharpen: bool,
    #[arg(long, default_value_t = DEFAULT_REFINE_TOL)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Sweep specification JSON (inline or path); overrides the flags below.
    #[arg(long)]
    pub spec: Option<String>,
    #[arg(long, default_value = "region3d")]
    pub mode: String,
    /// Swept axis as name:min:max:steps (repeatable).
    #[arg(long = "axis")]
    pub axes: Vec<String>,
    /// Fixed parameter as name=value (repeatable).
    #[arg(long = "fixed", allow_hyphen_values = true)]
    pub fixed: Vec<String>,
    #[arg(long)]
    pub no_psd_filter: bool,
    #[arg(long)]
    pub out: Option<String>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SimKind {
    Loop,
    TwoAgent,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    #[arg(value_enum)]
    pub kind: SimKind,
    /// Plant JSON for the loop simulation.
    #[arg(long)]
    pub plant: Option<String>,
    /// Constant gain (loop: closes the loop around the plant; two-agent:
    /// protocol gain, defaults to the mean-square optimal gain).
    #[arg(long, allow_negative_numbers = true)]
    pub gain: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub p1: Option<f64>,
    #[command(flatten)]
    pub cov: CovarianceArgs,
    #[arg(long, default_value_t = 10_000)]
    pub horizon: usize,
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Variance of the white drive (default 1 for loop, 0 for two-agent).
    #[arg(long)]
    pub input_variance: Option<f64>,
    /// Keep every n-th trajectory sample in the JSON report.
    #[arg(long, default_value_t = 1)]
    pub decimate: usize,
    #[arg(long)]
    pub out: Option<String>,
}

/// Result of one command: text for stdout and the process exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub stdout: String,
    pub code: i32,
}

pub fn execute(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Analyze(a) => cmd_analyze(&a),
        Command::Stabilizability(a) => cmd_stabilizability(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Simulate(a) => cmd_simulate(&a),
    }
}

fn pretty(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).unwrap_or_default();
    s.push('\n');
    s
}

fn analysis_block(plant: Plant, gain: Option<f64>) -> Result<TransferMatrix> {
    match (plant, gain) {
        (Plant::Siso(tf), Some(k)) => closed_loop_block(&tf, k),
        (Plant::Matrix(_), Some(_)) => Err(Error::Parse("--gain needs a SISO plant".into())),
        (p, None) => Ok(p.into_matrix()),
    }
}

pub fn cmd_analyze(a: &AnalyzeArgs) -> Result<Outcome> {
    let plant = parse_plant(&read_source(&a.plant)?)?;
    let pi = a.cov.load()?;
    let grid = FrequencyGrid::new(a.grid_points)?;
    let g = analysis_block(plant, a.gain)?;
    let verdict = match a.method {
        RadiusMethod::Kron => is_ms_stable(&g, &pi, grid)?,
        RadiusMethod::Power => {
            let rho = ms_operator_radius(&g, &pi, grid, DEFAULT_POWER_ITERS, a.tol)?;
            MsVerdict::from_rho(rho, MsMethod::PowerIter, grid.points())
        }
    };
    let code = if verdict.stable { EXIT_OK } else { EXIT_NEGATIVE };
    Ok(Outcome {
        stdout: pretty(&serde_json::to_value(&verdict)?),
        code,
    })
}

pub fn cmd_stabilizability(a: &StabArgs) -> Result<Outcome> {
    let pi = a.cov.load()?;
    let verdict = match a.kind {
        StabKind::Case1 => condition_case1(a.p1, &pi)?,
        StabKind::Case2 => {
            let s1 = a.s1.ok_or_else(|| Error::Parse("case2 needs --s1".into()))?;
            condition_case2(a.p1, s1, &pi)?
        }
        StabKind::Consensus => condition_consensus(a.p1, &pi)?,
    };
    let mut out = serde_json::to_value(verdict)?;
    if a.sharpen {
        match (a.kind, a.s1) {
            (StabKind::Case2, Some(s1)) => {
                let (x, g) = min_g(a.p1, s1, &pi, DEFAULT_SEARCH_GRID, a.tol)?;
                out["min_g"] = json!({ "x": x, "g": g, "feasible": g < 1.0 });
            }
            _ => return Err(Error::Parse("--sharpen applies to case2 only".into())),
        }
    }
    let code = if verdict.feasible { EXIT_OK } else { EXIT_NEGATIVE };
    Ok(Outcome {
        stdout: pretty(&out),
        code,
    })
}

fn parse_fixed(items: &[String]) -> Result<BTreeMap<Param, f64>> {
    items
        .iter()
        .map(|item| {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::InvalidSweep(format!("fixed value {item:?} must be name=value")))?;
            let v: f64 = v
                .parse()
                .map_err(|_| Error::InvalidSweep(format!("fixed value {item:?} is not a number")))?;
            Ok((k.parse()?, v))
        })
        .collect()
}

fn write_output(path: &Option<String>, text: &str) -> Result<String> {
    match path {
        Some(p) => {
            let mut f = std::fs::File::create(p).map_err(|e| Error::Io(format!("{p}: {e}")))?;
            f.write_all(text.as_bytes())
                .map_err(|e| Error::Io(format!("{p}: {e}")))?;
            Ok(String::new())
        }
        None => Ok(text.to_string()),
    }
}

pub fn cmd_sweep(a: &SweepArgs) -> Result<Outcome> {
    let spec = match &a.spec {
        Some(src) => serde_json::from_str::<SweepSpec>(&read_source(src)?)?,
        None => SweepSpec::new(
            a.mode.parse::<SweepMode>()?,
            a.axes.iter().map(|s| s.parse::<Axis>()).collect::<Result<_>>()?,
            parse_fixed(&a.fixed)?,
            !a.no_psd_filter,
        ),
    };
    let result = run_sweep(&spec)?;
    let text = match a.format {
        Format::Csv => result.to_csv(),
        Format::Json => pretty(&result.to_json()),
    };
    Ok(Outcome {
        stdout: write_output(&a.out, &text)?,
        code: EXIT_OK,
    })
}

pub fn cmd_simulate(a: &SimArgs) -> Result<Outcome> {
    let pi = a.cov.load()?;
    let report = match a.kind {
        SimKind::Loop => {
            let src = a.plant.as_ref().ok_or_else(|| Error::Parse("loop simulation needs --plant".into()))?;
            let g = analysis_block(parse_plant(&read_source(src)?)?, a.gain)?;
            let model = NoiseModel::new(&pi, a.seed)?;
            let cfg = SimConfig {
                horizon: a.horizon,
                trials: a.trials,
                input_variance: a.input_variance.unwrap_or(1.0),
                initial_state: Vec::new(),
                seed: a.seed.wrapping_add(1),
            };
            simulate_loop(&transfer_matrix_to_state_space(&g), &model, &cfg)?
        }
        SimKind::TwoAgent => {
            let p1 = a.p1.ok_or_else(|| Error::Parse("two-agent simulation needs --p1".into()))?;
            let k = match a.gain {
                Some(k) => k,
                None => optimal_consensus_gain(p1, &pi)?,
            };
            let model = NoiseModel::new(&pi, a.seed)?;
            let cfg = SimConfig {
                horizon: a.horizon,
                trials: a.trials,
                input_variance: a.input_variance.unwrap_or(0.0),
                initial_state: Vec::new(),
                seed: a.seed.wrapping_add(1),
            };
            simulate_two_agent(p1, k, &model, &cfg)?
        }
    };
    let code = match report.classification {
        Classification::Bounded => EXIT_OK,
        Classification::Divergent => EXIT_NEGATIVE,
        Classification::Inconclusive => EXIT_INCONCLUSIVE,
    };
    let text = pretty(&report.to_json(a.decimate));
    Ok(Outcome {
        stdout: write_output(&a.out, &text)?,
        code,
    })
}

/// Cap the rayon pool from `MSGAIN_THREADS`, if set.
pub fn configure_threads() {
    if let Some(n) = std::env::var("MSGAIN_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

/// Parse `args`, run, print, and return the exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(out) => {
            print!("{}", out.stdout);
            out.code
        }
        Err(e) => {
            eprintln!("msgain: {e}");
            EXIT_ERROR
        }
    }
}
