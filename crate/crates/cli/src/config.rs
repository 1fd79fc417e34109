//! Command-line flags and the validated [`RunConfig`] built from them.

use std::ffi::OsString;
use std::path::PathBuf;

use chiral_potts::tolerances::DEFAULT_DIM_BUDGET;
use chiral_potts::verification::Selection;
use chiral_potts::{ModelParams, Tolerances};
use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const DEFAULT_COUPLING: f64 = 0.5;
pub const FM_LENGTHS: [usize; 3] = [4, 6, 8];
pub const BUDGET_ENV: &str = "CHAIN_DIM_BUDGET";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Spectrum,
    Correlations,
    Verify,
    NegativeControl,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Spectrum => "spectrum",
            Mode::Correlations => "correlations",
            Mode::Verify => "verify",
            Mode::NegativeControl => "negative-control",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(
    name = "cpchain",
    version,
    about = "Exact diagonalization and two-point correlations of the periodic superintegrable chiral Potts chain",
    after_help = "Tolerances: --tol-KEY=VAL with KEY one of hermiticity, commutator, covariance, leakage, sector, \
eigen_residual, solver_residual, degeneracy, root_snap, cross_route, symmetry, midpoint, expectation, negative_control.\n\
Environment: CHAIN_DIM_BUDGET overrides the cap on N^L (default 1048576)."
)]
pub struct Cli {
    /// What to run (same as --mode).
    #[arg(value_enum)]
    pub mode_arg: Option<Mode>,

    #[arg(long, value_enum)]
    pub mode: Option<Mode>,

    /// Number of spin states N.
    #[arg(long = "n", visible_alias = "n-states")]
    pub n_states: Option<usize>,

    /// Chain length L.
    #[arg(long = "len", visible_alias = "length")]
    pub length: Option<usize>,

    /// Coupling λ (default 0.5).
    #[arg(long, allow_negative_numbers = true, conflicts_with_all = ["lambda_start", "lambda_stop", "lambda_steps"])]
    pub lambda: Option<f64>,

    /// First λ of an evenly spaced sweep.
    #[arg(long, allow_negative_numbers = true, requires_all = ["lambda_stop", "lambda_steps"])]
    pub lambda_start: Option<f64>,

    /// Last λ of the sweep (inclusive).
    #[arg(long, allow_negative_numbers = true, requires_all = ["lambda_start", "lambda_steps"])]
    pub lambda_stop: Option<f64>,

    /// Number of sweep points.
    #[arg(long, requires_all = ["lambda_start", "lambda_stop"])]
    pub lambda_steps: Option<usize>,

    /// ground, all, or k=<momentum>.
    #[arg(long)]
    pub which: Option<String>,

    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub output: Format,

    /// Output file (a directory for sweeps). Stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Seed for the random states and operators used by verify and negative-control.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// N=3 midpoint-reality check on the ground states of even chains (L = 4, 6, 8 unless --len is given).
    #[arg(long)]
    pub fm_conjecture: bool,

    /// Largest N^L for which verify also runs the dense cross-check (at most 4096).
    #[arg(long, default_value_t = 1024)]
    pub oracle_max_dim: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CouplingSpec {
    Single { value: f64 },
    Sweep { start: f64, stop: f64, steps: usize },
}

impl CouplingSpec {
    pub fn values(&self) -> Vec<f64> {
        match *self {
            CouplingSpec::Single { value } => vec![value],
            CouplingSpec::Sweep { start, steps: 1, .. } => vec![start],
            CouplingSpec::Sweep { start, stop, steps } => (0..steps)
                .map(|i| start + (stop - start) * i as f64 / (steps - 1) as f64)
                .collect(),
        }
    }

    pub fn is_sweep(&self) -> bool {
        matches!(self, CouplingSpec::Sweep { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub n_states: usize,
    /// One entry, except for the `--fm-conjecture` preset without `--len`.
    pub lengths: Vec<usize>,
    pub coupling: CouplingSpec,
    pub mode: Mode,
    pub which: Selection,
    pub output_format: Format,
    pub output_path: Option<PathBuf>,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub fm_conjecture: bool,
    pub oracle_max_dim: usize,
    pub dim_budget: usize,
}

impl RunConfig {
    pub fn params(&self, length: usize, coupling: f64) -> Result<ModelParams, CliError> {
        Ok(ModelParams::with_budget(self.n_states, length, coupling, self.dim_budget)?)
    }

    /// Parse process-style arguments (first element is the program name).
    pub fn from_args<I, T>(args: I, budget_env: Option<String>) -> Result<Self, CliError>
    where
        I: IntoIterator<Item = T>,
        T: Into<OsString>,
    {
        let (rest, overrides) = split_tolerance_flags(args.into_iter().map(Into::into).collect())?;
        let cli = Cli::try_parse_from(rest).map_err(CliError::Clap)?;
        let mut tolerances = Tolerances::default();
        for (key, value) in overrides {
            tolerances.set(&key, value).map_err(|e| CliError::Usage(e.to_string()))?;
        }
        let dim_budget = match budget_env {
            None => DEFAULT_DIM_BUDGET,
            Some(s) => s
                .trim()
                .parse::<usize>()
                .ok()
                .filter(|&b| b > 0)
                .ok_or_else(|| CliError::Usage(format!("{BUDGET_ENV} must be a positive integer, got {s:?}")))?,
        };
        Self::from_cli(cli, tolerances, dim_budget)
    }

    fn from_cli(cli: Cli, tolerances: Tolerances, dim_budget: usize) -> Result<Self, CliError> {
        let mode = match (cli.mode_arg, cli.mode) {
            (Some(a), Some(b)) if a != b => {
                return Err(CliError::Usage(format!("conflicting modes {} and {}", a.name(), b.name())))
            }
            (a, b) => a.or(b),
        };
        let coupling = match (cli.lambda, cli.lambda_start, cli.lambda_stop, cli.lambda_steps) {
            (Some(v), ..) => CouplingSpec::Single { value: v },
            (None, Some(start), Some(stop), Some(steps)) => {
                if steps < 1 {
                    return Err(CliError::Usage("--lambda-steps must be >= 1".into()));
                }
                CouplingSpec::Sweep { start, stop, steps }
            }
            _ => CouplingSpec::Single { value: DEFAULT_COUPLING },
        };
        if coupling.values().iter().any(|v| !v.is_finite()) {
            return Err(CliError::Usage("coupling values must be finite".into()));
        }
        if cli.oracle_max_dim > chiral_potts::tolerances::DENSE_ORACLE_MAX_DIM {
            return Err(CliError::Usage(format!(
                "--oracle-max-dim is capped at {}",
                chiral_potts::tolerances::DENSE_ORACLE_MAX_DIM
            )));
        }
        let which_flag = cli
            .which
            .as_deref()
            .map(str::parse::<Selection>)
            .transpose()
            .map_err(|e| CliError::Usage(e.to_string()))?;

        let (n_states, lengths, mode, which) = if cli.fm_conjecture {
            if cli.n_states.is_some_and(|n| n != 3) {
                return Err(CliError::Usage("--fm-conjecture fixes N = 3".into()));
            }
            let lengths = match cli.length {
                Some(l) if l % 2 != 0 => {
                    return Err(CliError::Usage("--fm-conjecture needs an even --len".into()))
                }
                Some(l) => vec![l],
                None => FM_LENGTHS.to_vec(),
            };
            (3, lengths, mode.unwrap_or(Mode::Correlations), which_flag.unwrap_or(Selection::Ground))
        } else {
            let n = cli.n_states.ok_or_else(|| CliError::Usage("--n is required".into()))?;
            let l = cli.length.ok_or_else(|| CliError::Usage("--len is required".into()))?;
            let mode = mode.ok_or_else(|| {
                CliError::Usage("a mode is required: spectrum, correlations, verify or negative-control".into())
            })?;
            (n, vec![l], mode, which_flag.unwrap_or(Selection::All))
        };

        let config = RunConfig {
            n_states,
            lengths,
            coupling,
            mode,
            which,
            output_format: cli.output,
            output_path: cli.out,
            seed: cli.seed,
            tolerances,
            fm_conjecture: cli.fm_conjecture,
            oracle_max_dim: cli.oracle_max_dim,
            dim_budget,
        };
        // validate every (L, λ) up front so budget errors surface before any work
        for &l in &config.lengths {
            for v in config.coupling.values() {
                let p = config.params(l, v)?;
                if let Selection::Sector(k) = config.which {
                    if k >= p.length {
                        return Err(CliError::Usage(format!("momentum k={k} must be below L={}", p.length)));
                    }
                }
            }
        }
        Ok(config)
    }
}

/// Pull `--tol-KEY=VAL` / `--tol-KEY VAL` out of the argument list.
fn split_tolerance_flags(args: Vec<OsString>) -> Result<(Vec<OsString>, Vec<(String, f64)>), CliError> {
    let mut rest = Vec::with_capacity(args.len());
    let mut overrides = Vec::new();
    let mut iter = args.into_iter();
    while let Some(arg) = iter.next() {
        let Some(s) = arg.to_str().and_then(|s| s.strip_prefix("--tol-")).map(str::to_owned) else {
            rest.push(arg);
            continue;
        };
        let (key, value) = match s.split_once('=') {
            Some((k, v)) => (k.to_owned(), v.to_owned()),
            None => {
                let v = iter
                    .next()
                    .and_then(|v| v.into_string().ok())
                    .ok_or_else(|| CliError::Usage(format!("--tol-{s} needs a value")))?;
                (s, v)
            }
        };
        let value: f64 = value
            .parse()
            .map_err(|_| CliError::Usage(format!("--tol-{key}: cannot parse {value:?} as a number")))?;
        overrides.push((key, value));
    }
    Ok((rest, overrides))
}
