//! Command-line front end for the bellvar toolkit.
//!
//! Subcommands: `eval` (inequality value at fixed settings), `optimize`
//! (search for maximal violation), `sweep` (parameter grids to CSV/JSON),
//! `sample` (Monte Carlo correlation estimate), `concurrence`, and
//! `validate` (decomposition invariant checks).
//!
//! Exit codes: 0 on success, 1 on domain or validation errors, 2 on usage
//! errors. Results go to standard output as JSON unless `--csv`/`--out`
//! redirect them.

use std::f64::consts::FRAC_PI_4;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use bellvar_core::bell::{self, MeasurementSettings};
use bellvar_core::optimize::{maximize_violation, ObservableMode, OptimizerConfig};
use bellvar_core::qstate::{
    self, mems_decomposition, mems_state, separable_state, validate_decomposition,
    werner_decomposition, werner_state, Decomposition, QubitPairState, RawDecomposition,
};
use bellvar_core::sampler::sample_correlation;
use bellvar_core::sweep::{
    run_sweep, write_csv_path, DecompositionChoice, GridRange, Preset, SweepFamily, SweepSpec,
};
use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

#[derive(Parser)]
#[command(name = "bellvar", version, about = "Two-qubit Bell-inequality toolkit")]
struct Cli {
    /// Worker threads for parallel stages (0 or absent: all cores).
    #[arg(long, global = true, env = "BELLVAR_JOBS")]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the inequality for a decomposition at fixed plane angles.
    Eval(EvalArgs),
    /// Search for the measurement settings that maximize the inequality value.
    Optimize(OptimizeArgs),
    /// Run a parameter sweep, one optimization per grid point.
    Sweep(SweepArgs),
    /// Estimate one correlation ⟨A ⊗ B⟩ by simulated measurements.
    Sample(SampleArgs),
    /// Wootters concurrence of a two-qubit state.
    Concurrence(ConcurrenceArgs),
    /// Check decomposition invariants and report the residuals.
    Validate(ValidateArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Family {
    Mems,
    Werner,
    Separable,
}

#[derive(Clone, Copy, ValueEnum)]
enum DecompKind {
    Product,
    Bell,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepDecomp {
    Product,
    Bell,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Plane,
    Bloch,
}

impl From<Mode> for ObservableMode {
    fn from(mode: Mode) -> Self {
        match mode {
            Mode::Plane => ObservableMode::Plane,
            Mode::Bloch => ObservableMode::Bloch,
        }
    }
}

/// A decomposition, from a built-in family or a JSON file.
#[derive(Args)]
struct DecompositionSource {
    /// Built-in family.
    #[arg(long, value_enum)]
    family: Option<Family>,
    /// Mixing parameter γ ∈ [0, 1] (mems and werner families).
    #[arg(long, allow_negative_numbers = true,
          required_if_eq_any([("family", "mems"), ("family", "werner")]))]
    gamma: Option<f64>,
    /// Entanglement angle ξ of the werner family [default: π/4].
    #[arg(long, allow_negative_numbers = true)]
    xi: Option<f64>,
    /// Anti-diagonal weight x ∈ [−1/4, 1/4] (separable family).
    #[arg(
        long,
        allow_negative_numbers = true,
        required_if_eq("family", "separable")
    )]
    x: Option<f64>,
    /// Which decomposition of the separable family to use.
    #[arg(long, value_enum, required_if_eq("family", "separable"))]
    decomposition: Option<DecompKind>,
    /// Decomposition JSON file (weights and amplitudes, optional matrix).
    #[arg(long, conflicts_with_all = ["gamma", "xi", "x", "decomposition"])]
    input: Option<PathBuf>,
}

impl DecompositionSource {
    fn load(&self) -> Result<Decomposition> {
        if let Some(path) = &self.input {
            let text = read_file(path)?;
            let decomposition: Decomposition = serde_json::from_str(&text)
                .with_context(|| format!("parsing decomposition from {}", path.display()))?;
            return Ok(decomposition);
        }
        let family = self.family.expect("clap guarantees a source");
        Ok(match family {
            Family::Mems => mems_decomposition(self.gamma.expect("required"))?,
            Family::Werner => {
                werner_decomposition(self.gamma.expect("required"), self.xi.unwrap_or(FRAC_PI_4))?
            }
            Family::Separable => {
                let x = self.x.expect("required");
                match self.decomposition.expect("required") {
                    DecompKind::Product => qstate::product_decomposition(x)?,
                    DecompKind::Bell => qstate::bell_decomposition(x)?,
                }
            }
        })
    }
}

/// A state, from a built-in family or a JSON file (state or decomposition).
#[derive(Args)]
struct StateSource {
    /// Built-in family.
    #[arg(long, value_enum)]
    family: Option<Family>,
    /// Mixing parameter γ ∈ [0, 1] (mems and werner families).
    #[arg(long, allow_negative_numbers = true,
          required_if_eq_any([("family", "mems"), ("family", "werner")]))]
    gamma: Option<f64>,
    /// Entanglement angle ξ of the werner family [default: π/4].
    #[arg(long, allow_negative_numbers = true)]
    xi: Option<f64>,
    /// Anti-diagonal weight x ∈ [−1/4, 1/4] (separable family).
    #[arg(
        long,
        allow_negative_numbers = true,
        required_if_eq("family", "separable")
    )]
    x: Option<f64>,
    /// State JSON file ({"matrix": …}); a decomposition file also works.
    #[arg(long, conflicts_with_all = ["gamma", "xi", "x"])]
    input: Option<PathBuf>,
}

impl StateSource {
    fn load(&self) -> Result<QubitPairState> {
        if let Some(path) = &self.input {
            let text = read_file(path)?;
            if let Ok(state) = serde_json::from_str::<QubitPairState>(&text) {
                return Ok(state);
            }
            let decomposition: Decomposition = serde_json::from_str(&text).with_context(|| {
                format!("parsing a state or decomposition from {}", path.display())
            })?;
            return Ok(decomposition.source().clone());
        }
        let family = self.family.expect("clap guarantees a source");
        Ok(match family {
            Family::Mems => mems_state(self.gamma.expect("required"))?,
            Family::Werner => {
                werner_state(self.gamma.expect("required"), self.xi.unwrap_or(FRAC_PI_4))?
            }
            Family::Separable => separable_state(self.x.expect("required"))?,
        })
    }
}

/// Optimizer settings assembled from `--config` plus individual overrides.
#[derive(Args)]
struct OptimizerFlags {
    /// Optimizer configuration JSON; the flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Observable parametrization: plane (4 angles) or bloch (8 angles).
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Coarse grid points per axis.
    #[arg(long)]
    grid: Option<usize>,
    /// How many of the best grid points start a refinement.
    #[arg(long)]
    seeds: Option<usize>,
    /// Simplex iteration budget per refinement (0 disables refinement).
    #[arg(long)]
    refine_iterations: Option<usize>,
    /// Convergence tolerance on the refinement simplex spread.
    #[arg(long)]
    tolerance: Option<f64>,
    /// Seed for the refinement jitter; echoed in the output.
    #[arg(long)]
    seed: Option<u64>,
}

impl OptimizerFlags {
    fn build(&self) -> Result<OptimizerConfig> {
        let mut config = match &self.config {
            Some(path) => {
                let text = read_file(path)?;
                serde_json::from_str(&text)
                    .with_context(|| format!("parsing optimizer config from {}", path.display()))?
            }
            None => match self.mode {
                Some(Mode::Bloch) => OptimizerConfig::bloch(),
                _ => OptimizerConfig::plane(),
            },
        };
        if let Some(mode) = self.mode {
            config.observable_mode = mode.into();
        }
        if let Some(grid) = self.grid {
            config.coarse_grid_points_per_axis = grid;
        }
        if let Some(seeds) = self.seeds {
            config.refine_seeds = seeds;
        }
        if let Some(iterations) = self.refine_iterations {
            config.max_refine_iterations = iterations;
        }
        if let Some(tolerance) = self.tolerance {
            config.convergence_tolerance = tolerance;
        }
        if let Some(seed) = self.seed {
            config.rng_seed = seed;
        }
        Ok(config)
    }
}

#[derive(Args)]
#[command(group = ArgGroup::new("source").required(true).args(["family", "input"]))]
struct EvalArgs {
    #[command(flatten)]
    source: DecompositionSource,
    /// Plane angles a,b,c,d in radians (a, d on the first qubit).
    #[arg(
        long,
        required = true,
        value_delimiter = ',',
        allow_hyphen_values = true
    )]
    angles: Vec<f64>,
    /// Interpret --angles in degrees.
    #[arg(long)]
    degrees: bool,
    /// Write the JSON report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
#[command(group = ArgGroup::new("source").required(true).args(["family", "input"]))]
struct OptimizeArgs {
    #[command(flatten)]
    source: DecompositionSource,
    #[command(flatten)]
    optimizer: OptimizerFlags,
    /// Write the JSON result here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
#[command(group = ArgGroup::new("what").required(true).args(["preset", "family"]))]
struct SweepArgs {
    /// Predefined sweep: fig1a, fig1b, fig2, fig3.
    #[arg(long, value_parser = parse_preset)]
    preset: Option<Preset>,
    /// Custom sweep family.
    #[arg(long, value_enum)]
    family: Option<Family>,
    /// γ grid as start:stop:steps, or one fixed value (mems, werner).
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true,
          required_if_eq_any([("family", "mems"), ("family", "werner")]))]
    gamma_range: Option<GridRange>,
    /// ξ grid as start:stop:steps, or one fixed value [default: π/4] (werner).
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
    xi_range: Option<GridRange>,
    /// x grid as start:stop:steps, or one fixed value (separable).
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true,
          required_if_eq("family", "separable"))]
    x_range: Option<GridRange>,
    /// Decompositions evaluated by a separable sweep.
    #[arg(long, value_enum, default_value = "both")]
    decompositions: SweepDecomp,
    #[command(flatten)]
    optimizer: OptimizerFlags,
    /// Write rows as CSV to this path.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Write the full JSON result (rows plus per-row details) to this path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
#[command(group = ArgGroup::new("source").required(true).args(["family", "input"]))]
struct SampleArgs {
    #[command(flatten)]
    source: StateSource,
    /// Plane angles t1,t2 in radians for the two observables.
    #[arg(
        long,
        required = true,
        value_delimiter = ',',
        allow_hyphen_values = true
    )]
    angles: Vec<f64>,
    /// Interpret --angles in degrees.
    #[arg(long)]
    degrees: bool,
    /// Number of simulated measurement trials.
    #[arg(long, default_value_t = 1_000_000)]
    trials: u64,
    /// RNG seed; echoed in the output.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the JSON estimate here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
#[command(group = ArgGroup::new("source").required(true).args(["family", "input"]))]
struct ConcurrenceArgs {
    #[command(flatten)]
    source: StateSource,
    /// Write the JSON value here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Decomposition JSON file to check.
    #[arg(long)]
    input: PathBuf,
    /// Write the JSON report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_preset(text: &str) -> std::result::Result<Preset, String> {
    text.parse().map_err(|e: bellvar_core::Error| e.to_string())
}

/// "start:stop:steps" or a single number for a fixed parameter.
fn parse_range(text: &str) -> std::result::Result<GridRange, String> {
    let parts: Vec<&str> = text.split(':').collect();
    let number = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| format!("not a number: {s:?}"))
    };
    match parts.as_slice() {
        [single] => Ok(GridRange::fixed(number(single)?)),
        [start, stop, steps] => {
            let steps = steps
                .trim()
                .parse::<usize>()
                .map_err(|_| format!("not a step count: {steps:?}"))?;
            Ok(GridRange::new(number(start)?, number(stop)?, steps))
        }
        _ => Err("expected start:stop:steps or a single value".to_string()),
    }
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

/// Arity check for a comma-separated angle list; wrong counts are usage
/// errors (exit 2), matching clap's own diagnostics.
fn require_angle_count(angles: &[f64], expected: usize) {
    if angles.len() != expected {
        let mut command = <Cli as clap::CommandFactory>::command();
        command
            .error(
                clap::error::ErrorKind::WrongNumberOfValues,
                format!(
                    "--angles needs {expected} comma-separated values, got {}",
                    angles.len()
                ),
            )
            .exit();
    }
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value).context("serializing result")?;
    match out {
        Some(path) => {
            fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))?
        }
        None => println!("{text}"),
    }
    Ok(())
}

fn to_radians(angles: &[f64], degrees: bool) -> Vec<f64> {
    if degrees {
        angles.iter().map(|a| a.to_radians()).collect()
    } else {
        angles.to_vec()
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .context("initializing the worker pool")?;
    }
    match cli.command {
        Command::Eval(args) => {
            require_angle_count(&args.angles, 4);
            let decomposition = args.source.load()?;
            let a = to_radians(&args.angles, args.degrees);
            let settings = MeasurementSettings::plane_angles(a[0], a[1], a[2], a[3])?;
            let report = bell::evaluate(&decomposition, &settings);
            emit(&report, args.out.as_deref())
        }
        Command::Optimize(args) => {
            let decomposition = args.source.load()?;
            let config = args.optimizer.build()?;
            let result = maximize_violation(&decomposition, &config)?;
            emit(
                &json!({ "config": config, "result": result }),
                args.out.as_deref(),
            )
        }
        Command::Sweep(args) => {
            let mut spec = match args.preset {
                Some(preset) => SweepSpec::preset(preset),
                None => {
                    let family = match args.family.expect("clap guarantees a source") {
                        Family::Mems => SweepFamily::Mems {
                            gamma: args.gamma_range.expect("required"),
                        },
                        Family::Werner => SweepFamily::Werner {
                            gamma: args.gamma_range.expect("required"),
                            xi: args.xi_range.unwrap_or_else(|| GridRange::fixed(FRAC_PI_4)),
                        },
                        Family::Separable => SweepFamily::Separable {
                            x: args.x_range.expect("required"),
                            decompositions: match args.decompositions {
                                SweepDecomp::Product => DecompositionChoice::Product,
                                SweepDecomp::Bell => DecompositionChoice::Bell,
                                SweepDecomp::Both => DecompositionChoice::Both,
                            },
                        },
                    };
                    SweepSpec::custom(family)
                }
            };
            spec.optimizer = args.optimizer.build()?;
            let result = run_sweep(&spec)?;
            if let Some(path) = &args.csv {
                let path = path.to_str().context("CSV path is not valid UTF-8")?;
                write_csv_path(&result.rows, path)?;
            }
            if let Some(path) = &args.out {
                emit(&result, Some(path))?;
            }
            if args.csv.is_none() && args.out.is_none() {
                emit(&result.rows, None)?;
            }
            Ok(())
        }
        Command::Sample(args) => {
            require_angle_count(&args.angles, 2);
            let state = args.source.load()?;
            let a = to_radians(&args.angles, args.degrees);
            let first = bell::Observable::plane(a[0])?;
            let second = bell::Observable::plane(a[1])?;
            let estimate = sample_correlation(&state, &first, &second, args.trials, args.seed);
            let analytic = bell::correlation(&state, &first, &second);
            emit(
                &json!({
                    "estimate": estimate,
                    "analytic": analytic,
                    "seed": args.seed,
                    "first": first,
                    "second": second,
                }),
                args.out.as_deref(),
            )
        }
        Command::Concurrence(args) => {
            let state = args.source.load()?;
            let value = qstate::concurrence(&state);
            emit(&json!({ "concurrence": value }), args.out.as_deref())
        }
        Command::Validate(args) => {
            let text = read_file(&args.input)?;
            let raw: RawDecomposition = serde_json::from_str(&text)
                .with_context(|| format!("parsing decomposition from {}", args.input.display()))?;
            let report = validate_decomposition(&raw);
            let pass = report.pass;
            emit(&report, args.out.as_deref())?;
            if !pass {
                bail!("decomposition checks failed");
            }
            Ok(())
        }
    }
}
