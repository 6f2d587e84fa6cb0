//! Command-line front end for the spatial-sim generators.
//!
//! Every generator run writes its artifacts under `--out PREFIX` and a
//! `PREFIX.meta.json` sidecar recording the subcommand, all parameters, the
//! seed and the crate version. `replay` reruns a sidecar.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod output;
pub mod suites;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{ArgMatches, Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use serde_json::Value;
use spatial_sim::circulant::{benchmark_scaling, plan_embedding_padded, plan_torus, sample_embedded, sample_torus};
use spatial_sim::dense::sample_moving_average;
use spatial_sim::fractional::{
    plan_fbf, plan_fbm, plan_fgn_sheet, sample_fractional_wiener_sheet_pair, sample_wiener_path, HurstParam,
};
use spatial_sim::gmrf::{GmrfSampler, LatticeGmrfSpec};
use spatial_sim::levy::{refine_path, sample_gamma_sheet, sample_levy_path, DiscKernel, GammaCell, LevyPathSpec, LevySheetSpec};
use spatial_sim::mcmc::{run_conditional_strauss, run_rj_strauss, StraussParams, StraussRun};
use spatial_sim::pointproc::{
    sample_cox, sample_hawkes, sample_marked_poisson, sample_neyman_scott, sample_poisson_inversion,
    sample_poisson_thinning, sample_shot_noise_cox, shot_noise_g, ClusterKernel, HawkesParams, IntensitySpec,
    MarkDistribution, Window,
};
use spatial_sim::{CovarianceModel, Grid2D, RngStream};

pub use output::{pgm_bytes, write_pgm, write_pgm_masked, Artifact, Sidecar};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Parameters that are not recorded in the sidecar's `params`.
const UNRECORDED: [&str; 2] = ["seed", "out"];

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Run(String),
}

impl From<spatial_sim::Error> for CliError {
    fn from(e: spatial_sim::Error) -> Self {
        CliError::Run(e.to_string())
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    GridBinary,
    Pgm,
    Csv,
    JsonMeta,
}

#[derive(Parser, Debug)]
#[command(name = "spatial-sim", version, about = "Simulate random fields, point processes and Levy processes")]
pub struct Cli {
    /// Root seed; realization k uses sub-stream k.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output prefix.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Comma-separated output formats (the sidecar is always written).
    #[arg(long, global = true, value_delimiter = ',')]
    format: Vec<Format>,
    /// Number of independent realizations.
    #[arg(long, global = true, default_value_t = 1)]
    realizations: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Moving average of white noise over a disc.
    GaussianMa(MaArgs),
    /// Stationary field on the unit torus, covariance exp(-c·d^alpha).
    Torus(TorusArgs),
    /// Circulant embedding on a rectangular grid.
    Embed(EmbedArgs),
    /// Lattice Gaussian Markov random field.
    Gmrf(GmrfArgs),
    /// Inhomogeneous Poisson process.
    Poisson(PoissonArgs),
    /// Poisson process with iid marks.
    Marked(MarkedArgs),
    /// Hawkes branching cluster process.
    Hawkes(HawkesArgs),
    /// Matern cluster process.
    Matern(MaternArgs),
    /// Thomas cluster process.
    Thomas(ThomasArgs),
    /// Log-Gaussian Cox process driven by a torus field.
    Cox(CoxArgs),
    /// Shot-noise G Cox process.
    Snox(SnoxArgs),
    /// Strauss process with a fixed number of points (Metropolis-Hastings).
    StraussCond(StraussCondArgs),
    /// Strauss process by birth-death reversible jump.
    StraussRj(StraussRjArgs),
    /// Standard Wiener process on [0, 1].
    Wiener(WienerArgs),
    /// Fractional Brownian motion on [0, 1].
    Fbm(FbmArgs),
    /// Fractional Wiener sheet on [0, 1]^2.
    Sheet(SheetArgs),
    /// Fractional Brownian field on the quarter disk.
    Fbf(FbfArgs),
    /// Truncated gamma Levy path, refined through a list of truncation levels.
    LevyPath(LevyPathArgs),
    /// Gamma Levy sheet with a disc kernel.
    LevySheet(LevySheetArgs),
    /// Run a validation suite.
    Validate(ValidateArgs),
    /// Circulant vs dense Cholesky scaling benchmark.
    Bench(BenchArgs),
    /// Rerun the command recorded in a sidecar.
    Replay(ReplayArgs),
}

#[derive(Args, Debug)]
struct MaArgs {
    #[arg(long, default_value_t = 256)]
    n: usize,
    #[arg(long, default_value_t = 6.0)]
    r: f64,
}

#[derive(Args, Debug)]
struct TorusArgs {
    #[arg(long, default_value_t = 256)]
    n: usize,
    #[arg(long, default_value_t = 8.0)]
    c: f64,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EmbedModel {
    Wavy,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Family {
    Exponential,
    Gaussian,
}

#[derive(Args, Debug)]
struct EmbedArgs {
    #[arg(long, value_enum, default_value_t = EmbedModel::Wavy)]
    model: EmbedModel,
    /// Rows (y points).
    #[arg(long, default_value_t = 8)]
    m: usize,
    /// Columns (x points).
    #[arg(long, default_value_t = 8)]
    n: usize,
    #[arg(long, default_value_t = 50.0)]
    dx: f64,
    #[arg(long, default_value_t = 15.0)]
    dy: f64,
    /// Covariance family for `--model custom`.
    #[arg(long, value_enum, default_value_t = Family::Exponential)]
    family: Family,
    /// Range for `--model custom`.
    #[arg(long, default_value_t = 1.0)]
    range: f64,
    /// Grid enlargement factor before embedding.
    #[arg(long, default_value_t = 1.0)]
    padding: f64,
}

#[derive(Args, Debug)]
struct GmrfArgs {
    #[arg(long, default_value_t = 64)]
    m: usize,
    #[arg(long, default_value_t = 4.5)]
    diag: f64,
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    neighbor: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PoissonMode {
    Invert,
    Thin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum IntensityShape {
    /// `level`
    Homogeneous,
    /// `level·(x² + y²)`
    Quadratic,
}

#[derive(Args, Debug)]
struct IntensityArgs {
    #[arg(long, value_enum, default_value_t = IntensityShape::Quadratic)]
    intensity: IntensityShape,
    #[arg(long, default_value_t = 300.0)]
    level: f64,
}

impl IntensityArgs {
    fn spec(&self) -> CliResult<IntensitySpec> {
        let l = self.level;
        if !(l >= 0.0 && l.is_finite()) {
            return Err(CliError::Usage(format!("--level must be finite and >= 0, got {l}")));
        }
        Ok(match self.intensity {
            IntensityShape::Homogeneous => IntensitySpec::Homogeneous(l),
            IntensityShape::Quadratic => IntensitySpec::callable(move |x, y| l * (x * x + y * y), 2.0 * l),
        })
    }
}

#[derive(Args, Debug)]
struct PoissonArgs {
    #[arg(long, value_enum, default_value_t = PoissonMode::Invert)]
    mode: PoissonMode,
    #[command(flatten)]
    intensity: IntensityArgs,
}

fn parse_marks(s: &str) -> Result<MarkDistribution, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |k: usize| -> Result<f64, String> {
        parts.get(k).ok_or_else(|| format!("missing parameter in {s:?}"))?.parse::<f64>().map_err(|e| e.to_string())
    };
    let d = match (parts[0], parts.len()) {
        ("constant", 2) => MarkDistribution::Constant(num(1)?),
        ("uniform", 3) => MarkDistribution::Uniform { lo: num(1)?, hi: num(2)? },
        ("gamma", 3) => MarkDistribution::Gamma { shape: num(1)?, rate: num(2)? },
        _ => return Err(format!("expected constant:C, uniform:LO:HI or gamma:SHAPE:RATE, got {s:?}")),
    };
    d.validate().map_err(|e| e.to_string())?;
    Ok(d)
}

#[derive(Args, Debug)]
struct MarkedArgs {
    #[command(flatten)]
    intensity: IntensityArgs,
    /// constant:C, uniform:LO:HI or gamma:SHAPE:RATE
    #[arg(long, default_value = "uniform:0:1", value_parser = parse_marks)]
    marks: MarkDistribution,
}

#[derive(Args, Debug)]
struct HawkesArgs {
    #[arg(long, default_value_t = 30.0)]
    lambda: f64,
    #[arg(long, default_value_t = 0.9)]
    alpha: f64,
    #[arg(long, default_value_t = 0.03)]
    sigma: f64,
}

#[derive(Args, Debug)]
struct MaternArgs {
    #[arg(long, default_value_t = 20.0)]
    kappa: f64,
    #[arg(long, default_value_t = 10.0)]
    alpha: f64,
    #[arg(long, default_value_t = 0.05)]
    r: f64,
}

#[derive(Args, Debug)]
struct ThomasArgs {
    #[arg(long, default_value_t = 20.0)]
    kappa: f64,
    #[arg(long, default_value_t = 10.0)]
    alpha: f64,
    #[arg(long, default_value_t = 0.02)]
    sigma: f64,
}

#[derive(Args, Debug)]
struct CoxArgs {
    /// Side of the torus grid driving the intensity.
    #[arg(long, default_value_t = 64)]
    n: usize,
    #[arg(long, default_value_t = 8.0)]
    c: f64,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Intensity is `level·exp(X)`.
    #[arg(long, default_value_t = 100.0)]
    level: f64,
}

#[derive(Args, Debug)]
struct SnoxArgs {
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 2.0)]
    beta: f64,
    #[arg(long, default_value_t = 0.1)]
    lambda: f64,
    /// Thomas kernel standard deviation.
    #[arg(long, default_value_t = 0.02)]
    sigma: f64,
}

#[derive(Args, Debug)]
struct StraussCondArgs {
    #[arg(long, default_value_t = 50)]
    n: usize,
    #[arg(long, default_value_t = 0.1)]
    gamma: f64,
    #[arg(long, default_value_t = 0.05)]
    r: f64,
    #[arg(long, default_value_t = 100_000)]
    steps: usize,
    /// Random-walk proposal standard deviation.
    #[arg(long, default_value_t = 0.1)]
    sigma: f64,
}

#[derive(Args, Debug)]
struct StraussRjArgs {
    #[arg(long, default_value_t = 100.0)]
    beta: f64,
    #[arg(long, default_value_t = 0.1)]
    gamma: f64,
    #[arg(long, default_value_t = 0.05)]
    r: f64,
    #[arg(long, default_value_t = 100_000)]
    steps: usize,
}

#[derive(Args, Debug)]
struct WienerArgs {
    #[arg(long, default_value_t = 1000)]
    n: usize,
}

#[derive(Args, Debug)]
struct FbmArgs {
    #[arg(long, default_value_t = 1024)]
    n: usize,
    #[arg(long = "H", default_value_t = 0.9)]
    h: f64,
}

#[derive(Args, Debug)]
struct SheetArgs {
    #[arg(long, default_value_t = 256)]
    n: usize,
    #[arg(long = "H", default_value_t = 0.8)]
    h: f64,
}

#[derive(Args, Debug)]
struct FbfArgs {
    #[arg(long, default_value_t = 256)]
    m: usize,
    #[arg(long, default_value_t = 256)]
    n: usize,
    #[arg(long = "H", default_value_t = 0.8)]
    h: f64,
}

#[derive(Args, Debug)]
struct LevyPathArgs {
    #[arg(long, default_value_t = 10.0)]
    alpha: f64,
    /// Decreasing truncation levels; the first is sampled, the rest refine it.
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.01,0.001")]
    eps: Vec<f64>,
    /// Number of grid times on (0, 1].
    #[arg(long, default_value_t = 1000)]
    steps: usize,
}

#[derive(Args, Debug)]
struct LevySheetArgs {
    /// Lattice resolution of the random measure.
    #[arg(long, default_value_t = 100)]
    n: usize,
    /// Evaluation grid side.
    #[arg(long, default_value_t = 100)]
    m: usize,
    #[arg(long, default_value_t = 0.05)]
    r: f64,
    #[arg(long, default_value_t = 100.0)]
    alpha: f64,
    #[arg(long, default_value_t = 100.0)]
    beta: f64,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    /// Suite name, or `all`.
    #[arg(default_value = "all")]
    suite: String,
    /// Print the report as JSON instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Grid sides to time.
    #[arg(long, value_delimiter = ',', default_value = "16,32,64,128,256,512")]
    sizes: Vec<usize>,
    /// Largest side for the dense Cholesky sampler.
    #[arg(long, default_value_t = 64)]
    dense_limit: usize,
}

#[derive(Args, Debug)]
struct ReplayArgs {
    /// Sidecar written by a previous run.
    sidecar: PathBuf,
}

/// Parses `argv` (including the program name) and runs it. Returns the exit
/// code: 0 on success, 1 on generator or I/O errors, 2 on usage errors.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match run_inner(argv.into_iter().map(Into::into).collect()) {
        Ok(()) => 0,
        Err(CliError::Usage(m)) => {
            // clap has already printed its own diagnostic when `m` is empty
            if !m.is_empty() {
                eprintln!("error: {m}");
            }
            2
        }
        Err(CliError::Run(m)) => {
            eprintln!("error: {m}");
            1
        }
    }
}

fn run_inner(argv: Vec<OsString>) -> CliResult<()> {
    let matches = match Cli::command().try_get_matches_from(&argv) {
        Ok(m) => m,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return if code == 0 { Ok(()) } else { Err(CliError::Usage(String::new())) };
        }
    };
    let cli = Cli::from_arg_matches(&matches).map_err(|e| CliError::Usage(e.to_string()))?;
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    let params = recorded_params(name, sub);
    execute(cli, name, params)
}

fn find_arg<'a>(root: &'a clap::Command, sub: &'a clap::Command, id: &str) -> Option<&'a clap::Arg> {
    sub.get_arguments()
        .chain(root.get_arguments())
        .find(|a| a.get_id().as_str() == id)
}

/// Every argument value of the subcommand (defaults included) keyed by its
/// long flag, or by id for positionals.
fn recorded_params(name: &str, sub: &ArgMatches) -> serde_json::Map<String, Value> {
    let root = Cli::command();
    let sc = root.find_subcommand(name).expect("known subcommand");
    let mut out = serde_json::Map::new();
    for id in sub.ids() {
        let id = id.as_str();
        if UNRECORDED.contains(&id) {
            continue;
        }
        // group ids have no backing argument
        let Some(arg) = find_arg(&root, sc, id) else { continue };
        let Some(raw) = sub.get_raw(id) else { continue };
        let vals: Vec<String> = raw.map(|v| v.to_string_lossy().into_owned()).collect();
        if vals.is_empty() {
            continue;
        }
        let key = arg.get_long().map(str::to_string).unwrap_or_else(|| id.to_string());
        out.insert(key, Value::String(vals.join(",")));
    }
    out
}

/// Rebuilds an argument vector from a sidecar.
fn replay_argv(meta: &Sidecar, out: &Path) -> CliResult<Vec<OsString>> {
    let root = Cli::command();
    let sc = root
        .find_subcommand(&meta.subcommand)
        .ok_or_else(|| CliError::Usage(format!("unknown subcommand {:?} in sidecar", meta.subcommand)))?;
    if meta.subcommand == "replay" {
        return Err(CliError::Usage("a replay sidecar cannot be replayed".into()));
    }
    let mut argv: Vec<OsString> = vec!["spatial-sim".into(), meta.subcommand.clone().into()];
    for (key, v) in &meta.params {
        let val = v
            .as_str()
            .ok_or_else(|| CliError::Usage(format!("parameter {key} is not a string")))?;
        let arg = sc
            .get_arguments()
            .chain(root.get_arguments())
            .find(|a| a.get_long() == Some(key.as_str()) || (a.is_positional() && a.get_id().as_str() == key))
            .ok_or_else(|| CliError::Usage(format!("unknown parameter {key:?} in sidecar")))?;
        if arg.is_positional() {
            argv.push(val.into());
        } else if !arg.get_action().takes_values() {
            if val == "true" {
                argv.push(format!("--{key}").into());
            }
        } else {
            argv.push(format!("--{key}").into());
            argv.push(val.into());
        }
    }
    argv.push("--seed".into());
    argv.push(meta.seed.to_string().into());
    argv.push("--out".into());
    argv.push(out.as_os_str().to_owned());
    Ok(argv)
}

fn require_out(out: &Option<PathBuf>) -> CliResult<&Path> {
    out.as_deref().ok_or_else(|| CliError::Usage("--out PREFIX is required".into()))
}

fn execute(cli: Cli, name: &str, params: serde_json::Map<String, Value>) -> CliResult<()> {
    let meta = Sidecar { subcommand: name.to_string(), params, seed: cli.seed, version: VERSION.to_string() };
    match &cli.command {
        Command::Replay(a) => {
            let text = std::fs::read_to_string(&a.sidecar)
                .map_err(|e| CliError::Run(format!("{}: {e}", a.sidecar.display())))?;
            let recorded: Sidecar =
                serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("malformed sidecar: {e}")))?;
            let out = require_out(&cli.out)?;
            run_inner(replay_argv(&recorded, out)?)
        }
        Command::Validate(a) => {
            let report = suites::run_suite(&a.suite, cli.seed)?;
            let text = if a.json { report.to_json() + "\n" } else { report.to_text() };
            print!("{text}");
            if let Some(out) = &cli.out {
                let path = output::artifact_path(out, None, "report", if a.json { Format::JsonMeta } else { Format::Csv });
                let path = path.with_extension(if a.json { "json" } else { "txt" });
                std::fs::write(&path, &text).map_err(|e| CliError::Run(format!("{}: {e}", path.display())))?;
                output::write_sidecar(out, &meta)?;
            }
            if report.all_pass() {
                Ok(())
            } else {
                Err(CliError::Run(format!("validation suite {:?} has failing checks", a.suite)))
            }
        }
        Command::Bench(a) => {
            if a.sizes.is_empty() || a.sizes.contains(&0) {
                return Err(CliError::Usage("--sizes must be positive".into()));
            }
            let report = benchmark_scaling(&a.sizes, a.dense_limit, cli.seed)?;
            println!("side,points,circulant_s,dense_s");
            for r in &report.rows {
                let dense = r.dense_secs.map(|d| format!("{d:.6e}")).unwrap_or_default();
                println!("{},{},{:.6e},{}", r.n_per_axis, r.points, r.circulant_secs, dense);
            }
            println!("circulant slope {:.3}", report.circulant_slope_points);
            if let Some(s) = report.dense_slope_points {
                println!("dense slope {s:.3}");
            }
            if let Some(out) = &cli.out {
                let path = output::artifact_path(out, None, "bench", Format::JsonMeta).with_extension("json");
                let text = serde_json::to_string_pretty(&report).expect("report serializes");
                std::fs::write(&path, text).map_err(|e| CliError::Run(format!("{}: {e}", path.display())))?;
                output::write_sidecar(out, &meta)?;
            }
            Ok(())
        }
        cmd => {
            let out = require_out(&cli.out)?;
            if cli.realizations == 0 {
                return Err(CliError::Usage("--realizations must be at least 1".into()));
            }
            let mut gen = generator(cmd)?;
            let root = RngStream::new(cli.seed, 0);
            let file_formats: Vec<Format> = cli.format.iter().copied().filter(|&f| f != Format::JsonMeta).collect();
            for k in 0..cli.realizations {
                let mut rng = root.split(k as u64);
                let artifacts = gen(&mut rng)?;
                let tag = (cli.realizations > 1).then_some(k);
                if cli.format.is_empty() {
                    output::write_artifacts(out, tag, &artifacts, &[])?;
                } else if !file_formats.is_empty() {
                    let supported = file_formats.iter().any(|&f| artifacts.iter().any(|(_, a)| a.supports(f)));
                    if !supported {
                        return Err(CliError::Usage(format!("{name} cannot write any of the formats {:?}", cli.format)));
                    }
                    output::write_artifacts(out, tag, &artifacts, &file_formats)?;
                }
            }
            output::write_sidecar(out, &meta)?;
            Ok(())
        }
    }
}

type Generator<'a> = Box<dyn FnMut(&mut RngStream) -> CliResult<Vec<(String, Artifact)>> + 'a>;

fn main_only(a: Artifact) -> CliResult<Vec<(String, Artifact)>> {
    Ok(vec![(String::new(), a)])
}

fn strauss_artifacts(run: StraussRun) -> Vec<(String, Artifact)> {
    vec![(String::new(), Artifact::Points(run.pattern())), ("trace".into(), Artifact::Trace(run.trace))]
}

fn hurst(h: f64) -> CliResult<HurstParam> {
    HurstParam::new(h).map_err(|e| CliError::Usage(e.to_string()))
}

fn path_table(times: &[f64], values: &[f64]) -> Artifact {
    let rows = times.iter().zip(values).map(|(&t, &x)| vec![t, x]).collect();
    Artifact::Table { header: "t,x".into(), rows }
}

/// Builds the per-realization generator; plans are computed once.
fn generator(cmd: &Command) -> CliResult<Generator<'_>> {
    let w = Window::unit();
    Ok(match cmd {
        Command::GaussianMa(a) => Box::new(move |rng| main_only(Artifact::Field(sample_moving_average(a.n, a.r, rng)?))),
        Command::Torus(a) => {
            let plan = plan_torus(a.n, &CovarianceModel::torus_exp(a.c, a.alpha)?)?;
            Box::new(move |rng| main_only(Artifact::Field(sample_torus(&plan, rng)?)))
        }
        Command::Embed(a) => {
            let grid = Grid2D::new(a.n, a.m, a.dx, a.dy, (0.0, 0.0))?;
            let plan = match a.model {
                EmbedModel::Wavy => plan_embedding_padded(
                    grid,
                    &|h1, h2| CovarianceModel::Wavy.eval_lag([h1, h2]).expect("valid model"),
                    a.padding,
                )?,
                EmbedModel::Custom => {
                    if !(a.range > 0.0) {
                        return Err(CliError::Usage("--range must be positive".into()));
                    }
                    let l = a.range;
                    match a.family {
                        Family::Exponential => plan_embedding_padded(grid, &|h1, h2| (-h1.hypot(h2) / l).exp(), a.padding)?,
                        Family::Gaussian => {
                            plan_embedding_padded(grid, &|h1, h2| (-(h1 * h1 + h2 * h2) / (l * l)).exp(), a.padding)?
                        }
                    }
                }
            };
            Box::new(move |rng| main_only(Artifact::Field(sample_embedded(&plan, rng)?.0)))
        }
        Command::Gmrf(a) => {
            let sampler = GmrfSampler::new(LatticeGmrfSpec::new(a.m, a.diag, a.neighbor)?)?;
            let mean = vec![0.0; a.m * a.m].into();
            Box::new(move |rng| main_only(Artifact::Field(sampler.sample(&mean, rng)?)))
        }
        Command::Poisson(a) => {
            let spec = a.intensity.spec()?;
            let mode = a.mode;
            Box::new(move |rng| {
                let p = match mode {
                    PoissonMode::Invert => sample_poisson_inversion(&spec, &w, rng)?,
                    PoissonMode::Thin => sample_poisson_thinning(&spec, &w, rng)?,
                };
                main_only(Artifact::Points(p))
            })
        }
        Command::Marked(a) => {
            let spec = a.intensity.spec()?;
            Box::new(move |rng| main_only(Artifact::Points(sample_marked_poisson(&spec, &w, &a.marks, rng)?)))
        }
        Command::Hawkes(a) => {
            let p = HawkesParams { center_intensity: a.lambda, alpha: a.alpha, sigma: a.sigma };
            Box::new(move |rng| main_only(Artifact::Points(sample_hawkes(&p, &w, rng)?.pattern)))
        }
        Command::Matern(a) => {
            let k = ClusterKernel::MaternBall { r: a.r };
            Box::new(move |rng| main_only(Artifact::Points(sample_neyman_scott(a.kappa, a.alpha, &k, &w, rng)?.pattern)))
        }
        Command::Thomas(a) => {
            let k = ClusterKernel::ThomasGauss { sigma: a.sigma };
            Box::new(move |rng| main_only(Artifact::Points(sample_neyman_scott(a.kappa, a.alpha, &k, &w, rng)?.pattern)))
        }
        Command::Cox(a) => {
            let plan = plan_torus(a.n, &CovarianceModel::torus_exp(a.c, a.alpha)?)?;
            if !(a.level >= 0.0 && a.level.is_finite()) {
                return Err(CliError::Usage("--level must be finite and >= 0".into()));
            }
            let level = a.level;
            Box::new(move |rng| {
                let real = sample_cox(
                    |r| Ok(IntensitySpec::field_driven(sample_torus(&plan, r)?, move |v| level * v.exp())),
                    &w,
                    rng,
                )?;
                let field = match &real.intensity {
                    IntensitySpec::FieldDriven { field, .. } => (**field).clone(),
                    _ => unreachable!("the sampler returns a field-driven intensity"),
                };
                Ok(vec![
                    (String::new(), Artifact::Points(real.pattern)),
                    ("field".into(), Artifact::Field(field)),
                ])
            })
        }
        Command::Snox(a) => {
            let (k, law) = shot_noise_g(a.alpha, a.beta, a.lambda)?;
            let kernel = ClusterKernel::ThomasGauss { sigma: a.sigma };
            Box::new(move |rng| main_only(Artifact::Points(sample_shot_noise_cox(k, &law, &kernel, &w, rng)?.pattern)))
        }
        Command::StraussCond(a) => {
            let p = StraussParams::new(1.0, a.gamma, a.r)?;
            Box::new(move |rng| Ok(strauss_artifacts(run_conditional_strauss(a.n, &p, a.sigma, a.steps, rng)?)))
        }
        Command::StraussRj(a) => {
            let p = StraussParams::new(a.beta, a.gamma, a.r)?;
            Box::new(move |rng| Ok(strauss_artifacts(run_rj_strauss(&p, Vec::new(), a.steps, rng)?)))
        }
        Command::Wiener(a) => {
            if a.n == 0 {
                return Err(CliError::Usage("--n must be at least 1".into()));
            }
            let times: Vec<f64> = (1..=a.n).map(|k| k as f64 / a.n as f64).collect();
            Box::new(move |rng| {
                let w = sample_wiener_path(&times, rng)?;
                let mut t = vec![0.0];
                t.extend(&times);
                let mut x = vec![0.0];
                x.extend(w);
                main_only(path_table(&t, &x))
            })
        }
        Command::Fbm(a) => {
            let plan = plan_fbm(a.n, hurst(a.h)?)?;
            let times: Vec<f64> = (0..=a.n).map(|k| k as f64 / a.n as f64).collect();
            Box::new(move |rng| main_only(path_table(&times, &plan.sample_pair(rng).0)))
        }
        Command::Sheet(a) => {
            let h = hurst(a.h)?;
            let plan = plan_fgn_sheet(a.n, h)?;
            Box::new(move |rng| main_only(Artifact::Field(sample_fractional_wiener_sheet_pair(&plan, h, rng)?.0)))
        }
        Command::Fbf(a) => {
            let plan = plan_fbf(a.m, a.n, hurst(a.h)?)?;
            Box::new(move |rng| main_only(Artifact::Masked(plan.sample_pair(rng)?.0)))
        }
        Command::LevyPath(a) => {
            if a.eps.is_empty() || a.eps.windows(2).any(|w| !(w[1] < w[0])) {
                return Err(CliError::Usage("--eps must be a strictly decreasing list".into()));
            }
            if a.steps == 0 {
                return Err(CliError::Usage("--steps must be at least 1".into()));
            }
            let spec = LevyPathSpec::gamma(a.alpha, a.eps[0])?;
            let times: Vec<f64> = (1..=a.steps).map(|k| k as f64 / a.steps as f64).collect();
            Box::new(move |rng| {
                let mut path = sample_levy_path(&spec, &times, rng)?;
                let mut out = vec![("e0".to_string(), path_table(&path.times, &path.values))];
                for (k, &e) in a.eps.iter().enumerate().skip(1) {
                    path = refine_path(&path, &spec, e, rng)?;
                    out.push((format!("e{k}"), path_table(&path.times, &path.values)));
                }
                Ok(out)
            })
        }
        Command::LevySheet(a) => {
            let spec = LevySheetSpec {
                n: a.n,
                kernel: Arc::new(DiscKernel { r: a.r }),
                cell: GammaCell { alpha: a.alpha, beta: a.beta },
            };
            spec.validate()?;
            Box::new(move |rng| main_only(Artifact::Field(sample_gamma_sheet(&spec, a.m, rng)?)))
        }
        Command::Validate(_) | Command::Bench(_) | Command::Replay(_) => unreachable!("handled by execute"),
    })
}
