mod stats;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use regtest::dataset::{self, edge_image_grid, generate, Family, FeatureMatrix, LabeledDataset, ScenarioSpec};
use regtest::embed::{averaged_diffusion_map, DEFAULT_COORDINATES, DEFAULT_NEIGHBOR};
use regtest::multitest::Correction;
use regtest::par::WORKERS_ENV;
use regtest::permutation::{global_test, local_test, PermutationPlan, PermutationScope};
use regtest::report::{read_local_decisions, write_embedding_csv, write_local_csv, GridSpec, LocalSummary};
use regtest::rng::tagged_seed;
use regtest::simulate::{PowerStudy, SimulationReport};

use stats::{estimators_named, EstimatorArgs};

/// Columns of a local-test CSV that are not coordinates.
const NON_COORDINATE: [&str; 8] = ["point_id", "label", "statistic", "estimate", "p_value", "reject", "sign", "color"];

#[derive(Debug, Parser)]
#[command(name = "regtest", version, about = "Global and local two-sample tests through regression")]
struct Cli {
    /// Worker threads; 0 uses every core
    #[arg(long, global = true, env = WORKERS_ENV, default_value_t = 0)]
    workers: usize,
    /// Log progress to stderr (repeat for more detail)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Permutation test of a global statistic on a labelled CSV
    Global(GlobalArgs),
    /// Local permutation tests at a grid or a list of test points
    Local(LocalArgs),
    /// Monte-Carlo power study on a synthetic scenario
    Simulate(SimulateArgs),
    /// Averaged diffusion-map coordinates of a set of points
    Embed(EmbedArgs),
    /// Write a synthetic dataset or an edge-image test grid as CSV
    Generate(GenerateArgs),
}

#[derive(Debug, Args)]
struct Calibration {
    /// Random permutations B
    #[arg(long, short = 'B', default_value_t = 100)]
    permutations: usize,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// CSV with feature columns and a 0/1 label column
    data: PathBuf,
    #[arg(long, default_value = "label")]
    label_column: String,
    /// knn, kernel, rf, lda, mmd, energy, hotelling; prefixes split-, acc-, resub-, cv-
    #[arg(long, default_value = "rf")]
    stat: String,
    #[command(flatten)]
    estimator: EstimatorArgs,
    #[command(flatten)]
    calibration: Calibration,
    /// Enumerate all n! permutations (n <= 10)
    #[arg(long)]
    exhaustive: bool,
    /// Permute only the training half (split- statistics)
    #[arg(long)]
    first_half: bool,
    /// Write the JSON outcome here instead of stdout
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct LocalArgs {
    data: PathBuf,
    #[arg(long, default_value = "label")]
    label_column: String,
    /// knn, kernel, rf or lda
    #[arg(long, default_value = "knn")]
    estimator: String,
    #[command(flatten)]
    params: EstimatorArgs,
    /// 2-D lattice `AxB:xmin,xmax,ymin,ymax`
    #[arg(long, conflicts_with = "points", required_unless_present = "points")]
    grid: Option<GridSpec>,
    /// CSV of test points, one per row
    #[arg(long)]
    points: Option<PathBuf>,
    #[command(flatten)]
    calibration: Calibration,
    #[arg(long, default_value = "hochberg")]
    correction: Correction,
    /// Per-point CSV
    #[arg(long, short)]
    output: PathBuf,
    /// Write the JSON summary here instead of stdout
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Scenario family, e.g. dense-normal-loc
    #[arg(long)]
    scenario: Family,
    /// Comma-separated dimensions [default: the family's table columns]
    #[arg(long, value_delimiter = ',')]
    dims: Vec<usize>,
    #[arg(long)]
    n0: Option<usize>,
    #[arg(long)]
    n1: Option<usize>,
    /// Comma-separated statistic names
    #[arg(long, value_delimiter = ',', default_value = "rf,acc-rf,mmd,energy")]
    stats: Vec<String>,
    #[command(flatten)]
    estimator: EstimatorArgs,
    /// Repetitions R
    #[arg(long, default_value_t = regtest::simulate::DEFAULT_REPS)]
    reps: usize,
    #[arg(long, short = 'B', default_value_t = regtest::simulate::DEFAULT_PERMUTATIONS)]
    permutations: usize,
    #[arg(long, default_value_t = regtest::simulate::DEFAULT_ALPHA)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Power table CSV (statistics by dimension)
    #[arg(long)]
    table: Option<PathBuf>,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EmbedArgs {
    /// CSV of points; local-test output files are accepted as is
    points: PathBuf,
    /// Neighbour index for the local scales
    #[arg(long, default_value_t = DEFAULT_NEIGHBOR)]
    k: usize,
    /// Number of coordinates
    #[arg(long, default_value_t = DEFAULT_COORDINATES)]
    m: usize,
    /// Local-test CSV whose decisions are joined by row
    #[arg(long)]
    report: Option<PathBuf>,
    /// Coordinates CSV
    #[arg(long, short)]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long, required_unless_present_any = ["config", "edge_grid"])]
    scenario: Option<Family>,
    /// Scenario file with family, dim, n0, n1, seed
    #[arg(long, conflicts_with = "scenario")]
    config: Option<PathBuf>,
    /// Edge-image test points on a `AxB` (theta, rho) lattice
    #[arg(long, conflicts_with_all = ["scenario", "config"])]
    edge_grid: Option<String>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long, default_value_t = 20)]
    n0: usize,
    #[arg(long, default_value_t = 20)]
    n1: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "label")]
    label_column: String,
    #[arg(long, short)]
    output: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn usage_error(msg: impl std::fmt::Display) -> ! {
    Cli::command().error(ErrorKind::ArgumentConflict, msg).exit()
}

fn run(cli: Cli) -> Result<()> {
    let workers = cli.workers;
    let start = Instant::now();
    match cli.command {
        Command::Global(a) => run_global(a, workers, start),
        Command::Local(a) => run_local(a, workers, start),
        Command::Simulate(a) => run_simulate(a, workers, start),
        Command::Embed(a) => run_embed(a, start),
        Command::Generate(a) => run_generate(a),
    }
}

fn load(path: &Path, label: &str) -> Result<LabeledDataset> {
    dataset::load_csv(path, label).with_context(|| format!("reading {}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

/// Serialize `body` with the command name and wall time added.
fn emit(command: &str, body: impl Serialize, start: Instant, path: Option<&Path>) -> Result<()> {
    let mut v = serde_json::to_value(body)?;
    if let Value::Object(map) = &mut v {
        map.insert("command".into(), json!(command));
        map.insert("wall_time_seconds".into(), json!(start.elapsed().as_secs_f64()));
    }
    match path {
        Some(p) => {
            let mut w = create(p)?;
            serde_json::to_writer_pretty(&mut w, &v)?;
            writeln!(w)?;
            w.flush()?;
        }
        None => {
            let mut out = io::stdout().lock();
            serde_json::to_writer_pretty(&mut out, &v)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

/// With `B` permutations no p-value is below `1 / (B + 1)`.
fn warn_resolution(permutations: usize, threshold: f64) {
    let floor = 1.0 / (permutations as f64 + 1.0);
    if floor >= threshold {
        log::warn!("with {permutations} permutations the smallest p-value is {floor:.4}; nothing can be rejected at {threshold}");
    }
}

fn run_global(a: GlobalArgs, workers: usize, start: Instant) -> Result<()> {
    if let Err(msg) = a.estimator.check(&estimators_named([a.stat.as_str()])?) {
        usage_error(msg);
    }
    let data = load(&a.data, &a.label_column)?;
    let stat = a.estimator.statistic(&a.stat, data.n(), data.dim(), tagged_seed(a.calibration.seed, "estimator"))?;
    let mut plan = PermutationPlan::new(a.calibration.permutations, a.calibration.seed).with_workers(workers);
    plan.exhaustive = a.exhaustive;
    if a.first_half {
        plan = plan.with_scope(PermutationScope::FirstHalfLabels);
    }
    if !a.exhaustive {
        warn_resolution(a.calibration.permutations, a.calibration.alpha);
    }
    let out = global_test(&data, &stat, &plan, a.calibration.alpha)?;
    let body = json!({
        "statistic": out.statistic,
        "observed": out.observed,
        "permutations": out.permutations,
        "p_value": out.p_value,
        "alpha": out.alpha,
        "reject": out.reject,
        "seed": out.seed,
        "n0": data.n0(),
        "n1": data.n1(),
        "dim": data.dim(),
    });
    emit("global", body, start, a.output.as_deref())
}

fn run_local(a: LocalArgs, workers: usize, start: Instant) -> Result<()> {
    if let Err(msg) = a.params.check(&estimators_named([a.estimator.as_str()])?) {
        usage_error(msg);
    }
    let data = load(&a.data, &a.label_column)?;
    let points = match (&a.grid, &a.points) {
        (Some(g), _) => g.points()?,
        (None, Some(p)) => dataset::load_points_csv(p, &NON_COORDINATE).with_context(|| format!("reading {}", p.display()))?,
        (None, None) => unreachable!("clap requires --grid or --points"),
    };
    if points.rows() == 0 {
        usage_error("no test points given");
    }
    let estimator = a.params.estimator(&a.estimator, data.n(), data.dim(), tagged_seed(a.calibration.seed, "estimator"))?;
    let plan = PermutationPlan::new(a.calibration.permutations, a.calibration.seed).with_workers(workers);
    if a.correction != Correction::None {
        warn_resolution(a.calibration.permutations, a.calibration.alpha / points.rows() as f64);
    } else {
        warn_resolution(a.calibration.permutations, a.calibration.alpha);
    }
    let report = local_test(&data, &points, &estimator, &plan, a.calibration.alpha, a.correction)?;
    let mut w = create(&a.output)?;
    write_local_csv(&report, &points, &mut w)?;
    w.flush()?;
    let mut body = serde_json::to_value(LocalSummary::new(&report))?;
    body["output"] = json!(a.output.display().to_string());
    emit("local", body, start, a.summary.as_deref())
}

fn default_dims(family: Family) -> Vec<usize> {
    match family {
        Family::DenseNormalLoc | Family::DenseCauchyLoc | Family::DenseNormalScale | Family::DenseCauchyScale => {
            vec![5, 20, 50, 100, 150, 200]
        }
        Family::SparseNormalLoc | Family::SparseCauchyLoc | Family::SparseNormalScale | Family::SparseCauchyScale => {
            vec![20, 50, 100, 200, 300, 400]
        }
        Family::MixedLocScale => (5..=75).step_by(10).collect(),
        other => vec![other.fixed_dim().unwrap_or(5)],
    }
}

fn run_simulate(a: SimulateArgs, workers: usize, start: Instant) -> Result<()> {
    if let Err(msg) = a.estimator.check(&estimators_named(a.stats.iter().map(String::as_str))?) {
        usage_error(msg);
    }
    let dims = if a.dims.is_empty() { default_dims(a.scenario) } else { a.dims.clone() };
    let group = if a.scenario == Family::MixedLocScale { 50 } else { 20 };
    let (n0, n1) = (a.n0.unwrap_or(group), a.n1.unwrap_or(group));
    warn_resolution(a.permutations, a.alpha);
    let mut merged: Option<SimulationReport> = None;
    // One study per dimension so that defaults depending on D (kNN's k,
    // the forest's mtry) are resolved per column.
    for dim in dims {
        let stats = a
            .stats
            .iter()
            .map(|s| a.estimator.statistic(s, n0 + n1, dim, 0))
            .collect::<Result<Vec<_>>>()?;
        let study = PowerStudy::new(a.scenario, vec![dim], n0, n1, stats)
            .with_reps(a.reps, a.permutations)
            .with_seed(a.seed)
            .with_workers(workers);
        let study = PowerStudy { alpha: a.alpha, ..study };
        log::info!("scenario {} at D = {dim}", a.scenario);
        let r = study.run()?;
        match &mut merged {
            Some(m) => m.cells.extend(r.cells),
            None => merged = Some(r),
        }
    }
    let report = merged.expect("at least one dimension");
    if let Some(p) = &a.table {
        let mut w = create(p)?;
        report.write_table(&mut w)?;
        w.flush()?;
    }
    emit("simulate", &report, start, a.output.as_deref())
}

fn run_embed(a: EmbedArgs, start: Instant) -> Result<()> {
    let points: FeatureMatrix = dataset::load_points_csv(&a.points, &NON_COORDINATE)
        .with_context(|| format!("reading {}", a.points.display()))?;
    let decisions = match &a.report {
        Some(p) => Some(read_local_decisions(File::open(p).with_context(|| format!("opening {}", p.display()))?)?),
        None => None,
    };
    if let Some(d) = &decisions {
        if d.len() != points.rows() {
            anyhow::bail!("cannot join {} report rows onto {} points", d.len(), points.rows());
        }
    }
    let emb = averaged_diffusion_map(&points, a.k, a.m)?;
    let mut w = create(&a.output)?;
    write_embedding_csv(&emb, decisions.as_deref(), &mut w)?;
    w.flush()?;
    let body = json!({
        "points": points.rows(),
        "coordinates": emb.coordinates.cols(),
        "neighbor_k": emb.neighbor_k,
        "eigenvalues": emb.eigenvalues,
        "joined": decisions.is_some(),
        "output": a.output.display().to_string(),
    });
    emit("embed", body, start, None)
}

fn run_generate(a: GenerateArgs) -> Result<()> {
    if let Some(g) = &a.edge_grid {
        let (nt, nr) = g
            .split_once(['x', 'X'])
            .and_then(|(t, r)| Some((t.trim().parse().ok()?, r.trim().parse().ok()?)))
            .unwrap_or_else(|| usage_error(format!("edge grid '{g}' is not of the form AxB")));
        let (points, _) = edge_image_grid(nt, nr)?;
        dataset::write_points_csv(&points, &a.output)?;
        return Ok(());
    }
    let spec = match (&a.config, a.scenario) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            ScenarioSpec::from_config_str(&text)?
        }
        (None, Some(family)) => {
            let dim = a.dim.or(family.fixed_dim()).unwrap_or_else(|| usage_error("--dim is required for this scenario"));
            ScenarioSpec::new(family, dim, a.n0, a.n1, a.seed)
        }
        (None, None) => unreachable!("clap requires a scenario"),
    };
    let data = generate(&spec)?;
    let mut w = create(&a.output)?;
    dataset::write_csv(&data, &mut w, &a.label_column)?;
    w.flush()?;
    Ok(())
}
