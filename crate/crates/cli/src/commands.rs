use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Args, ValueEnum};
use cmm_core::combine::Statistic;
use cmm_core::decomposition;
use cmm_core::experts;
use cmm_core::mining::ConsistentSets;
use cmm_core::models::{self, ModelSpec, Registry, Role};
use cmm_core::pipeline::{self, ForecastReport};
use cmm_core::series::{self, SynthSpec, TimeSeries};
use cmm_core::similarity;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::manifest::Manifest;

/// Pool product above which MEDIAN combining is refused outright.
const MEDIAN_GUARD: usize = 100_000;
/// Ranking dumps larger than this need `--allow-large-dump`.
const RANKING_DUMP_LIMIT: usize = 100_000;

pub enum Failure {
    Validation(anyhow::Error),
    Runtime(anyhow::Error),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Runtime(_) => 2,
        }
    }

    pub fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Validation(e) | Failure::Runtime(e) => e,
        }
    }
}

fn root(e: &cmm_core::Error) -> &cmm_core::Error {
    match e {
        cmm_core::Error::Stage { source, .. } => root(source),
        other => other,
    }
}

/// Input and configuration problems are validation failures; everything
/// else raised by the engine is a runtime failure.
fn core(e: cmm_core::Error) -> Failure {
    use cmm_core::Error as E;
    let validation = matches!(
        root(&e),
        E::Io { .. }
            | E::Parse { .. }
            | E::NonPositive { .. }
            | E::Gap { .. }
            | E::TooShort { .. }
            | E::Invalid(_)
            | E::CombineCap { .. }
            | E::Json(_)
    );
    if validation {
        Failure::Validation(e.into())
    } else {
        Failure::Runtime(e.into())
    }
}

fn core_in(context: String) -> impl FnOnce(cmm_core::Error) -> Failure {
    move |e| match core(e) {
        Failure::Validation(e) => Failure::Validation(e.context(context)),
        Failure::Runtime(e) => Failure::Runtime(e.context(context)),
    }
}

fn runtime(e: anyhow::Error) -> Failure {
    Failure::Runtime(e)
}

fn validation(e: anyhow::Error) -> Failure {
    Failure::Validation(e)
}

/// CSV files named by `paths`; directories expand to their `*.csv` entries
/// in name order.
fn expand_inputs(paths: &[PathBuf]) -> Result<Vec<PathBuf>, Failure> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut entries: Vec<PathBuf> = std::fs::read_dir(p)
                .with_context(|| format!("cannot list {}", p.display()))
                .map_err(validation)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|e| e.is_file() && e.extension().is_some_and(|x| x == "csv"))
                .collect();
            entries.sort();
            if entries.is_empty() {
                return Err(validation(anyhow!("no .csv files in {}", p.display())));
            }
            out.extend(entries);
        } else if p.is_file() {
            out.push(p.clone());
        } else {
            return Err(validation(anyhow!("input {} does not exist", p.display())));
        }
    }
    Ok(out)
}

fn load(path: &Path, config: &RunConfig, manifest: &mut Manifest) -> Result<TimeSeries, Failure> {
    manifest.add_input(path).map_err(validation)?;
    series::load_csv(path, config.period).map_err(core_in(format!("loading {}", path.display())))
}

fn prepare(command: &str, config: &mut RunConfig, out: &Path, threads: Option<usize>) -> Result<(Manifest, Registry), Failure> {
    config.out = out.to_path_buf();
    let registry = config.registry().map_err(validation)?;
    std::fs::create_dir_all(out)
        .with_context(|| format!("cannot create output directory {}", out.display()))
        .map_err(runtime)?;
    let mut manifest = Manifest::new(command, threads, config.clone());
    if let Some(path) = &config.registry {
        manifest.add_input(path).map_err(validation)?;
    }
    Ok((manifest, registry))
}

fn median_guard(config: &RunConfig, registry: &Registry) -> Result<(), Failure> {
    let count = registry.triplet_count();
    if config.pipeline.policy.statistic == Statistic::Median && count > MEDIAN_GUARD {
        return Err(validation(anyhow!(
            "MEDIAN combining over {count} triplets exceeds {MEDIAN_GUARD}; use --statistic mean (exactly factorised) or a smaller registry"
        )));
    }
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> Result<String, Failure> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| runtime(e.into()))
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

pub fn decompose(args: DecomposeArgs, mut config: RunConfig, threads: Option<usize>) -> Result<(), Failure> {
    let (mut manifest, _) = prepare("decompose", &mut config, &args.out, threads)?;
    let ts = load(&args.input, &config, &mut manifest)?;
    let d = decomposition::decompose(&ts);
    let mut csv = String::from("date,D,T,S,IC\n");
    for t in 0..ts.len() {
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            ts.stamp(t),
            ts.values()[t],
            d.trend[t],
            d.seasonal[t],
            d.irregular[t]
        );
    }
    manifest
        .write(&args.out, &format!("{}.decomposition.csv", ts.id()), &csv)
        .map_err(runtime)?;
    manifest.finish(&args.out).map_err(runtime)
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ComponentArg {
    /// The undecomposed series
    Series,
    Trend,
    Seasonal,
    Irregular,
}

#[derive(Debug, Args)]
pub struct ForecastArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "series")]
    pub component: ComponentArg,
    /// Model name, e.g. "Log ARIMA (0,1,1)(1,0,0)_s NOINT"
    #[arg(long, conflicts_with = "id")]
    pub model: Option<String>,
    /// Expert id within the component's registry pool
    #[arg(long)]
    pub id: Option<u32>,
    /// Forecast steps past the training window (default: horizon)
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct ForecastOutput<'a> {
    series_id: &'a str,
    component: String,
    n_train: usize,
    model: models::FittedModel,
    forecast: Vec<f64>,
}

pub fn forecast(args: ForecastArgs, mut config: RunConfig, threads: Option<usize>) -> Result<(), Failure> {
    let (mut manifest, registry) = prepare("forecast", &mut config, &args.out, threads)?;
    let ts = load(&args.input, &config, &mut manifest)?;
    let dec = decomposition::decompose(&ts);
    let (role, values, label) = match args.component {
        ComponentArg::Series => (Role::Trend, ts.values(), "series"),
        ComponentArg::Trend => (Role::Trend, dec.component(Role::Trend), "trend"),
        ComponentArg::Seasonal => (Role::Seasonal, dec.component(Role::Seasonal), "seasonal"),
        ComponentArg::Irregular => (Role::Irregular, dec.component(Role::Irregular), "irregular"),
    };
    let spec: ModelSpec = match (&args.model, args.id) {
        (Some(name), None) => ModelSpec::parse(0, role, name, config.period).map_err(core)?,
        (None, Some(id)) => {
            if matches!(args.component, ComponentArg::Series) {
                return Err(validation(anyhow!("--id needs --component trend|seasonal|irregular")));
            }
            registry
                .pool(role)
                .iter()
                .find(|m| m.expert_id == id)
                .cloned()
                .ok_or_else(|| validation(anyhow!("no {role} model with id {id} in the registry")))?
        }
        _ => return Err(validation(anyhow!("give exactly one of --model or --id"))),
    };
    let n_train = series::train_len(ts.len(), config.pipeline.train_fraction);
    let steps = args.steps.unwrap_or(config.pipeline.horizon);
    let fitted = models::fit(&spec, &values[..n_train]).map_err(core_in(format!("fitting {}", spec.name)))?;
    let path = models::forecast(&fitted, &values[..n_train], steps).map_err(core)?;

    let mut csv = String::from("date,forecast,actual\n");
    for (k, f) in path.iter().enumerate() {
        let t = n_train + k;
        let actual = values.get(t).map(|v| v.to_string()).unwrap_or_default();
        let _ = writeln!(csv, "{},{},{}", ts.stamp(t), f, actual);
    }
    let stem = format!("{}.{label}", ts.id());
    manifest
        .write(&args.out, &format!("{stem}.forecast.csv"), &csv)
        .map_err(runtime)?;
    let json = to_json(&ForecastOutput {
        series_id: ts.id(),
        component: label.to_string(),
        n_train,
        model: fitted,
        forecast: path,
    })?;
    manifest
        .write(&args.out, &format!("{stem}.forecast.json"), &json)
        .map_err(runtime)?;
    manifest.finish(&args.out).map_err(runtime)
}

#[derive(Debug, Args)]
pub struct MineArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Write the good and bad transaction databases as text
    #[arg(long)]
    pub dump_db: bool,
    /// Write the full per-point expert ranking as CSV
    #[arg(long)]
    pub dump_rankings: bool,
    /// Allow ranking dumps above 100000 rows
    #[arg(long)]
    pub allow_large_dump: bool,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

/// Consistent sets as written by `mine` and read by `transfer --sets`.
#[derive(Serialize, Deserialize)]
struct SetsFile {
    series_id: String,
    sets: ConsistentSets,
}

#[derive(Serialize)]
struct ClosedFile<'a> {
    good: &'a [cmm_core::mining::ClosedItemset],
    bad: &'a [cmm_core::mining::ClosedItemset],
}

pub fn mine(args: MineArgs, mut config: RunConfig, threads: Option<usize>) -> Result<(), Failure> {
    let (mut manifest, registry) = prepare("mine", &mut config, &args.out, threads)?;
    let ts = load(&args.input, &config, &mut manifest)?;
    let outcome = pipeline::mine(&ts, &registry, &config.pipeline, false).map_err(core_in(format!("mining {}", ts.id())))?;
    let id = ts.id();

    if args.dump_rankings {
        let rows = outcome.table.points.len() * outcome.triplet_count;
        if rows > RANKING_DUMP_LIMIT && !args.allow_large_dump {
            return Err(validation(anyhow!(
                "ranking dump would have {rows} rows (limit {RANKING_DUMP_LIMIT}); pass --allow-large-dump or use a smaller registry"
            )));
        }
        let mut csv = String::from("t,rank,trend_id,seasonal_id,irregular_id,ape\n");
        for pos in 0..outcome.table.points.len() {
            let t = outcome.table.points[pos];
            let ranking = match experts::rank_point(&outcome.table, pos, ts.values()[t], outcome.triplet_count) {
                Ok(r) => r,
                Err(cmm_core::Error::ZeroActual(_)) => continue,
                Err(e) => return Err(core(e)),
            };
            for (rank, r) in ranking.top.iter().enumerate() {
                let x = r.triplet;
                let _ = writeln!(
                    csv,
                    "{t},{},{},{},{},{}",
                    rank + 1,
                    x.trend_id,
                    x.seasonal_id,
                    x.irregular_id,
                    r.ape
                );
            }
        }
        manifest
            .write(&args.out, &format!("{id}.rankings.csv"), &csv)
            .map_err(runtime)?;
    }
    if args.dump_db {
        manifest
            .write(&args.out, &format!("{id}.good.db.txt"), &outcome.good_db.to_text())
            .map_err(runtime)?;
        manifest
            .write(&args.out, &format!("{id}.bad.db.txt"), &outcome.bad_db.to_text())
            .map_err(runtime)?;
    }
    let closed = to_json(&ClosedFile {
        good: &outcome.good_closed,
        bad: &outcome.bad_closed,
    })?;
    manifest
        .write(&args.out, &format!("{id}.closed.json"), &closed)
        .map_err(runtime)?;
    let sets = to_json(&SetsFile {
        series_id: id.to_string(),
        sets: outcome.sets.clone(),
    })?;
    manifest
        .write(&args.out, &format!("{id}.consistent.json"), &sets)
        .map_err(runtime)?;
    manifest
        .write(&args.out, &format!("{id}.mining.json"), &to_json(&outcome)?)
        .map_err(runtime)?;
    println!(
        "{id}: K={} of {} triplets, {} training points; good T{:?} S{:?} I{:?}",
        outcome.k,
        outcome.triplet_count,
        outcome.best.points.len(),
        outcome.sets.good.trend,
        outcome.sets.good.seasonal,
        outcome.sets.good.irregular
    );
    manifest.finish(&args.out).map_err(runtime)
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Series CSV files or directories of them
    #[arg(long = "in", required = true, num_args = 1..)]
    pub input: Vec<PathBuf>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

fn write_reports(manifest: &mut Manifest, out: &Path, reports: &[ForecastReport]) -> Result<(), Failure> {
    for r in reports {
        manifest
            .write(out, &format!("{}.report.json", r.series_id), &to_json(r)?)
            .map_err(runtime)?;
        manifest
            .write(out, &format!("{}.plot.csv", r.series_id), &pipeline::plot_csv(r))
            .map_err(runtime)?;
    }
    manifest
        .write(out, "comparison.csv", &pipeline::comparison_csv(reports))
        .map_err(runtime)?;
    let wins = reports.iter().filter(|r| r.metrics.mape < r.hw_metrics.mape).count();
    println!(
        "CMM beats HW on {wins}/{} series ({:.1}%)",
        reports.len(),
        100.0 * wins as f64 / reports.len().max(1) as f64
    );
    Ok(())
}

pub fn evaluate(args: EvaluateArgs, mut config: RunConfig, threads: Option<usize>) -> Result<(), Failure> {
    let (mut manifest, registry) = prepare("evaluate", &mut config, &args.out, threads)?;
    median_guard(&config, &registry)?;
    let mut reports = Vec::new();
    for path in expand_inputs(&args.input)? {
        let ts = load(&path, &config, &mut manifest)?;
        let (_, report) =
            pipeline::run_cmm(&ts, &registry, &config.pipeline).map_err(core_in(format!("evaluating {}", ts.id())))?;
        reports.push(report);
    }
    write_reports(&mut manifest, &args.out, &reports)?;
    manifest.finish(&args.out).map_err(runtime)
}

#[derive(Debug, Args)]
pub struct SfdArgs {
    /// Series CSV files or directories of them (at least two series)
    #[arg(long = "in", required = true, num_args = 1..)]
    pub input: Vec<PathBuf>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

pub fn sfd(args: SfdArgs, mut config: RunConfig, threads: Option<usize>) -> Result<(), Failure> {
    let (mut manifest, _) = prepare("sfd", &mut config, &args.out, threads)?;
    let all: Vec<TimeSeries> = expand_inputs(&args.input)?
        .iter()
        .map(|p| load(p, &config, &mut manifest))
        .collect::<Result<_, _>>()?;
    let values: Vec<&[f64]> = all.iter().map(TimeSeries::values).collect();
    let matrix = similarity::sfd_matrix(&values, &config.sfd).map_err(core)?;
    let groups = similarity::group(&all, &config.sfd, config.representative.as_deref()).map_err(core)?;

    let mut csv = String::from("series");
    for ts in &all {
        let _ = write!(csv, ",{}", ts.id());
    }
    csv.push('\n');
    for (ts, row) in all.iter().zip(&matrix) {
        csv.push_str(ts.id());
        for v in row {
            let _ = write!(csv, ",{v}");
        }
        csv.push('\n');
    }
    manifest.write(&args.out, "sfd_matrix.csv", &csv).map_err(runtime)?;
    manifest
        .write(&args.out, "groups.json", &to_json(&groups)?)
        .map_err(runtime)?;
    println!("{} series in {} group(s)", all.len(), groups.len());
    manifest.finish(&args.out).map_err(runtime)
}

#[derive(Debug, Args)]
pub struct TransferArgs {
    /// Series whose consistent models are transferred (mined here)
    #[arg(long, required_unless_present = "sets", conflicts_with = "sets")]
    pub source: Option<PathBuf>,
    /// Previously mined `<id>.consistent.json` to use instead of --source
    #[arg(long)]
    pub sets: Option<PathBuf>,
    /// Target series CSV files or directories
    #[arg(long, required = true, num_args = 1..)]
    pub target: Vec<PathBuf>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

pub fn transfer(args: TransferArgs, mut config: RunConfig, threads: Option<usize>) -> Result<(), Failure> {
    let (mut manifest, registry) = prepare("transfer", &mut config, &args.out, threads)?;
    median_guard(&config, &registry)?;
    let source = match (&args.source, &args.sets) {
        (Some(path), _) => {
            let ts = load(path, &config, &mut manifest)?;
            let outcome =
                pipeline::mine(&ts, &registry, &config.pipeline, false).map_err(core_in(format!("mining {}", ts.id())))?;
            let file = SetsFile {
                series_id: ts.id().to_string(),
                sets: outcome.sets,
            };
            manifest
                .write(&args.out, &format!("{}.consistent.json", file.series_id), &to_json(&file)?)
                .map_err(runtime)?;
            file
        }
        (None, Some(path)) => {
            manifest.add_input(path).map_err(validation)?;
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read {}", path.display()))
                .map_err(validation)?;
            serde_json::from_str(&text)
                .with_context(|| format!("invalid consistent-set file {}", path.display()))
                .map_err(validation)?
        }
        (None, None) => unreachable!("clap requires --source or --sets"),
    };
    let mut reports = Vec::new();
    for path in expand_inputs(&args.target)? {
        let ts = load(&path, &config, &mut manifest)?;
        let report = similarity::transfer(&source.series_id, &source.sets, &ts, &registry, &config.pipeline)
            .map_err(core_in(format!("transferring {} to {}", source.series_id, ts.id())))?;
        reports.push(report);
    }
    write_reports(&mut manifest, &args.out, &reports)?;
    manifest.finish(&args.out).map_err(runtime)
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// JSON generator spec
    #[arg(long)]
    pub spec: PathBuf,
    /// Output CSV file; `run.json` goes next to it
    #[arg(long)]
    pub out: PathBuf,
}

pub fn synth(args: SynthArgs, mut config: RunConfig, threads: Option<usize>, seed: Option<u64>) -> Result<(), Failure> {
    let dir = match args.out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let text = std::fs::read_to_string(&args.spec)
        .with_context(|| format!("cannot read spec {}", args.spec.display()))
        .map_err(validation)?;
    let mut spec: SynthSpec = serde_json::from_str(&text)
        .with_context(|| format!("invalid spec {}", args.spec.display()))
        .map_err(validation)?;
    // An explicit --seed replaces the spec's own seed.
    match seed {
        Some(s) => spec.seed = s,
        None => config.seed = spec.seed,
    }
    config.period = spec.period;
    let (mut manifest, _) = prepare("synth", &mut config, &dir, threads)?;
    manifest.config.out = args.out.clone();
    manifest.add_input(&args.spec).map_err(validation)?;
    let ts = series::generate(&spec).map_err(core)?;
    let mut buf = Vec::new();
    series::write_csv(&ts, &mut buf).map_err(|e| runtime(e.into()))?;
    let name = args
        .out
        .file_name()
        .ok_or_else(|| validation(anyhow!("--out must name a file")))?
        .to_string_lossy()
        .into_owned();
    manifest
        .write(&dir, &name, &String::from_utf8_lossy(&buf))
        .map_err(runtime)?;
    manifest.finish(&dir).map_err(runtime)
}
