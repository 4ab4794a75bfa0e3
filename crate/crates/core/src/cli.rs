//! Command-line entry point: `encode`, `manifest`, `stats`, `baseline`,
//! `eval` and `report` subcommands, each reading and writing plain files.
//!
//! Exit status: 0 success, 2 usage error, 3 data error, 4 I/O error. On
//! failure the last stderr line is a JSON object `{"error", "kind"}`.

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::{Serialize, Serializer};

use crate::baselines::{series_features, DtwCost, Metric, NnModel};
use crate::encode::{
    batch_encode, image_rel_path, read_encode_report, EncodeConfig, ScaleOrder, DEFAULT_CLAMP_K,
    DEFAULT_IMAGE_SIZE, ENCODE_REPORT_FILE,
};
use crate::error::{Error, ErrorKind, Result};
use crate::evaluation::{
    evaluate, read_accuracy_csv, relative_accuracy_histogram, render_report, write_accuracy_csv,
    EvalReport, Scope, DEFAULT_EDGES,
};
use crate::labeling::{
    build_manifest, read_predictions, write_predictions_file, Manifest, Prediction, Regime,
};
use crate::ucr::{discover_datasets, parse_split_lenient, DatasetFiles, Split};

pub const RUN_FILE: &str = "run.json";
pub const WORKERS_ENV: &str = "TIMAGE_WORKERS";

/// Worker count, either fixed or one per available core.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Workers {
    #[default]
    Auto,
    Fixed(usize),
}

impl Workers {
    pub fn resolve(self) -> usize {
        match self {
            Workers::Fixed(n) => n,
            Workers::Auto => std::thread::available_parallelism().map_or(1, |n| n.get()),
        }
    }
}

impl FromStr for Workers {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Workers::Auto);
        }
        match s.parse::<usize>() {
            Ok(n) if n > 0 => Ok(Workers::Fixed(n)),
            _ => Err(format!(
                "expected a positive integer or \"auto\", got {s:?}"
            )),
        }
    }
}

impl fmt::Display for Workers {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Workers::Auto => f.write_str("auto"),
            Workers::Fixed(n) => write!(f, "{n}"),
        }
    }
}

impl Serialize for Workers {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

fn parse_regime(s: &str) -> std::result::Result<Regime, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_order(s: &str) -> std::result::Result<ScaleOrder, String> {
    match s {
        "clamp-first" => Ok(ScaleOrder::ClampFirst),
        "scale-first" => Ok(ScaleOrder::ScaleFirst),
        _ => Err(format!("expected clamp-first or scale-first, got {s:?}")),
    }
}

fn parse_positive_usize(s: &str) -> std::result::Result<usize, String> {
    match s.parse::<usize>() {
        Ok(n) if n > 0 => Ok(n),
        _ => Err(format!("expected a positive integer, got {s:?}")),
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "rpkit",
    version,
    about = "Recurrence-plot images and evaluation for UCR time series"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
enum Command {
    /// Encode archive series as grayscale distance-plot PNGs.
    Encode(EncodeArgs),
    /// Build classification manifests from an encode output tree.
    Manifest(ManifestArgs),
    /// Write per-dataset statistics as JSON.
    Stats(StatsArgs),
    /// Run a 1-nearest-neighbor baseline and write predictions.
    Baseline(BaselineArgs),
    /// Score predictions against a manifest.
    Eval(EvalArgs),
    /// Render summary tables, confusion matrices and histograms.
    Report(ReportArgs),
}

#[derive(Debug, Args, Serialize)]
struct ArchiveArgs {
    /// Archive root holding one directory per dataset (or a single dataset directory).
    #[arg(long)]
    archive: PathBuf,
    /// Comma-separated dataset names; all datasets when omitted.
    #[arg(long, value_delimiter = ',')]
    datasets: Vec<String>,
}

#[derive(Debug, Args, Serialize)]
struct PlotArgs {
    /// Side length of the square output images.
    #[arg(long, default_value_t = DEFAULT_IMAGE_SIZE, value_parser = parse_positive_usize)]
    size: usize,
    /// Distances above clamp_k·σ are capped.
    #[arg(long, default_value_t = DEFAULT_CLAMP_K)]
    clamp_k: f64,
    #[arg(long, default_value = "clamp-first", value_parser = parse_order)]
    order: ScaleOrder,
    /// Emit binary recurrence plots instead of distance plots.
    #[arg(long, requires = "epsilon")]
    thresholded: bool,
    #[arg(long, requires = "thresholded")]
    epsilon: Option<f64>,
}

impl PlotArgs {
    fn config(&self) -> EncodeConfig {
        EncodeConfig {
            image_size: self.size,
            clamp_k: self.clamp_k,
            order: self.order,
            thresholded: self.thresholded,
            epsilon: self.epsilon,
        }
    }
}

#[derive(Debug, Args, Serialize)]
struct EncodeArgs {
    #[command(flatten)]
    #[serde(flatten)]
    archive: ArchiveArgs,
    /// Output root for `<dataset>/<split>/<index>.png`.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    plot: PlotArgs,
    #[arg(long, env = WORKERS_ENV, default_value = "auto")]
    workers: Workers,
}

#[derive(Debug, Args, Serialize)]
struct ManifestArgs {
    /// sc, ac or dataset-sep.
    #[arg(long, value_parser = parse_regime)]
    regime: Regime,
    /// Encode output root containing encode_report.json.
    #[arg(long)]
    images: PathBuf,
    /// Manifest file (ac, dataset-sep) or directory of per-dataset manifests (sc).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct StatsArgs {
    #[command(flatten)]
    #[serde(flatten)]
    archive: ArchiveArgs,
    /// Directory receiving `<dataset>.json`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct BaselineArgs {
    #[command(flatten)]
    #[serde(flatten)]
    archive: ArchiveArgs,
    /// euclidean, dtw or rp-image.
    #[arg(long, default_value = "euclidean")]
    metric: Metric,
    /// Sakoe-Chiba half-width for dtw; unconstrained when omitted.
    #[arg(long)]
    window: Option<usize>,
    /// abs or squared-sqrt.
    #[arg(long, default_value = "abs")]
    dtw_cost: DtwCost,
    #[command(flatten)]
    #[serde(flatten)]
    plot: PlotArgs,
    /// Label namespace of the predictions: sc or ac.
    #[arg(long, default_value = "sc", value_parser = parse_regime)]
    regime: Regime,
    /// Predictions CSV.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, env = WORKERS_ENV, default_value = "auto")]
    workers: Workers,
}

#[derive(Debug, Args, Serialize)]
struct EvalArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    predictions: PathBuf,
    /// global or masked.
    #[arg(long, default_value = "global")]
    scope: Scope,
    /// Directory receiving eval.json and accuracy.csv.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct ReportArgs {
    /// eval.json written by `eval`.
    #[arg(long)]
    eval: PathBuf,
    /// `dataset,accuracy` CSV for our system; taken from --eval when omitted.
    #[arg(long)]
    ours: Option<PathBuf>,
    /// Comparison system as NAME=PATH to a `dataset,accuracy` CSV; repeatable.
    #[arg(long = "baseline", value_parser = parse_named_path)]
    baselines: Vec<(String, PathBuf)>,
    /// Comma-separated histogram bin edges (use -inf / inf for open ends).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    edges: Vec<f64>,
    #[arg(long)]
    out: PathBuf,
}

fn parse_named_path(s: &str) -> std::result::Result<(String, PathBuf), String> {
    match s.split_once('=') {
        Some((name, path)) if !name.is_empty() && !path.is_empty() => {
            Ok((name.to_string(), PathBuf::from(path)))
        }
        _ => Err(format!("expected NAME=PATH, got {s:?}")),
    }
}

#[derive(Serialize)]
struct RunRecord<'a> {
    tool: &'static str,
    version: &'static str,
    #[serde(flatten)]
    command: &'a Command,
}

fn write_run_record(dir: &Path, command: &Command) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let record = RunRecord {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command,
    };
    let path = dir.join(RUN_FILE);
    let mut json = serde_json::to_string_pretty(&record)?;
    json.push('\n');
    fs::write(&path, json).map_err(|e| Error::io(&path, e))
}

/// Parent directory of an output file, `.` for bare file names.
fn parent_dir(path: &Path) -> PathBuf {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

fn select_datasets(args: &ArchiveArgs) -> Result<Vec<PathBuf>> {
    let root = &args.archive;
    let name = root
        .file_name()
        .and_then(|n| n.to_str())
        .unwrap_or_default();
    let mut dirs = if root.join(format!("{name}_TRAIN.tsv")).is_file() {
        vec![root.clone()]
    } else {
        discover_datasets(root)?
    };
    if !args.datasets.is_empty() {
        for wanted in &args.datasets {
            if !dirs
                .iter()
                .any(|d| d.file_name().and_then(|n| n.to_str()) == Some(wanted))
            {
                return Err(Error::io(
                    root.join(wanted),
                    std::io::Error::new(
                        std::io::ErrorKind::NotFound,
                        "dataset not found in archive",
                    ),
                ));
            }
        }
        dirs.retain(|d| {
            d.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| args.datasets.iter().any(|w| w == n))
        });
    }
    Ok(dirs)
}

fn cmd_encode(args: &EncodeArgs) -> Result<()> {
    let cfg = args.plot.config();
    cfg.validate()?;
    let dirs = select_datasets(&args.archive)?;
    let report = batch_encode(&dirs, &cfg, &args.out, args.workers.resolve())?;
    for d in &report.datasets {
        println!(
            "{}: {} train, {} test",
            d.dataset,
            d.count(Split::Train),
            d.count(Split::Test)
        );
    }
    for f in &report.failures {
        eprintln!("warning: {}: {}", f.dataset, f.error);
    }
    println!(
        "encoded {} images from {} datasets ({} failures)",
        report.image_count(),
        report.datasets.len(),
        report.failures.len()
    );
    Ok(())
}

fn cmd_manifest(args: &ManifestArgs, command: &Command) -> Result<()> {
    let report = read_encode_report(&args.images.join(ENCODE_REPORT_FILE))?;
    let manifests = build_manifest(args.regime, &report.datasets, Some(&args.images))?;
    for m in &manifests {
        let gaps = m.train_coverage_gaps();
        if !gaps.is_empty() {
            eprintln!("warning: labels without train images: {}", gaps.join(", "));
        }
    }
    let run_dir = match args.regime {
        Regime::Single => {
            fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
            for m in &manifests {
                let name = m
                    .datasets()
                    .into_iter()
                    .next()
                    .unwrap_or_default()
                    .to_string();
                m.write(&args.out.join(format!("{name}.jsonl")))?;
            }
            args.out.clone()
        }
        _ => {
            let dir = parent_dir(&args.out);
            fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            manifests[0].write(&args.out)?;
            dir
        }
    };
    for m in &manifests {
        println!(
            "{} manifest: {} datasets, {} labels, {} records",
            m.regime,
            m.datasets().len(),
            m.num_labels(),
            m.records.len()
        );
    }
    write_run_record(&run_dir, command)
}

fn cmd_stats(args: &StatsArgs) -> Result<()> {
    fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    for dir in select_datasets(&args.archive)? {
        let files = DatasetFiles::locate(&dir)?;
        let (_, stats) = crate::ucr::parse_dataset(&files.train, &files.test)?;
        let path = args.out.join(format!("{}.json", stats.dataset_name));
        let mut json = serde_json::to_string_pretty(&stats.to_json())?;
        json.push('\n');
        fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
        println!(
            "{}: {} train, {} test, {} classes",
            stats.dataset_name,
            stats.n_train(),
            stats.n_test(),
            stats.class_counts_train.len()
        );
    }
    Ok(())
}

fn baseline_predictions(
    args: &BaselineArgs,
    dir: &Path,
    cfg: &EncodeConfig,
) -> Result<Vec<Prediction>> {
    let files = DatasetFiles::locate(dir)?;
    let load = |split| -> Result<Vec<_>> {
        Ok(parse_split_lenient(files.path(split), &files.name, split)?
            .into_iter()
            .filter_map(|r| r.series.ok().map(|s| (r.index, s)))
            .collect())
    };
    let train = load(Split::Train)?;
    let test = load(Split::Test)?;

    let train_items = train
        .iter()
        .map(|(_, s)| Ok((series_features(s, args.metric, cfg)?, s.label.clone())))
        .collect::<Result<Vec<_>>>()?;
    let model = NnModel::new(args.metric, args.window, train_items)?.with_dtw_cost(args.dtw_cost);
    let queries = test
        .iter()
        .map(|(_, s)| series_features(s, args.metric, cfg))
        .collect::<Result<Vec<_>>>()?;
    let labels = model.classify_all(&queries)?;
    Ok(test
        .iter()
        .zip(labels)
        .map(|((index, _), (label, _))| Prediction {
            image_path: image_rel_path(&files.name, Split::Test, *index),
            predicted_label: args.regime.target_label(&files.name, &label),
            confidence: None,
        })
        .collect())
}

fn cmd_baseline(args: &BaselineArgs, command: &Command) -> Result<()> {
    if args.regime == Regime::DatasetSeparation {
        return Err(Error::InvalidConfig(
            "baselines predict classes; use --regime sc or ac".into(),
        ));
    }
    let cfg = args.plot.config();
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.workers.resolve())
        .build()
        .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))?;
    let mut predictions = Vec::new();
    for dir in select_datasets(&args.archive)? {
        let preds = pool.install(|| baseline_predictions(args, &dir, &cfg))?;
        let name = dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        println!("{name}: {} test predictions", preds.len());
        predictions.extend(preds);
    }
    let dir = parent_dir(&args.out);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    write_predictions_file(&args.out, &predictions)?;
    write_run_record(&dir, command)
}

fn cmd_eval(args: &EvalArgs, command: &Command) -> Result<()> {
    let manifest = Manifest::read(&args.manifest)?;
    let predictions = read_predictions(&args.predictions)?;
    let reports = evaluate(&manifest, &predictions, args.scope)?;
    fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    let path = args.out.join("eval.json");
    let mut json = serde_json::to_string_pretty(&reports)?;
    json.push('\n');
    fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
    write_accuracy_csv(&args.out.join("accuracy.csv"), &reports)?;
    for r in &reports {
        println!(
            "{}: accuracy {:.4} (default rate {:.4}, n = {})",
            r.dataset, r.accuracy, r.default_rate, r.n_test
        );
    }
    write_run_record(&args.out, command)
}

fn cmd_report(args: &ReportArgs, command: &Command) -> Result<()> {
    let bytes = fs::read(&args.eval).map_err(|e| Error::io(&args.eval, e))?;
    let reports: Vec<EvalReport> = serde_json::from_slice(&bytes)?;
    let ours = match &args.ours {
        Some(p) => read_accuracy_csv(p)?,
        None => reports
            .iter()
            .map(|r| (r.dataset.clone(), r.accuracy))
            .collect(),
    };
    let edges = if args.edges.is_empty() {
        DEFAULT_EDGES.to_vec()
    } else {
        args.edges.clone()
    };
    let mut histograms = Vec::new();
    for (name, path) in &args.baselines {
        let theirs = read_accuracy_csv(path)?;
        let h = relative_accuracy_histogram(&ours, &theirs, &edges)?;
        println!(
            "vs {name}: {} better, {} equal, {} worse of {} ({} excluded)",
            h.better,
            h.equal,
            h.worse,
            h.total,
            h.excluded.len()
        );
        histograms.push((name.clone(), h));
    }
    render_report(&reports, &histograms, &args.out)?;
    write_run_record(&args.out, command)
}

fn dispatch(command: &Command) -> Result<()> {
    match command {
        Command::Encode(a) => {
            cmd_encode(a)?;
            write_run_record(&a.out, command)
        }
        Command::Manifest(a) => cmd_manifest(a, command),
        Command::Stats(a) => {
            cmd_stats(a)?;
            write_run_record(&a.out, command)
        }
        Command::Baseline(a) => cmd_baseline(a, command),
        Command::Eval(a) => cmd_eval(a, command),
        Command::Report(a) => cmd_report(a, command),
    }
}

fn exit_code(kind: ErrorKind) -> i32 {
    match kind {
        ErrorKind::Usage => 2,
        ErrorKind::Data => 3,
        ErrorKind::Io => 4,
    }
}

fn report_failure(message: &str, kind: &str) {
    eprintln!("error: {message}");
    eprintln!("{}", serde_json::json!({ "error": message, "kind": kind }));
}

/// Parses `args` (including the program name) and runs the subcommand,
/// returning the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind as ClapKind;
            if matches!(e.kind(), ClapKind::DisplayHelp | ClapKind::DisplayVersion) {
                let _ = e.print();
                return 0;
            }
            let _ = e.print();
            let first = e.to_string().lines().next().unwrap_or_default().to_string();
            let message = first.trim_start_matches("error: ");
            eprintln!(
                "{}",
                serde_json::json!({ "error": message, "kind": "usage" })
            );
            return 2;
        }
    };
    match dispatch(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            let kind = e.kind();
            let name = match kind {
                ErrorKind::Usage => "usage",
                ErrorKind::Data => "data",
                ErrorKind::Io => "io",
            };
            report_failure(&e.to_string(), name);
            exit_code(kind)
        }
    }
}
