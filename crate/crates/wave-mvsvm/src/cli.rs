//! Command-line front end: reproducible train / predict / eval / tune /
//! noise-sweep / stats / trace runs.
//!
//! Every run resolves its configuration from (highest precedence first)
//! command-line flags, the optional `--config` key-value file, and built-in
//! defaults, then writes a JSON manifest (resolved config, seed, version,
//! wall clock) beside its outputs. All randomness flows from the single
//! `--seed` value, so identical invocations produce identical outputs.

use std::collections::HashMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;
use serde_json::json;

use crate::data::{
    self, CsvSchema, LabelColumn, PcaProjection, StandardizeStats, TwoViewDataset,
};
use crate::error::{Error, Result};
use crate::eval;
use crate::model::{self, Preprocessing, TrainedModel};
use crate::solver::Hyperparams;

/// Default seed; reproducibility over surprise.
pub const DEFAULT_SEED: u64 = 42;

const DEFAULT_NOISE_RATES: &str = "0.05,0.10,0.15,0.20";

#[derive(Parser, Debug)]
#[command(
    name = "wave-mvsvm",
    version,
    about = "Two-view wave-loss kernel classifier: training, prediction, and the \
             surrounding experiment harness",
    after_help = "Config precedence: command-line flags override --config file values, \
                  which override built-in defaults."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a model and write it to a JSON file.
    Train(TrainArgs),
    /// Predict ±1 labels for a test set with a saved model.
    Predict(PredictArgs),
    /// Score a saved model on a labeled test set (summary JSON + roc.csv).
    Eval(EvalArgs),
    /// Stratified k-fold grid search over hyperparameter lists.
    Tune(TuneArgs),
    /// Accuracy under increasing training-label noise.
    NoiseSweep(NoiseSweepArgs),
    /// Friedman/Nemenyi statistics over a model×dataset accuracy matrix.
    Stats(StatsArgs),
    /// Train and export the per-iteration convergence trace as CSV.
    Trace(TraceArgs),
}

#[derive(Args, Debug, Clone)]
struct DataArgs {
    /// View-1 feature CSV.
    #[arg(long)]
    view1: PathBuf,
    /// View-2 feature CSV.
    #[arg(long, conflicts_with = "synthesize_view2")]
    view2: Option<PathBuf>,
    /// Synthesize view 2 as the PCA scores of view 1 at this explained
    /// variance threshold (e.g. 0.95).
    #[arg(long, value_name = "THRESHOLD")]
    synthesize_view2: Option<f64>,
    /// Separate labels CSV (one ±1 per line).
    #[arg(long, conflicts_with = "labels_in_view1")]
    labels: Option<PathBuf>,
    /// Read labels from the last column of the view-1 file.
    #[arg(long)]
    labels_in_view1: bool,
    /// Input files carry a header line.
    #[arg(long)]
    has_header: bool,
    /// Remap {0,1} labels to {−1,+1}.
    #[arg(long)]
    map01: bool,
}

#[derive(Args, Debug, Clone, Default)]
struct HyperArgs {
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    c1: Option<f64>,
    #[arg(long)]
    c2: Option<f64>,
    #[arg(long)]
    d: Option<f64>,
    /// Wave-loss bounding parameter for view 1.
    #[arg(long)]
    lambda1: Option<f64>,
    /// Wave-loss bounding parameter for view 2.
    #[arg(long)]
    lambda2: Option<f64>,
    /// Wave-loss shape parameter for view 1.
    #[arg(long)]
    a1: Option<f64>,
    /// Wave-loss shape parameter for view 2.
    #[arg(long)]
    a2: Option<f64>,
    /// Gaussian kernel width for both views.
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    sigma1: Option<f64>,
    #[arg(long)]
    sigma2: Option<f64>,
    /// ADMM penalty for all four constraints.
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    kappa1: Option<f64>,
    #[arg(long)]
    kappa2: Option<f64>,
    #[arg(long)]
    kappa3: Option<f64>,
    #[arg(long)]
    kappa4: Option<f64>,
    #[arg(long)]
    tau1: Option<f64>,
    #[arg(long)]
    tau2: Option<f64>,
    #[arg(long)]
    gd_rate: Option<f64>,
    #[arg(long)]
    t1_max: Option<usize>,
    #[arg(long)]
    t2_max: Option<usize>,
    #[arg(long)]
    tol_obj: Option<f64>,
    #[arg(long)]
    tol_res: Option<f64>,
    #[arg(long)]
    tol_grad: Option<f64>,
}

#[derive(Args, Debug, Clone)]
struct CommonArgs {
    /// Key-value config file mirroring the long flag names.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed for every random choice in the run.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    hyper: HyperArgs,
    #[command(flatten)]
    common: CommonArgs,
    /// z-score features with statistics stored in the model.
    #[arg(long)]
    standardize: bool,
    /// Output model path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    view1: PathBuf,
    /// View-2 features; may be omitted when the model carries a view-2
    /// synthesis map.
    #[arg(long)]
    view2: Option<PathBuf>,
    /// Strip a label column (last) from the view-1 file before predicting.
    #[arg(long)]
    labels_in_view1: bool,
    #[arg(long)]
    has_header: bool,
    #[command(flatten)]
    common: CommonArgs,
    /// Output predictions CSV (one ±1 per row).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    common: CommonArgs,
    /// Output directory (summary.json, roc.csv, manifest.json).
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args, Debug)]
struct TuneArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    hyper: HyperArgs,
    #[command(flatten)]
    common: CommonArgs,
    /// Cross-validation fold count.
    #[arg(long)]
    folds: Option<usize>,
    /// Comma-separated candidate list for c1 (also applied to c2 unless
    /// --grid-c2 is given).
    #[arg(long)]
    grid_c1: Option<String>,
    #[arg(long)]
    grid_c2: Option<String>,
    #[arg(long)]
    grid_d: Option<String>,
    /// Comma-separated candidate list for the shared kernel width.
    #[arg(long)]
    grid_sigma: Option<String>,
    /// Candidates for both views' wave-loss bounding parameter.
    #[arg(long)]
    grid_lambda: Option<String>,
    /// Candidates for both views' wave-loss shape parameter.
    #[arg(long)]
    grid_a: Option<String>,
    /// Output directory (best.json, table.csv, manifest.json).
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args, Debug)]
struct NoiseSweepArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    hyper: HyperArgs,
    #[command(flatten)]
    common: CommonArgs,
    /// Comma-separated label-flip rates.
    #[arg(long)]
    rates: Option<String>,
    /// Train fraction of the underlying split.
    #[arg(long)]
    train_fraction: Option<f64>,
    #[arg(long)]
    standardize: bool,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct StatsArgs {
    /// Accuracy matrix CSV: rows are models, first column the model name,
    /// remaining columns one accuracy per dataset.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    has_header: bool,
    /// Critical value for the Nemenyi test; defaults to the α=0.05 table
    /// entry for the detected model count.
    #[arg(long)]
    q_alpha: Option<f64>,
    #[command(flatten)]
    common: CommonArgs,
    /// Output directory (ranks.csv, stats.csv, summary.json, manifest.json).
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args, Debug)]
struct TraceArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    hyper: HyperArgs,
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    standardize: bool,
    /// Output trace CSV path.
    #[arg(long)]
    out: PathBuf,
}

/// Parsed `key = value` config file with flag-name keys.
#[derive(Debug, Default)]
struct ConfigMap(HashMap<String, String>);

const KNOWN_CONFIG_KEYS: &[&str] = &[
    "gamma", "c1", "c2", "d", "lambda1", "lambda2", "a1", "a2", "sigma", "sigma1", "sigma2",
    "kappa", "kappa1", "kappa2", "kappa3", "kappa4", "tau1", "tau2", "gd-rate", "t1-max",
    "t2-max", "tol-obj", "tol-res", "tol-grad", "seed", "train-fraction", "folds", "rates",
    "q-alpha",
];

impl ConfigMap {
    fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)?;
        let mut map = HashMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Format(format!(
                    "{}: line {}: expected 'key = value', got '{raw}'",
                    path.display(),
                    idx + 1
                )));
            };
            let key = key.trim().replace('_', "-");
            if !KNOWN_CONFIG_KEYS.contains(&key.as_str()) {
                return Err(Error::Format(format!(
                    "{}: line {}: unknown config key '{key}'",
                    path.display(),
                    idx + 1
                )));
            }
            map.insert(key, value.trim().to_string());
        }
        Ok(Self(map))
    }

    fn get_f64(&self, key: &str) -> Result<Option<f64>> {
        self.0
            .get(key)
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| Error::Format(format!("config key '{key}': '{v}' is not a number")))
            })
            .transpose()
    }

    fn get_usize(&self, key: &str) -> Result<Option<usize>> {
        self.0
            .get(key)
            .map(|v| {
                v.parse::<usize>().map_err(|_| {
                    Error::Format(format!("config key '{key}': '{v}' is not an integer"))
                })
            })
            .transpose()
    }

    fn get_u64(&self, key: &str) -> Result<Option<u64>> {
        self.0
            .get(key)
            .map(|v| {
                v.parse::<u64>().map_err(|_| {
                    Error::Format(format!("config key '{key}': '{v}' is not an integer"))
                })
            })
            .transpose()
    }

    fn get_string(&self, key: &str) -> Option<String> {
        self.0.get(key).cloned()
    }
}

fn pick<T>(flag: Option<T>, config: Option<T>, default: T) -> T {
    flag.or(config).unwrap_or(default)
}

fn resolve_seed(common: &CommonArgs, cfg: &ConfigMap) -> Result<u64> {
    Ok(pick(common.seed, cfg.get_u64("seed")?, DEFAULT_SEED))
}

fn resolve_hyperparams(args: &HyperArgs, cfg: &ConfigMap) -> Result<Hyperparams> {
    let mut hp = Hyperparams::default();
    hp.gamma = pick(args.gamma, cfg.get_f64("gamma")?, hp.gamma);
    hp.c1 = pick(args.c1, cfg.get_f64("c1")?, hp.c1);
    hp.c2 = pick(args.c2, cfg.get_f64("c2")?, hp.c2);
    hp.d = pick(args.d, cfg.get_f64("d")?, hp.d);
    hp.wave1.lambda = pick(args.lambda1, cfg.get_f64("lambda1")?, hp.wave1.lambda);
    hp.wave2.lambda = pick(args.lambda2, cfg.get_f64("lambda2")?, hp.wave2.lambda);
    hp.wave1.a = pick(args.a1, cfg.get_f64("a1")?, hp.wave1.a);
    hp.wave2.a = pick(args.a2, cfg.get_f64("a2")?, hp.wave2.a);
    if let Some(sigma) = pick(args.sigma, cfg.get_f64("sigma")?, f64::NAN).into_option() {
        hp.kernel1.sigma = sigma;
        hp.kernel2.sigma = sigma;
    }
    hp.kernel1.sigma = pick(args.sigma1, cfg.get_f64("sigma1")?, hp.kernel1.sigma);
    hp.kernel2.sigma = pick(args.sigma2, cfg.get_f64("sigma2")?, hp.kernel2.sigma);
    if let Some(kappa) = pick(args.kappa, cfg.get_f64("kappa")?, f64::NAN).into_option() {
        hp.kappa1 = kappa;
        hp.kappa2 = kappa;
        hp.kappa3 = kappa;
        hp.kappa4 = kappa;
    }
    hp.kappa1 = pick(args.kappa1, cfg.get_f64("kappa1")?, hp.kappa1);
    hp.kappa2 = pick(args.kappa2, cfg.get_f64("kappa2")?, hp.kappa2);
    hp.kappa3 = pick(args.kappa3, cfg.get_f64("kappa3")?, hp.kappa3);
    hp.kappa4 = pick(args.kappa4, cfg.get_f64("kappa4")?, hp.kappa4);
    hp.tau1 = pick(args.tau1, cfg.get_f64("tau1")?, hp.tau1);
    hp.tau2 = pick(args.tau2, cfg.get_f64("tau2")?, hp.tau2);
    hp.gd_rate = pick(args.gd_rate, cfg.get_f64("gd-rate")?, hp.gd_rate);
    hp.t1_max = pick(args.t1_max, cfg.get_usize("t1-max")?, hp.t1_max);
    hp.t2_max = pick(args.t2_max, cfg.get_usize("t2-max")?, hp.t2_max);
    hp.tol_obj = pick(args.tol_obj, cfg.get_f64("tol-obj")?, hp.tol_obj);
    hp.tol_res = pick(args.tol_res, cfg.get_f64("tol-res")?, hp.tol_res);
    hp.tol_grad = pick(args.tol_grad, cfg.get_f64("tol-grad")?, hp.tol_grad);
    hp.validate()?;
    Ok(hp)
}

trait IntoOption {
    fn into_option(self) -> Option<f64>;
}

impl IntoOption for f64 {
    fn into_option(self) -> Option<f64> {
        if self.is_nan() {
            None
        } else {
            Some(self)
        }
    }
}

fn parse_f64_list(raw: &str, what: &str) -> Result<Vec<f64>> {
    let values: Vec<f64> = raw
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Input(format!("{what}: '{s}' is not a number")))
        })
        .collect::<Result<_>>()?;
    if values.is_empty() {
        return Err(Error::Input(format!("{what}: empty list")));
    }
    Ok(values)
}

/// A labeled two-view dataset read per the flags, plus the PCA map when
/// view 2 was synthesized.
fn read_labeled_dataset(flags: &DataArgs) -> Result<(TwoViewDataset, Option<PcaProjection>)> {
    let schema = if flags.labels_in_view1 {
        CsvSchema {
            has_header: flags.has_header,
            label_column: Some(LabelColumn::Last),
            map_zero_one: flags.map01,
        }
    } else {
        CsvSchema::features(flags.has_header)
    };
    let (view1, inline_labels) = data::load_csv(&flags.view1, &schema)?;
    let labels = match (inline_labels, &flags.labels) {
        (Some(y), None) => y,
        (None, Some(path)) => data::load_labels_csv(path, flags.has_header, flags.map01)?,
        (None, None) => {
            return Err(Error::Input(
                "labels required: pass --labels FILE or --labels-in-view1".into(),
            ))
        }
        (Some(_), Some(_)) => unreachable!("clap forbids both label sources"),
    };
    let (view2, pca) = match (&flags.view2, flags.synthesize_view2) {
        (Some(path), None) => {
            let (m, _) = data::load_csv(path, &CsvSchema::features(flags.has_header))?;
            (m, None)
        }
        (None, Some(threshold)) => {
            let projection = data::pca_projection(&view1, threshold)?;
            (projection.apply(&view1)?, Some(projection))
        }
        (None, None) => {
            return Err(Error::Input(
                "view 2 required: pass --view2 FILE or --synthesize-view2 THRESHOLD".into(),
            ))
        }
        (Some(_), Some(_)) => unreachable!("clap forbids both view-2 sources"),
    };
    Ok((TwoViewDataset::new(view1, view2, labels)?, pca))
}

/// Applies a model's stored preprocessing to raw test matrices.
fn prepare_test_matrices(
    model: &TrainedModel,
    view1: DMatrix<f64>,
    view2: Option<DMatrix<f64>>,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let view2 = match view2 {
        Some(m) => m,
        None => match &model.preprocessing.pca_view2 {
            Some(p) => p.apply(&view1)?,
            None => {
                return Err(Error::Input(
                    "the model carries no view-2 synthesis map; pass --view2".into(),
                ))
            }
        },
    };
    match &model.preprocessing.scaler {
        Some(s) => Ok((s.view1.apply(&view1)?, s.view2.apply(&view2)?)),
        None => Ok((view1, view2)),
    }
}

fn standardize_in_place(ds: &TwoViewDataset) -> Result<(TwoViewDataset, StandardizeStats)> {
    let (train, _, stats) = data::standardize(ds, ds)?;
    Ok((train, stats))
}

fn write_manifest(
    path: &Path,
    command: &str,
    seed: u64,
    resolved: serde_json::Value,
    started: std::time::Instant,
) -> Result<()> {
    let manifest = json!({
        "command": command,
        "version": format!("wave-mvsvm {}", env!("CARGO_PKG_VERSION")),
        "seed": seed,
        "resolved": resolved,
        "wall_clock_secs": started.elapsed().as_secs_f64(),
    });
    std::fs::write(path, serde_json::to_string_pretty(&manifest).expect("manifest json"))?;
    Ok(())
}

fn manifest_beside(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}

fn run_train(args: &TrainArgs) -> Result<()> {
    let started = std::time::Instant::now();
    let cfg = ConfigMap::load(args.common.config.as_deref())?;
    let seed = resolve_seed(&args.common, &cfg)?;
    let hp = resolve_hyperparams(&args.hyper, &cfg)?;
    let (raw, pca) = read_labeled_dataset(&args.data)?;
    let (ds, scaler) = if args.standardize {
        let (ds, stats) = standardize_in_place(&raw)?;
        (ds, Some(stats))
    } else {
        (raw, None)
    };
    let (mut model, _trace) = model::fit(&ds, &hp)?;
    model.preprocessing = Preprocessing { scaler, pca_view2: pca };
    model::save(&model, &args.out)?;
    let resolved = json!({
        "hyperparams": hp,
        "inputs": { "view1": args.data.view1, "view2": args.data.view2,
                    "labels": args.data.labels, "labels_in_view1": args.data.labels_in_view1,
                    "has_header": args.data.has_header, "map01": args.data.map01 },
        "synthesize_view2": args.data.synthesize_view2,
        "standardize": args.standardize,
        "out": args.out,
    });
    write_manifest(&manifest_beside(&args.out), "train", seed, resolved, started)
}

fn run_predict(args: &PredictArgs) -> Result<()> {
    let started = std::time::Instant::now();
    let cfg = ConfigMap::load(args.common.config.as_deref())?;
    let seed = resolve_seed(&args.common, &cfg)?;
    let model = model::load(&args.model)?;
    let schema = if args.labels_in_view1 {
        CsvSchema {
            has_header: args.has_header,
            label_column: Some(LabelColumn::Last),
            map_zero_one: false,
        }
    } else {
        CsvSchema::features(args.has_header)
    };
    let (view1, _) = data::load_csv(&args.view1, &schema)?;
    let view2 = args
        .view2
        .as_ref()
        .map(|p| data::load_csv(p, &CsvSchema::features(args.has_header)).map(|(m, _)| m))
        .transpose()?;
    let (v1, v2) = prepare_test_matrices(&model, view1, view2)?;
    let preds = model::predict_batch(&model, &v1, &v2)?;
    let mut out = String::new();
    for p in preds.iter() {
        out.push_str(&format!("{p}\n"));
    }
    std::fs::write(&args.out, out)?;
    let resolved = json!({
        "model": args.model,
        "inputs": { "view1": args.view1, "view2": args.view2 },
        "out": args.out,
    });
    write_manifest(&manifest_beside(&args.out), "predict", seed, resolved, started)
}

fn run_eval(args: &EvalArgs) -> Result<()> {
    let started = std::time::Instant::now();
    let cfg = ConfigMap::load(args.common.config.as_deref())?;
    let seed = resolve_seed(&args.common, &cfg)?;
    let model = model::load(&args.model)?;
    let (raw, _) = read_labeled_dataset_for_eval(&args.data)?;
    let (v1, v2) = prepare_test_matrices(&model, raw.view1.clone(), Some(raw.view2.clone()))?;
    let test = TwoViewDataset::new(v1, v2, raw.labels.clone())?;
    let report = eval::evaluate(&model, &test)?;
    std::fs::create_dir_all(&args.out_dir)?;
    std::fs::write(
        args.out_dir.join("summary.json"),
        serde_json::to_string_pretty(&summary_without_roc(&report)).expect("summary json"),
    )?;
    std::fs::write(args.out_dir.join("roc.csv"), report.roc_csv())?;
    let resolved = json!({
        "model": args.model,
        "inputs": { "view1": args.data.view1, "view2": args.data.view2,
                    "labels": args.data.labels, "labels_in_view1": args.data.labels_in_view1 },
        "out_dir": args.out_dir,
    });
    write_manifest(&args.out_dir.join("manifest.json"), "eval", seed, resolved, started)
}

/// Eval-style dataset read: view 2 may be synthesized only when the model
/// has no stored map (the caller decides); here it mirrors the train reader
/// but tolerates a missing synthesis threshold because the model's own PCA
/// map fills the gap later.
fn read_labeled_dataset_for_eval(flags: &DataArgs) -> Result<(TwoViewDataset, Option<PcaProjection>)> {
    if flags.view2.is_none() && flags.synthesize_view2.is_none() {
        // Fall back to a features+labels read; view 2 synthesized from the
        // model inside prepare_test_matrices would need the raw view 1, so
        // synthesize here with a full-variance threshold is wrong. Require
        // explicit input instead.
        return Err(Error::Input(
            "eval needs --view2 FILE or --synthesize-view2 THRESHOLD".into(),
        ));
    }
    read_labeled_dataset(flags)
}

fn summary_without_roc(report: &eval::EvalReport) -> serde_json::Value {
    json!({
        "accuracy": report.accuracy,
        "tp": report.tp,
        "tn": report.tn,
        "fp": report.fp,
        "fn": report.fn_,
        "auc": report.auc,
    })
}

fn run_tune(args: &TuneArgs) -> Result<()> {
    let started = std::time::Instant::now();
    let cfg = ConfigMap::load(args.common.config.as_deref())?;
    let seed = resolve_seed(&args.common, &cfg)?;
    let base = resolve_hyperparams(&args.hyper, &cfg)?;
    let folds = pick(args.folds, cfg.get_usize("folds")?, 5);
    let (ds, _) = read_labeled_dataset(&args.data)?;

    let list_or = |flag: &Option<String>, key: &str, fallback: &str| -> Result<Vec<f64>> {
        let raw = flag.clone().or_else(|| cfg.get_string(key)).unwrap_or_else(|| fallback.into());
        parse_f64_list(&raw, key)
    };
    let c1_list = list_or(&args.grid_c1, "grid-c1", "0.25,1,4")?;
    let c2_list = match &args.grid_c2 {
        Some(raw) => parse_f64_list(raw, "grid-c2")?,
        None => c1_list.clone(),
    };
    let d_list = list_or(&args.grid_d, "grid-d", &base.d.to_string())?;
    let sigma_list = list_or(&args.grid_sigma, "grid-sigma", "0.5,1,2,4")?;
    let lambda_list = list_or(&args.grid_lambda, "grid-lambda", &base.wave1.lambda.to_string())?;
    let a_list = list_or(&args.grid_a, "grid-a", &base.wave1.a.to_string())?;

    let mut grid = Vec::new();
    for &sigma in &sigma_list {
        for &c1 in &c1_list {
            for &c2 in &c2_list {
                for &d in &d_list {
                    for &lambda in &lambda_list {
                        for &a in &a_list {
                            let mut hp = base;
                            hp.kernel1.sigma = sigma;
                            hp.kernel2.sigma = sigma;
                            hp.c1 = c1;
                            hp.c2 = c2;
                            hp.d = d;
                            hp.wave1.lambda = lambda;
                            hp.wave2.lambda = lambda;
                            hp.wave1.a = a;
                            hp.wave2.a = a;
                            grid.push(hp);
                        }
                    }
                }
            }
        }
    }

    let (best, table) = eval::kfold_grid_search(&ds, &grid, folds, seed)?;
    std::fs::create_dir_all(&args.out_dir)?;
    std::fs::write(
        args.out_dir.join("best.json"),
        serde_json::to_string_pretty(&best).expect("hyperparams json"),
    )?;
    let mut csv = String::from("sigma,c1,c2,d,lambda,a,mean_accuracy\n");
    for (hp, acc) in grid.iter().zip(&table.mean_accuracies) {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            hp.kernel1.sigma, hp.c1, hp.c2, hp.d, hp.wave1.lambda, hp.wave1.a, acc
        ));
    }
    std::fs::write(args.out_dir.join("table.csv"), csv)?;
    let resolved = json!({
        "base_hyperparams": base,
        "folds": folds,
        "grid_sizes": { "sigma": sigma_list.len(), "c1": c1_list.len(), "c2": c2_list.len(),
                        "d": d_list.len(), "lambda": lambda_list.len(), "a": a_list.len() },
        "inputs": { "view1": args.data.view1, "view2": args.data.view2 },
        "out_dir": args.out_dir,
    });
    write_manifest(&args.out_dir.join("manifest.json"), "tune", seed, resolved, started)
}

fn run_noise_sweep(args: &NoiseSweepArgs) -> Result<()> {
    let started = std::time::Instant::now();
    let cfg = ConfigMap::load(args.common.config.as_deref())?;
    let seed = resolve_seed(&args.common, &cfg)?;
    let hp = resolve_hyperparams(&args.hyper, &cfg)?;
    let rates_raw = args
        .rates
        .clone()
        .or_else(|| cfg.get_string("rates"))
        .unwrap_or_else(|| DEFAULT_NOISE_RATES.into());
    let rates = parse_f64_list(&rates_raw, "rates")?;
    let fraction = pick(args.train_fraction, cfg.get_f64("train-fraction")?, 0.7);
    let (ds, _) = read_labeled_dataset(&args.data)?;
    let (train_raw, test_raw) = data::train_test_split(&ds, fraction, seed)?;

    let mut csv = String::from("rate,train_accuracy,test_accuracy,auc\n");
    for &rate in &rates {
        let noisy_labels = data::inject_label_noise(&train_raw.labels, rate, seed)?;
        let noisy_train = TwoViewDataset::new(
            train_raw.view1.clone(),
            train_raw.view2.clone(),
            noisy_labels,
        )?;
        let (train, test) = if args.standardize {
            let (tr, te, _) = data::standardize(&noisy_train, &test_raw)?;
            (tr, te)
        } else {
            (noisy_train, test_raw.clone())
        };
        let (m, _) = model::fit(&train, &hp)?;
        let train_preds = model::predict_batch(&m, &train.view1, &train.view2)?;
        let train_acc = eval::accuracy(&train_preds, &train.labels)?;
        let report = eval::evaluate(&m, &test)?;
        csv.push_str(&format!("{rate},{train_acc},{},{}\n", report.accuracy, report.auc));
    }
    std::fs::write(&args.out, csv)?;
    let resolved = json!({
        "hyperparams": hp,
        "rates": rates,
        "train_fraction": fraction,
        "standardize": args.standardize,
        "inputs": { "view1": args.data.view1, "view2": args.data.view2,
                    "labels": args.data.labels, "labels_in_view1": args.data.labels_in_view1 },
        "out": args.out,
    });
    write_manifest(&manifest_beside(&args.out), "noise-sweep", seed, resolved, started)
}

fn run_stats(args: &StatsArgs) -> Result<()> {
    let started = std::time::Instant::now();
    let cfg = ConfigMap::load(args.common.config.as_deref())?;
    let seed = resolve_seed(&args.common, &cfg)?;
    let text = std::fs::read_to_string(&args.input)?;
    let mut names = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, line) in text.lines().enumerate().skip(usize::from(args.has_header)) {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let name = fields
            .next()
            .ok_or_else(|| Error::Format(format!("line {line_no}: empty row")))?
            .trim()
            .to_string();
        let values: Vec<f64> = fields
            .map(|f| {
                f.trim().parse::<f64>().map_err(|_| {
                    Error::Format(format!("line {line_no}: '{f}' is not a number"))
                })
            })
            .collect::<Result<_>>()?;
        if let Some(first) = rows.first() {
            if values.len() != first.len() {
                return Err(Error::Format(format!(
                    "line {line_no}: ragged row ({} values, expected {})",
                    values.len(),
                    first.len()
                )));
            }
        }
        names.push(name);
        rows.push(values);
    }
    if rows.len() < 2 {
        return Err(Error::Input("stats needs at least two model rows".into()));
    }
    let p = rows.len();
    let n = rows[0].len();
    let acc = DMatrix::from_fn(p, n, |r, c| rows[r][c]);
    let q_alpha = match pick(args.q_alpha, cfg.get_f64("q-alpha")?, f64::NAN).into_option() {
        Some(q) => q,
        None => eval::nemenyi_q_alpha_05(p).ok_or_else(|| {
            Error::Input(format!(
                "no built-in q_alpha for p = {p}; pass --q-alpha explicitly"
            ))
        })?,
    };
    let table = eval::RankTable::compute(acc, q_alpha)?;

    std::fs::create_dir_all(&args.out_dir)?;
    let mut ranks_csv = String::from("model,avg_rank\n");
    for (name, rank) in names.iter().zip(table.avg_ranks.iter()) {
        ranks_csv.push_str(&format!("{name},{rank}\n"));
    }
    std::fs::write(args.out_dir.join("ranks.csv"), ranks_csv)?;
    std::fs::write(
        args.out_dir.join("stats.csv"),
        format!("chi2_f,f_f,cd\n{},{},{}\n", table.chi2_f, table.f_f, table.cd),
    )?;
    let summary = json!({
        "models": names,
        "avg_ranks": table.avg_ranks.as_slice(),
        "chi2_f": table.chi2_f,
        "f_f": table.f_f,
        "cd": table.cd,
        "q_alpha": q_alpha,
        "p": p,
        "n_datasets": n,
    });
    std::fs::write(
        args.out_dir.join("summary.json"),
        serde_json::to_string_pretty(&summary).expect("summary json"),
    )?;
    let resolved = json!({
        "input": args.input,
        "q_alpha": q_alpha,
        "out_dir": args.out_dir,
    });
    write_manifest(&args.out_dir.join("manifest.json"), "stats", seed, resolved, started)
}

fn run_trace(args: &TraceArgs) -> Result<()> {
    let started = std::time::Instant::now();
    let cfg = ConfigMap::load(args.common.config.as_deref())?;
    let seed = resolve_seed(&args.common, &cfg)?;
    let hp = resolve_hyperparams(&args.hyper, &cfg)?;
    let (raw, _) = read_labeled_dataset(&args.data)?;
    let ds = if args.standardize { standardize_in_place(&raw)?.0 } else { raw };
    let (_, trace) = model::fit(&ds, &hp)?;
    trace.write_csv(&args.out)?;
    let resolved = json!({
        "hyperparams": hp,
        "standardize": args.standardize,
        "inputs": { "view1": args.data.view1, "view2": args.data.view2,
                    "labels": args.data.labels, "labels_in_view1": args.data.labels_in_view1 },
        "out": args.out,
    });
    write_manifest(&manifest_beside(&args.out), "trace", seed, resolved, started)
}

fn execute(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Train(args) => run_train(args),
        Command::Predict(args) => run_predict(args),
        Command::Eval(args) => run_eval(args),
        Command::Tune(args) => run_tune(args),
        Command::NoiseSweep(args) => run_noise_sweep(args),
        Command::Stats(args) => run_stats(args),
        Command::Trace(args) => run_trace(args),
    }
}

/// Parses `argv` (including the program name) and runs the sub-command.
///
/// Exit codes: 0 on success, 1 on runtime or numerical errors, 2 on usage
/// errors (message on standard error).
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints help/version to stdout (exit 0) and usage errors
            // to stderr (exit 2).
            let _ = e.print();
            return if e.exit_code() == 0 { 0 } else { 2 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            1
        }
    }
}
