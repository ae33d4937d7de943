//! The `datefruit` command line.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::classifiers::{self, ClassifierKind, LabeledDataset, TrainConfig, TrainedModel};
use crate::dataset::{self, DatasetManifest, FailurePolicy, SynthSpec};
use crate::error::{Error, Result};
use crate::evaluation::{self, report, EvalConfig, Protocol};
use crate::features::table::FeatureTable;
use crate::features::{FamilySet, FeatureConfig, FeatureSchema, FeatureVector};
use crate::imaging;
use crate::segmentation::{self, SegmentationParams};

const EXIT_CODES: &str = "\
Exit codes:
  0  success
  2  configuration or usage error (bad flags, spec, config or model file)
  3  I/O error (unreadable input, unwritable output, missing image)
  4  pipeline error (e.g. no ROI found, too many extraction failures)
  5  internal invariant violation";

#[derive(Debug, Parser)]
#[command(name = "datefruit", version, about = "Date fruit disease recognition pipeline", after_help = EXIT_CODES)]
pub struct Cli {
    /// Worker threads for per-image and per-fold parallelism (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic labelled image set and its manifest.
    Synth(SynthArgs),
    /// Crop one image to its fruit region.
    Segment(SegmentArgs),
    /// Compute the feature table for every image in a manifest.
    Extract(ExtractArgs),
    /// Fit a classifier on a feature table and save the model.
    Train(TrainArgs),
    /// Classify images or feature rows with a saved model.
    Predict(PredictArgs),
    /// Cross-validate classifiers × feature sets and write reports.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// JSON generator spec; the built-in four-class spec when omitted.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Output directory (images/ and manifest.csv are written inside).
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override the number of images per class.
    #[arg(long)]
    pub per_class: Option<usize>,
}

/// Segmentation settings shared by several commands.
#[derive(Debug, Args, Clone)]
pub struct SegmentationOpts {
    /// JSON segmentation parameters.
    #[arg(long = "segmentation")]
    pub params: Option<PathBuf>,
    /// Resize factor applied before segmentation (overrides the file).
    #[arg(long)]
    pub scale: Option<f64>,
}

impl SegmentationOpts {
    fn load(&self) -> Result<SegmentationParams> {
        let mut p: SegmentationParams = match &self.params {
            Some(path) => read_json(path)?,
            None => SegmentationParams::default(),
        };
        if let Some(s) = self.scale {
            p.resize_scale = s;
        }
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    #[arg(long)]
    pub image: PathBuf,
    /// Output file for the crop (PPM).
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub segmentation: SegmentationOpts,
    /// Also write `<out stem>.<stage>.pgm` for every intermediate stage.
    #[arg(long)]
    pub debug_stages: bool,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Output feature CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Feature families, e.g. `lab`, `lab+stat` or `all`.
    #[arg(long, default_value = "all")]
    pub features: FamilySet,
    #[command(flatten)]
    pub segmentation: SegmentationOpts,
    /// Use the whole resized frame instead of the ROI crop.
    #[arg(long)]
    pub no_crop: bool,
    /// Stop at the first failing image instead of skipping it.
    #[arg(long)]
    pub abort_on_error: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Feature CSV produced by `extract`.
    #[arg(long)]
    pub features_csv: PathBuf,
    /// rf, nb, mlp or fdt.
    #[arg(long)]
    pub classifier: ClassifierKind,
    /// Families to train on (default: every column in the CSV).
    #[arg(long)]
    pub families: Option<FamilySet>,
    /// JSON training configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output model file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[group(id = "input", required = true, multiple = false, args = ["image", "csv"])]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Image to segment, featurize and classify.
    #[arg(long)]
    pub image: Option<PathBuf>,
    /// Feature CSV whose rows are classified.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[command(flatten)]
    pub segmentation: SegmentationOpts,
    #[arg(long)]
    pub no_crop: bool,
}

#[derive(Debug, Args)]
#[group(id = "data", required = false, multiple = false, args = ["manifest", "features_csv"])]
pub struct EvaluateArgs {
    /// Full experiment configuration (JSON); flags below override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Image manifest to extract features from.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Pre-computed feature CSV.
    #[arg(long)]
    pub features_csv: Option<PathBuf>,
    /// Output directory for report.txt, report.json and config.json.
    #[arg(long)]
    pub out: PathBuf,
    /// Number of cross-validation folds.
    #[arg(long, conflicts_with = "holdout")]
    pub k: Option<usize>,
    /// Hold out this fraction once instead of k-fold CV.
    #[arg(long)]
    pub holdout: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated classifiers (default: rf,nb,mlp,fdt).
    #[arg(long, value_delimiter = ',')]
    pub classifiers: Option<Vec<ClassifierKind>>,
    /// Comma-separated feature sets (default: lab,stat,lab+stat,all).
    #[arg(long, value_delimiter = ',')]
    pub feature_sets: Option<Vec<FamilySet>>,
    #[command(flatten)]
    pub segmentation: SegmentationOpts,
}

/// Everything that determines an `evaluate` run; written to `config.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub manifest: Option<PathBuf>,
    pub features_csv: Option<PathBuf>,
    pub segmentation: SegmentationParams,
    pub features: FeatureConfig,
    pub failure_policy: FailurePolicy,
    pub classifiers: Vec<ClassifierKind>,
    pub feature_sets: Vec<FamilySet>,
    pub train: TrainConfig,
    pub evaluation: EvalConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            manifest: None,
            features_csv: None,
            segmentation: SegmentationParams::default(),
            features: FeatureConfig::default(),
            failure_policy: FailurePolicy::Skip,
            classifiers: ClassifierKind::ALL.to_vec(),
            feature_sets: FamilySet::standard_grid(),
            train: TrainConfig::default(),
            evaluation: EvalConfig::default(),
        }
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn read_table(path: &Path) -> Result<FeatureTable> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    FeatureTable::read_csv(std::io::BufReader::new(file))
}

/// Parses `std::env::args`, runs the command and returns the exit code.
pub fn main() -> i32 {
    let cli = Cli::parse();
    match run(cli, &mut std::io::stdout()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.kind().exit_code()
        }
    }
}

pub fn run(cli: Cli, out: &mut (dyn Write + Send)) -> Result<()> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(Error::InvalidConfig("--jobs must be positive".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
    pool.install(|| match cli.command {
        Command::Synth(a) => synth(a, out),
        Command::Segment(a) => segment(a, out),
        Command::Extract(a) => extract(a, out),
        Command::Train(a) => train(a, out),
        Command::Predict(a) => predict(a, out),
        Command::Evaluate(a) => evaluate(a, out),
    })
}

fn stdout_err(e: std::io::Error) -> Error {
    Error::io("<stdout>", e)
}

fn synth(a: SynthArgs, out: &mut dyn Write) -> Result<()> {
    let mut spec: SynthSpec = match &a.spec {
        Some(p) => read_json(p)?,
        None => SynthSpec::default(),
    };
    if let Some(s) = a.seed {
        spec.seed = s;
    }
    if let Some(n) = a.per_class {
        spec.images_per_class = n;
    }
    spec.validate()?;
    dataset::synth_generate(&spec, &a.out)?;
    writeln!(out, "{}", a.out.join(dataset::synth::MANIFEST_NAME).display()).map_err(stdout_err)
}

fn segment(a: SegmentArgs, out: &mut dyn Write) -> Result<()> {
    let params = a.segmentation.load()?;
    let bytes = std::fs::read(&a.image).map_err(|e| Error::io(&a.image, e))?;
    let img = imaging::decode_image(&bytes)?;
    let stages = segmentation::segment_stages(&img, &params)?;
    if a.debug_stages {
        let stem = a.out.with_extension("");
        for (name, gray) in stages.gray_stages() {
            let path = PathBuf::from(format!("{}.{name}.pgm", stem.display()));
            write_file(&path, imaging::encode_pgm(&gray))?;
        }
    }
    let crop = stages.crop()?;
    write_file(&a.out, imaging::encode_ppm(&crop))?;
    let b = stages.bbox.expect("crop succeeded");
    writeln!(
        out,
        "{} {}x{} at ({}, {})",
        a.out.display(),
        b.width(),
        b.height(),
        b.x0,
        b.y0
    )
    .map_err(stdout_err)
}

fn extraction(
    manifest: &DatasetManifest,
    seg: &SegmentationParams,
    feat: &FeatureConfig,
    policy: FailurePolicy,
) -> Result<dataset::Extraction> {
    let ex = dataset::extract_dataset(manifest, seg, feat, policy)?;
    for f in &ex.failures {
        eprintln!("skipped {}: {}", f.path, f.reason);
    }
    Ok(ex)
}

fn extract(a: ExtractArgs, out: &mut dyn Write) -> Result<()> {
    let mut seg = a.segmentation.load()?;
    seg.crop_to_roi = !a.no_crop;
    let feat = FeatureConfig::with_families(a.features);
    let manifest = DatasetManifest::load(&a.manifest)?;
    let policy = if a.abort_on_error {
        FailurePolicy::Abort
    } else {
        FailurePolicy::Skip
    };
    let ex = extraction(&manifest, &seg, &feat, policy)?;
    write_file(&a.out, ex.table.to_csv_string())?;
    writeln!(
        out,
        "{}: {} rows × {} features ({} skipped)",
        a.out.display(),
        ex.table.rows.len(),
        ex.table.schema.len(),
        ex.failures.len()
    )
    .map_err(stdout_err)
}

fn train(a: TrainArgs, out: &mut dyn Write) -> Result<()> {
    let mut cfg: TrainConfig = match &a.config {
        Some(p) => read_json(p)?,
        None => TrainConfig::default(),
    };
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    let data = LabeledDataset::from_table(&read_table(&a.features_csv)?)?;
    let data = match a.families {
        Some(f) => data.select_families(f)?,
        None => data,
    };
    let model = classifiers::fit(a.classifier, &data, &cfg)?;
    write_file(&a.out, classifiers::save_model(&model))?;
    writeln!(
        out,
        "{}: {} on {} samples × {} features, {} classes, seed {}",
        a.out.display(),
        a.classifier,
        data.n_samples(),
        data.n_features(),
        data.n_classes(),
        cfg.seed
    )
    .map_err(stdout_err)
}

fn predict_row(model: &TrainedModel, schema: &Arc<FeatureSchema>, values: Vec<f64>) -> Result<(String, f64)> {
    let p = model.predict(&FeatureVector::new(values, schema.clone())?)?;
    Ok((model.class_names[p.class].clone(), p.probabilities[p.class]))
}

fn predict(a: PredictArgs, out: &mut dyn Write) -> Result<()> {
    let bytes = std::fs::read(&a.model).map_err(|e| Error::io(&a.model, e))?;
    let model = classifiers::load_model(&bytes)?;
    let schema = Arc::new(model.schema.clone());
    let mut rows: Vec<(String, Vec<f64>)> = Vec::new();
    if let Some(image) = &a.image {
        let mut seg = a.segmentation.load()?;
        seg.crop_to_roi = !a.no_crop;
        let full = FeatureConfig::default();
        let v = dataset::process_image(image, &seg, &full)?.project(&schema)?;
        rows.push((image.display().to_string(), v.into_values()));
    } else if let Some(csv) = &a.csv {
        let table = read_table(csv)?;
        let cols = model.schema.columns_in(&table.schema)?;
        for r in table.rows {
            rows.push((r.path, cols.iter().map(|&c| r.values[c]).collect()));
        }
    }
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Internal(e.to_string());
    w.write_record(["path", "predicted", "probability"]).map_err(csv_err)?;
    for (path, values) in rows {
        let (label, p) = predict_row(&model, &schema, values)?;
        w.write_record([path, label, format!("{p:.6}")]).map_err(csv_err)?;
    }
    let text = w.into_inner().map_err(|e| Error::Internal(e.to_string()))?;
    out.write_all(&text).map_err(stdout_err)
}

fn evaluate(a: EvaluateArgs, out: &mut dyn Write) -> Result<()> {
    let mut cfg: ExperimentConfig = match &a.config {
        Some(p) => read_json(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(m) = a.manifest {
        cfg.manifest = Some(m);
        cfg.features_csv = None;
    }
    if let Some(f) = a.features_csv {
        cfg.features_csv = Some(f);
        cfg.manifest = None;
    }
    if let Some(s) = a.segmentation.params.as_ref() {
        cfg.segmentation = read_json(s)?;
    }
    if let Some(s) = a.segmentation.scale {
        cfg.segmentation.resize_scale = s;
    }
    if let Some(k) = a.k {
        cfg.evaluation.protocol = Protocol::KFold { k };
    }
    if let Some(f) = a.holdout {
        cfg.evaluation.protocol = Protocol::Holdout { test_fraction: f };
    }
    if let Some(s) = a.seed {
        cfg.evaluation.seed = s;
    }
    cfg.train.seed = cfg.evaluation.seed;
    if let Some(c) = a.classifiers {
        cfg.classifiers = c;
    }
    if let Some(f) = a.feature_sets {
        cfg.feature_sets = f;
    }
    if cfg.classifiers.is_empty() || cfg.feature_sets.is_empty() {
        return Err(Error::InvalidConfig(
            "need at least one classifier and one feature set".into(),
        ));
    }
    cfg.segmentation.validate()?;
    cfg.train.validate()?;

    let data = match (&cfg.manifest, &cfg.features_csv) {
        (Some(m), _) => {
            let manifest = DatasetManifest::load(m)?;
            extraction(&manifest, &cfg.segmentation, &cfg.features, cfg.failure_policy)?.dataset()?
        }
        (None, Some(csv)) => LabeledDataset::from_table(&read_table(csv)?)?,
        (None, None) => {
            return Err(Error::InvalidConfig(
                "give --manifest or --features-csv (or set one in --config)".into(),
            ))
        }
    };
    let grid = evaluation::comparison_grid(&data, &cfg.classifiers, &cfg.feature_sets, &cfg.train, &cfg.evaluation)?;

    create_dir(&a.out)?;
    let text = report::render_text(&grid);
    write_file(&a.out.join("report.txt"), &text)?;
    write_file(&a.out.join("report.json"), report::render_json(&grid))?;
    let mut config_json = serde_json::to_string_pretty(&cfg).expect("config is plain data");
    config_json.push('\n');
    write_file(&a.out.join("config.json"), config_json)?;
    out.write_all(text.as_bytes()).map_err(stdout_err)
}
