//! Pipeline commands behind the `binreg` binary: ingest, corrupt, encode,
//! solve, evaluate, export and render.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use binreg::branch_bound::{solve, MipResult, SolveConfig, SolveStatus};
use binreg::dataset::{
    binarize, corrupt_labels, default_threshold, load_csv, load_idx, split, write_csv,
    BinaryDataset, CorruptionSpec, SplitSpec, MNIST_CLASSES,
};
use binreg::emitters::{
    load_model, render_weights_pgm, save_model, write_lp, write_mps, write_opb,
};
use binreg::encoder::{
    build_mip, build_pbo, decode_values, default_bounds, EncodingLayout, Hyperparams,
};
use binreg::evaluator::{accuracy, EvalReport};
use binreg::model_ir::ModelIR;
use binreg::ratio::{to_f64, Rational};
use binreg::{Error, Result};
use serde::{Deserialize, Serialize};

/// Exit code when a model was produced.
pub const EXIT_OK: i32 = 0;
/// Exit code for invalid flags, inputs or files.
pub const EXIT_USAGE: i32 = 2;
/// Exit code when the solver stopped without an incumbent.
pub const EXIT_NO_INCUMBENT: i32 = 3;

pub const MODEL_FILE: &str = "model.json";
pub const RESULT_FILE: &str = "mip_result.json";
pub const TRAIN_REPORT_FILE: &str = "train_report.json";
pub const TEST_REPORT_FILE: &str = "test_report.json";
pub const TRAIN_DATA_FILE: &str = "train.csv";

pub const BENCH_HEADER: &str =
    "model,dataset,|I|,gap,time,reduction,train_accuracy,test_accuracy,status,objective";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Mip,
    Pbo,
}

impl Mode {
    pub fn label(self) -> &'static str {
        match self {
            Mode::Mip => "MIP",
            Mode::Pbo => "PBO",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DataSource {
    Idx { images: PathBuf, labels: PathBuf },
    Csv { csv: PathBuf },
}

impl DataSource {
    /// IDX images are binarized at `threshold`; CSV features are already binary.
    pub fn load(&self, threshold: Rational) -> Result<BinaryDataset> {
        match self {
            DataSource::Idx { images, labels } => {
                binarize(&load_idx(images, labels, MNIST_CLASSES)?, threshold)
            }
            DataSource::Csv { csv } => load_csv(csv),
        }
    }

    /// Short name for reports: the file stem.
    pub fn name(&self) -> String {
        let path = match self {
            DataSource::Idx { images, .. } => images,
            DataSource::Csv { csv } => csv,
        };
        let stem = path
            .file_name()
            .map_or_else(String::new, |s| s.to_string_lossy().into_owned());
        stem.split('.').next().unwrap_or_default().to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    pub source: DataSource,
    pub train_count: usize,
    pub alpha: Rational,
    pub beta: Option<Rational>,
    pub corrupt: Rational,
    pub seed: u64,
    pub time_limit_secs: u64,
    pub mode: Mode,
    pub threshold: Rational,
    pub out: PathBuf,
}

impl RunConfig {
    pub fn new(source: DataSource, train_count: usize, out: impl Into<PathBuf>) -> Self {
        Self {
            source,
            train_count,
            alpha: Rational::from_integer(1),
            beta: None,
            corrupt: Rational::from_integer(0),
            seed: 0,
            time_limit_secs: 3600,
            mode: Mode::Mip,
            threshold: default_threshold(),
            out: out.into(),
        }
    }

    pub fn hyperparams(&self) -> Result<Hyperparams> {
        match self.beta {
            Some(beta) => Hyperparams::new(self.alpha, beta),
            None => Hyperparams::with_default_beta(self.alpha),
        }
    }

    pub fn solve_config(&self) -> SolveConfig {
        SolveConfig {
            time_limit_secs: self.time_limit_secs as f64,
            seed: self.seed,
            ..SolveConfig::default()
        }
    }
}

/// Training and test sets after splitting and corruption.
pub struct Prepared {
    pub train: BinaryDataset,
    pub test: BinaryDataset,
}

pub fn prepare(cfg: &RunConfig) -> Result<Prepared> {
    let data = cfg.source.load(cfg.threshold)?;
    let (train, test) = split(
        &data,
        SplitSpec {
            train_count: cfg.train_count,
            seed: cfg.seed,
        },
    )?;
    let train = corrupt_labels(
        &train,
        CorruptionSpec {
            fraction: cfg.corrupt,
            seed: cfg.seed,
        },
    )?;
    Ok(Prepared { train, test })
}

pub fn encode(cfg: &RunConfig, train: &BinaryDataset) -> Result<(ModelIR, EncodingLayout)> {
    let hp = cfg.hyperparams()?;
    match cfg.mode {
        Mode::Mip => build_mip(train, &hp),
        Mode::Pbo => build_pbo(train, &hp, &default_bounds(train)),
    }
}

/// Everything a training run produced.
pub struct TrainOutcome {
    pub result: MipResult,
    pub train_report: Option<EvalReport>,
    pub test_report: Option<EvalReport>,
    pub train_size: usize,
}

impl TrainOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.result.incumbent.is_some() {
            EXIT_OK
        } else {
            EXIT_NO_INCUMBENT
        }
    }
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| io_error(path, e))
}

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    std::fs::write(path, text).map_err(|e| io_error(path, e))
}

/// Writes `train.csv` and `mip_result.json`, plus the model and both reports
/// when the solver found an incumbent.
pub fn cmd_train(cfg: &RunConfig) -> Result<TrainOutcome> {
    let Prepared { train, test } = prepare(cfg)?;
    let (model, layout) = encode(cfg, &train)?;
    log::info!(
        "{} model: {} variables, {} constraints, {} training instances",
        cfg.mode.label(),
        model.num_vars(),
        model.num_constraints(),
        train.len()
    );
    create_dir(&cfg.out)?;
    write_csv(&train, cfg.out.join(TRAIN_DATA_FILE))?;
    let result = solve(&model, &cfg.solve_config());
    write_json(&result, &cfg.out.join(RESULT_FILE))?;
    let mut outcome = TrainOutcome {
        train_report: None,
        test_report: None,
        train_size: train.len(),
        result,
    };
    let Some(values) = &outcome.result.incumbent else {
        return Ok(outcome);
    };
    let trained = decode_values(&layout, values);
    save_model(&trained, cfg.out.join(MODEL_FILE))?;
    let train_report = accuracy(&trained, &train)?;
    let test_report = accuracy(&trained, &test)?;
    write_json(&train_report, &cfg.out.join(TRAIN_REPORT_FILE))?;
    write_json(&test_report, &cfg.out.join(TEST_REPORT_FILE))?;
    outcome.train_report = Some(train_report);
    outcome.test_report = Some(test_report);
    Ok(outcome)
}

/// Accuracy of a saved model on a whole dataset.
pub fn cmd_eval(model_path: &Path, source: &DataSource, threshold: Rational) -> Result<EvalReport> {
    let model = load_model(model_path)?;
    let data = source.load(threshold)?;
    if data.feature_count() != model.feature_count {
        return Err(Error::Dimension {
            expected: model.feature_count,
            got: data.feature_count(),
        });
    }
    accuracy(&model, &data)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Lp,
    Mps,
    Opb,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Lp => "lp",
            Format::Mps => "mps",
            Format::Opb => "opb",
        }
    }
}

/// Encodes the training split of `cfg` and writes it to `path`.
pub fn cmd_export(cfg: &RunConfig, format: Format, path: &Path) -> Result<()> {
    let Prepared { train, .. } = prepare(cfg)?;
    let (model, _) = encode(cfg, &train)?;
    match format {
        Format::Lp => write_lp(&model, path),
        Format::Mps => write_mps(&model, path),
        Format::Opb => write_opb(&model, path),
    }
}

/// One `class_{c}.pgm` per class; returns the written paths.
pub fn cmd_render(
    model_path: &Path,
    width: usize,
    height: usize,
    out: &Path,
) -> Result<Vec<PathBuf>> {
    let model = load_model(model_path)?;
    if width * height != model.feature_count {
        return Err(Error::Dimension {
            expected: model.feature_count,
            got: width * height,
        });
    }
    create_dir(out)?;
    (0..model.class_count)
        .map(|c| {
            let path = out.join(format!("class_{c}.pgm"));
            render_weights_pgm(&model, c, width, height, &path)?;
            Ok(path)
        })
        .collect()
}

/// One row of a benchmark configuration file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchEntry {
    #[serde(flatten)]
    pub source: DataSource,
    pub k: usize,
    #[serde(default = "one")]
    pub alpha: String,
    #[serde(default)]
    pub beta: Option<String>,
    #[serde(default = "zero")]
    pub corrupt: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "hour")]
    pub time_limit: u64,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub name: Option<String>,
}

fn one() -> String {
    "1".into()
}

fn zero() -> String {
    "0".into()
}

fn hour() -> u64 {
    3600
}

pub fn parse_rational_arg(text: &str, what: &str) -> Result<Rational> {
    binreg::ratio::parse_rational(text)
        .ok_or_else(|| Error::Hyperparams(format!("invalid {what} {text:?}")))
}

impl BenchEntry {
    pub fn run_config(&self, out: &Path) -> Result<RunConfig> {
        let mut cfg = RunConfig::new(self.source.clone(), self.k, out);
        cfg.alpha = parse_rational_arg(&self.alpha, "alpha")?;
        cfg.beta = self
            .beta
            .as_deref()
            .map(|b| parse_rational_arg(b, "beta"))
            .transpose()?;
        cfg.corrupt = parse_rational_arg(&self.corrupt, "corruption fraction")?;
        cfg.seed = self.seed;
        cfg.time_limit_secs = self.time_limit;
        cfg.mode = self.mode;
        Ok(cfg)
    }

    pub fn dataset_name(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.source.name())
    }
}

fn csv_field(value: Option<f64>, digits: usize) -> String {
    value.map_or_else(String::new, |v| format!("{v:.digits$}"))
}

/// Runs every entry in order; each entry's artifacts go to `out/run_{n}`.
/// Returns the CSV text (also written to `out/bench.csv`).
pub fn cmd_bench(entries: &[BenchEntry], out: &Path) -> Result<String> {
    create_dir(out)?;
    let mut csv = String::from(BENCH_HEADER);
    csv.push('\n');
    for (n, entry) in entries.iter().enumerate() {
        let cfg = entry.run_config(&out.join(format!("run_{n}")))?;
        let outcome = cmd_train(&cfg)?;
        let r = &outcome.result;
        let _ = writeln!(
            csv,
            "{},{},{},{},{:.2},{},{},{},{:?},{}",
            cfg.mode.label(),
            entry.dataset_name(),
            outcome.train_size,
            csv_field(r.objective.map(|_| r.gap), 4),
            r.runtime_secs,
            csv_field(outcome.train_report.as_ref().map(|t| t.reduction_pct), 2),
            csv_field(outcome.train_report.as_ref().map(|t| t.accuracy), 4),
            csv_field(outcome.test_report.as_ref().map(|t| t.accuracy), 4),
            r.status,
            r.objective.map_or_else(String::new, |o| o.to_string()),
        );
    }
    let path = out.join("bench.csv");
    std::fs::write(&path, &csv).map_err(|e| io_error(&path, e))?;
    Ok(csv)
}

pub fn status_line(result: &MipResult) -> String {
    let objective = result
        .objective
        .map_or_else(|| "none".to_string(), |o| o.to_string());
    let verdict = match result.status {
        SolveStatus::Optimal => "optimal",
        SolveStatus::FeasibleTimeout => "time limit, feasible",
        SolveStatus::InfeasibleProven => "infeasible",
        SolveStatus::NoSolutionTimeout => "time limit, no incumbent",
    };
    format!(
        "{verdict}: objective {objective}, bound {:.3}, gap {:.4}, {} nodes, {:.2}s",
        result.bound, result.gap, result.nodes, result.runtime_secs
    )
}

/// Alpha and beta as reported in the run summary.
pub fn describe_hyperparams(hp: &Hyperparams) -> String {
    format!("alpha={} beta={}", to_f64(hp.alpha), to_f64(hp.beta))
}
