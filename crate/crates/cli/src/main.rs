use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use binreg::ratio::Rational;
use binreg_cli::{
    cmd_bench, cmd_eval, cmd_export, cmd_render, cmd_train, describe_hyperparams,
    parse_rational_arg, status_line, BenchEntry, DataSource, Format, Mode, RunConfig, EXIT_USAGE,
};
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Train binarized linear classifiers exactly with integer programming.
#[derive(Parser)]
#[command(name = "binreg", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the training program and write the model, solver result and reports.
    Train {
        #[command(flatten)]
        run: RunArgs,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the accuracy report of a saved model on a dataset as JSON.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        data: DataArgs,
    },
    /// Write the training program as LP, MPS or OPB.
    Export {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum)]
        format: FormatArg,
        /// Output file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Render one PGM weight map per class.
    Render {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        width: usize,
        #[arg(long)]
        height: usize,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a JSON list of configurations and write a summary CSV.
    Bench {
        /// JSON array of runs: {"csv": ..} or {"images": .., "labels": ..}, plus k, alpha, beta, corrupt, seed, time_limit, mode, name.
        #[arg(long)]
        configs: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct DataArgs {
    /// IDX image file (optionally gzipped).
    #[arg(long, requires = "labels", conflicts_with = "csv")]
    images: Option<PathBuf>,
    /// IDX label file (optionally gzipped).
    #[arg(long, requires = "images")]
    labels: Option<PathBuf>,
    /// CSV of binary features followed by the label.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Pixels strictly above this value become 1 (IDX input only).
    #[arg(long, default_value = "255/2")]
    threshold: String,
}

impl DataArgs {
    fn source(&self) -> Result<DataSource, String> {
        match (&self.images, &self.labels, &self.csv) {
            (Some(images), Some(labels), None) => Ok(DataSource::Idx {
                images: images.clone(),
                labels: labels.clone(),
            }),
            (None, None, Some(csv)) => Ok(DataSource::Csv { csv: csv.clone() }),
            _ => Err("give either --images with --labels, or --csv".into()),
        }
    }

    fn threshold(&self) -> binreg::Result<Rational> {
        parse_rational_arg(&self.threshold, "threshold")
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Number of training instances; the rest form the test set.
    #[arg(long)]
    k: usize,
    /// Reward per unit of correct margin (integer, decimal or a/b).
    #[arg(long, default_value = "1")]
    alpha: String,
    /// Penalty per unit of wrong margin; defaults to 2 * alpha.
    #[arg(long)]
    beta: Option<String>,
    /// Fraction of training labels to corrupt.
    #[arg(long, default_value = "0")]
    corrupt: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Solver time limit in seconds.
    #[arg(long, default_value_t = 3600)]
    time_limit: u64,
    #[arg(long, value_enum, default_value_t = ModeArg::Mip)]
    mode: ModeArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Mip,
    Pbo,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Lp,
    Mps,
    Opb,
}

impl RunArgs {
    fn config(&self, out: PathBuf) -> Result<RunConfig, String> {
        let mut cfg = RunConfig::new(self.data.source()?, self.k, out);
        let text = |e: binreg::Error| e.to_string();
        cfg.alpha = parse_rational_arg(&self.alpha, "alpha").map_err(text)?;
        cfg.beta = self
            .beta
            .as_deref()
            .map(|b| parse_rational_arg(b, "beta"))
            .transpose()
            .map_err(text)?;
        cfg.corrupt = parse_rational_arg(&self.corrupt, "corruption fraction").map_err(text)?;
        cfg.threshold = self.data.threshold().map_err(text)?;
        cfg.seed = self.seed;
        cfg.time_limit_secs = self.time_limit;
        cfg.mode = match self.mode {
            ModeArg::Mip => Mode::Mip,
            ModeArg::Pbo => Mode::Pbo,
        };
        Ok(cfg)
    }
}

fn usage(message: impl std::fmt::Display) -> ExitCode {
    eprintln!("binreg: {message}");
    ExitCode::from(EXIT_USAGE as u8)
}

fn run(cli: Cli) -> ExitCode {
    match cli.command {
        Command::Train { run, out } => {
            let cfg = match run.config(out) {
                Ok(cfg) => cfg,
                Err(e) => return usage(e),
            };
            if let Ok(hp) = cfg.hyperparams() {
                log::info!("training with {}", describe_hyperparams(&hp));
            }
            match cmd_train(&cfg) {
                Ok(outcome) => {
                    println!("{}", status_line(&outcome.result));
                    if let Some(test) = &outcome.test_report {
                        println!(
                            "test accuracy {:.4} ({} of {})",
                            test.accuracy, test.correct, test.total
                        );
                    }
                    ExitCode::from(outcome.exit_code() as u8)
                }
                Err(e) => usage(e),
            }
        }
        Command::Eval { model, data } => {
            let source = match data.source() {
                Ok(s) => s,
                Err(e) => return usage(e),
            };
            let result = data
                .threshold()
                .and_then(|t| cmd_eval(&model, &source, t))
                .and_then(|report| Ok(serde_json::to_string_pretty(&report)?));
            match result {
                Ok(json) => {
                    println!("{json}");
                    ExitCode::SUCCESS
                }
                Err(e) => usage(e),
            }
        }
        Command::Export { run, format, out } => {
            let cfg = match run.config(PathBuf::new()) {
                Ok(cfg) => cfg,
                Err(e) => return usage(e),
            };
            let format = match format {
                FormatArg::Lp => Format::Lp,
                FormatArg::Mps => Format::Mps,
                FormatArg::Opb => Format::Opb,
            };
            match cmd_export(&cfg, format, &out) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => usage(e),
            }
        }
        Command::Render {
            model,
            width,
            height,
            out,
        } => match cmd_render(&model, width, height, &out) {
            Ok(paths) => {
                for p in paths {
                    println!("{}", p.display());
                }
                ExitCode::SUCCESS
            }
            Err(e) => usage(e),
        },
        Command::Bench { configs, out } => {
            let entries: Vec<BenchEntry> = match std::fs::read_to_string(&configs)
                .map_err(|e| e.to_string())
                .and_then(|t| serde_json::from_str(&t).map_err(|e| e.to_string()))
            {
                Ok(entries) => entries,
                Err(e) => return usage(format!("{}: {e}", configs.display())),
            };
            match cmd_bench(&entries, &out) {
                Ok(csv) => {
                    print!("{csv}");
                    let _ = std::io::stdout().flush();
                    ExitCode::SUCCESS
                }
                Err(e) => usage(e),
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("BINREG_LOG", "warn"))
        .format(|buf, record| writeln!(buf, "{}", record.args()))
        .init();
    run(Cli::parse())
}
