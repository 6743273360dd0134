//! Command-line front end wiring ingestion, feature extraction, training,
//! selection and evaluation into reproducible runs.
//!
//! Every command that writes an artifact also writes `<out>.manifest.json`
//! recording the resolved configuration, sha256 digests of the inputs,
//! the seed, elapsed wall time and the output paths. Identical inputs and
//! flags reproduce identical artifacts.
//!
//! Exit codes: 0 success, 1 internal error, 2 usage error, 3 data error.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use rumorboost::{
    deadline_sweep, hyperparam_sweep, kfold_cv, load_dataset, load_model, materialize, save_model,
    select_features, train_detector, Deadline, Error as CoreError, FeatureSchema, HyperGrid,
    TrainConfig,
};

#[derive(Parser)]
#[command(
    name = "rumorboost",
    version,
    about = "Gradient-tree-boosting rumor detector for microblog events",
    propagate_version = true
)]
struct Cli {
    /// Seed for fold shuffles and any seeded procedure.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Suppress progress output on stdout.
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SchemaChoice {
    /// The 23-feature production schema.
    Selected,
    /// The full 34-feature candidate schema.
    All34,
}

impl SchemaChoice {
    fn schema(self) -> FeatureSchema {
        match self {
            SchemaChoice::Selected => FeatureSchema::selected(),
            SchemaChoice::All34 => FeatureSchema::candidates(),
        }
    }
}

/// Training flags shared by train/select/evaluate/sweep.
#[derive(Args, Clone)]
struct CfgArgs {
    /// Number of boosted trees per class model (M).
    #[arg(long, default_value_t = 500)]
    trees: usize,

    /// Maximum tree depth (P).
    #[arg(long, default_value_t = 6)]
    max_depth: usize,

    /// Learning rate in (0, 1] (alpha).
    #[arg(long, default_value_t = 0.2)]
    learning_rate: f64,

    /// Minimum region size below which a node never splits (H).
    #[arg(long, default_value_t = 2)]
    min_region: usize,
}

impl CfgArgs {
    fn to_config(&self, seed: u64) -> Result<TrainConfig, CliError> {
        let cfg = TrainConfig {
            trees: self.trees,
            max_depth: self.max_depth,
            learning_rate: self.learning_rate,
            min_region_size: self.min_region,
            seed,
        };
        cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Extract a feature table from a dataset at a detecting deadline.
    Extract {
        /// Line-delimited event records.
        data: PathBuf,
        /// Deadline in hours, or `all` for the entire history.
        #[arg(long, default_value = "all", allow_hyphen_values = true)]
        deadline: Deadline,
        #[arg(long, value_enum, default_value_t = SchemaChoice::Selected)]
        schema: SchemaChoice,
        /// Output table path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a detector on a labeled dataset and write the model file.
    Train {
        data: PathBuf,
        #[arg(long, default_value = "all", allow_hyphen_values = true)]
        deadline: Deadline,
        #[command(flatten)]
        cfg: CfgArgs,
        /// Output model path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a dataset with a trained model.
    Predict {
        model: PathBuf,
        data: PathBuf,
        #[arg(long, default_value = "all", allow_hyphen_values = true)]
        deadline: Deadline,
        /// Output prediction table path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Rank candidate features by split-count importance and keep the top ones.
    Select {
        data: PathBuf,
        /// Candidate set to rank.
        #[arg(long, value_enum, default_value_t = SchemaChoice::All34)]
        candidates: SchemaChoice,
        /// How many features to keep (u1).
        #[arg(long)]
        keep: usize,
        #[command(flatten)]
        cfg: CfgArgs,
        /// Output importance table path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Repeated stratified k-fold cross-validation.
    Evaluate {
        data: PathBuf,
        #[arg(long, default_value = "all", allow_hyphen_values = true)]
        deadline: Deadline,
        #[arg(long, default_value_t = 10)]
        folds: usize,
        #[arg(long, default_value_t = 10)]
        repeats: usize,
        #[command(flatten)]
        cfg: CfgArgs,
        /// Output CV table path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Sweep detecting deadlines or a hyperparameter grid.
    Sweep {
        data: PathBuf,
        /// Comma-separated deadline list (hours or `all`); one axis group only.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        deadlines: Option<Vec<Deadline>>,
        /// Comma-separated tree counts for the grid axis.
        #[arg(long, value_delimiter = ',')]
        grid_trees: Option<Vec<usize>>,
        /// Comma-separated depths for the grid axis.
        #[arg(long, value_delimiter = ',')]
        grid_depth: Option<Vec<usize>>,
        /// Comma-separated learning rates for the grid axis.
        #[arg(long, value_delimiter = ',')]
        grid_rate: Option<Vec<f64>>,
        /// Fixed deadline for grid runs.
        #[arg(long, default_value = "all", allow_hyphen_values = true)]
        deadline: Deadline,
        #[arg(long, default_value_t = 10)]
        folds: usize,
        #[arg(long, default_value_t = 10)]
        repeats: usize,
        #[command(flatten)]
        cfg: CfgArgs,
        /// Output sweep table path.
        #[arg(long)]
        out: PathBuf,
    },
}

enum CliError {
    Usage(String),
    Data(anyhow::Error),
    Internal(anyhow::Error),
}

/// Sort core failures into the data/internal exit classes.
fn classify(err: CoreError) -> CliError {
    match &err {
        CoreError::MalformedRecord(_)
        | CoreError::MissingRequired(_)
        | CoreError::BadTimestamp { .. }
        | CoreError::Io { .. }
        | CoreError::DuplicateEventId(_)
        | CoreError::InvalidRecords(_)
        | CoreError::EmptyDataset
        | CoreError::MissingLabels
        | CoreError::SingleClass
        | CoreError::TooFewSamples(_)
        | CoreError::SchemaMismatch(_)
        | CoreError::CorruptModel(_)
        | CoreError::UnsupportedVersion(_) => CliError::Data(err.into()),
        CoreError::NegativeDeadline(_) | CoreError::InvalidConfig(_) | CoreError::BadU1 { .. } => {
            CliError::Usage(err.to_string())
        }
        _ => CliError::Internal(err.into()),
    }
}

fn internal(err: anyhow::Error) -> CliError {
    CliError::Internal(err)
}

#[derive(Serialize)]
struct InputDigest {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct RunManifest {
    command: &'static str,
    config: serde_json::Value,
    inputs: Vec<InputDigest>,
    seed: u64,
    elapsed_seconds: f64,
    outputs: Vec<String>,
}

fn digest(path: &Path) -> Result<InputDigest, CliError> {
    let bytes = fs::read(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(CliError::Data)?;
    Ok(InputDigest {
        path: path.display().to_string(),
        sha256: hex::encode(Sha256::digest(&bytes)),
    })
}

fn write_artifact(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(internal)
}

fn write_manifest(
    out: &Path,
    command: &'static str,
    config: serde_json::Value,
    inputs: &[&Path],
    seed: u64,
    started: Instant,
) -> Result<(), CliError> {
    let manifest = RunManifest {
        command,
        config,
        inputs: inputs.iter().map(|p| digest(p)).collect::<Result<_, _>>()?,
        seed,
        elapsed_seconds: started.elapsed().as_secs_f64(),
        outputs: vec![out.display().to_string()],
    };
    let path = manifest_path(out);
    let body = serde_json::to_string_pretty(&manifest)
        .context("serializing manifest")
        .map_err(internal)?;
    fs::write(&path, body)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(internal)
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_os_string();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let seed = cli.seed;
    let quiet = cli.quiet;
    let started = Instant::now();
    match cli.command {
        Command::Extract {
            data,
            deadline,
            schema,
            out,
        } => {
            let dataset = load_dataset(&data).map_err(classify)?;
            let matrix = materialize(&dataset, deadline, &schema.schema()).map_err(classify)?;
            write_artifact(&out, &matrix.to_table())?;
            write_manifest(
                &out,
                "extract",
                serde_json::json!({
                    "deadline": deadline.to_string(),
                    "schema_features": matrix.schema().names(),
                }),
                &[&data],
                seed,
                started,
            )?;
            if !quiet {
                println!(
                    "extracted {} rows x {} columns at deadline {deadline} -> {}",
                    matrix.rows(),
                    matrix.cols(),
                    out.display()
                );
            }
            Ok(())
        }
        Command::Train {
            data,
            deadline,
            cfg,
            out,
        } => {
            let config = cfg.to_config(seed)?;
            let dataset = load_dataset(&data).map_err(classify)?;
            let matrix =
                materialize(&dataset, deadline, &FeatureSchema::selected()).map_err(classify)?;
            let (detector, traces) = train_detector(&matrix, &config).map_err(classify)?;
            save_model(&detector, &out).map_err(classify)?;
            write_manifest(
                &out,
                "train",
                serde_json::json!({
                    "deadline": deadline.to_string(),
                    "trees": config.trees,
                    "max_depth": config.max_depth,
                    "learning_rate": config.learning_rate,
                    "min_region": config.min_region_size,
                    "mse_trace": {
                        "rumor": {"initial": traces.rumor.initial(), "final": traces.rumor.last()},
                        "nonrumor": {"initial": traces.nonrumor.initial(), "final": traces.nonrumor.last()},
                    },
                }),
                &[&data],
                seed,
                started,
            )?;
            if !quiet {
                println!(
                    "trained {} trees/class on {} events (rumor MSE {:.6} -> {:.6}) in {:.2}s -> {}",
                    config.trees,
                    matrix.rows(),
                    traces.rumor.initial(),
                    traces.rumor.last(),
                    started.elapsed().as_secs_f64(),
                    out.display()
                );
            }
            Ok(())
        }
        Command::Predict {
            model,
            data,
            deadline,
            out,
        } => {
            let detector = load_model(&model).map_err(classify)?;
            let dataset = load_dataset(&data).map_err(classify)?;
            let matrix = materialize(&dataset, deadline, detector.schema()).map_err(classify)?;
            let mut table = String::from("event_id\tp_rumor\tp_nonrumor\tlabel\n");
            for (i, event) in dataset.events.iter().enumerate() {
                let (p_rumor, p_nonrumor) =
                    detector.predict_proba(matrix.row(i)).map_err(classify)?;
                let label = detector.predict_label(matrix.row(i)).map_err(classify)?;
                writeln!(
                    table,
                    "{}\t{p_rumor}\t{p_nonrumor}\t{label}",
                    event.event_id
                )
                .expect("string write");
            }
            write_artifact(&out, &table)?;
            write_manifest(
                &out,
                "predict",
                serde_json::json!({"deadline": deadline.to_string()}),
                &[&model, &data],
                seed,
                started,
            )?;
            if !quiet {
                println!("scored {} events -> {}", matrix.rows(), out.display());
            }
            Ok(())
        }
        Command::Select {
            data,
            candidates,
            keep,
            cfg,
            out,
        } => {
            let schema = candidates.schema();
            if keep < 1 || keep > schema.len() {
                return Err(CliError::Usage(format!(
                    "--keep must be in 1..={}, got {keep}",
                    schema.len()
                )));
            }
            let config = cfg.to_config(seed)?;
            let dataset = load_dataset(&data).map_err(classify)?;
            // selection always sees the full interaction history
            let matrix = materialize(&dataset, Deadline::All, &schema).map_err(classify)?;
            let (report, selected) = select_features(&matrix, &config, keep).map_err(classify)?;
            let names: Vec<&str> = selected
                .iter()
                .map(|&i| schema.features()[i].name())
                .collect();
            let mut table = report.to_table();
            writeln!(table, "# selected (keep={keep}): {}", names.join(",")).expect("string write");
            write_artifact(&out, &table)?;
            write_manifest(
                &out,
                "select",
                serde_json::json!({
                    "candidates": schema.len(),
                    "keep": keep,
                    "trees": config.trees,
                    "max_depth": config.max_depth,
                    "learning_rate": config.learning_rate,
                    "selected": names,
                }),
                &[&data],
                seed,
                started,
            )?;
            if !quiet {
                println!(
                    "ranked {} candidates, kept {keep}: {}",
                    schema.len(),
                    names.join(",")
                );
            }
            Ok(())
        }
        Command::Evaluate {
            data,
            deadline,
            folds,
            repeats,
            cfg,
            out,
        } => {
            if folds < 2 {
                return Err(CliError::Usage(format!(
                    "--folds must be >= 2, got {folds}"
                )));
            }
            if repeats < 1 {
                return Err(CliError::Usage(format!(
                    "--repeats must be >= 1, got {repeats}"
                )));
            }
            let config = cfg.to_config(seed)?;
            let dataset = load_dataset(&data).map_err(classify)?;
            let cv =
                kfold_cv(&dataset, deadline, &config, folds, repeats, seed).map_err(classify)?;
            write_artifact(&out, &cv.to_table())?;
            write_manifest(
                &out,
                "evaluate",
                serde_json::json!({
                    "deadline": deadline.to_string(),
                    "folds": folds,
                    "repeats": repeats,
                    "trees": config.trees,
                    "max_depth": config.max_depth,
                    "learning_rate": config.learning_rate,
                }),
                &[&data],
                seed,
                started,
            )?;
            if !quiet {
                println!(
                    "{}x{}-fold CV: accuracy {:.4} precision {:.4} recall {:.4} f1 {:.4}",
                    repeats, folds, cv.mean.accuracy, cv.mean.precision, cv.mean.recall, cv.mean.f1
                );
            }
            Ok(())
        }
        Command::Sweep {
            data,
            deadlines,
            grid_trees,
            grid_depth,
            grid_rate,
            deadline,
            folds,
            repeats,
            cfg,
            out,
        } => {
            if folds < 2 {
                return Err(CliError::Usage(format!(
                    "--folds must be >= 2, got {folds}"
                )));
            }
            if repeats < 1 {
                return Err(CliError::Usage(format!(
                    "--repeats must be >= 1, got {repeats}"
                )));
            }
            let grid_given = grid_trees.is_some() || grid_depth.is_some() || grid_rate.is_some();
            let config = cfg.to_config(seed)?;
            let dataset = load_dataset(&data).map_err(classify)?;
            let result =
                match (deadlines, grid_given) {
                    (Some(_), true) => {
                        return Err(CliError::Usage(
                            "--deadlines and --grid-* are mutually exclusive; pick one axis".into(),
                        ))
                    }
                    (None, false) => return Err(CliError::Usage(
                        "sweep needs an axis: --deadlines or --grid-trees/--grid-depth/--grid-rate"
                            .into(),
                    )),
                    (Some(list), false) => {
                        deadline_sweep(&dataset, &list, &config, folds, repeats, seed)
                            .map_err(classify)?
                    }
                    (None, true) => {
                        let grid = HyperGrid {
                            trees: grid_trees.unwrap_or_else(|| vec![config.trees]),
                            depths: grid_depth.unwrap_or_else(|| vec![config.max_depth]),
                            rates: grid_rate.unwrap_or_else(|| vec![config.learning_rate]),
                        };
                        hyperparam_sweep(&dataset, &grid, deadline, &config, folds, repeats, seed)
                            .map_err(classify)?
                    }
                };
            write_artifact(&out, &result.to_table())?;
            write_manifest(
                &out,
                "sweep",
                serde_json::json!({
                    "points": result.points.len(),
                    "folds": folds,
                    "repeats": repeats,
                }),
                &[&data],
                seed,
                started,
            )?;
            if !quiet {
                println!(
                    "swept {} grid points -> {}",
                    result.points.len(),
                    out.display()
                );
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Data(err)) => {
            eprintln!("error: {err:#}");
            ExitCode::from(3)
        }
        Err(CliError::Internal(err)) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
