//! Command-line surface: configuration ingestion, dataset loading, and
//! deterministic report emission.
//!
//! Every command validates its full configuration before producing any
//! output, then writes one run directory containing `config-resolved` (the
//! exact configuration that ran, as JSON), `results.csv` (the data), and
//! `summary` (human-readable findings). Nothing in the outputs depends on
//! wall-clock time or environment, so re-running a command reproduces its
//! output byte for byte.

mod commands;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::crossbar::CrossbarConfig;
use crate::error::{Error, Result};
use crate::netmap::ann::TrainConfig;
use crate::netmap::{CompileOptions, PulseScale, DEFAULT_T_MIN};
use crate::variability::MismatchSpec;
use crate::vtc::VtcParams;

/// Default location of a data file shipped with the crate.
fn shipped_data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(name)
}

/// Classifier-related paths, seeds, and mapping knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnnConfig {
    /// Iris dataset CSV (150 rows, balanced classes).
    pub iris_csv: PathBuf,
    /// Trained weights JSON consumed by `ann infer` / `ann evaluate`.
    pub weights: PathBuf,
    /// Seed of the stratified train/test split. Default: 42.
    pub split_seed: u64,
    /// Fraction of each class used for training. Default: 0.8.
    pub train_frac: f64,
    /// Training hyperparameters (initialization seed included).
    pub train: TrainConfig,
    /// Inter-layer pulse width multiplier.
    pub pulse_scale: PulseScale,
    /// Narrowest producible pulse (s). Default: 50 ps.
    pub t_min: f64,
}

impl Default for AnnConfig {
    fn default() -> Self {
        AnnConfig {
            iris_csv: shipped_data("iris.csv"),
            weights: shipped_data("pretrained.json"),
            split_seed: 42,
            train_frac: 0.8,
            train: TrainConfig::default(),
            pulse_scale: PulseScale::default(),
            t_min: DEFAULT_T_MIN,
        }
    }
}

/// One experiment's full configuration. Loadable from a JSON file where any
/// omitted field takes its default, so a config file only needs to state
/// what it changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub vtc: VtcParams,
    pub crossbar: CrossbarConfig,
    pub mismatch: MismatchSpec,
    pub ann: AnnConfig,
    /// Parent directory for run outputs when `--out` is not given.
    /// Default: `runs`.
    pub output_dir: PathBuf,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            vtc: VtcParams::default(),
            crossbar: CrossbarConfig::default(),
            mismatch: MismatchSpec::default(),
            ann: AnnConfig::default(),
            output_dir: PathBuf::from("runs"),
        }
    }
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::input("config", format!("cannot read {}: {e}", path.display())))?;
        let cfg: ScenarioConfig = serde_json::from_str(&text).map_err(|e| {
            Error::input(
                "config",
                format!("{} is not a valid config: {e}", path.display()),
            )
        })?;
        Ok(cfg)
    }

    /// Validates every component before any command runs.
    pub fn validate(&self) -> Result<()> {
        self.vtc.validate()?;
        self.crossbar.validate()?;
        self.mismatch.validate()?;
        self.ann.train.validate()?;
        if !(self.ann.train_frac > 0.0 && self.ann.train_frac < 1.0) {
            return Err(Error::param(
                "ann.train_frac",
                format!("must lie in (0, 1), got {}", self.ann.train_frac),
            ));
        }
        if !(self.ann.t_min.is_finite() && self.ann.t_min >= 0.0) {
            return Err(Error::param(
                "ann.t_min",
                format!("must be non-negative, got {:e}", self.ann.t_min),
            ));
        }
        if let PulseScale::Fixed(s) = self.ann.pulse_scale {
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::param(
                    "ann.pulse_scale",
                    format!("must be positive, got {s}"),
                ));
            }
        }
        Ok(())
    }

    /// Mapping options derived from this scenario.
    pub fn compile_options(&self) -> CompileOptions {
        CompileOptions {
            vtc: self.vtc.clone(),
            pulse_scale: self.ann.pulse_scale,
            t_min: self.ann.t_min,
            clk1_high: self.crossbar.clk_high,
            period1: self.crossbar.period,
            ..CompileOptions::default()
        }
    }
}

/// Built-in mismatch scenarios addressable by name.
pub fn named_scenario(name: &str) -> Option<MismatchSpec> {
    match name {
        "noiseless" => Some(MismatchSpec {
            vtc_delay_rel_sigma: 0.0,
            xeq_rel_sigma: 0.0,
            gm_rel_sigma: 0.0,
            seed: 42,
        }),
        // Converter delay spread as measured, plus a small cell-weight
        // spread; together these reproduce the reference average error band.
        "paper-noise" => Some(MismatchSpec {
            vtc_delay_rel_sigma: 0.092,
            xeq_rel_sigma: 0.02,
            gm_rel_sigma: 0.0,
            seed: 42,
        }),
        _ => None,
    }
}

/// Behavioral simulator of a capacitive-coupling analog in-memory MAC
/// array: converter sweeps, mismatch Monte Carlo, array simulation, and a
/// compiled iris classifier.
#[derive(Debug, Parser)]
#[command(name = "c3pu", version, about, propagate_version = true)]
pub struct Cli {
    /// Scenario config JSON; omitted fields take defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Overrides the run's primary seed (mismatch draws; for `ann train`,
    /// also the split and initialization seeds).
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Sample count for Monte Carlo style commands.
    #[arg(long, global = true)]
    pub samples: Option<usize>,

    /// Mismatch scenario: `noiseless`, `paper-noise`, or a path to a JSON
    /// mismatch spec.
    #[arg(long, global = true)]
    pub scenario: Option<String>,

    /// Run output directory (default: `<output_dir>/<command>`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sweep the converter over its input range; report delay, pulse width,
    /// gain, and linearity.
    VtcSweep {
        /// Number of sweep points across the input range.
        #[arg(long, default_value_t = 101)]
        steps: usize,
    },
    /// Monte Carlo mismatch statistics with histogram dumps.
    Mc {
        /// What to perturb: converter delay cascades or a full array.
        #[arg(long, value_enum, default_value_t = McTarget::Vtc)]
        target: McTarget,
        /// Cascade depths to tabulate (vtc target).
        #[arg(long, value_delimiter = ',', default_values_t = vec![1, 2, 3, 4])]
        stages: Vec<u32>,
        /// Histogram bin count.
        #[arg(long, default_value_t = 20)]
        bins: usize,
    },
    /// Drive the configured array with input sets from a CSV and compare
    /// against the exact dot products.
    Crossbar {
        /// Input CSV: header row, then one voltage per array row per line.
        #[arg(long)]
        inputs: PathBuf,
    },
    /// Train, run, or score the classifier on simulated hardware.
    Ann {
        #[command(subcommand)]
        action: AnnAction,
    },
    /// Error of fixed-point MAC baselines against exact arithmetic.
    FxpCompare,
}

#[derive(Debug, Subcommand)]
pub enum AnnAction {
    /// Train from the configured dataset and write a weights file.
    Train,
    /// Classify one sample given raw feature values.
    Infer {
        /// Comma-separated raw features (dataset units).
        #[arg(long, value_delimiter = ',', required = true)]
        features: Vec<f64>,
        /// Force the noiseless scenario.
        #[arg(long)]
        noiseless: bool,
        /// Also dump the stage-by-stage hardware trace.
        #[arg(long)]
        trace: bool,
    },
    /// Score the mapped network over a dataset split.
    Evaluate {
        /// Force the noiseless scenario.
        #[arg(long)]
        noiseless: bool,
        /// Which samples to score.
        #[arg(long, value_enum, default_value_t = SplitChoice::Test)]
        split: SplitChoice,
        /// Also dump per-sample hardware traces.
        #[arg(long)]
        trace: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum McTarget {
    /// Converter delay, single and cascaded stages.
    Vtc,
    /// Average array error across mismatched instances.
    Crossbar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitChoice {
    /// The held-out samples of the weights file's recorded split.
    Test,
    /// The training samples of that split.
    Train,
    /// Every sample in the dataset.
    All,
}

/// Resolves config file, scenario, and seed overrides into one effective
/// configuration (applied in that order, so `--seed` wins).
fn resolve_config(cli: &Cli) -> Result<ScenarioConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ScenarioConfig::load(path)?,
        None => ScenarioConfig::default(),
    };
    if let Some(name) = &cli.scenario {
        cfg.mismatch = match named_scenario(name) {
            Some(spec) => spec,
            None => {
                let path = Path::new(name);
                if path.exists() {
                    let text = std::fs::read_to_string(path)?;
                    serde_json::from_str(&text).map_err(|e| {
                        Error::input("scenario", format!("{name} is not a mismatch spec: {e}"))
                    })?
                } else {
                    return Err(Error::input(
                        "scenario",
                        format!(
                            "unknown scenario `{name}`; use noiseless, paper-noise, or a JSON file"
                        ),
                    ));
                }
            }
        };
    }
    if let Some(seed) = cli.seed {
        cfg.mismatch.seed = seed;
        cfg.ann.split_seed = seed;
        cfg.ann.train.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// A run's output directory with the three standard files.
pub struct RunDir {
    dir: PathBuf,
}

impl RunDir {
    fn create(dir: PathBuf) -> Result<Self> {
        std::fs::create_dir_all(&dir)?;
        Ok(RunDir { dir })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn file(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Writes `config-resolved`: the command, its effective parameters, and
    /// the full scenario that ran.
    fn write_config(
        &self,
        command: &str,
        parameters: serde_json::Value,
        cfg: &ScenarioConfig,
    ) -> Result<()> {
        let doc = serde_json::json!({
            "command": command,
            "parameters": parameters,
            "scenario": cfg,
        });
        std::fs::write(
            self.file("config-resolved"),
            serde_json::to_string_pretty(&doc)? + "\n",
        )?;
        Ok(())
    }

    /// Writes the `summary` file from pre-formatted lines.
    fn write_summary(&self, lines: &[String]) -> Result<()> {
        std::fs::write(self.file("summary"), lines.join("\n") + "\n")?;
        Ok(())
    }

    fn results_writer(&self) -> Result<csv::Writer<std::fs::File>> {
        Ok(csv::Writer::from_path(self.file("results.csv"))?)
    }

    fn csv_writer(&self, name: &str) -> Result<csv::Writer<std::fs::File>> {
        Ok(csv::Writer::from_path(self.file(name))?)
    }
}

fn run_dir_for(cli: &Cli, cfg: &ScenarioConfig, slug: &str) -> PathBuf {
    cli.out.clone().unwrap_or_else(|| cfg.output_dir.join(slug))
}

/// Parses arguments, runs the chosen command, and maps failures onto exit
/// codes: 0 success, 1 validation error, 2 runtime error.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    env_logger::Builder::from_default_env()
        .format_timestamp(None)
        .init();
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: &Cli) -> Result<()> {
    let cfg = resolve_config(cli)?;
    match &cli.command {
        Command::VtcSweep { steps } => {
            let dir = run_dir_for(cli, &cfg, "vtc-sweep");
            commands::vtc_sweep(&cfg, *steps, dir)
        }
        Command::Mc {
            target,
            stages,
            bins,
        } => {
            let n = cli.samples.unwrap_or(200);
            let slug = match target {
                McTarget::Vtc => "mc-vtc",
                McTarget::Crossbar => "mc-crossbar",
            };
            let dir = run_dir_for(cli, &cfg, slug);
            commands::mc(&cfg, *target, stages, *bins, n, dir)
        }
        Command::Crossbar { inputs } => {
            let dir = run_dir_for(cli, &cfg, "crossbar");
            commands::crossbar(&cfg, inputs, dir)
        }
        Command::Ann { action } => match action {
            AnnAction::Train => {
                let dir = run_dir_for(cli, &cfg, "ann-train");
                commands::ann_train(&cfg, dir)
            }
            AnnAction::Infer {
                features,
                noiseless,
                trace,
            } => {
                let dir = run_dir_for(cli, &cfg, "ann-infer");
                commands::ann_infer(&cfg, features, *noiseless, *trace, dir)
            }
            AnnAction::Evaluate {
                noiseless,
                split,
                trace,
            } => {
                let dir = run_dir_for(cli, &cfg, "ann-evaluate");
                commands::ann_evaluate(&cfg, *noiseless, *split, *trace, dir)
            }
        },
        Command::FxpCompare => {
            let n = cli.samples.unwrap_or(200);
            let dir = run_dir_for(cli, &cfg, "fxp-compare");
            commands::fxp_compare(&cfg, n, dir)
        }
    }
}
