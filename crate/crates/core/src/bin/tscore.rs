use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use tscore::baseline::{Bandwidth, Estimator, MmdConfig, ProbeConfig};
use tscore::metrics::MetricReport;
use tscore::report::{self, BaselineInputs, BaselineMetric, HopkinsOptions, RankEpoch, ReportError};
use tscore::synth::{DomainSpec, ToyTrainConfig};
use tscore::{load_run, read_tensor, SelectionConfig};

/// Label-free transfer score for unsupervised domain adaptation checkpoints.
#[derive(Parser)]
#[command(name = "tscore", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score every epoch of a run (one JSON object per line).
    Score {
        run: PathBuf,
        #[command(flatten)]
        hopkins: HopkinsArgs,
        /// Score only this epoch.
        #[arg(long)]
        epoch: Option<u64>,
    },
    /// Rank runs by transfer score.
    Rank {
        #[arg(required = true)]
        runs: Vec<PathBuf>,
        #[arg(long, value_enum, default_value_t = EpochArg::Last)]
        epoch: EpochArg,
        /// Also write the ranking as CSV to this path.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        hopkins: HopkinsArgs,
        #[command(flatten)]
        selection: SelectionArgs,
    },
    /// Pick a checkpoint from the saturation of the score series.
    SelectEpoch {
        run: PathBuf,
        #[command(flatten)]
        hopkins: HopkinsArgs,
        #[command(flatten)]
        selection: SelectionArgs,
    },
    /// Compute a reference metric from tensor files.
    Baseline {
        #[arg(long)]
        source: Option<PathBuf>,
        #[arg(long)]
        target: Option<PathBuf>,
        #[arg(long)]
        probabilities: Option<PathBuf>,
        #[arg(long, value_enum)]
        metric: MetricArg,
        /// Fixed kernel bandwidth; median heuristic when omitted.
        #[arg(long)]
        bandwidth: Option<f64>,
        #[arg(long, value_enum, default_value_t = EstimatorArg::Biased)]
        estimator: EstimatorArg,
        #[arg(long, default_value_t = 0.8)]
        train_fraction: f64,
        #[arg(long, default_value_t = 0.1)]
        learning_rate: f64,
        #[arg(long, default_value_t = 500)]
        iterations: usize,
        #[arg(long, env = "TSCORE_SEED", default_value_t = 0)]
        seed: u64,
    },
    /// Correlate per-epoch transfer score with target accuracy.
    Correlate {
        run: PathBuf,
        #[command(flatten)]
        hopkins: HopkinsArgs,
    },
    /// Train the toy model on synthetic domains and export the run.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        run_id: Option<String>,
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long, default_value_t = 5)]
        d_in: usize,
        #[arg(long, default_value_t = 300)]
        n: usize,
        #[arg(long)]
        cluster_spread: Option<f64>,
        #[arg(long)]
        separation: Option<f64>,
        /// Comma-separated target translation, length d_in.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        shift: Option<Vec<f64>>,
        #[arg(long, allow_hyphen_values = true)]
        rotation_angle: Option<f64>,
        #[arg(long, default_value_t = 4)]
        d_feat: usize,
        #[arg(long, default_value_t = 30)]
        epochs: usize,
        #[arg(long)]
        learning_rate: Option<f64>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        steps_per_epoch: Option<usize>,
        #[arg(long)]
        warmup_epochs: Option<usize>,
        /// Seed for both data generation and initialization.
        #[arg(long, env = "TSCORE_SEED", default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct HopkinsArgs {
    /// Hopkins sample size; clamp(ceil(N/10), 10, 500) when omitted.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value_t = 5)]
    reps: usize,
    #[arg(long, env = "TSCORE_SEED", default_value_t = 0)]
    seed: u64,
}

impl HopkinsArgs {
    fn options(&self) -> HopkinsOptions {
        HopkinsOptions { m: self.m, repetitions: self.reps, seed: self.seed }
    }
}

#[derive(Args)]
struct SelectionArgs {
    #[arg(long, default_value_t = 3)]
    tau: usize,
    #[arg(long, default_value_t = 0.01)]
    zeta: f64,
}

impl SelectionArgs {
    fn config(&self) -> Result<SelectionConfig, ReportError> {
        SelectionConfig::new(self.tau, self.zeta).map_err(|e| ReportError::Invalid(e.to_string()))
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum EpochArg {
    Last,
    Selected,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Mmd,
    Pad,
    Centropy,
}

#[derive(Clone, Copy, ValueEnum)]
enum EstimatorArg {
    Biased,
    Unbiased,
}

fn emit<T: Serialize>(value: &T) -> Result<(), ReportError> {
    let line = serde_json::to_string(value).expect("report serializes");
    writeln!(std::io::stdout().lock(), "{line}").map_err(|e| ReportError::Invalid(format!("stdout: {e}")))
}

fn warn_simplex(reports: &[MetricReport]) {
    for r in reports.iter().filter(|r| r.simplex_bound_exceeded) {
        eprintln!(
            "warning: epoch {}: K = {} exceeds feature dimension + 1; uniformity has no reachable ideal",
            r.epoch, r.k
        );
    }
}

fn run(cli: Cli) -> Result<(), ReportError> {
    match cli.command {
        Command::Score { run, hopkins, epoch } => {
            let reports = report::score_run(&load_run(run)?, &hopkins.options(), epoch)?;
            warn_simplex(&reports);
            reports.iter().try_for_each(emit)
        }
        Command::Rank { runs, epoch, csv, hopkins, selection } => {
            let runs = runs.iter().map(load_run).collect::<Result<Vec<_>, _>>()?;
            let mode = match epoch {
                EpochArg::Last => RankEpoch::Last,
                EpochArg::Selected => RankEpoch::Selected,
            };
            let ranking = report::rank_runs(&runs, mode, &hopkins.options(), &selection.config()?)?;
            if let Some(path) = csv {
                let file = std::fs::File::create(&path)
                    .map_err(|e| ReportError::Invalid(format!("cannot create {}: {e}", path.display())))?;
                ranking.write_csv(file)?;
            }
            emit(&ranking)
        }
        Command::SelectEpoch { run, hopkins, selection } => {
            let config = selection.config()?;
            emit(&report::select_epoch(&load_run(run)?, &hopkins.options(), &config)?)
        }
        Command::Baseline {
            source,
            target,
            probabilities,
            metric,
            bandwidth,
            estimator,
            train_fraction,
            learning_rate,
            iterations,
            seed,
        } => {
            let read = |p: Option<PathBuf>| p.map(read_tensor).transpose();
            let (source, target, probabilities) = (read(source)?, read(target)?, read(probabilities)?);
            let metric = match metric {
                MetricArg::Mmd => BaselineMetric::Mmd,
                MetricArg::Pad => BaselineMetric::Pad,
                MetricArg::Centropy => BaselineMetric::Centropy,
            };
            let mmd = MmdConfig {
                bandwidth: bandwidth.map_or(Bandwidth::MedianHeuristic, Bandwidth::Fixed),
                estimator: match estimator {
                    EstimatorArg::Biased => Estimator::Biased,
                    EstimatorArg::Unbiased => Estimator::Unbiased,
                },
            };
            let probe = ProbeConfig { train_fraction, learning_rate, iterations, seed };
            let inputs = BaselineInputs {
                source: source.as_ref(),
                target: target.as_ref(),
                probabilities: probabilities.as_ref(),
            };
            emit(&report::compute_baseline(metric, inputs, &mmd, &probe)?)
        }
        Command::Correlate { run, hopkins } => emit(&report::correlate(&load_run(run)?, &hopkins.options())?),
        Command::Synth {
            out,
            run_id,
            k,
            d_in,
            n,
            cluster_spread,
            separation,
            shift,
            rotation_angle,
            d_feat,
            epochs,
            learning_rate,
            lambda,
            steps_per_epoch,
            warmup_epochs,
            seed,
        } => {
            let base = DomainSpec::default();
            let mut default_shift = base.shift.clone();
            default_shift.resize(d_in, 0.0);
            let spec = DomainSpec {
                k,
                d_in,
                n,
                cluster_spread: cluster_spread.unwrap_or(base.cluster_spread),
                separation: separation.unwrap_or(base.separation),
                shift: shift.unwrap_or(default_shift),
                rotation_angle: rotation_angle.unwrap_or(base.rotation_angle),
                seed,
            };
            let tb = ToyTrainConfig::default();
            let train = ToyTrainConfig {
                d_feat,
                epochs,
                learning_rate: learning_rate.unwrap_or(tb.learning_rate),
                adapt_weight: lambda.unwrap_or(tb.adapt_weight),
                steps_per_epoch: steps_per_epoch.unwrap_or(tb.steps_per_epoch),
                warmup_epochs: warmup_epochs.unwrap_or(tb.warmup_epochs),
                seed,
            };
            emit(&report::synth_run(&spec, &train, &out, run_id.as_deref())?)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
