//! Command-line definitions. Each subcommand's flags mirror the keys of its
//! JSON config; flags that are given win.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use kspin::{BicScaling, CouplingScale, Method, Reconcile, SignMode};
use serde::Serialize;

use crate::commands::{self, DiagOptions, FitOptions, GenerateOptions, SampleOptions, SamplerKind};
use crate::config::resolve;
use crate::error::CliResult;
use crate::experiment::{self, ExperimentConfig};
use crate::genes::{self, GenesOptions};

#[derive(Debug, Parser)]
#[command(name = "kspin", version, about = "Structure learning for k-spin Ising models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Random d-regular k-uniform model, written as a tensor CSV.
    Generate(GenerateArgs),
    /// Draw samples from a tensor CSV.
    Sample(SampleArgs),
    /// Recover a tensor from samples; writes a JSON report.
    Fit(FitArgs),
    /// Run an error sweep described by a JSON config; writes a results CSV.
    Experiment(ExperimentArgs),
    /// Rank hyperedges in binarized expression data.
    Genes(GenesArgs),
    /// Per-node Gram eigenvalue and gradient-at-truth diagnostics.
    Diag(DiagArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct GenerateArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long, value_enum)]
    pub sign_mode: Option<SignArg>,
    #[arg(long, value_enum)]
    pub scale: Option<ScaleArg>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SampleArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Tensor CSV file.
    #[arg(long)]
    pub tensor: Option<PathBuf>,
    #[arg(long, short)]
    pub n: Option<usize>,
    #[arg(long, value_enum)]
    pub sampler: Option<SamplerArg>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Gibbs burn-in sweeps.
    #[arg(long)]
    pub burn_in: Option<usize>,
    /// Gibbs sweeps between retained samples.
    #[arg(long)]
    pub thin: Option<usize>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct FitArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Samples CSV file.
    #[arg(long)]
    pub samples: Option<PathBuf>,
    #[arg(long, short)]
    pub k: Option<usize>,
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    /// Fixed regularization strength (default: BIC grid).
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Use the closed-form theorem λ at this confidence level.
    #[arg(long)]
    pub theorem_eps: Option<f64>,
    /// Coupling bound assumed by the RISE theorem λ.
    #[arg(long)]
    pub beta_hint: Option<f64>,
    /// Degree bound assumed by the RISE theorem λ.
    #[arg(long)]
    pub d_hint: Option<usize>,
    /// Support threshold on |weight|.
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long, value_enum)]
    pub reconcile: Option<ReconcileArg>,
    #[arg(long, value_enum)]
    pub bic_scaling: Option<BicScalingArg>,
    /// True tensor CSV; adds recovery metrics.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Also write the estimate as a tensor CSV.
    #[arg(long)]
    pub tensor_out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ExperimentArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Results CSV (default: stdout).
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Worker threads for experiment cells.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Leave the wall_time_s column empty so reruns are byte-identical.
    #[arg(long, action = clap::ArgAction::SetTrue)]
    #[serde(skip)]
    pub no_wall_time: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    #[arg(skip)]
    pub record_wall_time: Option<bool>,
}

#[derive(Debug, Args, Serialize)]
pub struct GenesArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Expression CSV with a header row.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, short)]
    pub k: Option<usize>,
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Column holding the cohort label.
    #[arg(long)]
    pub class_column: Option<String>,
    /// Number of hyperedges to report per cohort.
    #[arg(long)]
    pub top_m: Option<usize>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct DiagArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub samples: Option<PathBuf>,
    #[arg(long, short)]
    pub k: Option<usize>,
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

macro_rules! value_enum {
    ($name:ident => $target:ty { $($variant:ident = $value:expr),+ $(,)? }) => {
        #[derive(Debug, Clone, Copy, clap::ValueEnum)]
        pub enum $name { $($variant),+ }

        impl From<$name> for $target {
            fn from(v: $name) -> Self {
                match v { $($name::$variant => $value),+ }
            }
        }

        impl Serialize for $name {
            fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                <$target>::from(*self).serialize(s)
            }
        }
    };
}

value_enum!(MethodArg => Method { Rise = Method::Rise, Rple = Method::Rple });
value_enum!(SamplerArg => SamplerKind { Exact = SamplerKind::Exact, Gibbs = SamplerKind::Gibbs });
value_enum!(SignArg => SignMode { AllPositive = SignMode::AllPositive, Rademacher = SignMode::Rademacher });
value_enum!(ScaleArg => CouplingScale { Tensor = CouplingScale::Tensor, Hyperedge = CouplingScale::Hyperedge });
value_enum!(ReconcileArg => Reconcile {
    Mean = Reconcile::Mean,
    MinMagnitude = Reconcile::MinMagnitude,
    MaxMagnitude = Reconcile::MaxMagnitude,
});
value_enum!(BicScalingArg => BicScaling { SampleSize = BicScaling::SampleSize, Literal = BicScaling::Literal });

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Generate(args) => {
            let opts: GenerateOptions = resolve(args.config.as_deref(), &args)?;
            let summary = commands::generate(&opts)?;
            eprintln!("{summary}");
        }
        Command::Sample(args) => {
            let opts: SampleOptions = resolve(args.config.as_deref(), &args)?;
            commands::sample(&opts)?;
        }
        Command::Fit(args) => {
            let opts: FitOptions = resolve(args.config.as_deref(), &args)?;
            commands::fit(&opts)?;
        }
        Command::Experiment(mut args) => {
            if args.no_wall_time {
                args.record_wall_time = Some(false);
            }
            let cfg: ExperimentConfig = resolve(args.config.as_deref(), &args)?;
            experiment::experiment(&cfg)?;
        }
        Command::Genes(args) => {
            let opts: GenesOptions = resolve(args.config.as_deref(), &args)?;
            for report in genes::genes(&opts)? {
                let label = report.label.as_deref().unwrap_or("all");
                eprintln!("{label}: n={} hyperedges={}", report.n, report.top.len());
                for f in &report.files {
                    eprintln!("  wrote {}", f.display());
                }
            }
        }
        Command::Diag(args) => {
            let opts: DiagOptions = resolve(args.config.as_deref(), &args)?;
            commands::diag(&opts)?;
        }
    }
    Ok(())
}
