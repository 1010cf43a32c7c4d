use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mlpnp::experiment::{NoiseModel, SceneConfig};
use mlpnp_cli::commands::{cmd_bench, cmd_generate, cmd_sequence, cmd_solve, GenerateOptions};
use mlpnp_cli::config::{BenchConfig, SequenceSettings, SolverChoice};
use mlpnp_cli::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "mlpnp", version, about = "Maximum-likelihood PnP solver and synthetic benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one correspondence file and print the pose report.
    Solve {
        input: PathBuf,
        /// Identity weights instead of the stated covariances.
        #[arg(long)]
        no_covariance: bool,
        /// Also write the report to this file.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Write a synthetic correspondence file and its `.gt` sidecar.
    Generate {
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 10)]
        points: usize,
        /// Noise level: σ for uniform noise, σ_max otherwise.
        #[arg(long, default_value_t = 1.0)]
        sigma_max: f64,
        #[arg(long, value_enum, default_value_t = Noise::Uniform)]
        noise: Noise,
        #[arg(long)]
        planar: bool,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        trial: u64,
        #[arg(long, default_value_t = 800.0)]
        focal: f64,
    },
    /// Run the points and noise sweeps and write CSV / .dat files.
    Bench {
        #[command(flatten)]
        common: Common,
        /// Only run the identity-weighted solver.
        #[arg(long)]
        no_covariance: bool,
        #[arg(long)]
        planar: bool,
    },
    /// Compare sequential covariance feedback against plain solves.
    Sequence {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        frames: Option<usize>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    sigma_max: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Noise {
    Uniform,
    MixedDeciles,
    PerPointUniform,
}

impl Noise {
    fn model(self, sigma: f64) -> NoiseModel {
        match self {
            Noise::Uniform => NoiseModel::Uniform(sigma),
            Noise::MixedDeciles => NoiseModel::MixedDeciles(sigma),
            Noise::PerPointUniform => NoiseModel::PerPointUniform(sigma),
        }
    }
}

fn read_config(path: Option<&Path>) -> CliResult<String> {
    match path {
        None => Ok(String::new()),
        Some(p) => std::fs::read_to_string(p).map_err(|e| CliError::io(p, e)),
    }
}

fn run(cli: Cli) -> CliResult<String> {
    match cli.command {
        Command::Solve { input, no_covariance, output } => {
            Ok(cmd_solve(&input, !no_covariance, output.as_deref())?.render())
        }
        Command::Generate { output, points, sigma_max, noise, planar, seed, trial, focal } => {
            let scene = SceneConfig {
                n_points: points,
                noise: noise.model(sigma_max),
                planar,
                focal,
                seed,
                ..Default::default()
            };
            scene.validate()?;
            let (file, gt) = cmd_generate(&GenerateOptions { scene, trial, output })?;
            Ok(format!("wrote {}\nwrote {}\n", file.display(), gt.display()))
        }
        Command::Bench { common, no_covariance, planar } => {
            let mut cfg = BenchConfig::parse(&read_config(common.config.as_deref())?)?;
            if let Some(seed) = common.seed {
                cfg.scene.seed = seed;
            }
            if let Some(t) = common.trials {
                cfg.trials = t;
            }
            if let Some(n) = common.points {
                cfg.points = vec![n];
                cfg.sigma_points = n;
            }
            if let Some(s) = common.sigma_max {
                cfg.sigma_max = vec![s];
                cfg.points_noise = cfg.points_noise.with_parameter(s);
            }
            cfg.scene.planar |= planar;
            if no_covariance {
                cfg.solvers = vec![SolverChoice::Identity];
            }
            cfg.validate()?;
            let out_dir =
                common.out_dir.unwrap_or_else(|| PathBuf::from(format!("mlpnp-bench-seed{}", cfg.scene.seed)));
            let outcome = cmd_bench(&cfg, &out_dir, common.config.as_deref())?;
            Ok(format!("{}wrote {}\n", outcome.table(), outcome.manifest.display()))
        }
        Command::Sequence { common, frames } => {
            let mut s = SequenceSettings::parse(&read_config(common.config.as_deref())?)?;
            let seq = &mut s.sequence;
            if let Some(seed) = common.seed {
                seq.scene.seed = seed;
            }
            if let Some(t) = common.trials {
                seq.trials = t;
            }
            if let Some(n) = common.points {
                seq.scene.n_points = n;
            }
            if let Some(sig) = common.sigma_max {
                seq.scene.noise = seq.scene.noise.with_parameter(sig);
            }
            if let Some(f) = frames {
                seq.frames = f;
            }
            let outcome = cmd_sequence(&s, common.out_dir.as_deref(), common.config.as_deref())?;
            Ok(outcome.table())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.error_line());
            ExitCode::from(e.exit_code())
        }
    }
}
