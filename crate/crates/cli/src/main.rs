//! `gibc`: forward modeling, inclusion reconstruction, and impedance recovery
//! for an annular inclusion with a generalized impedance boundary condition.

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use gibc_core::io::{self, Overrides, RunConfig};
use gibc_core::sampling::IndicatorKind;
use gibc_core::Complex64;

#[derive(Parser)]
#[command(name = "gibc", version, about)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML config file, or a run manifest (.json) to reproduce a run
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    rho: Option<f64>,
    /// Complex value such as 5+2i
    #[arg(long, global = true, value_parser = complex, allow_hyphen_values = true)]
    eta: Option<Complex64>,
    #[arg(long, global = true, value_parser = complex, allow_hyphen_values = true)]
    gamma: Option<Complex64>,
    /// Relative noise level on the gap matrix
    #[arg(long, global = true)]
    delta: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Sampling lattice points per axis
    #[arg(long, global = true)]
    resolution: Option<usize>,
    #[arg(long, global = true)]
    cutoff: Option<f64>,
    #[arg(long, global = true)]
    threshold: Option<f64>,
    /// Indicators to compute, e.g. W or W,P
    #[arg(long, global = true, value_delimiter = ',', value_parser = indicator)]
    indicators: Option<Vec<IndicatorKind>>,
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Current noise amplitude for synthetic impedance data
    #[arg(long, global = true)]
    impedance_delta: Option<f64>,
    /// Fourier mode of the current noise
    #[arg(long, global = true)]
    impedance_p: Option<usize>,
    /// Increase log verbosity (-v info, -vv debug)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand)]
enum Command {
    /// Assemble the gap matrix, clean and noisy
    Forward,
    /// Compute indicators and contours from a stored gap matrix
    Reconstruct {
        #[arg(long)]
        matrix: PathBuf,
    },
    /// Recover constant impedance coefficients
    Impedance {
        /// Cauchy pair CSVs (n,re_f,im_f,re_g,im_g); synthetic data when omitted
        #[arg(long = "data", num_args = 1..)]
        data: Vec<PathBuf>,
    },
    /// Run the whole pipeline with default parameters and a pinned seed
    Demo,
}

fn complex(s: &str) -> Result<Complex64, String> {
    io::parse_complex(s).map_err(|e| e.to_string())
}

fn indicator(s: &str) -> Result<IndicatorKind, String> {
    match s.trim() {
        "W" | "w" => Ok(IndicatorKind::W),
        "P" | "p" => Ok(IndicatorKind::P),
        other => Err(format!("unknown indicator {other:?} (expected W or P)")),
    }
}

fn load_config(c: &Common) -> Result<RunConfig> {
    let base = match &c.config {
        Some(path) => RunConfig::load(path).with_context(|| format!("loading {}", path.display()))?,
        None => RunConfig::default(),
    };
    Ok(base.apply(&Overrides {
        rho: c.rho,
        eta: c.eta,
        gamma: c.gamma,
        delta: c.delta,
        seed: c.seed,
        resolution: c.resolution,
        cutoff: c.cutoff,
        threshold: c.threshold,
        indicators: c.indicators.clone(),
        output_dir: c.output_dir.clone(),
        impedance_delta: c.impedance_delta,
        impedance_p: c.impedance_p,
    }))
}

macro_rules! print_json {
    ($report:expr) => {{
        println!("{}", serde_json::to_string_pretty(&$report)?);
        Ok(())
    }};
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let level = match cli.common.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let cfg = load_config(&cli.common)?;
    match cli.command {
        Command::Forward => print_json!(io::cmd_forward(&cfg)?),
        Command::Reconstruct { matrix } => print_json!(io::cmd_reconstruct(&cfg, &matrix)?),
        Command::Impedance { data } => print_json!(io::cmd_impedance(&cfg, &data)?),
        Command::Demo => {
            let report = io::cmd_demo(&cfg.output_dir)?;
            print!("{}", std::fs::read_to_string(&report.summary_path)?);
            Ok(())
        }
    }
}
