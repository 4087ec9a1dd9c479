//! `blind-vsr`: degradation, kernel estimation, super-resolution and
//! evaluation over directories of numbered PNG frames.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use blind_vsr::Error;
use config::RunConfig;

#[derive(Parser, Debug)]
#[command(name = "blind-vsr", version, about = "Blind video super-resolution")]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalOpts {
    /// key=value configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a config key (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    #[arg(long, global = true)]
    scale: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Regularization weight of the deconvolution
    #[arg(long, global = true)]
    gamma: Option<f64>,
    /// Relative residual at which CG stops
    #[arg(long, global = true)]
    cg_tol: Option<f64>,
    #[arg(long, global = true)]
    cg_max_iters: Option<usize>,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Treat CG non-convergence as a failure (exit code 4)
    #[arg(long, global = true)]
    strict: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic panning sequence of textured frames
    Synth {
        out_dir: PathBuf,
        #[arg(long, default_value_t = 5)]
        frames: usize,
        #[arg(long, default_value_t = 128)]
        height: usize,
        #[arg(long, default_value_t = 128)]
        width: usize,
        /// Per-frame global shift "u,v" in pixels
        #[arg(long, default_value = "0.75,0.5")]
        shift: String,
    },
    /// Blur, decimate and add noise to HR frames
    Degrade { in_dir: PathBuf, out_dir: PathBuf },
    /// Estimate a blur kernel from PAIRS_DIR/hr + PAIRS_DIR/lr, or from LR frames alone with --blind
    EstimateKernel {
        pairs_dir: PathBuf,
        out_kernel: PathBuf,
        #[arg(long)]
        blind: bool,
        #[arg(long)]
        kernel_size: Option<usize>,
        /// direct-logits | fc-net
        #[arg(long)]
        mode: Option<String>,
        #[arg(long)]
        max_iters: Option<usize>,
    },
    /// Super-resolve LR frames with a given kernel, or estimate it with --blind
    Superresolve {
        in_dir: PathBuf,
        out_dir: PathBuf,
        #[arg(long, conflicts_with = "blind", required_unless_present = "blind")]
        kernel: Option<PathBuf>,
        #[arg(long)]
        blind: bool,
    },
    /// PSNR / SSIM of predicted frames against ground truth
    Evaluate {
        pred_dir: PathBuf,
        truth_dir: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Re-degrade HR frames with a kernel and score them against observed LR frames
    KernelAccuracy {
        hr_dir: PathBuf,
        lr_dir: PathBuf,
        kernel: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Confidence-fuse a packed restorer directory into one HR frame
    Restore {
        packed_dir: PathBuf,
        out_png: PathBuf,
        #[arg(long)]
        bandwidth: Option<f64>,
    },
}

fn resolve_config(g: &GlobalOpts) -> Result<RunConfig, Error> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &g.config {
        let text = std::fs::read_to_string(path)?;
        cfg.apply_text(&text, path)?;
    }
    for kv in &g.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got {kv:?}")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(v) = g.scale {
        cfg.set("scale", &v.to_string())?;
    }
    if let Some(v) = g.seed {
        cfg.set("seed", &v.to_string())?;
    }
    if let Some(v) = g.gamma {
        cfg.set("solver.gamma", &v.to_string())?;
    }
    if let Some(v) = g.cg_tol {
        cfg.set("solver.cg_tolerance", &v.to_string())?;
    }
    if let Some(v) = g.cg_max_iters {
        cfg.set("solver.cg_max_iters", &v.to_string())?;
    }
    Ok(cfg)
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Dimension(_) => 2,
        Error::Io(_) | Error::Image(_) | Error::Parse { .. } | Error::InvalidData(_) => 3,
        Error::Numerical(_) => 4,
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    if let Some(n) = cli.global.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("--threads: {e}")))?;
    }
    let mut cfg = resolve_config(&cli.global)?;
    let strict = cli.global.strict;
    match cli.command {
        Command::Synth { out_dir, frames, height, width, shift } => {
            commands::synth(&cfg, &out_dir, frames, height, width, &shift)
        }
        Command::Degrade { in_dir, out_dir } => commands::degrade(&cfg, &in_dir, &out_dir),
        Command::EstimateKernel { pairs_dir, out_kernel, blind, kernel_size, mode, max_iters } => {
            if let Some(k) = kernel_size {
                cfg.set("estimator.kernel_size", &k.to_string())?;
            }
            if let Some(m) = mode {
                cfg.set("estimator.mode", &m)?;
            }
            if let Some(n) = max_iters {
                cfg.set("estimator.max_iters", &n.to_string())?;
            }
            commands::estimate_kernel(&cfg, &pairs_dir, &out_kernel, blind)
        }
        Command::Superresolve { in_dir, out_dir, kernel, blind: _ } => {
            commands::superresolve(&cfg, &in_dir, &out_dir, kernel.as_deref(), strict)
        }
        Command::Evaluate { pred_dir, truth_dir, csv } => commands::evaluate(&pred_dir, &truth_dir, csv.as_deref()),
        Command::KernelAccuracy { hr_dir, lr_dir, kernel, csv } => {
            commands::kernel_accuracy(&cfg, &hr_dir, &lr_dir, &kernel, csv.as_deref())
        }
        Command::Restore { packed_dir, out_png, bandwidth } => {
            if let Some(h) = bandwidth {
                cfg.set("restorer.fusion_bandwidth", &h.to_string())?;
            }
            commands::restore(&cfg, &packed_dir, &out_png)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("blind-vsr: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
