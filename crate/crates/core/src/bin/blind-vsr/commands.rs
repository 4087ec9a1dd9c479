use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use blind_vsr::estimator::{estimate_kernel as run_estimator, KernelPair};
use blind_vsr::io::{read_sequence, write_png, write_sequence, BitDepth};
use blind_vsr::metrics::{evaluate_sequences, kernel_accuracy as score_kernel, MetricReport};
use blind_vsr::operators::{degrade as run_degrade, DegradationConfig};
use blind_vsr::pipeline::{
    blind_kernel_pairs, fuse_packed_dir, superresolve_sequence, superresolve_sequence_with_kernel, SequenceResult,
};
use blind_vsr::synth::{panning_sequence, textured_frame};
use blind_vsr::{BlurKernel, Error, Result};

use crate::config::RunConfig;

pub const RUN_CFG: &str = "run.cfg";
pub const RUN_LOG: &str = "run.log";
pub const KERNEL_FILE: &str = "kernel.txt";
pub const LOSS_FILE: &str = "loss_history.csv";

/// Lines collected during a run and written to `run.log` at the end.
struct RunLog {
    lines: String,
    start: Instant,
}

impl RunLog {
    fn new(command: &str) -> Self {
        let mut log = Self { lines: String::new(), start: Instant::now() };
        log.line(format!("command={command}"));
        log
    }

    fn line(&mut self, s: impl AsRef<str>) {
        log::info!("{}", s.as_ref());
        self.lines.push_str(s.as_ref());
        self.lines.push('\n');
    }

    fn timing(&mut self, stage: &str, since: Instant) {
        self.line(format!("time.{stage}_s={:.3}", since.elapsed().as_secs_f64()));
    }

    fn finish(mut self, dir: &Path) -> Result<()> {
        let total = self.start;
        self.timing("total", total);
        fs::write(dir.join(RUN_LOG), self.lines)?;
        Ok(())
    }
}

fn write_run_cfg(cfg: &RunConfig, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(RUN_CFG), cfg.to_text())?;
    Ok(())
}

fn parent_dir(path: &Path) -> PathBuf {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_owned(),
        _ => PathBuf::from("."),
    }
}

pub fn synth(cfg: &RunConfig, out_dir: &Path, frames: usize, height: usize, width: usize, shift: &str) -> Result<()> {
    let (u, v) = shift
        .split_once(',')
        .and_then(|(u, v)| Some((u.trim().parse::<f64>().ok()?, v.trim().parse::<f64>().ok()?)))
        .ok_or_else(|| Error::Config(format!("--shift expects \"u,v\", got {shift:?}")))?;
    if frames == 0 || height == 0 || width == 0 {
        return Err(Error::Config("synth needs at least one frame of nonzero size".into()));
    }
    write_run_cfg(cfg, out_dir)?;
    let mut log = RunLog::new("synth");
    let base = textured_frame(height, width, 3, cfg.seed);
    let shifts: Vec<(f64, f64)> = (0..frames).map(|k| (k as f64 * u, k as f64 * v)).collect();
    let seq = panning_sequence(&base, &shifts)?;
    write_sequence(out_dir, seq.frames(), cfg.bit_depth)?;
    log.line(format!("frames={frames} size={height}x{width} shift_per_frame={u},{v}"));
    log.finish(out_dir)
}

pub fn degrade(cfg: &RunConfig, in_dir: &Path, out_dir: &Path) -> Result<()> {
    cfg.validate()?;
    let hr = read_sequence(in_dir)?;
    let kernel = cfg.degradation_kernel()?;
    let dcfg = DegradationConfig {
        noise_std: cfg.noise_std,
        rng_seed: cfg.seed,
        ..DegradationConfig::new(cfg.pipeline.scale, kernel.clone())
    };
    write_run_cfg(cfg, out_dir)?;
    let mut log = RunLog::new("degrade");
    let t = Instant::now();
    let lr = run_degrade(&hr, None, &dcfg)?;
    log.timing("degrade", t);
    write_sequence(out_dir, lr.frames(), cfg.bit_depth)?;
    kernel.save(out_dir.join(KERNEL_FILE))?;
    fs::write(out_dir.join("seed.txt"), format!("{}\n", cfg.seed))?;
    let (h, w, c) = hr.dims();
    let (lh, lw, _) = lr.dims();
    log.line(format!("frames={} hr={h}x{w}x{c} lr={lh}x{lw}x{c}", hr.len()));
    log.finish(out_dir)
}

fn supervised_pairs(pairs_dir: &Path) -> Result<Vec<KernelPair>> {
    let hr = read_sequence(pairs_dir.join("hr"))?;
    let lr = read_sequence(pairs_dir.join("lr"))?;
    if hr.len() != lr.len() {
        return Err(Error::InvalidData(format!("{} hr frames but {} lr frames", hr.len(), lr.len())));
    }
    hr.into_frames().into_iter().zip(lr.into_frames()).map(|(h, l)| KernelPair::new(h, l)).collect()
}

fn loss_path(out_kernel: &Path) -> PathBuf {
    let stem = out_kernel.file_stem().and_then(|s| s.to_str()).unwrap_or("kernel");
    parent_dir(out_kernel).join(format!("{stem}_loss.csv"))
}

pub fn estimate_kernel(cfg: &RunConfig, pairs_dir: &Path, out_kernel: &Path, blind: bool) -> Result<()> {
    let ecfg = cfg.estimator();
    ecfg.validate()?;
    let pairs = if blind {
        let lr_dir = pairs_dir.join("lr");
        let dir = if lr_dir.is_dir() { lr_dir } else { pairs_dir.to_owned() };
        blind_kernel_pairs(&read_sequence(dir)?, cfg.pipeline.scale)?
    } else {
        supervised_pairs(pairs_dir)?
    };
    let out_dir = parent_dir(out_kernel);
    write_run_cfg(cfg, &out_dir)?;
    let mut log = RunLog::new(if blind { "estimate-kernel --blind" } else { "estimate-kernel" });
    let t = Instant::now();
    let est = run_estimator(&pairs, &ecfg)?;
    log.timing("estimate", t);
    est.kernel.save(out_kernel)?;
    est.write_history_csv(loss_path(out_kernel))?;
    log.line(format!("pairs={}", pairs.len()));
    log.line(format!(
        "initial_loss={:e} best_loss={:e} best_iteration={} evaluations={} converged={}",
        est.initial_loss(),
        est.best_loss,
        est.best_iteration,
        est.history.len(),
        est.converged
    ));
    log.finish(&out_dir)
}

fn log_sequence_result(log: &mut RunLog, res: &SequenceResult) {
    if let Some(est) = &res.estimate {
        log.line(format!(
            "kernel_estimate initial_loss={:e} best_loss={:e} best_iteration={}",
            est.initial_loss(),
            est.best_loss,
            est.best_iteration
        ));
    }
    for (i, r) in res.reports.iter().enumerate() {
        for (c, cg) in r.deconv.channels.iter().enumerate() {
            log.line(format!(
                "frame={i} channel={c} cg_iters={} cg_residual={:e} converged={}",
                cg.iterations, cg.relative_residual, cg.converged
            ));
        }
        let f = &r.flow;
        log.line(format!(
            "frame={i} flow_prev_mean={:.4},{:.4} flow_prev_max={:.4} flow_next_mean={:.4},{:.4} flow_next_max={:.4}",
            f.prev_mean.0, f.prev_mean.1, f.prev_max, f.next_mean.0, f.next_mean.1, f.next_max
        ));
    }
}

pub fn superresolve(cfg: &RunConfig, in_dir: &Path, out_dir: &Path, kernel: Option<&Path>, strict: bool) -> Result<()> {
    cfg.validate()?;
    let mut pcfg = cfg.pipeline.clone();
    pcfg.estimator = cfg.estimator();
    let lr = read_sequence(in_dir)?;
    let kernel = kernel.map(BlurKernel::load).transpose()?;
    write_run_cfg(cfg, out_dir)?;
    let mut log = RunLog::new(if kernel.is_some() { "superresolve" } else { "superresolve --blind" });
    let t = Instant::now();
    let res = match &kernel {
        Some(k) => superresolve_sequence_with_kernel(&lr, k, &pcfg)?,
        None => superresolve_sequence(&lr, &pcfg)?,
    };
    log.timing("superresolve", t);
    log_sequence_result(&mut log, &res);

    let singular = res.reports.iter().any(|r| r.deconv.singular_warning);
    let failed: Vec<usize> = (0..res.reports.len()).filter(|&i| !res.reports[i].deconv.converged()).collect();
    if singular {
        log.line("warning=gamma is 0 with scale > 1; the normal equations are singular");
    }
    if !failed.is_empty() {
        log.line(format!("warning=CG did not converge on frames {failed:?}"));
    }

    write_sequence(out_dir, res.frames.frames(), cfg.bit_depth)?;
    res.kernel.save(out_dir.join(KERNEL_FILE))?;
    if let Some(est) = &res.estimate {
        est.write_history_csv(out_dir.join(LOSS_FILE))?;
    }
    let outcome = if strict && !failed.is_empty() {
        Err(Error::Numerical(format!(
            "CG did not converge on frames {failed:?}{}",
            if singular { " (gamma = 0)" } else { "" }
        )))
    } else {
        Ok(())
    };
    log.finish(out_dir)?;
    outcome
}

fn print_report(report: &MetricReport, csv: Option<&Path>) -> Result<()> {
    let text = report.to_csv();
    if let Some(path) = csv {
        fs::write(path, &text)?;
    }
    let mut out = text;
    let _ = writeln!(out, "PSNR {:.4} dB  SSIM {:.6}  ({} frames)", report.psnr_db, report.ssim, report.frame_psnr.len());
    print!("{out}");
    Ok(())
}

pub fn evaluate(pred_dir: &Path, truth_dir: &Path, csv: Option<&Path>) -> Result<()> {
    let pred = read_sequence(pred_dir)?;
    let truth = read_sequence(truth_dir)?;
    print_report(&evaluate_sequences(&pred, &truth)?, csv)
}

pub fn kernel_accuracy(cfg: &RunConfig, hr_dir: &Path, lr_dir: &Path, kernel: &Path, csv: Option<&Path>) -> Result<()> {
    let hr = read_sequence(hr_dir)?;
    let lr = read_sequence(lr_dir)?;
    let k = BlurKernel::load(kernel)?;
    print_report(&score_kernel(&hr, &lr, &k, cfg.pipeline.scale)?, csv)
}

pub fn restore(cfg: &RunConfig, packed_dir: &Path, out_png: &Path) -> Result<()> {
    let frame = fuse_packed_dir(packed_dir, cfg.pipeline.fusion_bandwidth)?;
    write_png(out_png, &frame, BitDepth::Sixteen)
}
