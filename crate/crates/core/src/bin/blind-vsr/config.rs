//! `key=value` run configuration shared by all commands.
//!
//! Lines are `key = value`; blank lines and `#` comments are ignored.
//! Unknown keys are an error. [`RunConfig::to_text`] writes every key, so a
//! saved `run.cfg` reproduces the run on its own.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use blind_vsr::estimator::{gaussian_kernel, EstimatorConfig};
use blind_vsr::io::BitDepth;
use blind_vsr::pipeline::{PipelineConfig, RestorerKind};
use blind_vsr::{BlurKernel, Error, Result};

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub pipeline: PipelineConfig,
    pub seed: u64,
    pub degrade_kernel_size: usize,
    pub degrade_kernel_sigma: f64,
    /// Overrides the Gaussian degradation kernel when set.
    pub degrade_kernel_file: Option<PathBuf>,
    pub noise_std: f64,
    pub bit_depth: BitDepth,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            pipeline: PipelineConfig::default(),
            seed: 0,
            degrade_kernel_size: 15,
            degrade_kernel_sigma: 1.2,
            degrade_kernel_file: None,
            noise_std: 0.0,
            bit_depth: BitDepth::Eight,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e| Error::Config(format!("{key}: cannot parse {value:?}: {e}")))
}

fn optional_path(value: &str) -> Option<PathBuf> {
    (!value.is_empty()).then(|| PathBuf::from(value))
}

fn show_path(p: &Option<PathBuf>) -> String {
    p.as_ref().map(|p| p.display().to_string()).unwrap_or_default()
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let p = &mut self.pipeline;
        match key {
            "scale" => p.scale = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "output.bit_depth" => {
                self.bit_depth = match value {
                    "8" => BitDepth::Eight,
                    "16" => BitDepth::Sixteen,
                    _ => return Err(Error::Config(format!("output.bit_depth must be 8 or 16, got {value:?}"))),
                }
            }
            "degrade.kernel_size" => self.degrade_kernel_size = parse(key, value)?,
            "degrade.kernel_sigma" => self.degrade_kernel_sigma = parse(key, value)?,
            "degrade.kernel_file" => self.degrade_kernel_file = optional_path(value),
            "degrade.noise_std" => self.noise_std = parse(key, value)?,
            "estimator.mode" => p.estimator.mode = parse(key, value)?,
            "estimator.init_sigma" => p.estimator.init_sigma = parse(key, value)?,
            "estimator.kernel_size" => p.estimator.kernel_size = parse(key, value)?,
            "estimator.max_iters" => p.estimator.max_iters = parse(key, value)?,
            "estimator.step_size" => p.estimator.step_size = parse(key, value)?,
            "estimator.grad_tolerance" => p.estimator.grad_tolerance = parse(key, value)?,
            "estimator.hidden" => p.estimator.hidden = parse(key, value)?,
            "solver.gamma" => p.solver.gamma = parse(key, value)?,
            "solver.cg_tolerance" => p.solver.cg_tolerance = parse(key, value)?,
            "solver.cg_max_iters" => p.solver.cg_max_iters = parse(key, value)?,
            "solver.warm_start" => p.solver.warm_start = parse(key, value)?,
            "flow.estimator" => p.flow.estimator = parse(key, value)?,
            "flow.pyramid_levels" => p.flow.pyramid_levels = parse(key, value)?,
            "flow.smoothness_weight" => p.flow.smoothness_weight = parse(key, value)?,
            "flow.iters_per_level" => p.flow.iters_per_level = parse(key, value)?,
            "flow.warp_steps_per_level" => p.flow.warp_steps_per_level = parse(key, value)?,
            "flow.dir" => p.flow_dir = optional_path(value),
            "restorer.kind" => {
                p.restorer = match value {
                    "external" => RestorerKind::External(String::new()),
                    other => other.parse()?,
                }
            }
            "restorer.command" => {
                if let RestorerKind::External(cmd) = &mut p.restorer {
                    *cmd = value.to_owned();
                } else if !value.is_empty() {
                    p.restorer = RestorerKind::External(value.to_owned());
                }
            }
            "restorer.fusion_bandwidth" => p.fusion_bandwidth = parse(key, value)?,
            "restorer.work_dir" => p.work_dir = optional_path(value),
            _ => return Err(Error::Config(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    /// Applies `key=value` lines on top of the current values.
    pub fn apply_text(&mut self, text: &str, origin: &Path) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                path: origin.to_owned(),
                msg: format!("line {}: expected key=value, got {raw:?}", n + 1),
            })?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let p = &self.pipeline;
        let (kind, command) = match &p.restorer {
            RestorerKind::ConfidenceFusion => ("confidence-fusion", ""),
            RestorerKind::External(cmd) => ("external", cmd.as_str()),
        };
        let bits = match self.bit_depth {
            BitDepth::Eight => 8,
            BitDepth::Sixteen => 16,
        };
        let entries: Vec<(&str, String)> = vec![
            ("scale", p.scale.to_string()),
            ("seed", self.seed.to_string()),
            ("output.bit_depth", bits.to_string()),
            ("degrade.kernel_size", self.degrade_kernel_size.to_string()),
            ("degrade.kernel_sigma", self.degrade_kernel_sigma.to_string()),
            ("degrade.kernel_file", show_path(&self.degrade_kernel_file)),
            ("degrade.noise_std", self.noise_std.to_string()),
            ("estimator.mode", p.estimator.mode.to_string()),
            ("estimator.init_sigma", p.estimator.init_sigma.to_string()),
            ("estimator.kernel_size", p.estimator.kernel_size.to_string()),
            ("estimator.max_iters", p.estimator.max_iters.to_string()),
            ("estimator.step_size", p.estimator.step_size.to_string()),
            ("estimator.grad_tolerance", p.estimator.grad_tolerance.to_string()),
            ("estimator.hidden", p.estimator.hidden.to_string()),
            ("solver.gamma", p.solver.gamma.to_string()),
            ("solver.cg_tolerance", p.solver.cg_tolerance.to_string()),
            ("solver.cg_max_iters", p.solver.cg_max_iters.to_string()),
            ("solver.warm_start", p.solver.warm_start.to_string()),
            ("flow.estimator", p.flow.estimator.to_string()),
            ("flow.pyramid_levels", p.flow.pyramid_levels.to_string()),
            ("flow.smoothness_weight", p.flow.smoothness_weight.to_string()),
            ("flow.iters_per_level", p.flow.iters_per_level.to_string()),
            ("flow.warp_steps_per_level", p.flow.warp_steps_per_level.to_string()),
            ("flow.dir", show_path(&p.flow_dir)),
            ("restorer.kind", kind.to_owned()),
            ("restorer.command", command.to_owned()),
            ("restorer.fusion_bandwidth", p.fusion_bandwidth.to_string()),
            ("restorer.work_dir", show_path(&p.work_dir)),
        ];
        let mut out = String::new();
        for (k, v) in entries {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }

    /// The estimator seed follows the run seed.
    pub fn estimator(&self) -> EstimatorConfig {
        EstimatorConfig { seed: self.seed, ..self.pipeline.estimator.clone() }
    }

    pub fn degradation_kernel(&self) -> Result<BlurKernel> {
        match &self.degrade_kernel_file {
            Some(path) => BlurKernel::load(path),
            None => gaussian_kernel(self.degrade_kernel_size, self.degrade_kernel_sigma),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::Config(format!("degrade.noise_std must be >= 0, got {}", self.noise_std)));
        }
        if let RestorerKind::External(cmd) = &self.pipeline.restorer {
            if cmd.trim().is_empty() {
                return Err(Error::Config("restorer.kind=external needs restorer.command".into()));
            }
        }
        self.pipeline.validate()
    }
}
