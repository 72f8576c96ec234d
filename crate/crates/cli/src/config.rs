//! Solver parameter resolution: CLI flags override an optional TOML file,
//! which overrides the task defaults.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use serde::Deserialize;

use twso::solver::{FidelityNorm, SolverParams, Task};
use twso::TensorMode;

/// Solver flags shared by the restore and bench subcommands. Every field is
/// optional; unset values fall back to the config file and then to the
/// per-task defaults.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverOverrides {
    /// Fidelity norm exponent: 2 for Gaussian noise, 1 for impulsive noise
    #[arg(long)]
    pub p: Option<u32>,
    /// Fidelity weight
    #[arg(long)]
    pub eta: Option<f64>,
    /// Penalty weight of the u-split
    #[arg(long)]
    pub theta1: Option<f64>,
    /// Penalty weight of the Hessian split
    #[arg(long)]
    pub theta2: Option<f64>,
    /// Penalty weight of the tensor coupling split
    #[arg(long)]
    pub theta3: Option<f64>,
    /// Presmoothing standard deviation in pixels
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Structure-tensor averaging standard deviation in pixels
    #[arg(long)]
    pub rho: Option<f64>,
    /// Contrast parameter of the eigenvalue remapping
    #[arg(long)]
    pub contrast: Option<f64>,
    /// Baseline eigenvalue of the coherence remapping, in (0, 1)
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Eigenvalue remapping law: "edge" or "coherence"
    #[arg(long, value_name = "MODE")]
    pub tensor_mode: Option<String>,
    /// Iteration cap
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Relative-change stopping threshold
    #[arg(long)]
    pub tol: Option<f64>,
    /// Tensor refresh period for inpainting; 0 disables refinement
    #[arg(long)]
    pub refine_every: Option<usize>,
}

impl SolverOverrides {
    /// TOML file with the same keys as the long flags (underscored).
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config file {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config file {}", path.display()))
    }

    /// Later values win; `self` is the stronger layer.
    pub fn over(self, weaker: SolverOverrides) -> SolverOverrides {
        SolverOverrides {
            p: self.p.or(weaker.p),
            eta: self.eta.or(weaker.eta),
            theta1: self.theta1.or(weaker.theta1),
            theta2: self.theta2.or(weaker.theta2),
            theta3: self.theta3.or(weaker.theta3),
            sigma: self.sigma.or(weaker.sigma),
            rho: self.rho.or(weaker.rho),
            contrast: self.contrast.or(weaker.contrast),
            gamma: self.gamma.or(weaker.gamma),
            tensor_mode: self.tensor_mode.or(weaker.tensor_mode),
            max_iter: self.max_iter.or(weaker.max_iter),
            tol: self.tol.or(weaker.tol),
            refine_every: self.refine_every.or(weaker.refine_every),
        }
    }

    pub fn apply_to(&self, mut params: SolverParams) -> Result<SolverParams> {
        if let Some(p) = self.p {
            params.fidelity = FidelityNorm::from_p(p)?;
        }
        if let Some(v) = self.eta {
            params.eta = v;
        }
        if let Some(v) = self.theta1 {
            params.theta1 = v;
        }
        if let Some(v) = self.theta2 {
            params.theta2 = v;
        }
        if let Some(v) = self.theta3 {
            params.theta3 = v;
        }
        if let Some(v) = self.sigma {
            params.tensor.sigma = v;
        }
        if let Some(v) = self.rho {
            params.tensor.rho = v;
        }
        if let Some(v) = self.contrast {
            params.tensor.contrast = v;
        }
        if let Some(v) = self.gamma {
            params.tensor.gamma = v;
        }
        if let Some(mode) = &self.tensor_mode {
            params.tensor.mode = match mode.as_str() {
                "edge" => TensorMode::Edge,
                "coherence" => TensorMode::Coherence,
                other => anyhow::bail!("unknown tensor mode {other:?}, expected edge or coherence"),
            };
        }
        if let Some(v) = self.max_iter {
            params.max_iter = v;
        }
        if let Some(v) = self.tol {
            params.tol = v;
        }
        if let Some(v) = self.refine_every {
            params.refine_every = v;
        }
        params.validate()?;
        Ok(params)
    }
}

/// Defaults for a task, overlaid with the config file and then the flags.
pub fn resolve_params(
    task: Task,
    flags: &SolverOverrides,
    config: Option<&PathBuf>,
) -> Result<SolverParams> {
    let defaults = match task {
        Task::Denoise => SolverParams::denoise_defaults(),
        Task::Inpaint => SolverParams::inpaint_defaults(),
    };
    let layered = match config {
        Some(path) => flags.clone().over(SolverOverrides::from_file(path)?),
        None => flags.clone(),
    };
    layered.apply_to(defaults)
}
