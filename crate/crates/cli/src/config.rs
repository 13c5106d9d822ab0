//! Run configuration: a TOML file naming the scenario, its parameters and
//! the discretization.  See the repository README for the schema.

use anyhow::{bail, Context};
use ch_core::scenarios::{
    make_peakon, make_peakon_antipeakon, make_perturbed_peakon, Perturbation, ProfileGrid,
};
use ch_core::DataPair;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

fn default_pad() -> f64 {
    2.0
}

fn default_checkpoint_every() -> usize {
    100
}

fn default_thickness_tol() -> f64 {
    ch_core::lagrangian::DEFAULT_THICKNESS_TOL
}

fn default_radius() -> f64 {
    20.0
}

fn default_seed() -> u64 {
    0x5eed_cafe
}

fn default_tol_drift_e() -> f64 {
    1e-4
}

fn default_tol_drift_f() -> f64 {
    1e-3
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StabilityConfig {
    pub c: f64,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default)]
    pub center: f64,
}

fn default_eps() -> f64 {
    0.9
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub scenario: String,
    /// named numeric parameters of the scenario
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    pub n_alpha: usize,
    #[serde(default = "default_pad")]
    pub domain_pad: f64,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_checkpoint_every")]
    pub checkpoint_every: usize,
    #[serde(default = "default_thickness_tol")]
    pub thickness_tol: f64,
    #[serde(default = "default_radius")]
    pub truncation_radius: f64,
    pub output_dir: PathBuf,
    /// snapshot CSVs per checkpoint (timeseries is always written)
    #[serde(default)]
    pub write_snapshots: bool,
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub stability: Option<StabilityConfig>,
    #[serde(default = "default_tol_drift_e")]
    pub tol_drift_e: f64,
    #[serde(default = "default_tol_drift_f")]
    pub tol_drift_f: f64,
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: RunConfig = toml::from_str(&text).context("parsing config")?;
        if cfg.n_alpha < 16 {
            bail!("n_alpha must be >= 16, got {}", cfg.n_alpha);
        }
        for (name, v) in [
            ("dt", cfg.dt),
            ("domain_pad", cfg.domain_pad),
            ("thickness_tol", cfg.thickness_tol),
            ("truncation_radius", cfg.truncation_radius),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                bail!("{name} must be positive and finite, got {v}");
            }
        }
        if cfg.checkpoint_every == 0 {
            bail!("checkpoint_every must be >= 1");
        }
        if !cfg.t_end.is_finite() {
            bail!("t_end must be finite");
        }
        if let Ok(dir) = std::env::var("CHSOLVE_OUTPUT_DIR") {
            cfg.output_dir = PathBuf::from(dir);
        }
        Ok(cfg)
    }

    fn param(&self, name: &str) -> anyhow::Result<f64> {
        self.params
            .get(name)
            .copied()
            .with_context(|| format!("scenario {:?} needs parameter {name}", self.scenario))
    }

    fn param_or(&self, name: &str, default: f64) -> f64 {
        self.params.get(name).copied().unwrap_or(default)
    }

    /// Build the initial data; the profile sampling step is tied to the
    /// α resolution.
    pub fn build_data(&self) -> anyhow::Result<(DataPair, f64)> {
        // approximate label span for the step tie
        let span_guess = 2.0 * self.truncation_radius + 2.0 * self.domain_pad + 8.0;
        let dal = span_guess / (self.n_alpha - 1) as f64;
        let grid = ProfileGrid::for_alpha_spacing(self.truncation_radius, dal);
        match self.scenario.as_str() {
            "peakon" => {
                let c = self.param("c")?;
                let x0 = self.param_or("x0", 0.0);
                Ok((make_peakon(c, x0, &grid)?, x0))
            }
            "peakon_antipeakon" => {
                let p = self.param("p")?;
                let halfsep = self.param("halfsep")?;
                Ok((make_peakon_antipeakon(p, halfsep, &grid)?, 0.0))
            }
            "perturbed_peakon" => {
                let c = self.param("c")?;
                let size = self.param("size")?;
                let kind = self.param_or("kind", 0.0) as i64;
                let kind = match kind {
                    0 => Perturbation::Scaled,
                    1 => Perturbation::Bump {
                        center: self.param_or("center", 1.0),
                        width: self.param_or("width", 1.0),
                    },
                    2 => Perturbation::Atom {
                        position: self.param_or("position", 2.0),
                    },
                    other => bail!("kind must be 0 (scaled), 1 (bump) or 2 (atom), got {other}"),
                };
                let (pair, _) = make_perturbed_peakon(c, kind, size, &grid)?;
                Ok((pair, 0.0))
            }
            other => bail!("unknown scenario {other:?}"),
        }
    }

    pub fn stability_defaults(&self) -> StabilityConfig {
        if let Some(s) = &self.stability {
            return s.clone();
        }
        let c = match self.scenario.as_str() {
            "peakon" | "perturbed_peakon" => self.param_or("c", 1.0),
            _ => self.param_or("p", 1.0),
        };
        StabilityConfig {
            c,
            eps: default_eps(),
            center: self.param_or("x0", 0.0),
        }
    }
}
