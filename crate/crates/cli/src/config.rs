//! Per-command run configurations: loaded from a JSON file, then
//! overridden by flags.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use qgsw_core::evolve::{Hyperviscosity, PerturbKind};

use crate::error::CliError;

pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, CliError> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))
        }
    }
}

/// Half-plane grid; the box half-width is three dipole radii.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub nx: usize,
    pub ny: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { nx: 256, ny: 128 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DipoleConfig {
    pub lambda: f64,
    #[serde(rename = "W")]
    pub w: f64,
    pub grid: GridConfig,
    pub out: PathBuf,
}

impl Default for DipoleConfig {
    fn default() -> Self {
        Self { lambda: 2.0, w: 1.0, grid: GridConfig::default(), out: "out/dipole".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub lambda: f64,
    #[serde(rename = "W")]
    pub w: f64,
    /// Each entry `n` gives a lattice spacing `a/n`.
    pub resolutions: Vec<usize>,
    pub angles: usize,
    pub min_order: f64,
    pub out: PathBuf,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            lambda: 2.0,
            w: 1.0,
            resolutions: vec![32, 64, 128],
            angles: 64,
            min_order: 1.7,
            out: "out/verify".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaximizeConfig {
    pub lambda: f64,
    /// Impulse target; `impulse_unit(lambda)` when absent.
    pub mu: Option<f64>,
    /// Mass cap; `10·mu·rho(lambda)` when absent.
    pub nu: Option<f64>,
    pub grid: GridConfig,
    pub max_iters: usize,
    pub tol_rel: f64,
    pub seed: u64,
    pub out: PathBuf,
}

impl Default for MaximizeConfig {
    fn default() -> Self {
        Self {
            lambda: 2.0,
            mu: None,
            nu: None,
            grid: GridConfig::default(),
            max_iters: 400,
            tol_rel: 1e-8,
            seed: 1,
            out: "out/maximize".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationConfig {
    pub kind: PerturbKind,
    pub amplitude: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveConfig {
    pub lambda: f64,
    #[serde(rename = "W")]
    pub w: f64,
    pub grid: GridConfig,
    pub cfl: f64,
    /// Fixed step; derived from `cfl` when absent.
    pub dt: Option<f64>,
    /// End time in units of `a/W`.
    pub t_end_radii: f64,
    pub diag_every: usize,
    /// Steps between checkpoint dumps; 0 disables them.
    pub checkpoint_every: usize,
    pub hyperviscosity: Option<Hyperviscosity>,
    pub perturbation: Option<PerturbationConfig>,
    pub out: PathBuf,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        Self {
            lambda: 2.0,
            w: 1.0,
            grid: GridConfig { nx: 256, ny: 128 },
            cfl: 0.25,
            dt: None,
            t_end_radii: 5.0,
            diag_every: 10,
            checkpoint_every: 0,
            hyperviscosity: None,
            perturbation: None,
            out: "out/evolve".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilityConfig {
    pub evolve: EvolveConfig,
    pub kind: PerturbKind,
    pub amplitudes: Vec<f64>,
    pub seed: u64,
    pub out: PathBuf,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        Self {
            evolve: EvolveConfig { out: PathBuf::new(), ..EvolveConfig::default() },
            kind: PerturbKind::SmoothNoise,
            amplitudes: vec![0.005, 0.01, 0.02],
            seed: 1,
            out: "out/stability".into(),
        }
    }
}
