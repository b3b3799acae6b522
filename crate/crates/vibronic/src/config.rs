//! Scenario configuration (TOML). Every key has a default; unknown keys are
//! rejected. All physical quantities are in atomic units.
//!
//! ```toml
//! output_dir = "out"
//!
//! [model]
//! mass = 1836.0
//! spring = 4.0
//!
//! [grids]
//! electron = { lo = -9.0, hi = 9.0, n = 601 }
//! nuclear = { lo = -0.4, hi = 0.4, n = 81 }
//! fit_window = [-0.1, 0.1]
//! n_fock = 20
//! dvr = { lo = -1.0, hi = 1.0, n = 1500 }
//! k_points = 250
//! k_spacing = 1.26
//! density_nuclear = { lo = -0.4, hi = 0.4, n = 161 }
//!
//! [dynamics]
//! method = "exact"        # exact | trotter | bo-full | bo-gboa
//! r0 = 0.1
//! dt = 5.6
//! t_final = 2500.0
//! density_times = [56.1, 1514.4]
//!
//! [measurement]
//! shots = 0
//! seed = 0
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bo::NacMethod;
use crate::electronic::ModelParams;
use crate::error::{Error, Result};
use crate::grid::SpatialGrid;
use crate::tomography::MomentumGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunMethod {
    Exact,
    Trotter,
    BoFull,
    BoGboa,
}

impl RunMethod {
    pub fn name(self) -> &'static str {
        match self {
            RunMethod::Exact => "exact",
            RunMethod::Trotter => "trotter",
            RunMethod::BoFull => "bo-full",
            RunMethod::BoGboa => "bo-gboa",
        }
    }

    pub fn is_bo(self) -> bool {
        matches!(self, RunMethod::BoFull | RunMethod::BoGboa)
    }

    /// 0-based BO states propagated by the BO methods.
    pub fn bo_states(self) -> Vec<usize> {
        match self {
            RunMethod::BoGboa => vec![1, 2],
            _ => vec![0, 1, 2],
        }
    }
}

impl fmt::Display for RunMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RunMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(RunMethod::Exact),
            "trotter" => Ok(RunMethod::Trotter),
            "bo-full" => Ok(RunMethod::BoFull),
            "bo-gboa" => Ok(RunMethod::BoGboa),
            other => Err(Error::Config(format!(
                "unknown method `{other}` (expected exact, trotter, bo-full or bo-gboa)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub electron: SpatialGrid,
    /// Nuclear positions at which orbitals and integrals are tabulated.
    pub nuclear: SpatialGrid,
    pub fit_window: [f64; 2],
    pub n_fock: usize,
    pub dvr: SpatialGrid,
    pub k_points: usize,
    pub k_spacing: f64,
    /// Nuclear points of the joint-density outputs.
    pub density_nuclear: SpatialGrid,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            electron: SpatialGrid {
                lo: -9.0,
                hi: 9.0,
                n: 601,
            },
            nuclear: SpatialGrid {
                lo: -0.4,
                hi: 0.4,
                n: 81,
            },
            fit_window: [-0.1, 0.1],
            n_fock: 20,
            dvr: SpatialGrid {
                lo: -1.0,
                hi: 1.0,
                n: 1500,
            },
            k_points: 250,
            k_spacing: 1.26,
            density_nuclear: SpatialGrid {
                lo: -0.4,
                hi: 0.4,
                n: 161,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DynamicsConfig {
    pub method: RunMethod,
    /// Initial displacement of the moving ion.
    pub r0: f64,
    /// Initial spin-orbital occupation, qubit 1 first.
    pub occupation: String,
    /// Trotter step.
    pub dt: f64,
    pub order: u8,
    pub t_final: f64,
    /// Spacing of trajectory rows.
    pub output_interval: f64,
    pub density_times: Vec<f64>,
    pub nac: NacMethod,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        DynamicsConfig {
            method: RunMethod::Exact,
            r0: 0.1,
            occupation: "1100".into(),
            dt: 5.6,
            order: 1,
            t_final: 2500.0,
            output_interval: 5.6,
            density_times: vec![56.1, 1514.4],
            nac: NacMethod::Analytic,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct MeasurementConfig {
    /// Shots per Hadamard-test circuit; 0 = exact expectation values.
    pub shots: u64,
    pub seed: u64,
    /// Measure spin-up pairs only and double them.
    pub spin_symmetry: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub output_dir: PathBuf,
    pub model: ModelParams,
    pub grids: GridConfig,
    pub dynamics: DynamicsConfig,
    pub measurement: MeasurementConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            output_dir: PathBuf::from("out"),
            model: ModelParams::default(),
            grids: GridConfig::default(),
            dynamics: DynamicsConfig::default(),
            measurement: MeasurementConfig::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn fit_window(&self) -> (f64, f64) {
        (self.grids.fit_window[0], self.grids.fit_window[1])
    }

    pub fn momentum_grid(&self) -> MomentumGrid {
        MomentumGrid {
            n_k: self.grids.k_points,
            dk: self.grids.k_spacing,
        }
    }

    /// Checks every field; nothing runs on an invalid configuration.
    pub fn validate(&self) -> Result<()> {
        let tag = |what: &str, e: Error| Error::Config(format!("{what}: {e}"));
        self.model.validate().map_err(|e| tag("model", e))?;
        let g = &self.grids;
        g.electron
            .validate()
            .map_err(|e| tag("grids.electron", e))?;
        g.nuclear.validate().map_err(|e| tag("grids.nuclear", e))?;
        g.dvr.validate().map_err(|e| tag("grids.dvr", e))?;
        g.density_nuclear
            .validate()
            .map_err(|e| tag("grids.density_nuclear", e))?;
        let [wlo, whi] = g.fit_window;
        if !(wlo < 0.0 && whi > 0.0 && wlo >= g.nuclear.lo && whi <= g.nuclear.hi) {
            return Err(Error::Config(format!(
                "grids.fit_window [{wlo}, {whi}] must contain 0 and lie inside the nuclear grid"
            )));
        }
        if g.n_fock < 2 {
            return Err(Error::Config("grids.n_fock must be >= 2".into()));
        }
        self.momentum_grid()
            .validate()
            .map_err(|e| tag("grids.k", e))?;
        let d = &self.dynamics;
        if !(d.dt > 0.0 && d.dt.is_finite()) {
            return Err(Error::Config(format!(
                "dynamics.dt must be > 0, got {}",
                d.dt
            )));
        }
        if !(d.output_interval > 0.0 && d.output_interval.is_finite()) {
            return Err(Error::Config("dynamics.output_interval must be > 0".into()));
        }
        if !(d.t_final > 0.0 && d.t_final.is_finite()) {
            return Err(Error::Config("dynamics.t_final must be > 0".into()));
        }
        if !matches!(d.order, 1 | 2) {
            return Err(Error::Config(format!(
                "dynamics.order must be 1 or 2, got {}",
                d.order
            )));
        }
        if d.density_times
            .iter()
            .any(|&t| !(0.0..=d.t_final).contains(&t))
        {
            return Err(Error::Config(
                "dynamics.density_times must lie in [0, t_final]".into(),
            ));
        }
        if d.occupation.len() != 4 || d.occupation.chars().any(|c| c != '0' && c != '1') {
            return Err(Error::Config(format!(
                "dynamics.occupation must be four 0/1 digits, got `{}`",
                d.occupation
            )));
        }
        if !(g.dvr.lo <= d.r0 && d.r0 <= g.dvr.hi) {
            return Err(Error::Config(
                "dynamics.r0 lies outside the DVR grid".into(),
            ));
        }
        Ok(())
    }
}
