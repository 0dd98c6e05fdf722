//! TOML configuration for the plant, the controllers and the experiment.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plant::{Family, LptvPlant, PeriodicMatrix, PlantFamilies};

/// The bundled benchmark configuration.
pub const CASE_STUDY_TOML: &str = include_str!("../configs/case_study.toml");

/// Whole configuration file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConfigFile {
    pub plant: PlantConfig,
    #[serde(default)]
    pub controller: ControllerSettings,
    #[serde(default)]
    pub experiment: ExperimentSettings,
}

impl ConfigFile {
    pub fn case_study() -> Self {
        toml::from_str(CASE_STUDY_TOML).expect("bundled config parses")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|message| Error::Parse {
            path: path.to_path_buf(),
            message,
        })
    }

    /// Parse TOML, or JSON when the text starts with `{`.
    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| e.to_string())
        } else {
            toml::from_str(text).map_err(|e| e.to_string())
        }
    }
}

/// Row-major entries of one matrix family.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FamilyEntries {
    Affine { base: Vec<f64>, varying: Vec<f64> },
    Table { table: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlantConfig {
    pub period: usize,
    pub states: usize,
    pub inputs: usize,
    pub outputs: usize,
    pub disturbances: usize,
    pub a: FamilyEntries,
    pub b: FamilyEntries,
    pub c: FamilyEntries,
    pub d: FamilyEntries,
    pub k: FamilyEntries,
    pub f: FamilyEntries,
    pub g: FamilyEntries,
}

impl PlantConfig {
    pub fn case_study() -> Self {
        ConfigFile::case_study().plant
    }

    fn shape(&self, family: Family) -> (usize, usize) {
        let (n, r, l, m) = (self.states, self.inputs, self.outputs, self.disturbances);
        match family {
            Family::A => (n, n),
            Family::B => (n, r),
            Family::C => (l, n),
            Family::D => (l, r),
            Family::K => (n, l),
            Family::F => (n, m),
            Family::G => (l, m),
        }
    }

    fn entries(&self, family: Family) -> &FamilyEntries {
        match family {
            Family::A => &self.a,
            Family::B => &self.b,
            Family::C => &self.c,
            Family::D => &self.d,
            Family::K => &self.k,
            Family::F => &self.f,
            Family::G => &self.g,
        }
    }

    fn family(&self, family: Family) -> Result<PeriodicMatrix> {
        let (rows, cols) = self.shape(family);
        let matrix = |v: &[f64], what: &str| {
            if v.len() != rows * cols {
                return Err(Error::Config(format!(
                    "family {family} {what}: {} entries for a {rows}x{cols} matrix",
                    v.len()
                )));
            }
            Ok(DMatrix::from_row_slice(rows, cols, v))
        };
        match self.entries(family) {
            FamilyEntries::Affine { base, varying } => Ok(PeriodicMatrix::Affine {
                base: matrix(base, "base")?,
                varying: matrix(varying, "varying")?,
            }),
            FamilyEntries::Table { table } => Ok(PeriodicMatrix::Table(
                table
                    .iter()
                    .map(|v| matrix(v, "table"))
                    .collect::<Result<_>>()?,
            )),
        }
    }

    pub fn build(&self) -> Result<LptvPlant> {
        LptvPlant::new(
            self.period,
            PlantFamilies {
                a: self.family(Family::A)?,
                b: self.family(Family::B)?,
                c: self.family(Family::C)?,
                d: self.family(Family::D)?,
                k: self.family(Family::K)?,
                f: self.family(Family::F)?,
                g: self.family(Family::G)?,
            },
        )
    }
}

/// Receding-horizon application policy of the lifted controller.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Policy {
    /// Apply the whole first lifted input (one period of samples).
    FullPeriod,
    /// Apply only the first sample, re-planning every sample.
    FirstSample,
}

impl std::str::FromStr for Policy {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "full-period" => Ok(Policy::FullPeriod),
            "first-sample" => Ok(Policy::FirstSample),
            other => Err(format!(
                "unknown policy '{other}' (expected full-period or first-sample)"
            )),
        }
    }
}

impl std::fmt::Display for Policy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Policy::FullPeriod => "full-period",
            Policy::FirstSample => "first-sample",
        })
    }
}

/// Controller settings in units of periods; the non-lifted baseline uses
/// the same windows expressed in samples.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ControllerSettings {
    pub past: usize,
    pub horizon: usize,
    pub q: f64,
    pub r: f64,
    pub u_min: Vec<f64>,
    pub u_max: Vec<f64>,
    pub y_min: Vec<f64>,
    pub y_max: Vec<f64>,
    /// Slack penalty; defaults to `1e4 * max(q, r)`.
    pub slack_penalty: Option<f64>,
    pub policy: Policy,
    /// Keep the open-loop data forever (`true`) or slide a window of
    /// `window` columns over the most recent data.
    pub retain_init_data: bool,
    pub window: Option<usize>,
    pub rank_tol: f64,
    pub max_qp_iterations: usize,
}

impl Default for ControllerSettings {
    fn default() -> Self {
        ControllerSettings {
            past: 1,
            horizon: 2,
            q: 100.0,
            r: 1.0,
            u_min: Vec::new(),
            u_max: Vec::new(),
            y_min: Vec::new(),
            y_max: Vec::new(),
            slack_penalty: None,
            policy: Policy::FullPeriod,
            retain_init_data: true,
            window: None,
            rank_tol: crate::hankel::DEFAULT_REL_TOL,
            max_qp_iterations: 500,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentSettings {
    pub seed: u64,
    pub noise: bool,
    pub noise_variance: f64,
    pub excitation_variance: f64,
    pub disturbance_amplitude: f64,
    pub init_periods: usize,
    pub run_periods: usize,
    pub x0: Option<Vec<f64>>,
}

impl Default for ExperimentSettings {
    fn default() -> Self {
        ExperimentSettings {
            seed: 2024,
            noise: true,
            noise_variance: 0.05,
            excitation_variance: 1.0,
            disturbance_amplitude: 1.0,
            init_periods: 1000,
            run_periods: 100,
            x0: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_config_builds_case_study() {
        let cfg = ConfigFile::case_study();
        let plant = cfg.plant.build().unwrap();
        assert_eq!(plant.period(), 20);
        assert_eq!(
            (plant.states(), plant.inputs(), plant.outputs(), plant.disturbances()),
            (3, 1, 2, 1)
        );
        // F_k = B_k and G_k = D_k come from the file, not from the code
        for k in 0..20 {
            assert_eq!(plant.matrix(Family::F, k), plant.matrix(Family::B, k));
            assert_eq!(plant.matrix(Family::G, k), plant.matrix(Family::D, k));
        }
        assert_eq!(cfg.controller.policy, Policy::FullPeriod);
        assert_eq!(cfg.controller.u_max, vec![10.0]);
        assert_eq!(cfg.experiment.init_periods, 1000);
    }

    #[test]
    fn json_and_table_forms() {
        let json = r#"{
            "plant": {
                "period": 2, "states": 1, "inputs": 1, "outputs": 1, "disturbances": 1,
                "a": {"table": [[0.5], [0.25]]},
                "b": {"base": [1.0], "varying": [0.0]},
                "c": {"base": [1.0], "varying": [0.5]},
                "d": {"base": [0.0], "varying": [0.0]},
                "k": {"base": [0.0], "varying": [0.0]},
                "f": {"base": [1.0], "varying": [0.0]},
                "g": {"base": [0.0], "varying": [0.0]}
            }
        }"#;
        let cfg = ConfigFile::parse(json).unwrap();
        let plant = cfg.plant.build().unwrap();
        assert_eq!(plant.matrix(Family::A, 1)[(0, 0)], 0.25);
        assert_eq!(plant.matrix(Family::C, 1)[(0, 0)], 0.5);
        assert_eq!(cfg.controller.horizon, 2);
    }

    #[test]
    fn wrong_entry_count_is_reported() {
        let mut cfg = PlantConfig::case_study();
        cfg.b = FamilyEntries::Affine {
            base: vec![1.0, 2.0],
            varying: vec![0.0, 0.0],
        };
        let err = cfg.build().unwrap_err();
        assert!(err.to_string().contains("family B"), "{err}");
    }

    #[test]
    fn policy_parsing() {
        assert_eq!("first-sample".parse::<Policy>().unwrap(), Policy::FirstSample);
        assert!("nope".parse::<Policy>().is_err());
    }
}
