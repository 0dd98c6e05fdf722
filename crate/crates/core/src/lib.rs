//! Data-driven receding-horizon control of linear periodically time-varying
//! systems through lifting and closed-loop data-enabled predictive control.

pub mod config;
pub mod controller;
pub mod error;
pub mod experiment;
pub mod hankel;
pub mod lemma;
pub mod lifting;
pub mod linalg;
pub mod plant;
pub mod predictor;
pub mod qp;

pub use config::{ConfigFile, ControllerSettings, ExperimentSettings, PlantConfig, Policy};
pub use error::{Error, Result};
pub use lifting::{augment, lift_system, AugmentedLiftedSystem, LiftedSystem};
pub use plant::{Channel, Family, LptvPlant, TrajectoryLog};
pub use predictor::{fit_predictor, DataBuffer, PastWindow, PredictorModel};
