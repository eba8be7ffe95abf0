//! TOML run configuration describing a [`Scenario`].
//!
//! ```toml
//! name = "custom"
//! h = 0.01
//! duration = 6.0
//!
//! [plant]
//! kind = "nonlinear-cubic"
//!
//! [controller]
//! kind = "i-pi"
//! alpha = 1.0
//! kp = 6.0
//! ki = 9.0
//!
//! [reference]
//! schedule = [[0.0, 1.0]]
//! ```

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::classic::{ClassicGains, ClassicKind};
use crate::error::{Error, Result};
use crate::intelligent::IntelligentKind;
use crate::plant::{FaultModel, NoiseModel, PlantKind, PlantModel, DEFAULT_NOISE_STD, DEFAULT_SUBSTEPS};
use crate::scenarios::{ControllerSpec, Scenario, DEFAULT_DENOISE_WINDOW};
use crate::signals::ReferenceMode;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub name: String,
    pub h: f64,
    pub duration: f64,
    #[serde(default = "default_substeps")]
    pub substeps: usize,
    #[serde(default = "default_denoise_window")]
    pub denoise_window: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics_window: Option<[f64; 2]>,
    /// Output directory for this run; the CLI `--out-dir` flag wins.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub plant: PlantConfig,
    pub controller: ControllerConfig,
    pub reference: ReferenceConfig,
    #[serde(default)]
    pub fault: FaultConfig,
    #[serde(default)]
    pub noise: NoiseConfig,
}

fn default_substeps() -> usize {
    DEFAULT_SUBSTEPS
}

fn default_denoise_window() -> usize {
    DEFAULT_DENOISE_WINDOW
}

fn default_f_window() -> usize {
    1
}

fn default_noise_std() -> f64 {
    DEFAULT_NOISE_STD
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PlantConfig {
    NonlinearCubic {
        #[serde(default)]
        y0: f64,
    },
    Fopdt {
        gain: f64,
        time_constant: f64,
        delay: f64,
        #[serde(default)]
        y0: f64,
    },
    PureIntegrator {
        order: usize,
        f_true: f64,
        alpha_true: f64,
        #[serde(default)]
        f_drift: f64,
        #[serde(default)]
        y0: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ControllerKindConfig {
    OpenLoop,
    Pi,
    Pid,
    Pii2,
    Pii2d,
    IP,
    IPd,
    IPi,
    IPid,
}

/// Gains use the servo convention of [`ControllerSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerConfig {
    pub kind: ControllerKindConfig,
    #[serde(default)]
    pub kp: f64,
    #[serde(default)]
    pub ki: f64,
    #[serde(default)]
    pub kii: f64,
    #[serde(default)]
    pub kd: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default = "default_f_window")]
    pub f_window: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceModeConfig {
    #[default]
    StepBackwardDiff,
    SmoothSecondOrder,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceConfig {
    #[serde(default)]
    pub mode: ReferenceModeConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_constant: Option<f64>,
    pub schedule: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FaultConfig {
    #[default]
    None,
    PowerLoss { onset: f64, decay: f64 },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum NoiseConfig {
    #[default]
    None,
    Gaussian {
        #[serde(default = "default_noise_std")]
        std: f64,
        #[serde(default)]
        seed: u64,
    },
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_scenario(&self) -> Result<Scenario> {
        let plant = match self.plant {
            PlantConfig::NonlinearCubic { y0 } => PlantModel { kind: PlantKind::NonlinearCubic, y0 },
            PlantConfig::Fopdt { gain, time_constant, delay, y0 } => {
                PlantModel { kind: PlantKind::Fopdt { gain, time_constant, delay }, y0 }
            }
            PlantConfig::PureIntegrator { order, f_true, alpha_true, f_drift, y0 } => {
                PlantModel { kind: PlantKind::PureIntegrator { order, f_true, alpha_true, f_drift }, y0 }
            }
        };
        let c = &self.controller;
        let classic = |kind| ControllerSpec::Classic { kind, gains: ClassicGains::pii2d(c.kp, c.ki, c.kii, c.kd) };
        let intelligent = |kind| -> Result<ControllerSpec> {
            let alpha = c.alpha.ok_or_else(|| Error::Config("intelligent controllers need `alpha`".into()))?;
            Ok(ControllerSpec::Intelligent { kind, alpha, kp: c.kp, ki: c.ki, kd: c.kd, f_window: c.f_window })
        };
        let controller = match c.kind {
            ControllerKindConfig::OpenLoop => ControllerSpec::OpenLoop,
            ControllerKindConfig::Pi => classic(ClassicKind::Pi),
            ControllerKindConfig::Pid => classic(ClassicKind::Pid),
            ControllerKindConfig::Pii2 => classic(ClassicKind::Pii2),
            ControllerKindConfig::Pii2d => classic(ClassicKind::Pii2d),
            ControllerKindConfig::IP => intelligent(IntelligentKind::IP)?,
            ControllerKindConfig::IPd => intelligent(IntelligentKind::IPD)?,
            ControllerKindConfig::IPi => intelligent(IntelligentKind::IPI)?,
            ControllerKindConfig::IPid => intelligent(IntelligentKind::IPID)?,
        };
        let reference_mode = match self.reference.mode {
            ReferenceModeConfig::StepBackwardDiff => ReferenceMode::StepBackwardDiff,
            ReferenceModeConfig::SmoothSecondOrder => ReferenceMode::SmoothSecondOrder {
                time_constant: self
                    .reference
                    .time_constant
                    .ok_or_else(|| Error::Config("smooth-second-order reference needs `time_constant`".into()))?,
            },
        };
        let scenario = Scenario {
            name: self.name.clone(),
            plant,
            controller,
            schedule: self.reference.schedule.iter().map(|[t, v]| (*t, *v)).collect(),
            reference_mode,
            fault: match self.fault {
                FaultConfig::None => FaultModel::None,
                FaultConfig::PowerLoss { onset, decay } => FaultModel::PowerLoss { onset, decay },
            },
            noise: match self.noise {
                NoiseConfig::None => NoiseModel::None,
                NoiseConfig::Gaussian { std, seed } => NoiseModel::Gaussian { std, seed },
            },
            duration: self.duration,
            h: self.h,
            substeps: self.substeps,
            denoise_window: self.denoise_window,
            metrics_window: self.metrics_window.map(|[a, b]| (a, b)),
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn from_scenario(s: &Scenario) -> Self {
        let plant = match s.plant.kind {
            PlantKind::NonlinearCubic => PlantConfig::NonlinearCubic { y0: s.plant.y0 },
            PlantKind::Fopdt { gain, time_constant, delay } => {
                PlantConfig::Fopdt { gain, time_constant, delay, y0: s.plant.y0 }
            }
            PlantKind::PureIntegrator { order, f_true, alpha_true, f_drift } => {
                PlantConfig::PureIntegrator { order, f_true, alpha_true, f_drift, y0: s.plant.y0 }
            }
        };
        let controller = match s.controller {
            ControllerSpec::OpenLoop => ControllerConfig {
                kind: ControllerKindConfig::OpenLoop,
                kp: 0.0,
                ki: 0.0,
                kii: 0.0,
                kd: 0.0,
                alpha: None,
                f_window: 1,
            },
            ControllerSpec::Classic { kind, gains } => ControllerConfig {
                kind: match kind {
                    ClassicKind::Pi => ControllerKindConfig::Pi,
                    ClassicKind::Pid => ControllerKindConfig::Pid,
                    ClassicKind::Pii2 => ControllerKindConfig::Pii2,
                    ClassicKind::Pii2d => ControllerKindConfig::Pii2d,
                },
                kp: gains.kp,
                ki: gains.ki,
                kii: gains.kii,
                kd: gains.kd,
                alpha: None,
                f_window: 1,
            },
            ControllerSpec::Intelligent { kind, alpha, kp, ki, kd, f_window } => ControllerConfig {
                kind: match kind {
                    IntelligentKind::IP => ControllerKindConfig::IP,
                    IntelligentKind::IPD => ControllerKindConfig::IPd,
                    IntelligentKind::IPI => ControllerKindConfig::IPi,
                    IntelligentKind::IPID => ControllerKindConfig::IPid,
                },
                kp,
                ki,
                kii: 0.0,
                kd,
                alpha: Some(alpha),
                f_window,
            },
        };
        let (mode, time_constant) = match s.reference_mode {
            ReferenceMode::StepBackwardDiff => (ReferenceModeConfig::StepBackwardDiff, None),
            ReferenceMode::SmoothSecondOrder { time_constant } => {
                (ReferenceModeConfig::SmoothSecondOrder, Some(time_constant))
            }
        };
        RunConfig {
            name: s.name.clone(),
            h: s.h,
            duration: s.duration,
            substeps: s.substeps,
            denoise_window: s.denoise_window,
            metrics_window: s.metrics_window.map(|(a, b)| [a, b]),
            output: None,
            plant,
            controller,
            reference: ReferenceConfig {
                mode,
                time_constant,
                schedule: s.schedule.iter().map(|(t, v)| [*t, *v]).collect(),
            },
            fault: match s.fault {
                FaultModel::None => FaultConfig::None,
                FaultModel::PowerLoss { onset, decay } => FaultConfig::PowerLoss { onset, decay },
            },
            noise: match s.noise {
                NoiseModel::None => NoiseConfig::None,
                NoiseModel::Gaussian { std, seed } => NoiseConfig::Gaussian { std, seed },
            },
        }
    }
}
