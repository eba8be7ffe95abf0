//! Sampled classic PID-family controllers, intelligent (model-free)
//! controllers, the gain correspondence that makes them identical once
//! sampled, and a small closed-loop simulation bench around the plant
//! `y' + y^3 = 2u`.

pub mod classic;
pub mod config;
pub mod equivalence;
pub mod error;
pub mod intelligent;
pub mod plant;
pub mod scenarios;
pub mod signals;
pub mod tuning;

pub use classic::{ClassicController, ClassicGains, ClassicKind, ClassicState};
pub use config::RunConfig;
pub use equivalence::{map_gains, verify_equivalence, EquivalenceReport, GainCorrespondence};
pub use error::{Error, Result};
pub use intelligent::{FEstimate, IntelligentConfig, IntelligentController, IntelligentKind, IntelligentState};
pub use plant::{FaultModel, NoiseModel, PlantKind, PlantModel};
pub use scenarios::{run_scenario, ControllerSpec, Metrics, Scenario, ScenarioRun, Trajectory};
pub use signals::{ReferenceMode, ReferenceSample, ReferenceTrajectory, TimeSeries};
pub use tuning::{identify_broida, tune_pi_broida, FopdtFit};
