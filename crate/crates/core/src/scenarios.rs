//! Closed-loop experiments on the cubic plant and their tracking metrics.

use std::io::{self, Write};

use crate::classic::{ClassicController, ClassicGains, ClassicKind};
use crate::error::{check_step, domain, Error, Result};
use crate::intelligent::{IntelligentConfig, IntelligentController, IntelligentKind};
use crate::plant::{FaultModel, NoiseModel, PlantModel, PlantSim, DEFAULT_SUBSTEPS};
use crate::signals::{
    check_schedule, fmt_f64, make_reference, moving_average, sample_count, schedule_value, ReferenceMode, TimeSeries,
};

/// Default trailing-mean window for the denoised output, in samples.
pub const DEFAULT_DENOISE_WINDOW: usize = 50;
/// `F` estimation window used by the builtin i-PI scenarios.
pub const BUILTIN_F_WINDOW: usize = 5;

/// How the loop computes `u`.
///
/// Gains here follow the usual servo convention: positive gains are
/// stabilizing and act on the error `y* - y`. Classic controllers receive
/// `y* - y` directly; intelligent gains are negated before they reach the
/// `e = y - y*` law of [`crate::intelligent`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ControllerSpec {
    /// `u` follows the setpoint schedule directly.
    OpenLoop,
    Classic { kind: ClassicKind, gains: ClassicGains },
    Intelligent { kind: IntelligentKind, alpha: f64, kp: f64, ki: f64, kd: f64, f_window: usize },
}

impl ControllerSpec {
    pub fn intelligent_config(&self) -> Option<Result<IntelligentConfig>> {
        match *self {
            ControllerSpec::Intelligent { kind, alpha, kp, ki, kd, f_window } => Some(
                IntelligentConfig::for_kind(kind, alpha, -kp, -ki, -kd).and_then(|c| c.with_f_window(f_window)),
            ),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub plant: PlantModel,
    pub controller: ControllerSpec,
    /// `(time, setpoint)` steps.
    pub schedule: Vec<(f64, f64)>,
    pub reference_mode: ReferenceMode,
    pub fault: FaultModel,
    pub noise: NoiseModel,
    pub duration: f64,
    pub h: f64,
    pub substeps: usize,
    pub denoise_window: usize,
    /// Extra metrics window, e.g. the post-fault interval.
    pub metrics_window: Option<(f64, f64)>,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        check_step(self.h)?;
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return domain(format!("duration must be positive, got {}", self.duration));
        }
        let samples = self.duration / self.h;
        if (samples - samples.round()).abs() > 1e-6 * samples.max(1.0) {
            return domain(format!("h = {} does not divide duration {}", self.h, self.duration));
        }
        if self.substeps == 0 {
            return domain("substeps must be at least 1");
        }
        if self.denoise_window == 0 {
            return domain("denoise window must be at least 1");
        }
        check_schedule(&self.schedule)?;
        self.plant.validate()?;
        self.fault.validate()?;
        self.noise.validate()?;
        match self.controller {
            ControllerSpec::Classic { gains, .. } if !gains.is_finite() => domain("classic gains must be finite"),
            ControllerSpec::Intelligent { .. } => self.controller.intelligent_config().unwrap().map(|_| ()),
            _ => Ok(()),
        }
    }

    pub fn samples(&self) -> usize {
        sample_count(self.h, self.duration)
    }
}

/// Every recorded signal of a run, on one time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub time: TimeSeries,
    pub setpoint: TimeSeries,
    pub reference: TimeSeries,
    pub output: TimeSeries,
    pub output_denoised: TimeSeries,
    pub control_commanded: TimeSeries,
    pub control_applied: TimeSeries,
    pub f_estimate: TimeSeries,
}

pub const TRAJECTORY_COLUMNS: [&str; 8] = [
    "time",
    "setpoint",
    "reference",
    "output",
    "output_denoised",
    "control_commanded",
    "control_applied",
    "f_estimate",
];

impl Trajectory {
    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    pub fn h(&self) -> f64 {
        self.time.h()
    }

    /// `y* - y` at every sample.
    pub fn tracking_error(&self) -> Vec<f64> {
        self.reference.values().iter().zip(self.output.values()).map(|(r, y)| r - y).collect()
    }

    fn columns(&self) -> [&TimeSeries; 8] {
        [
            &self.time,
            &self.setpoint,
            &self.reference,
            &self.output,
            &self.output_denoised,
            &self.control_commanded,
            &self.control_applied,
            &self.f_estimate,
        ]
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{}", TRAJECTORY_COLUMNS.join(","))?;
        let cols = self.columns();
        for k in 0..self.len() {
            let row: Vec<String> = cols.iter().map(|c| fmt_f64(c.values()[k])).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub window: (f64, f64),
    /// `∫ |y* - y| dt`.
    pub iae: f64,
    /// `∫ t |y* - y| dt`.
    pub itae: f64,
    /// Peak excursion past the final setpoint, as a fraction of the last
    /// setpoint change.
    pub max_overshoot: f64,
    /// Time from the window start until the output stays within 2 % of the
    /// setpoint change around the final setpoint; `None` if it never does.
    pub settling_time_2pct: Option<f64>,
    /// `|y* - y|` at the last sample of the window.
    pub final_abs_error: f64,
}

impl Metrics {
    pub fn write_kv<W: Write>(&self, mut w: W, prefix: &str) -> io::Result<()> {
        writeln!(w, "{prefix}from={}", self.window.0)?;
        writeln!(w, "{prefix}to={}", self.window.1)?;
        writeln!(w, "{prefix}iae={}", self.iae)?;
        writeln!(w, "{prefix}itae={}", self.itae)?;
        writeln!(w, "{prefix}max_overshoot={}", self.max_overshoot)?;
        match self.settling_time_2pct {
            Some(t) => writeln!(w, "{prefix}settling_time_2pct={t}")?,
            None => writeln!(w, "{prefix}settling_time_2pct=unsettled")?,
        }
        writeln!(w, "{prefix}final_abs_error={}", self.final_abs_error)
    }
}

pub fn compute_metrics(traj: &Trajectory, window: Option<(f64, f64)>) -> Result<Metrics> {
    if traj.is_empty() {
        return domain("trajectory is empty");
    }
    let h = traj.h();
    let t_first = traj.time.values()[0];
    let t_last = traj.time.values()[traj.len() - 1];
    let (start, end) = window.unwrap_or((t_first, t_last));
    let eps = 1e-9 * h;
    if !(start <= end) || start < t_first - eps || end > t_last + eps {
        return domain(format!("window [{start}, {end}] outside trajectory span [{t_first}, {t_last}]"));
    }
    let idx: Vec<usize> =
        (0..traj.len()).filter(|&k| traj.time.values()[k] >= start - eps && traj.time.values()[k] <= end + eps).collect();
    let (Some(&first), Some(&last)) = (idx.first(), idx.last()) else {
        return domain("metrics window contains no samples");
    };

    let err = traj.tracking_error();
    let t = traj.time.values();
    let y = traj.output.values();
    let (mut iae, mut itae) = (0.0, 0.0);
    for &k in &idx {
        iae += err[k].abs() * h;
        itae += t[k] * err[k].abs() * h;
    }

    let sp = traj.setpoint.values();
    let sp_final = sp[last];
    // size of the last setpoint change; the setpoint is 0 before the schedule
    let sp_prior = sp[..=last].iter().rev().find(|&&v| v != sp_final).copied().unwrap_or(0.0);
    let span = if sp_final != sp_prior { (sp_final - sp_prior).abs() } else { 1.0 };
    let direction = if sp_final >= sp_prior { 1.0 } else { -1.0 };
    let peak = idx.iter().map(|&k| (y[k] - sp_final) * direction).fold(0.0, f64::max);

    let band = 0.02 * span;
    let last_violation = idx.iter().rev().find(|&&k| (y[k] - sp_final).abs() > band).copied();
    let settling_time_2pct = match last_violation {
        None => Some(0.0),
        Some(k) if k == last => None,
        Some(k) => Some(t[k + 1] - t[first]),
    };

    Ok(Metrics {
        window: (t[first], t[last]),
        iae,
        itae,
        max_overshoot: peak / span,
        settling_time_2pct,
        final_abs_error: err[last].abs(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioRun {
    pub trajectory: Trajectory,
    pub metrics: Metrics,
    pub window_metrics: Option<Metrics>,
    /// Set when the plant blew up; the trajectory stops before that time.
    pub diverged_at: Option<f64>,
}

enum Loop {
    Open,
    Classic(ClassicController),
    Intelligent(IntelligentController),
}

pub fn run_scenario(s: &Scenario) -> Result<ScenarioRun> {
    s.validate()?;
    let h = s.h;
    let n = s.samples();
    let reference = make_reference(&s.schedule, h, s.duration, s.reference_mode)?;
    let mut plant = PlantSim::new(s.plant, h, s.substeps)?;
    let mut noise = s.noise.sampler()?;
    let mut controller = match s.controller {
        ControllerSpec::OpenLoop => Loop::Open,
        ControllerSpec::Classic { kind, gains } => Loop::Classic(ClassicController::new(kind, gains, h)?),
        ControllerSpec::Intelligent { .. } => {
            let cfg = s.controller.intelligent_config().unwrap()?;
            Loop::Intelligent(IntelligentController::new(cfg, h)?)
        }
    };

    let mut cols: [Vec<f64>; 7] = std::array::from_fn(|_| Vec::with_capacity(n));
    let mut diverged_at = None;
    for k in 0..n {
        let t = k as f64 * h;
        let y = plant.output() + noise.sample();
        let r = reference.sample(k);
        let setpoint = schedule_value(&s.schedule, t, h);
        let (u, f) = match &mut controller {
            Loop::Open => (setpoint, 0.0),
            Loop::Classic(c) => (c.step(r.y_star - y), 0.0),
            Loop::Intelligent(c) => {
                let (u, f) = c.step(y, r)?;
                (u, f.value)
            }
        };
        let applied = s.fault.apply(u, t, h);
        if ![y, u, f, applied].iter().all(|v| v.is_finite()) {
            diverged_at = Some(t);
            break;
        }
        for (col, v) in cols.iter_mut().zip([t, setpoint, r.y_star, y, u, applied, f]) {
            col.push(v);
        }
        if k + 1 < n {
            if let Err(e) = plant.advance(applied, h) {
                match e {
                    Error::Diverged { time } => {
                        diverged_at = Some(time);
                        break;
                    }
                    other => return Err(other),
                }
            }
        }
    }

    if cols[0].is_empty() {
        return Err(Error::Diverged { time: diverged_at.unwrap_or(0.0) });
    }
    let [time, setpoint, reference, output, commanded, applied, f_estimate] = cols;
    let series = |v: Vec<f64>| TimeSeries::new(h, 0.0, v);
    let output = series(output)?;
    let trajectory = Trajectory {
        time: series(time)?,
        setpoint: series(setpoint)?,
        reference: series(reference)?,
        output_denoised: moving_average(&output, s.denoise_window)?,
        output,
        control_commanded: series(commanded)?,
        control_applied: series(applied)?,
        f_estimate: series(f_estimate)?,
    };
    let metrics = compute_metrics(&trajectory, None)?;
    let window_metrics = match s.metrics_window {
        Some((a, b)) if diverged_at.is_none() => Some(compute_metrics(&trajectory, Some((a, b)))?),
        _ => None,
    };
    Ok(ScenarioRun { trajectory, metrics, window_metrics, diverged_at })
}

/// Setpoint of the nominal runs.
pub const NOMINAL_SETPOINT: f64 = 1.0;
/// Setpoint of the large-amplitude runs.
pub const LARGE_SETPOINT: f64 = 5.0;
/// PI gains obtained from the Broïda fit of the cubic plant.
pub const PI_KP: f64 = 6.350;
pub const PI_KI: f64 = 15.817;
/// i-PI tuning: `alpha = 1`, `K_P = 6`, `K_I = 9`.
pub const IPI_ALPHA: f64 = 1.0;
pub const IPI_KP: f64 = 6.0;
pub const IPI_KI: f64 = 9.0;
/// Power loss `u_applied = 0.996^(t/h) u` for `t > 4 s`.
pub const FAULT_ONSET: f64 = 4.0;
pub const FAULT_DECAY: f64 = 0.996;
pub const FAULT_DURATION: f64 = 12.0;
pub const NOMINAL_DURATION: f64 = 6.0;
pub const SAMPLING_PERIOD: f64 = 0.01;

pub const BUILTIN_NAMES: [&str; 7] = [
    "open-loop",
    "pi-nominal",
    "ipi-nominal",
    "pi-large-setpoint",
    "ipi-large-setpoint",
    "pi-power-loss",
    "ipi-power-loss",
];

pub fn pi_controller() -> ControllerSpec {
    ControllerSpec::Classic { kind: ClassicKind::Pi, gains: ClassicGains::pi(PI_KP, PI_KI) }
}

pub fn ipi_controller() -> ControllerSpec {
    ControllerSpec::Intelligent {
        kind: IntelligentKind::IPI,
        alpha: IPI_ALPHA,
        kp: IPI_KP,
        ki: IPI_KI,
        kd: 0.0,
        f_window: BUILTIN_F_WINDOW,
    }
}

fn base(name: &str, controller: ControllerSpec, setpoint: f64, duration: f64) -> Scenario {
    Scenario {
        name: name.to_string(),
        plant: PlantModel::nonlinear_cubic(),
        controller,
        schedule: vec![(0.0, setpoint)],
        reference_mode: ReferenceMode::StepBackwardDiff,
        fault: FaultModel::None,
        noise: NoiseModel::None,
        duration,
        h: SAMPLING_PERIOD,
        substeps: DEFAULT_SUBSTEPS,
        denoise_window: DEFAULT_DENOISE_WINDOW,
        metrics_window: None,
    }
}

fn power_loss(name: &str, controller: ControllerSpec) -> Scenario {
    Scenario {
        fault: FaultModel::PowerLoss { onset: FAULT_ONSET, decay: FAULT_DECAY },
        metrics_window: Some((FAULT_ONSET, FAULT_DURATION)),
        ..base(name, controller, NOMINAL_SETPOINT, FAULT_DURATION)
    }
}

pub fn builtin(name: &str) -> Option<Scenario> {
    Some(match name {
        "open-loop" => base(name, ControllerSpec::OpenLoop, 1.0, NOMINAL_DURATION),
        "pi-nominal" => base(name, pi_controller(), NOMINAL_SETPOINT, NOMINAL_DURATION),
        "ipi-nominal" => base(name, ipi_controller(), NOMINAL_SETPOINT, NOMINAL_DURATION),
        "pi-large-setpoint" => base(name, pi_controller(), LARGE_SETPOINT, NOMINAL_DURATION),
        "ipi-large-setpoint" => base(name, ipi_controller(), LARGE_SETPOINT, NOMINAL_DURATION),
        "pi-power-loss" => power_loss(name, pi_controller()),
        "ipi-power-loss" => power_loss(name, ipi_controller()),
        _ => return None,
    })
}
