//! Continuous-time plants integrated with fixed-step RK4 under zero-order
//! hold, plus actuator-fault and measurement-noise models.

use std::collections::VecDeque;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{check_step, domain, Error, Result};
use crate::signals::TimeSeries;

/// Default number of RK4 sub-steps per controller sample.
pub const DEFAULT_SUBSTEPS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PlantKind {
    /// `y' + y^3 = 2u`.
    NonlinearCubic,
    /// `k e^{-tau s} / (1 + T s)`.
    Fopdt { gain: f64, time_constant: f64, delay: f64 },
    /// `y^(order) = F(t) + alpha u` with `F(t) = f_true + f_drift t`.
    PureIntegrator { order: usize, f_true: f64, alpha_true: f64, f_drift: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantModel {
    pub kind: PlantKind,
    pub y0: f64,
}

impl PlantModel {
    pub fn nonlinear_cubic() -> Self {
        Self { kind: PlantKind::NonlinearCubic, y0: 0.0 }
    }

    pub fn fopdt(gain: f64, time_constant: f64, delay: f64) -> Self {
        Self { kind: PlantKind::Fopdt { gain, time_constant, delay }, y0: 0.0 }
    }

    pub fn pure_integrator(order: usize, f_true: f64, alpha_true: f64) -> Self {
        Self {
            kind: PlantKind::PureIntegrator { order, f_true, alpha_true, f_drift: 0.0 },
            y0: 0.0,
        }
    }

    pub fn with_y0(mut self, y0: f64) -> Self {
        self.y0 = y0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.y0.is_finite() {
            return domain("initial output must be finite");
        }
        match self.kind {
            PlantKind::NonlinearCubic => Ok(()),
            PlantKind::Fopdt { gain, time_constant, delay } => {
                if !gain.is_finite() || !(time_constant > 0.0 && time_constant.is_finite()) {
                    return domain("fopdt needs a finite gain and a positive time constant");
                }
                if !(delay >= 0.0 && delay.is_finite()) {
                    return domain("fopdt delay must be non-negative");
                }
                Ok(())
            }
            PlantKind::PureIntegrator { order, f_true, alpha_true, f_drift } => {
                if !(1..=2).contains(&order) {
                    return domain(format!("integrator order must be 1 or 2, got {order}"));
                }
                if ![f_true, alpha_true, f_drift].iter().all(|v| v.is_finite()) {
                    return domain("integrator parameters must be finite");
                }
                Ok(())
            }
        }
    }

    /// Dimension of the ODE state.
    pub fn state_dim(&self) -> usize {
        match self.kind {
            PlantKind::PureIntegrator { order, .. } => order,
            _ => 1,
        }
    }

    pub fn initial_state(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.state_dim()];
        x[0] = self.y0;
        x
    }

    fn derivative(&self, x: &[f64], u: f64, t: f64, dx: &mut [f64]) {
        match self.kind {
            PlantKind::NonlinearCubic => dx[0] = -x[0] * x[0] * x[0] + 2.0 * u,
            PlantKind::Fopdt { gain, time_constant, .. } => dx[0] = (gain * u - x[0]) / time_constant,
            PlantKind::PureIntegrator { order, f_true, alpha_true, f_drift } => {
                let accel = f_true + f_drift * t + alpha_true * u;
                if order == 1 {
                    dx[0] = accel;
                } else {
                    dx[0] = x[1];
                    dx[1] = accel;
                }
            }
        }
    }
}

/// One classical fourth-order Runge-Kutta step from time `t` with `u` held.
///
/// For the FOPDT plant `u_held` is the already-delayed input.
pub fn rk4_step(model: &PlantModel, state: &[f64], u_held: f64, t: f64, dt: f64) -> Result<Vec<f64>> {
    check_step(dt)?;
    if state.len() != model.state_dim() {
        return domain(format!(
            "state has dimension {}, plant expects {}",
            state.len(),
            model.state_dim()
        ));
    }
    if state.iter().any(|v| !v.is_finite()) || !u_held.is_finite() {
        return Err(Error::Diverged { time: t });
    }
    let n = state.len();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut tmp = vec![0.0; n];

    model.derivative(state, u_held, t, &mut k1);
    for i in 0..n {
        tmp[i] = state[i] + 0.5 * dt * k1[i];
    }
    model.derivative(&tmp, u_held, t + 0.5 * dt, &mut k2);
    for i in 0..n {
        tmp[i] = state[i] + 0.5 * dt * k2[i];
    }
    model.derivative(&tmp, u_held, t + 0.5 * dt, &mut k3);
    for i in 0..n {
        tmp[i] = state[i] + dt * k3[i];
    }
    model.derivative(&tmp, u_held, t + dt, &mut k4);

    let next: Vec<f64> = (0..n)
        .map(|i| state[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect();
    if next.iter().any(|v| !v.is_finite()) {
        return Err(Error::Diverged { time: t + dt });
    }
    Ok(next)
}

/// A plant being integrated: ODE state, input delay line and clock.
#[derive(Debug, Clone)]
pub struct PlantSim {
    model: PlantModel,
    state: Vec<f64>,
    delay_line: VecDeque<f64>,
    substeps: usize,
    t: f64,
}

impl PlantSim {
    /// `h` is the controller period; each period is split into `substeps`
    /// RK4 steps. The FOPDT delay becomes a ring buffer of
    /// `ceil(tau / dt)` sub-steps, pre-filled with zero input.
    pub fn new(model: PlantModel, h: f64, substeps: usize) -> Result<Self> {
        model.validate()?;
        check_step(h)?;
        if substeps == 0 {
            return domain("substeps must be at least 1");
        }
        let dt = h / substeps as f64;
        let delay_len = match model.kind {
            PlantKind::Fopdt { delay, .. } => (delay / dt - 1e-9).ceil().max(0.0) as usize,
            _ => 0,
        };
        Ok(Self {
            model,
            state: model.initial_state(),
            delay_line: std::iter::repeat_n(0.0, delay_len).collect(),
            substeps,
            t: 0.0,
        })
    }

    pub fn output(&self) -> f64 {
        self.state[0]
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn model(&self) -> &PlantModel {
        &self.model
    }

    /// Holds `u` over one controller period `h`.
    pub fn advance(&mut self, u: f64, h: f64) -> Result<()> {
        let dt = h / self.substeps as f64;
        let t_start = self.t;
        for i in 0..self.substeps {
            let t = t_start + i as f64 * dt;
            let u_eff = if self.delay_line.is_empty() {
                u
            } else {
                self.delay_line.push_back(u);
                self.delay_line.pop_front().unwrap_or(0.0)
            };
            self.state = rk4_step(&self.model, &self.state, u_eff, t, dt)?;
        }
        self.t = t_start + h;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum FaultModel {
    #[default]
    None,
    /// Applied input `decay^(t/h) u` for `t > onset`.
    PowerLoss { onset: f64, decay: f64 },
}

impl FaultModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            FaultModel::None => Ok(()),
            FaultModel::PowerLoss { onset, decay } => {
                if !onset.is_finite() {
                    return domain("fault onset must be finite");
                }
                if !(decay > 0.0 && decay <= 1.0) {
                    return domain(format!("power-loss decay must lie in (0, 1], got {decay}"));
                }
                Ok(())
            }
        }
    }

    pub fn apply(&self, u: f64, t: f64, h: f64) -> f64 {
        apply_fault(self, u, t, h)
    }

    pub fn onset(&self) -> Option<f64> {
        match *self {
            FaultModel::None => None,
            FaultModel::PowerLoss { onset, .. } => Some(onset),
        }
    }
}

pub fn apply_fault(fault: &FaultModel, u: f64, t: f64, h: f64) -> f64 {
    match *fault {
        FaultModel::PowerLoss { onset, decay } if t > onset => decay.powf(t / h) * u,
        _ => u,
    }
}

/// Default measurement-noise standard deviation when noise is enabled.
pub const DEFAULT_NOISE_STD: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum NoiseModel {
    #[default]
    None,
    Gaussian { std: f64, seed: u64 },
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseModel::Gaussian { std, .. } if !(std >= 0.0 && std.is_finite()) => {
                domain(format!("noise std must be non-negative, got {std}"))
            }
            _ => Ok(()),
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        match self {
            NoiseModel::Gaussian { std, .. } => NoiseModel::Gaussian { std, seed },
            other => other,
        }
    }

    /// A fresh sample stream. Two samplers from the same model produce the
    /// same stream.
    pub fn sampler(&self) -> Result<NoiseSampler> {
        self.validate()?;
        Ok(match *self {
            NoiseModel::None => NoiseSampler(None),
            NoiseModel::Gaussian { std, seed } => {
                let normal = Normal::new(0.0, std).map_err(|e| Error::Domain(e.to_string()))?;
                NoiseSampler(Some((ChaCha8Rng::seed_from_u64(seed), normal)))
            }
        })
    }
}

#[derive(Debug, Clone)]
pub struct NoiseSampler(Option<(ChaCha8Rng, Normal<f64>)>);

impl NoiseSampler {
    pub fn sample(&mut self) -> f64 {
        match &mut self.0 {
            None => 0.0,
            Some((rng, normal)) => normal.sample(rng),
        }
    }
}

/// Drives the plant with `input` (held between samples) and returns the
/// measured output on the same grid. Noise touches the measurement only.
pub fn simulate_open_loop(
    model: &PlantModel,
    input: &TimeSeries,
    substeps: usize,
    noise: &NoiseModel,
) -> Result<TimeSeries> {
    if input.is_empty() {
        return domain("input series is empty");
    }
    let h = input.h();
    let mut sim = PlantSim::new(*model, h, substeps)?;
    let mut noise = noise.sampler()?;
    let u = input.values();
    let mut out = Vec::with_capacity(u.len());
    for (k, &uk) in u.iter().enumerate() {
        out.push(sim.output() + noise.sample());
        if k + 1 < u.len() {
            sim.advance(uk, h).map_err(|e| match e {
                Error::Diverged { time } => Error::Diverged { time: input.t0() + time },
                other => other,
            })?;
        }
    }
    input.with_values(out)
}
