//! Velocity-form sampled classic controllers: PI, PID, PII² and PII²D.
//!
//! Every recursion works on the error `e` it is handed, with no saturation
//! or anti-windup, so the raw sampled forms stay comparable with their
//! intelligent counterparts.

use std::fmt;
use std::str::FromStr;

use crate::error::{check_step, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ClassicGains {
    pub kp: f64,
    pub ki: f64,
    pub kii: f64,
    pub kd: f64,
}

impl ClassicGains {
    pub fn pi(kp: f64, ki: f64) -> Self {
        Self { kp, ki, ..Self::default() }
    }

    pub fn pid(kp: f64, ki: f64, kd: f64) -> Self {
        Self { kp, ki, kd, ..Self::default() }
    }

    pub fn pii2d(kp: f64, ki: f64, kii: f64, kd: f64) -> Self {
        Self { kp, ki, kii, kd }
    }

    pub fn is_finite(&self) -> bool {
        [self.kp, self.ki, self.kii, self.kd].iter().all(|g| g.is_finite())
    }

    pub fn negated(&self) -> Self {
        Self { kp: -self.kp, ki: -self.ki, kii: -self.kii, kd: -self.kd }
    }
}

/// `u(t-h)`, `e(t-h)`, `e(t-2h)` and the running Riemann sum of `e`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ClassicState {
    pub u_prev: f64,
    pub e_prev: f64,
    pub e_prev2: f64,
    pub i_prev: f64,
}

impl ClassicState {
    fn advance(&self, u: f64, e: f64, i: f64) -> Self {
        Self { u_prev: u, e_prev: e, e_prev2: self.e_prev, i_prev: i }
    }
}

/// `u(t) = u(t-h) + kp (e(t) - e(t-h)) + ki h e(t)`.
pub fn step_pi(state: &ClassicState, e: f64, gains: &ClassicGains, h: f64) -> (f64, ClassicState) {
    let u = state.u_prev + gains.kp * (e - state.e_prev) + gains.ki * h * e;
    (u, state.advance(u, e, state.i_prev + h * e))
}

/// `u(t) = u(t-h) + kp h e' + ki h e + kd h e''` with backward differences.
pub fn step_pid(state: &ClassicState, e: f64, gains: &ClassicGains, h: f64) -> (f64, ClassicState) {
    let u = state.u_prev
        + gains.kp * (e - state.e_prev)
        + gains.ki * h * e
        + gains.kd * (e - 2.0 * state.e_prev + state.e_prev2) / h;
    (u, state.advance(u, e, state.i_prev + h * e))
}

/// PID plus `kii h I(t)`, where `I(t) = I(t-h) + h e(t)`.
pub fn step_pii2d(state: &ClassicState, e: f64, gains: &ClassicGains, h: f64) -> (f64, ClassicState) {
    let i = state.i_prev + h * e;
    let u = state.u_prev
        + gains.kp * (e - state.e_prev)
        + gains.ki * h * e
        + gains.kii * h * i
        + gains.kd * (e - 2.0 * state.e_prev + state.e_prev2) / h;
    (u, state.advance(u, e, i))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClassicKind {
    Pi,
    Pid,
    Pii2,
    Pii2d,
}

impl ClassicKind {
    pub const ALL: [ClassicKind; 4] = [Self::Pi, Self::Pid, Self::Pii2, Self::Pii2d];

    pub fn name(self) -> &'static str {
        match self {
            Self::Pi => "PI",
            Self::Pid => "PID",
            Self::Pii2 => "PII2",
            Self::Pii2d => "PII2D",
        }
    }

    /// The gain slots this controller uses, in table order.
    pub fn gain_slots(self) -> &'static [&'static str] {
        match self {
            Self::Pi => &["kp", "ki"],
            Self::Pid => &["kp", "ki", "kd"],
            Self::Pii2 => &["kp", "ki", "kii"],
            Self::Pii2d => &["kp", "ki", "kii", "kd"],
        }
    }

    pub fn step(self, state: &ClassicState, e: f64, gains: &ClassicGains, h: f64) -> (f64, ClassicState) {
        match self {
            Self::Pi => step_pi(state, e, gains, h),
            Self::Pid => step_pid(state, e, gains, h),
            Self::Pii2 | Self::Pii2d => step_pii2d(state, e, gains, h),
        }
    }
}

impl fmt::Display for ClassicKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClassicKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pi" => Ok(Self::Pi),
            "pid" => Ok(Self::Pid),
            "pii2" | "pii²" => Ok(Self::Pii2),
            "pii2d" | "pii²d" => Ok(Self::Pii2d),
            _ => Err(Error::Domain(format!("unknown classic controller kind '{s}'"))),
        }
    }
}

/// A classic controller bundled with its gains, period and state.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicController {
    kind: ClassicKind,
    gains: ClassicGains,
    h: f64,
    state: ClassicState,
}

impl ClassicController {
    pub fn new(kind: ClassicKind, gains: ClassicGains, h: f64) -> Result<Self> {
        check_step(h)?;
        if !gains.is_finite() {
            return Err(Error::Domain("classic gains must be finite".into()));
        }
        Ok(Self { kind, gains, h, state: ClassicState::default() })
    }

    /// Starts from a non-zero control, e.g. to resume from an operating point.
    pub fn with_initial_control(mut self, u0: f64) -> Self {
        self.state.u_prev = u0;
        self
    }

    pub fn step(&mut self, e: f64) -> f64 {
        let (u, next) = self.kind.step(&self.state, e, &self.gains, self.h);
        self.state = next;
        u
    }

    pub fn kind(&self) -> ClassicKind {
        self.kind
    }

    pub fn gains(&self) -> &ClassicGains {
        &self.gains
    }

    pub fn state(&self) -> &ClassicState {
        &self.state
    }
}
