//! Intelligent (model-free) controllers i-P, i-PI, i-PD and i-PID.
//!
//! The plant is replaced by the ultra-local model `y^(nu) = F + alpha u`.
//! Each sample, `F` is estimated from a finite difference of the measured
//! output and the previously applied control, then cancelled:
//!
//! ```text
//! u = (-F + y*^(nu) + K_P e + K_I ∫e + K_D e') / alpha,   e = y - y*
//! ```
//!
//! With this sign of `e`, stabilizing gains are negative. The scenario
//! layer accepts the usual positive tracking gains and flips them.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use crate::error::{check_step, domain, Error, Result};
use crate::signals::ReferenceSample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IntelligentKind {
    IP,
    IPD,
    IPI,
    IPID,
}

impl IntelligentKind {
    pub const ALL: [IntelligentKind; 4] = [Self::IP, Self::IPD, Self::IPI, Self::IPID];

    pub fn name(self) -> &'static str {
        match self {
            Self::IP => "i-P",
            Self::IPD => "i-PD",
            Self::IPI => "i-PI",
            Self::IPID => "i-PID",
        }
    }

    /// Derivation order of the ultra-local model this law is written for.
    pub fn nu(self) -> usize {
        match self {
            Self::IP | Self::IPI => 1,
            Self::IPD | Self::IPID => 2,
        }
    }

    pub fn has_integral(self) -> bool {
        matches!(self, Self::IPI | Self::IPID)
    }

    pub fn has_derivative(self) -> bool {
        matches!(self, Self::IPD | Self::IPID)
    }
}

impl fmt::Display for IntelligentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for IntelligentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "i-p" | "ip" => Ok(Self::IP),
            "i-pd" | "ipd" => Ok(Self::IPD),
            "i-pi" | "ipi" => Ok(Self::IPI),
            "i-pid" | "ipid" => Ok(Self::IPID),
            _ => Err(Error::Domain(format!("unknown intelligent controller kind '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntelligentConfig {
    pub nu: usize,
    pub alpha: f64,
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    /// Number of one-sample `F` estimates averaged per step. `1` is the
    /// plain backward-difference estimate.
    pub f_window: usize,
}

impl IntelligentConfig {
    pub fn new(nu: usize, alpha: f64, kp: f64, ki: f64, kd: f64) -> Result<Self> {
        let cfg = Self { nu, alpha, kp, ki, kd, f_window: 1 };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Configuration for `kind`, zeroing the gains that law does not use.
    pub fn for_kind(kind: IntelligentKind, alpha: f64, kp: f64, ki: f64, kd: f64) -> Result<Self> {
        let ki = if kind.has_integral() { ki } else { 0.0 };
        let kd = if kind.has_derivative() { kd } else { 0.0 };
        Self::new(kind.nu(), alpha, kp, ki, kd)
    }

    pub fn with_f_window(mut self, f_window: usize) -> Result<Self> {
        self.f_window = f_window;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=2).contains(&self.nu) {
            return domain(format!("derivation order must be 1 or 2, got {}", self.nu));
        }
        if self.alpha == 0.0 || !self.alpha.is_finite() {
            return domain(format!("alpha must be finite and non-zero, got {}", self.alpha));
        }
        if ![self.kp, self.ki, self.kd].iter().all(|g| g.is_finite()) {
            return domain("intelligent gains must be finite");
        }
        if self.nu == 1 && self.kd != 0.0 {
            return domain("K_D is only meaningful for nu = 2");
        }
        if self.f_window == 0 {
            return domain("F estimation window must be at least 1 sample");
        }
        Ok(())
    }

    /// Output samples the estimator needs: `y(t) .. y(t - (nu + N - 1) h)`.
    pub fn y_history_len(&self) -> usize {
        self.nu + self.f_window
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FEstimate {
    pub value: f64,
}

/// Controller memory. Histories are newest first: `y_hist[0] = y(t)` after
/// a step, `u_hist[0] = u(t - h)` before it.
#[derive(Debug, Clone, PartialEq)]
pub struct IntelligentState {
    pub u_hist: VecDeque<f64>,
    pub y_hist: VecDeque<f64>,
    pub i_prev: f64,
    pub e_prev: f64,
}

impl IntelligentState {
    pub fn new(cfg: &IntelligentConfig) -> Self {
        Self {
            u_hist: std::iter::repeat_n(0.0, cfg.f_window).collect(),
            y_hist: std::iter::repeat_n(0.0, cfg.y_history_len()).collect(),
            i_prev: 0.0,
            e_prev: 0.0,
        }
    }

    pub fn u_prev(&self) -> f64 {
        self.u_hist.front().copied().unwrap_or(0.0)
    }
}

/// `nu = 1`: `F = (y(t) - y(t-h)) / h - alpha u(t-h)`;
/// `nu = 2`: `F = (y(t) - 2 y(t-h) + y(t-2h)) / h^2 - alpha u(t-h)`.
///
/// `y_hist` is newest first and must hold at least `nu + 1` samples.
pub fn estimate_f(y_hist: &[f64], u_prev: f64, cfg: &IntelligentConfig, h: f64) -> Result<FEstimate> {
    check_step(h)?;
    cfg.validate()?;
    if y_hist.len() < cfg.nu + 1 {
        return Err(Error::Length { needed: cfg.nu + 1, got: y_hist.len() });
    }
    Ok(FEstimate { value: output_derivative(y_hist, cfg.nu, h) - cfg.alpha * u_prev })
}

fn output_derivative(y: &[f64], nu: usize, h: f64) -> f64 {
    if nu == 1 {
        (y[0] - y[1]) / h
    } else {
        (y[0] - 2.0 * y[1] + y[2]) / (h * h)
    }
}

/// Mean of the `f_window` most recent one-sample estimates.
pub fn estimate_f_windowed(
    y_hist: &[f64],
    u_hist: &[f64],
    cfg: &IntelligentConfig,
    h: f64,
) -> Result<FEstimate> {
    if cfg.f_window == 1 {
        let u_prev = u_hist.first().copied().unwrap_or(0.0);
        return estimate_f(y_hist, u_prev, cfg, h);
    }
    check_step(h)?;
    cfg.validate()?;
    let n = cfg.f_window;
    if y_hist.len() < cfg.y_history_len() {
        return Err(Error::Length { needed: cfg.y_history_len(), got: y_hist.len() });
    }
    if u_hist.len() < n {
        return Err(Error::Length { needed: n, got: u_hist.len() });
    }
    let sum: f64 = (0..n)
        .map(|j| output_derivative(&y_hist[j..], cfg.nu, h) - cfg.alpha * u_hist[j])
        .sum();
    Ok(FEstimate { value: sum / n as f64 })
}

/// One sample of the intelligent law. Returns the commanded control, the
/// next state and the `F` estimate used.
///
/// `state.u_hist` records commanded controls: an actuator fault downstream
/// is only visible to the controller through `y`.
pub fn step_intelligent(
    state: &IntelligentState,
    y: f64,
    reference: ReferenceSample,
    cfg: &IntelligentConfig,
    h: f64,
) -> Result<(f64, IntelligentState, FEstimate)> {
    cfg.validate()?;
    check_step(h)?;
    let mut next = state.clone();
    next.y_hist.push_front(y);
    next.y_hist.truncate(cfg.y_history_len());
    if next.y_hist.len() < cfg.y_history_len() || next.u_hist.len() < cfg.f_window {
        return Err(Error::Length { needed: cfg.y_history_len(), got: next.y_hist.len() });
    }

    let e = y - reference.y_star;
    let de = (e - state.e_prev) / h;
    let integral = state.i_prev + h * e;
    let f = estimate_f_windowed(next.y_hist.make_contiguous(), next.u_hist.make_contiguous(), cfg, h)?;
    let ref_derivative = if cfg.nu == 1 { reference.d1 } else { reference.d2 };

    let u = (-f.value + ref_derivative + cfg.kp * e + cfg.ki * integral + cfg.kd * de) / cfg.alpha;

    next.u_hist.push_front(u);
    next.u_hist.truncate(cfg.f_window);
    next.i_prev = integral;
    next.e_prev = e;
    Ok((u, next, f))
}

/// An intelligent controller bundled with its configuration and state.
#[derive(Debug, Clone, PartialEq)]
pub struct IntelligentController {
    cfg: IntelligentConfig,
    h: f64,
    state: IntelligentState,
}

impl IntelligentController {
    pub fn new(cfg: IntelligentConfig, h: f64) -> Result<Self> {
        cfg.validate()?;
        check_step(h)?;
        Ok(Self { cfg, h, state: IntelligentState::new(&cfg) })
    }

    pub fn step(&mut self, y: f64, reference: ReferenceSample) -> Result<(f64, FEstimate)> {
        let (u, next, f) = step_intelligent(&self.state, y, reference, &self.cfg, self.h)?;
        self.state = next;
        Ok((u, f))
    }

    pub fn config(&self) -> &IntelligentConfig {
        &self.cfg
    }

    pub fn state(&self) -> &IntelligentState {
        &self.state
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn flat(y_star: f64) -> ReferenceSample {
        ReferenceSample { y_star, d1: 0.0, d2: 0.0 }
    }

    #[test]
    fn config_invariants() {
        assert!(IntelligentConfig::new(1, 0.0, 1.0, 0.0, 0.0).is_err());
        assert!(IntelligentConfig::new(3, 1.0, 1.0, 0.0, 0.0).is_err());
        assert!(IntelligentConfig::new(1, 1.0, 1.0, 0.0, 2.0).is_err());
        assert!(IntelligentConfig::new(2, 1.0, 1.0, 0.0, 2.0).is_ok());
        assert!(IntelligentConfig::new(1, 1.0, 1.0, 0.0, 0.0).unwrap().with_f_window(0).is_err());
        let c = IntelligentConfig::for_kind(IntelligentKind::IP, 1.0, 6.0, 9.0, 4.0).unwrap();
        assert_eq!((c.nu, c.ki, c.kd), (1, 0.0, 0.0));
    }

    #[test]
    fn estimate_examples() {
        let cfg = IntelligentConfig::new(1, 1.0, 0.0, 0.0, 0.0).unwrap();
        assert_eq!(estimate_f(&[0.0, 0.0], 0.0, &cfg, 0.01).unwrap().value, 0.0);
        let f = estimate_f(&[1.03, 1.0], 2.0, &cfg, 0.01).unwrap();
        assert_abs_diff_eq!(f.value, 1.0, epsilon = 1e-12);
        assert_eq!(estimate_f(&[1.0], 0.0, &cfg, 0.01), Err(Error::Length { needed: 2, got: 1 }));

        let cfg2 = IntelligentConfig::new(2, 2.0, 0.0, 0.0, 0.0).unwrap();
        let f = estimate_f(&[0.04, 0.01, 0.0], 0.5, &cfg2, 0.1).unwrap();
        assert_abs_diff_eq!(f.value, 2.0 - 1.0, epsilon = 1e-12);
        assert!(estimate_f(&[0.0, 0.0], 0.0, &cfg2, 0.1).is_err());
    }

    #[test]
    fn windowed_estimate_is_mean_of_one_step_estimates() {
        let cfg = IntelligentConfig::new(1, 0.5, 0.0, 0.0, 0.0).unwrap().with_f_window(3).unwrap();
        let one = IntelligentConfig::new(1, 0.5, 0.0, 0.0, 0.0).unwrap();
        let y = [0.9, 0.7, 0.6, 0.2];
        let u = [1.0, -2.0, 0.5];
        let h = 0.1;
        let want = (0..3).map(|j| estimate_f(&y[j..], u[j], &one, h).unwrap().value).sum::<f64>() / 3.0;
        assert_abs_diff_eq!(estimate_f_windowed(&y, &u, &cfg, h).unwrap().value, want, epsilon = 1e-12);
        // telescoped form
        let telescoped = (y[0] - y[3]) / (3.0 * h) - 0.5 * (u[0] + u[1] + u[2]) / 3.0;
        assert_abs_diff_eq!(want, telescoped, epsilon = 1e-12);
    }

    #[test]
    fn perfect_flat_tracking_holds_zero() {
        let cfg = IntelligentConfig::new(1, 2.0, -6.0, 0.0, 0.0).unwrap();
        let s = IntelligentState::new(&cfg);
        let (u, next, f) = step_intelligent(&s, 0.0, flat(0.0), &cfg, 0.01).unwrap();
        assert_eq!((u, f.value), (0.0, 0.0));
        assert_eq!(next.u_prev(), 0.0);
        // a ramp reference with zero error and zero F asks for y*' / alpha
        let r = ReferenceSample { y_star: 0.0, d1: 3.0, d2: 0.0 };
        let (u, _, _) = step_intelligent(&s, 0.0, r, &cfg, 0.01).unwrap();
        assert_abs_diff_eq!(u, 1.5, epsilon = 1e-12);
    }

    #[test]
    fn ip_expanded_form() {
        // u(t) = u(t-h) - (e(t) - e(t-h)) / (h alpha) + K_P e(t) / alpha
        let cfg = IntelligentConfig::new(1, 1.0, 6.0, 0.0, 0.0).unwrap();
        let h = 0.01;
        let mut s = IntelligentState::new(&cfg);
        s.y_hist = VecDeque::from(vec![0.1, 0.0]);
        s.u_hist = VecDeque::from(vec![2.0]);
        s.e_prev = 0.1;
        let (u, _, _) = step_intelligent(&s, 0.1, flat(0.0), &cfg, h).unwrap();
        assert_abs_diff_eq!(u, 2.6, epsilon = 1e-12);
    }

    #[test]
    fn ipid_without_integral_is_ipd() {
        let h = 0.02;
        let ipd = IntelligentConfig::new(2, 0.7, 3.0, 0.0, -1.5).unwrap();
        let ipid = IntelligentConfig { ki: 0.0, ..ipd };
        let mut a = IntelligentController::new(ipd, h).unwrap();
        let mut b = IntelligentController::new(ipid, h).unwrap();
        for k in 0..200 {
            let y = (k as f64 * 0.37).sin();
            let r = ReferenceSample { y_star: 0.3, d1: 0.0, d2: 0.0 };
            assert_eq!(a.step(y, r).unwrap(), b.step(y, r).unwrap());
        }
    }

    #[test]
    fn commanded_control_is_remembered() {
        let cfg = IntelligentConfig::new(1, 1.0, -2.0, 0.0, 0.0).unwrap();
        let mut c = IntelligentController::new(cfg, 0.01).unwrap();
        let (u, _) = c.step(0.0, flat(1.0)).unwrap();
        assert_eq!(c.state().u_prev(), u);
    }

    #[test]
    fn kind_parsing() {
        for k in IntelligentKind::ALL {
            assert_eq!(k.name().parse::<IntelligentKind>().unwrap(), k);
        }
        assert_eq!("IPID".parse::<IntelligentKind>().unwrap(), IntelligentKind::IPID);
        assert!("i-D".parse::<IntelligentKind>().is_err());
    }
}
