//! Two-point (28 % / 40 %) Broïda identification of a first-order plus
//! dead-time model, and the matching PI rule.

use crate::classic::ClassicGains;
use crate::error::{domain, Error, Result};
use crate::signals::TimeSeries;

/// Default lower bound on the dead time used by [`tune_pi_broida_with_floor`].
pub const DEFAULT_DEAD_TIME_FLOOR: f64 = 0.001;

/// `k e^{-tau s} / (1 + T s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FopdtFit {
    pub gain: f64,
    pub time_constant: f64,
    pub delay: f64,
}

/// Fraction of the tail used for the settling check.
const TAIL_FRACTION: f64 = 0.05;
/// Allowed tail variation relative to the span.
const TAIL_TOLERANCE: f64 = 1e-3;

/// Identifies an FOPDT model from a step response that starts at
/// `response.t0()` (the step instant).
///
/// `k = (y_final - y_initial) / u_step`, `T = 5.5 (t2 - t1)` and
/// `tau = max(0, 2.8 t1 - 1.8 t2)`, where `t1`, `t2` are the first
/// crossings of 28 % and 40 % of the span (linearly interpolated).
pub fn identify_broida(response: &TimeSeries, u_step: f64, y_initial: f64) -> Result<FopdtFit> {
    if u_step == 0.0 || !u_step.is_finite() {
        return domain(format!("step amplitude must be finite and non-zero, got {u_step}"));
    }
    if response.len() < 3 {
        return Err(Error::Length { needed: 3, got: response.len() });
    }
    let y = response.values();
    let y_final = *y.last().unwrap_or(&y_initial);
    let span = y_final - y_initial;
    if span == 0.0 {
        return Err(Error::DegenerateResponse);
    }

    let tail_len = ((y.len() as f64 * TAIL_FRACTION).ceil() as usize).max(2);
    let tail = &y[y.len() - tail_len..];
    let (lo, hi) = tail.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if hi - lo >= TAIL_TOLERANCE * span.abs() {
        return Err(Error::NotSettled(format!(
            "last {tail_len} samples vary by {:.3e}, more than {TAIL_TOLERANCE} of the span {:.3e}",
            hi - lo,
            span.abs()
        )));
    }

    let t1 = first_crossing(response, y_initial + 0.28 * span, span > 0.0)
        .ok_or_else(|| Error::NotSettled("response never reaches 28% of its span".into()))?;
    let t2 = first_crossing(response, y_initial + 0.40 * span, span > 0.0)
        .ok_or_else(|| Error::NotSettled("response never reaches 40% of its span".into()))?;

    Ok(FopdtFit {
        gain: span / u_step,
        time_constant: 5.5 * (t2 - t1),
        delay: (2.8 * t1 - 1.8 * t2).max(0.0),
    })
}

/// Time since `t0` at which the series first reaches `level`.
fn first_crossing(s: &TimeSeries, level: f64, rising: bool) -> Option<f64> {
    let y = s.values();
    let reached = |v: f64| if rising { v >= level } else { v <= level };
    let k = y.iter().position(|&v| reached(v))?;
    if k == 0 {
        return Some(0.0);
    }
    let (a, b) = (y[k - 1], y[k]);
    let frac = if b == a { 0.0 } else { (level - a) / (b - a) };
    Some((k as f64 - 1.0 + frac) * s.h())
}

/// Broïda PI rule: `kp = 0.8 T / (k tau)`, `Ti = T`, `ki = kp / Ti`.
pub fn tune_pi_broida(fit: &FopdtFit) -> Result<ClassicGains> {
    if !(fit.time_constant > 0.0) || !fit.gain.is_finite() || fit.gain == 0.0 {
        return domain("fit needs a positive time constant and a non-zero gain");
    }
    if !(fit.delay > 0.0) {
        return Err(Error::InfiniteGain { floor: DEFAULT_DEAD_TIME_FLOOR });
    }
    let kp = 0.8 * fit.time_constant / (fit.gain * fit.delay);
    Ok(ClassicGains::pi(kp, kp / fit.time_constant))
}

/// [`tune_pi_broida`] with the dead time raised to at least `floor`.
pub fn tune_pi_broida_with_floor(fit: &FopdtFit, floor: f64) -> Result<ClassicGains> {
    if !(floor > 0.0) {
        return domain("dead-time floor must be positive");
    }
    tune_pi_broida(&FopdtFit { delay: fit.delay.max(floor), ..*fit })
}
