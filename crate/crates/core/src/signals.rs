//! Uniformly sampled signals, reference trajectories, finite differences and
//! a causal denoiser.

use std::io::{self, Write};

use crate::error::{check_step, domain, Error, Result};

/// A real-valued signal sampled every `h` seconds starting at `t0`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    h: f64,
    t0: f64,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(h: f64, t0: f64, values: Vec<f64>) -> Result<Self> {
        check_step(h)?;
        if !t0.is_finite() {
            return domain(format!("start time must be finite, got {t0}"));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return domain(format!("sample {k} is not finite"));
        }
        Ok(Self { h, t0, values })
    }

    /// Builds `n` samples from `f(k, t_k)`.
    pub fn from_fn(h: f64, t0: f64, n: usize, mut f: impl FnMut(usize, f64) -> f64) -> Result<Self> {
        let values = (0..n).map(|k| f(k, t0 + k as f64 * h)).collect();
        Self::new(h, t0, values)
    }

    /// Same grid, new values. Length must match.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.values.len() {
            return domain(format!(
                "length mismatch: expected {}, got {}",
                self.values.len(),
                values.len()
            ));
        }
        Self::new(self.h, self.t0, values)
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.h
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(|k| self.time(k))
    }

    pub fn last(&self) -> Option<f64> {
        self.values.last().copied()
    }

    /// Writes `time,value` rows with a header, at full double precision.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "time,value")?;
        for (t, v) in self.times().zip(&self.values) {
            writeln!(w, "{},{}", fmt_f64(t), fmt_f64(*v))?;
        }
        Ok(())
    }
}

/// Lossless text form of a double: 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Backward difference of order 1 or 2. The first `order` samples are
/// zero-filled so the output stays aligned with the input.
pub fn backward_difference(s: &TimeSeries, order: usize) -> Result<TimeSeries> {
    if !(1..=2).contains(&order) {
        return domain(format!("difference order must be 1 or 2, got {order}"));
    }
    if s.len() < order + 1 {
        return Err(Error::Length { needed: order + 1, got: s.len() });
    }
    let v = s.values();
    let h = s.h();
    let mut out = vec![0.0; v.len()];
    for k in order..v.len() {
        out[k] = match order {
            1 => (v[k] - v[k - 1]) / h,
            _ => (v[k] - 2.0 * v[k - 1] + v[k - 2]) / (h * h),
        };
    }
    s.with_values(out)
}

/// Crude Riemann sum `I(t) = I(t-h) + h e(t)` with `I(t0 - h) = 0`.
pub fn riemann_sum(s: &TimeSeries) -> TimeSeries {
    let h = s.h();
    let mut acc = 0.0;
    let values = s
        .values()
        .iter()
        .map(|e| {
            acc += h * e;
            acc
        })
        .collect();
    TimeSeries { h, t0: s.t0(), values }
}

/// Causal trailing mean over `min(k + 1, window)` samples.
pub fn moving_average(s: &TimeSeries, window: usize) -> Result<TimeSeries> {
    if window == 0 {
        return domain("moving-average window must be at least 1");
    }
    let v = s.values();
    let mut out = Vec::with_capacity(v.len());
    for k in 0..v.len() {
        let start = (k + 1).saturating_sub(window);
        let slice = &v[start..=k];
        out.push(slice.iter().sum::<f64>() / slice.len() as f64);
    }
    s.with_values(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum ReferenceMode {
    /// Piecewise-constant steps, derivatives by backward difference.
    #[default]
    StepBackwardDiff,
    /// Each step filtered by a critically damped unit-gain second-order
    /// filter `1 / (1 + time_constant s)^2`.
    SmoothSecondOrder { time_constant: f64 },
}


/// Output reference `y*` with its first and second derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceTrajectory {
    pub y_star: TimeSeries,
    pub d1_y_star: TimeSeries,
    pub d2_y_star: TimeSeries,
}

/// One sample of a reference trajectory.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ReferenceSample {
    pub y_star: f64,
    pub d1: f64,
    pub d2: f64,
}

impl ReferenceTrajectory {
    pub fn len(&self) -> usize {
        self.y_star.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y_star.is_empty()
    }

    pub fn sample(&self, k: usize) -> ReferenceSample {
        ReferenceSample {
            y_star: self.y_star.values()[k],
            d1: self.d1_y_star.values()[k],
            d2: self.d2_y_star.values()[k],
        }
    }
}

/// Value of a step schedule at time `t`; zero before the first entry.
pub fn schedule_value(schedule: &[(f64, f64)], t: f64, h: f64) -> f64 {
    let eps = 1e-9 * h;
    schedule
        .iter()
        .take_while(|(ts, _)| *ts <= t + eps)
        .last()
        .map_or(0.0, |(_, v)| *v)
}

pub(crate) fn check_schedule(schedule: &[(f64, f64)]) -> Result<()> {
    if schedule.is_empty() {
        return domain("reference schedule is empty");
    }
    if schedule.iter().any(|(t, v)| !t.is_finite() || !v.is_finite()) {
        return domain("reference schedule contains non-finite entries");
    }
    if schedule.windows(2).any(|w| w[1].0 < w[0].0) {
        return domain("reference schedule times must be non-decreasing");
    }
    Ok(())
}

/// Number of samples on `[0, horizon]` at step `h`, both ends included.
pub fn sample_count(h: f64, horizon: f64) -> usize {
    (horizon / h).round() as usize + 1
}

pub fn make_reference(
    schedule: &[(f64, f64)],
    h: f64,
    horizon: f64,
    mode: ReferenceMode,
) -> Result<ReferenceTrajectory> {
    check_step(h)?;
    check_schedule(schedule)?;
    if !(horizon > 0.0 && horizon.is_finite()) {
        return domain(format!("horizon must be positive, got {horizon}"));
    }
    let n = sample_count(h, horizon);
    let targets = TimeSeries::from_fn(h, 0.0, n, |_, t| schedule_value(schedule, t, h))?;

    match mode {
        ReferenceMode::StepBackwardDiff => {
            let d1 = if n >= 2 { backward_difference(&targets, 1)? } else { targets.with_values(vec![0.0; n])? };
            let d2 = if n >= 3 { backward_difference(&targets, 2)? } else { targets.with_values(vec![0.0; n])? };
            Ok(ReferenceTrajectory { y_star: targets, d1_y_star: d1, d2_y_star: d2 })
        }
        ReferenceMode::SmoothSecondOrder { time_constant } => {
            if !(time_constant > 0.0 && time_constant.is_finite()) {
                return domain(format!("filter time constant must be positive, got {time_constant}"));
            }
            smooth_reference(&targets, time_constant)
        }
    }
}

/// Exact propagation of `y'' = w^2 (r - y) - 2 w y'` with `r` held over
/// each sample interval.
fn smooth_reference(targets: &TimeSeries, time_constant: f64) -> Result<ReferenceTrajectory> {
    let w = 1.0 / time_constant;
    let h = targets.h();
    let decay = (-w * h).exp();
    let r = targets.values();
    let n = r.len();
    let (mut y, mut v) = (0.0, 0.0);
    let mut ys = Vec::with_capacity(n);
    let mut d1 = Vec::with_capacity(n);
    let mut d2 = Vec::with_capacity(n);
    for k in 0..n {
        ys.push(y);
        d1.push(v);
        d2.push(w * w * (r[k] - y) - 2.0 * w * v);
        // x = y - r obeys x'' + 2w x' + w^2 x = 0 over the interval
        let x0 = y - r[k];
        let c = v + w * x0;
        let x = (x0 + c * h) * decay;
        v = (v - w * h * c) * decay;
        y = r[k] + x;
    }
    Ok(ReferenceTrajectory {
        y_star: targets.with_values(ys)?,
        d1_y_star: targets.with_values(d1)?,
        d2_y_star: targets.with_values(d2)?,
    })
}
