//! Gain correspondence between sampled intelligent and classic controllers,
//! and a verifier that runs both recursions side by side.
//!
//! | intelligent | classic | kp          | ki          | kii         | kd          |
//! |-------------|---------|-------------|-------------|-------------|-------------|
//! | i-P         | PI      | -1/(αh)     | K_P/(αh)    |             |             |
//! | i-PD        | PID     | K_D/(αh)    | K_P/(αh)    |             | -1/(αh)     |
//! | i-PI        | PII²    | -1/(αh)     | K_P/(αh)    | K_I/(αh)    |             |
//! | i-PID       | PII²D   | K_D/(αh)    | K_P/(αh)    | K_I/(αh)    | -1/(αh)     |
//!
//! The `-1/(αh)` entry always multiplies the order-`nu` difference of `e`.

use crate::classic::{ClassicGains, ClassicKind, ClassicState};
use crate::error::{check_step, domain, Result};
use crate::intelligent::{step_intelligent, IntelligentConfig, IntelligentKind, IntelligentState};
use crate::signals::{ReferenceSample, TimeSeries};

/// Absolute-plus-relative slack for comparing the two recursions.
pub const EQUIVALENCE_TOLERANCE: f64 = 1e-9;

pub fn classic_counterpart(kind: IntelligentKind) -> ClassicKind {
    match kind {
        IntelligentKind::IP => ClassicKind::Pi,
        IntelligentKind::IPD => ClassicKind::Pid,
        IntelligentKind::IPI => ClassicKind::Pii2,
        IntelligentKind::IPID => ClassicKind::Pii2d,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainCorrespondence {
    pub intelligent_kind: IntelligentKind,
    pub classic_kind: ClassicKind,
    pub mapped: ClassicGains,
}

/// Intelligent gains recovered from a classic column, with `alpha h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoveredGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    pub alpha_h: f64,
}

impl GainCorrespondence {
    /// The gain sitting in the `-1/(αh)` slot.
    pub fn difference_slot_gain(&self) -> f64 {
        match self.intelligent_kind.nu() {
            1 => self.mapped.kp,
            _ => self.mapped.kd,
        }
    }

    /// Table entries for this column as `(slot, value)`, in table order.
    pub fn entries(&self) -> Vec<(&'static str, f64)> {
        let g = &self.mapped;
        self.classic_kind
            .gain_slots()
            .iter()
            .map(|&slot| {
                let v = match slot {
                    "kp" => g.kp,
                    "ki" => g.ki,
                    "kii" => g.kii,
                    _ => g.kd,
                };
                (slot, v)
            })
            .collect()
    }

    /// `classic=<kind>` followed by `slot=value` lines.
    pub fn key_value_lines(&self) -> Vec<String> {
        let mut lines = vec![format!("classic={}", self.classic_kind.name())];
        lines.extend(self.entries().into_iter().map(|(slot, v)| format!("{slot}={v}")));
        lines
    }

    pub fn invert(&self) -> RecoveredGains {
        let alpha_h = -1.0 / self.difference_slot_gain();
        let g = &self.mapped;
        let kd = if self.intelligent_kind.nu() == 2 { g.kp * alpha_h } else { 0.0 };
        RecoveredGains { kp: g.ki * alpha_h, ki: g.kii * alpha_h, kd, alpha_h }
    }
}

pub fn map_gains(kind: IntelligentKind, cfg: &IntelligentConfig, h: f64) -> Result<GainCorrespondence> {
    check_step(h)?;
    let alpha = cfg.alpha;
    if alpha == 0.0 || !alpha.is_finite() {
        return domain(format!("alpha must be finite and non-zero, got {alpha}"));
    }
    if ![cfg.kp, cfg.ki, cfg.kd].iter().all(|g| g.is_finite()) {
        return domain("intelligent gains must be finite");
    }
    let ah = alpha * h;
    let neg = -1.0 / ah;
    let ki = cfg.kp / ah;
    let mapped = match kind {
        IntelligentKind::IP => ClassicGains::pi(neg, ki),
        IntelligentKind::IPD => ClassicGains::pid(cfg.kd / ah, ki, neg),
        IntelligentKind::IPI => ClassicGains { kp: neg, ki, kii: cfg.ki / ah, kd: 0.0 },
        IntelligentKind::IPID => ClassicGains::pii2d(cfg.kd / ah, ki, cfg.ki / ah, neg),
    };
    Ok(GainCorrespondence { intelligent_kind: kind, classic_kind: classic_counterpart(kind), mapped })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquivalenceReport {
    pub max_abs_diff: f64,
    pub max_abs_u: f64,
    pub samples: usize,
}

impl EquivalenceReport {
    pub fn tolerance(&self) -> f64 {
        EQUIVALENCE_TOLERANCE * (1.0 + self.max_abs_u)
    }

    pub fn passes(&self) -> bool {
        self.max_abs_diff <= self.tolerance()
    }
}

/// Feeds `e_seq` to the intelligent controller (as `y = e` against a zero
/// reference, so `F` is genuinely estimated) and to its classic counterpart
/// with mapped gains. Both start from rest.
pub fn verify_equivalence(
    kind: IntelligentKind,
    cfg: &IntelligentConfig,
    h: f64,
    e_seq: &TimeSeries,
) -> Result<EquivalenceReport> {
    let zero = vec![0.0; e_seq.len()];
    verify_equivalence_with_reference(kind, cfg, h, e_seq, &zero)
}

/// As [`verify_equivalence`] but around a non-trivial reference `y_star`
/// whose derivatives are taken by backward difference (from `y*(-h) = 0`).
/// The output fed to the intelligent controller is `y = y* + e`.
pub fn verify_equivalence_with_reference(
    kind: IntelligentKind,
    cfg: &IntelligentConfig,
    h: f64,
    e_seq: &TimeSeries,
    y_star: &[f64],
) -> Result<EquivalenceReport> {
    if e_seq.is_empty() {
        return domain("error sequence is empty");
    }
    if y_star.len() != e_seq.len() {
        return domain("reference and error sequences differ in length");
    }
    if (e_seq.h() - h).abs() > 1e-12 * h.abs().max(1.0) {
        return domain(format!("error sequence step {} differs from h = {h}", e_seq.h()));
    }
    let corr = map_gains(kind, cfg, h)?;
    let icfg = IntelligentConfig::for_kind(kind, cfg.alpha, cfg.kp, cfg.ki, cfg.kd)?;

    let mut cstate = ClassicState::default();
    let mut istate = IntelligentState::new(&icfg);
    let (mut r1, mut r2) = (0.0, 0.0);
    let mut report = EquivalenceReport { max_abs_diff: 0.0, max_abs_u: 0.0, samples: e_seq.len() };

    for (&e, &r) in e_seq.values().iter().zip(y_star) {
        let reference = ReferenceSample {
            y_star: r,
            d1: (r - r1) / h,
            d2: (r - 2.0 * r1 + r2) / (h * h),
        };
        r2 = r1;
        r1 = r;

        let (u_classic, next_c) = corr.classic_kind.step(&cstate, e, &corr.mapped, h);
        let (u_intel, next_i, _) = step_intelligent(&istate, r + e, reference, &icfg, h)?;
        cstate = next_c;
        istate = next_i;

        report.max_abs_diff = report.max_abs_diff.max((u_classic - u_intel).abs());
        report.max_abs_u = report.max_abs_u.max(u_classic.abs()).max(u_intel.abs());
    }
    Ok(report)
}
