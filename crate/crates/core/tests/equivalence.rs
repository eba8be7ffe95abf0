//! Sampled classic vs intelligent controllers: the correspondence table,
//! checked against an independent expanded-form oracle.

use ipid_core::classic::ClassicKind;
use ipid_core::equivalence::{
    classic_counterpart, map_gains, verify_equivalence, verify_equivalence_with_reference,
};
use ipid_core::intelligent::{IntelligentConfig, IntelligentKind};
use ipid_core::signals::TimeSeries;
use proptest::prelude::*;

/// Intelligent laws written out in `e` alone, with the `F` estimate already
/// substituted:
///
/// i-P:   u = u1 - (e - e1) / (h a) + K_P e / a
/// i-PI:  ... + K_I I / a
/// i-PD:  u = u1 - e'' / a + K_P e / a + K_D e' / a
/// i-PID: ... + K_I I / a
fn expanded_oracle(kind: IntelligentKind, a: f64, kp: f64, ki: f64, kd: f64, h: f64, e: &[f64]) -> Vec<f64> {
    let (mut u1, mut e1, mut e2, mut integral) = (0.0, 0.0, 0.0, 0.0);
    e.iter()
        .map(|&ek| {
            integral += h * ek;
            let de = (ek - e1) / h;
            let dde = (ek - 2.0 * e1 + e2) / (h * h);
            let mut u = u1 + kp * ek / a;
            if kind.nu() == 1 {
                u -= (ek - e1) / (h * a);
            } else {
                u += -dde / a + kd * de / a;
            }
            if kind.has_integral() {
                u += ki * integral / a;
            }
            e2 = e1;
            e1 = ek;
            u1 = u;
            u
        })
        .collect()
}

fn classic_run(kind: IntelligentKind, cfg: &IntelligentConfig, h: f64, e: &[f64]) -> Vec<f64> {
    let corr = map_gains(kind, cfg, h).unwrap();
    let mut state = Default::default();
    e.iter()
        .map(|&ek| {
            let (u, next) = corr.classic_kind.step(&state, ek, &corr.mapped, h);
            state = next;
            u
        })
        .collect()
}

fn cfg(alpha: f64, kp: f64, ki: f64, kd: f64) -> IntelligentConfig {
    IntelligentConfig { nu: 2, alpha, kp, ki, kd, f_window: 1 }
}

#[test]
fn pairing_follows_table_columns() {
    assert_eq!(classic_counterpart(IntelligentKind::IP), ClassicKind::Pi);
    assert_eq!(classic_counterpart(IntelligentKind::IPD), ClassicKind::Pid);
    assert_eq!(classic_counterpart(IntelligentKind::IPI), ClassicKind::Pii2);
    assert_eq!(classic_counterpart(IntelligentKind::IPID), ClassicKind::Pii2d);
}

#[test]
fn expanded_oracle_matches_worked_example() {
    // u_prev = 2, e(t-h) = e(t) = 0.1, K_P = 6, alpha = 1 -> 2.6
    let u = expanded_oracle(IntelligentKind::IP, 1.0, 6.0, 0.0, 0.0, 0.01, &[0.1, 0.1]);
    let u_prev = u[0];
    assert!((u[1] - (u_prev + 0.6)).abs() < 1e-12);
}

#[test]
fn seeded_examples() {
    let h = 0.01;
    let e: Vec<f64> = (0..1000).map(|k| ((k * 7919) % 2000) as f64 / 1000.0 - 1.0).collect();
    let es = TimeSeries::new(h, 0.0, e.clone()).unwrap();
    let r = verify_equivalence(IntelligentKind::IP, &cfg(1.0, 6.0, 0.0, 0.0), h, &es).unwrap();
    assert!(r.max_abs_diff <= 1e-9, "{r:?}");

    let h = 0.02;
    let es = TimeSeries::new(h, 0.0, e).unwrap();
    let r = verify_equivalence(IntelligentKind::IPID, &cfg(0.5, 6.0, 9.0, 4.0), h, &es).unwrap();
    assert!(r.max_abs_diff <= 1e-9, "{r:?}");
}

fn config_strategy() -> impl Strategy<Value = (IntelligentKind, f64, f64, f64, f64, f64)> {
    (
        prop::sample::select(IntelligentKind::ALL.to_vec()),
        prop_oneof![0.05..20.0f64, -20.0..-0.05f64],
        1e-3..0.1f64,
        -20.0..20.0f64,
        -20.0..20.0f64,
        -20.0..20.0f64,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn equivalence_theorem(
        (kind, alpha, h, kp, ki, kd) in config_strategy(),
        e in prop::collection::vec(-1.0..1.0f64, 1..300),
    ) {
        let c = cfg(alpha, kp, ki, kd);
        let es = TimeSeries::new(h, 0.0, e.clone()).unwrap();
        let report = verify_equivalence(kind, &c, h, &es).unwrap();
        prop_assert!(report.passes(), "{:?}", report);

        // independent route: expanded recursion vs the mapped classic one
        let oracle = expanded_oracle(kind, alpha, kp, ki, kd, h, &e);
        let classic = classic_run(kind, &c, h, &e);
        let scale = 1.0 + oracle.iter().fold(0.0f64, |m, u| m.max(u.abs()));
        for (a, b) in oracle.iter().zip(&classic) {
            prop_assert!((a - b).abs() <= 1e-9 * scale);
        }
    }

    #[test]
    fn equivalence_around_moving_reference(
        (kind, alpha, h, kp, ki, kd) in config_strategy(),
        pairs in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1..200),
    ) {
        let e: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let mut y_star: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        y_star[0] = 0.0;
        let es = TimeSeries::new(h, 0.0, e).unwrap();
        let report = verify_equivalence_with_reference(kind, &cfg(alpha, kp, ki, kd), h, &es, &y_star).unwrap();
        // y and y* now enter separately, so rounding scales with 1/h^nu
        let slack = 1.0 / h.powi(kind.nu() as i32);
        prop_assert!(report.max_abs_diff <= 1e-9 * (1.0 + report.max_abs_u + slack), "{:?}", report);
    }

    #[test]
    fn difference_slot_is_negative(alpha in 1e-6..1e6f64, h in 1e-6..10.0f64, kp in -1e3..1e3f64) {
        for kind in IntelligentKind::ALL {
            let corr = map_gains(kind, &cfg(alpha, kp, 1.0, 1.0), h).unwrap();
            prop_assert!(corr.difference_slot_gain() < 0.0);
        }
    }

    #[test]
    fn mapping_is_invertible(
        (kind, alpha, h, kp, ki, kd) in config_strategy(),
    ) {
        let corr = map_gains(kind, &cfg(alpha, kp, ki, kd), h).unwrap();
        let rec = corr.invert();
        prop_assert!((rec.alpha_h - alpha * h).abs() <= 1e-12 * (alpha * h).abs());
        let back = map_gains(kind, &cfg(rec.alpha_h / h, rec.kp, rec.ki, rec.kd), h).unwrap();
        let g = corr.mapped;
        let b = back.mapped;
        for (x, y) in [(g.kp, b.kp), (g.ki, b.ki), (g.kii, b.kii), (g.kd, b.kd)] {
            prop_assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
        }
    }
}

#[test]
fn difference_gain_diverges_as_sampling_shrinks() {
    let c = cfg(1.0, 6.0, 9.0, 4.0);
    let grid: Vec<f64> = (0..12).map(|i| 0.1 / 2f64.powi(i)).collect();
    let mags: Vec<f64> = grid.iter().map(|&h| map_gains(IntelligentKind::IP, &c, h).unwrap().mapped.kp.abs()).collect();
    assert!(mags.windows(2).all(|w| w[1] > w[0]));
    assert!(*mags.last().unwrap() > 1e4);
}
