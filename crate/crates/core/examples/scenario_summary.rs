//! Prints the metrics of every builtin scenario.

use ipid_core::scenarios::{builtin, run_scenario, BUILTIN_NAMES};

fn main() {
    for name in BUILTIN_NAMES {
        let s = builtin(name).expect("builtin");
        match run_scenario(&s) {
            Ok(run) => {
                let m = run.metrics;
                print!(
                    "{name:20} iae={:.5} itae={:.5} overshoot={:.4} settle={:?} final|e|={:.3e}",
                    m.iae, m.itae, m.max_overshoot, m.settling_time_2pct, m.final_abs_error
                );
                if let Some(w) = run.window_metrics {
                    print!("  window iae={:.5}", w.iae);
                }
                println!();
            }
            Err(e) => println!("{name:20} error: {e}"),
        }
    }
}
