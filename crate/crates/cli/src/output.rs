//! Files written for each run.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use ipid_core::scenarios::{ControllerSpec, Scenario, ScenarioRun, Trajectory};
use ipid_core::signals::fmt_f64;
use ipid_core::tuning::{identify_broida, tune_pi_broida_with_floor, DEFAULT_DEAD_TIME_FLOOR};
use ipid_core::{RunConfig, TimeSeries};

fn create(dir: &Path, file: &str) -> io::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(file))?))
}

/// Two-column `time value` data for one plotted curve.
fn write_dat(dir: &Path, file: &str, time: &TimeSeries, values: &TimeSeries) -> io::Result<()> {
    let mut w = create(dir, file)?;
    for (t, v) in time.values().iter().zip(values.values()) {
        writeln!(w, "{} {}", fmt_f64(*t), fmt_f64(*v))?;
    }
    w.flush()
}

/// Trajectory CSV plus one data file per plotted curve: the applied input,
/// the measured output and the denoised output.
pub fn write_trajectory(dir: &Path, name: &str, traj: &Trajectory) -> io::Result<()> {
    let mut w = create(dir, &format!("{name}.csv"))?;
    traj.write_csv(&mut w)?;
    w.flush()?;
    write_dat(dir, &format!("{name}.input.dat"), &traj.time, &traj.control_applied)?;
    write_dat(dir, &format!("{name}.output.dat"), &traj.time, &traj.output)?;
    write_dat(dir, &format!("{name}.output_denoised.dat"), &traj.time, &traj.output_denoised)
}

pub fn write_run(dir: &Path, s: &Scenario, run: &ScenarioRun) -> io::Result<()> {
    write_trajectory(dir, &s.name, &run.trajectory)?;

    let mut w = create(dir, &format!("{}.metrics.txt", s.name))?;
    writeln!(w, "scenario={}", s.name)?;
    match run.diverged_at {
        Some(t) => writeln!(w, "diverged_at={t}")?,
        None => writeln!(w, "diverged_at=none")?,
    }
    if s.controller == ControllerSpec::OpenLoop {
        write_open_loop_fit(&mut w, s, &run.trajectory)?;
    } else {
        run.metrics.write_kv(&mut w, "")?;
        if let Some(m) = &run.window_metrics {
            m.write_kv(&mut w, "window_")?;
        }
    }
    w.flush()?;

    let toml = RunConfig::from_scenario(s).to_toml().map_err(io::Error::other)?;
    std::fs::write(dir.join(format!("{}.toml", s.name)), toml)
}

/// Step-response fit of an open-loop run whose schedule is a single step.
fn write_open_loop_fit<W: Write>(w: &mut W, s: &Scenario, traj: &Trajectory) -> io::Result<()> {
    let &[(t_step, amplitude)] = s.schedule.as_slice() else {
        return writeln!(w, "fit=unavailable (schedule is not a single step)");
    };
    let start = ((t_step / s.h).round() as usize).min(traj.len().saturating_sub(1));
    let y = &traj.output.values()[start..];
    let fit = TimeSeries::new(s.h, t_step, y.to_vec())
        .and_then(|response| identify_broida(&response, amplitude, y[0]))
        .and_then(|fit| tune_pi_broida_with_floor(&fit, DEFAULT_DEAD_TIME_FLOOR).map(|g| (fit, g)));
    match fit {
        Ok((fit, gains)) => {
            writeln!(w, "k={}", fit.gain)?;
            writeln!(w, "T={}", fit.time_constant)?;
            writeln!(w, "tau={}", fit.delay)?;
            writeln!(w, "kp={}", gains.kp)?;
            writeln!(w, "ki={}", gains.ki)
        }
        Err(e) => writeln!(w, "fit=unavailable ({e})"),
    }
}
