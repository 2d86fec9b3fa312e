//! Plot-ready data export from run directories: smoothed training curves,
//! sweep trend tables, and labeled trajectory overlays. Data files only; the
//! plotting itself happens elsewhere.

use std::path::{Path, PathBuf};

use crate::runio::{parse_trajectory_csv, read_file, trajectory_csv, write_file};
use crate::CliError;

/// Trailing window mean: `smoothed[i]` averages the last `window` values up
/// to and including `i`.
pub fn moving_average(xs: &[f64], window: usize) -> Vec<f64> {
    let w = window.max(1);
    let mut out = Vec::with_capacity(xs.len());
    let mut sum = 0.0;
    for i in 0..xs.len() {
        sum += xs[i];
        if i >= w {
            sum -= xs[i - w];
        }
        let n = (i + 1).min(w) as f64;
        out.push(sum / n);
    }
    out
}

fn export_training_curve(run: &Path, out_dir: &Path, window: usize) -> Result<PathBuf, CliError> {
    let text = read_file(&run.join("train_log.csv"))?;
    let mut steps = Vec::new();
    let mut returns = Vec::new();
    for (ln, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() < 3 {
            return Err(CliError::BadArgs(format!("train_log.csv line {} is malformed", ln + 1)));
        }
        steps.push(f[0].to_string());
        returns.push(
            f[2].parse::<f64>()
                .map_err(|_| CliError::BadArgs(format!("bad return '{}' on line {}", f[2], ln + 1)))?,
        );
    }
    let smoothed = moving_average(&returns, window);
    let mut csv = String::from("env_step,return,smoothed_return\n");
    for ((s, r), m) in steps.iter().zip(&returns).zip(&smoothed) {
        csv.push_str(&format!("{s},{r},{m}\n"));
    }
    write_file(out_dir, "training_curve.csv", &csv)
}

fn export_sweep_curve(run: &Path, out_dir: &Path) -> Result<PathBuf, CliError> {
    let text = read_file(&run.join("sweep.csv"))?;
    // keep only aggregate rows; they are already plot-ready
    let mut csv = String::from("value,kind,total_time_s,energy_J,flight_m,success_rate\n");
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() >= 6 && (f[1] == "mean" || f[1] == "stddev") {
            csv.push_str(&format!("{},{},{},{},{},{}\n", f[0], f[1], f[2], f[3], f[4], f[5]));
        }
    }
    write_file(out_dir, "sweep_curve.csv", &csv)
}

fn export_trajectory_overlay(run: &Path, out_dir: &Path) -> Result<PathBuf, CliError> {
    let text = read_file(&run.join("trajectory.csv"))?;
    let legs = parse_trajectory_csv(&text)?;
    let label = run
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".to_string());
    // same table with a label column for overlay plots
    let body = trajectory_csv(&legs);
    let mut csv = String::new();
    for (i, line) in body.lines().enumerate() {
        if i == 0 {
            csv.push_str(&format!("label,{line}\n"));
        } else {
            csv.push_str(&format!("{label},{line}\n"));
        }
    }
    write_file(out_dir, "trajectory_overlay.csv", &csv)
}

/// Export whatever plot data the run directory supports. Errors when none of
/// the expected inputs exist.
pub fn export_plotdata(run: &Path, out_dir: &Path, window: usize) -> Result<Vec<PathBuf>, CliError> {
    let mut written = Vec::new();
    if run.join("train_log.csv").is_file() {
        written.push(export_training_curve(run, out_dir, window)?);
    }
    if run.join("sweep.csv").is_file() {
        written.push(export_sweep_curve(run, out_dir)?);
    }
    if run.join("trajectory.csv").is_file() {
        written.push(export_trajectory_overlay(run, out_dir)?);
    }
    if written.is_empty() {
        return Err(CliError::MissingInputs(vec![
            format!("{}/train_log.csv", run.display()),
            format!("{}/sweep.csv", run.display()),
            format!("{}/trajectory.csv", run.display()),
        ]));
    }
    Ok(written)
}
