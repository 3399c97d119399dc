//! The run / compare / sweep commands behind the CLI, kept independent of
//! argument parsing so tests can drive them directly.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use auvctl_core::sim::{case1_scenario, case2_scenario};
use auvctl_core::{compare, compute_metrics, run_scenario, Comparison, Metrics, Scenario};

use crate::config::{parse_config, scenario_digest};

/// Where a scenario comes from: a built-in name or a config file.
#[derive(Debug, Clone)]
pub enum ScenarioSource {
    Case1,
    Case2,
    File(PathBuf),
}

impl ScenarioSource {
    pub fn parse(arg: &str) -> Self {
        match arg {
            "case1" => Self::Case1,
            "case2" => Self::Case2,
            other => Self::File(PathBuf::from(other)),
        }
    }

    /// Load and fully resolve the scenario, returning a display name for
    /// output files.
    pub fn load(&self) -> Result<(String, Scenario)> {
        match self {
            Self::Case1 => Ok(("case1".to_string(), case1_scenario())),
            Self::Case2 => Ok(("case2".to_string(), case2_scenario())),
            Self::File(path) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("reading config {}", path.display()))?;
                let scenario = parse_config(&text)
                    .with_context(|| format!("parsing config {}", path.display()))?;
                let name = path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "scenario".to_string());
                Ok((name, scenario))
            }
        }
    }
}

/// Outcome of `run`: digest of the resolved config, metrics, and the
/// files written.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub name: String,
    pub digest: String,
    pub stable: bool,
    pub metrics: Metrics,
    pub csv_path: PathBuf,
    pub metrics_path: PathBuf,
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    let file = fs::File::create(path)
        .with_context(|| format!("creating output file {}", path.display()))?;
    let mut writer = BufWriter::new(file);
    writer.write_all(contents.as_bytes())?;
    writer.flush()?;
    Ok(())
}

/// Run one scenario and write `<name>.csv` and `<name>.metrics.txt` into
/// `out_dir`. The report is produced even when the run diverges; callers
/// map instability to a nonzero exit code.
pub fn cmd_run(name: &str, scenario: &Scenario, out_dir: &Path) -> Result<RunReport> {
    fs::create_dir_all(out_dir)
        .with_context(|| format!("creating output directory {}", out_dir.display()))?;
    let log = run_scenario(scenario)?;
    let metrics = compute_metrics(&log);

    let csv_path = out_dir.join(format!("{name}.csv"));
    write_file(&csv_path, &log.to_csv())?;
    let metrics_path = out_dir.join(format!("{name}.metrics.txt"));
    write_file(&metrics_path, &metrics.to_report())?;

    let report = RunReport {
        name: name.to_string(),
        digest: scenario_digest(scenario),
        stable: log.is_stable(),
        metrics,
        csv_path,
        metrics_path,
    };
    print_run_summary(&report, &log.abort);
    Ok(report)
}

fn print_run_summary(report: &RunReport, abort: &Option<auvctl_core::AbortInfo>) {
    println!("run {}  (digest {})", report.name, &report.digest[..12]);
    match abort {
        None => println!("  stable over {} steps", report.metrics.steps),
        Some(info) => println!(
            "  UNSTABLE: {:?} at t = {:.3} s (step {})",
            info.reason, info.t, info.step
        ),
    }
    let axes = ["x", "y", "z", "psi"];
    println!("  final-50% window        full run");
    for (i, axis) in axes.iter().enumerate() {
        println!(
            "  rmse.{axis:<3} = {:>12.5e}  {:>12.5e}",
            report.metrics.final_half.rmse[i], report.metrics.full.rmse[i]
        );
    }
    println!(
        "  position_rmse = {:.5e}  effort = {:.4e}  chattering = {:.4e}",
        report.metrics.final_half.position_rmse,
        report.metrics.final_half.effort_total,
        report.metrics.final_half.chattering_total
    );
    match report.metrics.settling_time {
        Some(t) => println!("  settled (|e| <= 0.02 on every axis) from t = {t:.3} s"),
        None => println!("  never settled below the 0.02 error band"),
    }
    println!(
        "  wrote {} and {}",
        report.csv_path.display(),
        report.metrics_path.display()
    );
}

/// Outcome of `compare`.
#[derive(Debug, Clone)]
pub struct CompareReport {
    pub stable: bool,
    pub comparison: Comparison,
    pub csv_a: PathBuf,
    pub csv_b: PathBuf,
    pub delta_path: PathBuf,
}

/// Run two scenarios on identical grids and disturbance realizations,
/// write both logs and a delta table.
pub fn cmd_compare(
    name_a: &str,
    a: &Scenario,
    name_b: &str,
    b: &Scenario,
    out_dir: &Path,
) -> Result<CompareReport> {
    fs::create_dir_all(out_dir)
        .with_context(|| format!("creating output directory {}", out_dir.display()))?;
    let comparison = compare(a, b)?;

    let csv_a = out_dir.join(format!("{name_a}.a.csv"));
    write_file(&csv_a, &comparison.log_a.to_csv())?;
    let csv_b = out_dir.join(format!("{name_b}.b.csv"));
    write_file(&csv_b, &comparison.log_b.to_csv())?;

    let mut table = String::from("metric,a,b,relative_delta\n");
    for (name, va, vb, rel) in comparison.deltas() {
        table.push_str(&format!("{name},{va},{vb},{rel}\n"));
    }
    let delta_path = out_dir.join("compare.csv");
    write_file(&delta_path, &table)?;

    println!("compare {name_a} (a) vs {name_b} (b)");
    println!(
        "  stable: a = {}, b = {}",
        comparison.metrics_a.stable, comparison.metrics_b.stable
    );
    for key in [
        "final50.position_rmse",
        "final50.iae_total",
        "final50.effort_total",
        "final50.chattering_total",
    ] {
        if let Some((_, va, vb, rel)) = comparison.deltas().into_iter().find(|(n, ..)| n == key) {
            let winner = if va <= vb { "a" } else { "b" };
            println!("  {key:<26} a = {va:.5e}  b = {vb:.5e}  delta = {rel:+.3}  winner: {winner}");
        }
    }
    println!(
        "  wrote {}, {}, {}",
        csv_a.display(),
        csv_b.display(),
        delta_path.display()
    );

    let stable = comparison.metrics_a.stable && comparison.metrics_b.stable;
    Ok(CompareReport {
        stable,
        comparison,
        csv_a,
        csv_b,
        delta_path,
    })
}

/// One row of a sweep result table.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub value: f64,
    pub stable: bool,
    pub metrics: Metrics,
}

/// Outcome of `sweep`.
#[derive(Debug)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub table_path: PathBuf,
    pub stable: bool,
}

/// Apply a swept value to a scalar or diagonal-entry parameter addressed
/// by a dotted path such as `gains.k3`, `tde.n`, or `tde.mbar0.2`.
pub fn apply_param(scenario: &mut Scenario, path: &str, value: f64) -> Result<()> {
    let parts: Vec<&str> = path.split('.').collect();
    let diag_index = |part: &str| -> Result<usize> {
        let i: usize = part
            .parse()
            .map_err(|_| anyhow::anyhow!("invalid diagonal index '{part}' in '{path}'"))?;
        if i > 3 {
            bail!("diagonal index {i} out of range in '{path}'");
        }
        Ok(i)
    };
    let as_steps = |value: f64| -> Result<usize> {
        if value < 1.0 || value.fract() != 0.0 {
            bail!("'{path}' needs a positive integer, got {value}");
        }
        Ok(value as usize)
    };

    match parts.as_slice() {
        ["sim", "ts"] => scenario.ts = value,
        ["sim", "duration"] => scenario.duration = value,
        ["sim", "seed"] => scenario.seed = value as u64,
        ["gains", "phi"] => scenario.gains.phi = value,
        ["gains", "integral_limit"] => scenario.options.integral_limit = value,
        ["gains", name] | ["gains", name, _] => {
            let diag = match *name {
                "k1" => &mut scenario.gains.k1,
                "k2" => &mut scenario.gains.k2,
                "k3" => &mut scenario.gains.k3,
                "gamma" => &mut scenario.gains.gamma,
                other => bail!("unknown gain '{other}' in '{path}'"),
            };
            match parts.len() {
                2 => *diag = auvctl_core::Vec4::repeat(value),
                _ => diag[diag_index(parts[2])?] = value,
            }
        }
        ["tde", "n"] => scenario.tde.delay_steps = as_steps(value)?,
        ["tde", "l"] => {
            let ratio = value / scenario.ts;
            if (ratio - ratio.round()).abs() > 1e-6 * ratio.abs().max(1.0) || ratio.round() < 1.0 {
                bail!(
                    "tde.l = {value} must be an integer multiple of sim.ts = {}",
                    scenario.ts
                );
            }
            scenario.tde.delay_steps = ratio.round() as usize;
        }
        ["tde", "mbar_min"] => scenario.tde.mbar_min = value,
        ["tde", "mbar0"] => scenario.tde.mbar0 = auvctl_core::Vec4::repeat(value),
        ["tde", "mbar0", idx] => scenario.tde.mbar0[diag_index(idx)?] = value,
        ["tde", "alpha"] => scenario.tde.alpha = auvctl_core::Vec4::repeat(value),
        ["tde", "alpha", idx] => scenario.tde.alpha[diag_index(idx)?] = value,
        ["uncertainty", "m"] => scenario.uncertainty.m = value,
        ["uncertainty", "c"] => scenario.uncertainty.c = value,
        ["uncertainty", "d"] => scenario.uncertainty.d = value,
        ["uncertainty", "g"] => scenario.uncertainty.g = value,
        ["disturbance", "noise"] => {
            scenario.disturbance.x.noise_amplitude = value;
            scenario.disturbance.y.noise_amplitude = value;
            scenario.disturbance.z.noise_amplitude = value;
            scenario.disturbance.psi.noise_amplitude = value;
        }
        ["params", name] => match *name {
            "mass" => scenario.params.mass = value,
            "iz" => scenario.params.iz = value,
            "gravity_force" => scenario.params.gravity_force = value,
            "buoyancy_force" => scenario.params.buoyancy_force = value,
            "x_udot" => scenario.params.x_udot = value,
            "y_vdot" => scenario.params.y_vdot = value,
            "z_wdot" => scenario.params.z_wdot = value,
            "n_rdot" => scenario.params.n_rdot = value,
            "x_u" => scenario.params.x_u = value,
            "y_v" => scenario.params.y_v = value,
            "z_w" => scenario.params.z_w = value,
            "n_r" => scenario.params.n_r = value,
            "x_uu" => scenario.params.x_uu = value,
            "y_vv" => scenario.params.y_vv = value,
            "z_ww" => scenario.params.z_ww = value,
            "n_rr" => scenario.params.n_rr = value,
            "coriolis_scale" => scenario.params.coriolis_scale = value,
            other => bail!("unknown parameter '{other}' in '{path}'"),
        },
        _ => bail!("unknown sweep path '{path}'"),
    }
    Ok(())
}

fn sweep_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(threads) = std::env::var("AUVCTL_THREADS") {
        let n: usize = threads
            .parse()
            .with_context(|| format!("AUVCTL_THREADS = '{threads}' is not a thread count"))?;
        builder = builder.num_threads(n.max(1));
    }
    Ok(builder.build()?)
}

/// Run the base scenario once per swept value; rows are reported in the
/// order the values were given.
pub fn cmd_sweep(
    name: &str,
    base: &Scenario,
    param: &str,
    values: &[f64],
    out_dir: &Path,
) -> Result<SweepReport> {
    if values.is_empty() {
        bail!("sweep needs at least one value");
    }
    // Validate the path and every value before running anything.
    let mut scenarios = Vec::with_capacity(values.len());
    for &value in values {
        let mut scenario = base.clone();
        apply_param(&mut scenario, param, value)?;
        scenarios.push(scenario);
    }
    fs::create_dir_all(out_dir)
        .with_context(|| format!("creating output directory {}", out_dir.display()))?;

    use rayon::prelude::*;
    let pool = sweep_pool()?;
    let logs = pool.install(|| scenarios.par_iter().map(run_scenario).collect::<Vec<_>>());

    let mut rows = Vec::with_capacity(values.len());
    for (&value, log) in values.iter().zip(logs) {
        let log = log?;
        rows.push(SweepRow {
            value,
            stable: log.is_stable(),
            metrics: compute_metrics(&log),
        });
    }

    let mut table = String::from(
        "value,stable,settling_time,position_rmse_final50,aggregate_rmse_final50,\
         iae_final50,effort_final50,chattering_final50,tde_error_sup_final50\n",
    );
    for row in &rows {
        let w = &row.metrics.final_half;
        table.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            row.value,
            row.stable,
            row.metrics
                .settling_time
                .map_or("none".to_string(), |t| t.to_string()),
            w.position_rmse,
            w.aggregate_rmse,
            w.iae_total,
            w.effort_total,
            w.chattering_total,
            w.tde_error_sup
                .map_or("none".to_string(), |v| v.to_string()),
        ));
    }
    let table_path = out_dir.join(format!("{name}.sweep.csv"));
    write_file(&table_path, &table)?;

    println!("sweep {name} over {param} ({} runs)", rows.len());
    for row in &rows {
        println!(
            "  {param} = {:<10} stable = {:<5} position_rmse(final50) = {:.5e} tde_error_sup = {}",
            row.value,
            row.stable,
            row.metrics.final_half.position_rmse,
            row.metrics
                .final_half
                .tde_error_sup
                .map_or("-".to_string(), |v| format!("{v:.4e}")),
        );
    }
    println!("  wrote {}", table_path.display());

    let stable = rows.iter().all(|r| r.stable);
    Ok(SweepReport {
        rows,
        table_path,
        stable,
    })
}
