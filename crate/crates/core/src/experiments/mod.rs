//! Experiment drivers behind the `mzcg` binary.
//!
//! Each driver writes one or more CSV files whose leading `# key=value` lines
//! hold the resolved configuration followed by `summary.*` statistics. Every
//! summary can be recomputed from the CSV body.

pub mod config;
pub mod csv;

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use crate::benchmark::{conditional_y_sample, potential, BenchmarkParams};
use crate::error::{Error, Result};
use crate::geometry::benchmark_map;
use crate::kernel::{
    approx_kernel, decay_rate, default_lag_grid, empirical_kernel, empirical_kernel_matrix,
    fit_decay_rate,
};
use crate::models::{EffectiveModel, ModelKind};
use crate::noise::NoiseStream;
use crate::sde::{
    par_map, simulate_full_run, simulate_scalar_run, Blowup, EnsembleAccumulator, IntegratorConfig,
    Run, Thermostat,
};
use crate::stats::{rms_difference, time_to_half, variance};

pub use self::config::{Experiment, ExperimentConfig, Settings};
pub use self::csv::{read_csv, CsvTable, ParsedCsv};

/// Trajectories simulated per parallel batch; fixed so that the reduction
/// order never depends on the thread count.
const BATCH: usize = 64;

/// Fraction of the linearised decay time over which kernel decay rates are fitted.
pub const FIT_WINDOW_DECAY_TIMES: f64 = 2.0;

#[derive(Debug, Clone, Default)]
pub struct Report {
    pub outputs: Vec<PathBuf>,
    pub summary: Vec<(String, String)>,
    /// Blowup of a reference computation. Partial output has been written.
    pub blowup: Option<Blowup>,
}

impl Report {
    fn note(&mut self, key: impl Into<String>, value: impl ToString) {
        self.summary.push((key.into(), value.to_string()));
    }
}

/// Run the configured experiment, on a dedicated pool when `threads` is set.
pub fn run(cfg: &ExperimentConfig) -> Result<Report> {
    let go = || match cfg.experiment {
        Experiment::Landscape => run_landscape(cfg),
        Experiment::Kernel => run_kernel(cfg),
        Experiment::KernelMatrix => run_kernel_matrix(cfg),
        Experiment::MeanTrajectory => run_mean_trajectory(cfg),
        Experiment::Ensemble => run_ensemble(cfg),
        Experiment::Stationary => run_stationary(cfg),
    };
    match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?
            .install(go),
        None => go(),
    }
}

fn table(cfg: &ExperimentConfig, columns: &[&str]) -> CsvTable {
    let mut t = CsvTable::new(columns);
    for (k, v) in cfg.metadata() {
        t.meta(k, v);
    }
    t
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(csv::format_float).unwrap_or_else(|| "none".into())
}

/// `out.csv` → `out_<suffix>.csv`.
fn suffixed(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    let ext = path.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    path.with_file_name(format!("{stem}_{suffix}.{ext}"))
}

fn flag_blowup(t: &mut CsvTable, report: &mut Report, b: Blowup, what: &str) {
    t.meta("blowup", "true");
    t.meta("blowup.source", what);
    t.meta("blowup.step", b.step);
    t.meta("blowup.time", csv::format_float(b.time));
    if report.blowup.is_none_or(|old| b.time < old.time) {
        report.blowup = Some(b);
    }
}

fn earliest(a: Option<Blowup>, b: Option<Blowup>) -> Option<Blowup> {
    match (a, b) {
        (Some(a), Some(b)) => Some(if b.time < a.time { b } else { a }),
        (a, b) => a.or(b),
    }
}

pub fn run_landscape(cfg: &ExperimentConfig) -> Result<Report> {
    let p = &cfg.params;
    let n = cfg.grid_points;
    let step = (cfg.grid_max - cfg.grid_min) / (n - 1) as f64;
    let mut t = table(cfg, &["x", "y", "V"]);
    for i in 0..n {
        let x = cfg.grid_min + i as f64 * step;
        for j in 0..n {
            let y = cfg.grid_min + j as f64 * step;
            t.push_row(vec![Some(x), Some(y), Some(potential(p, x, y))]);
        }
    }
    t.write(&cfg.output_path)?;
    Ok(Report {
        outputs: vec![cfg.output_path.clone()],
        ..Default::default()
    })
}

fn kernel_integrator(cfg: &ExperimentConfig, lags: &[f64]) -> Result<IntegratorConfig> {
    let horizon = lags
        .last()
        .copied()
        .unwrap_or(cfg.kernel_dt)
        .max(cfg.kernel_dt);
    IntegratorConfig::new(cfg.kernel_dt, horizon, 1)
}

fn kernel_blowup(err: Error) -> Result<Blowup> {
    match err {
        Error::NumericalBlowup { step, time, .. } => Ok(Blowup { step, time }),
        other => Err(other),
    }
}

pub fn run_kernel(cfg: &ExperimentConfig) -> Result<Report> {
    let p = &cfg.params;
    let lags = default_lag_grid(p, cfg.x0, cfg.n_lags, cfg.lag_span);
    let integ = kernel_integrator(cfg, &lags)?;
    let stream = NoiseStream::new(cfg.master_seed, 0);
    let mut report = Report {
        outputs: vec![cfg.output_path.clone()],
        ..Default::default()
    };
    let mut t = table(cfg, &["s", "empirical", "stderr", "approx"]);

    match empirical_kernel(p, cfg.x0, &lags, cfg.n_samples, &stream, &integ) {
        Ok(k) => {
            let rate = decay_rate(p, cfg.x0);
            let window = FIT_WINDOW_DECAY_TIMES / rate;
            let fitted = fit_decay_rate(&k.lags, &k.values, window);
            report.note("fitted_decay_slope", fmt_opt(fitted));
            report.note("theoretical_decay_slope", csv::format_float(-rate));
            report.note("fit_window", csv::format_float(window));
            report.note("kernel_at_zero", csv::format_float(k.values[0]));
            report.note("kernel_at_zero_stderr", csv::format_float(k.stderr[0]));
            report.note(
                "approx_at_zero",
                csv::format_float(approx_kernel(p, 0.0, cfg.x0)),
            );
            for (key, v) in &report.summary {
                t.meta(format!("summary.{key}"), v);
            }
            for i in 0..k.lags.len() {
                let s = k.lags[i];
                t.push_row(vec![
                    Some(s),
                    Some(k.values[i]),
                    Some(k.stderr[i]),
                    Some(approx_kernel(p, s, cfg.x0)),
                ]);
            }
        }
        Err(e) => {
            let b = kernel_blowup(e)?;
            flag_blowup(&mut t, &mut report, b, "orthogonal-dynamics");
        }
    }
    t.write(&cfg.output_path)?;
    Ok(report)
}

/// Conditioning points of the kernel-matrix experiment: `|cos(ωx0)| = 1` and `cos(ωx0) = 0`.
pub fn kernel_matrix_cases(p: &BenchmarkParams) -> [(&'static str, f64); 2] {
    [("cos1", 0.0), ("cos0", PI / (2.0 * p.omega))]
}

pub fn run_kernel_matrix(cfg: &ExperimentConfig) -> Result<Report> {
    let p = &cfg.params;
    let map = benchmark_map();
    let stream = NoiseStream::new(cfg.master_seed, 0);
    let mut report = Report::default();
    for (label, x0) in kernel_matrix_cases(p) {
        let path = suffixed(&cfg.output_path, label);
        let lags = default_lag_grid(p, x0, cfg.n_lags, cfg.lag_span);
        let integ = kernel_integrator(cfg, &lags)?;
        let mut t = table(cfg, &["s", "m11", "m12", "m21", "m22", "log_abs_m12"]);
        t.meta("x0", x0);
        match empirical_kernel_matrix(p, &map, x0, &lags, cfg.n_samples, &stream, &integ) {
            Ok(k) => {
                let log12: Vec<f64> = k.values.iter().map(|m| m[0][1].abs().ln()).collect();
                let first = log12[0];
                let last = *log12.last().unwrap();
                t.meta("summary.log_abs_m12_drop", csv::format_float(first - last));
                report.note(
                    format!("{label}.log_abs_m12_drop"),
                    csv::format_float(first - last),
                );
                for (i, m) in k.values.iter().enumerate() {
                    t.push_row(vec![
                        Some(k.lags[i]),
                        Some(m[0][0]),
                        Some(m[0][1]),
                        Some(m[1][0]),
                        Some(m[1][1]),
                        Some(log12[i]),
                    ]);
                }
            }
            Err(e) => {
                let b = kernel_blowup(e)?;
                flag_blowup(&mut t, &mut report, b, "orthogonal-dynamics");
            }
        }
        t.write(&path)?;
        report.outputs.push(path);
    }
    Ok(report)
}

/// Simulate `n` streams in fixed-size batches and feed the results, in stream
/// order, to `sink`.
fn for_each_stream<T, F, S>(n: usize, simulate: F, mut sink: S) -> Result<()>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
    S: FnMut(T) -> Result<()>,
{
    let mut start = 0;
    while start < n {
        let len = BATCH.min(n - start);
        for item in par_map(len, None, |k| simulate(start + k)) {
            sink(item?)?;
        }
        start += len;
    }
    Ok(())
}

pub fn run_mean_trajectory(cfg: &ExperimentConfig) -> Result<Report> {
    let p = &cfg.params;
    let integ = &cfg.integrator;
    let x0 = cfg.x0;
    let mut report = Report {
        outputs: vec![cfg.output_path.clone()],
        ..Default::default()
    };

    let mut full = EnsembleAccumulator::new();
    let mut full_blowup = None;
    for_each_stream(
        cfg.n_samples,
        |i| {
            let mut s = NoiseStream::new(cfg.master_seed, i as u64);
            let y0 = conditional_y_sample(p, x0, &mut s);
            simulate_full_run(p, [x0, y0], integ, s, Thermostat::Off)
        },
        |run: Run| {
            full_blowup = earliest(full_blowup, run.blowup);
            full.add(&run.trajectory.project(0))
        },
    )?;
    let full = full.finish()?;
    let times = full.mean.times().to_vec();
    let full_mean = full.mean.component(0);
    let full_se = full.stderr.component(0);

    let mut models = Vec::new();
    for &kind in &cfg.models {
        let m = EffectiveModel::new(kind, *p)?;
        let run = simulate_scalar_run(
            &m,
            x0,
            integ,
            NoiseStream::new(cfg.master_seed, 0),
            Thermostat::Off,
        )?;
        if let Some(b) = run.blowup {
            report.note(format!("blowup.{}", kind.name()), csv::format_float(b.time));
        }
        models.push((kind, run.trajectory.component(0)));
    }

    report.note(
        "time_to_half.full_mean",
        fmt_opt(time_to_half(&times, &full_mean)),
    );
    for (kind, v) in &models {
        let n = v.len().min(times.len());
        report.note(
            format!("time_to_half.{}", kind.name()),
            fmt_opt(time_to_half(&times[..n], &v[..n])),
        );
    }

    let mut columns = vec!["t", "full_mean", "full_stderr"];
    columns.extend(models.iter().map(|(k, _)| k.name()));
    let mut t = table(cfg, &columns);
    if let Some(b) = full_blowup {
        flag_blowup(&mut t, &mut report, b, "full-dynamics");
    }
    for (k, v) in &report.summary {
        t.meta(format!("summary.{k}"), v);
    }
    for i in 0..times.len() {
        let mut row = vec![Some(times[i]), Some(full_mean[i]), Some(full_se[i])];
        row.extend(models.iter().map(|(_, v)| v.get(i).copied()));
        t.push_row(row);
    }
    t.write(&cfg.output_path)?;
    Ok(report)
}

pub fn run_ensemble(cfg: &ExperimentConfig) -> Result<Report> {
    let integ = &cfg.integrator;
    let start = cfg.ensemble_start();
    let mut report = Report::default();

    for &beta in &cfg.beta_list {
        let p = cfg.params.with_beta(beta);
        let approx = EffectiveModel::new(ModelKind::MemoryCorrected, p)?;
        let nomem = EffectiveModel::new(ModelKind::MemoryFree, p)?;
        let mut acc = [
            EnsembleAccumulator::new(),
            EnsembleAccumulator::new(),
            EnsembleAccumulator::new(),
        ];
        let mut blowup = None;
        for_each_stream(
            cfg.n_samples,
            |i| {
                let stream = NoiseStream::new(cfg.master_seed, i as u64);
                let f = simulate_full_run(&p, start, integ, stream.clone(), Thermostat::On)?;
                let a =
                    simulate_scalar_run(&approx, start[0], integ, stream.clone(), Thermostat::On)?;
                let b = simulate_scalar_run(&nomem, start[0], integ, stream, Thermostat::On)?;
                Ok([f, a, b])
            },
            |runs: [Run; 3]| {
                for (acc, run) in acc.iter_mut().zip(&runs) {
                    blowup = earliest(blowup, run.blowup);
                    acc.add(&run.trajectory.project(0))?;
                }
                Ok(())
            },
        )?;
        let [f, a, b] = acc;
        let (f, a, b) = (f.finish()?, a.finish()?, b.finish()?);
        let n = f.mean.len().min(a.mean.len()).min(b.mean.len());
        let times = &f.mean.times()[..n];
        let cols: Vec<Vec<f64>> = [&f.mean, &a.mean, &b.mean, &f.stderr, &a.stderr, &b.stderr]
            .iter()
            .map(|t| t.component(0)[..n].to_vec())
            .collect();

        let amplitude = start[0].abs();
        let rms_approx = rms_difference(&cols[1], &cols[0]);
        let rms_nomem = rms_difference(&cols[2], &cols[0]);
        let tag = format!("beta{beta}");
        let mut summary = vec![
            (
                "initial_amplitude".to_string(),
                csv::format_float(amplitude),
            ),
            (
                "rms_approx_minus_full".to_string(),
                csv::format_float(rms_approx),
            ),
            (
                "rms_nomem_minus_full".to_string(),
                csv::format_float(rms_nomem),
            ),
        ];
        for (name, col) in [
            ("full_mean", &cols[0]),
            ("approx_mean", &cols[1]),
            ("nomem_mean", &cols[2]),
        ] {
            summary.push((
                format!("time_to_half.{name}"),
                fmt_opt(time_to_half(times, col)),
            ));
        }

        let path = suffixed(&cfg.output_path, &tag);
        let mut t = table(
            cfg,
            &[
                "t",
                "full_mean",
                "approx_mean",
                "nomem_mean",
                "full_stderr",
                "approx_stderr",
                "nomem_stderr",
            ],
        );
        t.meta("beta", beta);
        if let Some(bu) = blowup {
            flag_blowup(&mut t, &mut report, bu, "ensemble");
        }
        for (k, v) in &summary {
            t.meta(format!("summary.{k}"), v);
            report.note(format!("{tag}.{k}"), v);
        }
        for i in 0..n {
            let mut row = vec![Some(times[i])];
            row.extend(cols.iter().map(|c| Some(c[i])));
            t.push_row(row);
        }
        t.write(&path)?;
        report.outputs.push(path);
    }
    Ok(report)
}

/// Mean standard error from non-overlapping batch means.
fn batch_mean_stderr(values: &[f64], batches: usize) -> f64 {
    let size = values.len() / batches;
    if size == 0 {
        return f64::NAN;
    }
    let means: Vec<f64> = values
        .chunks_exact(size)
        .take(batches)
        .map(|c| c.iter().sum::<f64>() / size as f64)
        .collect();
    (variance(&means) / batches as f64).sqrt()
}

pub fn run_stationary(cfg: &ExperimentConfig) -> Result<Report> {
    let p = &cfg.params;
    let integ = &cfg.integrator;
    let start = [cfg.x0, p.valley_floor(cfg.x0)];
    let mut report = Report {
        outputs: vec![cfg.output_path.clone()],
        ..Default::default()
    };

    let mut xs = Vec::new();
    let mut residuals = Vec::new();
    let mut blowup = None;
    for_each_stream(
        cfg.n_samples,
        |i| {
            simulate_full_run(
                p,
                start,
                integ,
                NoiseStream::new(cfg.master_seed, i as u64),
                Thermostat::On,
            )
        },
        |run: Run| {
            blowup = earliest(blowup, run.blowup);
            let tr = &run.trajectory;
            let skip = (cfg.burn_in * tr.len() as f64).floor() as usize;
            for s in tr.states().skip(skip) {
                xs.push(s[0]);
                residuals.push(s[1] - p.valley_floor(s[0]));
            }
            Ok(())
        },
    )?;

    let target_var = 1.0 / (p.beta * p.mu);
    let target_res = 1.0 / (p.beta * p.lambda);
    let var_x = variance(&xs);
    let var_res = variance(&residuals);
    let mean_x = xs.iter().sum::<f64>() / xs.len() as f64;
    let summary = [
        ("samples", xs.len().to_string()),
        ("var_x", csv::format_float(var_x)),
        ("target_var_x", csv::format_float(target_var)),
        (
            "var_x_rel_error",
            csv::format_float((var_x - target_var).abs() / target_var),
        ),
        ("mean_x", csv::format_float(mean_x)),
        (
            "mean_x_stderr",
            csv::format_float(batch_mean_stderr(&xs, 50)),
        ),
        ("var_residual", csv::format_float(var_res)),
        ("target_var_residual", csv::format_float(target_res)),
        (
            "var_residual_rel_error",
            csv::format_float((var_res - target_res).abs() / target_res),
        ),
    ];

    let sd = target_var.sqrt();
    let (lo, hi) = (-5.0 * sd, 5.0 * sd);
    let width = (hi - lo) / cfg.bins as f64;
    let mut counts = vec![0u64; cfg.bins];
    for &x in &xs {
        if x >= lo && x < hi {
            counts[(((x - lo) / width) as usize).min(cfg.bins - 1)] += 1;
        }
    }

    let mut t = table(cfg, &["x", "density", "reference_density", "count"]);
    if let Some(b) = blowup {
        flag_blowup(&mut t, &mut report, b, "full-dynamics");
    }
    for (k, v) in &summary {
        t.meta(format!("summary.{k}"), v);
        report.note(*k, v);
    }
    let norm = xs.len() as f64 * width;
    for (i, &c) in counts.iter().enumerate() {
        let x = lo + (i as f64 + 0.5) * width;
        let reference = (-0.5 * x * x / target_var).exp() / (2.0 * PI * target_var).sqrt();
        t.push_row(vec![
            Some(x),
            Some(c as f64 / norm),
            Some(reference),
            Some(c as f64),
        ]);
    }
    t.write(&cfg.output_path)?;
    Ok(report)
}
