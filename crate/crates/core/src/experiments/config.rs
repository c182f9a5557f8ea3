//! Experiment configuration.
//!
//! Values are resolved in three layers: built-in defaults for the experiment
//! (optionally the cheaper desk-scale set), then a flat `key=value` config
//! file, then individual `--set key=value` overrides.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::benchmark::BenchmarkParams;
use crate::error::{Error, Result};
use crate::models::ModelKind;
use crate::sde::IntegratorConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Landscape,
    Kernel,
    KernelMatrix,
    MeanTrajectory,
    Ensemble,
    Stationary,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::Landscape,
        Experiment::Kernel,
        Experiment::KernelMatrix,
        Experiment::MeanTrajectory,
        Experiment::Ensemble,
        Experiment::Stationary,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Landscape => "landscape",
            Experiment::Kernel => "kernel",
            Experiment::KernelMatrix => "kernel-matrix",
            Experiment::MeanTrajectory => "mean-trajectory",
            Experiment::Ensemble => "ensemble",
            Experiment::Stationary => "stationary",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown experiment '{s}'")))
    }
}

/// Every key accepted in config files and `--set`.
pub const KEYS: &[&str] = &[
    "mu",
    "lambda",
    "tau",
    "omega",
    "beta",
    "deterministic",
    "dt",
    "t_final",
    "record_stride",
    "n_samples",
    "seed",
    "x0",
    "out",
    "models",
    "betas",
    "threads",
    "kernel_dt",
    "n_lags",
    "lag_span",
    "grid_min",
    "grid_max",
    "grid_points",
    "bins",
    "burn_in",
];

/// Layered raw settings prior to typed resolution.
#[derive(Debug, Clone, Default)]
pub struct Settings(BTreeMap<String, String>);

impl Settings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<()> {
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(Error::InvalidConfig(format!("unknown config key '{key}'")));
        }
        self.0
            .insert(key.to_string(), value.into().trim().to_string());
        Ok(())
    }

    /// Parse a single `key=value` assignment.
    pub fn set_assignment(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment.split_once('=').ok_or_else(|| {
            Error::InvalidConfig(format!("expected key=value, got '{assignment}'"))
        })?;
        self.set(k, v)
    }

    /// Parse config-file text: one `key=value` per line, `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut s = Self::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            s.set_assignment(line)
                .map_err(|e| Error::InvalidConfig(format!("line {}: {e}", i + 1)))?;
        }
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Later layers win.
    pub fn merge(&mut self, other: &Settings) {
        for (k, v) in &other.0 {
            self.0.insert(k.clone(), v.clone());
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|_| Error::InvalidConfig(format!("cannot parse {key}='{v}'")))
            })
            .transpose()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub params: BenchmarkParams,
    pub integrator: IntegratorConfig,
    pub n_samples: usize,
    pub master_seed: u64,
    pub x0: f64,
    pub output_path: PathBuf,
    pub models: Vec<ModelKind>,
    pub beta_list: Vec<f64>,
    pub threads: Option<usize>,
    pub desk_scale: bool,
    /// Largest RK4 step for orthogonal-dynamics characteristics.
    pub kernel_dt: f64,
    pub n_lags: usize,
    /// Lag window length in units of the linearised decay time.
    pub lag_span: f64,
    pub grid_min: f64,
    pub grid_max: f64,
    pub grid_points: usize,
    pub bins: usize,
    /// Fraction of recorded samples discarded before computing stationary statistics.
    pub burn_in: f64,
}

fn defaults(experiment: Experiment, desk: bool) -> Settings {
    let mut s = Settings::new();
    let mut put = |k: &str, v: &str| {
        s.0.insert(k.to_string(), v.to_string());
    };
    put("mu", "2");
    put("lambda", "20");
    put("tau", "2");
    put("omega", "10");
    put("beta", "1");
    put("deterministic", "false");
    put("seed", "0");
    put("models", "memory-corrected,memory-free,naive-memory");
    put("betas", "1,10,100");
    put("n_lags", "60");
    put("lag_span", "5");
    put("grid_min", "-3");
    put("grid_max", "3");
    put("grid_points", "301");
    put("bins", "101");
    put("burn_in", "0.01");
    put("x0", "0");
    put("dt", "1e-5");
    put("t_final", "1");
    put("n_samples", "2000");
    match experiment {
        Experiment::Landscape => put("out", "landscape.csv"),
        Experiment::Kernel => put("out", "kernel.csv"),
        Experiment::KernelMatrix => {
            put("out", "kernel_matrix.csv");
            put("lag_span", "10");
        }
        Experiment::MeanTrajectory => {
            put("out", "mean_trajectory.csv");
            put("x0", "2");
            put("t_final", "80");
            put("dt", if desk { "1e-4" } else { "1e-5" });
            put("n_samples", if desk { "200" } else { "500" });
        }
        Experiment::Ensemble => {
            put("out", "ensemble.csv");
            put("t_final", if desk { "32" } else { "320" });
            put("dt", if desk { "1e-4" } else { "1e-5" });
            put("n_samples", if desk { "200" } else { "500" });
        }
        Experiment::Stationary => {
            put("out", "stationary.csv");
            put("tau", "0.2");
            put("omega", "4");
            put("t_final", "2000");
            put("dt", "1e-3");
            put("n_samples", "1");
            put("record_stride", "10");
        }
    }
    s
}

fn parse_list<T: FromStr>(key: &str, raw: &str) -> Result<Vec<T>> {
    raw.split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| {
            v.parse::<T>()
                .map_err(|_| Error::InvalidConfig(format!("cannot parse '{v}' in {key}")))
        })
        .collect()
}

impl ExperimentConfig {
    /// Resolve defaults ← `overrides` into a validated configuration.
    pub fn resolve(experiment: Experiment, desk_scale: bool, overrides: &Settings) -> Result<Self> {
        let mut s = defaults(experiment, desk_scale);
        s.merge(overrides);

        let req = |key: &str| -> Result<f64> {
            s.parsed::<f64>(key)?
                .ok_or_else(|| Error::InvalidConfig(format!("missing {key}")))
        };
        let params = BenchmarkParams {
            mu: req("mu")?,
            lambda: req("lambda")?,
            tau: req("tau")?,
            omega: req("omega")?,
            beta: req("beta")?,
            deterministic: s.parsed::<bool>("deterministic")?.unwrap_or(false),
        };
        params.validate()?;

        let dt = req("dt")?;
        let record_stride = match s.parsed::<u64>("record_stride")? {
            Some(k) => k,
            None => ((0.01 / dt).round() as u64).max(1),
        };
        let integrator = IntegratorConfig::new(dt, req("t_final")?, record_stride)?;

        let n_samples = s.parsed::<usize>("n_samples")?.unwrap_or(1);
        if n_samples == 0 {
            return Err(Error::InvalidConfig("n_samples must be at least 1".into()));
        }
        let models = parse_list::<ModelKind>("models", s.get("models").unwrap_or(""))?;
        let beta_list = parse_list::<f64>("betas", s.get("betas").unwrap_or(""))?;
        if beta_list.iter().any(|b| !(b.is_finite() && *b > 0.0)) {
            return Err(Error::InvalidConfig("betas must be positive".into()));
        }
        let threads = s.parsed::<usize>("threads")?;
        if threads == Some(0) {
            return Err(Error::InvalidConfig("threads must be at least 1".into()));
        }
        let kernel_dt = match s.parsed::<f64>("kernel_dt")? {
            Some(v) => v,
            None => 1e-4 / params.lambda,
        };

        let cfg = Self {
            experiment,
            params,
            integrator,
            n_samples,
            master_seed: s.parsed::<u64>("seed")?.unwrap_or(0),
            x0: req("x0")?,
            output_path: PathBuf::from(s.get("out").unwrap_or("out.csv")),
            models,
            beta_list,
            threads,
            desk_scale,
            kernel_dt,
            n_lags: s.parsed::<usize>("n_lags")?.unwrap_or(60),
            lag_span: req("lag_span")?,
            grid_min: req("grid_min")?,
            grid_max: req("grid_max")?,
            grid_points: s.parsed::<usize>("grid_points")?.unwrap_or(301),
            bins: s.parsed::<usize>("bins")?.unwrap_or(101),
            burn_in: req("burn_in")?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if !self.x0.is_finite() {
            return bad("x0 must be finite");
        }
        match self.experiment {
            Experiment::Landscape => {
                if self.grid_points < 2 || !(self.grid_max > self.grid_min) {
                    return bad("landscape needs grid_points >= 2 and grid_max > grid_min");
                }
            }
            Experiment::Kernel | Experiment::KernelMatrix => {
                if self.n_samples < 2 {
                    return bad("kernel estimation needs n_samples >= 2");
                }
                if self.n_lags < 2 || !(self.lag_span > 0.0) || !(self.kernel_dt > 0.0) {
                    return bad("kernel needs n_lags >= 2, lag_span > 0 and kernel_dt > 0");
                }
            }
            Experiment::MeanTrajectory => {}
            Experiment::Ensemble => {
                if self.beta_list.is_empty() {
                    return bad("ensemble needs a nonempty betas list");
                }
            }
            Experiment::Stationary => {
                if self.bins < 1 || !(0.0..1.0).contains(&self.burn_in) {
                    return bad("stationary needs bins >= 1 and 0 <= burn_in < 1");
                }
            }
        }
        Ok(())
    }

    /// The resolved configuration as ordered `key=value` pairs for CSV metadata.
    ///
    /// Execution-only settings (`out`, `threads`) are left out so that output is
    /// byte-identical across output locations and thread counts.
    pub fn metadata(&self) -> Vec<(String, String)> {
        let p = &self.params;
        let models: Vec<&str> = self.models.iter().map(|m| m.name()).collect();
        let betas: Vec<String> = self.beta_list.iter().map(|b| b.to_string()).collect();
        let mut out = vec![
            ("experiment", self.experiment.name().to_string()),
            ("desk_scale", self.desk_scale.to_string()),
            ("mu", p.mu.to_string()),
            ("lambda", p.lambda.to_string()),
            ("tau", p.tau.to_string()),
            ("omega", p.omega.to_string()),
            ("beta", p.beta.to_string()),
            ("deterministic", p.deterministic.to_string()),
            ("dt", self.integrator.dt.to_string()),
            ("t_final", self.integrator.t_final.to_string()),
            ("record_stride", self.integrator.record_stride.to_string()),
            ("n_samples", self.n_samples.to_string()),
            ("seed", self.master_seed.to_string()),
            ("x0", self.x0.to_string()),
            ("models", models.join(",")),
            ("betas", betas.join(",")),
            ("kernel_dt", self.kernel_dt.to_string()),
            ("n_lags", self.n_lags.to_string()),
            ("lag_span", self.lag_span.to_string()),
            ("grid_min", self.grid_min.to_string()),
            ("grid_max", self.grid_max.to_string()),
            ("grid_points", self.grid_points.to_string()),
            ("bins", self.bins.to_string()),
            ("burn_in", self.burn_in.to_string()),
        ];
        out.retain(|(k, _)| relevant(self.experiment, k));
        out.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }

    /// Initial condition of the ensemble experiment: the first positive zero of
    /// `cos(ωx)`, placed on the valley floor.
    pub fn ensemble_start(&self) -> [f64; 2] {
        let x = PI / (2.0 * self.params.omega);
        [x, self.params.valley_floor(x)]
    }
}

fn relevant(e: Experiment, key: &str) -> bool {
    let common = [
        "experiment",
        "desk_scale",
        "mu",
        "lambda",
        "tau",
        "omega",
        "beta",
        "deterministic",
    ];
    if common.contains(&key) {
        return true;
    }
    let specific: &[&str] = match e {
        Experiment::Landscape => &["grid_min", "grid_max", "grid_points"],
        Experiment::Kernel => &["n_samples", "seed", "x0", "kernel_dt", "n_lags", "lag_span"],
        Experiment::KernelMatrix => &["n_samples", "seed", "kernel_dt", "n_lags", "lag_span"],
        Experiment::MeanTrajectory => &[
            "dt",
            "t_final",
            "record_stride",
            "n_samples",
            "seed",
            "x0",
            "models",
        ],
        Experiment::Ensemble => &[
            "dt",
            "t_final",
            "record_stride",
            "n_samples",
            "seed",
            "betas",
        ],
        Experiment::Stationary => &[
            "dt",
            "t_final",
            "record_stride",
            "n_samples",
            "seed",
            "x0",
            "bins",
            "burn_in",
        ],
    };
    specific.contains(&key)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_figure_parameters() {
        let c = ExperimentConfig::resolve(Experiment::Ensemble, false, &Settings::new()).unwrap();
        assert_eq!(c.beta_list, vec![1.0, 10.0, 100.0]);
        assert_eq!(c.n_samples, 500);
        assert_eq!(c.integrator.t_final, 320.0);
        assert_eq!(c.integrator.dt, 1e-5);
        assert_eq!(
            (c.params.lambda, c.params.mu, c.params.tau, c.params.omega),
            (20.0, 2.0, 2.0, 10.0)
        );

        let c =
            ExperimentConfig::resolve(Experiment::KernelMatrix, false, &Settings::new()).unwrap();
        assert_eq!(c.n_samples, 2000);

        let d = ExperimentConfig::resolve(Experiment::Ensemble, true, &Settings::new()).unwrap();
        assert_eq!(
            (d.integrator.dt, d.integrator.t_final, d.n_samples),
            (1e-4, 32.0, 200)
        );
        let m =
            ExperimentConfig::resolve(Experiment::MeanTrajectory, true, &Settings::new()).unwrap();
        assert_eq!(
            (m.integrator.dt, m.integrator.t_final, m.n_samples, m.x0),
            (1e-4, 80.0, 200, 2.0)
        );
        assert_eq!(m.integrator.record_stride, 100);
    }

    #[test]
    fn layering_and_errors() {
        let file = Settings::parse("# comment\nmu = 3\n\ntau=0.2 # trailing\n").unwrap();
        let mut cli = Settings::new();
        cli.set_assignment("mu=4").unwrap();
        let mut s = file.clone();
        s.merge(&cli);
        let c = ExperimentConfig::resolve(Experiment::Kernel, false, &s).unwrap();
        assert_eq!(c.params.mu, 4.0);
        assert_eq!(c.params.tau, 0.2);

        assert!(Settings::parse("bogus=1").is_err());
        assert!(Settings::parse("mu").is_err());
        let mut s = Settings::new();
        s.set("beta", "-1").unwrap();
        assert!(ExperimentConfig::resolve(Experiment::Kernel, false, &s).is_err());
        let mut s = Settings::new();
        s.set("betas", "").unwrap();
        assert!(ExperimentConfig::resolve(Experiment::Ensemble, false, &s).is_err());
        let mut s = Settings::new();
        s.set("models", "memory-free,fancy").unwrap();
        assert!(ExperimentConfig::resolve(Experiment::MeanTrajectory, false, &s).is_err());
    }

    #[test]
    fn metadata_excludes_execution_settings() {
        let mut s = Settings::new();
        s.set("threads", "8").unwrap();
        s.set("out", "/tmp/x.csv").unwrap();
        let c = ExperimentConfig::resolve(Experiment::MeanTrajectory, true, &s).unwrap();
        let keys: Vec<String> = c.metadata().into_iter().map(|(k, _)| k).collect();
        assert!(!keys.iter().any(|k| k == "threads" || k == "out"));
        assert!(keys.iter().any(|k| k == "record_stride"));
    }
}
