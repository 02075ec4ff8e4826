//! Single runs and parameter sweeps, with their files on disk.
//!
//! A run directory holds:
//!
//! - `timeseries.csv`: `tau, q, p, x1..x4, y1..y4` and the monitored observables
//!   (`timeseries.partial.csv` if integration stopped early);
//! - `spectrum_q.csv`, `spectrum_x1.csv`: `freq, amplitude`;
//! - `config.toml`: the fully resolved config, enough to repeat the run;
//! - `summary.toml`: drifts, Lyapunov estimate, verdicts and the file manifest.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::config::{ConfigError, RunConfig};
use crate::diagnostics::{
    conservation_drift, lyapunov_benettin, relative_drift, AmplitudeSpectrum, ChaosReport, DiagnosticsError,
    LyapunovEstimate, Verdict,
};
use crate::integrator::{IntegrateError, Integrator, Trajectory};

pub const TIMESERIES_FILE: &str = "timeseries.csv";
pub const PARTIAL_TIMESERIES_FILE: &str = "timeseries.partial.csv";
pub const SUMMARY_FILE: &str = "summary.toml";
pub const CONFIG_ECHO_FILE: &str = "config.toml";
pub const SWEEP_TABLE_FILE: &str = "sweep.csv";

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    /// The partial outputs have been written to `output_dir`.
    #[error("integration failed ({output_dir} holds the partial run): {source}")]
    Integrate { source: IntegrateError, output_dir: PathBuf },
    #[error("diagnostics failed: {0}")]
    Diagnostics(DiagnosticsError),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Completed,
    Failed,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub name: String,
    pub status: RunStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub model: String,
    pub scheme: String,
    /// The run-level verdict, read from the `q` series.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<Verdict>,
    pub final_time: f64,
    pub samples: usize,
    pub wall_clock_seconds: f64,
    pub output_dir: PathBuf,
    pub defaults: Vec<String>,
    pub warnings: Vec<String>,
    /// `max |v(t) - v(0)|` per monitored observable, plus `energy_relative`.
    pub drift: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lyapunov: Option<LyapunovEstimate>,
    pub reports: Vec<ChaosReport>,
    pub files: Vec<PathBuf>,
    /// The resolved config, as written to `config.toml`.
    pub config: String,
}

impl RunSummary {
    fn start(cfg: &RunConfig, dir: &Path) -> Self {
        Self {
            name: cfg.name.clone(),
            status: RunStatus::Failed,
            error: None,
            model: cfg.model.kind.name().to_string(),
            scheme: cfg.integrator.scheme.clone(),
            verdict: None,
            final_time: 0.0,
            samples: 0,
            wall_clock_seconds: 0.0,
            output_dir: dir.to_path_buf(),
            defaults: cfg.defaults.clone(),
            warnings: cfg.warnings.clone(),
            drift: BTreeMap::new(),
            lyapunov: None,
            reports: Vec::new(),
            files: Vec::new(),
            config: cfg.to_toml(),
        }
    }

    pub fn report(&self, series: &str) -> Option<&ChaosReport> {
        self.reports.iter().find(|r| r.series == series)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("summary serialises")
    }
}

/// Runs `cfg` into [`RunConfig::output_dir`].
pub fn run(cfg: &RunConfig) -> Result<RunSummary, RunError> {
    run_in(cfg, &cfg.output_dir())
}

/// Runs `cfg` with its files written to `dir`.
pub fn run_in(cfg: &RunConfig, dir: &Path) -> Result<RunSummary, RunError> {
    let clock = Instant::now();
    fs::create_dir_all(dir).map_err(|source| RunError::Io { path: dir.to_path_buf(), source })?;
    let mut summary = RunSummary::start(cfg, dir);
    let model = cfg.build_model();
    let s0 = cfg.initial_state();
    let integrator = Integrator::new(&cfg.integrator).map_err(|e| ConfigError::Invalid {
        key: "integrator".into(),
        message: e.to_string(),
    })?;

    let integrated = integrator.integrate_partial(&s0, &model, model.monitored_set(), cfg.horizon, cfg.sample_every);
    let traj = match integrated {
        Ok(traj) => traj,
        Err((partial, source)) => {
            summary.files.push(write_timeseries(dir, PARTIAL_TIMESERIES_FILE, &partial)?);
            summary.files.push(write_text(dir, CONFIG_ECHO_FILE, &summary.config)?);
            summary.final_time = partial.times.last().copied().unwrap_or(0.0);
            summary.samples = partial.len();
            return Err(fail(summary, dir, clock, source));
        }
    };
    summary.final_time = traj.times.last().copied().unwrap_or(0.0);
    summary.samples = traj.len();
    summary.files.push(write_timeseries(dir, TIMESERIES_FILE, &traj)?);
    summary.files.push(write_text(dir, CONFIG_ECHO_FILE, &summary.config)?);

    for label in traj.labels() {
        summary.drift.insert(label.to_string(), conservation_drift(&traj, label).map_err(RunError::Diagnostics)?);
    }
    summary.drift.insert("energy_relative".into(), relative_drift(&traj, "energy").map_err(RunError::Diagnostics)?);

    if cfg.diagnostics.lyapunov {
        match lyapunov_benettin(&model, &s0, &cfg.integrator, &cfg.diagnostics.benettin) {
            Ok(est) => summary.lyapunov = Some(est),
            Err(DiagnosticsError::Integrate(source)) => return Err(fail(summary, dir, clock, source)),
            Err(e) => return Err(RunError::Diagnostics(e)),
        }
    }

    if cfg.diagnostics.spectra {
        let dt_sample = cfg.integrator.dt * cfg.sample_every as f64;
        let lambda = summary.lyapunov.map(|l| l.exponent);
        for (series, values) in [("q", traj.q_series()), ("x1", traj.x_series(0))] {
            let (report, spectrum) =
                ChaosReport::from_series(series, &values, dt_sample, lambda, cfg.diagnostics.thresholds)
                    .map_err(RunError::Diagnostics)?;
            summary.files.push(write_spectrum(dir, &format!("spectrum_{series}.csv"), &spectrum)?);
            summary.reports.push(report);
        }
        summary.verdict = summary.report("q").map(|r| r.verdict);
    }

    summary.status = RunStatus::Completed;
    summary.wall_clock_seconds = clock.elapsed().as_secs_f64();
    summary.files.push(dir.join(SUMMARY_FILE));
    write_text(dir, SUMMARY_FILE, &summary.to_toml())?;
    Ok(summary)
}

fn fail(mut summary: RunSummary, dir: &Path, clock: Instant, source: IntegrateError) -> RunError {
    summary.error = Some(source.to_string());
    summary.wall_clock_seconds = clock.elapsed().as_secs_f64();
    summary.files.push(dir.join(SUMMARY_FILE));
    if let Err(e) = write_text(dir, SUMMARY_FILE, &summary.to_toml()) {
        return e;
    }
    RunError::Integrate { source, output_dir: dir.to_path_buf() }
}

fn create(dir: &Path, file: &str) -> Result<(PathBuf, BufWriter<fs::File>), RunError> {
    let path = dir.join(file);
    let f = fs::File::create(&path).map_err(|source| RunError::Io { path: path.clone(), source })?;
    Ok((path, BufWriter::new(f)))
}

fn finish(path: PathBuf, result: std::io::Result<()>) -> Result<PathBuf, RunError> {
    result.map(|_| path.clone()).map_err(|source| RunError::Io { path, source })
}

fn write_text(dir: &Path, file: &str, text: &str) -> Result<PathBuf, RunError> {
    let path = dir.join(file);
    let result = fs::write(&path, text);
    finish(path, result)
}

/// Floats are written with `{:e}`, the shortest form that round-trips, so
/// identical runs give byte-identical files.
pub fn write_timeseries(dir: &Path, file: &str, traj: &Trajectory) -> Result<PathBuf, RunError> {
    let (path, mut w) = create(dir, file)?;
    let result = (|| {
        let mut header = vec!["tau", "q", "p", "x1", "x2", "x3", "x4", "y1", "y2", "y3", "y4"];
        header.extend(traj.labels());
        writeln!(w, "{}", header.join(","))?;
        let columns: Vec<&[f64]> = traj.labels().map(|l| traj.observable_values(l).expect("own label")).collect();
        for (i, (t, s)) in traj.times.iter().zip(&traj.states).enumerate() {
            write!(w, "{t:e},{:e},{:e}", s.q, s.p)?;
            for v in s.quantum.x.iter().chain(&s.quantum.y) {
                write!(w, ",{v:e}")?;
            }
            for c in &columns {
                write!(w, ",{:e}", c[i])?;
            }
            writeln!(w)?;
        }
        w.flush()
    })();
    finish(path, result)
}

pub fn write_spectrum(dir: &Path, file: &str, sp: &AmplitudeSpectrum) -> Result<PathBuf, RunError> {
    let (path, mut w) = create(dir, file)?;
    let result = (|| {
        writeln!(w, "freq,amplitude")?;
        for (f, a) in sp.freqs.iter().zip(&sp.amps) {
            writeln!(w, "{f:e},{a:e}")?;
        }
        w.flush()
    })();
    finish(path, result)
}

/// One point of a sweep. Failed points keep a summary with `status = failed`.
#[derive(Clone, Debug)]
pub struct SweepPoint {
    pub value: f64,
    pub summary: RunSummary,
}

/// Runs `base` once per value of the model parameter `axis`, in parallel,
/// into `<output_dir>/sweep-<axis>/<axis>=<value>/`, and writes `sweep.csv`
/// there. Results are in input order; a failing point does not stop the rest.
pub fn sweep(base: &RunConfig, axis: &str, values: &[f64]) -> Result<Vec<SweepPoint>, RunError> {
    if let Err(e) = base.model.get(axis) {
        return Err(ConfigError::Invalid { key: format!("model.{axis}"), message: e.to_string() }.into());
    }
    if values.is_empty() {
        return Ok(Vec::new());
    }
    let root = base.output_dir().join(format!("sweep-{axis}"));
    fs::create_dir_all(&root).map_err(|source| RunError::Io { path: root.clone(), source })?;

    let points: Vec<SweepPoint> = values
        .par_iter()
        .map(|&value| {
            let mut cfg = base.clone();
            cfg.name = format!("{axis}={value}");
            let dir = root.join(&cfg.name);
            let result = cfg.set_parameter(axis, value).map_err(RunError::from).and_then(|_| run_in(&cfg, &dir));
            let summary = result.unwrap_or_else(|e| {
                let mut s = RunSummary::start(&cfg, &dir);
                s.error = Some(e.to_string());
                s
            });
            SweepPoint { value, summary }
        })
        .collect();

    write_sweep_table(&root, axis, &points)?;
    Ok(points)
}

fn write_sweep_table(dir: &Path, axis: &str, points: &[SweepPoint]) -> Result<PathBuf, RunError> {
    let (path, mut w) = create(dir, SWEEP_TABLE_FILE)?;
    let opt = |v: Option<f64>| v.map(|v| format!("{v:e}")).unwrap_or_default();
    let result = (|| {
        writeln!(
            w,
            "{axis},status,verdict,lyapunov,q_peak_fraction,q_flatness,x1_verdict,x1_peak_fraction,x1_flatness,energy_drift_relative,error"
        )?;
        for p in points {
            let s = &p.summary;
            let q = s.report("q");
            let x1 = s.report("x1");
            let status = match s.status {
                RunStatus::Completed => "completed",
                RunStatus::Failed => "failed",
            };
            writeln!(
                w,
                "{:e},{status},{},{},{},{},{},{},{},{},\"{}\"",
                p.value,
                s.verdict.map(|v| v.to_string()).unwrap_or_default(),
                opt(s.lyapunov.map(|l| l.exponent)),
                opt(q.map(|r| r.dominant_peak_fraction)),
                opt(q.map(|r| r.spectral_flatness)),
                x1.map(|r| r.verdict.to_string()).unwrap_or_default(),
                opt(x1.map(|r| r.dominant_peak_fraction)),
                opt(x1.map(|r| r.spectral_flatness)),
                opt(s.drift.get("energy_relative").copied()),
                s.error.as_deref().unwrap_or("").replace('"', "'"),
            )?;
        }
        w.flush()
    })();
    finish(path, result)
}
