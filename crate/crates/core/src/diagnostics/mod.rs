//! Regular-versus-chaotic indicators for hybrid trajectories.

mod lyapunov;
mod spectrum;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::integrator::{IntegrateError, Trajectory};

pub use lyapunov::{lyapunov_benettin, LyapunovEstimate, LyapunovSettings};
pub use spectrum::{
    amplitude_spectrum, dominant_peak_fraction, hann_window, pure_tone_flatness, spectral_flatness, AmplitudeSpectrum,
    SpectralPeak, FLATNESS_FLOOR, MIN_SAMPLES,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error("spectrum needs at least {need} samples, got {got}")]
    TooFewSamples { got: usize, need: usize },
    #[error("{0}")]
    InvalidArgument(String),
    #[error("`{0}` is not recorded on this trajectory")]
    UnknownObservable(String),
    #[error("trajectory separation left the usable range at t = {time} (d/d0 = {ratio:e}); choose a different d0")]
    SeparationOutOfRange { time: f64, ratio: f64 },
    #[error(transparent)]
    Integrate(#[from] IntegrateError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Regular,
    Chaotic,
    Indeterminate,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Regular => "regular",
            Verdict::Chaotic => "chaotic",
            Verdict::Indeterminate => "indeterminate",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerdictThresholds {
    pub regular_max_abs_lyapunov: f64,
    pub regular_min_peak_fraction: f64,
    pub chaotic_min_lyapunov: f64,
    /// Required ratio of the series' flatness to the pure-tone flatness.
    pub chaotic_flatness_factor: f64,
}

impl Default for VerdictThresholds {
    fn default() -> Self {
        Self {
            regular_max_abs_lyapunov: 1e-3,
            regular_min_peak_fraction: 0.8,
            chaotic_min_lyapunov: 5e-3,
            chaotic_flatness_factor: 10.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChaosReport {
    pub series: String,
    pub lyapunov: Option<f64>,
    pub dominant_peak_fraction: f64,
    pub spectral_flatness: f64,
    pub pure_tone_flatness: f64,
    pub verdict: Verdict,
    pub thresholds: VerdictThresholds,
}

pub fn classify(
    lyapunov: Option<f64>,
    peak_fraction: f64,
    flatness: f64,
    tone_flatness: f64,
    th: &VerdictThresholds,
) -> Verdict {
    let Some(lambda) = lyapunov else { return Verdict::Indeterminate };
    if lambda.abs() < th.regular_max_abs_lyapunov && peak_fraction > th.regular_min_peak_fraction {
        Verdict::Regular
    } else if lambda > th.chaotic_min_lyapunov && flatness >= th.chaotic_flatness_factor * tone_flatness {
        Verdict::Chaotic
    } else {
        Verdict::Indeterminate
    }
}

impl ChaosReport {
    pub fn from_series(
        name: &str,
        series: &[f64],
        dt_sample: f64,
        lyapunov: Option<f64>,
        thresholds: VerdictThresholds,
    ) -> Result<(Self, AmplitudeSpectrum), DiagnosticsError> {
        let sp = amplitude_spectrum(series, dt_sample)?;
        let dpf = dominant_peak_fraction(&sp);
        let flatness = spectral_flatness(&sp);
        let tone = pure_tone_flatness(series.len(), dt_sample)?;
        let verdict = classify(lyapunov, dpf, flatness, tone, &thresholds);
        let report = ChaosReport {
            series: name.to_string(),
            lyapunov,
            dominant_peak_fraction: dpf,
            spectral_flatness: flatness,
            pure_tone_flatness: tone,
            verdict,
            thresholds,
        };
        Ok((report, sp))
    }
}

/// `max_t |v(t) - v(0)|` for a recorded observable.
pub fn conservation_drift(traj: &Trajectory, label: &str) -> Result<f64, DiagnosticsError> {
    let values = traj.observable_values(label).ok_or_else(|| DiagnosticsError::UnknownObservable(label.into()))?;
    let Some(&first) = values.first() else { return Ok(0.0) };
    Ok(values.iter().map(|v| (v - first).abs()).fold(0.0, f64::max))
}

/// Drift divided by `|v(0)|`, or the absolute drift when `v(0) = 0`.
pub fn relative_drift(traj: &Trajectory, label: &str) -> Result<f64, DiagnosticsError> {
    let drift = conservation_drift(traj, label)?;
    let first = traj.observable_values(label).and_then(|v| v.first().copied()).unwrap_or(0.0);
    Ok(if first != 0.0 { drift / first.abs() } else { drift })
}

#[cfg(test)]
mod tests;
