//! One-sided Fourier amplitude spectra and the two scalar summaries used to
//! tell line spectra from broadband ones.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::DiagnosticsError;

pub const MIN_SAMPLES: usize = 16;

/// Power bins below this fraction of the strongest bin are clamped up to it
/// before the geometric mean is taken.
pub const FLATNESS_FLOOR: f64 = 1e-15;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeSpectrum {
    /// Cycles per unit time, starting at 0.
    pub freqs: Vec<f64>,
    pub amps: Vec<f64>,
    /// Mean square of the windowed, mean-removed series.
    pub windowed_power: f64,
    /// Same quantity recovered from the two-sided transform.
    pub spectral_power: f64,
}

/// Peak location refined between bins.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralPeak {
    pub bin: usize,
    pub freq: f64,
    pub amplitude: f64,
}

impl AmplitudeSpectrum {
    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn power(&self) -> impl Iterator<Item = f64> + '_ {
        self.amps.iter().map(|a| a * a)
    }

    pub fn peak_bin(&self) -> Option<usize> {
        self.amps
            .iter()
            .enumerate()
            .fold(None, |best: Option<(usize, f64)>, (i, &a)| match best {
                Some((_, b)) if b >= a => best,
                _ => Some((i, a)),
            })
            .map(|(i, _)| i)
    }

    /// Strongest line, with frequency and amplitude corrected for where the
    /// tone falls between bins.
    ///
    /// For a Hann window the neighbour ratio `r = A[k±1]/A[k]` of a pure tone
    /// at offset `δ` satisfies `δ = (2r - 1)/(r + 1)`, and the bin itself is
    /// attenuated by `sinc(δ)/(1 - δ²)`.
    pub fn dominant_peak(&self) -> Option<SpectralPeak> {
        let k = self.peak_bin()?;
        let peak = self.amps[k];
        if peak == 0.0 {
            return None;
        }
        let df = if self.freqs.len() > 1 { self.freqs[1] - self.freqs[0] } else { 0.0 };
        let left = if k > 0 { self.amps[k - 1] } else { 0.0 };
        let right = self.amps.get(k + 1).copied().unwrap_or(0.0);
        let (ratio, sign) = if right >= left { (right / peak, 1.0) } else { (left / peak, -1.0) };
        let delta = ((2.0 * ratio - 1.0) / (ratio + 1.0)).clamp(0.0, 0.5);
        let gain = if delta == 0.0 { 1.0 } else { ((PI * delta).sin() / (PI * delta)) / (1.0 - delta * delta) };
        Some(SpectralPeak { bin: k, freq: self.freqs[k] + sign * delta * df, amplitude: peak / gain })
    }
}

/// Periodic Hann window; a tone centred on a bin leaks only into its two neighbours.
pub fn hann_window(n: usize) -> Vec<f64> {
    (0..n).map(|i| 0.5 * (1.0 - (2.0 * PI * i as f64 / n as f64).cos())).collect()
}

/// Magnitude spectrum of the mean-removed, Hann-windowed series.
///
/// Scaled so a unit-amplitude sinusoid centred on a bin reads 1.0 there:
/// interior bins are `2|X_k|/Σw`, the DC and Nyquist bins `|X_k|/Σw`.
pub fn amplitude_spectrum(series: &[f64], dt_sample: f64) -> Result<AmplitudeSpectrum, DiagnosticsError> {
    let n = series.len();
    if n < MIN_SAMPLES {
        return Err(DiagnosticsError::TooFewSamples { got: n, need: MIN_SAMPLES });
    }
    if !(dt_sample > 0.0 && dt_sample.is_finite()) {
        return Err(DiagnosticsError::InvalidArgument(format!("sample spacing must be positive (got {dt_sample})")));
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let window = hann_window(n);
    let window_sum: f64 = window.iter().sum();
    let mut buf: Vec<Complex64> =
        series.iter().zip(&window).map(|(s, w)| Complex64::new((s - mean) * w, 0.0)).collect();
    let windowed_power = buf.iter().map(|z| z.re * z.re).sum::<f64>() / n as f64;

    FftPlanner::<f64>::new().plan_fft_forward(n).process(&mut buf);

    let spectral_power = buf.iter().map(|z| z.norm_sqr()).sum::<f64>() / (n as f64 * n as f64);
    let half = n / 2;
    let mut freqs = Vec::with_capacity(half + 1);
    let mut amps = Vec::with_capacity(half + 1);
    for (k, z) in buf.iter().take(half + 1).enumerate() {
        let edge = k == 0 || (n % 2 == 0 && k == half);
        let factor = if edge { 1.0 } else { 2.0 };
        freqs.push(k as f64 / (n as f64 * dt_sample));
        amps.push(factor * z.norm() / window_sum);
    }
    Ok(AmplitudeSpectrum { freqs, amps, windowed_power, spectral_power })
}

/// Share of total power in the strongest bin and its two neighbours.
/// A silent spectrum gives 0.
pub fn dominant_peak_fraction(sp: &AmplitudeSpectrum) -> f64 {
    let total: f64 = sp.power().sum();
    if total == 0.0 {
        return 0.0;
    }
    let Some(k) = sp.peak_bin() else { return 0.0 };
    let lo = k.saturating_sub(1);
    let hi = (k + 1).min(sp.len() - 1);
    let peak: f64 = sp.amps[lo..=hi].iter().map(|a| a * a).sum();
    (peak / total).clamp(0.0, 1.0)
}

/// Geometric over arithmetic mean of the power bins. A silent spectrum gives 0.
pub fn spectral_flatness(sp: &AmplitudeSpectrum) -> f64 {
    let max = sp.power().fold(0.0, f64::max);
    if max == 0.0 || sp.is_empty() {
        return 0.0;
    }
    let floor = FLATNESS_FLOOR * max;
    let n = sp.len() as f64;
    let (log_sum, sum) = sp.power().map(|p| p.max(floor)).fold((0.0, 0.0), |(l, s), p| (l + p.ln(), s + p));
    ((log_sum / n).exp() / (sum / n)).clamp(0.0, 1.0)
}

/// Flatness of a unit tone centred on a bin, for a series of `n` samples.
/// Reference level against which broadband content is judged.
pub fn pure_tone_flatness(n: usize, dt_sample: f64) -> Result<f64, DiagnosticsError> {
    let bin = (n / 8).max(1);
    let freq = bin as f64 / (n as f64 * dt_sample);
    let tone: Vec<f64> = (0..n).map(|i| (2.0 * PI * freq * i as f64 * dt_sample).sin()).collect();
    Ok(spectral_flatness(&amplitude_spectrum(&tone, dt_sample)?))
}
