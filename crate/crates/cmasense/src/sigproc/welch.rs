//! Welch power spectral density estimation and noise-floor extraction.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sigproc::fft_in_place;

/// Window applied to each Welch segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Window {
    #[default]
    Hann,
}

/// One-sided power spectral density in normalized frequency.
///
/// `freqs` run from 0 to 0.5 cycles/sample; `power` is a density, so
/// `sum(power) * df` recovers the series' mean square value.
#[derive(Debug, Clone)]
pub struct PsdEstimate {
    pub freqs: Vec<f64>,
    pub power: Vec<f64>,
    pub segment_len: usize,
    pub overlap: usize,
    pub window: Window,
}

impl PsdEstimate {
    /// Frequency spacing between bins.
    pub fn df(&self) -> f64 {
        1.0 / self.segment_len as f64
    }

    /// Bin index whose center is nearest to `freq`.
    pub fn bin_of(&self, freq: f64) -> usize {
        ((freq * self.segment_len as f64).round() as usize).min(self.power.len() - 1)
    }

    /// Largest bin outside the first `dc_guard_bins` bins.
    pub fn peak_bin_excluding_dc(&self, dc_guard_bins: usize) -> usize {
        self.power
            .iter()
            .enumerate()
            .skip(dc_guard_bins)
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(i, _)| i)
            .unwrap_or(0)
    }
}

/// Welch's method on a real-valued series: averaged Hann-windowed
/// periodograms over segments with fractional overlap `overlap_frac`.
pub fn welch_psd(
    series: &[f64],
    segment_len: usize,
    overlap_frac: f64,
    window: Window,
) -> Result<PsdEstimate> {
    if segment_len < 8 {
        return Err(Error::config("segment_len must be at least 8"));
    }
    if series.len() < segment_len {
        return Err(Error::config(format!(
            "series of {} samples shorter than segment_len {}",
            series.len(),
            segment_len
        )));
    }
    if !(0.0..1.0).contains(&overlap_frac) {
        return Err(Error::config("overlap_frac must be in [0, 1)"));
    }

    let overlap = (segment_len as f64 * overlap_frac).floor() as usize;
    let step = segment_len - overlap;
    let win = make_window(window, segment_len);
    let win_power: f64 = win.iter().map(|w| w * w).sum();

    let n_bins = segment_len / 2 + 1;
    let mut acc = vec![0.0f64; n_bins];
    let mut n_segments = 0usize;
    let mut buf = vec![Complex64::default(); segment_len];
    let mut start = 0;
    while start + segment_len <= series.len() {
        for (i, slot) in buf.iter_mut().enumerate() {
            *slot = Complex64::new(series[start + i] * win[i], 0.0);
        }
        fft_in_place(&mut buf);
        for (k, slot) in acc.iter_mut().enumerate() {
            // One-sided density, fs = 1: interior bins carry both halves.
            let scale = if k == 0 || (segment_len % 2 == 0 && k == segment_len / 2) {
                1.0
            } else {
                2.0
            };
            *slot += scale * buf[k].norm_sqr() / win_power;
        }
        n_segments += 1;
        start += step;
    }
    for slot in &mut acc {
        *slot /= n_segments as f64;
    }

    Ok(PsdEstimate {
        freqs: (0..n_bins).map(|k| k as f64 / segment_len as f64).collect(),
        power: acc,
        segment_len,
        overlap,
        window,
    })
}

fn make_window(window: Window, n: usize) -> Vec<f64> {
    match window {
        // Periodic Hann, the spectral-analysis variant.
        Window::Hann => (0..n)
            .map(|i| 0.5 * (1.0 - (TAU * i as f64 / n as f64).cos()))
            .collect(),
    }
}

/// Median power of the bins outside the excluded frequency bands.
///
/// The median (rather than the mean) keeps residual leakage from the
/// excluded tones out of the floor estimate. At least 8 bins must remain.
pub fn noise_floor(psd: &PsdEstimate, exclude: &[(f64, f64)]) -> Result<f64> {
    let mut kept: Vec<f64> = psd
        .freqs
        .iter()
        .zip(&psd.power)
        .filter(|(f, _)| !exclude.iter().any(|(lo, hi)| **f >= *lo && **f <= *hi))
        .map(|(_, p)| *p)
        .collect();
    if kept.len() < 8 {
        return Err(Error::config(format!(
            "only {} bins left after exclusion; need at least 8",
            kept.len()
        )));
    }
    kept.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mid = kept.len() / 2;
    Ok(if kept.len() % 2 == 1 {
        kept[mid]
    } else {
        0.5 * (kept[mid - 1] + kept[mid])
    })
}

/// Default exclusion bands for a sensing PSD: the DC region plus the tone
/// at `f0` and its first 3 harmonics, each with `guard_bins` of margin.
pub fn tone_exclusion_bands(f0: f64, df: f64, dc_bins: usize, guard_bins: usize) -> Vec<(f64, f64)> {
    let mut bands = vec![(0.0, dc_bins as f64 * df)];
    for harmonic in 1..=4 {
        let f = f0 * harmonic as f64;
        bands.push((f - guard_bins as f64 * df, f + guard_bins as f64 * df));
    }
    bands
}
