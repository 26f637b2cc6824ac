//! Receiver front end: IQ orthogonalization, carrier frequency offset
//! estimation, and Gardner timing recovery.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sigproc::{fft_in_place, interp_sinc, DualPolFrame};

/// Gram-Schmidt orthogonalization of the I/Q rails, per polarization.
///
/// Output rails have zero sample cross-correlation and equal power,
/// normalized so each polarization has unit mean complex power (an input
/// that is already orthogonal with that normalization passes through
/// unchanged).
pub fn gsop_orthogonalize(frame: &DualPolFrame) -> Result<DualPolFrame> {
    let mut out = frame.clone();
    out.map_in_place(|pol| {
        let n = pol.len() as f64;
        let p_i: f64 = pol.iter().map(|s| s.re * s.re).sum::<f64>() / n;
        if p_i <= 0.0 {
            pol.clear(); // flagged below
            return;
        }
        let i_scale = 1.0 / (2.0 * p_i).sqrt(); // rail rms -> 1/sqrt(2)
        let rho: f64 = pol.iter().map(|s| s.re * s.im).sum::<f64>() / n / p_i;
        let p_q: f64 = pol
            .iter()
            .map(|s| {
                let qt = s.im - rho * s.re;
                qt * qt
            })
            .sum::<f64>()
            / n;
        if p_q <= 0.0 {
            pol.clear();
            return;
        }
        let q_scale = 1.0 / (2.0 * p_q).sqrt();
        for s in pol.iter_mut() {
            let i = s.re * i_scale;
            let q = (s.im - rho * s.re) * q_scale;
            *s = Complex64::new(i, q);
        }
    });
    if out.x.len() != frame.x.len() || out.y.len() != frame.y.len() {
        return Err(Error::diagnostic("GSOP found a zero-power rail"));
    }
    Ok(out)
}

/// Result of the 4th-power CFO search.
#[derive(Debug, Clone, Copy)]
pub struct CfoEstimate {
    /// Estimated offset in cycles per symbol.
    pub cfo_norm: f64,
    /// False when the spectral peak is ambiguous (ratio to the runner-up
    /// below 2).
    pub confident: bool,
    pub peak_ratio: f64,
}

/// 4th-power spectral CFO estimator for QPSK; valid for |cfo| < 1/8 of the
/// symbol rate. The absolute error is below one FFT bin (1/(4*N) cycles
/// per sample).
pub fn cfo_estimate(frame: &DualPolFrame) -> Result<CfoEstimate> {
    if frame.len() < 64 {
        return Err(Error::config("CFO estimation needs at least 64 samples"));
    }
    let n = (frame.len().min(1 << 20)).next_power_of_two() >> 1;
    let mut spectrum = vec![0.0f64; n];
    let mut buf = vec![Complex64::default(); n];
    for pol in [&frame.x, &frame.y] {
        for (slot, s) in buf.iter_mut().zip(pol.iter()) {
            let s2 = s * s;
            *slot = s2 * s2;
        }
        fft_in_place(&mut buf);
        for (acc, v) in spectrum.iter_mut().zip(buf.iter()) {
            *acc += v.norm_sqr();
        }
    }

    // Search |f| < (4 * 1/8) / sps per sample, which keeps the clock tones
    // of a shaped input out of range.
    let limit = 0.5 / frame.samples_per_symbol;
    let in_range = |k: usize| -> bool {
        let f = if k <= n / 2 {
            k as f64 / n as f64
        } else {
            k as f64 / n as f64 - 1.0
        };
        f.abs() < limit
    };
    let peak_bin = (0..n)
        .filter(|k| in_range(*k))
        .max_by(|a, b| spectrum[*a].partial_cmp(&spectrum[*b]).unwrap())
        .ok_or_else(|| Error::config("empty CFO search range"))?;
    let runner_up = (0..n)
        .filter(|k| {
            let d = (*k as i64 - peak_bin as i64).unsigned_abs() as usize;
            in_range(*k) && d.min(n - d) > 3
        })
        .map(|k| spectrum[k])
        .fold(0.0f64, f64::max);
    let peak_ratio = if runner_up > 0.0 {
        spectrum[peak_bin] / runner_up
    } else {
        f64::INFINITY
    };

    let f_sample = if peak_bin <= n / 2 {
        peak_bin as f64 / n as f64
    } else {
        peak_bin as f64 / n as f64 - 1.0
    };
    Ok(CfoEstimate {
        cfo_norm: f_sample * frame.samples_per_symbol / 4.0,
        confident: peak_ratio >= 2.0,
        peak_ratio,
    })
}

/// Gains for the Gardner timing loop's proportional-integral filter.
#[derive(Debug, Clone, Copy)]
pub struct GardnerConfig {
    pub gain_p: f64,
    pub gain_i: f64,
}

impl Default for GardnerConfig {
    fn default() -> Self {
        GardnerConfig {
            gain_p: 2e-3,
            gain_i: 1e-5,
        }
    }
}

/// Gardner timing recovery: 2 samples/symbol in, 1 sample/symbol out.
///
/// A Gardner timing error detector on both polarizations jointly drives a
/// PI loop steering a cubic interpolator. Reports a diagnostic error when
/// the error variance grows over the final quarter of the run.
pub fn gardner_timing(frame: &DualPolFrame, cfg: GardnerConfig) -> Result<DualPolFrame> {
    let sps = frame.samples_per_symbol;
    if (sps - 2.0).abs() > 1e-9 {
        return Err(Error::config(format!(
            "gardner_timing expects 2 samples/symbol, got {sps}"
        )));
    }
    if frame.len() < 64 {
        return Err(Error::config("timing recovery needs at least 64 samples"));
    }

    let mut out_x = Vec::with_capacity(frame.len() / 2);
    let mut out_y = Vec::with_capacity(frame.len() / 2);
    let mut errors = Vec::with_capacity(frame.len() / 2);

    let mut t = 4.0f64; // leave room for the interpolator kernel
    let mut integrator = 0.0f64;
    let mut prev_x = Complex64::default();
    let mut prev_y = Complex64::default();
    let mut have_prev = false;
    let end = frame.len() as f64 - 3.0;

    while t < end {
        let sx = interp_sinc(&frame.x, t);
        let sy = interp_sinc(&frame.y, t);
        let mx = interp_sinc(&frame.x, t - 1.0);
        let my = interp_sinc(&frame.y, t - 1.0);
        let mut adjust = 0.0;
        if have_prev {
            // e > 0 means the strobes ride the rising part of the pulse:
            // sampling early, so stretch the next period.
            let e = (mx * (prev_x - sx).conj()).re + (my * (prev_y - sy).conj()).re;
            integrator += cfg.gain_i * e;
            adjust = cfg.gain_p * e + integrator;
            errors.push(e);
        }
        out_x.push(sx);
        out_y.push(sy);
        prev_x = sx;
        prev_y = sy;
        have_prev = true;
        t += 2.0 + adjust;
    }

    // Divergence guard: compare error variance of the last quarter with
    // the quarter before it.
    let q = errors.len() / 4;
    if q > 16 {
        let var = |s: &[f64]| -> f64 {
            let m = s.iter().sum::<f64>() / s.len() as f64;
            s.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / s.len() as f64
        };
        let last = var(&errors[3 * q..]);
        let prior = var(&errors[2 * q..3 * q]);
        if last > 4.0 * prior.max(1e-12) {
            return Err(Error::diagnostic(format!(
                "timing loop diverging: error variance {last:.3e} vs {prior:.3e}"
            )));
        }
    }

    let mut out = DualPolFrame::new(out_x, out_y, 1.0)?;
    out.symbol_rate_norm = frame.symbol_rate_norm;
    Ok(out)
}
