//! Dual-polarization complex signal primitives: frames, FIR filtering,
//! interpolation, pulse shaping, rational resampling and spectral
//! estimation.

use num_complex::Complex64;

use crate::error::{Error, Result};

mod resample;
mod rrc;
mod welch;

pub use resample::resample_rational;
pub use rrc::rrc_taps;
pub use welch::{noise_floor, tone_exclusion_bands, welch_psd, PsdEstimate, Window};

/// A dual-polarization complex sample stream plus rate metadata.
///
/// Both polarizations always have the same length. Rates are normalized to
/// the symbol period: `samples_per_symbol` is the oversampling factor and
/// `symbol_rate_norm` only matters when results are labeled in absolute
/// units.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPolFrame {
    pub x: Vec<Complex64>,
    pub y: Vec<Complex64>,
    pub samples_per_symbol: f64,
    pub symbol_rate_norm: f64,
}

impl DualPolFrame {
    pub fn new(x: Vec<Complex64>, y: Vec<Complex64>, samples_per_symbol: f64) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::config(format!(
                "polarization length mismatch: {} vs {}",
                x.len(),
                y.len()
            )));
        }
        if !(samples_per_symbol > 0.0) {
            return Err(Error::config("samples_per_symbol must be positive"));
        }
        Ok(DualPolFrame {
            x,
            y,
            samples_per_symbol,
            symbol_rate_norm: 1.0,
        })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Mean complex sample power over both polarizations.
    pub fn mean_power(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let total: f64 = self
            .x
            .iter()
            .chain(self.y.iter())
            .map(|s| s.norm_sqr())
            .sum();
        total / (2 * self.len()) as f64
    }

    /// Apply `f` to both polarizations in place.
    pub fn map_in_place(&mut self, mut f: impl FnMut(&mut Vec<Complex64>)) {
        f(&mut self.x);
        f(&mut self.y);
    }
}

/// Linear convolution with "same" alignment: the output has the input
/// length and the filter's group delay `(taps.len()-1)/2` is removed.
pub fn fir_filter(frame: &DualPolFrame, taps: &[f64]) -> Result<DualPolFrame> {
    if taps.is_empty() {
        return Err(Error::config("FIR filter needs at least one tap"));
    }
    Ok(DualPolFrame {
        x: fir_filter_seq(&frame.x, taps),
        y: fir_filter_seq(&frame.y, taps),
        samples_per_symbol: frame.samples_per_symbol,
        symbol_rate_norm: frame.symbol_rate_norm,
    })
}

/// Single-sequence "same" convolution with real taps.
pub fn fir_filter_seq(input: &[Complex64], taps: &[f64]) -> Vec<Complex64> {
    let n = input.len();
    let m = taps.len();
    let offset = (m - 1) / 2;
    let mut out = vec![Complex64::default(); n];
    for (i, slot) in out.iter_mut().enumerate() {
        let mut acc = Complex64::default();
        // y[i] = sum_k h[k] * x[i + offset - k], zero outside the input.
        let hi = (i + offset).min(m - 1);
        let lo = (i + offset).saturating_sub(n - 1);
        for k in lo..=hi {
            acc += taps[k] * input[i + offset - k];
        }
        *slot = acc;
    }
    out
}

/// Third-order (4-point) Lagrange interpolation of `data` at fractional
/// index `t`. Out-of-range points read as zero.
pub fn interp_cubic(data: &[Complex64], t: f64) -> Complex64 {
    let base = t.floor();
    let mu = t - base;
    let base = base as i64;
    let sample = |idx: i64| -> Complex64 {
        if idx < 0 || idx as usize >= data.len() {
            Complex64::default()
        } else {
            data[idx as usize]
        }
    };
    let p0 = sample(base - 1);
    let p1 = sample(base);
    let p2 = sample(base + 1);
    let p3 = sample(base + 2);
    let w0 = -mu * (mu - 1.0) * (mu - 2.0) / 6.0;
    let w1 = (mu * mu - 1.0) * (mu - 2.0) / 2.0;
    let w2 = -mu * (mu + 1.0) * (mu - 2.0) / 2.0;
    let w3 = mu * (mu * mu - 1.0) / 6.0;
    p0 * w0 + p1 * w1 + p2 * w2 + p3 * w3
}

const SINC_TAPS: usize = 16;

/// 16-point Blackman-windowed sinc interpolation of `data` at fractional
/// index `t`.
///
/// Accurate to ~3e-4 for content up to 0.275 of the sample rate, which is
/// what the timing loop needs when it strobes a 2 samples/symbol waveform
/// at arbitrary phases (the cubic kernel is percent-level there).
/// Out-of-range points read as zero.
pub fn interp_sinc(data: &[Complex64], t: f64) -> Complex64 {
    let base = t.floor();
    let mu = t - base;
    let base = base as i64;
    if mu < 1e-12 {
        return if base < 0 || base as usize >= data.len() {
            Complex64::default()
        } else {
            data[base as usize]
        };
    }
    let half = (SINC_TAPS / 2) as i64;
    // sinc(k - mu) = (-1)^(k+1) * sin(pi*mu) / (pi*(k - mu)) for integer k;
    // one sine evaluation covers every tap. The global sign washes out in
    // the normalization.
    let sin_pi_mu = (std::f64::consts::PI * mu).sin();
    // Blackman window cosines advance by a fixed angle per tap; run them
    // as a complex rotor instead of calling cos() per tap.
    let u0 = ((1 - half) as f64 - mu + half as f64) / SINC_TAPS as f64;
    let dtheta = std::f64::consts::TAU / SINC_TAPS as f64;
    let mut rot = Complex64::from_polar(1.0, std::f64::consts::TAU * u0);
    let step = Complex64::from_polar(1.0, dtheta);

    let mut weights = [0.0f64; SINC_TAPS];
    let mut sum = 0.0;
    for (j, w) in weights.iter_mut().enumerate() {
        let k = j as i64 + 1 - half; // taps at base-(half-1) .. base+half
        let x = k as f64 - mu;
        let sign = if k & 1 == 0 { 1.0 } else { -1.0 };
        let sinc = sign * sin_pi_mu / (std::f64::consts::PI * x);
        let cos1 = rot.re;
        let cos2 = 2.0 * cos1 * cos1 - 1.0;
        let win = 0.42 - 0.5 * cos1 + 0.08 * cos2;
        *w = sinc * win;
        sum += *w;
        rot *= step;
    }
    let mut acc = Complex64::default();
    for (j, w) in weights.iter().enumerate() {
        let idx = base + j as i64 + 1 - half;
        if idx >= 0 && (idx as usize) < data.len() {
            acc += data[idx as usize] * (*w / sum);
        }
    }
    acc
}

/// Delay a sequence by a (possibly fractional) number of samples using the
/// windowed-sinc interpolator; an approximation of an all-pass fractional
/// delay.
pub fn fractional_delay(input: &[Complex64], delay: f64) -> Vec<Complex64> {
    (0..input.len())
        .map(|i| interp_sinc(input, i as f64 - delay))
        .collect()
}

/// Multiply both polarizations by `exp(i*2*pi*f_norm*t)` where `f_norm` is
/// in cycles per symbol and `t` counts symbols.
pub fn mix_frequency(frame: &DualPolFrame, f_norm: f64) -> DualPolFrame {
    let mut out = frame.clone();
    if f_norm == 0.0 {
        return out;
    }
    let step = std::f64::consts::TAU * f_norm / frame.samples_per_symbol;
    for i in 0..frame.len() {
        let rot = Complex64::from_polar(1.0, step * i as f64);
        out.x[i] *= rot;
        out.y[i] *= rot;
    }
    out
}

pub(crate) fn fft_in_place(data: &mut [Complex64]) {
    let mut planner = rustfft::FftPlanner::new();
    planner.plan_fft_forward(data.len()).process(data);
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn frame_rejects_mismatched_lengths() {
        assert!(DualPolFrame::new(vec![c(1.0, 0.0)], vec![], 2.0).is_err());
        assert!(DualPolFrame::new(vec![], vec![], 0.0).is_err());
    }

    #[test]
    fn fir_identity_tap() {
        let frame = DualPolFrame::new(
            vec![c(1.0, 2.0), c(-0.5, 0.25), c(0.0, 1.0)],
            vec![c(0.0, 0.0); 3],
            2.0,
        )
        .unwrap();
        let out = fir_filter(&frame, &[1.0]).unwrap();
        assert_eq!(out.x, frame.x);
    }

    #[test]
    fn fir_delay_tap_shifts_by_one() {
        let input = vec![c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)];
        let out = fir_filter_seq(&input, &[0.0, 1.0]);
        assert_eq!(out, vec![c(0.0, 0.0), c(1.0, 0.0), c(2.0, 0.0)]);
    }

    #[test]
    fn fir_ones_on_impulse_makes_two_sample_pulse() {
        let mut input = vec![c(0.0, 0.0); 6];
        input[2] = c(1.0, 0.0);
        let out = fir_filter_seq(&input, &[1.0, 1.0]);
        let nonzero: Vec<usize> = out
            .iter()
            .enumerate()
            .filter(|(_, v)| v.norm() > 0.0)
            .map(|(i, _)| i)
            .collect();
        assert_eq!(nonzero, vec![2, 3]);
    }

    #[test]
    fn fir_empty_taps_rejected() {
        let frame = DualPolFrame::new(vec![c(1.0, 0.0)], vec![c(0.0, 0.0)], 2.0).unwrap();
        assert!(fir_filter(&frame, &[]).is_err());
    }

    #[test]
    fn cubic_interp_hits_samples_exactly() {
        let data = vec![c(0.5, -1.0), c(2.0, 0.0), c(-1.0, 3.0), c(0.0, 0.0)];
        for (i, v) in data.iter().enumerate() {
            let got = interp_cubic(&data, i as f64);
            assert!((got - v).norm() < 1e-15);
        }
    }

    #[test]
    fn sinc_interp_accuracy_near_nyquist() {
        // A 2 samples/symbol RRC waveform at rolloff 0.1 occupies up to
        // 0.275 of the sample rate; oracle value for the 16-tap kernel
        // there is ~3e-4 worst case.
        let n = 400;
        for f in [0.2, 0.25, 0.275] {
            let tone: Vec<Complex64> = (0..n)
                .map(|i| Complex64::from_polar(1.0, std::f64::consts::TAU * f * i as f64))
                .collect();
            for i in (30..n - 30).step_by(7) {
                for mu in [0.1, 0.25, 0.37, 0.5, 0.73, 0.9] {
                    let t = i as f64 + mu;
                    let want = Complex64::from_polar(1.0, std::f64::consts::TAU * f * t);
                    let err = (interp_sinc(&tone, t) - want).norm();
                    assert!(err < 1e-3, "f={f} t={t}: err {err}");
                }
            }
        }
        // Integer positions are exact.
        let data = vec![c(0.3, -0.7), c(1.0, 2.0), c(-0.2, 0.1), c(0.0, 0.5)];
        for (i, v) in data.iter().enumerate() {
            assert!((interp_sinc(&data, i as f64) - v).norm() < 1e-15);
        }
    }

    #[test]
    fn fractional_delay_tracks_slow_tone() {
        let n = 256;
        let f = 0.01;
        let tone: Vec<Complex64> = (0..n)
            .map(|i| Complex64::from_polar(1.0, std::f64::consts::TAU * f * i as f64))
            .collect();
        let delayed = fractional_delay(&tone, 0.37);
        for i in 8..n - 8 {
            let want = Complex64::from_polar(1.0, std::f64::consts::TAU * f * (i as f64 - 0.37));
            assert!(
                (delayed[i] - want).norm() < 1e-4,
                "sample {i}: {} vs {}",
                delayed[i],
                want
            );
        }
    }

    proptest! {
        // filter(a*u + b*v) = a*filter(u) + b*filter(v) within 1e-12 relative.
        #[test]
        fn fir_linearity(
            a in -2.0f64..2.0,
            b in -2.0f64..2.0,
            seed in 0u64..1000,
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let taps: Vec<f64> = (0..7).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let u: Vec<Complex64> =
                (0..64).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            let v: Vec<Complex64> =
                (0..64).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            let mix: Vec<Complex64> =
                u.iter().zip(&v).map(|(ui, vi)| a * ui + b * vi).collect();
            let lhs = fir_filter_seq(&mix, &taps);
            let fu = fir_filter_seq(&u, &taps);
            let fv = fir_filter_seq(&v, &taps);
            let scale: f64 = lhs.iter().map(|z| z.norm()).fold(1e-30, f64::max);
            for i in 0..64 {
                let rhs = a * fu[i] + b * fv[i];
                prop_assert!((lhs[i] - rhs).norm() <= 1e-12 * scale.max(1.0));
            }
        }
    }
}
