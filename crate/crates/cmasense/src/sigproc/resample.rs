//! Polyphase rational-rate resampling.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sigproc::DualPolFrame;

/// Rate-change by the rational factor `p/q` with anti-alias filtering.
///
/// Conceptually: upsample by `p`, low-pass at the tighter of the old and
/// new Nyquist edges, downsample by `q`. The filter's group delay is
/// compensated, output length is `ceil(len * p / q)` and
/// `samples_per_symbol` scales by `p/q`. Used by the capture-ingestion
/// path (e.g. 6.4 -> 2 samples per symbol); the synthesizer generates at
/// 2 samples per symbol natively.
pub fn resample_rational(frame: &DualPolFrame, p: usize, q: usize) -> Result<DualPolFrame> {
    if p == 0 || q == 0 {
        return Err(Error::config("resample factors must be nonzero"));
    }
    let g = gcd(p, q);
    let (p, q) = (p / g, q / g);
    if p == 1 && q == 1 {
        return Ok(frame.clone());
    }

    let taps = antialias_taps(p, q);
    let out_len = (frame.len() * p).div_ceil(q);

    Ok(DualPolFrame {
        x: polyphase(&frame.x, &taps, p, q, out_len),
        y: polyphase(&frame.y, &taps, p, q, out_len),
        samples_per_symbol: frame.samples_per_symbol * p as f64 / q as f64,
        symbol_rate_norm: frame.symbol_rate_norm,
    })
}

/// Windowed-sinc low pass at the upsampled rate: cutoff `0.5/max(p,q)`,
/// Blackman window (first sidelobe ~ -74 dB), passband gain `p` to undo
/// the zero-stuffing loss.
fn antialias_taps(p: usize, q: usize) -> Vec<f64> {
    let m = p.max(q) as f64;
    let fc = 0.5 / m;
    let half = 10 * p.max(q); // 10 sinc zero crossings per side
    let n = 2 * half + 1;
    (0..n)
        .map(|i| {
            let t = i as f64 - half as f64;
            let sinc = if t == 0.0 {
                2.0 * fc
            } else {
                (2.0 * PI * fc * t).sin() / (PI * t)
            };
            let w = 0.42 - 0.5 * (2.0 * PI * i as f64 / (n - 1) as f64).cos()
                + 0.08 * (4.0 * PI * i as f64 / (n - 1) as f64).cos();
            p as f64 * sinc * w
        })
        .collect()
}

fn polyphase(input: &[Complex64], taps: &[f64], p: usize, q: usize, out_len: usize) -> Vec<Complex64> {
    let delay = (taps.len() - 1) / 2;
    let mut out = Vec::with_capacity(out_len);
    for j in 0..out_len {
        // Output j sits at upsampled index j*q; shift by the filter delay
        // so the output is alignment-free.
        let t = j * q + delay;
        let mut acc = Complex64::default();
        // Only every p-th upsampled sample is nonzero.
        let k0 = t % p;
        let mut k = k0;
        while k < taps.len() && k <= t {
            let m = (t - k) / p;
            if m < input.len() {
                acc += taps[k] * input[m];
            }
            k += p;
        }
        out.push(acc);
    }
    out
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}
