//! Carrier phase recovery (blind phase search) and the final DD-LMS
//! refinement stage.

use num_complex::Complex64;

use crate::channel::qpsk_slice;
use crate::error::{Error, Result};

/// Blind phase search parameters. The defaults (32 angles, 64-symbol
/// blocks) keep the penalty under half a dB at the default linewidth.
#[derive(Debug, Clone, Copy)]
pub struct BpsConfig {
    pub n_test: usize,
    pub block: usize,
}

impl Default for BpsConfig {
    fn default() -> Self {
        BpsConfig {
            n_test: 32,
            block: 64,
        }
    }
}

/// Feed-forward blind phase search over one polarization.
///
/// Tests `n_test` angles in [-pi/4, pi/4), accumulates the squared
/// distance to the nearest QPSK point per block, averages the metric over
/// a sliding window of three blocks, picks the minimum, and unwraps the
/// per-block decisions across the pi/2 ambiguity. The output carries the
/// usual QPSK four-fold phase ambiguity.
pub fn bps_recover(symbols: &[Complex64], cfg: BpsConfig) -> Result<Vec<Complex64>> {
    if cfg.n_test == 0 || cfg.block == 0 {
        return Err(Error::config("BPS needs positive n_test and block"));
    }
    if symbols.is_empty() {
        return Ok(Vec::new());
    }
    let angles: Vec<f64> = (0..cfg.n_test)
        .map(|i| -std::f64::consts::FRAC_PI_4 + i as f64 * std::f64::consts::FRAC_PI_2 / cfg.n_test as f64)
        .collect();
    let rotors: Vec<Complex64> = angles.iter().map(|a| Complex64::from_polar(1.0, *a)).collect();

    let n_blocks = symbols.len().div_ceil(cfg.block);
    // Per-block distance metric for every candidate angle.
    let mut metric = vec![vec![0.0f64; cfg.n_test]; n_blocks];
    for (b, row) in metric.iter_mut().enumerate() {
        let start = b * cfg.block;
        let end = (start + cfg.block).min(symbols.len());
        for s in &symbols[start..end] {
            for (i, rot) in rotors.iter().enumerate() {
                let z = s * rot;
                let d = z - qpsk_slice(z);
                row[i] += d.norm_sqr();
            }
        }
    }

    // Sliding-window average over neighboring blocks, then argmin.
    let mut unwrapped = Vec::with_capacity(n_blocks);
    let mut prev = 0.0f64;
    for b in 0..n_blocks {
        let lo = b.saturating_sub(1);
        let hi = (b + 1).min(n_blocks - 1);
        let best = (0..cfg.n_test)
            .min_by(|&i, &j| {
                let mi: f64 = (lo..=hi).map(|bb| metric[bb][i]).sum();
                let mj: f64 = (lo..=hi).map(|bb| metric[bb][j]).sum();
                mi.total_cmp(&mj)
            })
            .unwrap();
        let mut angle = angles[best];
        if b == 0 {
            prev = angle;
        }
        // Cycle-slip unwrapping: stay within a quarter turn of the last
        // block's decision.
        while angle - prev > std::f64::consts::FRAC_PI_4 {
            angle -= std::f64::consts::FRAC_PI_2;
        }
        while angle - prev < -std::f64::consts::FRAC_PI_4 {
            angle += std::f64::consts::FRAC_PI_2;
        }
        prev = angle;
        unwrapped.push(angle);
    }

    let mut out = Vec::with_capacity(symbols.len());
    for (b, angle) in unwrapped.iter().enumerate() {
        let rot = Complex64::from_polar(1.0, *angle);
        let start = b * cfg.block;
        let end = (start + cfg.block).min(symbols.len());
        for s in &symbols[start..end] {
            out.push(s * rot);
        }
    }
    Ok(out)
}

/// 2x2 single-tap decision-directed LMS at one sample per symbol.
///
/// Cleans up residual polarization crosstalk and any slowly varying
/// complex gain the CMA/BPS stages leave behind; with `mu = 0` it is an
/// exact pass-through.
pub fn ddlms_run(
    x: &[Complex64],
    y: &[Complex64],
    mu: f64,
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    if x.len() != y.len() {
        return Err(Error::config("DD-LMS needs equal-length inputs"));
    }
    let mut w = [
        [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
        [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
    ];
    let mut out_x = Vec::with_capacity(x.len());
    let mut out_y = Vec::with_capacity(y.len());
    let tail_start = x.len() - x.len() / 10;
    let mut tail_err = 0.0f64;
    let mut tail_n = 0u64;
    for i in 0..x.len() {
        let inp = [x[i], y[i]];
        let o = [
            w[0][0] * inp[0] + w[0][1] * inp[1],
            w[1][0] * inp[0] + w[1][1] * inp[1],
        ];
        if mu > 0.0 {
            for row in 0..2 {
                let e = qpsk_slice(o[row]) - o[row];
                w[row][0] += mu * e * inp[0].conj();
                w[row][1] += mu * e * inp[1].conj();
                if i >= tail_start {
                    tail_err += e.norm();
                    tail_n += 1;
                }
            }
        }
        out_x.push(o[0]);
        out_y.push(o[1]);
    }
    if tail_n > 0 && tail_err / tail_n as f64 > 0.5 {
        return Err(Error::diagnostic(format!(
            "DD-LMS diverging: mean |e| {:.3} over the final tenth",
            tail_err / tail_n as f64
        )));
    }
    Ok((out_x, out_y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{gen_qpsk_symbols, qpsk_slice_bits};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn noisy_qpsk(n: usize, snr_db: f64, seed: u64) -> (Vec<Complex64>, Vec<Complex64>) {
        let ((_, tx), _) = gen_qpsk_symbols(n, seed);
        let sigma = (10f64.powf(-snr_db / 10.0) / 2.0).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcdef);
        let rx = tx
            .iter()
            .map(|s| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                s + Complex64::new(re * sigma, im * sigma)
            })
            .collect();
        (tx, rx)
    }

    fn phase_error_variance(rx: &[Complex64], tx: &[Complex64]) -> f64 {
        // Variance of the residual phase, fourth-power trick to drop the
        // pi/2 ambiguity.
        let errs: Vec<f64> = rx
            .iter()
            .zip(tx)
            .map(|(r, t)| {
                let rot = r / t;
                (rot.powi(4)).arg() / 4.0
            })
            .collect();
        let mean = errs.iter().sum::<f64>() / errs.len() as f64;
        errs.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / errs.len() as f64
    }

    #[test]
    fn bps_identity_without_phase_noise() {
        let (tx, rx) = noisy_qpsk(2048, 60.0, 1);
        let out = bps_recover(&rx, BpsConfig::default()).unwrap();
        // Up to a quadrant rotation, output equals input.
        let rot = (out[0] / tx[0]).arg();
        let quad = (rot / std::f64::consts::FRAC_PI_2).round() * std::f64::consts::FRAC_PI_2;
        for (o, t) in out.iter().zip(&tx) {
            let back = o * Complex64::from_polar(1.0, -quad);
            assert!((back - t).norm() < 0.01, "{back} vs {t}");
        }
    }

    #[test]
    fn bps_removes_static_rotation() {
        let (tx, rx) = noisy_qpsk(4096, 40.0, 2);
        let grid = std::f64::consts::FRAC_PI_2 / 32.0;
        let rotated: Vec<Complex64> = rx
            .iter()
            .map(|s| s * Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_8))
            .collect();
        let out = bps_recover(&rotated, BpsConfig::default()).unwrap();
        // Residual static rotation below the angle grid spacing.
        let dot: Complex64 = out.iter().zip(&tx).map(|(o, t)| o * t.conj()).sum();
        let residual = (dot.powi(4)).arg().abs() / 4.0;
        assert!(residual <= grid, "residual rotation {residual}");
    }

    #[test]
    fn bps_tracks_wiener_phase() {
        let n = 1 << 15;
        let linewidth = 1e-5;
        let (tx, rx) = noisy_qpsk(n, 25.0, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let sigma = (std::f64::consts::TAU * linewidth).sqrt();
        let mut phase = 0.0;
        let mut injected = Vec::with_capacity(n);
        let noisy: Vec<Complex64> = rx
            .iter()
            .map(|s| {
                let d: f64 = rng.sample(StandardNormal);
                phase += sigma * d;
                injected.push(phase);
                s * Complex64::from_polar(1.0, phase)
            })
            .collect();
        let out = bps_recover(&noisy, BpsConfig::default()).unwrap();
        // Uncompensated phase error variance comes straight from the
        // injected walk (no pi/2 wrapping involved).
        let mean = injected.iter().sum::<f64>() / n as f64;
        let before = injected.iter().map(|p| (p - mean) * (p - mean)).sum::<f64>() / n as f64;
        let after = phase_error_variance(&out, &tx);
        let gain_db = 10.0 * (before / after).log10();
        assert!(gain_db >= 20.0, "phase variance reduction {gain_db} dB");
    }

    #[test]
    fn ddlms_identity_cases() {
        let (tx, _) = noisy_qpsk(512, 30.0, 4);
        // Perfect QPSK input: slicer error is zero, taps stay at identity.
        let (ox, _) = ddlms_run(&tx, &tx, 1e-3).unwrap();
        for (o, t) in ox.iter().zip(&tx) {
            assert!((o - t).norm() < 1e-12);
        }
        // mu = 0 is an exact pass-through even on noisy input.
        let (_, rx) = noisy_qpsk(512, 10.0, 5);
        let (ox, oy) = ddlms_run(&rx, &rx, 0.0).unwrap();
        assert_eq!(ox, rx);
        assert_eq!(oy, rx);
    }

    #[test]
    fn ddlms_improves_evm_on_static_rotation() {
        let (tx, rx) = noisy_qpsk(1 << 14, 20.0, 6);
        let rot = Complex64::from_polar(1.0, 3f64.to_radians());
        let skewed: Vec<Complex64> = rx.iter().map(|s| s * rot).collect();
        let evm = |sig: &[Complex64]| -> f64 {
            let e: f64 = sig.iter().map(|s| (s - qpsk_slice(*s)).norm_sqr()).sum();
            (e / sig.len() as f64).sqrt()
        };
        let (ox, _) = ddlms_run(&skewed, &skewed, 1e-3).unwrap();
        let settle = ox.len() / 2;
        assert!(
            evm(&ox[settle..]) < evm(&skewed[settle..]),
            "{} vs {}",
            evm(&ox[settle..]),
            evm(&skewed[settle..])
        );
        // Bits survive (sanity against over-rotation).
        let errors = ox[settle..]
            .iter()
            .zip(&tx[settle..])
            .filter(|(o, t)| qpsk_slice_bits(**o) != qpsk_slice_bits(**t))
            .count();
        assert_eq!(errors, 0);
    }
}
