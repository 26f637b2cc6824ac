//! Communication-quality metrics (EVM, estimated BER, Q-factor), direct
//! bit-error counting with ambiguity resolution, and the analytic
//! complexity model that stands in for FPGA resource counts.

use num_complex::Complex64;

use crate::channel::{qpsk_slice, qpsk_slice_bits};
use crate::error::{Error, Result};
use crate::rxdsp::EqConfig;

/// Communication metrics for one equalized stream pair.
#[derive(Debug, Clone, Default)]
pub struct CommReport {
    /// RMS error vector magnitude as a ratio (not percent).
    pub evm_rms: f64,
    /// BER estimated from the EVM.
    pub ber_est: f64,
    /// Directly counted BER, when transmitted bits are available.
    pub ber_direct: Option<f64>,
    /// Q-factor in dB from the estimated BER.
    pub q_db: f64,
    pub n_symbols_measured: usize,
}

/// Non-data-aided RMS EVM against the nearest constellation point.
///
/// The input must already be normalized to unit mean power; the reference
/// power of the unit QPSK constellation is 1, so the result is the plain
/// RMS error magnitude.
pub fn evm_rms(symbols: &[Complex64]) -> Result<f64> {
    if symbols.is_empty() {
        return Err(Error::config("EVM needs at least one symbol"));
    }
    let err: f64 = symbols
        .iter()
        .map(|s| (s - qpsk_slice(*s)).norm_sqr())
        .sum();
    Ok((err / symbols.len() as f64).sqrt())
}

/// QPSK specialization of the EVM-to-BER estimate:
/// `BER = 0.5 * erfc(1 / (evm * sqrt(2)))`, treating `1/evm^2` as the
/// effective SNR.
pub fn ber_from_evm(evm: f64) -> Result<f64> {
    if !(evm > 0.0) {
        return Err(Error::config("ber_from_evm needs a positive EVM"));
    }
    Ok(0.5 * libm::erfc(1.0 / (evm * std::f64::consts::SQRT_2)))
}

/// Q-factor in dB: `20*log10(sqrt(2)*erfc^-1(2*ber))`.
///
/// The inverse erfc is solved by Newton iterations on `erfc`, so the
/// conversion round-trips against [`ber_from_q_db`] at f64 precision.
pub fn qfactor_db(ber: f64) -> Result<f64> {
    if !(ber > 0.0 && ber < 0.5) {
        return Err(Error::config(format!("BER {ber} outside (0, 0.5)")));
    }
    let t = inverse_erfc(2.0 * ber);
    Ok(20.0 * (std::f64::consts::SQRT_2 * t).log10())
}

/// Inverse of [`qfactor_db`]; used by tests and the threshold line.
pub fn ber_from_q_db(q_db: f64) -> f64 {
    let q = 10f64.powf(q_db / 20.0);
    0.5 * libm::erfc(q / std::f64::consts::SQRT_2)
}

/// Solve `erfc(t) = y` for `t` by Newton's method, seeded with a rough
/// bisection. Accurate to machine precision for y in (0, 1].
fn inverse_erfc(y: f64) -> f64 {
    // Bracket: erfc is strictly decreasing on [0, 30] from 1 to ~1e-393.
    let mut lo = 0.0f64;
    let mut hi = 30.0f64;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if libm::erfc(mid) > y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut t = 0.5 * (lo + hi);
    for _ in 0..8 {
        let f = libm::erfc(t) - y;
        let df = -2.0 / std::f64::consts::PI.sqrt() * (-t * t).exp();
        let step = f / df;
        if !step.is_finite() {
            break;
        }
        t -= step;
        if step.abs() < 1e-16 * t.abs().max(1.0) {
            break;
        }
    }
    t
}

/// One candidate mapping from a received stream onto a transmitted bit
/// sequence: a QPSK quadrant rotation, optional conjugation, and a symbol
/// delay.
#[derive(Debug, Clone, Copy)]
struct Alignment {
    rotation: u8,
    conjugate: bool,
    delay: i64,
    correlation: f64,
}

fn best_alignment(rx: &[Complex64], tx: &[Complex64], max_lag: i64) -> Option<Alignment> {
    let window = rx.len().min(tx.len()).min(1 << 14);
    if window < 64 {
        return None;
    }
    let mut best: Option<Alignment> = None;
    for conjugate in [false, true] {
        for delay in -max_lag..=max_lag {
            let mut dot = Complex64::default();
            let mut n = 0usize;
            for k in 0..window {
                let t_idx = k as i64 + delay;
                if t_idx < 0 || t_idx as usize >= tx.len() {
                    continue;
                }
                let r = if conjugate { rx[k].conj() } else { rx[k] };
                dot += r * tx[t_idx as usize].conj();
                n += 1;
            }
            if n < 64 {
                continue;
            }
            let corr = dot.norm() / n as f64;
            if best.map_or(true, |b| corr > b.correlation) {
                // The correlation phase identifies the quadrant rotation.
                let quad = (dot.arg() / std::f64::consts::FRAC_PI_2).round() as i64;
                best = Some(Alignment {
                    rotation: quad.rem_euclid(4) as u8,
                    conjugate,
                    delay,
                    correlation: corr,
                });
            }
        }
    }
    best
}

fn apply_alignment(s: Complex64, a: Alignment) -> Complex64 {
    let v = if a.conjugate { s.conj() } else { s };
    let rot = Complex64::from_polar(1.0, -(a.rotation as f64) * std::f64::consts::FRAC_PI_2);
    v * rot
}

/// Directly counted bit error ratio over both polarizations.
///
/// Resolves the QPSK ambiguities (4 rotations x conjugation) and the
/// polarization swap per stream by cross-correlation against both
/// transmitted symbol sequences, picks the stronger match, aligns the
/// delay, and counts bit errors against the Gray-mapped bits.
pub fn ber_direct(
    rx_x: &[Complex64],
    rx_y: &[Complex64],
    tx_symbols_x: &[Complex64],
    tx_symbols_y: &[Complex64],
    tx_bits_x: &[u8],
    tx_bits_y: &[u8],
) -> Result<f64> {
    let max_lag = 256i64;
    let mut total_bits = 0u64;
    let mut total_errors = 0u64;
    for rx in [rx_x, rx_y] {
        let cand_x = best_alignment(rx, tx_symbols_x, max_lag);
        let cand_y = best_alignment(rx, tx_symbols_y, max_lag);
        let (align, tx_bits) = match (cand_x, cand_y) {
            (Some(a), Some(b)) => {
                if a.correlation >= b.correlation {
                    (a, tx_bits_x)
                } else {
                    (b, tx_bits_y)
                }
            }
            (Some(a), None) => (a, tx_bits_x),
            (None, Some(b)) => (b, tx_bits_y),
            (None, None) => return Err(Error::diagnostic("bit alignment failed: no correlation")),
        };
        if align.correlation < 0.3 {
            return Err(Error::diagnostic(format!(
                "bit alignment failed: best correlation {:.3}",
                align.correlation
            )));
        }
        for (k, s) in rx.iter().enumerate() {
            let t_idx = k as i64 + align.delay;
            if t_idx < 0 || (2 * t_idx + 1) as usize >= tx_bits.len() {
                continue;
            }
            let (b0, b1) = qpsk_slice_bits(apply_alignment(*s, align));
            let t0 = tx_bits[2 * t_idx as usize];
            let t1 = tx_bits[2 * t_idx as usize + 1];
            total_bits += 2;
            total_errors += u64::from(b0 != t0) + u64::from(b1 != t1);
        }
    }
    if total_bits == 0 {
        return Err(Error::diagnostic("bit alignment left no comparable bits"));
    }
    Ok(total_errors as f64 / total_bits as f64)
}

/// Assemble a [`CommReport`] from an equalized stream pair, normalizing
/// power before the EVM stage.
pub fn comm_report(
    rx_x: &[Complex64],
    rx_y: &[Complex64],
    truth: Option<(&[Complex64], &[Complex64], &[u8], &[u8])>,
) -> Result<CommReport> {
    let power: f64 = rx_x
        .iter()
        .chain(rx_y.iter())
        .map(|s| s.norm_sqr())
        .sum::<f64>()
        / (rx_x.len() + rx_y.len()).max(1) as f64;
    if power <= 0.0 {
        return Err(Error::diagnostic("zero-power equalized output"));
    }
    let scale = power.sqrt();
    let normalized: Vec<Complex64> = rx_x
        .iter()
        .chain(rx_y.iter())
        .map(|s| s / scale)
        .collect();
    let evm = evm_rms(&normalized)?;
    let ber_est = ber_from_evm(evm)?;
    let ber_direct = match truth {
        Some((tx, ty, bx, by)) => Some(ber_direct(rx_x, rx_y, tx, ty, bx, by)?),
        None => None,
    };
    Ok(CommReport {
        evm_rms: evm,
        ber_est,
        ber_direct,
        q_db: qfactor_db(ber_est.clamp(1e-300, 0.499_999))?,
        n_symbols_measured: rx_x.len() + rx_y.len(),
    })
}

/// Fixed-point operation counts per equalized output symbol, with the
/// LUT-oriented weighting: adds cost `W`, array multipliers cost `W^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexityReport {
    pub bit_width: u32,
    pub filter_real_mults: u64,
    pub filter_real_adds: u64,
    /// Update-path counts, amortized over the update stride.
    pub update_real_mults_per_symbol: f64,
    pub update_real_adds_per_symbol: f64,
    pub weighted_cost: f64,
}

/// Count the real multiplies/adds per equalized symbol of the 2x2
/// equalizer.
///
/// Counting model: a complex multiply is 4 real multiplies and 2 real
/// adds; accumulating `2*n_taps` products per output costs
/// `2*(2*n_taps - 1)` real adds. The update path (per update event) runs
/// the error computation and one complex multiply-accumulate per
/// coefficient; its counts are divided by `update_stride`.
pub fn complexity_report(cfg: &EqConfig, bit_width: u32) -> ComplexityReport {
    let n = cfg.n_taps as u64;
    // Filtering: 2 outputs, each 2n complex mults + (2n-1) complex adds.
    let filter_real_mults = 2 * (2 * n) * 4;
    let filter_real_adds = 2 * ((2 * n) * 2 + 2 * (2 * n - 1));

    // Update per event and output pol:
    //   |out|^2: 2 mults + 1 add; e = r2 - |out|^2: 1 add
    //   g = mu*e*out: mu*e 1 mult, (mu*e)*out 2 mults (real x complex)
    //   per coefficient: g*conj(in) 4 mults + 2 adds, h += delta 2 adds
    let per_pol_mults = 2 + 1 + 2 + 2 * n * 4;
    let per_pol_adds = 1 + 1 + 2 * n * (2 + 2);
    let stride = cfg.update_stride as f64;
    let update_real_mults_per_symbol = (2 * per_pol_mults) as f64 / stride;
    let update_real_adds_per_symbol = (2 * per_pol_adds) as f64 / stride;

    let w = bit_width as f64;
    let mults = filter_real_mults as f64 + update_real_mults_per_symbol;
    let adds = filter_real_adds as f64 + update_real_adds_per_symbol;
    ComplexityReport {
        bit_width,
        filter_real_mults,
        filter_real_adds,
        update_real_mults_per_symbol,
        update_real_adds_per_symbol,
        weighted_cost: mults * w * w + adds * w,
    }
}

impl ComplexityReport {
    pub fn total_mults_per_symbol(&self) -> f64 {
        self.filter_real_mults as f64 + self.update_real_mults_per_symbol
    }

    pub fn total_adds_per_symbol(&self) -> f64 {
        self.filter_real_adds as f64 + self.update_real_adds_per_symbol
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::gen_qpsk_symbols;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn evm_perfect_and_displaced() {
        let ((_, tx), _) = gen_qpsk_symbols(512, 1);
        assert_eq!(evm_rms(&tx).unwrap(), 0.0);

        // Displace every symbol by |e| = 0.1 toward its own quadrant
        // center direction (stays in the decision region).
        let displaced: Vec<Complex64> = tx
            .iter()
            .map(|s| s + 0.1 * Complex64::new(s.re.signum(), 0.0))
            .collect();
        assert!((evm_rms(&displaced).unwrap() - 0.1).abs() < 1e-12);
        assert!(evm_rms(&[]).is_err());
    }

    #[test]
    fn evm_matches_snr_on_awgn() {
        // EVM ~= 10^(-SNR/20) in the low-error regime.
        let snr_db = 20.0;
        let ((_, tx), _) = gen_qpsk_symbols(1 << 16, 2);
        let sigma = (10f64.powf(-snr_db / 10.0) / 2.0).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let noisy: Vec<Complex64> = tx
            .iter()
            .map(|s| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                s + Complex64::new(re * sigma, im * sigma)
            })
            .collect();
        let evm = evm_rms(&noisy).unwrap();
        let want = 10f64.powf(-snr_db / 20.0);
        assert!((evm / want - 1.0).abs() < 0.05, "evm {evm} vs {want}");
    }

    #[test]
    fn ber_from_evm_reference_points() {
        // 0.5*erfc(1/(0.5*sqrt(2))) = 2.275e-2 (scipy cross-check).
        let ber = ber_from_evm(0.5).unwrap();
        assert!((ber - 2.275e-2).abs() < 1e-4, "ber {ber}");
        assert!(ber_from_evm(1e-6).unwrap() < 1e-300);
        // Saturation toward the 0.5 cap for hopeless EVM: erfc evaluation
        // gives 0.460 at evm = 10, limiting to 0.5.
        let bad = ber_from_evm(10.0).unwrap();
        assert!((bad - 0.460).abs() < 1e-3, "ber {bad}");
        assert!((ber_from_evm(1e9).unwrap() - 0.5).abs() < 1e-6);
        assert!(ber_from_evm(0.0).is_err());
    }

    #[test]
    fn qfactor_reference_points() {
        // Frozen from scipy: Q(2.18e-5) = 12.2292 dB.
        let q = qfactor_db(2.18e-5).unwrap();
        assert!((q - 12.2292).abs() < 1e-3, "q {q}");
        // Q_linear = 1 at ber = 0.5*erfc(1/sqrt(2)).
        let ber0 = 0.5 * libm::erfc(1.0 / std::f64::consts::SQRT_2);
        assert!(qfactor_db(ber0).unwrap().abs() < 1e-9);
        assert!(qfactor_db(0.0).is_err());
        assert!(qfactor_db(0.5).is_err());
    }

    #[test]
    fn qfactor_round_trip_and_monotonicity() {
        for q in [0.5, 3.0, 6.0, 9.0, 12.0, 12.6, 15.0, 17.0] {
            let ber = ber_from_q_db(q);
            let back = qfactor_db(ber).unwrap();
            assert!((back - q).abs() < 1e-9, "{q} -> {ber} -> {back}");
        }
        let mut last = f64::INFINITY;
        for ber in [1e-9, 1e-6, 1e-4, 1e-3, 1e-2, 0.1, 0.4] {
            let q = qfactor_db(ber).unwrap();
            assert!(q < last, "q not decreasing at ber {ber}");
            last = q;
        }
    }

    #[test]
    fn ber_direct_identity_and_flips() {
        let n = 1 << 14;
        let ((bx, tx), (by, ty)) = gen_qpsk_symbols(n, 4);
        let ber = ber_direct(&tx, &ty, &tx, &ty, &bx, &by).unwrap();
        assert_eq!(ber, 0.0);

        // One flipped bit among the 4n bits of both polarizations.
        let mut damaged = tx.clone();
        damaged[100] = Complex64::new(-damaged[100].re, damaged[100].im);
        let ber = ber_direct(&damaged, &ty, &tx, &ty, &bx, &by).unwrap();
        assert!((ber - 1.0 / (4.0 * n as f64)).abs() < 1e-9, "ber {ber}");
    }

    #[test]
    fn ber_direct_resolves_ambiguities() {
        let n = 1 << 13;
        let ((bx, tx), (by, ty)) = gen_qpsk_symbols(n, 5);
        // Swap polarizations, rotate one by 90 degrees, conjugate the
        // other, and delay both by 3 symbols.
        let rot = Complex64::new(0.0, 1.0);
        let delayed_y: Vec<Complex64> = (0..n)
            .map(|k| if k >= 3 { ty[k - 3] * rot } else { Complex64::default() })
            .collect();
        let delayed_x_conj: Vec<Complex64> = (0..n)
            .map(|k| if k >= 3 { tx[k - 3].conj() } else { Complex64::default() })
            .collect();
        let ber = ber_direct(&delayed_y, &delayed_x_conj, &tx, &ty, &bx, &by).unwrap();
        // Only the 3 garbage symbols at the head can err.
        assert!(ber < 4.0 * 3.0 / (2.0 * n as f64), "ber {ber}");
    }

    #[test]
    fn ber_direct_random_bits_near_half() {
        let n = 1 << 13;
        let ((bx, tx), (by, ty)) = gen_qpsk_symbols(n, 6);
        let ((_, ox), (_, oy)) = gen_qpsk_symbols(n, 999);
        let ber = ber_direct(&ox, &oy, &tx, &ty, &bx, &by);
        // Either alignment legitimately fails, or the count is ~0.5.
        if let Ok(b) = ber {
            assert!((b - 0.5).abs() < 0.05, "ber {b}");
        }
    }

    #[test]
    fn complexity_counts_match_hand_derivation() {
        let cfg = EqConfig::default();
        let rep = complexity_report(&cfg, 5);
        // 4 branches x 5 taps x 4 real mults per complex mult.
        assert_eq!(rep.filter_real_mults, 80);
        // Update path amortized over stride 2.
        assert!(rep.update_real_mults_per_symbol > 0.0);
        let rep8 = complexity_report(&cfg, 8);
        assert!(rep8.weighted_cost > rep.weighted_cost);

        // Halving the update rate halves the update-path counts.
        let slow = EqConfig {
            update_stride: 4,
            ..EqConfig::default()
        };
        let rep_slow = complexity_report(&slow, 5);
        assert!(
            (rep_slow.update_real_mults_per_symbol - rep.update_real_mults_per_symbol / 2.0).abs()
                < 1e-12
        );
    }

    #[test]
    fn complexity_cost_exactly_linear_and_quadratic() {
        let cfg = EqConfig::default();
        let mults = complexity_report(&cfg, 1).total_mults_per_symbol();
        let adds = complexity_report(&cfg, 1).total_adds_per_symbol();
        for w in 4..=16u32 {
            let rep = complexity_report(&cfg, w);
            let want = mults * (w * w) as f64 + adds * w as f64;
            assert_eq!(rep.weighted_cost, want, "cost model at W={w}");
        }
    }
}
