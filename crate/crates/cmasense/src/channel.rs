//! Synthetic DP-QPSK transmitter and impairment channel.
//!
//! Stands in for the physical experiment: a loudspeaker shaking a fiber
//! becomes a single-axis Stokes rotation with a sinusoidal angle, the
//! free-running local oscillator becomes a Wiener phase walk, and the
//! receiver front end becomes AWGN plus optional IQ imbalance and skew.
//! All rates are normalized to the symbol period; at the paper's absolute
//! numbers (10 GBaud, 250 Hz vibration) one vibration period spans ~4e7
//! symbols, so the desk-scale defaults compress the timescales while
//! keeping the SOP slow relative to the equalizer adaptation.
//!
//! Everything is deterministic in `(config, seed)`: one fixed RNG
//! (ChaCha8) with a dedicated stream per noise source, in a fixed
//! generation order.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::sigproc::{fir_filter, fractional_delay, rrc_taps, DualPolFrame};
use crate::sopsense::{default_probe, jones_to_stokes, JonesMatrix, StokesTrajectory};

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// RNG stream ids, one per noise source, so adding a consumer never
/// perturbs the others.
mod stream {
    pub const BITS_X: u64 = 0;
    pub const BITS_Y: u64 = 1;
    pub const PHASE: u64 = 2;
    pub const AWGN_X: u64 = 3;
    pub const AWGN_Y: u64 = 4;
}

/// IQ imbalance applied to the quadrature rail.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct IqImbalance {
    pub gain_db: f64,
    pub phase_deg: f64,
}

/// Full channel description. All rates normalized to the symbol period.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct ChannelConfig {
    pub n_symbols: usize,
    pub sps: usize,
    pub rolloff: f64,
    pub rrc_span_symbols: usize,
    pub snr_db: f64,
    /// Laser linewidth times the symbol period (100 kHz / 10 GBaud = 1e-5).
    pub linewidth_norm: f64,
    /// Carrier frequency offset in cycles per symbol.
    pub cfo_norm: f64,
    /// Vibration frequency in cycles per symbol.
    pub vib_freq_norm: f64,
    /// Peak Stokes rotation angle of the vibration, radians.
    pub vib_depth_rad: f64,
    /// Stokes-space rotation axis of the vibration (unit vector).
    pub sop_axis: [f64; 3],
    /// Static fiber rotation: angles (radians) about S1, S2, S3.
    pub sop_static_rotation: [f64; 3],
    pub iq_imbalance: Option<IqImbalance>,
    pub skew_samples: Option<f64>,
    /// Cadence (in symbols) at which ground truth is sampled; set to the
    /// equalizer's snapshot stride so trajectories align.
    pub sop_sample_stride: usize,
    pub seed: u64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        ChannelConfig {
            n_symbols: 1 << 20,
            sps: 2,
            rolloff: 0.1,
            rrc_span_symbols: 32,
            snr_db: 15.0,
            linewidth_norm: 1e-5,
            cfo_norm: 1e-4,
            vib_freq_norm: (2.0f64).powi(-14),
            vib_depth_rad: 0.5,
            sop_axis: [0.0, 0.0, 1.0],
            sop_static_rotation: [0.3, -0.2, 0.15],
            iq_imbalance: None,
            skew_samples: None,
            sop_sample_stride: 2,
            seed: 1,
        }
    }
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_symbols == 0 {
            return Err(Error::config("n_symbols must be positive"));
        }
        if self.sps < 2 {
            return Err(Error::config("channel needs at least 2 samples per symbol"));
        }
        if !self.snr_db.is_finite() {
            return Err(Error::config("snr_db must be finite"));
        }
        if self.linewidth_norm < 0.0 {
            return Err(Error::config("linewidth_norm must be non-negative"));
        }
        if !(self.vib_freq_norm > 0.0 && self.vib_freq_norm < 0.5 / self.sps as f64) {
            return Err(Error::config(format!(
                "vib_freq_norm {} outside (0, {})",
                self.vib_freq_norm,
                0.5 / self.sps as f64
            )));
        }
        let a = self.sop_axis;
        let norm = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::config(format!("sop_axis must be unit length (got {norm})")));
        }
        if self.sop_sample_stride == 0 {
            return Err(Error::config("sop_sample_stride must be positive"));
        }
        Ok(())
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }
}

/// Transmitted data and the channel's sensing oracle.
///
/// `jones_inv_of_t` holds the *inverse* channel Jones matrix at the SOP
/// sampling cadence — the quantity a converged equalizer estimates — and
/// `stokes_of_t` is that matrix applied to the default probe, so the two
/// fields stay consistent by construction.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub tx_bits_x: Vec<u8>,
    pub tx_bits_y: Vec<u8>,
    pub tx_symbols_x: Vec<Complex64>,
    pub tx_symbols_y: Vec<Complex64>,
    pub jones_inv_of_t: Vec<JonesMatrix>,
    pub stokes_of_t: StokesTrajectory,
}

/// Gray-mapped QPSK: bits (b0, b1) -> ((1-2*b0) + i*(1-2*b1))/sqrt(2).
pub fn qpsk_map(b0: u8, b1: u8) -> Complex64 {
    Complex64::new(
        (1.0 - 2.0 * b0 as f64) * FRAC_1_SQRT_2,
        (1.0 - 2.0 * b1 as f64) * FRAC_1_SQRT_2,
    )
}

/// Hard decision back to the Gray-mapped bits.
pub fn qpsk_slice_bits(s: Complex64) -> (u8, u8) {
    (u8::from(s.re < 0.0), u8::from(s.im < 0.0))
}

/// Nearest QPSK constellation point.
pub fn qpsk_slice(s: Complex64) -> Complex64 {
    Complex64::new(
        FRAC_1_SQRT_2 * s.re.signum(),
        FRAC_1_SQRT_2 * s.im.signum(),
    )
}

fn gen_pol(n: usize, rng: &mut ChaCha8Rng) -> (Vec<u8>, Vec<Complex64>) {
    let mut bits = Vec::with_capacity(2 * n);
    let mut symbols = Vec::with_capacity(n);
    for _ in 0..n {
        let idx: u8 = rng.gen_range(0..4);
        let (b0, b1) = (idx >> 1, idx & 1);
        bits.push(b0);
        bits.push(b1);
        symbols.push(qpsk_map(b0, b1));
    }
    (bits, symbols)
}

/// Deterministic Gray-mapped QPSK data for both polarizations.
pub fn gen_qpsk_symbols(
    n: usize,
    seed: u64,
) -> ((Vec<u8>, Vec<Complex64>), (Vec<u8>, Vec<Complex64>)) {
    let cfg = ChannelConfig {
        seed,
        ..ChannelConfig::default()
    };
    (
        gen_pol(n, &mut cfg.rng(stream::BITS_X)),
        gen_pol(n, &mut cfg.rng(stream::BITS_Y)),
    )
}

/// Stokes-ordered Pauli combination `n · sigma` for a Stokes axis `n`.
fn pauli_combination(n: [f64; 3]) -> JonesMatrix {
    JonesMatrix {
        m: [
            [Complex64::new(n[0], 0.0), Complex64::new(n[1], -n[2])],
            [Complex64::new(n[1], n[2]), Complex64::new(-n[0], 0.0)],
        ],
    }
}

/// `exp(-i * (theta/2) * (axis · sigma))`: the Jones matrix rotating the
/// Stokes sphere by `theta` about `axis` (right-hand rule).
pub fn stokes_rotation_jones(axis: [f64; 3], theta: f64) -> JonesMatrix {
    let half = theta / 2.0;
    let (sin, cos) = half.sin_cos();
    let ns = pauli_combination(axis);
    let mut m = [[Complex64::default(); 2]; 2];
    for r in 0..2 {
        for c in 0..2 {
            let eye = if r == c { 1.0 } else { 0.0 };
            m[r][c] = Complex64::new(eye * cos, 0.0) - Complex64::new(0.0, sin) * ns.m[r][c];
        }
    }
    JonesMatrix { m }
}

/// Static part of the channel: rotations about S1, S2, S3 in that order.
pub fn static_jones(angles: [f64; 3]) -> JonesMatrix {
    let r1 = stokes_rotation_jones([1.0, 0.0, 0.0], angles[0]);
    let r2 = stokes_rotation_jones([0.0, 1.0, 0.0], angles[1]);
    let r3 = stokes_rotation_jones([0.0, 0.0, 1.0], angles[2]);
    r1.mul_mat(&r2).mul_mat(&r3)
}

/// Channel Jones matrix at symbol time `t_sym`.
pub fn channel_jones(cfg: &ChannelConfig, t_sym: f64) -> JonesMatrix {
    let theta = cfg.vib_depth_rad * (std::f64::consts::TAU * cfg.vib_freq_norm * t_sym).sin();
    static_jones(cfg.sop_static_rotation).mul_mat(&stokes_rotation_jones(cfg.sop_axis, theta))
}

/// Apply the time-varying SOP rotation sample by sample.
pub fn apply_sop_rotation(frame: &DualPolFrame, cfg: &ChannelConfig) -> DualPolFrame {
    let mut out = frame.clone();
    let j_static = static_jones(cfg.sop_static_rotation);
    let sps = frame.samples_per_symbol;
    for i in 0..frame.len() {
        let t_sym = i as f64 / sps;
        let theta = cfg.vib_depth_rad * (std::f64::consts::TAU * cfg.vib_freq_norm * t_sym).sin();
        let j = j_static.mul_mat(&stokes_rotation_jones(cfg.sop_axis, theta));
        let v = j.mul_vec([frame.x[i], frame.y[i]]);
        out.x[i] = v[0];
        out.y[i] = v[1];
    }
    out
}

/// Common multiplicative Wiener phase on both polarizations with
/// per-sample increment variance `2*pi*linewidth_norm/sps`.
pub fn apply_phase_noise(frame: &DualPolFrame, linewidth_norm: f64, rng: &mut ChaCha8Rng) -> Result<DualPolFrame> {
    if linewidth_norm < 0.0 {
        return Err(Error::config("linewidth_norm must be non-negative"));
    }
    let mut out = frame.clone();
    if linewidth_norm == 0.0 {
        return Ok(out);
    }
    let sigma = (std::f64::consts::TAU * linewidth_norm / frame.samples_per_symbol).sqrt();
    let mut phase = 0.0f64;
    for i in 0..frame.len() {
        let step: f64 = rng.sample(StandardNormal);
        phase += sigma * step;
        let rot = Complex64::from_polar(1.0, phase);
        out.x[i] *= rot;
        out.y[i] *= rot;
    }
    Ok(out)
}

/// Constant carrier frequency offset of `cfo_norm` cycles per symbol.
pub fn apply_cfo(frame: &DualPolFrame, cfo_norm: f64) -> DualPolFrame {
    crate::sigproc::mix_frequency(frame, cfo_norm)
}

/// Complex AWGN per polarization at `snr_db` against the frame's mean
/// signal power.
pub fn apply_awgn(
    frame: &DualPolFrame,
    snr_db: f64,
    rng_x: &mut ChaCha8Rng,
    rng_y: &mut ChaCha8Rng,
) -> DualPolFrame {
    let power = frame.mean_power();
    let sigma2 = power / 10f64.powf(snr_db / 10.0);
    let scale = (sigma2 / 2.0).sqrt();
    let mut out = frame.clone();
    for (pol, rng) in [(&mut out.x, rng_x), (&mut out.y, rng_y)] {
        for s in pol.iter_mut() {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *s += Complex64::new(re * scale, im * scale);
        }
    }
    out
}

/// Gain/phase error on the quadrature rail of both polarizations.
pub fn apply_iq_imbalance(frame: &DualPolFrame, imb: IqImbalance) -> DualPolFrame {
    let g = 10f64.powf(imb.gain_db / 20.0);
    let eps = imb.phase_deg.to_radians();
    let (sin_e, cos_e) = eps.sin_cos();
    let mut out = frame.clone();
    out.map_in_place(|pol| {
        for s in pol.iter_mut() {
            let q = g * (s.im * cos_e + s.re * sin_e);
            *s = Complex64::new(s.re, q);
        }
    });
    out
}

/// Delay the quadrature rail of both polarizations by a fractional number
/// of samples.
pub fn apply_skew(frame: &DualPolFrame, skew_samples: f64) -> DualPolFrame {
    if skew_samples == 0.0 {
        return frame.clone();
    }
    let mut out = frame.clone();
    out.map_in_place(|pol| {
        let q: Vec<Complex64> = pol.iter().map(|s| Complex64::new(s.im, 0.0)).collect();
        let delayed = fractional_delay(&q, skew_samples);
        for (s, d) in pol.iter_mut().zip(delayed) {
            *s = Complex64::new(s.re, d.re);
        }
    });
    out
}

/// Ground truth sampled at the SOP cadence: the channel inverse and its
/// probe response.
fn ground_truth_trajectory(cfg: &ChannelConfig) -> Result<(Vec<JonesMatrix>, StokesTrajectory)> {
    let n_snapshots = cfg.n_symbols / cfg.sop_sample_stride;
    let mut jones = Vec::with_capacity(n_snapshots);
    let mut stokes = Vec::with_capacity(n_snapshots);
    for k in 0..n_snapshots {
        let t_sym = (k * cfg.sop_sample_stride) as f64;
        let j_inv = channel_jones(cfg, t_sym).dagger();
        stokes.push(jones_to_stokes(j_inv.mul_vec(default_probe()))?);
        jones.push(j_inv);
    }
    Ok((
        jones,
        StokesTrajectory {
            samples: stokes,
            sample_rate_norm: 1.0 / cfg.sop_sample_stride as f64,
        },
    ))
}

/// Run the whole synthetic chain:
/// QPSK generation -> RRC shaping -> SOP rotation -> CFO -> phase noise ->
/// optional IQ imbalance / skew -> AWGN. The returned frame sits at
/// `cfg.sps` samples per symbol with unit mean power before the noise.
pub fn run_channel(cfg: &ChannelConfig) -> Result<(DualPolFrame, GroundTruth)> {
    cfg.validate()?;

    let ((bits_x, sym_x), (bits_y, sym_y)) = (
        gen_pol(cfg.n_symbols, &mut cfg.rng(stream::BITS_X)),
        gen_pol(cfg.n_symbols, &mut cfg.rng(stream::BITS_Y)),
    );

    // Zero-stuffed upsampling followed by the RRC shaping filter.
    let upsample = |syms: &[Complex64]| -> Vec<Complex64> {
        let mut out = vec![Complex64::default(); syms.len() * cfg.sps];
        for (k, s) in syms.iter().enumerate() {
            out[k * cfg.sps] = *s;
        }
        out
    };
    let taps = rrc_taps(cfg.rolloff, cfg.rrc_span_symbols, cfg.sps)?;
    let mut frame = fir_filter(
        &DualPolFrame::new(upsample(&sym_x), upsample(&sym_y), cfg.sps as f64)?,
        &taps,
    )?;
    // Normalize so the AWGN level is defined against unit signal power.
    let norm = frame.mean_power().sqrt();
    frame.map_in_place(|pol| {
        for s in pol.iter_mut() {
            *s /= norm;
        }
    });

    let frame = apply_sop_rotation(&frame, cfg);
    let frame = apply_cfo(&frame, cfg.cfo_norm);
    let frame = apply_phase_noise(&frame, cfg.linewidth_norm, &mut cfg.rng(stream::PHASE))?;
    let frame = match cfg.iq_imbalance {
        Some(imb) => apply_iq_imbalance(&frame, imb),
        None => frame,
    };
    let frame = match cfg.skew_samples {
        Some(skew) => apply_skew(&frame, skew),
        None => frame,
    };
    let frame = apply_awgn(
        &frame,
        cfg.snr_db,
        &mut cfg.rng(stream::AWGN_X),
        &mut cfg.rng(stream::AWGN_Y),
    );

    let (jones_inv_of_t, stokes_of_t) = ground_truth_trajectory(cfg)?;
    Ok((
        frame,
        GroundTruth {
            tx_bits_x: bits_x,
            tx_bits_y: bits_y,
            tx_symbols_x: sym_x,
            tx_symbols_y: sym_y,
            jones_inv_of_t,
            stokes_of_t,
        },
    ))
}
