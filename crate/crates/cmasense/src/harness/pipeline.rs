//! The experiment engine: one shared front end per captured frame, one
//! backend pass per arithmetic variant, sensing analysis, and metric
//! assembly. Pure (no file IO) so sweeps and tests can drive it directly.

use num_complex::Complex64;
use sha2::{Digest, Sha256};

use crate::channel::{self, GroundTruth};
use crate::error::{Error, Result};
use crate::metrics::{self, CommReport, ComplexityReport};
use crate::rxdsp::{
    bps_recover, cfo_estimate, cma_run, ddlms_run, gardner_timing, gsop_orthogonalize,
    Arithmetic, CmaDiagnostics, GardnerConfig, TapTrajectory,
};
use crate::sigproc::{
    fir_filter, mix_frequency, noise_floor, resample_rational, rrc_taps, tone_exclusion_bands,
    welch_psd, DualPolFrame, PsdEstimate,
};
use crate::sopsense::{
    angular_rmse, centroid, default_probe, probe_stokes, rotate_to_north_pole, JonesExtraction,
    StokesTrajectory,
};

use super::config::ExperimentConfig;

/// Everything the arithmetic variants share: the frame has been captured
/// once, orthogonalized, CFO-compensated, matched-filtered and timed.
pub struct FrontEndOutput {
    /// 1 sample/symbol, unit mean power per polarization.
    pub symbols: DualPolFrame,
    pub cfo_estimate_norm: f64,
    pub cfo_confident: bool,
    pub frame_checksum: String,
}

/// SHA-256 of the raw sample bytes; recorded so reports can prove every
/// variant consumed the identical frame.
pub fn frame_checksum(frame: &DualPolFrame) -> String {
    let mut hasher = Sha256::new();
    for pol in [&frame.x, &frame.y] {
        for s in pol {
            hasher.update(s.re.to_le_bytes());
            hasher.update(s.im.to_le_bytes());
        }
    }
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Front end shared by every arithmetic variant.
pub fn run_frontend(frame: &DualPolFrame, cfg: &ExperimentConfig) -> Result<FrontEndOutput> {
    let checksum = frame_checksum(frame);
    let ortho = gsop_orthogonalize(frame)?;
    let cfo = cfo_estimate(&ortho)?;
    let mixed = mix_frequency(&ortho, -cfo.cfo_norm);
    let taps = rrc_taps(cfg.channel.rolloff, cfg.channel.rrc_span_symbols, cfg.channel.sps)?;
    let filtered = fir_filter(&mixed, &taps)?;
    let mut timed = gardner_timing(&filtered, GardnerConfig::default())?;

    // Per-polarization AGC so the CMA's unit constant modulus target is
    // calibrated.
    timed.map_in_place(|pol| {
        let power: f64 = pol.iter().map(|s| s.norm_sqr()).sum::<f64>() / pol.len().max(1) as f64;
        let scale = power.sqrt();
        for s in pol.iter_mut() {
            *s /= scale;
        }
    });

    Ok(FrontEndOutput {
        symbols: timed,
        cfo_estimate_norm: cfo.cfo_norm,
        cfo_confident: cfo.confident,
        frame_checksum: checksum,
    })
}

/// Sensing products of one variant.
pub struct SensingOutput {
    /// Post-rotation trajectory, settle prefix removed.
    pub rotated: StokesTrajectory,
    /// Absolute symbol index of the first retained snapshot.
    pub first_symbol_index: u64,
    /// Spectrum of the analysis component (S1 or S2, whichever carries
    /// the vibration after the centroid rotation).
    pub psd_s1: PsdEstimate,
    /// 0 when the S1 series carried more AC power, 1 for S2.
    pub component: usize,
    pub noise_floor: f64,
    pub peak_bin: usize,
    pub peak_freq: f64,
    /// Bin the injected vibration tone should occupy.
    pub expected_tone_bin: usize,
}

/// One arithmetic variant, end to end.
pub struct VariantOutput {
    pub arithmetic: Arithmetic,
    pub x: Vec<Complex64>,
    pub y: Vec<Complex64>,
    pub trajectory: TapTrajectory,
    pub diagnostics: CmaDiagnostics,
    pub sensing: SensingOutput,
    pub comm: CommReport,
    pub complexity: Option<ComplexityReport>,
}

/// Run one arithmetic variant over the shared front-end output.
pub fn run_variant(
    front: &FrontEndOutput,
    cfg: &ExperimentConfig,
    arithmetic: Arithmetic,
    truth: Option<&GroundTruth>,
) -> Result<VariantOutput> {
    let eq_cfg = cfg.eq.eq_config(arithmetic);
    let cma = cma_run(&front.symbols, &eq_cfg)?;

    let bps_cfg = cfg.eq.bps_config();
    let x = bps_recover(&cma.x, bps_cfg)?;
    let y = bps_recover(&cma.y, bps_cfg)?;
    let (x, y) = ddlms_run(&x, &y, cfg.eq.mu_dd)?;

    let settle_symbols = (cfg.channel.n_symbols as f64 * cfg.settle_fraction) as usize;
    let measure_from = settle_symbols.min(x.len().saturating_sub(1));
    // Trim the transmitted reference by the same settle window so the
    // residual alignment lag is only the pipeline group delay.
    let comm = metrics::comm_report(
        &x[measure_from..],
        &y[measure_from..],
        truth.map(|t| {
            (
                &t.tx_symbols_x[measure_from.min(t.tx_symbols_x.len())..],
                &t.tx_symbols_y[measure_from.min(t.tx_symbols_y.len())..],
                &t.tx_bits_x[(2 * measure_from).min(t.tx_bits_x.len())..],
                &t.tx_bits_y[(2 * measure_from).min(t.tx_bits_y.len())..],
            )
        }),
    )?;

    let sensing = sensing_analysis(&cma.trajectory, cfg, settle_symbols)?;
    let complexity = match arithmetic {
        Arithmetic::Float => None,
        Arithmetic::Fixed(fmt) => Some(metrics::complexity_report(&eq_cfg, fmt.total_bits())),
    };

    Ok(VariantOutput {
        arithmetic,
        x,
        y,
        trajectory: cma.trajectory,
        diagnostics: cma.diagnostics,
        sensing,
        comm,
        complexity,
    })
}

/// Taps -> Jones -> Stokes -> centroid rotation -> S1 spectrum.
pub fn sensing_analysis(
    trajectory: &TapTrajectory,
    cfg: &ExperimentConfig,
    settle_symbols: usize,
) -> Result<SensingOutput> {
    let jones = trajectory.jones_series(JonesExtraction::DcResponse)?;
    let full = probe_stokes(&jones, trajectory.sop_sample_rate_norm, default_probe())?;

    // Drop the equalizer's settling transient before any statistics.
    let skip = trajectory
        .indices
        .iter()
        .position(|i| *i >= settle_symbols as u64)
        .unwrap_or(0);
    let first_symbol_index = trajectory.indices.get(skip).copied().unwrap_or(0);
    let settled = StokesTrajectory {
        samples: full.samples[skip..].to_vec(),
        sample_rate_norm: full.sample_rate_norm,
    };

    let c = centroid(&settled)?;
    let rotated = rotate_to_north_pole(&settled, c);

    // After the centroid rotation, the vibration arc's azimuth decides
    // how the tone splits between S1 and S2; analyze whichever component
    // carries more AC power.
    let (s1_dc, s2_dc) = crate::sopsense::remove_dc(&rotated);
    let ac_power = |series: &[f64]| series.iter().map(|v| v * v).sum::<f64>();
    let component = usize::from(ac_power(&s2_dc) > ac_power(&s1_dc));
    let series = rotated.component(component);
    let psd_s1 = welch_psd(&series, cfg.psd.segment_len, cfg.psd.overlap, cfg.psd.window)?;

    // The vibration tone in SOP-sample units.
    let tone_freq = cfg.channel.vib_freq_norm * cfg.eq.snapshot_stride as f64;
    let expected_tone_bin = psd_s1.bin_of(tone_freq);
    let peak_bin = psd_s1.peak_bin_excluding_dc(cfg.psd.dc_guard_bins);
    let bands = tone_exclusion_bands(
        tone_freq,
        psd_s1.df(),
        cfg.psd.dc_guard_bins,
        cfg.psd.tone_guard_bins,
    );
    let floor = noise_floor(&psd_s1, &bands)?;

    Ok(SensingOutput {
        rotated,
        first_symbol_index,
        peak_freq: psd_s1.freqs[peak_bin],
        psd_s1,
        component,
        noise_floor: floor,
        peak_bin,
        expected_tone_bin,
    })
}

/// Angular RMSE of a variant's rotated trajectory against the float
/// reference's.
pub fn rmse_vs_reference(reference: &SensingOutput, variant: &SensingOutput) -> Result<f64> {
    angular_rmse(&reference.rotated, &variant.rotated)
}

/// Source frame for a run: either the synthetic channel (with ground
/// truth) or an ingested capture.
pub fn acquire_frame(cfg: &ExperimentConfig, seed: u64) -> Result<(DualPolFrame, Option<GroundTruth>)> {
    if let Some(cap) = &cfg.capture {
        let frame = super::ingest::ingest_frame(
            &cap.path,
            cap.format,
            cap.sps_num as f64 / cap.sps_den as f64,
        )?;
        // Resample to the pipeline's native 2 samples/symbol.
        let resampled = resample_rational(&frame, 2 * cap.sps_den, cap.sps_num)?;
        if (resampled.samples_per_symbol - 2.0).abs() > 1e-9 {
            return Err(Error::config(format!(
                "capture resampling produced {} samples/symbol",
                resampled.samples_per_symbol
            )));
        }
        return Ok((resampled, None));
    }
    let mut ch = cfg.channel.clone();
    ch.seed = seed;
    ch.sop_sample_stride = cfg.eq.snapshot_stride;
    let (frame, truth) = channel::run_channel(&ch)?;
    Ok((frame, Some(truth)))
}
