//! Run orchestration: `simulate` (one seed, full output tree) and
//! `sweep` (seed repetition with aggregation).

use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::metrics::CommReport;
use crate::rxdsp::{Arithmetic, TapTrajectory};
use crate::sigproc::PsdEstimate;
use crate::sopsense::StokesTrajectory;

use super::config::ExperimentConfig;
use super::pipeline::{
    acquire_frame, rmse_vs_reference, run_frontend, run_variant, SensingOutput, VariantOutput,
};

/// Scalar metrics of one arithmetic variant.
#[derive(Debug, Clone)]
pub struct VariantMetrics {
    pub comm: CommReport,
    /// Against the float reference; 0 for the reference itself.
    pub angular_rmse_deg: Option<f64>,
    pub noise_floor: f64,
    pub psd_peak_freq: f64,
    pub psd_peak_bin: usize,
    pub expected_tone_bin: usize,
    pub saturation_events: u64,
    pub singularity_resets: u32,
    pub final_modulus_error: f64,
    pub weighted_cost: Option<f64>,
}

/// One sweep entry: either metrics or the failure that aborted it.
#[derive(Debug, Clone)]
pub struct VariantRecord {
    pub label: String,
    pub width: Option<u32>,
    pub outcome: std::result::Result<VariantMetrics, String>,
}

/// Everything one `simulate` produces, minus the bulk artifacts.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub seed: u64,
    pub frame_checksum: String,
    pub variants: Vec<VariantRecord>,
}

impl RunReport {
    pub fn variant(&self, label: &str) -> Option<&VariantRecord> {
        self.variants.iter().find(|v| v.label == label)
    }
}

fn metrics_of(out: &VariantOutput, rmse: Option<f64>) -> VariantMetrics {
    VariantMetrics {
        comm: out.comm.clone(),
        angular_rmse_deg: rmse,
        noise_floor: out.sensing.noise_floor,
        psd_peak_freq: out.sensing.peak_freq,
        psd_peak_bin: out.sensing.peak_bin,
        expected_tone_bin: out.sensing.expected_tone_bin,
        saturation_events: out.diagnostics.saturation_events,
        singularity_resets: out.diagnostics.singularity_resets,
        final_modulus_error: out.diagnostics.final_modulus_error,
        weighted_cost: out.complexity.as_ref().map(|c| c.weighted_cost),
    }
}

/// Run the float reference plus every sweep width over one captured
/// frame. With `out_dir` set, the full artifact tree is written; the
/// returned report always carries the scalar metrics.
pub fn execute_run(cfg: &ExperimentConfig, seed: u64, out_dir: Option<&Path>) -> Result<RunReport> {
    cfg.validate()?;
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
        write_text(&dir.join("config.toml"), &cfg.to_toml_string())?;
    }

    let (frame, truth) = acquire_frame(cfg, seed)?;
    let front = run_frontend(&frame, cfg)?;
    drop(frame);

    let mut variants = Vec::new();
    let float_out = run_variant(&front, cfg, Arithmetic::Float, truth.as_ref());
    let float_sensing: Option<SensingOutput> = match float_out {
        Ok(out) => {
            if let Some(dir) = out_dir {
                write_variant_artifacts(dir, "float", &out, cfg)?;
            }
            variants.push(VariantRecord {
                label: "float".to_string(),
                width: None,
                outcome: Ok(metrics_of(&out, Some(0.0))),
            });
            Some(out.sensing)
        }
        Err(e) => {
            variants.push(VariantRecord {
                label: "float".to_string(),
                width: None,
                outcome: Err(e.to_string()),
            });
            None
        }
    };

    for &width in &cfg.sweep_widths {
        let label = format!("w{width}");
        let arithmetic = Arithmetic::Fixed(cfg.eq.format_for_width(width)?);
        match run_variant(&front, cfg, arithmetic, truth.as_ref()) {
            Ok(out) => {
                let rmse = float_sensing
                    .as_ref()
                    .map(|fs| rmse_vs_reference(fs, &out.sensing))
                    .transpose()?;
                if let Some(dir) = out_dir {
                    write_variant_artifacts(dir, &label, &out, cfg)?;
                }
                variants.push(VariantRecord {
                    label,
                    width: Some(width),
                    outcome: Ok(metrics_of(&out, rmse)),
                });
            }
            Err(e) => variants.push(VariantRecord {
                label,
                width: Some(width),
                outcome: Err(e.to_string()),
            }),
        }
    }

    let report = RunReport {
        seed,
        frame_checksum: front.frame_checksum.clone(),
        variants,
    };
    if let Some(dir) = out_dir {
        write_summary_csv(&dir.join("summary.csv"), cfg, &report)?;
    }
    Ok(report)
}

/// `simulate`: one seed into the configured output directory.
pub fn cmd_simulate(cfg: &ExperimentConfig) -> Result<RunReport> {
    execute_run(cfg, cfg.seed, Some(&cfg.output_dir.clone()))
}

/// Aggregated sweep statistics for one variant label.
#[derive(Debug, Clone)]
pub struct AggregateRow {
    pub label: String,
    pub width: Option<u32>,
    pub n_ok: usize,
    pub evm_mean: f64,
    pub evm_std: f64,
    pub q_db_mean: f64,
    pub q_db_std: f64,
    pub rmse_mean: f64,
    pub rmse_std: f64,
    pub floor_db_mean: f64,
    pub floor_db_std: f64,
    pub tone_hits: usize,
    pub saturation_mean: f64,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub runs: Vec<RunReport>,
    pub rows: Vec<AggregateRow>,
}

/// `sweep`: repeat the simulation over consecutive seeds and aggregate
/// per-variant statistics. Runs in parallel up to `jobs` threads; each
/// seed writes its own subtree when `write_output` is set.
pub fn cmd_sweep(
    cfg: &ExperimentConfig,
    repeat: usize,
    jobs: usize,
    write_output: bool,
) -> Result<SweepReport> {
    if repeat == 0 {
        return Err(Error::config("sweep needs repeat >= 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::config(format!("thread pool: {e}")))?;
    let seeds: Vec<u64> = (0..repeat as u64).map(|i| cfg.seed + i).collect();
    let runs: Result<Vec<RunReport>> = pool.install(|| {
        seeds
            .par_iter()
            .map(|&seed| {
                let dir: Option<PathBuf> =
                    write_output.then(|| cfg.output_dir.join(format!("seed_{seed}")));
                execute_run(cfg, seed, dir.as_deref())
            })
            .collect()
    });
    let mut runs = runs?;
    runs.sort_by_key(|r| r.seed);

    let mut labels: Vec<(String, Option<u32>)> = vec![("float".to_string(), None)];
    for w in &cfg.sweep_widths {
        labels.push((format!("w{w}"), Some(*w)));
    }
    let rows = labels
        .into_iter()
        .map(|(label, width)| aggregate_label(&runs, &label, width))
        .collect();

    let report = SweepReport { runs, rows };
    if write_output {
        std::fs::create_dir_all(&cfg.output_dir)
            .map_err(|e| Error::io(cfg.output_dir.display().to_string(), e))?;
        write_aggregate_csv(&cfg.output_dir.join("aggregate.csv"), &report)?;
    }
    Ok(report)
}

fn aggregate_label(runs: &[RunReport], label: &str, width: Option<u32>) -> AggregateRow {
    let metrics: Vec<&VariantMetrics> = runs
        .iter()
        .filter_map(|r| r.variant(label))
        .filter_map(|v| v.outcome.as_ref().ok())
        .collect();
    let stat = |f: &dyn Fn(&VariantMetrics) -> f64| -> (f64, f64) {
        if metrics.is_empty() {
            return (f64::NAN, f64::NAN);
        }
        let vals: Vec<f64> = metrics.iter().map(|m| f(m)).collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / vals.len() as f64;
        (mean, var.sqrt())
    };
    let (evm_mean, evm_std) = stat(&|m| m.comm.evm_rms);
    let (q_db_mean, q_db_std) = stat(&|m| m.comm.q_db);
    let (rmse_mean, rmse_std) = stat(&|m| m.angular_rmse_deg.unwrap_or(0.0));
    let (floor_db_mean, floor_db_std) = stat(&|m| 10.0 * m.noise_floor.log10());
    let (saturation_mean, _) = stat(&|m| m.saturation_events as f64);
    AggregateRow {
        label: label.to_string(),
        width,
        n_ok: metrics.len(),
        evm_mean,
        evm_std,
        q_db_mean,
        q_db_std,
        rmse_mean,
        rmse_std,
        floor_db_mean,
        floor_db_std,
        tone_hits: metrics
            .iter()
            .filter(|m| m.psd_peak_bin == m.expected_tone_bin)
            .count(),
        saturation_mean,
    }
}

// ---------------------------------------------------------------------
// CSV / file writers. All numbers print with Rust's shortest round-trip
// formatting, so identical runs produce byte-identical trees.
// ---------------------------------------------------------------------

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
}

fn write_variant_artifacts(
    dir: &Path,
    label: &str,
    out: &VariantOutput,
    cfg: &ExperimentConfig,
) -> Result<()> {
    write_stokes_csv(
        &dir.join(format!("stokes_{label}.csv")),
        &out.sensing.rotated,
        out.sensing.first_symbol_index,
        cfg.eq.snapshot_stride as u64,
        cfg.output.stokes_stride,
    )?;
    write_psd_csv(&dir.join(format!("psd_{label}.csv")), &out.sensing.psd_s1)?;
    write_taps_csv(
        &dir.join(format!("taps_{label}.csv")),
        &out.trajectory,
        cfg.output.tap_stride,
    )?;
    Ok(())
}

fn write_stokes_csv(
    path: &Path,
    traj: &StokesTrajectory,
    first_symbol_index: u64,
    snapshot_stride: u64,
    stride: usize,
) -> Result<()> {
    let mut text = String::from("symbol_index,s1,s2,s3\n");
    for (k, s) in traj.samples.iter().enumerate().step_by(stride.max(1)) {
        let idx = first_symbol_index + k as u64 * snapshot_stride;
        text.push_str(&format!("{},{},{},{}\n", idx, s[0], s[1], s[2]));
    }
    write_text(path, &text)
}

fn write_psd_csv(path: &Path, psd: &PsdEstimate) -> Result<()> {
    let mut text = String::from("freq,power\n");
    for (f, p) in psd.freqs.iter().zip(&psd.power) {
        text.push_str(&format!("{f},{p}\n"));
    }
    write_text(path, &text)
}

fn write_taps_csv(path: &Path, traj: &TapTrajectory, stride: usize) -> Result<()> {
    let mut header = String::from("symbol_index");
    for branch in ["hxx", "hxy", "hyx", "hyy"] {
        for k in 0..traj.n_taps {
            header.push_str(&format!(",{branch}{k}_re,{branch}{k}_im"));
        }
    }
    header.push('\n');
    let mut text = header;
    for i in (0..traj.len()).step_by(stride.max(1)) {
        text.push_str(&traj.indices[i].to_string());
        for c in traj.snapshot(i) {
            text.push_str(&format!(",{},{}", c.re, c.im));
        }
        text.push('\n');
    }
    write_text(path, &text)
}

pub(super) const SUMMARY_HEADER: &str = "arithmetic,width,evm_rms,ber_est,ber_direct,q_db,angular_rmse_deg,noise_floor,noise_floor_db,psd_peak_freq,psd_peak_bin,expected_tone_bin,saturation_events,singularity_resets,final_modulus_error,weighted_cost,status,frame_checksum";

fn write_summary_csv(path: &Path, cfg: &ExperimentConfig, report: &RunReport) -> Result<()> {

    let mut text = String::from(SUMMARY_HEADER);
    text.push('\n');
    for v in &report.variants {
        let width = v.width.map(|w| w.to_string()).unwrap_or_default();
        match &v.outcome {
            Ok(m) => {
                let ber_direct = m
                    .comm
                    .ber_direct
                    .map(|b| b.to_string())
                    .unwrap_or_default();
                let rmse = m
                    .angular_rmse_deg
                    .map(|r| r.to_string())
                    .unwrap_or_default();
                let cost = m.weighted_cost.map(|c| c.to_string()).unwrap_or_default();
                text.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},ok,{}\n",
                    v.label,
                    width,
                    m.comm.evm_rms,
                    m.comm.ber_est,
                    ber_direct,
                    m.comm.q_db,
                    rmse,
                    m.noise_floor,
                    10.0 * m.noise_floor.log10(),
                    m.psd_peak_freq,
                    m.psd_peak_bin,
                    m.expected_tone_bin,
                    m.saturation_events,
                    m.singularity_resets,
                    m.final_modulus_error,
                    cost,
                    report.frame_checksum,
                ));
            }
            Err(reason) => {
                let clean = reason.replace(',', ";").replace('\n', " ");
                text.push_str(&format!(
                    "{},{},,,,,,,,,,,,,,,failed: {},{}\n",
                    v.label, width, clean, report.frame_checksum,
                ));
            }
        }
    }
    let _ = cfg;
    write_text(path, &text)
}

fn write_aggregate_csv(path: &Path, report: &SweepReport) -> Result<()> {
    let mut text = String::from(
        "arithmetic,width,n_ok,evm_mean,evm_std,q_db_mean,q_db_std,rmse_mean,rmse_std,floor_db_mean,floor_db_std,tone_hits,saturation_mean\n",
    );
    for r in &report.rows {
        let width = r.width.map(|w| w.to_string()).unwrap_or_default();
        text.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.label,
            width,
            r.n_ok,
            r.evm_mean,
            r.evm_std,
            r.q_db_mean,
            r.q_db_std,
            r.rmse_mean,
            r.rmse_std,
            r.floor_db_mean,
            r.floor_db_std,
            r.tone_hits,
            r.saturation_mean,
        ));
    }
    write_text(path, &text)
}

/// Write a run summary to any writer (used by the CLI for stdout echo).
pub fn print_report(report: &RunReport, mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "seed {} frame {}", report.seed, &report.frame_checksum[..12])?;
    for v in &report.variants {
        match &v.outcome {
            Ok(m) => writeln!(
                out,
                "  {:>6}: EVM {:.4}  Q {:.2} dB  rmse {}  floor {:.2} dB  tone bin {}/{}  sat {}",
                v.label,
                m.comm.evm_rms,
                m.comm.q_db,
                m.angular_rmse_deg
                    .map(|r| format!("{r:.3} deg"))
                    .unwrap_or_else(|| "-".to_string()),
                10.0 * m.noise_floor.log10(),
                m.psd_peak_bin,
                m.expected_tone_bin,
                m.saturation_events,
            )?,
            Err(reason) => writeln!(out, "  {:>6}: FAILED {reason}", v.label)?,
        }
    }
    Ok(())
}
