//! Experiment configuration: one TOML file, every default overridable
//! from the command line with `--section.key=value` flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channel::ChannelConfig;
use crate::error::{Error, Result};
use crate::fixnum::{FxFormat, Rounding};
use crate::rxdsp::{Arithmetic, BpsConfig, EqConfig};
use crate::sigproc::Window;

/// Equalizer and carrier-recovery settings as they appear in the config
/// file. The arithmetic itself is chosen per sweep entry, not here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EqSection {
    pub n_taps: usize,
    pub mu_cma: f64,
    pub r2: f64,
    pub update_stride: usize,
    pub snapshot_stride: usize,
    /// Integer bits (sign included) of the fixed-point datapath.
    pub int_bits: u32,
    pub rounding: Rounding,
    /// Guard bits of the coefficient update accumulator (0 = strict
    /// W-bit registers with a hard update dead-zone).
    pub update_guard_bits: u32,
    pub mu_dd: f64,
    pub bps_n_test: usize,
    pub bps_block: usize,
}

impl Default for EqSection {
    fn default() -> Self {
        let eq = EqConfig::default();
        EqSection {
            n_taps: eq.n_taps,
            mu_cma: eq.mu_cma,
            r2: eq.r2,
            update_stride: eq.update_stride,
            snapshot_stride: eq.snapshot_stride,
            int_bits: 2,
            rounding: Rounding::default(),
            update_guard_bits: eq.update_guard_bits,
            mu_dd: 1e-3,
            bps_n_test: 32,
            bps_block: 64,
        }
    }
}

impl EqSection {
    pub fn format_for_width(&self, width: u32) -> Result<FxFormat> {
        Ok(FxFormat::new(width, self.int_bits, self.rounding)?)
    }

    pub fn eq_config(&self, arithmetic: Arithmetic) -> EqConfig {
        EqConfig {
            n_taps: self.n_taps,
            mu_cma: self.mu_cma,
            r2: self.r2,
            update_stride: self.update_stride,
            arithmetic,
            snapshot_stride: self.snapshot_stride,
            update_guard_bits: self.update_guard_bits,
        }
    }

    pub fn bps_config(&self) -> BpsConfig {
        BpsConfig {
            n_test: self.bps_n_test,
            block: self.bps_block,
        }
    }
}

/// Welch estimation parameters for the SOP spectra.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PsdSection {
    /// Segment length in SOP samples. Must resolve the vibration tone:
    /// the tone bin is `vib_freq_norm * snapshot_stride * segment_len`.
    pub segment_len: usize,
    pub overlap: f64,
    pub window: Window,
    /// Bins treated as the DC band in peak searches and floor estimates.
    pub dc_guard_bins: usize,
    /// Guard half-width (bins) around the tone and its harmonics.
    pub tone_guard_bins: usize,
}

impl Default for PsdSection {
    fn default() -> Self {
        PsdSection {
            segment_len: 1 << 16,
            overlap: 0.5,
            window: Window::Hann,
            dc_guard_bins: 4,
            tone_guard_bins: 4,
        }
    }
}

/// CSV export decimation. Analysis always runs on the full-rate series;
/// these only thin the files on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputSection {
    pub stokes_stride: usize,
    pub tap_stride: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            stokes_stride: 16,
            tap_stride: 256,
        }
    }
}

/// On-disk sample format of an ingested capture.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CaptureFormat {
    /// Interleaved little-endian f32: XI, XQ, YI, YQ per record.
    F32x4,
    /// Four numeric columns per line.
    Csv,
}

/// Replace the synthetic channel by a captured file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptureSection {
    pub path: PathBuf,
    pub format: CaptureFormat,
    /// Input rate as a rational number of samples per symbol
    /// (e.g. 32/5 = 6.4); the pipeline resamples to 2.
    pub sps_num: usize,
    pub sps_den: usize,
}

/// The whole experiment: channel, receiver, sweep and output settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Fixed-point widths to sweep; the float reference always runs.
    pub sweep_widths: Vec<u32>,
    /// Pre-FEC threshold line for the reports, in dB.
    pub threshold_q_db: f64,
    /// Fraction of the run discarded as equalizer settling time before
    /// metrics are measured.
    pub settle_fraction: f64,
    pub channel: ChannelConfig,
    pub eq: EqSection,
    pub psd: PsdSection,
    pub output: OutputSection,
    pub capture: Option<CaptureSection>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 1,
            output_dir: PathBuf::from("runs/default"),
            sweep_widths: vec![5, 6, 7, 8],
            threshold_q_db: 12.6,
            settle_fraction: 1.0 / 16.0,
            channel: ChannelConfig::default(),
            eq: EqSection::default(),
            psd: PsdSection::default(),
            output: OutputSection::default(),
            capture: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        for w in &self.sweep_widths {
            if !(4..=32).contains(w) {
                return Err(Error::config(format!("sweep width {w} outside [4, 32]")));
            }
            self.eq.format_for_width(*w)?;
        }
        if !(0.0..0.5).contains(&self.settle_fraction) {
            return Err(Error::config("settle_fraction must be in [0, 0.5)"));
        }
        if let Some(cap) = &self.capture {
            if cap.sps_num == 0 || cap.sps_den == 0 {
                return Err(Error::config("capture sps must be a nonzero rational"));
            }
        }
        self.channel.validate()?;
        self.eq.eq_config(Arithmetic::Float).validate()?;
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::config(format!("bad config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}

/// Apply `--section.key=value` overrides on top of a config file (or the
/// defaults). Values parse as TOML first (numbers, booleans, arrays),
/// falling back to a bare string.
pub fn load_with_overrides(
    config_path: Option<&Path>,
    overrides: &[(String, String)],
) -> Result<ExperimentConfig> {
    let base = match config_path {
        Some(p) => std::fs::read_to_string(p).map_err(|e| Error::io(p.display().to_string(), e))?,
        None => String::new(),
    };
    let mut table: toml::Table = toml::from_str(&base)
        .map_err(|e| Error::config(format!("bad config file: {e}")))?;

    for (path, raw) in overrides {
        let value = parse_override_value(raw);
        insert_path(&mut table, path, value)?;
    }

    let cfg: ExperimentConfig = toml::Table::try_into(table)
        .map_err(|e| Error::config(format!("bad config after overrides: {e}")))?;
    cfg.validate()?;
    Ok(cfg)
}

fn parse_override_value(raw: &str) -> toml::Value {
    let wrapped = format!("v = {raw}");
    if let Ok(t) = toml::from_str::<toml::Table>(&wrapped) {
        if let Some(v) = t.get("v") {
            return v.clone();
        }
    }
    toml::Value::String(raw.to_string())
}

fn insert_path(table: &mut toml::Table, path: &str, value: toml::Value) -> Result<()> {
    let mut parts = path.split('.').peekable();
    let mut current = table;
    while let Some(part) = parts.next() {
        if parts.peek().is_none() {
            current.insert(part.to_string(), value);
            return Ok(());
        }
        current = current
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| Error::config(format!("override path `{path}` crosses a non-table")))?;
    }
    Err(Error::config(format!("empty override path `{path}`")))
}

/// Split raw CLI arguments into `--x.y=z` overrides and everything else.
pub fn split_override_args(args: &[String]) -> (Vec<String>, Vec<(String, String)>) {
    let mut rest = Vec::new();
    let mut overrides = Vec::new();
    for arg in args {
        if let Some(body) = arg.strip_prefix("--") {
            if let Some((key, value)) = body.split_once('=') {
                if key.contains('.') {
                    overrides.push((key.to_string(), value.to_string()));
                    continue;
                }
            }
        }
        rest.push(arg.clone());
    }
    (rest, overrides)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        let text = cfg.to_toml_string();
        let back = ExperimentConfig::from_toml_str(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn overrides_reach_nested_fields() {
        let cfg = load_with_overrides(
            None,
            &[
                ("channel.snr_db".to_string(), "12.5".to_string()),
                ("eq.n_taps".to_string(), "7".to_string()),
                ("sweep_widths".to_string(), "[6, 8]".to_string()),
            ],
        )
        .unwrap();
        assert_eq!(cfg.channel.snr_db, 12.5);
        assert_eq!(cfg.eq.n_taps, 7);
        assert_eq!(cfg.sweep_widths, vec![6, 8]);
    }

    #[test]
    fn bad_width_rejected() {
        let err = load_with_overrides(None, &[("sweep_widths".to_string(), "[3]".to_string())]);
        assert!(err.is_err());
    }

    #[test]
    fn override_splitting() {
        let args: Vec<String> = ["--config", "x.toml", "--channel.snr_db=9", "--jobs", "2"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let (rest, ovr) = split_override_args(&args);
        assert_eq!(rest, vec!["--config", "x.toml", "--jobs", "2"]);
        assert_eq!(ovr, vec![("channel.snr_db".to_string(), "9".to_string())]);
    }

    #[test]
    fn format_string_accepted_in_eq_section() {
        let cfg = load_with_overrides(None, &[("eq.int_bits".to_string(), "3".to_string())]).unwrap();
        assert_eq!(cfg.eq.format_for_width(7).unwrap().to_string(), "Q3.4");
    }
}
