//! Plot-data and markdown emission from a completed run directory.
//!
//! Produces five gnuplot-ready data products under `<run>/plot/` plus a
//! markdown summary table. Everything regenerates idempotently from the
//! CSVs `simulate` wrote; the only timestamp lives in the markdown
//! header.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

use super::run::SUMMARY_HEADER;

#[derive(Debug, Clone, Default)]
struct SummaryRow {
    arithmetic: String,
    width: Option<u32>,
    fields: std::collections::HashMap<String, String>,
}

impl SummaryRow {
    fn num(&self, key: &str) -> Option<f64> {
        self.fields.get(key).and_then(|v| v.parse().ok())
    }

    fn get(&self, key: &str) -> &str {
        self.fields.get(key).map(String::as_str).unwrap_or("")
    }
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))
}

fn read_summary(run_dir: &Path) -> Result<Vec<SummaryRow>> {
    let path = run_dir.join("summary.csv");
    let text = read_file(&path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::config(format!("{}: empty summary", path.display())))?;
    if header != SUMMARY_HEADER {
        return Err(Error::config(format!(
            "{}: unexpected summary header",
            path.display()
        )));
    }
    let columns: Vec<&str> = header.split(',').collect();
    let mut rows = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let values: Vec<&str> = line.split(',').collect();
        let mut row = SummaryRow::default();
        for (col, val) in columns.iter().zip(&values) {
            row.fields.insert(col.to_string(), val.to_string());
        }
        row.arithmetic = row.get("arithmetic").to_string();
        row.width = row.fields.get("width").and_then(|w| w.parse().ok());
        rows.push(row);
    }
    Ok(rows)
}

/// Two-column csv (with header) -> vector of (a, b).
fn read_pairs(path: &Path, col_a: usize, col_b: usize) -> Result<Vec<(f64, f64)>> {
    let text = read_file(path)?;
    let mut out = Vec::new();
    for line in text.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() <= col_a.max(col_b) {
            continue;
        }
        if let (Ok(a), Ok(b)) = (fields[col_a].parse(), fields[col_b].parse()) {
            out.push((a, b));
        }
    }
    Ok(out)
}

fn read_stokes(path: &Path) -> Result<Vec<(f64, f64, f64, f64)>> {
    let text = read_file(path)?;
    let mut out = Vec::new();
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() < 4 {
            continue;
        }
        if let (Ok(i), Ok(s1), Ok(s2), Ok(s3)) =
            (f[0].parse(), f[1].parse(), f[2].parse(), f[3].parse())
        {
            out.push((i, s1, s2, s3));
        }
    }
    Ok(out)
}

/// The threshold used for the Q-vs-width plot comes from the run's echoed
/// config.
fn threshold_from_config(run_dir: &Path) -> Result<f64> {
    let cfg = super::config::ExperimentConfig::from_toml_str(&read_file(
        &run_dir.join("config.toml"),
    )?)?;
    Ok(cfg.threshold_q_db)
}

/// Generate the plot data and markdown summary for a run directory.
/// Returns the list of files written.
pub fn cmd_report(run_dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    let rows = read_summary(run_dir)?;
    let threshold_q = threshold_from_config(run_dir)?;
    let plot_dir = run_dir.join("plot");
    std::fs::create_dir_all(&plot_dir).map_err(|e| Error::io(plot_dir.display().to_string(), e))?;
    let mut written = Vec::new();

    let ok_widths: Vec<&SummaryRow> = rows
        .iter()
        .filter(|r| r.width.is_some() && r.get("status") == "ok")
        .collect();

    // 1. Angular RMSE vs width.
    let mut rmse = String::from("# width angular_rmse_deg\n");
    for r in &ok_widths {
        if let (Some(w), Some(v)) = (r.width, r.num("angular_rmse_deg")) {
            writeln!(rmse, "{w} {v}").unwrap();
        }
    }
    written.push(write_product(&plot_dir.join("rmse_vs_width.dat"), &rmse)?);

    // 2. Q-factor vs width with the pre-FEC threshold line.
    let mut q = String::from("# width q_db threshold_db\n");
    for r in &ok_widths {
        if let (Some(w), Some(v)) = (r.width, r.num("q_db")) {
            writeln!(q, "{w} {v} {threshold_q}").unwrap();
        }
    }
    if let Some(float_row) = rows.iter().find(|r| r.arithmetic == "float") {
        if let Some(v) = float_row.num("q_db") {
            writeln!(q, "# float {v}").unwrap();
        }
    }
    written.push(write_product(&plot_dir.join("q_vs_width.dat"), &q)?);

    // 3. PSD overlays (dB), one gnuplot index block per variant.
    let mut psd = String::from("# freq power_db per variant block\n");
    for r in &rows {
        if r.get("status") != "ok" {
            continue;
        }
        let label = &r.arithmetic;
        let pairs = read_pairs(&run_dir.join(format!("psd_{label}.csv")), 0, 1)?;
        writeln!(psd, "# variant {label}").unwrap();
        for (f, p) in pairs {
            writeln!(psd, "{f} {}", 10.0 * p.max(1e-300).log10()).unwrap();
        }
        psd.push_str("\n\n");
    }
    written.push(write_product(&plot_dir.join("psd_overlay.dat"), &psd)?);

    // 4. S2 time series per variant.
    let mut s2 = String::from("# symbol_index s2 per variant block\n");
    for r in &rows {
        if r.get("status") != "ok" {
            continue;
        }
        let label = &r.arithmetic;
        let samples = read_stokes(&run_dir.join(format!("stokes_{label}.csv")))?;
        writeln!(s2, "# variant {label}").unwrap();
        for (idx, _, v, _) in samples {
            writeln!(s2, "{idx} {v}").unwrap();
        }
        s2.push_str("\n\n");
    }
    written.push(write_product(&plot_dir.join("s2_overlay.dat"), &s2)?);

    // 5. Poincare trajectories: three columns per variant block.
    let mut poincare = String::from("# s1 s2 s3 per variant block\n");
    for r in &rows {
        if r.get("status") != "ok" {
            continue;
        }
        let label = &r.arithmetic;
        let samples = read_stokes(&run_dir.join(format!("stokes_{label}.csv")))?;
        writeln!(poincare, "# variant {label}").unwrap();
        for (_, s1, s2v, s3) in samples {
            writeln!(poincare, "{s1} {s2v} {s3}").unwrap();
        }
        poincare.push_str("\n\n");
    }
    written.push(write_product(&plot_dir.join("poincare_overlay.dat"), &poincare)?);

    // Markdown summary table.
    let md_path = run_dir.join("report.md");
    write_product(&md_path, &markdown_summary(&rows, threshold_q))?;
    written.push(md_path);

    Ok(written)
}

fn write_product(path: &Path, text: &str) -> Result<std::path::PathBuf> {
    std::fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(path.to_path_buf())
}

fn markdown_summary(rows: &[SummaryRow], threshold_q: f64) -> String {
    let now = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let mut md = String::new();
    writeln!(md, "# Bit-width sweep report\n").unwrap();
    writeln!(md, "Generated at unix time {now}. Pre-FEC threshold: {threshold_q} dB.\n").unwrap();
    writeln!(
        md,
        "| arithmetic | EVM | est. BER | direct BER | Q (dB) | angular RMSE (deg) | noise floor (dB) | tone bin | saturations | status |"
    )
    .unwrap();
    writeln!(md, "|---|---|---|---|---|---|---|---|---|---|").unwrap();
    for r in rows {
        let fmt_num = |key: &str, digits: usize| -> String {
            r.num(key)
                .map(|v| format!("{v:.digits$}"))
                .unwrap_or_else(|| "-".to_string())
        };
        let fmt_sci = |key: &str| -> String {
            r.num(key)
                .map(|v| format!("{v:.2e}"))
                .unwrap_or_else(|| "-".to_string())
        };
        let tone = if r.get("psd_peak_bin") == r.get("expected_tone_bin") {
            format!("{} (hit)", r.get("psd_peak_bin"))
        } else {
            format!("{} (want {})", r.get("psd_peak_bin"), r.get("expected_tone_bin"))
        };
        writeln!(
            md,
            "| {} | {} | {} | {} | {} | {} | {} | {} | {} | {} |",
            r.arithmetic,
            fmt_num("evm_rms", 4),
            fmt_sci("ber_est"),
            fmt_sci("ber_direct"),
            fmt_num("q_db", 2),
            fmt_num("angular_rmse_deg", 3),
            fmt_num("noise_floor_db", 2),
            tone,
            r.get("saturation_events"),
            r.get("status"),
        )
        .unwrap();
    }
    md
}
