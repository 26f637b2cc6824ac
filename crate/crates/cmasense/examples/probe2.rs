// stage-by-stage EVM breakdown for the fixed-point variants
use cmasense::harness::{acquire_frame, run_frontend, ExperimentConfig};
use cmasense::metrics::evm_rms;
use cmasense::rxdsp::{bps_recover, cma_run, ddlms_run, Arithmetic};
use num_complex::Complex64;

fn norm_evm(x: &[Complex64], y: &[Complex64], skip: usize) -> f64 {
    let p: f64 = x[skip..].iter().chain(y[skip..].iter()).map(|s| s.norm_sqr()).sum::<f64>()
        / ((x.len() - skip) + (y.len() - skip)) as f64;
    let v: Vec<Complex64> = x[skip..].iter().chain(y[skip..].iter()).map(|s| s / p.sqrt()).collect();
    evm_rms(&v).unwrap()
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let mu: f64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(0.00390625);
    let mu_dd: f64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1e-3);
    let mut cfg = ExperimentConfig::default();
    cfg.channel.n_symbols = 1 << 18;
    cfg.channel.vib_freq_norm = (2.0f64).powi(-13);
    cfg.psd.segment_len = 1 << 15;
    cfg.eq.mu_cma = mu;
    cfg.eq.mu_dd = mu_dd;

    let (frame, _) = acquire_frame(&cfg, 1).unwrap();
    let front = run_frontend(&frame, &cfg).unwrap();
    let skip = 1 << 14;
    for (label, arith) in [
        ("float".to_string(), Arithmetic::Float),
        ("w5".to_string(), Arithmetic::Fixed(cfg.eq.format_for_width(5).unwrap())),
        ("w6".to_string(), Arithmetic::Fixed(cfg.eq.format_for_width(6).unwrap())),
        ("w8".to_string(), Arithmetic::Fixed(cfg.eq.format_for_width(8).unwrap())),
    ] {
        let out = cma_run(&front.symbols, &cfg.eq.eq_config(arith)).unwrap();
        let e_cma = norm_evm(&out.x, &out.y, skip);
        let bx = bps_recover(&out.x, cfg.eq.bps_config()).unwrap();
        let by = bps_recover(&out.y, cfg.eq.bps_config()).unwrap();
        let e_bps = norm_evm(&bx, &by, skip);
        let (dx, dy) = ddlms_run(&bx, &by, cfg.eq.mu_dd).unwrap();
        let e_dd = norm_evm(&dx, &dy, skip);
        println!("{label:>6}: cma EVM {e_cma:.4}  bps {e_bps:.4}  ddlms {e_dd:.4}  sat {}", out.diagnostics.saturation_events);
    }
}
