// freeze regression bounds: W8-vs-float max tap deviation; monotone consistency 8->12->16
use cmasense::harness::{acquire_frame, run_frontend, ExperimentConfig};
use cmasense::rxdsp::{cma_run, Arithmetic};

fn main() {
    let mut cfg = ExperimentConfig::default();
    cfg.channel.n_symbols = 1 << 17;
    cfg.channel.vib_freq_norm = (2.0f64).powi(-12);
    let (frame, _) = acquire_frame(&cfg, 1).unwrap();
    let front = run_frontend(&frame, &cfg).unwrap();
    let f = cma_run(&front.symbols, &cfg.eq.eq_config(Arithmetic::Float)).unwrap();
    for w in [8u32, 12, 16] {
        let q = cma_run(&front.symbols, &cfg.eq.eq_config(Arithmetic::Fixed(cfg.eq.format_for_width(w).unwrap()))).unwrap();
        let n = f.trajectory.len().min(q.trajectory.len());
        let mut max_dev = 0.0f64;
        for i in 0..n {
            for (a, b) in f.trajectory.snapshot(i).iter().zip(q.trajectory.snapshot(i)) {
                max_dev = max_dev.max((a - b).norm());
            }
        }
        let step = 2.0f64.powi(-(w as i32 - 2));
        println!("w{w}: max tap dev {max_dev:.5} = {:.2} steps(W)", max_dev / step);
    }
}
