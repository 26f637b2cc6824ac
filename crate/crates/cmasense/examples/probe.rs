// scratch probe: default-scale sweep summary
use cmasense::harness::{cmd_sweep, ExperimentConfig};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let seeds: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(2);
    let cfg = ExperimentConfig::default();
    let t0 = std::time::Instant::now();
    let sweep = cmd_sweep(&cfg, seeds, 2, false).unwrap();
    for row in &sweep.rows {
        println!(
            "{:>6}: EVM {:.4}  Q {:6.2}+/-{:.2} dB  rmse {:7.3}+/-{:.3} deg  floor {:7.2}+/-{:.2} dB  tone {}/{}  sat {:.0}",
            row.label, row.evm_mean, row.q_db_mean, row.q_db_std, row.rmse_mean, row.rmse_std,
            row.floor_db_mean, row.floor_db_std, row.tone_hits, row.n_ok, row.saturation_mean,
        );
    }
    for run in &sweep.runs {
        for v in &run.variants {
            if let Err(e) = &v.outcome {
                println!("seed {} {}: FAILED {e}", run.seed, v.label);
            }
        }
    }
    println!("elapsed {:.1?}", t0.elapsed());
}
