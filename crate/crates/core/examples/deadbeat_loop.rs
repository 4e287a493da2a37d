//! The deadbeat variant: the controller clears its estimate between samples, so the
//! quantizer can stay centered at zero. Compare sample counts with the standard loop.

use std::path::Path;

use selftrig::cli::{DEADBEAT_CONFIG, STANDARD_CONFIG};
use selftrig::config::parse_config;
use selftrig::sim::{estimate_decay, run_closed_loop};

fn main() -> selftrig::Result<()> {
    println!("{:>9} {:>5} {:>8} {:>12} {:>8}", "variant", "N", "samples", "min |x|/|x0|", "rate");
    for text in [STANDARD_CONFIG, DEADBEAT_CONFIG] {
        for levels in [11, 31, 101] {
            let mut cfg = parse_config(text)?;
            cfg.trigger.levels = levels;
            // sigma must lie in [1/N, 1/alpha); below it the trigger uses 1/N.
            let sc = cfg.scenario(Path::new("."))?;
            let trace = run_closed_loop(&sc)?;
            let norms = trace.state_norms();
            let min = norms.iter().cloned().fold(f64::INFINITY, f64::min);
            println!(
                "{:>9} {:>5} {:>8} {:>12.3e} {:>8.5}",
                sc.spec.variant.to_string(),
                levels,
                trace.sample_count(),
                min / norms[0],
                estimate_decay(&trace)?.rate
            );
            if let Some(offset) = trace.report.center_offset {
                assert!(offset < 1e-9);
            }
        }
    }
    Ok(())
}
