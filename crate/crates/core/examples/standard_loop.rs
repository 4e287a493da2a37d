//! Run the observer-based self-triggered loop on the batch reactor and show when it samples.

use std::path::Path;

use selftrig::cli::STANDARD_CONFIG;
use selftrig::config::parse_config;
use selftrig::sim::{estimate_decay, run_closed_loop};

fn main() -> selftrig::Result<()> {
    let cfg = parse_config(STANDARD_CONFIG)?;
    let sc = cfg.scenario(Path::new("."))?;
    println!(
        "N = {}, sigma = {} (allowed [{:.4}, {:.4})), tau_max = {}",
        sc.spec.levels,
        sc.spec.sigma,
        1.0 / sc.spec.levels as f64,
        1.0 / sc.trigger.alpha,
        sc.spec.tau_max
    );

    let trace = run_closed_loop(&sc)?;
    let gaps: Vec<usize> = trace.sample_times.windows(2).map(|w| w[1] - w[0]).collect();
    println!("{} samples in {} steps", trace.sample_count(), sc.spec.horizon);
    println!("first gaps: {:?}", &gaps[..gaps.len().min(20)]);

    let norms = trace.state_norms();
    for s in (0..=sc.spec.horizon).step_by(50) {
        println!("s = {s:>3}: |x| = {:.3e}, E = {:.3e}", norms[s], trace.rows[s].e);
    }
    let fit = estimate_decay(&trace)?;
    println!("fitted decay rate {:.5} per step", fit.rate);
    println!("worst trigger ratio {:.4}, worst frame ratio {:.4}", trace.report.trigger, trace.report.frame);
    Ok(())
}
