//! Jam the channel at random and adversarially, within and beyond the certified duty bound.

use std::path::Path;

use selftrig::cli::STANDARD_CONFIG;
use selftrig::config::parse_config;
use selftrig::dos::{duration_ok, DosMode, DosModel};
use selftrig::sim::{estimate_decay, run_closed_loop, Scenario};

fn main() -> selftrig::Result<()> {
    let base = parse_config(STANDARD_CONFIG)?.scenario(Path::new("."))?;
    let bound = base.dos_bound;
    println!(
        "duty bound {bound:.5}: at most one lost sample per {:.1} steps on average",
        1.0 / bound
    );

    for (mode, steps_per_attack) in [
        (DosMode::Random, 1.0 / (0.9 * bound)),
        (DosMode::WorstCase, 1.0 / (0.9 * bound)),
        (DosMode::WorstCase, 10.0),
    ] {
        let mut spec = base.spec.clone();
        spec.dos = DosModel::new(mode, 1.0, steps_per_attack)?
            .with_seed(7)
            .with_probability(0.3)?;
        let trace = run_closed_loop(&Scenario::new(spec)?)?;
        assert!(duration_ok(&trace.attacks, 1.0, steps_per_attack));
        println!(
            "{mode:?}, one attack per {steps_per_attack:.1} steps: {} attacks, {} lost samples at {:?}, rate {:.5}, final |x| {:.2e}",
            trace.attacks.iter().filter(|&&a| a).count(),
            trace.effective_hits.len(),
            &trace.effective_hits[..trace.effective_hits.len().min(6)],
            estimate_decay(&trace)?.rate,
            trace.state_norms().last().unwrap(),
        );
    }

    // A hand-written schedule; budgets are checked up front.
    let mut script = vec![false; 401];
    script[0] = true;
    script[1] = true;
    match DosModel::scripted(1.0, 40.0, script) {
        Err(e) => println!("two back-to-back attacks rejected: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
