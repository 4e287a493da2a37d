//! Discretize the batch reactor and print the stability certificates behind the trigger.

use selftrig::cli::STANDARD_CONFIG;
use selftrig::config::parse_config;
use selftrig::matops::{certify_decay, fit_decay, fit_growth, spectral_radius};

fn main() -> selftrig::Result<()> {
    let cfg = parse_config(STANDARD_CONFIG)?;
    let model = cfg.model()?;
    println!(
        "sampling period {} s, {} actuation sub-steps of {} s (controllability index {})",
        model.sample_period, model.substeps, model.substep_period, model.ctrb_index
    );
    println!("open-loop spectral radius {:.6}", spectral_radius(&model.a));

    let gains = cfg.gains(&model)?;
    let observer_cl = &model.a - &(gains.observer() * &model.c);
    println!("observer error radius     {:.6}", spectral_radius(&observer_cl));

    // |G^s| <= overshoot * rate^s for every s. A rate close to the radius needs a long
    // transient; too close and the scan gives up.
    for margin in [0.1, 0.35, 0.7] {
        let Ok(cert) = fit_decay(&observer_cl, margin) else {
            println!("margin {margin:<4}: no certificate within the scan cap");
            continue;
        };
        println!("margin {margin:<4}: rate {:.6}, overshoot {:.4}", cert.rate, cert.overshoot);
    }
    let tight = certify_decay(&observer_cl, 0.999)?;
    println!("rate 0.999 : overshoot {:.4}", tight.overshoot);

    let cert = fit_decay(&observer_cl, cfg.run.margin)?;
    let growth = fit_growth(&model.a, cert.overshoot)?;
    println!("one-step growth bound with that overshoot: {:.6}", growth.omega_a);
    Ok(())
}
