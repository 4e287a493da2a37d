//! Sweep the trigger threshold, quantizer levels and maximum gap; print the CSV the
//! `sweep` subcommand writes. A larger threshold samples less but tolerates fewer attacks.

use std::path::Path;

use selftrig::cli::{sweep_csv, STANDARD_CONFIG};
use selftrig::config::parse_config;
use selftrig::sim::sweep_tradeoff;

fn main() -> selftrig::Result<()> {
    let spec = parse_config(STANDARD_CONFIG)?.scenario_spec(Path::new("."))?;
    let sigmas: Vec<f64> = (0..6).map(|i| 0.01 + 0.015 * i as f64).collect();
    // Out-of-range points come back with an error column rather than aborting the sweep.
    let rows = sweep_tradeoff(&spec, &sigmas, &[31, 101], &[10, 20])?;
    print!("{}", sweep_csv(&rows));
    Ok(())
}
