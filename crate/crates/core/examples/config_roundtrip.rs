//! Load a TOML config, inspect the derived constants, and write the resolved echo that
//! replays the run exactly.

use std::path::Path;

use selftrig::cli::DEADBEAT_CONFIG;
use selftrig::config::{parse_config, Derived};
use selftrig::dos::DosMode;
use selftrig::sim::run_closed_loop;

fn main() -> selftrig::Result<()> {
    let mut cfg = parse_config(DEADBEAT_CONFIG)?;
    cfg.dos.mode = DosMode::Random;
    cfg.dos.burst = 1.0;
    cfg.dos.steps_per_attack = 50.0;
    cfg.dos.seed = 42;
    let sc = cfg.scenario(Path::new("."))?;
    println!("{:#?}", Derived::of(&sc));

    let echo = cfg.resolved_echo(&sc)?;
    println!("--- resolved echo ---\n{echo}");
    let replay = parse_config(&echo)?.scenario(Path::new("."))?;
    assert_eq!(
        run_closed_loop(&sc)?.to_csv_string(),
        run_closed_loop(&replay)?.to_csv_string()
    );
    println!("replay from the echo is byte-identical");

    // Typos are caught with the offending path.
    let typo = DEADBEAT_CONFIG.replace("tau_max", "tau_mx");
    if let Err(e) = parse_config(&typo) {
        println!("{e}");
    }
    Ok(())
}
