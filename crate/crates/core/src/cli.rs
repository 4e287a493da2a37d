//! Command-line front end. Exit codes: 0 success, 1 usage, 2 invalid input, 3 runtime breach.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Deserialize;

use crate::config::{parse_config, Config, Derived};
use crate::deadbeat::{verify_deadbeat_gain, DeadbeatArtifacts};
use crate::dos::DosMode;
use crate::error::{Error, Result};
use crate::matops::{fit_growth, spectral_radius, DecayCertificate};
use crate::sim::{
    run_with_diagnostics, summarize, sweep_tradeoff, Scenario, SimTrace, SweepRow, Variant,
};
use crate::standard::{sigma_interval, StandardDesign, TriggerConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_BREACH: i32 = 3;

pub const STANDARD_CONFIG: &str = include_str!("../configs/batch_reactor_standard.toml");
pub const DEADBEAT_CONFIG: &str = include_str!("../configs/batch_reactor_deadbeat.toml");

#[derive(Debug, Parser)]
#[command(name = "selftrig", version, about = "Self-triggered quantized-output control simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one scenario; writes trace.csv, trace.summary.json and trace.resolved.toml.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; defaults to run.out_dir from the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a DoS-free grid over sigma, levels and tau_max; CSV on stdout.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// TOML file with any of `sigma`, `levels`, `tau_max` as arrays.
        #[arg(long)]
        grid: PathBuf,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check stability of the gains and print every certificate.
    VerifyGains {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the threshold constant, decay rates and the attack-duty bound.
    Bounds {
        #[arg(long)]
        config: PathBuf,
    },
    /// Regenerate the batch-reactor experiments with data and gnuplot scripts.
    ReproducePaper {
        #[arg(long, value_parser = clap::value_parser!(u8).range(3..=6))]
        fig: Option<u8>,
        #[arg(long, default_value = "figures")]
        out: PathBuf,
    },
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Simulate { config, out } => simulate(&config, out.as_deref()),
        Command::Sweep { config, grid, out } => sweep(&config, &grid, out.as_deref()),
        Command::VerifyGains { config } => verify_gains(&config),
        Command::Bounds { config } => bounds(&config),
        Command::ReproducePaper { fig, out } => reproduce(fig, &out),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_runtime_breach() {
                EXIT_BREACH
            } else {
                EXIT_INVALID
            }
        }
    }
}

fn load(path: &Path) -> Result<(Config, PathBuf)> {
    let cfg = Config::from_file(path)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((cfg, base))
}

/// Writes `<stem>.csv`, `<stem>.summary.json` and `<stem>.resolved.toml` into `dir`, and
/// reports a run-time breach after the partial trace is on disk.
fn run_and_write(cfg: &Config, sc: &Scenario, dir: &Path, stem: &str) -> Result<SimTrace> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(format!("{stem}.resolved.toml")), cfg.resolved_echo(sc)?)?;
    let (trace, outcome) = run_with_diagnostics(sc);
    trace.write_csv(std::io::BufWriter::new(fs::File::create(
        dir.join(format!("{stem}.csv")),
    )?))?;
    if let Err(e) = outcome {
        if let Some(row) = trace.rows.last() {
            eprintln!("last recorded row: s = {}, k = {}", row.s, row.k);
        }
        return Err(e);
    }
    let summary = summarize(sc, &trace);
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    fs::write(dir.join(format!("{stem}.summary.json")), json + "\n")?;
    Ok(trace)
}

fn simulate(path: &Path, out: Option<&Path>) -> Result<()> {
    let (cfg, base) = load(path)?;
    let sc = cfg.scenario(&base)?;
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| cfg.run.out_dir.clone());
    let trace = run_and_write(&cfg, &sc, &dir, "trace")?;
    let summary = summarize(&sc, &trace);
    println!("variant          {}", summary.variant);
    println!("samples          {}", summary.samples);
    println!("effective hits   {}/{}", summary.effective_attacks, summary.attacks);
    println!("final |x|        {:e}", summary.final_norm);
    match summary.fit {
        Some(f) => println!("fitted decay     {:.6} (scale {:.4})", f.rate, f.omega_scale),
        None => println!("fitted decay     n/a"),
    }
    println!("output           {}", dir.display());
    Ok(())
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Grid {
    sigma: Option<Vec<f64>>,
    levels: Option<Vec<u64>>,
    tau_max: Option<Vec<usize>>,
}

fn sweep(path: &Path, grid_path: &Path, out: Option<&Path>) -> Result<()> {
    let (cfg, base) = load(path)?;
    let grid: Grid = toml::from_str(&fs::read_to_string(grid_path)?)
        .map_err(|e| Error::Schema {
            path: grid_path.display().to_string(),
            message: e.message().to_string(),
        })?;
    let spec = cfg.scenario_spec(&base)?;
    let rows = sweep_tradeoff(
        &spec,
        &grid.sigma.unwrap_or_else(|| vec![spec.sigma]),
        &grid.levels.unwrap_or_else(|| vec![spec.levels]),
        &grid.tau_max.unwrap_or_else(|| vec![spec.tau_max]),
    )?;
    let csv = sweep_csv(&rows);
    match out {
        Some(p) => fs::write(p, csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    fn opt<T: std::fmt::Debug>(v: Option<T>) -> String {
        v.map(|v| format!("{v:?}")).unwrap_or_default()
    }
    let mut s = String::from(
        "sigma,levels,tau_max,sigma_effective,omega1,omega_a,dos_bound,samples,omega_hat,error\n",
    );
    for r in rows {
        let _ = writeln!(
            s,
            "{:?},{},{},{},{},{},{},{},{},{}",
            r.sigma,
            r.levels,
            r.tau_max,
            opt(r.sigma_effective),
            opt(r.omega1),
            opt(r.omega_a),
            opt(r.dos_bound),
            opt(r.samples),
            opt(r.omega_hat),
            r.error.as_deref().unwrap_or("").replace(',', ";"),
        );
    }
    s
}

fn print_cert(name: &str, c: &DecayCertificate) {
    println!(
        "{name:<28} rate {:.9}  overshoot {:.6}  horizon {}",
        c.rate, c.overshoot, c.horizon
    );
}

fn verify_gains(path: &Path) -> Result<()> {
    let (cfg, _) = load(path)?;
    let model = cfg.model()?;
    let gains = cfg.gains(&model)?;
    println!("substeps                     {}", model.substeps);
    println!("controllability index        {}", model.ctrb_index);
    let (cert, alpha) = match cfg.run.variant {
        Variant::Standard => {
            let cl = &model.a + &(&model.b * &gains.k);
            println!("radius A+BK                  {:.9}", spectral_radius(&cl));
            let d = StandardDesign::new(&model, &gains, cfg.run.margin, cfg.trigger.tau_max, cfg.trigger.levels)?;
            println!("radius A-LC                  {:.9}", spectral_radius(&d.observer_cl));
            print_cert("observer certificate", &d.cert);
            (d.cert, d.alpha)
        }
        Variant::Deadbeat => {
            let residual = verify_deadbeat_gain(&model.at, &model.bt, &gains.k, model.substeps);
            println!("deadbeat residual            {residual:.3e}");
            let arts = DeadbeatArtifacts::new(&model, &gains, cfg.run.margin)?;
            println!("radius correction loop       {:.9}", spectral_radius(&arts.correction_cl));
            print_cert("correction certificate", &arts.cert);
            (arts.cert, arts.alpha)
        }
    };
    let growth = fit_growth(&model.a, cert.overshoot)?;
    println!("open-loop growth             {:.9}", growth.omega_a);
    println!("threshold constant           {alpha:.6}");
    let (lo, hi) = sigma_interval(cfg.trigger.levels, alpha)?;
    println!("sigma interval               [{lo:.6}, {hi:.6})");
    TriggerConfig::new(
        cfg.trigger.sigma,
        cfg.trigger.tau_max,
        cfg.trigger.levels,
        cfg.e_in(),
        alpha,
        &cert,
    )?;
    println!("sigma                        {} ok", cfg.trigger.sigma);
    Ok(())
}

fn bounds(path: &Path) -> Result<()> {
    let (cfg, base) = load(path)?;
    let sc = cfg.scenario(&base)?;
    let d = Derived::of(&sc);
    println!("variant          {}", sc.spec.variant);
    println!("alpha            {:.9}", d.alpha);
    println!("sigma interval   [{:.9}, {:.9})", d.sigma_low, d.sigma_high);
    println!("sigma effective  {:.9}", d.sigma_effective);
    println!("omega1           {:.9}", d.omega1);
    println!("omega_a          {:.9}", d.omega_a);
    println!("dos bound        {:.9}", d.dos_bound);
    Ok(())
}

/// One trace of a reproduction figure.
struct Panel {
    stem: String,
    title: String,
    substeps: usize,
}

fn shipped(variant: Variant) -> Config {
    let text = match variant {
        Variant::Standard => STANDARD_CONFIG,
        Variant::Deadbeat => DEADBEAT_CONFIG,
    };
    parse_config(text).expect("shipped configs parse")
}

fn trace_panel(
    dir: &Path,
    stem: String,
    title: String,
    variant: Variant,
    edit: impl FnOnce(&mut Config),
) -> Result<Panel> {
    let mut cfg = shipped(variant);
    edit(&mut cfg);
    let sc = cfg.scenario(Path::new("."))?;
    run_and_write(&cfg, &sc, dir, &stem)?;
    eprintln!("wrote {}", dir.join(format!("{stem}.csv")).display());
    Ok(Panel {
        stem,
        title,
        substeps: sc.spec.model.substeps,
    })
}

fn trace_script(panels: &[Panel], layout: (usize, usize), with_attacks: bool) -> String {
    let mut s = String::from(
        "# gnuplot script; run from this directory\n\
         set datafile separator ','\n\
         set terminal pngcairo size 1200,900\n",
    );
    let _ = writeln!(s, "set output '{}.png'", panels[0].stem.split('_').next().unwrap_or("fig"));
    let _ = writeln!(s, "set multiplot layout {},{}", layout.0, layout.1);
    s.push_str("set xlabel 'sampling step'\nset logscale y\nset format y '10^{%L}'\n");
    for p in panels {
        let t = format!("(column('s') + column('k') / {}.0)", p.substeps);
        let _ = writeln!(s, "set title '{}'", p.title);
        let _ = write!(
            s,
            "plot '{f}.csv' using {t}:(abs(column('x0')) > abs(column('x1')) ? abs(column('x0')) : abs(column('x1'))) \
             with lines title '|x0|,|x1| max', \
             '' using {t}:(column('E')) with steps title 'E', \
             '' using {t}:(column('ack') > 0 ? column('E') : 1/0) with points pt 2 title 'samples'",
            f = p.stem
        );
        if with_attacks {
            let _ = write!(
                s,
                ", '' using {t}:(column('h') > 0 ? column('E') : 1/0) with points pt 1 lc 'red' title 'lost samples'"
            );
        }
        s.push('\n');
    }
    s.push_str("unset multiplot\n");
    s
}

fn reproduce(fig: Option<u8>, out: &Path) -> Result<()> {
    fs::create_dir_all(out)?;
    let figs: Vec<u8> = match fig {
        Some(f) => vec![f],
        None => vec![3, 4, 5, 6],
    };
    for f in figs {
        match f {
            3 => figure_levels(out)?,
            4 => figure_sigma(out)?,
            5 => figure_attacks(out)?,
            6 => figure_tradeoff(out)?,
            _ => unreachable!("clap restricts the range"),
        }
    }
    Ok(())
}

fn figure_levels(out: &Path) -> Result<()> {
    let mut panels = Vec::new();
    for (variant, levels) in [
        (Variant::Standard, 31),
        (Variant::Standard, 101),
        (Variant::Deadbeat, 11),
        (Variant::Deadbeat, 101),
    ] {
        panels.push(trace_panel(
            out,
            format!("fig3_{variant}_N{levels}"),
            format!("{variant}, N = {levels}"),
            variant,
            |c| c.trigger.levels = levels,
        )?);
    }
    fs::write(out.join("fig3.gp"), trace_script(&panels, (2, 2), false))?;
    Ok(())
}

fn figure_sigma(out: &Path) -> Result<()> {
    let mut panels = Vec::new();
    for (variant, levels) in [(Variant::Standard, 31), (Variant::Deadbeat, 11)] {
        for sigma in [0.0193, 0.0343] {
            panels.push(trace_panel(
                out,
                format!("fig4_{variant}_sigma{sigma}"),
                format!("{variant}, N = {levels}, sigma = {sigma}"),
                variant,
                |c| {
                    c.trigger.levels = levels;
                    c.trigger.sigma = sigma;
                },
            )?);
        }
    }
    fs::write(out.join("fig4.gp"), trace_script(&panels, (2, 2), false))?;
    Ok(())
}

fn figure_attacks(out: &Path) -> Result<()> {
    let mut panels = Vec::new();
    for (variant, steps_per_attack) in [(Variant::Standard, 44.0), (Variant::Deadbeat, 36.0)] {
        panels.push(trace_panel(
            out,
            format!("fig5_{variant}"),
            format!("{variant}, N = 101, random jamming"),
            variant,
            |c| {
                c.trigger.levels = 101;
                c.dos.mode = DosMode::Random;
                c.dos.burst = 1.0;
                c.dos.steps_per_attack = steps_per_attack;
                c.dos.probability = 0.1;
                c.dos.seed = 5;
            },
        )?);
    }
    fs::write(out.join("fig5.gp"), trace_script(&panels, (2, 1), true))?;
    Ok(())
}

fn figure_tradeoff(out: &Path) -> Result<()> {
    let sigmas: Vec<f64> = (0..=18).map(|i| 0.010 + 0.005 * i as f64).collect();
    let levels = [31, 101];
    let taus = [5, 10, 20, 40];
    for variant in [Variant::Standard, Variant::Deadbeat] {
        let cfg = shipped(variant);
        let spec = cfg.scenario_spec(Path::new("."))?;
        let rows = sweep_tradeoff(&spec, &sigmas, &levels, &taus)?;
        let path = out.join(format!("fig6_{variant}.csv"));
        fs::write(&path, sweep_csv(&rows))?;
        eprintln!("wrote {}", path.display());
    }
    let mut s = String::from(
        "# gnuplot script; run from this directory\n\
         set datafile separator ','\n\
         set terminal pngcairo size 900,1200\n\
         set output 'fig6.png'\n\
         set multiplot layout 3,1\n\
         set xlabel 'sigma'\nset ylabel 'admissible attack duty'\n",
    );
    for variant in ["standard", "deadbeat"] {
        let _ = writeln!(s, "set title '{variant}, N = 101, by tau_max'");
        let _ = writeln!(
            s,
            "plot for [t in '5 10 20 40'] 'fig6_{variant}.csv' using \
             ((column('levels') == 101 && column('tau_max') == t+0) ? column('sigma') : 1/0):(column('dos_bound')) \
             with linespoints title 'tau_max = '.t"
        );
    }
    s.push_str("set title 'tau_max = 20, by variant and N'\n");
    s.push_str(
        "plot for [n in '31 101'] 'fig6_standard.csv' using \
         ((column('tau_max') == 20 && column('levels') == n+0) ? column('sigma') : 1/0):(column('dos_bound')) \
         with linespoints title 'standard, N = '.n, \
         for [n in '31 101'] 'fig6_deadbeat.csv' using \
         ((column('tau_max') == 20 && column('levels') == n+0) ? column('sigma') : 1/0):(column('dos_bound')) \
         with linespoints dt 2 title 'deadbeat, N = '.n\n",
    );
    s.push_str("unset multiplot\n");
    fs::write(out.join("fig6.gp"), s)?;
    Ok(())
}
