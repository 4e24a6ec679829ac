use std::path::PathBuf;
use std::process::ExitCode;

use carnot::algebra::{algebra_preset, ALGEBRA_PRESETS};
use carnot::domains::DOMAIN_PRESETS;
use carnot::fields::{HORIZONTAL_FIELD_PRESETS, SCALAR_FIELD_PRESETS};
use carnot_cli::config::CHECK_KINDS;
use carnot_cli::report::write_reports;
use carnot_cli::{run_suite, CliError, Config};
use clap::Parser;

/// Verify Gauss–Green and Green identities on Carnot groups.
#[derive(Parser, Debug)]
#[command(name = "cgg", version)]
struct Args {
    /// Scenario configuration (TOML, or a JSON report with an embedded config).
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Suite name (`smoke`, `full`) or a single scenario name.
    #[arg(long, default_value = "smoke")]
    suite: String,
    /// Output directory; overrides the config.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Print the available presets and exit.
    #[arg(long)]
    list_presets: bool,
    /// Describe an algebra, domain, field or check preset and exit.
    #[arg(long, value_name = "NAME")]
    describe: Option<String>,
    /// Worker threads.
    #[arg(long, env = "CGG_THREADS")]
    threads: Option<usize>,
}

fn list_presets(cfg: Option<&Config>) {
    println!("algebras:");
    for name in ALGEBRA_PRESETS {
        let a = algebra_preset::<f64>(name).expect("shipped preset");
        println!("  {name:<24} layers {:?}, Q = {}", a.layer_dims(), a.hom_dimension());
    }
    println!("norms:\n  gauge\n  box");
    println!("profiles:\n  linear\n  quadratic");
    let table = |title: &str, rows: &[(&str, &str)]| {
        println!("{title}:");
        for (n, d) in rows {
            println!("  {n:<24} {d}");
        }
    };
    table("domains", DOMAIN_PRESETS);
    table("horizontal fields", HORIZONTAL_FIELD_PRESETS);
    table("scalar fields", SCALAR_FIELD_PRESETS);
    table("checks", CHECK_KINDS);
    if let Some(cfg) = cfg {
        println!("suites:");
        for s in cfg.suites() {
            println!("  {s:<24} {} scenarios", cfg.suite_members(&s).len());
        }
    }
}

fn describe(name: &str) -> Result<String, CliError> {
    if let Ok(a) = algebra_preset::<f64>(name) {
        return Ok(a.to_string());
    }
    let tables: [(&str, &[(&str, &str)]); 4] = [
        ("domain", DOMAIN_PRESETS),
        ("horizontal field", HORIZONTAL_FIELD_PRESETS),
        ("scalar field", SCALAR_FIELD_PRESETS),
        ("check", CHECK_KINDS),
    ];
    let hits: Vec<String> = tables
        .iter()
        .flat_map(|(what, rows)| rows.iter().filter(|(n, _)| *n == name).map(move |(n, d)| format!("{what} {n}: {d}")))
        .collect();
    if hits.is_empty() {
        return Err(CliError::Core(carnot::Error::UnknownPreset(name.into())));
    }
    Ok(hits.join("\n") + "\n")
}

fn run(args: Args) -> Result<bool, CliError> {
    if let Some(n) = args.threads.filter(|&n| n > 0) {
        // a second initialization only fails when a pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    if let Some(name) = &args.describe {
        print!("{}", describe(name)?);
        return Ok(true);
    }
    let cfg = args.config.as_deref().map(Config::load).transpose()?;
    if args.list_presets {
        list_presets(cfg.as_ref());
        return Ok(true);
    }
    let mut cfg = cfg.ok_or_else(|| CliError::Invalid("--config is required to run a suite".into()))?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = args.out {
        cfg.output.dir = out;
    }
    let outcome = run_suite(&cfg, &args.suite)?;
    for s in &outcome.scenarios {
        let status = if s.pass() { "PASS" } else { "FAIL" };
        println!("{status} {:<32} {:>3} reports {:>8} ms", s.name, s.reports.len(), s.elapsed_ms);
        if let Some(e) = &s.error {
            println!("     error: {e}");
        }
        for r in s.reports.iter().filter(|r| !r.pass) {
            println!("     {}: lhs {:e} rhs {:e} rel {:e} (tol {:e})", r.scenario, r.lhs, r.rhs, r.rel_residual, r.tolerance);
        }
    }
    write_reports(&cfg.output.dir, &cfg, &outcome)?;
    let pass = outcome.pass();
    println!(
        "{} scenarios, {} failed; reports in {}",
        outcome.scenarios.len(),
        outcome.scenarios.iter().filter(|s| !s.pass()).count(),
        cfg.output.dir.display()
    );
    Ok(pass)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Args::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
