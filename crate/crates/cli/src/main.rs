mod analyze;
mod config;
mod output;
mod selftest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{ConfigError, RunConfig};
use output::Outputs;

const EXIT_IO: u8 = 1;
const EXIT_CHECK: u8 = 2;
const EXIT_CONFIG: u8 = 3;

#[derive(Parser)]
#[command(name = "zhtorus", version, about = "Averaging, bifurcation and torus analyses of perturbed Rössler families")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the analyses listed in a config file.
    Analyze {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `[run] out`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Validate the config and list the analyses without running them.
        #[arg(long)]
        dry_run: bool,
    },
    /// Built-in checks against fixtures with known answers.
    Selftest {
        /// Override a tolerance, `name=value`.
        #[arg(long = "tolerance", value_name = "NAME=VALUE")]
        tolerances: Vec<String>,
        /// Shift one fixture value so its check must fail.
        #[arg(long)]
        perturb_fixture: bool,
        /// Also write the results as JSON here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

fn config_error(e: ConfigError) -> ExitCode {
    eprintln!("config error: {e}");
    ExitCode::from(EXIT_CONFIG)
}

fn analyze(config: PathBuf, out: Option<PathBuf>, dry_run: bool) -> ExitCode {
    let cfg = match RunConfig::load(&config) {
        Ok(c) => c,
        Err(e) => return config_error(e),
    };
    if dry_run {
        let names: Vec<&str> = cfg.analyses.iter().map(|a| a.name()).collect();
        println!("config ok: {}", names.join(", "));
        return ExitCode::SUCCESS;
    }
    let dir = out.or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("zhtorus-out"));
    let mut outputs = match Outputs::new(&dir) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(EXIT_IO);
        }
    };
    let mut run = analyze::Run::new(&cfg, &mut outputs);
    let result = run.execute();
    let failures = std::mem::take(&mut run.failures);
    let (status, code) = match &result {
        Err(e) if e.downcast_ref::<std::io::Error>().is_some() => ("io error", EXIT_IO),
        Err(_) => ("numerical failure", EXIT_CHECK),
        Ok(()) if !failures.is_empty() => ("invariant check failed", EXIT_CHECK),
        Ok(()) => ("ok", 0),
    };
    if let Err(e) = &result {
        eprintln!("error: {e:#}");
    }
    for f in &failures {
        eprintln!("check failed: {f}");
    }
    if let Err(e) = outputs.manifest(&config, status) {
        eprintln!("error: {e:#}");
        return ExitCode::from(EXIT_IO);
    }
    println!("{status}: results in {}", dir.display());
    ExitCode::from(code)
}

fn selftest(specs: Vec<String>, perturb: bool, report: Option<PathBuf>) -> ExitCode {
    let mut tol = selftest::SelftestTolerances::default();
    for s in &specs {
        if let Err(e) = tol.set(s) {
            return config_error(e);
        }
    }
    let checks = match selftest::run(&tol, perturb) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(EXIT_CHECK);
        }
    };
    for c in &checks {
        let tag = if c.pass { "PASS" } else { "FAIL" };
        println!("[{tag}] {}: {} = {:e} (tolerance {:e})", c.suite, c.name, c.value, c.tolerance);
    }
    if let Some(p) = report {
        let v = serde_json::Value::Array(checks.iter().map(selftest::Check::to_json).collect());
        let text = serde_json::to_string_pretty(&v).expect("json values serialize") + "\n";
        if let Err(e) = std::fs::write(&p, text) {
            eprintln!("error: writing {}: {e}", p.display());
            return ExitCode::from(EXIT_IO);
        }
    }
    let failed = checks.iter().filter(|c| !c.pass).count();
    println!("{} checks, {failed} failed", checks.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_CHECK)
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Analyze { config, out, dry_run } => analyze(config, out, dry_run),
        Command::Selftest { tolerances, perturb_fixture, report } => selftest(tolerances, perturb_fixture, report),
    }
}
