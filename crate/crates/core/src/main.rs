use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use coadjoint_dirac::config::RunConfig;
use coadjoint_dirac::pipeline::{run, write_outputs, Command};

#[derive(Parser)]
#[command(name = "coadjoint-dirac", version, about = "Dirac operators on coadjoint orbits")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(clap::Args)]
struct Common {
    /// TOML run configuration
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to `output.dir` from the config, then `out`
    #[arg(long)]
    out: Option<PathBuf>,
    /// Multiplies every check tolerance
    #[arg(long, default_value_t = 1.0)]
    tolerance_scale: f64,
}

#[derive(Subcommand)]
enum Cmd {
    /// Property battery only
    Verify(Common),
    /// Full pipeline, writes the spectrum CSV
    Spectrum(Common),
    /// Quadrature cross-checks (su(2) only)
    Oracle(Common),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Cmd::Verify(a) => (Command::Verify, a),
        Cmd::Spectrum(a) => (Command::Spectrum, a),
        Cmd::Oracle(a) => (Command::Oracle, a),
    };
    if !(args.tolerance_scale > 0.0 && args.tolerance_scale.is_finite()) {
        eprintln!("error: --tolerance-scale must be a positive number");
        return ExitCode::from(2);
    }
    let cfg = match RunConfig::load(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let out_dir = args.out.or_else(|| cfg.output.dir.as_ref().map(|d| cfg.resolve(d))).unwrap_or_else(|| "out".into());
    let output = match run(&cfg, command, args.tolerance_scale) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Err(e) = write_outputs(&cfg, &out_dir, &output) {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }

    let r = &output.report;
    println!("{} on {} ({} connection, {} metric)", command.name(), r.run.algebra, r.run.connection, r.run.metric);
    if r.run.algebra == "su(2)" {
        println!("irrep cutoff: 2j <= {} (spectra are per block; no completeness claim)", r.run.irrep_cutoff);
    } else {
        println!("irreps: {} (spectra are per block; no completeness claim)", r.run.irreps.join(", "));
    }
    for c in &r.checks {
        let status = if c.skipped {
            "SKIP"
        } else if c.passed {
            "PASS"
        } else {
            "FAIL"
        };
        let defect = c.defect.map_or("-".to_string(), |d| format!("{d:.3e}"));
        println!("{status} {:<26} defect {defect:>10}  tol {:.1e}  {}", c.name, c.tolerance, c.detail);
    }
    for w in &r.warnings {
        println!("warning: {w}");
    }
    if output.spectrum.is_some() {
        println!("spectrum: {} rows in {}", r.spectrum_rows, out_dir.join(&cfg.output.spectrum).display());
    }
    println!("report: {}", out_dir.join(&cfg.output.report).display());
    if r.all_passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
