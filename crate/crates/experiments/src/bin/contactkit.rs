use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use contactkit_experiments::report::{write_csv, write_json};
use contactkit_experiments::{run, ExperimentError, ExperimentReport, Settings};

/// Numerical experiments on contactomorphisms of R^{2n+1} and R^{2n} x S^1.
#[derive(Debug, Parser)]
#[command(name = "contactkit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Seed of every random generator.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Write the JSON report here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Write the CSV series here.
    #[arg(long, global = true)]
    csv: Option<PathBuf>,

    /// Lattice spacing of sup-norm estimates.
    #[arg(long, global = true, default_value_t = 0.02)]
    mesh: f64,

    /// Relative integrator tolerance (absolute is a tenth of it).
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,

    /// Half the dimension of the symplectic base.
    #[arg(long, global = true, default_value_t = 1)]
    n: usize,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Actions of random maps with C0 norm below 1/2 stay within the norm.
    SpectrumBound,
    /// Extreme actions of lifts of C2-small Hamiltonians.
    LiftEndpoints,
    /// Fixed-point actions of slow radial flows.
    RadialSpectrum,
    /// Conjugation-invariant lower bound for a rational Reeb rotation.
    RationalRotation,
    /// Spectrum of a radial flow composed with a displaced copy.
    DisplacementSpectrum,
    /// Fragment extraction from a truncated Rokhlin element.
    RokhlinDemo,
    /// C0 norm versus compact-set displacement of a translated family.
    CoVsC0,
    /// Pullback sweeps of every construction.
    ContactCertificate,
    /// The squeeze formula inside B(r) and the identity outside B(R).
    SqueezeFormula,
    /// Actions along different isotopies of the same map.
    PathIndependence,
    /// Every experiment above.
    VerifyAll,
}

impl Command {
    fn id(self) -> &'static str {
        match self {
            Command::SpectrumBound => "spectrum-bound",
            Command::LiftEndpoints => "lift-endpoints",
            Command::RadialSpectrum => "radial-spectrum",
            Command::RationalRotation => "rational-rotation",
            Command::DisplacementSpectrum => "displacement-spectrum",
            Command::RokhlinDemo => "rokhlin-demo",
            Command::CoVsC0 => "co-vs-c0",
            Command::ContactCertificate => "contact-certificate",
            Command::SqueezeFormula => "squeeze-formula",
            Command::PathIndependence => "path-independence",
            Command::VerifyAll => "verify-all",
        }
    }
}

fn summarize(reports: &[ExperimentReport]) {
    for r in reports {
        let verdict = if r.passed() { "PASS" } else { "FAIL" };
        eprintln!("{verdict} {} ({:.1}s)", r.id, r.runtime_seconds);
        for m in r.failures() {
            eprintln!("  {} = {:e} > {:e}", m.name, m.value, m.tolerance);
        }
    }
}

fn execute(cli: &Cli) -> contactkit_experiments::Result<bool> {
    let settings = Settings {
        seed: cli.seed,
        mesh: cli.mesh,
        tol: cli.tol,
        n: cli.n,
    };
    let reports = run(cli.command.id(), &settings)?;
    summarize(&reports);
    match &cli.out {
        Some(path) => write_json(path, &reports)?,
        None => {
            let text = if let [one] = reports.as_slice() {
                serde_json::to_string_pretty(one)?
            } else {
                serde_json::to_string_pretty(&reports)?
            };
            println!("{text}");
        }
    }
    if let Some(path) = &cli.csv {
        write_csv(path, &reports)?;
    }
    Ok(reports.iter().all(|r| r.passed()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(ExperimentError::Parameter(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
