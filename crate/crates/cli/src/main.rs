use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use boundary_ifs::simcli::{self, exit, Format, Outcome, SimulateOptions};
use clap::{Args, Parser, Subcommand};

/// Boundary dynamics of left iterated function systems on the unit disc.
#[derive(Debug, Parser)]
#[command(name = "bifs", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Scenario file.
    scenario: PathBuf,
    /// table-text, csv or json-lines.
    #[arg(long, default_value = "table-text")]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the invariant suites listed in the scenario.
    Verify(Common),
    /// Monte Carlo boundary orbits.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Also evaluate at radius 1 - 2^-j and report the deviation.
        #[arg(long, value_name = "J")]
        radial_probe: Option<u32>,
    },
    /// Hardy norms and composition-operator brackets for the declared maps.
    Norms(Common),
    /// Block selection certificates, the perturbation trace and endgame points.
    Perturb(Common),
}

fn write_out(out: Option<&Path>, bytes: &[u8]) -> std::io::Result<()> {
    match out {
        Some(path) => fs::write(path, bytes),
        None => std::io::stdout().lock().write_all(bytes),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, run): (&Common, Box<dyn Fn(&str, Format) -> Outcome>) = match &cli.command {
        Command::Verify(c) => (c, Box::new(simcli::verify)),
        Command::Norms(c) => (c, Box::new(simcli::norms)),
        Command::Perturb(c) => (c, Box::new(simcli::perturb)),
        Command::Simulate { common, samples, steps, seed, radial_probe } => {
            let opts = SimulateOptions { samples: *samples, steps: *steps, seed: *seed, radial_probe: *radial_probe };
            (common, Box::new(move |text: &str, f| simcli::simulate(text, &opts, f)))
        }
    };
    let text = match fs::read_to_string(&common.scenario) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("bifs: cannot read {}: {e}", common.scenario.display());
            return ExitCode::from(exit::CONFIG_ERROR as u8);
        }
    };
    let outcome = run(&text, common.format);
    if let Some(msg) = &outcome.message {
        eprintln!("bifs: {}: {msg}", common.scenario.display());
    } else if let Err(e) = write_out(common.out.as_deref(), &outcome.bytes) {
        eprintln!("bifs: cannot write report: {e}");
        return ExitCode::from(exit::CONFIG_ERROR as u8);
    }
    ExitCode::from(outcome.code as u8)
}
