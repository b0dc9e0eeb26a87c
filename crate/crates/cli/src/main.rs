use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use omniwpt::verify::run_checks;
use omniwpt::{
    coupling_trace, emit_csv, run_sweep, solve_at, summarize, Complex64, Error, Scenario,
};

/// Omnidirectional wireless power transfer simulator.
#[derive(Parser)]
#[command(name = "omniwpt", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario file (TOML). The bundled prototype scenario is used when omitted.
    #[arg(long, value_name = "PATH")]
    scenario: Option<PathBuf>,
    /// Override one scenario key, e.g. `--set electrical.x_t_ohm=auto`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the receiver-angle sweep, write the CSV and print a summary.
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// CSV output path; defaults to the scenario's `output.csv`.
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Solve a single receiver angle and print all branch currents and powers.
    Solve {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Receiver angle in degrees.
        #[arg(long, allow_hyphen_values = true)]
        angle: f64,
    },
    /// Print the Rp-to-Rx couplings and gamma ratios over the sweep angles.
    Couplings {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Write CSV here instead of stdout.
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Run the sweep and the consistency checks; exit 3 on any failed check.
    Verify {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Seed for the randomized checks.
        #[arg(long, default_value_t = 2024)]
        seed: u64,
    },
}

enum Failure {
    Error(Error),
    /// Some angles failed numerically; the rest were still reported.
    Partial(String),
    Verification,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

fn load(args: &ScenarioArgs) -> Result<Scenario, Error> {
    let text = match &args.scenario {
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?,
        None => omniwpt::scenario::PROTOTYPE_SCENARIO.to_string(),
    };
    Scenario::parse_with_overrides(&text, &args.overrides)
}

fn phasor(c: Complex64) -> String {
    format!("{:>10.6} A  {:>9.3} deg", c.norm(), c.arg().to_degrees())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Sweep { scenario, out } => {
            let scenario = load(&scenario)?;
            let sweep = run_sweep(&scenario)?;
            let path = out
                .or_else(|| scenario.output.csv.clone())
                .unwrap_or_else(|| PathBuf::from("sweep.csv"));
            emit_csv(&sweep.records, &path)?;
            let summary = summarize(&sweep)?;
            println!(
                "wrote {} records to {}",
                sweep.records.len(),
                path.display()
            );
            print!("{summary}");
            if let Some(p) = &scenario.output.summary {
                std::fs::write(p, summary.to_string()).map_err(Error::from)?;
            }
            if summary.failed > 0 {
                return Err(Failure::Partial(format!(
                    "{} of {} angles failed",
                    summary.failed, summary.records
                )));
            }
        }
        Command::Solve { scenario, angle } => {
            let scenario = load(&scenario)?;
            let (config, state, sol) = solve_at(&scenario, angle)?;
            let mut s = String::new();
            let _ = writeln!(s, "angle      {angle} deg");
            let _ = writeln!(s, "X_t        {:.4} ohm", config.x_t);
            let _ = writeln!(
                s,
                "polarity   {} {} {} after {} solve(s)",
                state.signs[0], state.signs[1], state.signs[2], state.iterations
            );
            let m = config.couplings.m();
            let _ = writeln!(
                s,
                "M (uH)     {:.5} {:.5} {:.5}",
                m[0] * 1e6,
                m[1] * 1e6,
                m[2] * 1e6
            );
            let g = config.couplings.gamma();
            let _ = writeln!(s, "gamma      {:.5} {:.5} {:.5}", g[0], g[1], g[2]);
            for (k, c) in sol.i_tx.iter().enumerate() {
                let _ = writeln!(s, "I_Tx{}     {}", k + 1, phasor(*c));
            }
            for (k, c) in sol.i_rp.iter().enumerate() {
                let _ = writeln!(s, "I_Rp{}     {}", k + 1, phasor(*c));
            }
            let _ = writeln!(s, "I_Rx      {}", phasor(sol.i_rx));
            let _ = writeln!(s, "P_in       {:.6} W", sol.p_in);
            let _ = writeln!(s, "P_out      {:.6} W", sol.p_out);
            let _ = writeln!(
                s,
                "losses     Tx {:.6} W  Rp {:.6} W  Rx {:.6} W",
                sol.p_loss_tx, sol.p_loss_rp, sol.p_loss_rx
            );
            let _ = writeln!(s, "efficiency {:.6}", sol.efficiency());
            print!("{s}");
        }
        Command::Couplings { scenario, out } => {
            let scenario = load(&scenario)?;
            let (cluster, trace) = coupling_trace(&scenario)?;
            let mut s = String::new();
            let _ = writeln!(
                s,
                "# M0_uH = {:.6} {:.6} {:.6}",
                cluster.m0[0] * 1e6,
                cluster.m0[1] * 1e6,
                cluster.m0[2] * 1e6
            );
            let _ = writeln!(s, "angle_deg,M1_uH,M2_uH,M3_uH,gamma1,gamma2,gamma3");
            let mut failed = 0;
            for (deg, c) in &trace {
                match c {
                    Ok(c) => {
                        let (m, g) = (c.m(), c.gamma());
                        let _ = writeln!(
                            s,
                            "{deg:e},{:e},{:e},{:e},{:e},{:e},{:e}",
                            m[0] * 1e6,
                            m[1] * 1e6,
                            m[2] * 1e6,
                            g[0],
                            g[1],
                            g[2]
                        );
                    }
                    Err(e) => {
                        failed += 1;
                        eprintln!("angle {deg}: {e}");
                    }
                }
            }
            match out {
                Some(path) => std::fs::write(&path, s).map_err(Error::from)?,
                None => print!("{s}"),
            }
            if failed > 0 {
                return Err(Failure::Partial(format!("{failed} angles failed")));
            }
        }
        Command::Verify { scenario, seed } => {
            let scenario = load(&scenario)?;
            let sweep = run_sweep(&scenario)?;
            let checks = run_checks(
                &sweep,
                &scenario.controller_settings(),
                &scenario.quadrature_spec(),
                seed,
            );
            for c in &checks {
                println!("{c}");
            }
            if checks.iter().any(|c| !c.passed) {
                return Err(Failure::Verification);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification) => ExitCode::from(3),
        Err(Failure::Partial(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
