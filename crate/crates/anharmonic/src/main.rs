use std::fs;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use anharmonic::scenario::{run_preset, run_scenario, spectrum_scan, ScenarioConfig, PRESET_NAMES};
use anharmonic::effmodels::{stack_boson_rates, stack_rates, two_stack_rates};
use anharmonic::units::mhz;

#[derive(Parser)]
#[command(name = "anharmonic", version, about = "Boson-stack dynamics in coupled transmon arrays")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario from a config file or a built-in preset.
    Simulate {
        /// Scenario config (TOML).
        #[arg(long, conflicts_with = "preset")]
        config: Option<String>,
        /// Built-in preset name (fig1, fig2ab, ..., fig7b).
        #[arg(long)]
        preset: Option<String>,
        /// Output directory (overrides the config's output.dir).
        #[arg(long)]
        out: Option<String>,
    },
    /// Print closed-form quasiparticle rates.
    Rates {
        /// Stack size N.
        #[arg(long = "N")]
        n: u32,
        /// Second stack size M (1 for the stack-boson sector).
        #[arg(long = "M")]
        m: Option<u32>,
        #[arg(long = "J-mhz", default_value_t = 10.0)]
        j_mhz: f64,
        #[arg(long = "U-mhz", default_value_t = 250.0)]
        u_mhz: f64,
    },
    /// Dense spectrum of a chain, annotated by anharmonicity band.
    Spectrum {
        #[arg(long = "L")]
        l: usize,
        #[arg(long = "N")]
        n: u32,
        #[arg(long = "J-mhz", default_value_t = 20.0)]
        j_mhz: f64,
        #[arg(long = "U-mhz", default_value_t = 250.0)]
        u_mhz: f64,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = err
                .downcast_ref::<anharmonic::Error>()
                .map(|e| e.exit_code())
                .unwrap_or(1);
            ExitCode::from(code as u8)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Simulate {
            config,
            preset,
            out,
        } => match (config, preset) {
            (Some(path), None) => {
                let text = fs::read_to_string(&path)
                    .with_context(|| format!("reading config {path}"))?;
                let mut config = ScenarioConfig::from_toml(&text)?;
                if let Some(dir) = out {
                    config.output.dir = dir;
                }
                let result = run_scenario(&config)?;
                eprintln!(
                    "[{}] basis dim {}, manifold dim {}",
                    result.label, result.basis_dim, result.manifold_dim
                );
                if let Some(report) = &result.comparison {
                    eprintln!(
                        "[{}] max full-vs-effective deviation: {:.4} bosons",
                        result.label,
                        report.worst_deviation()
                    );
                }
                for f in &result.files {
                    println!("{}", f.display());
                }
                Ok(())
            }
            (None, Some(name)) => {
                let dir = out.unwrap_or_else(|| "out".into());
                let files = run_preset(&name, &dir)?;
                for f in &files {
                    println!("{}", f.display());
                }
                Ok(())
            }
            _ => anyhow::bail!(
                "simulate needs exactly one of --config or --preset (presets: {})",
                PRESET_NAMES.join(", ")
            ),
        },
        Command::Rates { n, m, j_mhz, u_mhz } => {
            let (j, u) = (mhz(j_mhz), mhz(u_mhz));
            let set = match m {
                None => stack_rates(n, j, u)?,
                Some(1) => stack_boson_rates(n, j, u)?,
                Some(m) => two_stack_rates(n, m, j, u)?,
            };
            print!("{}", set.to_text());
            Ok(())
        }
        Command::Spectrum {
            l,
            n,
            j_mhz,
            u_mhz,
            out,
        } => {
            let scan = spectrum_scan(l, n, mhz(j_mhz), mhz(u_mhz))?;
            let csv = scan.to_csv();
            match out {
                Some(path) => {
                    fs::write(&path, csv).with_context(|| format!("writing {path}"))?;
                    println!("{path}");
                }
                None => print!("{csv}"),
            }
            Ok(())
        }
    }
}
