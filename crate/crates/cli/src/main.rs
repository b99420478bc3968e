use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use eraser_cli::{parse_config_with_mode, run, Mode, Overrides, EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME};

/// Delayed-choice quantum eraser simulations.
#[derive(Debug, Parser)]
#[command(name = "eraser", version)]
struct Args {
    /// Config file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// ti, oracle, wavepacket, mc or crosscheck; overrides the config.
    #[arg(long)]
    mode: Option<String>,
    /// Output path; overrides `output.path`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Monte Carlo seed; overrides `mc.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Drop the retarded–advanced cross terms from wavepacket output.
    #[arg(long)]
    suppress_advanced: bool,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK });
        }
    };
    let text = match &args.config {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("error: cannot read {}: {e}", path.display());
                return ExitCode::from(EXIT_CONFIG);
            }
        },
        None => String::new(),
    };
    let mode = match args.mode.as_deref().map(str::parse::<Mode>).transpose() {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: --mode: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let mut cfg = match parse_config_with_mode(&text, mode) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    Overrides {
        out: args.out,
        seed: args.seed,
        suppress_advanced: args.suppress_advanced,
    }
    .apply(&mut cfg);

    match run(&cfg) {
        Ok(outcome) => {
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            if let Some(dev) = outcome.max_deviation {
                println!("max normalized deviation {dev:.3e}");
            }
            ExitCode::from(EXIT_OK)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}
