mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Twin-beam parametric down-conversion speckle simulator.
#[derive(Debug, Parser)]
#[command(name = "pdc-speckle", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Setup {
    /// `key = value` configuration file; built-in defaults when omitted.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Override one configuration key, e.g. `--set pump.waist_mm=0.7`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the closed-form low-gain coherence prediction.
    Predict {
        #[command(flatten)]
        setup: Setup,
        /// Write `predict.csv` into this directory as well.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Synthesize and detect frames, saving them as PGM with sidecars.
    Simulate {
        #[command(flatten)]
        setup: Setup,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        frames: usize,
        #[arg(long, value_name = "DIR", default_value = "frames")]
        out: PathBuf,
    },
    /// Run the estimation chain on saved frames.
    Analyze {
        #[command(flatten)]
        setup: Setup,
        /// Write `analysis.csv` into this directory instead of stdout.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
        #[arg(required = true, value_name = "FRAME")]
        inputs: Vec<PathBuf>,
    },
    /// Sweep one configuration key and tabulate per-frame and per-point estimates.
    Campaign {
        #[command(flatten)]
        setup: Setup,
        /// `key=v1,v2,...` in the key's own units.
        #[arg(long, value_name = "KEY=VALUES")]
        sweep: String,
        #[arg(long, default_value_t = 10)]
        frames: usize,
        /// Seed base; frame k of point j uses seed + j·10⁶ + k.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_name = "DIR", default_value = "campaign")]
        out: PathBuf,
        /// Leave out the generation-time comment so reruns are byte-identical.
        #[arg(long)]
        no_timestamp: bool,
        /// Skip the scaling-law fits.
        #[arg(long)]
        no_fits: bool,
    },
    /// Fit a scaling law to two columns of a CSV table.
    Fit {
        #[arg(long, value_enum)]
        model: Model,
        #[arg(long, value_name = "PATH")]
        input: PathBuf,
        /// Abscissa column name; the first column when omitted.
        #[arg(long)]
        x: Option<String>,
        /// Ordinate column name; the second column when omitted.
        #[arg(long)]
        y: Option<String>,
        /// Fixed prefactor k of `y = k sinh²(σ x)`.
        #[arg(long, default_value_t = 1.0)]
        k: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Model {
    /// y = α x + y₀
    Linear,
    /// y = k sinh²(σ x)
    Sinh2,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Predict { setup, out } => commands::predict(&setup, out.as_deref()),
        Command::Simulate {
            setup,
            seed,
            frames,
            out,
        } => commands::simulate(&setup, seed, frames, &out),
        Command::Analyze { setup, out, inputs } => commands::analyze(&setup, &inputs, out.as_deref()),
        Command::Campaign {
            setup,
            sweep,
            frames,
            seed,
            out,
            no_timestamp,
            no_fits,
        } => commands::campaign(&setup, &sweep, frames, seed, &out, !no_timestamp, !no_fits),
        Command::Fit { model, input, x, y, k } => {
            commands::fit(model, &input, x.as_deref(), y.as_deref(), k)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("pdc-speckle: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
