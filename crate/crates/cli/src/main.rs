use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qdinf::verify::Tolerances;
use qdinf::FragmentCount;
use qdinf_cli::{load_config, run, save_config, Command, FigureId, GridSpec, OutputFormat, RunConfig};

/// Objectivity bounds for quantum Darwinism with infinite-dimensional systems.
#[derive(Debug, Parser)]
#[command(name = "qdinf", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Evaluate the Theorem 1 or Theorem 2 bound at a single N.
    Bound(BoundArgs),
    /// Bound-versus-N sweeps (fig2: Theorem 1, fig3: Theorem 2) as CSV.
    Figure(FigureArgs),
    /// Moment generating function and cut-off parameters of Gaussian states.
    Gaussian(GaussianArgs),
    /// Run the lemma verification suites.
    Verify(VerifyArgs),
    /// Execute a saved config file.
    Run {
        config: PathBuf,
    },
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long, env = "QDINF_SEED", default_value_t = 1)]
    seed: u64,
    /// Write the result here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
    /// Also write the resolved config to this file.
    #[arg(long)]
    save_config: Option<PathBuf>,
    #[arg(long)]
    tol_inequality: Option<f64>,
    #[arg(long)]
    tol_identity: Option<f64>,
}

#[derive(Debug, Args)]
struct BoundArgs {
    #[arg(long = "thm", value_parser = clap::value_parser!(u8).range(1..=2))]
    theorem: u8,
    #[arg(long)]
    nbar: Option<f64>,
    #[arg(long, default_value_t = 0.01)]
    delta: f64,
    #[arg(long = "N")]
    n: FragmentCount,
    #[arg(long = "eps")]
    epsilon: Option<f64>,
    #[arg(long = "Omega")]
    cap: Option<f64>,
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long)]
    d: Option<u64>,
    #[arg(long)]
    m: Option<u64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct FigureArgs {
    #[arg(value_enum)]
    id: FigureId,
    #[arg(long)]
    nbar: Option<f64>,
    #[arg(long, default_value_t = 0.01)]
    delta: f64,
    /// Decimal exponents `lo:hi:points`.
    #[arg(long)]
    grid: Option<String>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct GaussianArgs {
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    alpha_re: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    alpha_im: f64,
    /// Thermal occupation m.
    #[arg(long, default_value_t = 0.0)]
    thermal: f64,
    /// Squeezing parameter r.
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    squeeze: f64,
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long)]
    nbar: Option<f64>,
    #[arg(long = "eps")]
    epsilon: Option<f64>,
    #[arg(long = "Omega")]
    cap: Option<f64>,
    #[arg(long)]
    certify: bool,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long, default_value = "all")]
    suite: String,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[command(flatten)]
    common: Common,
}

fn with_common(mut cfg: RunConfig, c: &Common) -> RunConfig {
    cfg.seed = c.seed;
    cfg.output = c.output.clone();
    cfg.format = c.format;
    let mut tol = Tolerances::default();
    if let Some(t) = c.tol_inequality {
        tol.inequality = t;
    }
    if let Some(t) = c.tol_identity {
        tol.identity = t;
    }
    cfg.tolerances = tol;
    cfg
}

fn build(sub: Sub) -> Result<(RunConfig, Option<PathBuf>), qdinf_cli::CliError> {
    Ok(match sub {
        Sub::Bound(a) => {
            let mut cfg = RunConfig::new(Command::Bound);
            cfg.theorem = Some(a.theorem);
            cfg.nbar = a.nbar;
            cfg.delta = a.delta;
            cfg.n = Some(a.n);
            cfg.epsilon = a.epsilon;
            cfg.cap = a.cap;
            cfg.omega = a.omega;
            cfg.d = a.d;
            cfg.m = a.m;
            (with_common(cfg, &a.common), a.common.save_config)
        }
        Sub::Figure(a) => {
            let mut cfg = RunConfig::new(Command::Figure);
            cfg.figure = Some(a.id);
            cfg.nbar = a.nbar;
            cfg.delta = a.delta;
            cfg.grid = a.grid.as_deref().map(str::parse::<GridSpec>).transpose()?;
            (with_common(cfg, &a.common), a.common.save_config)
        }
        Sub::Gaussian(a) => {
            let mut cfg = RunConfig::new(Command::Gaussian);
            cfg.alpha_re = a.alpha_re;
            cfg.alpha_im = a.alpha_im;
            cfg.thermal = a.thermal;
            cfg.squeeze = a.squeeze;
            cfg.omega = a.omega;
            cfg.nbar = a.nbar;
            cfg.epsilon = a.epsilon;
            cfg.cap = a.cap;
            cfg.certify = a.certify;
            cfg.samples = a.samples;
            (with_common(cfg, &a.common), a.common.save_config)
        }
        Sub::Verify(a) => {
            let mut cfg = RunConfig::new(Command::Verify);
            cfg.suite = Some(a.suite);
            cfg.trials = a.trials;
            (with_common(cfg, &a.common), a.common.save_config)
        }
        Sub::Run { config } => (load_config(&config)?, None),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = build(cli.command).and_then(|(cfg, save)| {
        if let Some(path) = save {
            cfg.validate()?;
            save_config(&cfg, &path)?;
        }
        let outcome = run(&cfg)?;
        Ok((cfg, outcome))
    });
    match result {
        Ok((cfg, outcome)) => {
            if cfg.output.is_none() {
                let mut out = std::io::stdout().lock();
                if out.write_all(outcome.body.as_bytes()).and_then(|_| out.flush()).is_err() {
                    return ExitCode::from(3);
                }
            }
            if outcome.counterexample {
                eprintln!("qdinf: counterexample found");
            }
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("qdinf: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
