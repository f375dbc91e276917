//! Batch front-end: frame and precision configuration, subcommands invoking
//! every module, JSON input/output, and the property-suite runner with
//! measured-constant reporting.
//!
//! Exit codes: 0 success, 2 precondition or schema violation, 3 precision
//! exhaustion. Given the same configuration and seed, the output bytes are
//! identical across runs.

mod config;
mod ops;

use clap::{Parser, Subcommand};
use config::RunConfig;
use phigamma::error::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "phigamma", version, about = "Exact-arithmetic workbench for toric frames, truncated period rings, and (phi, Gamma)-module descent")]
struct Cli {
    /// Run configuration JSON (defaults are used when omitted).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Random seed override for property batches.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file (stdout when omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cone and frame combinatorics.
    Cone {
        #[arg(value_parser = ["dual", "hilbert", "refine", "graph", "trop", "gauss"])]
        op: String,
        input: PathBuf,
    },
    /// Characteristic-p coefficient ring operations.
    Charp {
        #[arg(value_parser = ["ops", "frob", "mu", "bound"])]
        op: String,
        input: PathBuf,
    },
    /// Witt vectors, theta, special elements, lifts, roots.
    Witt {
        #[arg(value_parser = ["ops", "teich", "theta", "special", "lift", "root"])]
        op: String,
        input: PathBuf,
    },
    /// Group operations and actions.
    Gamma {
        #[arg(value_parser = ["act", "compose", "dgamma", "equivariance"])]
        op: String,
        input: PathBuf,
    },
    /// phi-module slope theory, trivialization, cohomology.
    Phim {
        #[arg(value_parser = ["slopes", "twist", "trivialize", "cohomology", "pure"])]
        op: String,
        input: PathBuf,
    },
    /// Deperfection and refinement algorithms.
    Descend {
        #[arg(value_parser = ["split", "matrix", "module", "fourier", "splitref"])]
        op: String,
        input: PathBuf,
    },
    /// Property-suite runner: all or one module.
    Suite {
        #[arg(value_parser = ["all", "cones", "charp", "wittperiod", "gamma", "phimod", "descent"])]
        module: String,
    },
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::PrecisionExhausted(_)
        | Error::InsufficientPadicPrecision
        | Error::WindowUnderflow
        | Error::ToricOverflow => 3,
        _ => 2,
    }
}

fn load_config(path: &Option<PathBuf>, seed: Option<u64>) -> Result<RunConfig, Error> {
    let mut cfg = match path {
        None => RunConfig::default(),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", p.display())))?;
            let value: Value = serde_json::from_str(&text)
                .map_err(|e| Error::InvalidInput(format!("config is not JSON: {e}")))?;
            ops::parse_input(&value)?
        }
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn load_input(path: &PathBuf) -> Result<Value, Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::InvalidInput(format!("input is not JSON: {e}")))
}

fn run(cli: &Cli) -> Result<(Value, bool), Error> {
    let cfg = load_config(&cli.config, cli.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let measured = config::measure_constants(&cfg).ok();
    let (result, ok) = match &cli.command {
        Command::Cone { op, input } => {
            let v = load_input(input)?;
            let out = match op.as_str() {
                "dual" => ops::cone_dual(&v)?,
                "hilbert" => ops::cone_hilbert(&v)?,
                "refine" => ops::cone_refine(&v)?,
                "graph" => ops::cone_graph(&v)?,
                "trop" => ops::cone_trop(&v)?,
                _ => ops::cone_gauss(&v)?,
            };
            (out, true)
        }
        Command::Charp { op, input } => {
            let v = load_input(input)?;
            let out = match op.as_str() {
                "ops" => ops::charp_ops(&v)?,
                "frob" => ops::charp_frob(&v)?,
                "mu" => ops::charp_mu(&v)?,
                _ => ops::charp_bound(&cfg, &v)?,
            };
            (out, true)
        }
        Command::Witt { op, input } => {
            let v = load_input(input)?;
            let out = match op.as_str() {
                "ops" => ops::witt_ops(&v)?,
                "teich" => ops::witt_teich(&v)?,
                "theta" => ops::witt_theta(&cfg, &v)?,
                "special" => ops::witt_special(&cfg, &v)?,
                "lift" => ops::witt_lift(&cfg, &v)?,
                _ => ops::witt_root(&cfg, &v)?,
            };
            (out, true)
        }
        Command::Gamma { op, input } => {
            let v = load_input(input)?;
            let out = match op.as_str() {
                "act" => ops::gamma_act(&cfg, &v)?,
                "compose" => ops::gamma_compose(&cfg, &v)?,
                "dgamma" => ops::gamma_dgamma(&cfg, &v)?,
                _ => ops::gamma_equivariance(&cfg, &mut rng, &v)?,
            };
            (out, true)
        }
        Command::Phim { op, input } => {
            let v = load_input(input)?;
            let out = match op.as_str() {
                "slopes" => ops::phim_slopes(&v)?,
                "twist" => ops::phim_twist(&v)?,
                "trivialize" => ops::phim_trivialize(&v)?,
                "cohomology" => ops::phim_cohomology(&v)?,
                _ => ops::phim_pure(&v)?,
            };
            (out, true)
        }
        Command::Descend { op, input } => {
            let v = load_input(input)?;
            let out = match op.as_str() {
                "split" => ops::descend_split(&v)?,
                "matrix" => ops::descend_matrix(&v)?,
                "module" => ops::descend_module(&v)?,
                "fourier" => ops::descend_fourier(&v)?,
                _ => ops::descend_splitref(&v)?,
            };
            (out, true)
        }
        Command::Suite { module } => ops::run_suite(module, &mut rng)?,
    };
    let envelope = serde_json::json!({
        "config": serde_json::to_value(&cfg).unwrap(),
        "measured": measured.map(|m| serde_json::to_value(m).unwrap()),
        "result": result,
    });
    Ok((envelope, ok))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok((value, ok)) => {
            let text = serde_json::to_string_pretty(&value).unwrap();
            match &cli.out {
                None => println!("{text}"),
                Some(path) => {
                    if let Err(e) = std::fs::write(path, text + "\n") {
                        eprintln!("cannot write {}: {e}", path.display());
                        return ExitCode::from(2);
                    }
                }
            }
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
