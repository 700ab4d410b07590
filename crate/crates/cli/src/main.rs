use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use subspec_cli::config::{RunConfig, Task};
use subspec_cli::run::{run, RunError, EXIT_CONFIG};

/// Variational eigenvalues of subelliptic p-Laplacians on boxes.
#[derive(Parser, Debug)]
#[command(name = "subspec", version)]
struct Args {
    /// JSON run description; flags given here override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// euclidean | grushin:<beta> | heisenberg
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    p: Option<f64>,
    /// a1,b1,a2,b2[,a3,b3]
    #[arg(long = "box", value_delimiter = ',', allow_hyphen_values = true)]
    region: Option<Vec<f64>>,
    /// N[,N2,...] cells per side, ascending
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<usize>>,
    #[arg(long)]
    modes: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    eps0: Option<f64>,
    #[arg(long)]
    eps_min: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Random restarts for the simplicity diagnostics.
    #[arg(long)]
    trials: Option<usize>,
    /// Stencil radius of the control-distance graph.
    #[arg(long)]
    radius: Option<usize>,
    /// Comma-separated subset of lambda1,modes,metric,holder,calibrate,convergence
    #[arg(long, value_delimiter = ',')]
    tasks: Option<Vec<Task>>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn build_config(args: Args) -> Result<RunConfig, String> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            RunConfig::from_json(&text)?
        }
        None => RunConfig::default(),
    };
    macro_rules! over {
        ($($field:ident => $target:ident),*) => {
            $(if let Some(v) = args.$field { cfg.$target = v; })*
        };
    }
    over!(family => family, p => p, grid => grid, modes => modes, max_iter => max_iter,
          eps0 => eps0, eps_min => eps_min, seed => seed, trials => trials, radius => radius,
          tasks => tasks, out => out);
    if args.dim.is_some() {
        cfg.dim = args.dim;
    }
    if args.region.is_some() {
        cfg.region = args.region;
    }
    if args.tol.is_some() {
        cfg.tol = args.tol;
    }
    Ok(cfg)
}

fn threads() -> Result<usize, String> {
    match std::env::var("SUBSPEC_THREADS") {
        Err(_) => Ok(0),
        Ok(s) => s
            .trim()
            .parse::<usize>()
            .map_err(|_| format!("SUBSPEC_THREADS must be a non-negative integer, got '{s}'")),
    }
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG as u8 } else { 0 });
        }
    };
    let prepared = build_config(args).and_then(|cfg| threads().map(|t| (cfg, t)));
    let (cfg, threads) = match prepared {
        Ok(x) => x,
        Err(m) => {
            eprint!("{}", RunError::Config(vec![m]));
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    match subspec::exec::with_threads(threads, || run(&cfg)) {
        Ok(outcome) => {
            for line in &outcome.summary {
                println!("{line}");
            }
            for path in &outcome.artifacts {
                println!("wrote {}", path.display());
            }
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprint!("{e}");
            if matches!(e, RunError::Failed(_)) {
                eprintln!();
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
