//! `omo`: run, verify, generate and integrate from the command line.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use omo::config::ExperimentConfig;
use omo::experiment::{self, METADATA_FILE, PLOT_FILE, POOL_FILE, TRACE_FILE};
use omo::verify::{all_passed, run_checks, VerifyOptions};
use omo::Error;

const EXIT_CHECK: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_SOLVER: u8 = 3;

#[derive(Parser)]
#[command(name = "omo", version, about = "Online monotone optimization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an equilibration experiment and write trace.csv, metadata.txt and plot.svg.
    Run(ExperimentArgs),
    /// Generate a pool of network games and write pool.txt.
    Gen(ExperimentArgs),
    /// Check the numerical facts the library relies on.
    Verify(VerifyArgs),
    /// Line integral of a map along a straight segment.
    Integrate(IntegrateArgs),
}

#[derive(Args)]
struct ExperimentArgs {
    /// TOML experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Overrides `run.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Gauss-Legendre nodes used by the quadrature checks.
    #[arg(long, default_value_t = 16)]
    quad_nodes: usize,
    /// Test mode: plant a negative eigenvalue in the affine map under check.
    #[arg(long, hide = true)]
    inject_negative_eig: bool,
}

#[derive(Args)]
struct IntegrateArgs {
    /// `saddle`, `rotation2d`, or a matrix file (dim, rows of `A`, then `b`).
    #[arg(long)]
    map: String,
    /// Start point, e.g. `1,1`.
    #[arg(long, allow_hyphen_values = true)]
    from: String,
    /// End point.
    #[arg(long, allow_hyphen_values = true)]
    to: String,
    #[arg(long, default_value_t = 16)]
    nodes: usize,
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::NonConvergence { .. } => EXIT_SOLVER,
        Error::Config(_) | Error::Parse { .. } | Error::InvalidArgument(_) => EXIT_CONFIG,
        _ => EXIT_CHECK,
    }
}

fn load_config(args: &ExperimentArgs) -> Result<ExperimentConfig, Error> {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", args.config.display())))?;
    let mut cfg = ExperimentConfig::from_toml(&text)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn print_written(out: &Path, files: &[&str]) {
    for f in files {
        let p = out.join(f);
        if p.exists() {
            println!("wrote {}", p.display());
        }
    }
}

fn cmd_run(args: &ExperimentArgs) -> Result<(), Error> {
    let cfg = load_config(args)?;
    let result = experiment::run_to_dir(&cfg, &args.out);
    print_written(&args.out, &[TRACE_FILE, METADATA_FILE, PLOT_FILE]);
    let out = result?;
    println!(
        "rounds {}  eta {:.6}  avg regret_n {:.6}  cum regret_s {:.6}",
        out.trace.len(),
        out.eta,
        out.trace.avg_regret_n(),
        out.trace.cum_regret_s()
    );
    Ok(())
}

fn cmd_gen(args: &ExperimentArgs) -> Result<(), Error> {
    let cfg = load_config(args)?;
    let result = experiment::gen_to_dir(&cfg, &args.out);
    print_written(&args.out, &[POOL_FILE, METADATA_FILE]);
    let pool = result?;
    println!("{} {} networks of dimension {}", pool.entries().len(), cfg.family, cfg.dim());
    Ok(())
}

fn cmd_verify(args: &VerifyArgs) -> Result<bool, Error> {
    if args.quad_nodes == 0 {
        return Err(Error::InvalidArgument("--quad-nodes must be at least 1".into()));
    }
    let opts = VerifyOptions {
        seed: args.seed,
        quad_nodes: args.quad_nodes,
        inject_negative_eig: args.inject_negative_eig,
    };
    let results = run_checks(&opts);
    for r in &results {
        println!("{r}");
    }
    let ok = all_passed(&results);
    println!("{}", if ok { "all checks passed" } else { "some checks FAILED" });
    Ok(ok)
}

fn cmd_integrate(args: &IntegrateArgs) -> Result<(), Error> {
    let map = experiment::parse_map_arg(&args.map)?;
    let a = experiment::parse_point(&args.from)?;
    let b = experiment::parse_point(&args.to)?;
    let est = experiment::integrate(&map, &a, &b, args.nodes)?;
    println!("{:.15}", est.value);
    println!("eps_q {:e}", est.eps);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Gen(a) => cmd_gen(a),
        Command::Integrate(a) => cmd_integrate(a),
        Command::Verify(a) => match cmd_verify(a) {
            Ok(true) => Ok(()),
            Ok(false) => return ExitCode::from(EXIT_CHECK),
            Err(e) => Err(e),
        },
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
