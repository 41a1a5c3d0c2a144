use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lsfem::cli::{
    cmd_solve, cmd_study, cmd_tables, parse_levels, ExitStatus, Overrides, StudyConfig,
};

/// Div least-squares FEM: solves, convergence studies and rate tables.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One assembly and solve on the finest level.
    Solve(RunArgs),
    /// Convergence study with rate gates.
    Study(RunArgs),
    /// Print the predicted rate tables.
    Tables,
}

#[derive(Args)]
struct RunArgs {
    /// JSON study configuration; flags override its fields.
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[arg(long)]
    problem: Option<String>,
    /// RT0, RT1, RT2, BDM1, BDM2, ...
    #[arg(long)]
    flux: Option<String>,
    /// P1, P2, P3
    #[arg(long)]
    scalar: Option<String>,
    #[arg(long)]
    omega: Option<f64>,
    /// Structured levels, e.g. 4,8,16,32,64.
    #[arg(long)]
    levels: Option<String>,
    /// Mesh file (refined `--refinements` times).
    #[arg(long)]
    mesh: Option<PathBuf>,
    #[arg(long)]
    refinements: Option<usize>,
    /// Relative residual tolerance of the linear solver.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    no_gate: bool,
    #[arg(long)]
    sequential: bool,
    /// Compute the postprocessed scalar u*_h.
    #[arg(long)]
    postprocess: bool,
    #[arg(long)]
    vtk: bool,
    #[arg(long)]
    gnuplot: bool,
    /// Dump the system matrix (solve only).
    #[arg(long)]
    matrix_market: bool,
}

impl RunArgs {
    fn config(&self) -> Result<StudyConfig, lsfem::Error> {
        let mut cfg = match &self.config {
            Some(p) => StudyConfig::load(p)?,
            None => StudyConfig::default(),
        };
        cfg.apply(&Overrides {
            problem: self.problem.clone(),
            flux: self.flux.clone(),
            scalar: self.scalar.clone(),
            omega: self.omega,
            levels: self.levels.as_deref().map(parse_levels).transpose()?,
            mesh: self.mesh.clone(),
            refinements: self.refinements,
            tol: self.tol,
            out: self.out.clone(),
            no_gate: self.no_gate,
            sequential: self.sequential,
            postprocess: self.postprocess,
            vtk: self.vtk,
            gnuplot: self.gnuplot,
            matrix_market: self.matrix_market,
        });
        Ok(cfg)
    }
}

fn run(args: &RunArgs, cmd: fn(&StudyConfig, &mut dyn io::Write) -> ExitStatus) -> ExitStatus {
    match args.config() {
        Ok(cfg) => cmd(&cfg, &mut io::stdout().lock()),
        Err(e) => {
            eprintln!("error: {e}");
            ExitStatus::Usage
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(n) = std::env::var("LSFEM_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global();
    }
    let status = match cli.command {
        Command::Tables => cmd_tables(&mut io::stdout().lock()),
        Command::Solve(a) => run(&a, cmd_solve),
        Command::Study(a) => run(&a, cmd_study),
    };
    ExitCode::from(status.code() as u8)
}
