//! Assemble and solve the least-squares system on one structured mesh and
//! print the error norms.
//!
//! ```text
//! cargo run --release --example solve -- smooth-var RT1/P2 16
//! ```

use lsfem::analysis::{level_errors, solve_level, Norm, StudyOptions};
use lsfem::mesh::Mesh;
use lsfem::problems::builtin;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let problem = builtin(args.first().map_or("smooth1", String::as_str))?;
    let pair = args.get(1).map_or("RT0/P1", String::as_str).parse()?;
    let n: usize = args.get(2).map_or(Ok(8), |s| s.parse())?;

    let opts = StudyOptions::default();
    let sol = solve_level(Mesh::structured(n)?, pair, &problem, &opts)?;
    println!(
        "{} {pair} n={n}: {} flux + {} scalar dofs, {:?} in {} iterations, residual {:.2e}",
        problem.name,
        sol.flux.dofs.num_dofs(),
        sol.scalar.dofs.num_dofs(),
        sol.report.method,
        sol.report.iterations,
        sol.report.relative_residual
    );
    let (errors, _) = level_errors(&sol, pair, &problem, &opts)?;
    for norm in Norm::PLAIN
        .iter()
        .chain(&Norm::SUPER)
        .chain([&Norm::Energy])
    {
        if let Some(e) = errors.get(*norm) {
            println!("  {:<28} {e:.4e}", norm.label());
        }
    }
    Ok(())
}
