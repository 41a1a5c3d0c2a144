//! Mesh-refinement study for one problem and element pair.
//!
//! ```text
//! cargo run --release --example convergence_study -- smooth1 BDM1/P2 0 4,8,16,32,64
//! ```

use lsfem::analysis::output::to_markdown;
use lsfem::analysis::{run_study, MeshSource, StudyOptions};
use lsfem::problems::{builtin, builtin_with_omega};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let problem = args.first().map_or("smooth1", String::as_str);
    let pair = args.get(1).map_or("RT0/P1", String::as_str).parse()?;
    let omega: Option<f64> = args.get(2).map(|s| s.parse()).transpose()?;
    let levels = args
        .get(3)
        .map_or("4,8,16,32", String::as_str)
        .split(',')
        .map(str::parse)
        .collect::<Result<Vec<usize>, _>>()?;
    let problem = match omega {
        Some(w) => builtin_with_omega(problem, w)?,
        None => builtin(problem)?,
    };
    let opts = StudyOptions {
        postprocess: true,
        ..Default::default()
    };
    let report = run_study(&problem, pair, &MeshSource::Structured(levels), &opts)?;
    print!("{}", to_markdown(&report));
    println!(
        "\n{:.1} s, {}",
        report.seconds,
        if report.passed() { "pass" } else { "FAIL" }
    );
    Ok(())
}
