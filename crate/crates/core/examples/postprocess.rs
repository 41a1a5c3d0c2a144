//! Gradient of the scalar before and after local postprocessing, on a
//! sequence of meshes.
//!
//! ```text
//! cargo run --release --example postprocess -- BDM1/P1
//! ```

use lsfem::analysis::{level_errors, observed_rate, solve_level, Norm, StudyOptions};
use lsfem::mesh::Mesh;
use lsfem::problems::builtin;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let pair = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "BDM1/P1".into())
        .parse()?;
    let problem = builtin("smooth-var")?;
    let opts = StudyOptions {
        postprocess: true,
        ..Default::default()
    };
    println!(
        "{:>4} {:>12} {:>6} {:>12} {:>6}",
        "n", "grad u_h", "rate", "grad u*_h", "rate"
    );
    let mut prev: Option<(f64, f64, f64)> = None;
    for n in [4, 8, 16, 32] {
        let sol = solve_level(Mesh::structured(n)?, pair, &problem, &opts)?;
        let (e, _) = level_errors(&sol, pair, &problem, &opts)?;
        let (plain, post) = (e.get(Norm::GradU).unwrap(), e.get(Norm::PostGradU).unwrap());
        let rate = |a: Option<f64>| a.map_or(String::new(), |r| format!("{r:.2}"));
        let (r0, r1) = match prev {
            Some((h0, p0, s0)) => (
                observed_rate(p0, plain, h0, e.h, 0.0),
                observed_rate(s0, post, h0, e.h, 0.0),
            ),
            None => (None, None),
        };
        println!(
            "{n:>4} {plain:>12.4e} {:>6} {post:>12.4e} {:>6}",
            rate(r0),
            rate(r1)
        );
        prev = Some((e.h, plain, post));
    }
    Ok(())
}
