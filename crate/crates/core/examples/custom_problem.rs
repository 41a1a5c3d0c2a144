//! A user-defined manufactured solution with a variable coefficient.
//!
//! ```text
//! cargo run --release --example custom_problem
//! ```

use std::f64::consts::PI;
use std::sync::Arc;

use lsfem::analysis::output::to_markdown;
use lsfem::analysis::{run_study, MeshSource, StudyOptions};
use lsfem::problems::{Exact, Problem};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // u = sin(pi x) sin(pi y), sigma = 2 + x y, eta = 1
    let sigma = |p: [f64; 2]| 2.0 + p[0] * p[1];
    let u = |p: [f64; 2]| (PI * p[0]).sin() * (PI * p[1]).sin();
    let grad = |p: [f64; 2]| {
        let (sx, cx, sy, cy) = (
            (PI * p[0]).sin(),
            (PI * p[0]).cos(),
            (PI * p[1]).sin(),
            (PI * p[1]).cos(),
        );
        [PI * cx * sy, PI * sx * cy]
    };
    let exact = Exact {
        u: Arc::new(u),
        grad_u: Arc::new(grad),
        q: Arc::new(move |p| {
            let g = grad(p);
            [sigma(p) * g[0], sigma(p) * g[1]]
        }),
        div_q: Arc::new(move |p| {
            let g = grad(p);
            p[1] * g[0] + p[0] * g[1] - 2.0 * PI * PI * sigma(p) * u(p)
        }),
    };
    let problem = Problem::from_exact("sine", Arc::new(sigma), Arc::new(|_| 1.0), 2.0, exact);
    if let Some(r) = problem.consistency_residual() {
        println!("consistency residual {r:.1e}");
    }
    let report = run_study(
        &problem,
        "RT1/P2".parse()?,
        &MeshSource::Structured(vec![4, 8, 16, 32]),
        &StudyOptions::default(),
    )?;
    print!("{}", to_markdown(&report));
    Ok(())
}
