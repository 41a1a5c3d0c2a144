//! Solve with postprocessing and write the fields as legacy VTK.
//!
//! ```text
//! cargo run --release --example vtk_output -- out.vtk
//! ```

use std::fs::File;
use std::io::BufWriter;

use lsfem::analysis::output::{write_vtk, VtkFields};
use lsfem::analysis::{level_errors, solve_level, StudyOptions};
use lsfem::mesh::Mesh;
use lsfem::problems::builtin;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "solution.vtk".into());
    let problem = builtin("singular")?;
    let pair = "BDM1/P1".parse()?;
    let opts = StudyOptions {
        postprocess: true,
        ..Default::default()
    };
    let sol = solve_level(Mesh::structured(16)?, pair, &problem, &opts)?;
    let (_, post) = level_errors(&sol, pair, &problem, &opts)?;
    let fields = VtkFields {
        mesh: &sol.mesh,
        flux: &sol.flux,
        scalar: &sol.scalar,
        q_h: &sol.q_h,
        u_h: &sol.u_h,
        post: post.as_ref(),
    };
    let mut w = BufWriter::new(File::create(&path)?);
    write_vtk(&mut w, "singular BDM1/P1 n=16", &fields)?;
    println!("wrote {path}");
    Ok(())
}
