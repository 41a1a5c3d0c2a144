//! Write a mesh in the triangle-list format, read it back, refine it and
//! run a study on the refinements.
//!
//! ```text
//! cargo run --release --example mesh_io
//! ```

use lsfem::analysis::output::to_markdown;
use lsfem::analysis::{run_study, MeshSource, StudyOptions};
use lsfem::mesh::Mesh;
use lsfem::problems::builtin;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("lsfem-mesh-io");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("coarse.mesh");

    // an unstructured coarse mesh: the unit square split around an off-center point
    let mut vertices = vec![
        [-1.0, -1.0],
        [1.0, -1.0],
        [1.0, 1.0],
        [-1.0, 1.0],
        [0.2, -0.1],
    ];
    vertices.extend([[0.0, -1.0], [1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]]);
    let triangles = vec![
        [0, 5, 4],
        [5, 1, 4],
        [1, 6, 4],
        [6, 2, 4],
        [2, 7, 4],
        [7, 3, 4],
        [3, 8, 4],
        [8, 0, 4],
    ];
    Mesh::from_parts(vertices, triangles)?.save(&path)?;
    println!("{}", std::fs::read_to_string(&path)?);

    let mesh = Mesh::load(&path)?;
    println!(
        "{} vertices, {} edges, {} triangles, h = {:.3}",
        mesh.num_vertices(),
        mesh.num_edges(),
        mesh.num_triangles(),
        mesh.h()
    );

    let source = MeshSource::File {
        path,
        refinements: 3,
    };
    let report = run_study(
        &builtin("smooth1")?,
        "RT0/P1".parse()?,
        &source,
        &StudyOptions::default(),
    )?;
    print!("{}", to_markdown(&report));
    Ok(())
}
