//! `div Pi_P q = P_h div q`: the divergence of the canonical interpolant is
//! the L2 projection of the divergence, for every RT and BDM space.
//!
//! ```text
//! cargo run --release --example commuting_diagram
//! ```

use lsfem::mesh::{Mesh, Point};
use lsfem::projections::{hdiv_interpolate, l2_project};
use lsfem::quadrature::ElementQuadrature;
use lsfem::spaces::{FluxFamily, FluxSpace};

fn q(p: Point) -> [f64; 2] {
    let (x, y) = (p[0], p[1]);
    [
        (2.0 * x + y).sin() * (1.0 + y * y),
        (x * y).exp() - x.powi(3),
    ]
}

fn div_q(p: Point) -> f64 {
    let (x, y) = (p[0], p[1]);
    2.0 * (2.0 * x + y).cos() * (1.0 + y * y) + x * (x * y).exp()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mesh = Mesh::structured(6)?;
    let quad = ElementQuadrature::new(16, None)?;
    println!(
        "{:<6} {:>14} {:>14}",
        "space", "|div Pi q - P div q|", "|div q - P div q|"
    );
    for (family, k) in [
        (FluxFamily::RT, 0),
        (FluxFamily::RT, 1),
        (FluxFamily::RT, 2),
        (FluxFamily::BDM, 1),
        (FluxFamily::BDM, 2),
    ] {
        let space = FluxSpace::new(&mesh, family, k);
        let pi_q = hdiv_interpolate(q, &mesh, &space, &quad);
        let p_div = l2_project(div_q, &mesh, space.element.div_degree(), &quad);
        let rule = quad.standard();
        let (mut commute, mut proj) = (0.0, 0.0);
        for t in 0..mesh.num_triangles() {
            let tri = mesh.triangle_points(t);
            let area = mesh.area(t);
            for (i, w) in rule.weights.iter().enumerate() {
                let r = rule.ref_point(i);
                let x = lsfem::quadrature::to_physical(tri, rule.points[i]);
                let (_, d) = pi_q.eval(&mesh, &space, t, r);
                let pd = p_div.eval(t, r);
                commute += 2.0 * area * w * (d - pd).powi(2);
                proj += 2.0 * area * w * (div_q(x) - pd).powi(2);
            }
        }
        println!(
            "{:<6} {:>20.3e} {:>18.3e}",
            format!("{family}{k}"),
            commute.sqrt(),
            proj.sqrt()
        );
    }
    Ok(())
}
