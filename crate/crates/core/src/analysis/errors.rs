use std::collections::BTreeMap;

use serde::Serialize;

use super::postprocess::PostProcessed;
use super::rates::Norm;
use crate::assembly::Execution;
use crate::element::LocalBasis;
use crate::error::Result;
use crate::field::{FluxField, ScalarField};
use crate::linalg::SolveReport;
use crate::mesh::Mesh;
use crate::problems::Problem;
use crate::quadrature::ElementQuadrature;
use crate::spaces::{FluxSpace, ScalarSpace};

/// Discrete solution together with the projections of the exact solution.
pub struct Fields<'a> {
    pub q_h: &'a FluxField,
    pub u_h: &'a ScalarField,
    /// Canonical interpolant of the exact flux.
    pub pi_q: &'a FluxField,
    /// Elliptic projection of the exact scalar.
    pub pi_u: &'a ScalarField,
    pub post: Option<&'a PostProcessed>,
}

/// Error norms on one mesh.
#[derive(Clone, Debug, Serialize)]
pub struct ErrorReport {
    pub level: usize,
    pub h: f64,
    pub flux_dofs: usize,
    pub scalar_dofs: usize,
    pub norms: BTreeMap<Norm, f64>,
    /// `‖σ^-1/2 e_q‖`, `‖∇·e_q‖`, `‖σ^1/2 ∇e_u‖`, `‖ω²η e_u‖`.
    pub energy_components: [f64; 4],
    pub solver: Option<SolveReport>,
}

impl ErrorReport {
    pub fn get(&self, norm: Norm) -> Option<f64> {
        self.norms.get(&norm).copied()
    }
}

/// Squared contributions per element, in the order of the `SLOTS` below.
const NSLOTS: usize = 12;
const SLOTS: [Norm; 8] = [
    Norm::Q,
    Norm::DivQ,
    Norm::U,
    Norm::GradU,
    Norm::SuperQ,
    Norm::SuperDivQ,
    Norm::SuperU,
    Norm::SuperGradU,
];

fn sq(v: [f64; 2]) -> f64 {
    v[0] * v[0] + v[1] * v[1]
}

/// All error quantities, integrated with `quad` (graded near a singular
/// line when the problem has one).
pub fn compute_errors(
    mesh: &Mesh,
    flux: &FluxSpace,
    scalar: &ScalarSpace,
    problem: &Problem,
    fields: &Fields,
    quad: &ElementQuadrature,
    execution: Execution,
) -> Result<ErrorReport> {
    let ex = problem.exact()?;
    let basis = LocalBasis::new(quad, Some(&flux.element), Some(&scalar.element));
    let post_basis = fields
        .post
        .map(|p| LocalBasis::new(quad, None, Some(&p.element)));
    let w2 = problem.omega * problem.omega;
    let elements: Vec<usize> = (0..mesh.num_triangles()).collect();
    let locals = execution.map(&elements, |&t| {
        let tri = mesh.triangle_points(t);
        let (cq, cpq) = (fields.q_h.local(flux, t), fields.pi_q.local(flux, t));
        let (cu, cpu) = (fields.u_h.local(scalar, t), fields.pi_u.local(scalar, t));
        let mut acc = [0.0; NSLOTS + 1];
        basis.visit(tri, flux.dofs.signs(t), |pd| {
            let mut qh = [0.0; 2];
            let mut pq = [0.0; 2];
            let (mut dqh, mut dpq) = (0.0, 0.0);
            for i in 0..cq.len() {
                let v = pd.flux[i];
                qh[0] += cq[i] * v[0];
                qh[1] += cq[i] * v[1];
                pq[0] += cpq[i] * v[0];
                pq[1] += cpq[i] * v[1];
                dqh += cq[i] * pd.div[i];
                dpq += cpq[i] * pd.div[i];
            }
            let mut uh = 0.0;
            let mut pu = 0.0;
            let mut guh = [0.0; 2];
            let mut gpu = [0.0; 2];
            for a in 0..cu.len() {
                let g = pd.grad[a];
                uh += cu[a] * pd.scalar[a];
                pu += cpu[a] * pd.scalar[a];
                guh[0] += cu[a] * g[0];
                guh[1] += cu[a] * g[1];
                gpu[0] += cpu[a] * g[0];
                gpu[1] += cpu[a] * g[1];
            }
            let x = pd.x;
            let (q, dq, u, gu) = ((ex.q)(x), (ex.div_q)(x), (ex.u)(x), (ex.grad_u)(x));
            let (s, eta) = ((problem.sigma)(x), (problem.eta)(x));
            let eq = [q[0] - qh[0], q[1] - qh[1]];
            let eu = u - uh;
            let egu = [gu[0] - guh[0], gu[1] - guh[1]];
            let w = pd.w;
            let vals = [
                sq(eq),
                (dq - dqh).powi(2),
                eu * eu,
                sq(egu),
                sq([pq[0] - qh[0], pq[1] - qh[1]]),
                (dpq - dqh).powi(2),
                (pu - uh).powi(2),
                sq([gpu[0] - guh[0], gpu[1] - guh[1]]),
                sq(eq) / s,
                (dq - dqh).powi(2),
                s * sq(egu),
                (w2 * eta * eu).powi(2),
            ];
            for (a, v) in acc.iter_mut().zip(vals) {
                *a += w * v;
            }
        });
        if let (Some(post), Some(pb)) = (fields.post, &post_basis) {
            let c = post.local(t);
            pb.visit(tri, &[], |pd| {
                let mut g = [0.0; 2];
                for a in 0..c.len() {
                    g[0] += c[a] * pd.grad[a][0];
                    g[1] += c[a] * pd.grad[a][1];
                }
                let gu = (ex.grad_u)(pd.x);
                acc[NSLOTS] += pd.w * sq([gu[0] - g[0], gu[1] - g[1]]);
            });
        }
        acc
    });
    let mut total = [0.0; NSLOTS + 1];
    for l in &locals {
        for (t, v) in total.iter_mut().zip(l) {
            *t += v;
        }
    }
    let mut norms = BTreeMap::new();
    for (i, n) in SLOTS.iter().enumerate() {
        norms.insert(*n, total[i].sqrt());
    }
    let energy_components = [
        total[8].sqrt(),
        total[9].sqrt(),
        total[10].sqrt(),
        total[11].sqrt(),
    ];
    norms.insert(
        Norm::Energy,
        (total[8] + total[9] + total[10] + total[11]).sqrt(),
    );
    if fields.post.is_some() {
        norms.insert(Norm::PostGradU, total[NSLOTS].sqrt());
    }
    Ok(ErrorReport {
        level: 0,
        h: mesh.h(),
        flux_dofs: flux.dofs.num_dofs(),
        scalar_dofs: scalar.dofs.num_dofs(),
        norms,
        energy_components,
        solver: None,
    })
}
