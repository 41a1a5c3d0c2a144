//! Elementwise L2 projection, canonical H(div) interpolation and the
//! elliptic projection onto the Lagrange space.

use nalgebra::{DMatrix, DVector};

use crate::assembly::Execution;
use crate::element::LocalBasis;
use crate::error::{Error, Result};
use crate::field::{FluxField, ScalarField};
use crate::linalg::{solve_spd_with, SolveReport, SolverOptions, SparseMatrix};
use crate::mesh::{Mesh, Point};
use crate::quadrature::{edge_rule, EdgeRule, ElementQuadrature};
use crate::spaces::poly::{eval_monomial, legendre01, monomials};
use crate::spaces::{ElementMap, FluxDof, FluxSpace, ScalarSpace};

/// Discontinuous piecewise polynomial of total degree `degree`, stored per
/// element in the reference monomial basis.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewisePolynomial {
    pub degree: usize,
    pub coeffs: Vec<f64>,
}

impl PiecewisePolynomial {
    pub fn local_dim(&self) -> usize {
        (self.degree + 1) * (self.degree + 2) / 2
    }

    pub fn local(&self, t: usize) -> &[f64] {
        let n = self.local_dim();
        &self.coeffs[t * n..(t + 1) * n]
    }

    /// Value at reference point `p` of element `t`.
    pub fn eval(&self, t: usize, p: [f64; 2]) -> f64 {
        monomials(self.degree)
            .into_iter()
            .zip(self.local(t))
            .map(|(m, c)| c * eval_monomial(m, p).0)
            .sum()
    }
}

/// `Pi_l f` on every element: `(Pi_l f - f, w)_T = 0` for all `w` in `P_l(T)`.
pub fn l2_project(
    f: impl Fn(Point) -> f64 + Sync,
    mesh: &Mesh,
    degree: usize,
    quad: &ElementQuadrature,
) -> PiecewisePolynomial {
    l2_project_local(|_, x| f(x), mesh, degree, quad, Execution::Parallel)
}

/// As [`l2_project`], for integrands that are only defined elementwise.
pub fn l2_project_local(
    f: impl Fn(usize, Point) -> f64 + Sync,
    mesh: &Mesh,
    degree: usize,
    quad: &ElementQuadrature,
    execution: Execution,
) -> PiecewisePolynomial {
    let monos = monomials(degree);
    let n = monos.len();
    let elements: Vec<usize> = (0..mesh.num_triangles()).collect();
    let locals = execution.map(&elements, |&t| {
        let tri = mesh.triangle_points(t);
        let map = ElementMap::new(tri);
        let rule = quad.rule_for(tri);
        let mut mass = DMatrix::<f64>::zeros(n, n);
        let mut rhs = DVector::<f64>::zeros(n);
        for q in 0..rule.len() {
            let p = rule.ref_point(q);
            let w = rule.weights[q];
            let vals: Vec<f64> = monos.iter().map(|&m| eval_monomial(m, p).0).collect();
            let fx = f(t, map.map(p));
            for i in 0..n {
                rhs[i] += w * fx * vals[i];
                for j in 0..n {
                    mass[(i, j)] += w * vals[i] * vals[j];
                }
            }
        }
        let sol = mass
            .cholesky()
            .expect("monomial mass matrix is positive definite")
            .solve(&rhs);
        sol.as_slice().to_vec()
    });
    PiecewisePolynomial {
        degree,
        coeffs: locals.concat(),
    }
}

fn edge_base(quad: &ElementQuadrature, space: &FluxSpace) -> EdgeRule {
    let d = quad.degree().max(2 * space.element.degree() + 2);
    edge_rule(d.min(crate::quadrature::MAX_EDGE_DEGREE)).expect("edge degree within range")
}

/// Canonical interpolant `Pi_P q`: edge moments against Legendre
/// polynomials along each edge and interior moments on the reference
/// element, all evaluated by quadrature.
pub fn hdiv_interpolate(
    q: impl Fn(Point) -> [f64; 2] + Sync,
    mesh: &Mesh,
    space: &FluxSpace,
    quad: &ElementQuadrature,
) -> FluxField {
    hdiv_interpolate_local(|_, x| q(x), mesh, space, quad)
}

/// As [`hdiv_interpolate`] for fields given elementwise; on an edge the
/// first adjacent element is used, so the normal component must be single
/// valued.
pub fn hdiv_interpolate_local(
    q: impl Fn(usize, Point) -> [f64; 2] + Sync,
    mesh: &Mesh,
    space: &FluxSpace,
    quad: &ElementQuadrature,
) -> FluxField {
    let dofs = &space.dofs;
    let per_edge = dofs.dofs_per_edge();
    let mut coeffs = vec![0.0; dofs.num_dofs()];
    let base = edge_base(quad, space);
    for (e, &[a, b]) in mesh.edges().iter().enumerate() {
        let t = mesh.edge_triangles(e)[0].expect("every edge has a triangle");
        let (pa, pb) = (mesh.vertices()[a], mesh.vertices()[b]);
        let tau = [pb[0] - pa[0], pb[1] - pa[1]];
        let nu = [tau[1], -tau[0]];
        let rule = quad.edge_rule_for(pa, pb, &base);
        for (&s, &w) in rule.points.iter().zip(&rule.weights) {
            let v = q(t, [pa[0] + s * tau[0], pa[1] + s * tau[1]]);
            let flux = v[0] * nu[0] + v[1] * nu[1];
            for j in 0..per_edge {
                coeffs[e * per_edge + j] += w * flux * legendre01(j, s);
            }
        }
    }
    let element = &space.element;
    if element.num_interior() > 0 {
        for t in 0..mesh.num_triangles() {
            let tri = mesh.triangle_points(t);
            let map = ElementMap::new(tri);
            let rule = quad.rule_for(tri);
            let globals = dofs.element(t);
            for (local, dof) in element.dofs().iter().enumerate() {
                let FluxDof::Interior(i) = *dof else { continue };
                let mut m = 0.0;
                for k in 0..rule.len() {
                    let p = rule.ref_point(k);
                    let v = map.piola_pullback(q(t, map.map(p)));
                    let wv = element.interior_weight(i, p);
                    m += rule.weights[k] * (v[0] * wv[0] + v[1] * wv[1]);
                }
                coeffs[globals[local]] = m;
            }
        }
    }
    FluxField { coeffs }
}

/// Stiffness matrix `(sigma grad phi_i, grad phi_j)` over the free nodes.
fn stiffness(
    mesh: &Mesh,
    space: &ScalarSpace,
    sigma: &(dyn Fn(Point) -> f64 + Sync),
    quad: &ElementQuadrature,
    execution: Execution,
) -> Result<(SparseMatrix, Vec<Vec<f64>>)> {
    let sd = &space.dofs;
    let nfree = sd.num_free();
    let mut rows = vec![Vec::new(); nfree];
    for t in 0..mesh.num_triangles() {
        let idx: Vec<usize> = sd
            .element(t)
            .iter()
            .filter_map(|&d| sd.free_index(d))
            .collect();
        for &i in &idx {
            rows[i].extend_from_slice(&idx);
        }
    }
    let mut k = SparseMatrix::from_pattern(nfree, rows);
    let basis = LocalBasis::new(quad, None, Some(&space.element));
    let n = space.element.dim();
    let elements: Vec<usize> = (0..mesh.num_triangles()).collect();
    let locals = execution.map(&elements, |&t| {
        let mut loc = vec![0.0; n * n];
        let mut bad = None;
        basis.visit(mesh.triangle_points(t), &[], |pd| {
            let s = sigma(pd.x);
            if !(s > 0.0) {
                bad = Some(Error::NonPositiveCoefficient {
                    value: s,
                    x: pd.x[0],
                    y: pd.x[1],
                });
            }
            for a in 0..n {
                for b in 0..n {
                    loc[a * n + b] +=
                        pd.w * s * (pd.grad[a][0] * pd.grad[b][0] + pd.grad[a][1] * pd.grad[b][1]);
                }
            }
        });
        match bad {
            Some(e) => Err(e),
            None => Ok(loc),
        }
    });
    let mut out = Vec::with_capacity(locals.len());
    for (t, loc) in locals.into_iter().enumerate() {
        let loc = loc?;
        let g = sd.element(t);
        for a in 0..n {
            let Some(i) = sd.free_index(g[a]) else {
                continue;
            };
            for b in 0..n {
                if let Some(j) = sd.free_index(g[b]) {
                    k.add(i, j, loc[a * n + b]);
                }
            }
        }
        out.push(loc);
    }
    Ok((k, out))
}

/// `Pi_V u`: `(sigma grad Pi_V u, grad v) = (sigma grad u, grad v)` for all
/// free `v`, with the nodal values of `u` on Dirichlet nodes.
#[allow(clippy::too_many_arguments)]
pub fn elliptic_project(
    u: impl Fn(Point) -> f64,
    grad_u: impl Fn(Point) -> [f64; 2] + Sync,
    mesh: &Mesh,
    space: &ScalarSpace,
    sigma: &(dyn Fn(Point) -> f64 + Sync),
    quad: &ElementQuadrature,
    solver: &SolverOptions,
    execution: Execution,
) -> Result<(ScalarField, SolveReport)> {
    let sd = &space.dofs;
    if sd.num_free() == 0 {
        return Err(Error::DegenerateSpace(format!(
            "P{} has no free degrees of freedom on this mesh",
            space.element.order()
        )));
    }
    let (k, locals) = stiffness(mesh, space, sigma, quad, execution)?;
    let lifting: Vec<f64> = (0..sd.num_dofs())
        .map(|d| if sd.is_fixed(d) { u(sd.coord(d)) } else { 0.0 })
        .collect();
    let basis = LocalBasis::new(quad, None, Some(&space.element));
    let n = space.element.dim();
    let elements: Vec<usize> = (0..mesh.num_triangles()).collect();
    let loads = execution.map(&elements, |&t| {
        let mut b = vec![0.0; n];
        basis.visit(mesh.triangle_points(t), &[], |pd| {
            let (s, g) = (sigma(pd.x), grad_u(pd.x));
            for a in 0..n {
                b[a] += pd.w * s * (g[0] * pd.grad[a][0] + g[1] * pd.grad[a][1]);
            }
        });
        b
    });
    let mut rhs = vec![0.0; sd.num_free()];
    for (t, b) in loads.into_iter().enumerate() {
        let g = sd.element(t);
        for a in 0..n {
            let Some(i) = sd.free_index(g[a]) else {
                continue;
            };
            rhs[i] += b[a];
            for c in 0..n {
                if sd.is_fixed(g[c]) {
                    rhs[i] -= locals[t][a * n + c] * lifting[g[c]];
                }
            }
        }
    }
    let (x, report) = solve_spd_with(&k, &rhs, solver)?;
    let mut coeffs = lifting;
    for d in 0..sd.num_dofs() {
        if let Some(i) = sd.free_index(d) {
            coeffs[d] = x[i];
        }
    }
    Ok((ScalarField { coeffs }, report))
}
