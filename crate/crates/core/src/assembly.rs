//! Assembly of the least-squares system
//!
//! ```text
//! a(q,u; p,v) = (sigma^-1 q, p) - (q, grad v) - (grad u, p) + (sigma grad u, grad v)
//!             + (div q, div p) + w^2 (div q, eta v) + w^2 (eta u, div p) + w^4 (eta^2 u, v)
//! l(p,v)      = (g, p) - (sigma g, grad v) - (f, div p) - w^2 (f, eta v)
//! ```
//!
//! over the free degrees of freedom, flux block first.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::element::{LocalBasis, PointData};
use crate::error::{Error, Result};
use crate::field::{FluxField, ScalarField};
use crate::linalg::{solve_spd_with, SolveReport, SolverOptions, SparseMatrix};
use crate::mesh::Mesh;
use crate::problems::{Problem, ScalarFn};
use crate::quadrature::ElementQuadrature;
use crate::spaces::{FluxSpace, ScalarSpace};

const CHUNK: usize = 2048;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Execution {
    #[default]
    Parallel,
    Sequential,
}

impl Execution {
    /// Maps `f` over `items` in order, in parallel when requested.
    pub fn map<T: Sync, R: Send>(self, items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
        match self {
            Execution::Parallel => items.par_iter().map(f).collect(),
            Execution::Sequential => items.iter().map(f).collect(),
        }
    }
}

/// Default quadrature degree for assembly: `2 * max polynomial degree + 2`.
pub fn default_degree(flux: &FluxSpace, scalar: &ScalarSpace) -> usize {
    2 * flux.element.degree().max(scalar.element.order()) + 2
}

#[derive(Clone, Default)]
pub struct AssemblyOptions {
    /// Quadrature degree; [`default_degree`] when absent.
    pub degree: Option<usize>,
    pub execution: Execution,
    /// Values imposed on Dirichlet nodes by nodal interpolation; zero when
    /// absent.
    pub dirichlet: Option<ScalarFn>,
}

/// Maps the unknowns of the block system to global coefficients.
#[derive(Clone, Debug)]
pub struct BlockLayout {
    pub flux_free: Vec<usize>,
    pub scalar_free: Vec<usize>,
    pub flux_dofs: usize,
    pub scalar_dofs: usize,
}

impl BlockLayout {
    fn new(flux: &FluxSpace, scalar: &ScalarSpace) -> BlockLayout {
        let fd = &flux.dofs;
        let sd = &scalar.dofs;
        BlockLayout {
            flux_free: (0..fd.num_dofs())
                .filter(|&d| fd.free_index(d).is_some())
                .collect(),
            scalar_free: (0..sd.num_dofs())
                .filter(|&d| sd.free_index(d).is_some())
                .collect(),
            flux_dofs: fd.num_dofs(),
            scalar_dofs: sd.num_dofs(),
        }
    }

    pub fn num_flux(&self) -> usize {
        self.flux_free.len()
    }

    pub fn num_scalar(&self) -> usize {
        self.scalar_free.len()
    }

    pub fn dim(&self) -> usize {
        self.num_flux() + self.num_scalar()
    }
}

pub struct SparseSystem {
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
    pub layout: BlockLayout,
    /// Scalar coefficients on fixed nodes (zero on free ones).
    pub lifting: Vec<f64>,
}

impl SparseSystem {
    /// Global fields from a solution vector of the block system.
    pub fn expand(&self, x: &[f64]) -> (FluxField, ScalarField) {
        let l = &self.layout;
        let mut q = vec![0.0; l.flux_dofs];
        for (i, &d) in l.flux_free.iter().enumerate() {
            q[d] = x[i];
        }
        let mut u = self.lifting.clone();
        for (i, &d) in l.scalar_free.iter().enumerate() {
            u[d] = x[l.num_flux() + i];
        }
        (FluxField { coeffs: q }, ScalarField { coeffs: u })
    }

    /// Block vector holding the free coefficients of the given fields.
    pub fn restrict(&self, q: &FluxField, u: &ScalarField) -> Vec<f64> {
        let l = &self.layout;
        l.flux_free
            .iter()
            .map(|&d| q.coeffs[d])
            .chain(l.scalar_free.iter().map(|&d| u.coeffs[d]))
            .collect()
    }

    pub fn solve(&self, opts: &SolverOptions) -> Result<(FluxField, ScalarField, SolveReport)> {
        let (x, report) = solve_spd_with(&self.matrix, &self.rhs, opts)?;
        let (q, u) = self.expand(&x);
        Ok((q, u, report))
    }
}

/// Element matrix and vector, flux dofs first.
struct Local {
    mat: Vec<f64>,
    rhs: Vec<f64>,
}

/// Pointwise data needed by the element kernels.
struct Coefficients {
    sigma: f64,
    eta: f64,
    f: f64,
    g: [f64; 2],
}

fn coefficients(problem: &Problem, pd: &PointData) -> Result<Coefficients> {
    let x = pd.x;
    let sigma = (problem.sigma)(x);
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::NonPositiveCoefficient {
            value: sigma,
            x: x[0],
            y: x[1],
        });
    }
    let eta = (problem.eta)(x);
    let f = (problem.f)(x);
    let g = problem.g.as_ref().map_or([0.0; 2], |g| g(x));
    if !eta.is_finite() || !f.is_finite() || !g[0].is_finite() || !g[1].is_finite() {
        return Err(Error::NonFinite("problem data"));
    }
    Ok(Coefficients { sigma, eta, f, g })
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn element_system(
    basis: &LocalBasis,
    mesh: &Mesh,
    flux: &FluxSpace,
    problem: &Problem,
    t: usize,
) -> Result<Local> {
    let (nf, ns) = (basis.flux_dim(), basis.scalar_dim());
    let n = nf + ns;
    let w2 = problem.omega * problem.omega;
    let mut mat = vec![0.0; n * n];
    let mut rhs = vec![0.0; n];
    let mut err = None;
    basis.visit(mesh.triangle_points(t), flux.dofs.signs(t), |pd| {
        if err.is_some() {
            return;
        }
        let c = match coefficients(problem, pd) {
            Ok(c) => c,
            Err(e) => {
                err = Some(e);
                return;
            }
        };
        let w = pd.w;
        let we = w2 * c.eta;
        for i in 0..nf {
            let (pi, di) = (pd.flux[i], pd.div[i]);
            let row = &mut mat[i * n..(i + 1) * n];
            for j in 0..nf {
                row[j] += w * (dot(pi, pd.flux[j]) / c.sigma + di * pd.div[j]);
            }
            for b in 0..ns {
                row[nf + b] += w * (-dot(pd.grad[b], pi) + we * pd.scalar[b] * di);
            }
            rhs[i] += w * (dot(c.g, pi) - c.f * di);
        }
        for a in 0..ns {
            let (va, ga) = (pd.scalar[a], pd.grad[a]);
            let row = &mut mat[(nf + a) * n..(nf + a + 1) * n];
            for j in 0..nf {
                row[j] += w * (-dot(pd.flux[j], ga) + we * pd.div[j] * va);
            }
            for b in 0..ns {
                row[nf + b] += w * (c.sigma * dot(pd.grad[b], ga) + we * we * pd.scalar[b] * va);
            }
            rhs[nf + a] += w * (-c.sigma * dot(c.g, ga) - we * c.f * va);
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(Local { mat, rhs }),
    }
}

/// Block indices of the element's dofs; `None` for fixed or constrained ones.
fn element_indices(
    flux: &FluxSpace,
    scalar: &ScalarSpace,
    nf_free: usize,
    t: usize,
) -> Vec<Option<usize>> {
    let fd = &flux.dofs;
    let sd = &scalar.dofs;
    fd.element(t)
        .iter()
        .map(|&d| fd.free_index(d))
        .chain(
            sd.element(t)
                .iter()
                .map(|&d| sd.free_index(d).map(|i| nf_free + i)),
        )
        .collect()
}

pub fn assemble(
    mesh: &Mesh,
    flux: &FluxSpace,
    scalar: &ScalarSpace,
    problem: &Problem,
    degree: usize,
) -> Result<SparseSystem> {
    let opts = AssemblyOptions {
        degree: Some(degree),
        ..Default::default()
    };
    assemble_with(mesh, flux, scalar, problem, &opts)
}

pub fn assemble_with(
    mesh: &Mesh,
    flux: &FluxSpace,
    scalar: &ScalarSpace,
    problem: &Problem,
    opts: &AssemblyOptions,
) -> Result<SparseSystem> {
    if scalar.dofs.num_free() == 0 {
        return Err(Error::DegenerateSpace(format!(
            "P{} has no free degrees of freedom on this mesh",
            scalar.element.order()
        )));
    }
    let layout = BlockLayout::new(flux, scalar);
    let degree = opts.degree.unwrap_or_else(|| default_degree(flux, scalar));
    let quad = ElementQuadrature::new(degree, problem.singular_line)?;
    let basis = LocalBasis::new(&quad, Some(&flux.element), Some(&scalar.element));
    let nf = layout.num_flux();
    let nt = mesh.num_triangles();

    let mut rows = vec![Vec::new(); layout.dim()];
    for t in 0..nt {
        let idx: Vec<usize> = element_indices(flux, scalar, nf, t)
            .into_iter()
            .flatten()
            .collect();
        for &i in &idx {
            rows[i].extend_from_slice(&idx);
        }
    }
    let mut matrix = SparseMatrix::from_pattern(layout.dim(), rows);
    let mut rhs = vec![0.0; layout.dim()];

    let mut lifting = vec![0.0; layout.scalar_dofs];
    if let Some(g) = &opts.dirichlet {
        for (d, l) in lifting.iter_mut().enumerate() {
            if scalar.dofs.is_fixed(d) {
                *l = g(scalar.dofs.coord(d));
            }
        }
    }

    let elements: Vec<usize> = (0..nt).collect();
    for chunk in elements.chunks(CHUNK) {
        let locals = opts
            .execution
            .map(chunk, |&t| element_system(&basis, mesh, flux, problem, t));
        for (&t, local) in chunk.iter().zip(locals) {
            let local = local?;
            let idx = element_indices(flux, scalar, nf, t);
            let sdofs = scalar.dofs.element(t);
            let n = idx.len();
            // fixed values of the element's dofs (flux constraints are zero)
            let fixed: Vec<f64> = (0..n)
                .map(|j| {
                    if j < flux.element.dim() {
                        0.0
                    } else {
                        lifting[sdofs[j - flux.element.dim()]]
                    }
                })
                .collect();
            for i in 0..n {
                let Some(gi) = idx[i] else { continue };
                let row = &local.mat[i * n..(i + 1) * n];
                for j in 0..n {
                    match idx[j] {
                        Some(gj) => matrix.add(gi, gj, row[j]),
                        None => rhs[gi] -= row[j] * fixed[j],
                    }
                }
                rhs[gi] += local.rhs[i];
            }
        }
    }
    if rhs.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("assembled right-hand side"));
    }
    Ok(SparseSystem {
        matrix,
        rhs,
        layout,
        lifting,
    })
}

/// `a((q, u); phi_i)` for every free basis function `phi_i`, with `(q, u)`
/// the exact solution, integrated with the assembly quadrature.
pub fn exact_form(
    mesh: &Mesh,
    flux: &FluxSpace,
    scalar: &ScalarSpace,
    problem: &Problem,
    opts: &AssemblyOptions,
) -> Result<Vec<f64>> {
    let ex = problem.exact()?;
    let layout = BlockLayout::new(flux, scalar);
    let degree = opts.degree.unwrap_or_else(|| default_degree(flux, scalar));
    let quad = ElementQuadrature::new(degree, problem.singular_line)?;
    let basis = LocalBasis::new(&quad, Some(&flux.element), Some(&scalar.element));
    let nf = layout.num_flux();
    let w2 = problem.omega * problem.omega;
    let mut out = vec![0.0; layout.dim()];
    let elements: Vec<usize> = (0..mesh.num_triangles()).collect();
    let locals = opts.execution.map(&elements, |&t| {
        let (lf, ls) = (basis.flux_dim(), basis.scalar_dim());
        let mut loc = vec![0.0; lf + ls];
        basis.visit(mesh.triangle_points(t), flux.dofs.signs(t), |pd| {
            let x = pd.x;
            let (s, eta) = ((problem.sigma)(x), (problem.eta)(x));
            let (q, dq, u, gu) = ((ex.q)(x), (ex.div_q)(x), (ex.u)(x), (ex.grad_u)(x));
            let r1 = [q[0] / s - gu[0], q[1] / s - gu[1]];
            let r2 = dq + w2 * eta * u;
            for i in 0..lf {
                loc[i] += pd.w * (dot(r1, pd.flux[i]) + r2 * pd.div[i]);
            }
            for a in 0..ls {
                loc[lf + a] += pd.w * (-s * dot(r1, pd.grad[a]) + r2 * w2 * eta * pd.scalar[a]);
            }
        });
        loc
    });
    for (t, loc) in locals.into_iter().enumerate() {
        for (i, gi) in element_indices(flux, scalar, nf, t).into_iter().enumerate() {
            if let Some(gi) = gi {
                out[gi] += loc[i];
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::linalg::eigen_extrema_dense;
    use crate::problems::{builtin, Exact};
    use crate::spaces::FluxFamily;

    fn spaces(mesh: &Mesh, fam: FluxFamily, k: usize, m: usize) -> (FluxSpace, ScalarSpace) {
        (
            FluxSpace::new(mesh, fam, k),
            ScalarSpace::new(mesh, m).unwrap(),
        )
    }

    fn zero_problem() -> Problem {
        let mut p = builtin("smooth1").unwrap();
        p.omega = 0.0;
        p.f = Arc::new(|_| 0.0);
        p.exact = None;
        p
    }

    #[test]
    fn zero_data_gives_zero_rhs() {
        let mesh = Mesh::structured(3).unwrap();
        let (f, s) = spaces(&mesh, FluxFamily::RT, 1, 2);
        let sys = assemble(&mesh, &f, &s, &zero_problem(), 8).unwrap();
        assert!(sys.rhs.iter().all(|&v| v == 0.0));
        assert_eq!(sys.matrix.dim(), f.dofs.num_free() + s.dofs.num_free());
    }

    #[test]
    fn symmetric_with_variable_sigma() {
        let mesh = Mesh::structured(4).unwrap();
        let (f, s) = spaces(&mesh, FluxFamily::RT, 1, 2);
        let p = builtin("smooth-var").unwrap();
        let sys = assemble(&mesh, &f, &s, &p, default_degree(&f, &s)).unwrap();
        assert!(sys.matrix.symmetry_error() <= 1e-12);
    }

    #[test]
    fn positive_definite_small() {
        let mesh = Mesh::structured(2).unwrap();
        for (fam, k, m) in [
            (FluxFamily::RT, 0, 1),
            (FluxFamily::BDM, 1, 2),
            (FluxFamily::RT, 2, 3),
        ] {
            let (f, s) = spaces(&mesh, fam, k, m);
            let sys = assemble(
                &mesh,
                &f,
                &s,
                &builtin("smooth1").unwrap(),
                default_degree(&f, &s),
            )
            .unwrap();
            let (lo, hi) = eigen_extrema_dense(&sys.matrix).unwrap();
            assert!(lo > 0.0 && hi.is_finite(), "{fam}{k}/P{m}: {lo} {hi}");
        }
    }

    #[test]
    fn sequential_equals_parallel() {
        let mesh = Mesh::structured(6).unwrap();
        let (f, s) = spaces(&mesh, FluxFamily::BDM, 2, 2);
        let p = builtin("smooth-var").unwrap();
        let run = |execution| {
            let opts = AssemblyOptions {
                execution,
                ..Default::default()
            };
            assemble_with(&mesh, &f, &s, &p, &opts).unwrap()
        };
        let (a, b) = (run(Execution::Parallel), run(Execution::Sequential));
        assert_eq!(a.matrix, b.matrix);
        assert_eq!(a.rhs, b.rhs);
    }

    #[test]
    fn rejects_nonpositive_sigma() {
        let mesh = Mesh::structured(2).unwrap();
        let (f, s) = spaces(&mesh, FluxFamily::RT, 0, 1);
        let mut p = builtin("smooth1").unwrap();
        p.sigma = Arc::new(|x| x[0]);
        assert!(matches!(
            assemble(&mesh, &f, &s, &p, 4),
            Err(Error::NonPositiveCoefficient { .. })
        ));
    }

    #[test]
    fn degenerate_scalar_space() {
        let mesh = Mesh::structured(1).unwrap();
        let f = FluxSpace::new(&mesh, FluxFamily::RT, 0);
        let s = ScalarSpace::unconstrained(&mesh, 1);
        assert!(matches!(
            assemble(&mesh, &f, &s, &builtin("smooth1").unwrap(), 4),
            Err(Error::DegenerateSpace(_))
        ));
    }

    #[test]
    fn exact_form_matches_rhs() {
        // a((q,u); phi) = l(phi) pointwise when the data are consistent
        let mesh = Mesh::structured(4).unwrap();
        let (f, s) = spaces(&mesh, FluxFamily::RT, 1, 1);
        let p = builtin("smooth-var").unwrap();
        let opts = AssemblyOptions::default();
        let sys = assemble_with(&mesh, &f, &s, &p, &opts).unwrap();
        let e = exact_form(&mesh, &f, &s, &p, &opts).unwrap();
        let scale = sys.rhs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (a, b) in e.iter().zip(&sys.rhs) {
            assert!((a - b).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn reproduces_discrete_solution_with_lifting() {
        // u in P2 and q = grad u in BDM1, nonzero boundary values
        let exact = Exact {
            u: Arc::new(|x| 1.0 + x[0] - 2.0 * x[1] + x[0] * x[1] + 0.5 * x[0] * x[0]),
            grad_u: Arc::new(|x| [1.0 + x[1] + x[0], -2.0 + x[0]]),
            q: Arc::new(|x| [1.0 + x[1] + x[0], -2.0 + x[0]]),
            div_q: Arc::new(|_| 1.0),
        };
        let p = Problem::from_exact(
            "patch",
            Arc::new(|_| 1.0),
            Arc::new(|_| 1.0),
            1.0,
            exact.clone(),
        );
        let mesh = Mesh::structured(3).unwrap();
        let (f, s) = spaces(&mesh, FluxFamily::BDM, 1, 2);
        let opts = AssemblyOptions {
            dirichlet: Some(exact.u.clone()),
            ..Default::default()
        };
        let sys = assemble_with(&mesh, &f, &s, &p, &opts).unwrap();
        let (qh, uh, _) = sys.solve(&SolverOptions::with_tol(1e-13)).unwrap();
        let ui = ScalarField::interpolate(&s, |x| (exact.u)(x));
        for (a, b) in uh.coeffs.iter().zip(&ui.coeffs) {
            assert!((a - b).abs() < 1e-9);
        }
        for t in 0..mesh.num_triangles() {
            let x = mesh.triangle_points(t);
            let c = [
                (x[0][0] + x[1][0] + x[2][0]) / 3.0,
                (x[0][1] + x[1][1] + x[2][1]) / 3.0,
            ];
            let (v, d) = qh.eval(&mesh, &f, t, [1.0 / 3.0, 1.0 / 3.0]);
            let e = (exact.q)(c);
            assert!(
                (v[0] - e[0]).abs() < 1e-9 && (v[1] - e[1]).abs() < 1e-9 && (d - 1.0).abs() < 1e-9
            );
        }
    }
}
