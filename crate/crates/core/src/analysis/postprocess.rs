//! Element-by-element reconstruction `u*_h` in `P_(m+1)`: find
//! `(u*, lambda)` in `P_(m+1)(T) x P_0(T)` with
//!
//! ```text
//! (sigma grad u*, grad v)_T + (lambda, v)_T = (q_h, grad v)_T
//! (u*, 1)_T                                 = (u_h, 1)_T
//! ```

use nalgebra::{DMatrix, DVector};

use crate::assembly::Execution;
use crate::element::LocalBasis;
use crate::error::{Error, Result};
use crate::field::{FluxField, ScalarField};
use crate::mesh::{Mesh, Point};
use crate::quadrature::ElementQuadrature;
use crate::spaces::{ElementMap, FluxSpace, ScalarElement, ScalarSpace};

/// Discontinuous Lagrange field, coefficients stored element by element.
#[derive(Clone, Debug)]
pub struct PostProcessed {
    pub element: ScalarElement,
    pub coeffs: Vec<f64>,
}

impl PostProcessed {
    pub fn order(&self) -> usize {
        self.element.order()
    }

    pub fn local(&self, t: usize) -> &[f64] {
        let n = self.element.dim();
        &self.coeffs[t * n..(t + 1) * n]
    }

    /// Value and gradient at reference point `p` of element `t`.
    pub fn eval(&self, mesh: &Mesh, t: usize, p: [f64; 2]) -> (f64, [f64; 2]) {
        let map = ElementMap::new(mesh.triangle_points(t));
        let (v, g) = self.element.eval(p);
        let c = self.local(t);
        let mut val = 0.0;
        let mut grad = [0.0; 2];
        for a in 0..c.len() {
            val += c[a] * v[a];
            let ga = map.grad(g[a]);
            grad[0] += c[a] * ga[0];
            grad[1] += c[a] * ga[1];
        }
        (val, grad)
    }
}

#[allow(clippy::too_many_arguments)]
pub fn postprocess(
    mesh: &Mesh,
    flux: &FluxSpace,
    scalar: &ScalarSpace,
    q_h: &FluxField,
    u_h: &ScalarField,
    sigma: &(dyn Fn(Point) -> f64 + Sync),
    quad: &ElementQuadrature,
    execution: Execution,
) -> Result<PostProcessed> {
    let element = ScalarElement::new(scalar.element.order() + 1);
    let source = LocalBasis::new(quad, Some(&flux.element), Some(&scalar.element));
    let target = LocalBasis::new(quad, None, Some(&element));
    let n = element.dim();
    let elements: Vec<usize> = (0..mesh.num_triangles()).collect();
    let locals = execution.map(&elements, |&t| {
        let tri = mesh.triangle_points(t);
        let cq = q_h.local(flux, t);
        let cu = u_h.local(scalar, t);
        let mut data = Vec::new();
        source.visit(tri, flux.dofs.signs(t), |pd| {
            let mut q = [0.0; 2];
            for (c, v) in cq.iter().zip(pd.flux) {
                q[0] += c * v[0];
                q[1] += c * v[1];
            }
            let u: f64 = cu.iter().zip(pd.scalar).map(|(c, v)| c * v).sum();
            data.push((q, u));
        });
        let mut a = DMatrix::<f64>::zeros(n + 1, n + 1);
        let mut b = DVector::<f64>::zeros(n + 1);
        let mut k = 0;
        target.visit(tri, &[], |pd| {
            let (q, u) = data[k];
            k += 1;
            let s = sigma(pd.x);
            for i in 0..n {
                let gi = pd.grad[i];
                for j in 0..n {
                    a[(i, j)] += pd.w * s * (gi[0] * pd.grad[j][0] + gi[1] * pd.grad[j][1]);
                }
                a[(i, n)] += pd.w * pd.scalar[i];
                a[(n, i)] += pd.w * pd.scalar[i];
                b[i] += pd.w * (q[0] * gi[0] + q[1] * gi[1]);
            }
            b[n] += pd.w * u;
        });
        let x = a
            .lu()
            .solve(&b)
            .ok_or(Error::SingularLocalSystem { element: t })?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularLocalSystem { element: t });
        }
        Ok(x.as_slice()[..n].to_vec())
    });
    let mut coeffs = Vec::with_capacity(n * elements.len());
    for l in locals {
        coeffs.extend(l?);
    }
    Ok(PostProcessed { element, coeffs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::projections::hdiv_interpolate;
    use crate::spaces::FluxFamily;

    #[test]
    fn reproduces_higher_order_polynomial() {
        // u in P2, so grad u lies in BDM1 and u itself in the P3 target
        let mesh = Mesh::structured(2).unwrap();
        let u = |x: Point| 0.3 + x[0] * x[1] - x[0] * x[0];
        let gu = |x: Point| [x[1] - 2.0 * x[0], x[0]];
        let scalar = ScalarSpace::unconstrained(&mesh, 2);
        let flux = FluxSpace::new(&mesh, FluxFamily::BDM, 1);
        let quad = ElementQuadrature::new(8, None).unwrap();
        let q_h = hdiv_interpolate(gu, &mesh, &flux, &quad);
        let u_h = ScalarField::interpolate(&scalar, u);
        let post = postprocess(
            &mesh,
            &flux,
            &scalar,
            &q_h,
            &u_h,
            &|_| 1.0,
            &quad,
            Execution::Parallel,
        )
        .unwrap();
        assert_eq!(post.order(), 3);
        assert_eq!(post.element.dim() + 1, 11);
        for t in 0..mesh.num_triangles() {
            let map = ElementMap::new(mesh.triangle_points(t));
            for p in [[0.2, 0.2], [0.6, 0.1], [0.0, 1.0]] {
                let (v, g) = post.eval(&mesh, t, p);
                let x = map.map(p);
                assert!((v - u(x)).abs() < 1e-10);
                assert!((g[0] - gu(x)[0]).abs() < 1e-10 && (g[1] - gu(x)[1]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn preserves_element_means() {
        let mesh = Mesh::structured(3).unwrap();
        let scalar = ScalarSpace::new(&mesh, 1).unwrap();
        let flux = FluxSpace::new(&mesh, FluxFamily::RT, 0);
        let quad = ElementQuadrature::new(6, None).unwrap();
        let u_h = ScalarField::interpolate(&scalar, |x| (x[0] + 2.0 * x[1]).sin());
        let q_h = hdiv_interpolate(|x| [x[1].exp(), x[0] * x[0]], &mesh, &flux, &quad);
        let sigma = |x: Point| 1.0 + x[0] * x[0];
        let post = postprocess(
            &mesh,
            &flux,
            &scalar,
            &q_h,
            &u_h,
            &sigma,
            &quad,
            Execution::Sequential,
        )
        .unwrap();
        assert_eq!(post.element.dim() + 1, 7);
        for t in 0..mesh.num_triangles() {
            let tri = mesh.triangle_points(t);
            let map = ElementMap::new(tri);
            let d = quad.standard().integrate(tri, |x| {
                let r = map.inverse(x);
                post.eval(&mesh, t, r).0 - u_h.eval(&mesh, &scalar, t, r).0
            });
            assert!(d.abs() <= 1e-12, "{d}");
        }
    }
}
