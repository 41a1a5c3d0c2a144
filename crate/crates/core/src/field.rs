//! Finite element functions: global coefficient vectors over a space.

use crate::mesh::{Mesh, Point};
use crate::spaces::{ElementMap, FluxSpace, ScalarSpace};

/// Coefficients of a continuous Lagrange function, one per global node
/// (fixed boundary nodes included).
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    pub coeffs: Vec<f64>,
}

/// Coefficients of an RT/BDM function in the global moment basis.
#[derive(Clone, Debug, PartialEq)]
pub struct FluxField {
    pub coeffs: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(space: &ScalarSpace) -> ScalarField {
        ScalarField {
            coeffs: vec![0.0; space.dofs.num_dofs()],
        }
    }

    /// Nodal interpolant.
    pub fn interpolate(space: &ScalarSpace, u: impl Fn(Point) -> f64) -> ScalarField {
        ScalarField {
            coeffs: (0..space.dofs.num_dofs())
                .map(|d| u(space.dofs.coord(d)))
                .collect(),
        }
    }

    pub fn local(&self, space: &ScalarSpace, t: usize) -> Vec<f64> {
        space
            .dofs
            .element(t)
            .iter()
            .map(|&d| self.coeffs[d])
            .collect()
    }

    /// Value and gradient at reference point `p` of element `t`.
    pub fn eval(&self, mesh: &Mesh, space: &ScalarSpace, t: usize, p: [f64; 2]) -> (f64, [f64; 2]) {
        let map = ElementMap::new(mesh.triangle_points(t));
        let (v, g) = space.element.eval(p);
        let c = self.local(space, t);
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

    pub fn sub(&self, other: &ScalarField) -> ScalarField {
        ScalarField {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl FluxField {
    pub fn zeros(space: &FluxSpace) -> FluxField {
        FluxField {
            coeffs: vec![0.0; space.dofs.num_dofs()],
        }
    }

    /// Local coefficients of element `t`; orientation factors are applied by
    /// the basis, not here.
    pub fn local(&self, space: &FluxSpace, t: usize) -> Vec<f64> {
        space
            .dofs
            .element(t)
            .iter()
            .map(|&d| self.coeffs[d])
            .collect()
    }

    /// Value and divergence at reference point `p` of element `t`.
    pub fn eval(&self, mesh: &Mesh, space: &FluxSpace, t: usize, p: [f64; 2]) -> ([f64; 2], f64) {
        let map = ElementMap::new(mesh.triangle_points(t));
        let (v, d) = space.element.eval(p);
        let c = self.local(space, t);
        let signs = space.dofs.signs(t);
        let mut val = [0.0; 2];
        let mut div = 0.0;
        for i in 0..c.len() {
            let (pv, pd) = map.piola(v[i], d[i]);
            let s = c[i] * signs[i];
            val[0] += s * pv[0];
            val[1] += s * pv[1];
            div += s * pd;
        }
        (val, div)
    }

    pub fn sub(&self, other: &FluxField) -> FluxField {
        FluxField {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}
