//! Raviart-Thomas and Brezzi-Douglas-Marini elements on the reference triangle.
//!
//! Degrees of freedom, in local order:
//! * for each local edge `i` and `j = 0..=k`: `int_e v.nu L_j(t) dt`, where
//!   `t` runs counterclockwise along the edge, `nu` is the outward normal
//!   scaled by the edge length and `L_j` is the shifted Legendre polynomial;
//! * interior moments `int_T v.p`, with `p` in `[P_{k-1}]^2` for `RT_k` and in
//!   `[P_{k-2}]^2 + (-y, x) P~_{k-2}` for `BDM_k`.
//!
//! The basis is obtained by inverting the matrix of these functionals applied
//! to a monomial spanning set of the local space.

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::poly::{eval_monomial, homogeneous, legendre01, monomials};
use crate::quadrature::{edge_rule, triangle_rule};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FluxFamily {
    RT,
    BDM,
}

impl fmt::Display for FluxFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FluxFamily::RT => f.write_str("RT"),
            FluxFamily::BDM => f.write_str("BDM"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FluxDof {
    Edge { edge: usize, moment: usize },
    Interior(usize),
}

/// A vector polynomial `(px, py)` stored by monomial coefficients.
#[derive(Clone, Debug)]
struct VecPoly {
    x: Vec<f64>,
    y: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct FluxElement {
    family: FluxFamily,
    order: usize,
    monomials: Vec<(u32, u32)>,
    basis: Vec<VecPoly>,
    dofs: Vec<FluxDof>,
    // interior moment weights, over `weight_monomials`
    interior_weights: Vec<VecPoly>,
    weight_monomials: Vec<(u32, u32)>,
}

const REF_VERTICES: [[f64; 2]; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

/// Start point and scaled outward normal of reference edge `i`.
pub fn reference_edge(i: usize) -> ([f64; 2], [f64; 2], [f64; 2]) {
    let a = REF_VERTICES[(i + 1) % 3];
    let b = REF_VERTICES[(i + 2) % 3];
    let tau = [b[0] - a[0], b[1] - a[1]];
    (a, b, [tau[1], -tau[0]])
}

impl FluxElement {
    pub fn new(family: FluxFamily, order: usize) -> FluxElement {
        if family == FluxFamily::BDM {
            assert!(order >= 1, "BDM order must be at least 1");
        }
        let k = order;
        let poly_degree = match family {
            FluxFamily::RT => k + 1,
            FluxFamily::BDM => k,
        };
        let monos = monomials(poly_degree);
        let nm = monos.len();
        let index = |e: (u32, u32)| monos.iter().position(|&m| m == e).unwrap();
        let unit = |j: usize| {
            let mut v = vec![0.0; nm];
            v[j] = 1.0;
            v
        };

        let mut span = Vec::new();
        for m in monomials(k) {
            span.push(VecPoly {
                x: unit(index(m)),
                y: vec![0.0; nm],
            });
            span.push(VecPoly {
                x: vec![0.0; nm],
                y: unit(index(m)),
            });
        }
        if family == FluxFamily::RT {
            for (a, b) in homogeneous(k) {
                span.push(VecPoly {
                    x: unit(index((a + 1, b))),
                    y: unit(index((a, b + 1))),
                });
            }
        }

        // interior moment weights, stored over monomials(k + 1)
        let weight_monos = monomials(k + 1);
        let nw = weight_monos.len();
        let wunit = |e: (u32, u32)| {
            let mut v = vec![0.0; nw];
            v[index_in(&weight_monos, e)] = 1.0;
            v
        };
        let zero = vec![0.0; nw];
        let mut interior_weights = Vec::new();
        let vector_block = match family {
            FluxFamily::RT if k >= 1 => Some(k - 1),
            FluxFamily::BDM if k >= 2 => Some(k - 2),
            _ => None,
        };
        if let Some(d) = vector_block {
            for m in monomials(d) {
                interior_weights.push(VecPoly {
                    x: wunit(m),
                    y: zero.clone(),
                });
                interior_weights.push(VecPoly {
                    x: zero.clone(),
                    y: wunit(m),
                });
            }
            if family == FluxFamily::BDM {
                for (a, b) in homogeneous(d) {
                    let mut x = zero.clone();
                    x[index_in(&weight_monos, (a, b + 1))] = -1.0;
                    interior_weights.push(VecPoly {
                        x,
                        y: wunit((a + 1, b)),
                    });
                }
            }
        }

        let mut dofs = Vec::new();
        for edge in 0..3 {
            for moment in 0..=k {
                dofs.push(FluxDof::Edge { edge, moment });
            }
        }
        for i in 0..interior_weights.len() {
            dofs.push(FluxDof::Interior(i));
        }
        let n = span.len();
        assert_eq!(dofs.len(), n, "dof count must match local dimension");

        let probe = Probe::new(poly_degree, k);
        let dual = DMatrix::from_fn(n, n, |i, j| {
            probe.apply(&dofs[i], &interior_weights, &weight_monos, |p| {
                eval_vec(&monos, &span[j], p).0
            })
        });
        let inv = dual.try_inverse().expect("flux dual matrix is invertible");
        let basis = (0..n)
            .map(|a| {
                let mut v = VecPoly {
                    x: vec![0.0; nm],
                    y: vec![0.0; nm],
                };
                for (j, s) in span.iter().enumerate() {
                    let c = inv[(j, a)];
                    for t in 0..nm {
                        v.x[t] += c * s.x[t];
                        v.y[t] += c * s.y[t];
                    }
                }
                v
            })
            .collect();

        FluxElement {
            family,
            order,
            monomials: monos,
            basis,
            dofs,
            interior_weights,
            weight_monomials: weight_monos,
        }
    }

    pub fn family(&self) -> FluxFamily {
        self.family
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Polynomial degree of the local space.
    pub fn degree(&self) -> usize {
        match self.family {
            FluxFamily::RT => self.order + 1,
            FluxFamily::BDM => self.order,
        }
    }

    /// Degree of the divergence space.
    pub fn div_degree(&self) -> usize {
        match self.family {
            FluxFamily::RT => self.order,
            FluxFamily::BDM => self.order - 1,
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn dofs_per_edge(&self) -> usize {
        self.order + 1
    }

    pub fn num_interior(&self) -> usize {
        self.interior_weights.len()
    }

    pub fn dofs(&self) -> &[FluxDof] {
        &self.dofs
    }

    /// Interior moment weight `i` at the reference point `p`.
    pub fn interior_weight(&self, i: usize, p: [f64; 2]) -> [f64; 2] {
        eval_vec(&self.weight_monomials, &self.interior_weights[i], p).0
    }

    /// Reference basis values and divergences at `p`.
    pub fn eval_into(&self, p: [f64; 2], values: &mut [[f64; 2]], divs: &mut [f64]) {
        let nm = self.monomials.len();
        let mut mv = [0.0; 21];
        let mut mg = [[0.0; 2]; 21];
        for (j, &m) in self.monomials.iter().enumerate() {
            let (v, g) = eval_monomial(m, p);
            mv[j] = v;
            mg[j] = g;
        }
        for (a, b) in self.basis.iter().enumerate() {
            let mut v = [0.0; 2];
            let mut d = 0.0;
            for j in 0..nm {
                v[0] += b.x[j] * mv[j];
                v[1] += b.y[j] * mv[j];
                d += b.x[j] * mg[j][0] + b.y[j] * mg[j][1];
            }
            values[a] = v;
            divs[a] = d;
        }
    }

    pub fn eval(&self, p: [f64; 2]) -> (Vec<[f64; 2]>, Vec<f64>) {
        let mut v = vec![[0.0; 2]; self.dim()];
        let mut d = vec![0.0; self.dim()];
        self.eval_into(p, &mut v, &mut d);
        (v, d)
    }

    pub fn tabulate(&self, points: &[[f64; 2]]) -> FluxTable {
        let n = self.dim();
        let mut values = vec![[0.0; 2]; n * points.len()];
        let mut divs = vec![0.0; n * points.len()];
        for (q, p) in points.iter().enumerate() {
            self.eval_into(
                *p,
                &mut values[q * n..(q + 1) * n],
                &mut divs[q * n..(q + 1) * n],
            );
        }
        FluxTable {
            dim: n,
            values,
            divs,
        }
    }

    /// Applies local functional `i` to a reference vector field.
    pub fn apply_functional(&self, i: usize, v: impl Fn([f64; 2]) -> [f64; 2]) -> f64 {
        let probe = Probe::new(self.degree() + 4, self.order + 4);
        probe.apply(
            &self.dofs[i],
            &self.interior_weights,
            &self.weight_monomials,
            v,
        )
    }
}

fn index_in(monos: &[(u32, u32)], e: (u32, u32)) -> usize {
    monos.iter().position(|&m| m == e).unwrap()
}

fn eval_vec(monos: &[(u32, u32)], v: &VecPoly, p: [f64; 2]) -> ([f64; 2], f64) {
    let mut out = [0.0; 2];
    let mut div = 0.0;
    for (j, &m) in monos.iter().enumerate() {
        let (val, g) = eval_monomial(m, p);
        let (cx, cy) = (
            v.x.get(j).copied().unwrap_or(0.0),
            v.y.get(j).copied().unwrap_or(0.0),
        );
        out[0] += cx * val;
        out[1] += cy * val;
        div += cx * g[0] + cy * g[1];
    }
    (out, div)
}

/// Quadrature used to apply functionals to polynomial fields exactly.
struct Probe {
    edge: crate::quadrature::EdgeRule,
    tri: crate::quadrature::TriangleRule,
}

impl Probe {
    fn new(field_degree: usize, k: usize) -> Probe {
        Probe {
            edge: edge_rule(field_degree + k + 1).unwrap(),
            tri: triangle_rule(field_degree + k + 1).unwrap(),
        }
    }

    fn apply(
        &self,
        dof: &FluxDof,
        weights: &[VecPoly],
        weight_monos: &[(u32, u32)],
        v: impl Fn([f64; 2]) -> [f64; 2],
    ) -> f64 {
        match *dof {
            FluxDof::Edge { edge, moment } => {
                let (a, b, nu) = reference_edge(edge);
                self.edge
                    .points
                    .iter()
                    .zip(&self.edge.weights)
                    .map(|(&t, w)| {
                        let p = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
                        let val = v(p);
                        w * (val[0] * nu[0] + val[1] * nu[1]) * legendre01(moment, t)
                    })
                    .sum()
            }
            FluxDof::Interior(i) => (0..self.tri.len())
                .map(|q| {
                    let p = self.tri.ref_point(q);
                    let val = v(p);
                    let wv = eval_vec(weight_monos, &weights[i], p).0;
                    self.tri.weights[q] * (val[0] * wv[0] + val[1] * wv[1])
                })
                .sum(),
        }
    }
}

/// Basis values and reference divergences at a list of points.
#[derive(Clone, Debug)]
pub struct FluxTable {
    pub dim: usize,
    pub values: Vec<[f64; 2]>,
    pub divs: Vec<f64>,
}

impl FluxTable {
    pub fn values(&self, q: usize) -> &[[f64; 2]] {
        &self.values[q * self.dim..(q + 1) * self.dim]
    }

    pub fn divs(&self, q: usize) -> &[f64] {
        &self.divs[q * self.dim..(q + 1) * self.dim]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PAIRS: [(FluxFamily, usize); 5] = [
        (FluxFamily::RT, 0),
        (FluxFamily::RT, 1),
        (FluxFamily::RT, 2),
        (FluxFamily::BDM, 1),
        (FluxFamily::BDM, 2),
    ];

    #[test]
    fn dimensions() {
        for k in 0..=2 {
            assert_eq!(FluxElement::new(FluxFamily::RT, k).dim(), (k + 1) * (k + 3));
        }
        for k in 1..=2 {
            assert_eq!(
                FluxElement::new(FluxFamily::BDM, k).dim(),
                (k + 1) * (k + 2)
            );
        }
        assert_eq!(FluxElement::new(FluxFamily::BDM, 1).dim(), 6);
    }

    #[test]
    fn duality() {
        for (fam, k) in PAIRS {
            let e = FluxElement::new(fam, k);
            for j in 0..e.dim() {
                for i in 0..e.dim() {
                    let got = e.apply_functional(i, |p| e.eval(p).0[j]);
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!(
                        (got - expect).abs() < 1e-12,
                        "{fam}{k}: l_{i}(phi_{j}) = {got}"
                    );
                }
            }
        }
    }

    #[test]
    fn rt0_normal_flux() {
        // RT0 basis i has unit flux through edge i and none through the others;
        // the flux through a straight edge is constant along it
        let e = FluxElement::new(FluxFamily::RT, 0);
        for i in 0..3 {
            for edge in 0..3 {
                let (a, b, nu) = reference_edge(edge);
                for t in [0.1, 0.5, 0.9] {
                    let p = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
                    let v = e.eval(p).0[i];
                    let flux = v[0] * nu[0] + v[1] * nu[1];
                    let expect = if i == edge { 1.0 } else { 0.0 };
                    assert!((flux - expect).abs() < 1e-13);
                }
            }
            let d0 = e.eval([0.1, 0.2]).1[i];
            let d1 = e.eval([0.6, 0.3]).1[i];
            assert!((d0 - d1).abs() < 1e-13);
            // div integrates to the total outward flux, 1, over area 1/2
            assert!((d0 - 2.0).abs() < 1e-13);
        }
    }

    #[test]
    fn divergence_degree() {
        // div of each basis function is a polynomial of the stated degree:
        // its L2 projection onto P_l reproduces it
        let rule = triangle_rule(12).unwrap();
        for (fam, k) in PAIRS {
            let e = FluxElement::new(fam, k);
            let l = e.div_degree();
            let monos = monomials(l);
            let nm = monos.len();
            let mass = DMatrix::<f64>::from_fn(nm, nm, |i, j| {
                (0..rule.len())
                    .map(|q| {
                        let p = rule.ref_point(q);
                        rule.weights[q]
                            * eval_monomial(monos[i], p).0
                            * eval_monomial(monos[j], p).0
                    })
                    .sum()
            });
            let chol = mass.cholesky().unwrap();
            for a in 0..e.dim() {
                let rhs = nalgebra::DVector::from_fn(nm, |i, _| {
                    (0..rule.len())
                        .map(|q| {
                            let p = rule.ref_point(q);
                            rule.weights[q] * e.eval(p).1[a] * eval_monomial(monos[i], p).0
                        })
                        .sum()
                });
                let c = chol.solve(&rhs);
                let resid: f64 = (0..rule.len())
                    .map(|q| {
                        let p = rule.ref_point(q);
                        let proj: f64 = (0..nm).map(|i| c[i] * eval_monomial(monos[i], p).0).sum();
                        rule.weights[q] * (proj - e.eval(p).1[a]).powi(2)
                    })
                    .sum::<f64>()
                    .sqrt();
                let norm: f64 = (0..rule.len())
                    .map(|q| rule.weights[q] * e.eval(rule.ref_point(q)).1[a].powi(2))
                    .sum::<f64>()
                    .sqrt();
                assert!(
                    resid <= 1e-12 * norm.max(1.0),
                    "{fam}{k} basis {a}: {resid} vs {norm}"
                );
            }
        }
    }

    #[test]
    fn bdm1_against_direct_construction() {
        // BDM1 edge-moment matrix over [P1]^2 solved directly must reproduce
        // the element's basis
        let e = FluxElement::new(FluxFamily::BDM, 1);
        let span: [fn([f64; 2]) -> [f64; 2]; 6] = [
            |_| [1.0, 0.0],
            |p| [p[0], 0.0],
            |p| [p[1], 0.0],
            |_| [0.0, 1.0],
            |p| [0.0, p[0]],
            |p| [0.0, p[1]],
        ];
        let m = DMatrix::from_fn(6, 6, |i, j| e.apply_functional(i, span[j]));
        let inv = m.try_inverse().unwrap();
        for a in 0..6 {
            for p in [[0.2, 0.3], [0.7, 0.1]] {
                let mut direct = [0.0; 2];
                for j in 0..6 {
                    let s = span[j](p);
                    direct[0] += inv[(j, a)] * s[0];
                    direct[1] += inv[(j, a)] * s[1];
                }
                let v = e.eval(p).0[a];
                assert!((v[0] - direct[0]).abs() < 1e-12 && (v[1] - direct[1]).abs() < 1e-12);
            }
        }
    }
}
