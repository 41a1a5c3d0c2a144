//! Physical basis values at the quadrature points of one element.

use std::borrow::Cow;

use crate::mesh::Point;
use crate::quadrature::{to_physical, ElementQuadrature, TriangleRule};
use crate::spaces::{ElementMap, FluxElement, FluxTable, ScalarElement, ScalarTable};

/// Basis data at one quadrature point. `w` already includes `|det J|`.
pub struct PointData<'b> {
    pub x: Point,
    pub w: f64,
    pub flux: &'b [[f64; 2]],
    pub div: &'b [f64],
    pub scalar: &'b [f64],
    pub grad: &'b [[f64; 2]],
}

/// Maps reference flux (Piola, with global orientation factors) and scalar
/// bases onto elements. Tables for the standard rule are built once; graded
/// rules near a singular line are tabulated on the fly.
pub struct LocalBasis<'a> {
    quad: &'a ElementQuadrature,
    flux: Option<&'a FluxElement>,
    scalar: Option<&'a ScalarElement>,
    ftab: Option<FluxTable>,
    stab: Option<ScalarTable>,
}

impl<'a> LocalBasis<'a> {
    pub fn new(
        quad: &'a ElementQuadrature,
        flux: Option<&'a FluxElement>,
        scalar: Option<&'a ScalarElement>,
    ) -> Self {
        let pts: Vec<[f64; 2]> = (0..quad.standard().len())
            .map(|q| quad.standard().ref_point(q))
            .collect();
        LocalBasis {
            quad,
            flux,
            scalar,
            ftab: flux.map(|f| f.tabulate(&pts)),
            stab: scalar.map(|s| s.tabulate(&pts)),
        }
    }

    pub fn flux_dim(&self) -> usize {
        self.flux.map_or(0, |f| f.dim())
    }

    pub fn scalar_dim(&self) -> usize {
        self.scalar.map_or(0, |s| s.dim())
    }

    pub fn rule_for(&self, tri: [Point; 3]) -> Cow<'a, TriangleRule> {
        self.quad.rule_for(tri)
    }

    /// Calls `f` at every quadrature point of the triangle. `flux_signs`
    /// scales the flux basis (empty when there is no flux element).
    pub fn visit(&self, tri: [Point; 3], flux_signs: &[f64], mut f: impl FnMut(&PointData)) {
        let map = ElementMap::new(tri);
        let rule = self.quad.rule_for(tri);
        let tabulated = matches!(rule, Cow::Borrowed(_));
        let (nf, ns) = (self.flux_dim(), self.scalar_dim());
        let mut fv = vec![[0.0; 2]; nf];
        let mut fd = vec![0.0; nf];
        let mut sv = vec![0.0; ns];
        let mut sg = vec![[0.0; 2]; ns];
        let det = map.det.abs();
        for q in 0..rule.len() {
            let p = rule.ref_point(q);
            if let Some(fe) = self.flux {
                let (rv, rd) = if tabulated {
                    let t = self.ftab.as_ref().unwrap();
                    (Cow::Borrowed(t.values(q)), Cow::Borrowed(t.divs(q)))
                } else {
                    let (v, d) = fe.eval(p);
                    (Cow::Owned(v), Cow::Owned(d))
                };
                for i in 0..nf {
                    let (v, d) = map.piola(rv[i], rd[i]);
                    let s = flux_signs[i];
                    fv[i] = [s * v[0], s * v[1]];
                    fd[i] = s * d;
                }
            }
            if let Some(se) = self.scalar {
                if tabulated {
                    let t = self.stab.as_ref().unwrap();
                    sv.copy_from_slice(t.values(q));
                    for (g, r) in sg.iter_mut().zip(t.grads(q)) {
                        *g = map.grad(*r);
                    }
                } else {
                    se.eval_into(p, &mut sv, &mut sg);
                    for g in sg.iter_mut() {
                        *g = map.grad(*g);
                    }
                }
            }
            f(&PointData {
                x: to_physical(tri, rule.points[q]),
                w: rule.weights[q] * det,
                flux: &fv,
                div: &fd,
                scalar: &sv,
                grad: &sg,
            });
        }
    }
}
