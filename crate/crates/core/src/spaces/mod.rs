//! Reference elements, element maps and global degree-of-freedom numbering
//! for Lagrange `P1..P3`, `RT0..RT2` and `BDM1..BDM2`.

mod dofmap;
mod geometry;
mod hdiv;
mod lagrange;
pub mod poly;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use dofmap::{FluxDofMap, ScalarDofMap};
pub use geometry::ElementMap;
pub use hdiv::{reference_edge, FluxDof, FluxElement, FluxFamily, FluxTable};
pub use lagrange::{NodeKind, ScalarElement, ScalarTable};

use crate::error::{Error, Result};
use crate::mesh::Mesh;

/// A space descriptor such as `P2`, `RT1` or `BDM2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SpaceDescriptor {
    Lagrange(usize),
    Flux(FluxFamily, usize),
}

impl FromStr for SpaceDescriptor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let parse = |prefix: &str, lo: usize, hi: usize| -> Option<usize> {
            let k: usize = t.strip_prefix(prefix)?.parse().ok()?;
            (lo..=hi).contains(&k).then_some(k)
        };
        if let Some(k) = parse("BDM", 1, 2) {
            Ok(SpaceDescriptor::Flux(FluxFamily::BDM, k))
        } else if let Some(k) = parse("RT", 0, 2) {
            Ok(SpaceDescriptor::Flux(FluxFamily::RT, k))
        } else if let Some(m) = parse("P", 1, 3) {
            Ok(SpaceDescriptor::Lagrange(m))
        } else {
            Err(Error::UnknownSpace(s.to_string()))
        }
    }
}

impl fmt::Display for SpaceDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpaceDescriptor::Lagrange(m) => write!(f, "P{m}"),
            SpaceDescriptor::Flux(fam, k) => write!(f, "{fam}{k}"),
        }
    }
}

/// Flux space and scalar space used together, e.g. `RT1/P2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ElementPair {
    pub family: FluxFamily,
    pub k: usize,
    pub m: usize,
}

impl ElementPair {
    pub fn new(family: FluxFamily, k: usize, m: usize) -> Result<ElementPair> {
        let flux = SpaceDescriptor::from_str(&format!("{family}{k}"))?;
        let scalar = SpaceDescriptor::from_str(&format!("P{m}"))?;
        debug_assert!(matches!(flux, SpaceDescriptor::Flux(..)));
        debug_assert!(matches!(scalar, SpaceDescriptor::Lagrange(_)));
        Ok(ElementPair { family, k, m })
    }

    pub fn from_descriptors(flux: &str, scalar: &str) -> Result<ElementPair> {
        match (flux.parse()?, scalar.parse()?) {
            (SpaceDescriptor::Flux(family, k), SpaceDescriptor::Lagrange(m)) => {
                Ok(ElementPair { family, k, m })
            }
            _ => Err(Error::UnsupportedPair(format!("{flux}/{scalar}"))),
        }
    }

    pub fn flux_descriptor(&self) -> SpaceDescriptor {
        SpaceDescriptor::Flux(self.family, self.k)
    }

    pub fn scalar_descriptor(&self) -> SpaceDescriptor {
        SpaceDescriptor::Lagrange(self.m)
    }

    /// Highest polynomial degree among the two local spaces.
    pub fn max_degree(&self) -> usize {
        let flux = match self.family {
            FluxFamily::RT => self.k + 1,
            FluxFamily::BDM => self.k,
        };
        flux.max(self.m)
    }
}

impl fmt::Display for ElementPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}/P{}", self.family, self.k, self.m)
    }
}

impl FromStr for ElementPair {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (flux, scalar) = s
            .split_once('/')
            .ok_or_else(|| Error::UnsupportedPair(format!("`{s}` (expected e.g. RT1/P2)")))?;
        ElementPair::from_descriptors(flux, scalar)
    }
}

impl TryFrom<String> for ElementPair {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ElementPair> for String {
    fn from(p: ElementPair) -> String {
        p.to_string()
    }
}

/// Lagrange element together with its global numbering.
#[derive(Clone, Debug)]
pub struct ScalarSpace {
    pub element: ScalarElement,
    pub dofs: ScalarDofMap,
}

impl ScalarSpace {
    /// Builds `P_m`; fails when no node is left free by the Dirichlet boundary.
    pub fn new(mesh: &Mesh, order: usize) -> Result<ScalarSpace> {
        let space = ScalarSpace::unconstrained(mesh, order);
        dofmap::require_free(&space.dofs)?;
        Ok(space)
    }

    /// Builds the space without the non-degeneracy check.
    pub fn unconstrained(mesh: &Mesh, order: usize) -> ScalarSpace {
        let element = ScalarElement::new(order);
        let dofs = ScalarDofMap::new(mesh, &element);
        ScalarSpace { element, dofs }
    }
}

/// RT or BDM element together with its global numbering.
#[derive(Clone, Debug)]
pub struct FluxSpace {
    pub element: FluxElement,
    pub dofs: FluxDofMap,
}

impl FluxSpace {
    pub fn new(mesh: &Mesh, family: FluxFamily, order: usize) -> FluxSpace {
        let element = FluxElement::new(family, order);
        let dofs = FluxDofMap::new(mesh, &element);
        FluxSpace { element, dofs }
    }
}

#[derive(Clone, Debug)]
pub enum DofMap {
    Scalar(ScalarDofMap),
    Flux(FluxDofMap),
}

impl DofMap {
    pub fn num_dofs(&self) -> usize {
        match self {
            DofMap::Scalar(d) => d.num_dofs(),
            DofMap::Flux(d) => d.num_dofs(),
        }
    }

    pub fn num_free(&self) -> usize {
        match self {
            DofMap::Scalar(d) => d.num_free(),
            DofMap::Flux(d) => d.num_free(),
        }
    }
}

pub fn build_dofmap(mesh: &Mesh, space: SpaceDescriptor) -> Result<DofMap> {
    match space {
        SpaceDescriptor::Lagrange(m) => Ok(DofMap::Scalar(ScalarSpace::new(mesh, m)?.dofs)),
        SpaceDescriptor::Flux(fam, k) => Ok(DofMap::Flux(FluxSpace::new(mesh, fam, k).dofs)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::edge_rule;
    use rand::{Rng, SeedableRng};

    #[test]
    fn descriptors() {
        assert_eq!(
            "RT0".parse::<SpaceDescriptor>().unwrap(),
            SpaceDescriptor::Flux(FluxFamily::RT, 0)
        );
        assert_eq!(
            "BDM2".parse::<SpaceDescriptor>().unwrap(),
            SpaceDescriptor::Flux(FluxFamily::BDM, 2)
        );
        assert_eq!(
            "P3".parse::<SpaceDescriptor>().unwrap(),
            SpaceDescriptor::Lagrange(3)
        );
        for bad in ["P0", "P4", "RT3", "BDM0", "Q1", ""] {
            assert!(
                matches!(bad.parse::<SpaceDescriptor>(), Err(Error::UnknownSpace(_))),
                "{bad}"
            );
        }
        let pair: ElementPair = "BDM1/P2".parse().unwrap();
        assert_eq!(pair.to_string(), "BDM1/P2");
        assert!("P1/RT0".parse::<ElementPair>().is_err());
    }

    #[test]
    fn small_counts() {
        let m1 = Mesh::structured(1).unwrap();
        let m2 = Mesh::structured(2).unwrap();
        assert_eq!(
            build_dofmap(&m1, "RT0".parse().unwrap())
                .unwrap()
                .num_dofs(),
            5
        );
        assert_eq!(
            build_dofmap(&m2, "P1".parse().unwrap()).unwrap().num_free(),
            1
        );
        assert_eq!(
            build_dofmap(&m2, "BDM1".parse().unwrap())
                .unwrap()
                .num_dofs(),
            32
        );
        assert!(matches!(
            build_dofmap(&m1, "P1".parse().unwrap()),
            Err(Error::DegenerateSpace(_))
        ));
    }

    #[test]
    fn global_count_formulas() {
        for n in [2, 3, 5] {
            let mesh = Mesh::structured(n).unwrap();
            let (e, t) = (mesh.num_edges(), mesh.num_triangles());
            let interior_vertices = (n - 1) * (n - 1);
            let interior_edges = e - 4 * n;
            for m in 1..=3 {
                let s = ScalarSpace::new(&mesh, m).unwrap();
                assert_eq!(
                    s.dofs.num_free(),
                    interior_vertices
                        + (m - 1) * interior_edges
                        + t * (m - 1) * (m.saturating_sub(2)) / 2
                );
            }
            for k in 0..=2 {
                let f = FluxSpace::new(&mesh, FluxFamily::RT, k);
                assert_eq!(f.dofs.num_dofs(), (k + 1) * e + k * (k + 1) * t);
            }
            for k in 1..=2 {
                let f = FluxSpace::new(&mesh, FluxFamily::BDM, k);
                assert_eq!(f.dofs.num_dofs(), (k + 1) * e + (k - 1) * (k + 1) * t);
            }
        }
    }

    fn eval_flux(
        space: &FluxSpace,
        mesh: &Mesh,
        coeffs: &[f64],
        t: usize,
        p: [f64; 2],
    ) -> [f64; 2] {
        let map = ElementMap::new(mesh.triangle_points(t));
        let (vals, divs) = space.element.eval(p);
        let mut v = [0.0; 2];
        for (a, (&g, &s)) in space
            .dofs
            .element(t)
            .iter()
            .zip(space.dofs.signs(t))
            .enumerate()
        {
            let (pv, _) = map.piola(vals[a], divs[a]);
            v[0] += s * coeffs[g] * pv[0];
            v[1] += s * coeffs[g] * pv[1];
        }
        v
    }

    #[test]
    fn normal_trace_continuity() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        let mesh = Mesh::structured(3).unwrap();
        let rule = edge_rule(6).unwrap();
        for (fam, k) in [
            (FluxFamily::RT, 0),
            (FluxFamily::RT, 1),
            (FluxFamily::RT, 2),
            (FluxFamily::BDM, 1),
            (FluxFamily::BDM, 2),
        ] {
            let space = FluxSpace::new(&mesh, fam, k);
            let coeffs: Vec<f64> = (0..space.dofs.num_dofs())
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect();
            for e in 0..mesh.num_edges() {
                let [Some(t0), Some(t1)] = mesh.edge_triangles(e) else {
                    continue;
                };
                let [a, b] = mesh.edges()[e];
                let (pa, pb) = (mesh.vertices()[a], mesh.vertices()[b]);
                let n = [pb[1] - pa[1], -(pb[0] - pa[0])];
                for &s in &rule.points {
                    let x = [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])];
                    let v0 = eval_flux(
                        &space,
                        &mesh,
                        &coeffs,
                        t0,
                        ElementMap::new(mesh.triangle_points(t0)).inverse(x),
                    );
                    let v1 = eval_flux(
                        &space,
                        &mesh,
                        &coeffs,
                        t1,
                        ElementMap::new(mesh.triangle_points(t1)).inverse(x),
                    );
                    let jump = (v0[0] - v1[0]) * n[0] + (v0[1] - v1[1]) * n[1];
                    assert!(jump.abs() < 1e-11, "{fam}{k} edge {e}: jump {jump}");
                }
            }
        }
    }

    #[test]
    fn scalar_continuity() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        let mesh = Mesh::structured(3).unwrap();
        for m in 1..=3 {
            let space = ScalarSpace::new(&mesh, m).unwrap();
            let coeffs: Vec<f64> = (0..space.dofs.num_dofs())
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect();
            let eval = |t: usize, x: [f64; 2]| {
                let p = ElementMap::new(mesh.triangle_points(t)).inverse(x);
                let (v, _) = space.element.eval(p);
                space
                    .dofs
                    .element(t)
                    .iter()
                    .zip(v)
                    .map(|(g, v)| coeffs[*g] * v)
                    .sum::<f64>()
            };
            for e in 0..mesh.num_edges() {
                let [Some(t0), Some(t1)] = mesh.edge_triangles(e) else {
                    continue;
                };
                let [a, b] = mesh.edges()[e];
                let (pa, pb) = (mesh.vertices()[a], mesh.vertices()[b]);
                for s in [0.13, 0.5, 0.77] {
                    let x = [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])];
                    assert!((eval(t0, x) - eval(t1, x)).abs() < 1e-12);
                }
            }
            // node coordinates agree with the element nodes they are attached to
            for t in 0..mesh.num_triangles() {
                let map = ElementMap::new(mesh.triangle_points(t));
                for (local, &g) in space.dofs.element(t).iter().enumerate() {
                    let x = map.map(space.element.nodes()[local]);
                    let c = space.dofs.coord(g);
                    assert!((x[0] - c[0]).abs() < 1e-14 && (x[1] - c[1]).abs() < 1e-14);
                }
            }
        }
    }
}
