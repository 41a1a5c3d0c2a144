use crate::error::{Error, Result};
use crate::mesh::{BoundaryTag, Mesh, Point};

use super::geometry::ElementMap;
use super::hdiv::{FluxDof, FluxElement};
use super::lagrange::{NodeKind, ScalarElement};

/// Global numbering of Lagrange nodes.
///
/// Nodes on Dirichlet edges are fixed and excluded from the free numbering.
/// Global order: vertices, then `m - 1` nodes per edge along the global edge
/// direction, then interior nodes element by element.
#[derive(Clone, Debug)]
pub struct ScalarDofMap {
    order: usize,
    dim: usize,
    num_dofs: usize,
    elem_dofs: Vec<usize>,
    coords: Vec<Point>,
    fixed: Vec<bool>,
    free: Vec<Option<usize>>,
    num_free: usize,
}

impl ScalarDofMap {
    pub fn new(mesh: &Mesh, element: &ScalarElement) -> ScalarDofMap {
        let m = element.order();
        let nv = mesh.num_vertices();
        let ne = mesh.num_edges();
        let per_edge = m - 1;
        let per_tri = element.num_interior();
        let num_dofs = nv + per_edge * ne + per_tri * mesh.num_triangles();
        let dim = element.dim();

        let mut coords = vec![[0.0; 2]; num_dofs];
        coords[..nv].copy_from_slice(mesh.vertices());
        for (e, &[a, b]) in mesh.edges().iter().enumerate() {
            let (pa, pb) = (mesh.vertices()[a], mesh.vertices()[b]);
            for j in 0..per_edge {
                let s = (j + 1) as f64 / m as f64;
                coords[nv + e * per_edge + j] =
                    [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])];
            }
        }

        let mut elem_dofs = Vec::with_capacity(dim * mesh.num_triangles());
        for (t, tri) in mesh.triangles().iter().enumerate() {
            let edges = mesh.tri_edges(t);
            let signs = mesh.tri_signs(t);
            let map = ElementMap::new(mesh.triangle_points(t));
            for (local, kind) in element.kinds().iter().enumerate() {
                let g = match *kind {
                    NodeKind::Vertex(i) => tri[i],
                    NodeKind::Edge { edge, pos } => {
                        let pos = if signs[edge] > 0 {
                            pos
                        } else {
                            per_edge - 1 - pos
                        };
                        nv + edges[edge] * per_edge + pos
                    }
                    NodeKind::Interior(j) => {
                        let g = nv + per_edge * ne + t * per_tri + j;
                        coords[g] = map.map(element.nodes()[local]);
                        g
                    }
                };
                elem_dofs.push(g);
            }
        }

        let mut fixed = vec![false; num_dofs];
        for e in mesh.boundary_edges() {
            if mesh.boundary_tag(e) != Some(BoundaryTag::Dirichlet) {
                continue;
            }
            let [a, b] = mesh.edges()[e];
            fixed[a] = true;
            fixed[b] = true;
            for j in 0..per_edge {
                fixed[nv + e * per_edge + j] = true;
            }
        }
        let mut num_free = 0;
        let free = fixed
            .iter()
            .map(|&f| {
                (!f).then(|| {
                    num_free += 1;
                    num_free - 1
                })
            })
            .collect();

        ScalarDofMap {
            order: m,
            dim,
            num_dofs,
            elem_dofs,
            coords,
            fixed,
            free,
            num_free,
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn num_dofs(&self) -> usize {
        self.num_dofs
    }

    pub fn num_free(&self) -> usize {
        self.num_free
    }

    /// Global node indices of element `t`, in local basis order.
    pub fn element(&self, t: usize) -> &[usize] {
        &self.elem_dofs[t * self.dim..(t + 1) * self.dim]
    }

    pub fn coord(&self, dof: usize) -> Point {
        self.coords[dof]
    }

    pub fn is_fixed(&self, dof: usize) -> bool {
        self.fixed[dof]
    }

    pub fn free_index(&self, dof: usize) -> Option<usize> {
        self.free[dof]
    }
}

/// Global numbering of RT/BDM degrees of freedom.
///
/// Edge moment `j` of edge `e` is dof `e (k + 1) + j`, measured with the
/// global normal and the global edge direction; interior moments follow,
/// element by element. When an element traverses an edge against its global
/// direction both the normal and the parameter flip, so the local moment `j`
/// equals `(-1)^(j + 1)` times the global one.
#[derive(Clone, Debug)]
pub struct FluxDofMap {
    dim: usize,
    per_edge: usize,
    num_dofs: usize,
    elem_dofs: Vec<usize>,
    elem_signs: Vec<f64>,
    constrained: Vec<bool>,
    free: Vec<Option<usize>>,
    num_free: usize,
}

impl FluxDofMap {
    pub fn new(mesh: &Mesh, element: &FluxElement) -> FluxDofMap {
        let per_edge = element.dofs_per_edge();
        let per_tri = element.num_interior();
        let ne = mesh.num_edges();
        let num_dofs = per_edge * ne + per_tri * mesh.num_triangles();
        let dim = element.dim();
        let mut elem_dofs = Vec::with_capacity(dim * mesh.num_triangles());
        let mut elem_signs = Vec::with_capacity(dim * mesh.num_triangles());
        for t in 0..mesh.num_triangles() {
            let edges = mesh.tri_edges(t);
            let signs = mesh.tri_signs(t);
            for dof in element.dofs() {
                match *dof {
                    FluxDof::Edge { edge, moment } => {
                        elem_dofs.push(edges[edge] * per_edge + moment);
                        let s = if signs[edge] > 0 || moment % 2 == 1 {
                            1.0
                        } else {
                            -1.0
                        };
                        elem_signs.push(s);
                    }
                    FluxDof::Interior(i) => {
                        elem_dofs.push(per_edge * ne + t * per_tri + i);
                        elem_signs.push(1.0);
                    }
                }
            }
        }
        let mut constrained = vec![false; num_dofs];
        for e in mesh.boundary_edges() {
            if mesh.boundary_tag(e) == Some(BoundaryTag::Neumann) {
                for j in 0..per_edge {
                    constrained[e * per_edge + j] = true;
                }
            }
        }
        let mut num_free = 0;
        let free = constrained
            .iter()
            .map(|&c| {
                (!c).then(|| {
                    num_free += 1;
                    num_free - 1
                })
            })
            .collect();
        FluxDofMap {
            dim,
            per_edge,
            num_dofs,
            elem_dofs,
            elem_signs,
            constrained,
            free,
            num_free,
        }
    }

    pub fn num_dofs(&self) -> usize {
        self.num_dofs
    }

    pub fn num_free(&self) -> usize {
        self.num_free
    }

    pub fn dofs_per_edge(&self) -> usize {
        self.per_edge
    }

    pub fn element(&self, t: usize) -> &[usize] {
        &self.elem_dofs[t * self.dim..(t + 1) * self.dim]
    }

    /// Factors relating global to local coefficients of element `t`.
    pub fn signs(&self, t: usize) -> &[f64] {
        &self.elem_signs[t * self.dim..(t + 1) * self.dim]
    }

    /// Whether the dof is a normal moment on a Neumann edge (forced to zero).
    pub fn is_constrained(&self, dof: usize) -> bool {
        self.constrained[dof]
    }

    pub fn free_index(&self, dof: usize) -> Option<usize> {
        self.free[dof]
    }
}

pub(crate) fn require_free(map: &ScalarDofMap) -> Result<()> {
    if map.num_free() == 0 {
        return Err(Error::DegenerateSpace(format!(
            "P{} has no free degrees of freedom on this mesh",
            map.order()
        )));
    }
    Ok(())
}
