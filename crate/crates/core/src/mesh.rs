//! Conforming triangulations with globally oriented edges.
//!
//! Local edge `i` of a triangle is the edge opposite local vertex `i`,
//! traversed counterclockwise: edge 0 is `v1 -> v2`, edge 1 is `v2 -> v0`,
//! edge 2 is `v0 -> v1`. Global edges run from the lower to the higher vertex
//! index, and their normal is the tangent rotated clockwise. The orientation
//! sign of a local edge is `+1` when the counterclockwise traversal agrees with
//! the global direction, in which case the outward normal equals the global
//! normal.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundaryTag {
    Dirichlet,
    Neumann,
}

#[derive(Clone, Debug)]
pub struct Mesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    edges: Vec<[usize; 2]>,
    tri_edges: Vec<[usize; 3]>,
    tri_signs: Vec<[i8; 3]>,
    edge_tris: Vec<[Option<usize>; 2]>,
    boundary: Vec<Option<BoundaryTag>>,
    h: f64,
}

/// Vertex pair of local edge `i`, in counterclockwise traversal order.
#[inline]
pub fn local_edge(tri: &[usize; 3], i: usize) -> (usize, usize) {
    (tri[(i + 1) % 3], tri[(i + 2) % 3])
}

fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
}

fn dist(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

impl Mesh {
    /// Builds a mesh from raw vertex and triangle lists.
    ///
    /// Clockwise triangles are reordered. Every boundary edge is tagged
    /// Dirichlet.
    pub fn from_parts(vertices: Vec<Point>, mut triangles: Vec<[usize; 3]>) -> Result<Mesh> {
        let nv = vertices.len();
        if triangles.is_empty() {
            return Err(Error::InvalidMesh("mesh has no triangles".into()));
        }
        let mut used = vec![false; nv];
        for (t, tri) in triangles.iter_mut().enumerate() {
            for &v in tri.iter() {
                if v >= nv {
                    return Err(Error::InvalidMesh(format!(
                        "triangle {t} references vertex {v} but the mesh has {nv} vertices"
                    )));
                }
                used[v] = true;
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::InvalidMesh(format!("triangle {t} repeats a vertex")));
            }
            let area = signed_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
            if area == 0.0 || !area.is_finite() {
                return Err(Error::InvalidMesh(format!("triangle {t} has zero area")));
            }
            if area < 0.0 {
                tri.swap(1, 2);
            }
        }
        if let Some(v) = used.iter().position(|u| !u) {
            return Err(Error::InvalidMesh(format!(
                "vertex {v} is not referenced by any triangle"
            )));
        }

        let mut lookup: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges = Vec::new();
        let mut edge_tris: Vec<[Option<usize>; 2]> = Vec::new();
        let mut tri_edges = Vec::with_capacity(triangles.len());
        let mut tri_signs = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            let mut te = [0usize; 3];
            let mut ts = [0i8; 3];
            for i in 0..3 {
                let (a, b) = local_edge(tri, i);
                let key = (a.min(b), a.max(b));
                let e = *lookup.entry(key).or_insert_with(|| {
                    edges.push([key.0, key.1]);
                    edge_tris.push([None, None]);
                    edges.len() - 1
                });
                let slot = &mut edge_tris[e];
                if slot[0].is_none() {
                    slot[0] = Some(t);
                } else if slot[1].is_none() {
                    slot[1] = Some(t);
                } else {
                    return Err(Error::InvalidMesh(format!(
                        "edge ({}, {}) is shared by more than two triangles",
                        key.0, key.1
                    )));
                }
                te[i] = e;
                ts[i] = if a < b { 1 } else { -1 };
            }
            tri_edges.push(te);
            tri_signs.push(ts);
        }

        // Interior edges must be traversed in opposite directions by their
        // two triangles, otherwise the triangles overlap.
        for (e, pair) in edge_tris.iter().enumerate() {
            if let [Some(t0), Some(t1)] = *pair {
                let s0 = sign_of(&tri_edges[t0], &tri_signs[t0], e);
                let s1 = sign_of(&tri_edges[t1], &tri_signs[t1], e);
                if s0 * s1 != -1 {
                    return Err(Error::InvalidMesh(format!(
                        "triangles {t0} and {t1} traverse edge {e} in the same direction"
                    )));
                }
            }
        }

        let euler = nv as i64 - edges.len() as i64 + triangles.len() as i64;
        if euler != 1 {
            return Err(Error::InvalidMesh(format!(
                "Euler relation V - E + T = 1 violated (got {euler}); the mesh must be a simply connected disk"
            )));
        }

        let boundary = edge_tris
            .iter()
            .map(|p| p[1].is_none().then_some(BoundaryTag::Dirichlet))
            .collect();
        let h = triangles
            .iter()
            .map(|tri| {
                (0..3)
                    .map(|i| {
                        let (a, b) = local_edge(tri, i);
                        dist(vertices[a], vertices[b])
                    })
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);

        Ok(Mesh {
            vertices,
            triangles,
            edges,
            tri_edges,
            tri_signs,
            edge_tris,
            boundary,
            h,
        })
    }

    /// Uniform `n x n` grid of squares on `(-1,1)^2`, each split along the
    /// diagonal from its lower-left to its upper-right corner.
    pub fn structured(n: usize) -> Result<Mesh> {
        if n == 0 {
            return Err(Error::InvalidMesh("structured mesh needs n >= 1".into()));
        }
        let step = 2.0 / n as f64;
        let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
        for j in 0..=n {
            for i in 0..=n {
                vertices.push([-1.0 + i as f64 * step, -1.0 + j as f64 * step]);
            }
        }
        let id = |i: usize, j: usize| j * (n + 1) + i;
        let mut triangles = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let ll = id(i, j);
                let lr = id(i + 1, j);
                let ur = id(i + 1, j + 1);
                let ul = id(i, j + 1);
                triangles.push([ll, lr, ur]);
                triangles.push([ll, ur, ul]);
            }
        }
        Mesh::from_parts(vertices, triangles)
    }

    /// Splits every triangle into four congruent children through the edge
    /// midpoints. Boundary tags are inherited.
    pub fn refine_uniform(&self) -> Mesh {
        let nv = self.vertices.len();
        let mut vertices = self.vertices.clone();
        vertices.extend(self.edges.iter().map(|&[a, b]| {
            let (pa, pb) = (self.vertices[a], self.vertices[b]);
            [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]
        }));
        let mut triangles = Vec::with_capacity(4 * self.triangles.len());
        for (t, tri) in self.triangles.iter().enumerate() {
            let m = self.tri_edges[t].map(|e| nv + e);
            triangles.push([tri[0], m[2], m[1]]);
            triangles.push([m[2], tri[1], m[0]]);
            triangles.push([m[1], m[0], tri[2]]);
            triangles.push([m[0], m[1], m[2]]);
        }
        let mut fine = Mesh::from_parts(vertices, triangles)
            .expect("uniform refinement of a valid mesh is valid");
        for e in 0..fine.edges.len() {
            if fine.boundary[e].is_none() {
                continue;
            }
            let [a, b] = fine.edges[e];
            // a boundary child edge joins an old vertex to the midpoint of its parent
            let (old, mid) = if a < nv { (a, b) } else { (b, a) };
            debug_assert!(old < nv && mid >= nv);
            let parent = mid - nv;
            debug_assert!(self.edges[parent].contains(&old));
            fine.boundary[e] = self.boundary[parent];
        }
        fine
    }

    /// Reads the plain-text triangle-list format: a header `V E T`, then `V`
    /// lines `x y`, then `T` lines `v0 v1 v2` (0-based).
    pub fn load(path: impl AsRef<Path>) -> Result<Mesh> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Mesh::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Mesh> {
        let perr = |line: usize, message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

        let (hl, header) = lines
            .next()
            .ok_or_else(|| perr(1, "empty mesh file".into()))?;
        let counts: Vec<usize> = header
            .split_whitespace()
            .map(|s| s.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| perr(hl, format!("bad header `{header}`: {e}")))?;
        let [nv, ne, nt] = counts[..] else {
            return Err(perr(hl, format!("header must be `V E T`, got `{header}`")));
        };

        let mut vertices = Vec::with_capacity(nv);
        for k in 0..nv {
            let (ln, l) = lines
                .next()
                .ok_or_else(|| perr(hl, format!("expected {nv} vertices, found {k}")))?;
            let xy: Vec<f64> = l
                .split_whitespace()
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| perr(ln, format!("bad vertex `{l}`: {e}")))?;
            let [x, y] = xy[..] else {
                return Err(perr(ln, format!("vertex line must be `x y`, got `{l}`")));
            };
            vertices.push([x, y]);
        }
        let mut triangles = Vec::with_capacity(nt);
        for k in 0..nt {
            let (ln, l) = lines
                .next()
                .ok_or_else(|| perr(hl, format!("expected {nt} triangles, found {k}")))?;
            let ids: Vec<usize> = l
                .split_whitespace()
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| perr(ln, format!("bad triangle `{l}`: {e}")))?;
            let [a, b, c] = ids[..] else {
                return Err(perr(
                    ln,
                    format!("triangle line must be `v0 v1 v2`, got `{l}`"),
                ));
            };
            triangles.push([a, b, c]);
        }
        if let Some((ln, l)) = lines.next() {
            return Err(perr(ln, format!("unexpected trailing content `{l}`")));
        }
        let mesh = Mesh::from_parts(vertices, triangles)?;
        if mesh.num_edges() != ne {
            return Err(Error::InvalidMesh(format!(
                "header declares {ne} edges but the triangles define {}",
                mesh.num_edges()
            )));
        }
        Ok(mesh)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "{} {} {}\n",
            self.vertices.len(),
            self.edges.len(),
            self.triangles.len()
        );
        for v in &self.vertices {
            let _ = writeln!(s, "{:?} {:?}", v[0], v[1]);
        }
        for t in &self.triangles {
            let _ = writeln!(s, "{} {} {}", t[0], t[1], t[2]);
        }
        s
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    /// Retags boundary edges; `tag` receives the edge endpoints.
    pub fn set_boundary_tags(&mut self, mut tag: impl FnMut(Point, Point) -> BoundaryTag) {
        for e in 0..self.edges.len() {
            if self.boundary[e].is_some() {
                let [a, b] = self.edges[e];
                self.boundary[e] = Some(tag(self.vertices[a], self.vertices[b]));
            }
        }
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Global edge indices of the local edges of triangle `t`.
    pub fn tri_edges(&self, t: usize) -> [usize; 3] {
        self.tri_edges[t]
    }

    /// Orientation signs of the local edges of triangle `t`.
    pub fn tri_signs(&self, t: usize) -> [i8; 3] {
        self.tri_signs[t]
    }

    /// The (one or two) triangles incident to edge `e`.
    pub fn edge_triangles(&self, e: usize) -> [Option<usize>; 2] {
        self.edge_tris[e]
    }

    pub fn boundary_tag(&self, e: usize) -> Option<BoundaryTag> {
        self.boundary[e]
    }

    pub fn is_boundary_edge(&self, e: usize) -> bool {
        self.boundary[e].is_some()
    }

    pub fn boundary_edges(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.edges.len()).filter(|&e| self.boundary[e].is_some())
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        self.triangles[t].map(|v| self.vertices[v])
    }

    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        signed_area(a, b, c)
    }

    /// Longest edge length over all triangles.
    pub fn h(&self) -> f64 {
        self.h
    }
}

fn sign_of(edges: &[usize; 3], signs: &[i8; 3], e: usize) -> i8 {
    let i = edges.iter().position(|&x| x == e).unwrap();
    signs[i]
}
