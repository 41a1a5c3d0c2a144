use nalgebra::DMatrix;

use super::poly::{eval_monomial, monomials};

/// Where a Lagrange node sits on the reference triangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeKind {
    Vertex(usize),
    /// `pos`-th interior node of local edge `edge`, counted along the
    /// counterclockwise traversal of that edge.
    Edge {
        edge: usize,
        pos: usize,
    },
    Interior(usize),
}

/// Nodal Lagrange element of order `m` on the reference triangle.
#[derive(Clone, Debug)]
pub struct ScalarElement {
    order: usize,
    nodes: Vec<[f64; 2]>,
    kinds: Vec<NodeKind>,
    monomials: Vec<(u32, u32)>,
    // coeffs[a * nmono + j]: coefficient of monomial j in basis function a
    coeffs: Vec<f64>,
}

const REF_VERTICES: [[f64; 2]; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

impl ScalarElement {
    pub fn new(order: usize) -> ScalarElement {
        assert!(order >= 1, "Lagrange order must be at least 1");
        let m = order;
        let mut nodes = Vec::new();
        let mut kinds = Vec::new();
        for (i, v) in REF_VERTICES.iter().enumerate() {
            nodes.push(*v);
            kinds.push(NodeKind::Vertex(i));
        }
        for e in 0..3 {
            let a = REF_VERTICES[(e + 1) % 3];
            let b = REF_VERTICES[(e + 2) % 3];
            for pos in 0..m - 1 {
                let s = (pos + 1) as f64 / m as f64;
                nodes.push([a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]);
                kinds.push(NodeKind::Edge { edge: e, pos });
            }
        }
        let mut k = 0;
        for j in 1..m {
            for i in 1..m - j {
                nodes.push([i as f64 / m as f64, j as f64 / m as f64]);
                kinds.push(NodeKind::Interior(k));
                k += 1;
            }
        }

        let monomials = monomials(m);
        let n = monomials.len();
        debug_assert_eq!(nodes.len(), n);
        let vander = DMatrix::from_fn(n, n, |i, j| eval_monomial(monomials[j], nodes[i]).0);
        let inv = vander
            .try_inverse()
            .expect("Lagrange Vandermonde matrix is invertible");
        // basis a = sum_j inv[(j, a)] x^j
        let mut coeffs = vec![0.0; n * n];
        for a in 0..n {
            for j in 0..n {
                coeffs[a * n + j] = inv[(j, a)];
            }
        }
        ScalarElement {
            order,
            nodes,
            kinds,
            monomials,
            coeffs,
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn kinds(&self) -> &[NodeKind] {
        &self.kinds
    }

    pub fn num_interior(&self) -> usize {
        (self.order - 1) * self.order.saturating_sub(2) / 2
    }

    /// Basis values and reference gradients at `p`.
    pub fn eval_into(&self, p: [f64; 2], values: &mut [f64], grads: &mut [[f64; 2]]) {
        let n = self.monomials.len();
        let mut mv = [0.0; 21];
        let mut mg = [[0.0; 2]; 21];
        for (j, &mono) in self.monomials.iter().enumerate() {
            let (v, g) = eval_monomial(mono, p);
            mv[j] = v;
            mg[j] = g;
        }
        for a in 0..self.dim() {
            let c = &self.coeffs[a * n..(a + 1) * n];
            let mut v = 0.0;
            let mut g = [0.0; 2];
            for j in 0..n {
                v += c[j] * mv[j];
                g[0] += c[j] * mg[j][0];
                g[1] += c[j] * mg[j][1];
            }
            values[a] = v;
            grads[a] = g;
        }
    }

    pub fn eval(&self, p: [f64; 2]) -> (Vec<f64>, Vec<[f64; 2]>) {
        let mut v = vec![0.0; self.dim()];
        let mut g = vec![[0.0; 2]; self.dim()];
        self.eval_into(p, &mut v, &mut g);
        (v, g)
    }

    pub fn tabulate(&self, points: &[[f64; 2]]) -> ScalarTable {
        let n = self.dim();
        let mut values = vec![0.0; n * points.len()];
        let mut grads = vec![[0.0; 2]; n * points.len()];
        for (q, p) in points.iter().enumerate() {
            self.eval_into(
                *p,
                &mut values[q * n..(q + 1) * n],
                &mut grads[q * n..(q + 1) * n],
            );
        }
        ScalarTable {
            dim: n,
            values,
            grads,
        }
    }
}

/// Basis values and reference gradients at a list of points.
#[derive(Clone, Debug)]
pub struct ScalarTable {
    pub dim: usize,
    pub values: Vec<f64>,
    pub grads: Vec<[f64; 2]>,
}

impl ScalarTable {
    pub fn values(&self, q: usize) -> &[f64] {
        &self.values[q * self.dim..(q + 1) * self.dim]
    }

    pub fn grads(&self, q: usize) -> &[[f64; 2]] {
        &self.grads[q * self.dim..(q + 1) * self.dim]
    }
}
