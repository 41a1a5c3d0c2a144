use crate::mesh::Point;

/// Affine map from the reference triangle onto a physical triangle,
/// `x = origin + J x_ref`.
#[derive(Clone, Copy, Debug)]
pub struct ElementMap {
    pub origin: Point,
    pub jac: [[f64; 2]; 2],
    pub det: f64,
    inv: [[f64; 2]; 2],
}

impl ElementMap {
    pub fn new(tri: [Point; 3]) -> ElementMap {
        let [a, b, c] = tri;
        let jac = [[b[0] - a[0], c[0] - a[0]], [b[1] - a[1], c[1] - a[1]]];
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        let inv = [
            [jac[1][1] / det, -jac[0][1] / det],
            [-jac[1][0] / det, jac[0][0] / det],
        ];
        ElementMap {
            origin: a,
            jac,
            det,
            inv,
        }
    }

    pub fn identity() -> ElementMap {
        ElementMap::new([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    }

    pub fn map(&self, p: [f64; 2]) -> Point {
        let j = &self.jac;
        [
            self.origin[0] + j[0][0] * p[0] + j[0][1] * p[1],
            self.origin[1] + j[1][0] * p[0] + j[1][1] * p[1],
        ]
    }

    pub fn inverse(&self, x: Point) -> [f64; 2] {
        let d = [x[0] - self.origin[0], x[1] - self.origin[1]];
        [
            self.inv[0][0] * d[0] + self.inv[0][1] * d[1],
            self.inv[1][0] * d[0] + self.inv[1][1] * d[1],
        ]
    }

    /// Physical gradient `J^{-T} g` of a reference gradient.
    #[inline]
    pub fn grad(&self, g: [f64; 2]) -> [f64; 2] {
        [
            self.inv[0][0] * g[0] + self.inv[1][0] * g[1],
            self.inv[0][1] * g[0] + self.inv[1][1] * g[1],
        ]
    }

    /// Contravariant Piola transform: `v = J v_ref / det J`,
    /// `div v = div_ref v_ref / det J`.
    #[inline]
    pub fn piola(&self, v: [f64; 2], div: f64) -> ([f64; 2], f64) {
        let j = &self.jac;
        (
            [
                (j[0][0] * v[0] + j[0][1] * v[1]) / self.det,
                (j[1][0] * v[0] + j[1][1] * v[1]) / self.det,
            ],
            div / self.det,
        )
    }

    /// Inverse Piola transform: `v_ref = det J J^{-1} v`.
    pub fn piola_pullback(&self, v: [f64; 2]) -> [f64; 2] {
        [
            self.det * (self.inv[0][0] * v[0] + self.inv[0][1] * v[1]),
            self.det * (self.inv[1][0] * v[0] + self.inv[1][1] * v[1]),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::edge_rule;
    use crate::spaces::hdiv::{reference_edge, FluxElement, FluxFamily};

    #[test]
    fn identity_map() {
        let m = ElementMap::identity();
        let (v, d) = m.piola([0.3, -1.2], 2.5);
        assert_eq!(v, [0.3, -1.2]);
        assert_eq!(d, 2.5);
    }

    #[test]
    fn uniform_scaling() {
        let s = 3.0;
        let m = ElementMap::new([[0.0, 0.0], [s, 0.0], [0.0, s]]);
        assert!((m.det - s * s).abs() < 1e-14);
        let (v, d) = m.piola([1.0, 2.0], 1.0);
        assert!((v[0] - 1.0 / s).abs() < 1e-15 && (v[1] - 2.0 / s).abs() < 1e-15);
        assert!((d - 1.0 / (s * s)).abs() < 1e-15);
        let back = m.piola_pullback(v);
        assert!((back[0] - 1.0).abs() < 1e-14 && (back[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn normal_flux_is_invariant() {
        let tri = [[0.2, -0.1], [1.3, 0.4], [0.1, 0.9]];
        let m = ElementMap::new(tri);
        let e = FluxElement::new(FluxFamily::BDM, 2);
        let rule = edge_rule(8).unwrap();
        for edge in 0..3 {
            let (a, b, nu_ref) = reference_edge(edge);
            let (pa, pb) = (m.map(a), m.map(b));
            // physical outward normal scaled by the edge length
            let nu = [pb[1] - pa[1], -(pb[0] - pa[0])];
            for basis in 0..e.dim() {
                let (mut phys, mut refr) = (0.0, 0.0);
                for (t, w) in rule.points.iter().zip(&rule.weights) {
                    let p = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
                    let (vals, divs) = e.eval(p);
                    let (v, _) = m.piola(vals[basis], divs[basis]);
                    phys += w * (v[0] * nu[0] + v[1] * nu[1]);
                    refr += w * (vals[basis][0] * nu_ref[0] + vals[basis][1] * nu_ref[1]);
                }
                assert!((phys - refr).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn gradient_chain_rule() {
        let m = ElementMap::new([[0.5, 0.5], [2.0, 1.0], [1.0, 3.0]]);
        // u(x) = 2x - 3y pulled back to the reference element
        let u_ref = |p: [f64; 2]| {
            let x = m.map(p);
            2.0 * x[0] - 3.0 * x[1]
        };
        let h = 1e-6;
        let g_ref = [
            (u_ref([0.3 + h, 0.2]) - u_ref([0.3 - h, 0.2])) / (2.0 * h),
            (u_ref([0.3, 0.2 + h]) - u_ref([0.3, 0.2 - h])) / (2.0 * h),
        ];
        let g = m.grad(g_ref);
        assert!((g[0] - 2.0).abs() < 1e-8 && (g[1] + 3.0).abs() < 1e-8);
        let x = m.map([0.3, 0.2]);
        let p = m.inverse(x);
        assert!((p[0] - 0.3).abs() < 1e-14 && (p[1] - 0.2).abs() < 1e-14);
    }
}
