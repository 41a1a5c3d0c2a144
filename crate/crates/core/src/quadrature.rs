//! Gauss rules on the unit interval and collapsed (Duffy) Gauss rules on the
//! reference triangle `{x, y >= 0, x + y <= 1}`.
//!
//! Triangle points are stored as barycentric triples `(l0, l1, l2)`; the
//! reference coordinates are `(l1, l2)`. Weights sum to the reference area 1/2,
//! so an integral over a physical triangle is `|det J| * sum(w * f)`.

use std::borrow::Cow;

use crate::error::{Error, Result};
use crate::mesh::Point;

pub const MAX_TRIANGLE_DEGREE: usize = 24;
pub const MAX_EDGE_DEGREE: usize = 40;

/// Exponent of the power map that grades points toward a singular line.
const GRADING_POWER: i32 = 4;

#[derive(Clone, Debug, PartialEq)]
pub struct TriangleRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EdgeRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl TriangleRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn ref_point(&self, q: usize) -> [f64; 2] {
        [self.points[q][1], self.points[q][2]]
    }

    /// Integrates `f` over the physical triangle with the given vertices.
    pub fn integrate(&self, tri: [Point; 3], f: impl Fn(Point) -> f64) -> f64 {
        let det = jacobian_det(tri);
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(l, w)| w * f(to_physical(tri, *l)))
            .sum::<f64>()
            * det.abs()
    }
}

impl EdgeRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

pub fn jacobian_det(tri: [Point; 3]) -> f64 {
    let [a, b, c] = tri;
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

pub fn to_physical(tri: [Point; 3], l: [f64; 3]) -> Point {
    [
        l[0] * tri[0][0] + l[1] * tri[1][0] + l[2] * tri[2][0],
        l[0] * tri[0][1] + l[1] * tri[1][1] + l[2] * tri[2][1],
    ]
}

fn to_barycentric(tri: [Point; 3], p: Point) -> [f64; 3] {
    let [a, b, c] = tri;
    let det = jacobian_det(tri);
    let dx = p[0] - a[0];
    let dy = p[1] - a[1];
    let l1 = ((c[1] - a[1]) * dx - (c[0] - a[0]) * dy) / det;
    let l2 = (-(b[1] - a[1]) * dx + (b[0] - a[0]) * dy) / det;
    [1.0 - l1 - l2, l1, l2]
}

/// `n`-point Gauss-Legendre rule on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let wt = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = 0.5 * (1.0 - z);
        x[n - 1 - i] = 0.5 * (1.0 + z);
        w[i] = 0.5 * wt;
        w[n - 1 - i] = 0.5 * wt;
    }
    (x, w)
}

/// Gauss rule on `[0, 1]` exact for polynomials of degree `degree`.
pub fn edge_rule(degree: usize) -> Result<EdgeRule> {
    if degree > MAX_EDGE_DEGREE {
        return Err(Error::UnsupportedDegree {
            degree,
            max: MAX_EDGE_DEGREE,
        });
    }
    let (points, weights) = gauss_legendre(degree / 2 + 1);
    Ok(EdgeRule {
        points,
        weights,
        degree,
    })
}

/// Collapsed Gauss rule exact for polynomials of total degree `degree` on the
/// reference triangle.
pub fn triangle_rule(degree: usize) -> Result<TriangleRule> {
    if degree > MAX_TRIANGLE_DEGREE {
        return Err(Error::UnsupportedDegree {
            degree,
            max: MAX_TRIANGLE_DEGREE,
        });
    }
    // x = s, y = (1 - s) t with Jacobian (1 - s): degree + 1 in s, degree in t
    let (s, ws) = gauss_legendre((degree + 2).div_ceil(2));
    let (t, wt) = gauss_legendre((degree + 1).div_ceil(2).max(1));
    let mut points = Vec::with_capacity(s.len() * t.len());
    let mut weights = Vec::with_capacity(s.len() * t.len());
    for (si, wsi) in s.iter().zip(&ws) {
        for (tj, wtj) in t.iter().zip(&wt) {
            let x = *si;
            let y = (1.0 - si) * tj;
            points.push([1.0 - x - y, x, y]);
            weights.push(wsi * wtj * (1.0 - si));
        }
    }
    Ok(TriangleRule {
        points,
        weights,
        degree,
    })
}

/// Splits the reference triangle into `4^levels` congruent cells and applies
/// `base` on each.
pub fn subdivided(base: &TriangleRule, levels: u32) -> TriangleRule {
    let mut cells: Vec<[[f64; 3]; 3]> = vec![[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]];
    for _ in 0..levels {
        let mut next = Vec::with_capacity(4 * cells.len());
        for [a, b, c] in cells {
            let mid = |p: [f64; 3], q: [f64; 3]| {
                [
                    0.5 * (p[0] + q[0]),
                    0.5 * (p[1] + q[1]),
                    0.5 * (p[2] + q[2]),
                ]
            };
            let (ab, bc, ca) = (mid(a, b), mid(b, c), mid(c, a));
            next.extend([[a, ab, ca], [ab, b, bc], [ca, bc, c], [bc, ca, ab]]);
        }
        cells = next;
    }
    let scale = 1.0 / cells.len() as f64;
    let mut points = Vec::with_capacity(cells.len() * base.len());
    let mut weights = Vec::with_capacity(cells.len() * base.len());
    for cell in &cells {
        for (l, w) in base.points.iter().zip(&base.weights) {
            let mut p = [0.0; 3];
            for (k, lk) in l.iter().enumerate() {
                for (pi, ck) in p.iter_mut().zip(cell[k]) {
                    *pi += lk * ck;
                }
            }
            points.push(p);
            weights.push(w * scale);
        }
    }
    TriangleRule {
        points,
        weights,
        degree: base.degree,
    }
}

/// Per-element quadrature with optional grading toward a vertical line
/// `x = line` across which the integrands lose smoothness.
///
/// Elements whose closure meets the line are integrated with vertical slices:
/// the x-range is split at the vertices and at the line, the slice ends on
/// the line are graded with the map `x = x0 + (x1 - x0) s^4`, and each slice
/// is integrated exactly in y. Under this map `|x|^a` turns into `s^(4a + 3)`,
/// a polynomial whenever `4a` is an integer above -4.
#[derive(Clone, Debug)]
pub struct ElementQuadrature {
    standard: TriangleRule,
    singular_line: Option<f64>,
}

impl ElementQuadrature {
    pub fn new(degree: usize, singular_line: Option<f64>) -> Result<Self> {
        Ok(ElementQuadrature {
            standard: triangle_rule(degree)?,
            singular_line,
        })
    }

    pub fn standard(&self) -> &TriangleRule {
        &self.standard
    }

    pub fn degree(&self) -> usize {
        self.standard.degree
    }

    pub fn touches_singularity(&self, tri: [Point; 3]) -> bool {
        let Some(line) = self.singular_line else {
            return false;
        };
        let xs = tri.map(|p| p[0]);
        let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let tol = 1e-12 * (1.0 + line.abs());
        lo - tol <= line && line <= hi + tol
    }

    /// The rule for the given element; borrowed when the standard rule applies.
    pub fn rule_for(&self, tri: [Point; 3]) -> Cow<'_, TriangleRule> {
        match self.singular_line {
            Some(line) if self.touches_singularity(tri) => {
                Cow::Owned(graded_slice_rule(tri, line, self.standard.degree))
            }
            _ => Cow::Borrowed(&self.standard),
        }
    }

    /// Rule on the physical segment `a -> b`, parametrized by `t in [0, 1]`.
    pub fn edge_rule_for(&self, a: Point, b: Point, base: &EdgeRule) -> Cow<'_, EdgeRule> {
        let Some(line) = self.singular_line else {
            return Cow::Owned(base.clone());
        };
        let tol = 1e-12 * (1.0 + line.abs());
        let (da, db) = (a[0] - line, b[0] - line);
        if da.abs() <= tol && db.abs() <= tol {
            return Cow::Owned(base.clone());
        }
        let mut breaks = vec![0.0];
        if da.abs() > tol && db.abs() > tol && da.signum() != db.signum() {
            breaks.push(da / (da - db));
        }
        breaks.push(1.0);
        let mut rule = EdgeRule {
            points: Vec::new(),
            weights: Vec::new(),
            degree: base.degree,
        };
        let n = graded_count(base.degree);
        for w in breaks.windows(2) {
            let (t0, t1) = (w[0], w[1]);
            let x0 = a[0] + t0 * (b[0] - a[0]);
            let x1 = a[0] + t1 * (b[0] - a[0]);
            let (pts, wts) = graded_interval(
                t0,
                t1,
                (x0 - line).abs() <= tol,
                (x1 - line).abs() <= tol,
                n,
                &base.points,
                &base.weights,
            );
            rule.points.extend(pts);
            rule.weights.extend(wts);
        }
        Cow::Owned(rule)
    }
}

fn graded_count(degree: usize) -> usize {
    (GRADING_POWER as usize * (degree + 2)) / 2 + 1
}

/// Points and weights on `[t0, t1]`, graded toward the flagged ends.
fn graded_interval(
    t0: f64,
    t1: f64,
    at_start: bool,
    at_end: bool,
    n: usize,
    plain_x: &[f64],
    plain_w: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let len = t1 - t0;
    let p = GRADING_POWER;
    let pf = p as f64;
    match (at_start, at_end) {
        (false, false) => (
            plain_x.iter().map(|s| t0 + len * s).collect(),
            plain_w.iter().map(|w| w * len).collect(),
        ),
        (true, false) | (false, true) => {
            let (s, ws) = gauss_legendre(n);
            let mut xs = Vec::with_capacity(n);
            let mut wx = Vec::with_capacity(n);
            for (si, wi) in s.iter().zip(&ws) {
                let d = len * si.powi(p);
                xs.push(if at_start { t0 + d } else { t1 - d });
                wx.push(wi * pf * len * si.powi(p - 1));
            }
            (xs, wx)
        }
        (true, true) => {
            let mid = 0.5 * (t0 + t1);
            let (mut xa, mut wa) = graded_interval(t0, mid, true, false, n, plain_x, plain_w);
            let (xb, wb) = graded_interval(mid, t1, false, true, n, plain_x, plain_w);
            xa.extend(xb);
            wa.extend(wb);
            (xa, wa)
        }
    }
}

fn graded_slice_rule(tri: [Point; 3], line: f64, degree: usize) -> TriangleRule {
    let tol = 1e-12 * (1.0 + line.abs());
    let mut breaks: Vec<f64> = tri.iter().map(|p| p[0]).collect();
    let (lo, hi) = (
        breaks.iter().copied().fold(f64::INFINITY, f64::min),
        breaks.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    );
    if line > lo + tol && line < hi - tol {
        breaks.push(line);
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|a, b| (*a - *b).abs() <= tol);

    let (gx, gw) = gauss_legendre(degree / 2 + 2);
    let (gy, gyw) = gauss_legendre(degree / 2 + 1);
    let n = graded_count(degree);
    let det = jacobian_det(tri).abs();
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for w in breaks.windows(2) {
        let (x0, x1) = (w[0], w[1]);
        if x1 - x0 <= tol {
            continue;
        }
        let (xs, wx) = graded_interval(
            x0,
            x1,
            (x0 - line).abs() <= tol,
            (x1 - line).abs() <= tol,
            n,
            &gx,
            &gw,
        );
        for (x, wxi) in xs.iter().zip(&wx) {
            let (ylo, yhi) = cross_section(tri, *x);
            let span = yhi - ylo;
            if span <= 0.0 {
                continue;
            }
            for (y, wyj) in gy.iter().zip(&gyw) {
                let p = [*x, ylo + span * y];
                points.push(to_barycentric(tri, p));
                weights.push(wxi * wyj * span / det);
            }
        }
    }
    TriangleRule {
        points,
        weights,
        degree,
    }
}

/// The y-interval of the triangle's intersection with the vertical line at `x`.
fn cross_section(tri: [Point; 3], x: f64) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..3 {
        let a = tri[i];
        let b = tri[(i + 1) % 3];
        let (xmin, xmax) = (a[0].min(b[0]), a[0].max(b[0]));
        if x < xmin || x > xmax {
            continue;
        }
        if b[0] == a[0] {
            lo = lo.min(a[1].min(b[1]));
            hi = hi.max(a[1].max(b[1]));
        } else {
            let y = a[1] + (x - a[0]) / (b[0] - a[0]) * (b[1] - a[1]);
            lo = lo.min(y);
            hi = hi.max(y);
        }
    }
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: usize) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    /// int over the reference triangle of x^p y^q = p! q! / (p + q + 2)!
    fn exact_monomial(p: usize, q: usize) -> f64 {
        factorial(p) * factorial(q) / factorial(p + q + 2)
    }

    fn integrate_ref(rule: &TriangleRule, p: usize, q: usize) -> f64 {
        rule.points
            .iter()
            .zip(&rule.weights)
            .map(|(l, w)| w * l[1].powi(p as i32) * l[2].powi(q as i32))
            .sum()
    }

    #[test]
    fn reference_values() {
        let r = triangle_rule(2).unwrap();
        assert!((integrate_ref(&r, 0, 0) - 0.5).abs() < 1e-15);
        assert!((integrate_ref(&r, 1, 0) - 1.0 / 6.0).abs() < 1e-15);
        assert!((integrate_ref(&r, 1, 1) - 1.0 / 24.0).abs() < 1e-15);
    }

    #[test]
    fn triangle_exactness_sweep() {
        for d in 0..=MAX_TRIANGLE_DEGREE {
            let r = triangle_rule(d).unwrap();
            assert!(r.weights.iter().all(|&w| w > 0.0));
            for p in 0..=d {
                for q in 0..=d - p {
                    let exact = exact_monomial(p, q);
                    let got = integrate_ref(&r, p, q);
                    assert!(
                        ((got - exact) / exact).abs() < 1e-13,
                        "degree {d}, x^{p} y^{q}: {got} vs {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn edge_exactness_sweep() {
        for d in 0..=MAX_EDGE_DEGREE {
            let r = edge_rule(d).unwrap();
            assert!(r.weights.iter().all(|&w| w > 0.0));
            for p in 0..=d {
                let got: f64 = r
                    .points
                    .iter()
                    .zip(&r.weights)
                    .map(|(t, w)| w * t.powi(p as i32))
                    .sum();
                let exact = 1.0 / (p + 1) as f64;
                assert!(((got - exact) / exact).abs() < 1e-13, "degree {d} t^{p}");
            }
        }
        let two = edge_rule(3).unwrap();
        assert_eq!(two.len(), 2);
        let cubic: f64 = two
            .points
            .iter()
            .zip(&two.weights)
            .map(|(t, w)| w * t.powi(3))
            .sum();
        assert!((cubic - 0.25).abs() < 1e-15);
    }

    #[test]
    fn unsupported_degrees() {
        assert!(matches!(
            triangle_rule(25),
            Err(Error::UnsupportedDegree { .. })
        ));
        assert!(matches!(
            edge_rule(41),
            Err(Error::UnsupportedDegree { .. })
        ));
    }

    #[test]
    fn mapped_area() {
        let r = triangle_rule(0).unwrap();
        let tri = [[0.3, -0.2], [2.0, 0.1], [0.5, 1.7]];
        let area = 0.5 * jacobian_det(tri);
        assert!((r.integrate(tri, |_| 1.0) - area).abs() < 1e-14);
    }

    #[test]
    fn subdivision_keeps_exactness() {
        let r = subdivided(&triangle_rule(5).unwrap(), 2);
        assert_eq!(r.len(), 16 * triangle_rule(5).unwrap().len());
        for p in 0..=5 {
            for q in 0..=5 - p {
                assert!((integrate_ref(&r, p, q) - exact_monomial(p, q)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn graded_rule_polynomial_exactness() {
        let eq = ElementQuadrature::new(8, Some(0.0)).unwrap();
        for tri in [
            [[0.0, 0.0], [0.5, 0.0], [0.5, 0.5]],
            [[0.0, 0.0], [0.5, 0.5], [0.0, 0.5]],
            [[-0.5, -0.5], [0.0, -0.5], [0.0, 0.0]],
            [[-0.3, 0.1], [0.4, -0.2], [0.1, 0.6]],
        ] {
            let rule = eq.rule_for(tri);
            assert!(matches!(rule, Cow::Owned(_)));
            let std = eq.standard();
            for (p, q) in [(0, 0), (3, 2), (1, 7), (8, 0)] {
                let f = |x: Point| x[0].powi(p) * x[1].powi(q);
                let a = rule.integrate(tri, f);
                let b = std.integrate(tri, f);
                assert!(
                    (a - b).abs() < 1e-13 * (1.0 + b.abs()),
                    "{tri:?} {p} {q}: {a} {b}"
                );
            }
        }
    }

    #[test]
    fn graded_rule_handles_power_singularity() {
        // int over the triangle (0,0),(h,0),(0,h) of x^{-1/4} = h^{7/4} / (3/4 * 7/4)
        let h = 0.25;
        let tri = [[0.0, 0.0], [h, 0.0], [0.0, h]];
        let eq = ElementQuadrature::new(10, Some(0.0)).unwrap();
        let got = eq.rule_for(tri).integrate(tri, |p| p[0].powf(-0.25));
        let exact = h.powf(1.75) / (0.75 * 1.75);
        assert!(((got - exact) / exact).abs() < 1e-12, "{got} vs {exact}");
    }

    #[test]
    fn graded_edge_rule() {
        let eq = ElementQuadrature::new(6, Some(0.0)).unwrap();
        let base = edge_rule(6).unwrap();
        let r = eq.edge_rule_for([-0.5, 0.0], [0.5, 1.0], &base);
        // int_0^1 |x(t)|^{3/4} dt with x = t - 1/2 : 2 * (1/2)^{7/4} / (7/4)
        let got: f64 = r
            .points
            .iter()
            .zip(&r.weights)
            .map(|(t, w)| w * (t - 0.5f64).abs().powf(0.75))
            .sum();
        let exact = 2.0 * 0.5f64.powf(1.75) / 1.75;
        assert!((got - exact).abs() < 1e-13);
    }
}
