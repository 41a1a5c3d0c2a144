//! Manufactured test problems on `(-1,1)^2` with homogeneous Dirichlet data.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::Point;

pub type ScalarFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(Point) -> [f64; 2] + Send + Sync>;

pub const BUILTIN_NAMES: [&str; 3] = ["smooth1", "smooth-var", "singular"];

/// Closed-form solution of a problem.
#[derive(Clone)]
pub struct Exact {
    pub u: ScalarFn,
    pub grad_u: VectorFn,
    /// `sigma grad u`.
    pub q: VectorFn,
    pub div_q: ScalarFn,
}

/// Data for `-div(sigma grad u) - omega^2 eta u = f`, written as the
/// first-order system `sigma^-1 q - grad u = g`, `div q + omega^2 eta u = -f`.
#[derive(Clone)]
pub struct Problem {
    pub name: String,
    pub sigma: ScalarFn,
    pub eta: ScalarFn,
    pub omega: f64,
    pub f: ScalarFn,
    pub g: Option<VectorFn>,
    pub exact: Option<Exact>,
    /// Vertical line `x = c` along which the data are singular.
    pub singular_line: Option<f64>,
    /// Sobolev exponent `t` with `u` in `H^(2+s)` for every `s < t`.
    pub regularity: f64,
    /// Whether rate gates apply (high wavenumbers are preasymptotic on
    /// the meshes used).
    pub gated: bool,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("omega", &self.omega)
            .field("has_exact", &self.exact.is_some())
            .field("singular_line", &self.singular_line)
            .field("regularity", &self.regularity)
            .finish()
    }
}

impl Problem {
    /// Problem whose source is derived from a given exact solution, with
    /// `g = 0`.
    pub fn from_exact(
        name: &str,
        sigma: ScalarFn,
        eta: ScalarFn,
        omega: f64,
        exact: Exact,
    ) -> Problem {
        let (div_q, u, eta2) = (exact.div_q.clone(), exact.u.clone(), eta.clone());
        let w2 = omega * omega;
        Problem {
            name: name.to_string(),
            sigma,
            eta,
            omega,
            f: Arc::new(move |p| -div_q(p) - w2 * eta2(p) * u(p)),
            g: None,
            exact: Some(exact),
            singular_line: None,
            regularity: f64::INFINITY,
            gated: true,
        }
    }

    pub fn exact(&self) -> Result<&Exact> {
        self.exact
            .as_ref()
            .ok_or_else(|| Error::MissingExact(self.name.clone()))
    }

    /// Largest relative violation of `f = -div q - omega^2 eta u` and
    /// `q = sigma grad u` over a fixed point set, skipping a strip around the
    /// singular line.
    pub fn consistency_residual(&self) -> Option<f64> {
        let ex = self.exact.as_ref()?;
        let w2 = self.omega * self.omega;
        let mut worst: f64 = 0.0;
        for p in sample_points(50) {
            if let Some(c) = self.singular_line {
                if (p[0] - c).abs() < 1e-3 {
                    continue;
                }
            }
            let (u, dq, eta, f) = ((ex.u)(p), (ex.div_q)(p), (self.eta)(p), (self.f)(p));
            let scale = f.abs().max(dq.abs()).max(w2 * (eta * u).abs()).max(1.0);
            worst = worst.max((f + dq + w2 * eta * u).abs() / scale);
            let (s, gu, q) = ((self.sigma)(p), (ex.grad_u)(p), (ex.q)(p));
            let scale = q[0].abs().max(q[1].abs()).max(1.0);
            for i in 0..2 {
                worst = worst.max((q[i] - s * gu[i]).abs() / scale);
            }
            if let Some(g) = &self.g {
                // g shifts q away from sigma grad u; only meaningful for g = 0
                let gv = g(p);
                worst = worst.max(gv[0].abs().max(gv[1].abs()));
            }
        }
        Some(worst)
    }

    fn checked(self) -> Result<Problem> {
        if let Some(residual) = self.consistency_residual() {
            if !(residual <= 1e-10) {
                return Err(Error::Inconsistent {
                    name: self.name,
                    residual,
                });
            }
        }
        Ok(self)
    }
}

/// Quasi-random points in `(-1,1)^2` (Halton bases 2 and 3).
fn sample_points(n: usize) -> Vec<Point> {
    let halton = |mut i: usize, b: usize| {
        let (mut f, mut r) = (1.0, 0.0);
        while i > 0 {
            f /= b as f64;
            r += f * (i % b) as f64;
            i /= b;
        }
        r
    };
    (1..=n)
        .map(|i| [2.0 * halton(i, 2) - 1.0, 2.0 * halton(i, 3) - 1.0])
        .collect()
}

pub fn default_omega(name: &str) -> Result<f64> {
    match name {
        "smooth1" | "smooth-var" => Ok(1.0),
        "singular" => Ok(0.0),
        _ => Err(Error::UnknownProblem(name.to_string())),
    }
}

/// Built-in problem with its default wavenumber.
pub fn builtin(name: &str) -> Result<Problem> {
    builtin_with_omega(name, default_omega(name)?)
}

pub fn builtin_with_omega(name: &str, omega: f64) -> Result<Problem> {
    let p = match name {
        "smooth1" => smooth1(omega),
        "smooth-var" => smooth_var(omega),
        "singular" => singular(omega),
        _ => return Err(Error::UnknownProblem(name.to_string())),
    };
    p.checked()
}

pub fn regularity_hint(problem: &Problem) -> f64 {
    problem.regularity
}

// u = a(x) b(y), a = (x^2 - 1) e^x, b = y^2 - 1
fn a0(x: f64) -> f64 {
    (x * x - 1.0) * x.exp()
}
fn a1(x: f64) -> f64 {
    (x * x + 2.0 * x - 1.0) * x.exp()
}
fn a2(x: f64) -> f64 {
    (x * x + 4.0 * x + 1.0) * x.exp()
}
fn b0(y: f64) -> f64 {
    y * y - 1.0
}

fn smooth_u(p: Point) -> f64 {
    a0(p[0]) * b0(p[1])
}

fn smooth_grad(p: Point) -> [f64; 2] {
    [a1(p[0]) * b0(p[1]), 2.0 * p[1] * a0(p[0])]
}

fn smooth_laplacian(p: Point) -> f64 {
    a2(p[0]) * b0(p[1]) + 2.0 * a0(p[0])
}

fn smooth1(omega: f64) -> Problem {
    let w2 = omega * omega;
    Problem {
        name: "smooth1".into(),
        sigma: Arc::new(|_| 1.0),
        eta: Arc::new(|_| 1.0),
        omega,
        f: Arc::new(move |p| {
            let (x, y) = (p[0], p[1]);
            let ex = x.exp();
            -((x * x + 4.0 * x + 1.0) * (y * y - 1.0) + 2.0 * (x * x - 1.0)) * ex
                - w2 * (x * x - 1.0) * (y * y - 1.0) * ex
        }),
        g: None,
        exact: Some(Exact {
            u: Arc::new(smooth_u),
            grad_u: Arc::new(smooth_grad),
            q: Arc::new(smooth_grad),
            div_q: Arc::new(smooth_laplacian),
        }),
        singular_line: None,
        regularity: f64::INFINITY,
        gated: omega < 6.0,
    }
}

fn var_sigma(p: Point) -> f64 {
    p[0] * p[0] + p[1] * p[1] + 1.0
}

fn var_eta(p: Point) -> f64 {
    (p[0] * p[0] - p[0]) * (p[1] * p[1] - p[1])
}

fn smooth_var(omega: f64) -> Problem {
    let w2 = omega * omega;
    Problem {
        name: "smooth-var".into(),
        sigma: Arc::new(var_sigma),
        eta: Arc::new(var_eta),
        omega,
        f: Arc::new(move |p| {
            let (x, y) = (p[0], p[1]);
            let ex = x.exp();
            let s = x * x + y * y + 1.0;
            let (a, b) = ((x * x - 1.0) * ex, y * y - 1.0);
            let ax = (x * x + 2.0 * x - 1.0) * ex;
            let axx = (x * x + 4.0 * x + 1.0) * ex;
            let div_q = 2.0 * x * ax * b + 4.0 * y * y * a + s * (axx * b + 2.0 * a);
            -div_q - w2 * (x * x - x) * (y * y - y) * a * b
        }),
        g: None,
        exact: Some(Exact {
            u: Arc::new(smooth_u),
            grad_u: Arc::new(smooth_grad),
            q: Arc::new(|p| {
                let (s, g) = (var_sigma(p), smooth_grad(p));
                [s * g[0], s * g[1]]
            }),
            div_q: Arc::new(|p| {
                let g = smooth_grad(p);
                2.0 * p[0] * g[0] + 2.0 * p[1] * g[1] + var_sigma(p) * smooth_laplacian(p)
            }),
        }),
        singular_line: None,
        regularity: f64::INFINITY,
        gated: omega < 6.0,
    }
}

// u = v(x) w(y), v = x |x|^(3/4) (1 - x^2), w = 1 - y^2
fn sv0(x: f64) -> f64 {
    x * x.abs().powf(0.75) * (1.0 - x * x)
}
fn sv1(x: f64) -> f64 {
    let ax = x.abs();
    1.75 * ax.powf(0.75) - 3.75 * ax.powf(2.75)
}
fn sv2(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let ax = x.abs();
    x.signum() * (21.0 / 16.0 * ax.powf(-0.25) - 165.0 / 16.0 * ax.powf(1.75))
}

fn singular(omega: f64) -> Problem {
    let w2 = omega * omega;
    Problem {
        name: "singular".into(),
        sigma: Arc::new(|_| 1.0),
        eta: Arc::new(|_| 1.0),
        omega,
        f: Arc::new(move |p| {
            let (x, y) = (p[0], p[1]);
            let w = 1.0 - y * y;
            let lead = if x == 0.0 {
                0.0
            } else {
                x.signum() * (165.0 * x * x - 21.0) / (16.0 * x.abs().powf(0.25)) * w
            };
            lead + 2.0 * sv0(x) - w2 * sv0(x) * w
        }),
        g: None,
        exact: Some(Exact {
            u: Arc::new(|p| sv0(p[0]) * (1.0 - p[1] * p[1])),
            grad_u: Arc::new(singular_grad),
            q: Arc::new(singular_grad),
            div_q: Arc::new(|p| sv2(p[0]) * (1.0 - p[1] * p[1]) - 2.0 * sv0(p[0])),
        }),
        singular_line: Some(0.0),
        regularity: 0.25,
        gated: true,
    }
}

fn singular_grad(p: Point) -> [f64; 2] {
    [sv1(p[0]) * (1.0 - p[1] * p[1]), -2.0 * p[1] * sv0(p[0])]
}

#[cfg(test)]
mod tests {
    use super::*;

    // fourth-order central difference of a scalar along one axis
    fn d4(f: impl Fn(Point) -> f64, p: Point, axis: usize, h: f64) -> f64 {
        let at = |s: f64| {
            let mut q = p;
            q[axis] += s * h;
            f(q)
        };
        (8.0 * (at(1.0) - at(-1.0)) - (at(2.0) - at(-2.0))) / (12.0 * h)
    }

    fn fd_grad(u: &ScalarFn, p: Point) -> [f64; 2] {
        [d4(|q| u(q), p, 0, 1e-3), d4(|q| u(q), p, 1, 1e-3)]
    }

    // -div(sigma grad u) - omega^2 eta u by nested differences of u
    fn fd_source(p: &Problem, x: Point) -> f64 {
        let ex = p.exact.as_ref().unwrap();
        let flux = |y: Point, i: usize| (p.sigma)(y) * fd_grad(&ex.u, y)[i];
        let div = d4(|y| flux(y, 0), x, 0, 1e-2) + d4(|y| flux(y, 1), x, 1, 1e-2);
        -div - p.omega * p.omega * (p.eta)(x) * (ex.u)(x)
    }

    fn test_points() -> Vec<Point> {
        vec![
            [0.0, 0.0],
            [0.3, -0.7],
            [-0.55, 0.2],
            [0.9, 0.9],
            [-0.1, 0.45],
        ]
    }

    #[test]
    fn smooth_values() {
        let p = builtin("smooth1").unwrap();
        let ex = p.exact().unwrap();
        assert_eq!((ex.u)([0.0, 0.0]), 1.0);
        for t in [-1.0, -0.3, 0.4, 1.0] {
            for q in [[t, 1.0], [t, -1.0], [1.0, t], [-1.0, t]] {
                assert_eq!((ex.u)(q), 0.0);
            }
        }
        // q.n does not vanish on the boundary
        assert!((ex.q)([1.0, 0.0])[0].abs() > 1.0);
        // f(0,0) = -(1 * -1 + 2 * -1) - omega^2 * 1 = 3 - 1
        assert!(((p.f)([0.0, 0.0]) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn smooth_sources_match_finite_differences() {
        for name in ["smooth1", "smooth-var"] {
            for omega in [0.0, 1.0, 4.0] {
                let p = builtin_with_omega(name, omega).unwrap();
                let ex = p.exact().unwrap();
                for x in test_points() {
                    let f = (p.f)(x);
                    let fd = fd_source(&p, x);
                    assert!(
                        (f - fd).abs() <= 1e-6 * f.abs().max(1.0),
                        "{name} {x:?}: {f} vs {fd}"
                    );
                    let g = (ex.grad_u)(x);
                    let gf = fd_grad(&ex.u, x);
                    for i in 0..2 {
                        assert!((g[i] - gf[i]).abs() < 1e-8);
                    }
                }
            }
        }
    }

    #[test]
    fn singular_matches_finite_differences_away_from_line() {
        let p = builtin("singular").unwrap();
        assert_eq!(p.omega, 0.0);
        let ex = p.exact().unwrap();
        for x in [
            [0.3, -0.7],
            [-0.55, 0.2],
            [0.9, 0.9],
            [-0.1, 0.45],
            [0.2, 0.0],
        ] {
            let f = (p.f)(x);
            let fd = fd_source(&p, x);
            assert!(
                (f - fd).abs() <= 1e-5 * f.abs().max(1.0),
                "{x:?}: {f} vs {fd}"
            );
            let dq = (ex.div_q)(x);
            assert!((f + dq).abs() <= 1e-12 * f.abs().max(1.0));
        }
        assert_eq!((p.f)([0.0, 0.3]), 0.0);
        // odd in x
        assert!(((ex.u)([0.4, 0.1]) + (ex.u)([-0.4, 0.1])).abs() < 1e-15);
    }

    #[test]
    fn regularity() {
        assert_eq!(regularity_hint(&builtin("singular").unwrap()), 0.25);
        assert!(regularity_hint(&builtin("smooth1").unwrap()).is_infinite());
        assert!(regularity_hint(&builtin("smooth-var").unwrap()).is_infinite());
    }

    #[test]
    fn unknown_name() {
        assert!(matches!(builtin("smooth2"), Err(Error::UnknownProblem(_))));
    }

    #[test]
    fn inconsistent_problem_rejected() {
        let mut p = builtin("smooth1").unwrap();
        p.f = Arc::new(|_| 1.0);
        assert!(matches!(p.checked(), Err(Error::Inconsistent { .. })));
    }

    #[test]
    fn high_wavenumber_not_gated() {
        assert!(builtin_with_omega("smooth-var", 4.0).unwrap().gated);
        assert!(!builtin_with_omega("smooth-var", 6.0).unwrap().gated);
    }

    #[test]
    fn sample_points_in_domain() {
        let pts = sample_points(50);
        assert_eq!(pts.len(), 50);
        assert!(pts.iter().all(|p| p[0].abs() < 1.0 && p[1].abs() < 1.0));
    }
}
