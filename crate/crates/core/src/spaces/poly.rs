//! Bivariate monomials on the reference triangle.

/// Exponents `(a, b)` of `x^a y^b` for all total degrees `<= degree`, ordered
/// by total degree, then by decreasing power of `x`.
pub fn monomials(degree: usize) -> Vec<(u32, u32)> {
    let mut out = Vec::with_capacity((degree + 1) * (degree + 2) / 2);
    for d in 0..=degree as u32 {
        for b in 0..=d {
            out.push((d - b, b));
        }
    }
    out
}

/// Exponents of the homogeneous monomials of exactly `degree`.
pub fn homogeneous(degree: usize) -> Vec<(u32, u32)> {
    let d = degree as u32;
    (0..=d).map(|b| (d - b, b)).collect()
}

#[inline]
fn ipow(x: f64, n: u32) -> f64 {
    match n {
        0 => 1.0,
        1 => x,
        2 => x * x,
        _ => x.powi(n as i32),
    }
}

/// Value and gradient of `x^a y^b` at `p`.
#[inline]
pub fn eval_monomial((a, b): (u32, u32), p: [f64; 2]) -> (f64, [f64; 2]) {
    let xa = ipow(p[0], a);
    let yb = ipow(p[1], b);
    let dx = if a == 0 {
        0.0
    } else {
        a as f64 * ipow(p[0], a - 1) * yb
    };
    let dy = if b == 0 {
        0.0
    } else {
        b as f64 * xa * ipow(p[1], b - 1)
    };
    (xa * yb, [dx, dy])
}

/// Shifted Legendre polynomial `P_j(2t - 1)` on `[0, 1]`.
pub fn legendre01(j: usize, t: f64) -> f64 {
    let s = 2.0 * t - 1.0;
    let (mut p0, mut p1) = (1.0, s);
    if j == 0 {
        return 1.0;
    }
    for k in 2..=j {
        let p2 = ((2 * k - 1) as f64 * s * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    p1
}
