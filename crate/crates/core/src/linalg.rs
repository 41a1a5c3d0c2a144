//! Compressed sparse row storage and solvers for symmetric positive definite
//! systems.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

/// Largest system handled by the dense routines.
pub const DENSE_LIMIT: usize = 2000;
/// Jacobi-PCG iteration cap, in units of `sqrt(n)`.
pub const JACOBI_ITERATION_FACTOR: f64 = 20.0;

pub const DEFAULT_TOL: f64 = 1e-11;

#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseMatrix {
    /// Zero matrix with the given sparsity; `rows[i]` lists the columns of row `i`.
    pub fn from_pattern(n: usize, rows: Vec<Vec<usize>>) -> SparseMatrix {
        assert_eq!(rows.len(), n);
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        row_ptr.push(0);
        for mut r in rows {
            r.sort_unstable();
            r.dedup();
            cols.extend(r);
            row_ptr.push(cols.len());
        }
        let vals = vec![0.0; cols.len()];
        SparseMatrix {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    /// Sums duplicate entries.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> SparseMatrix {
        let mut rows = vec![Vec::new(); n];
        for &(i, j, _) in triplets {
            rows[i].push(j);
        }
        let mut a = SparseMatrix::from_pattern(n, rows);
        for &(i, j, v) in triplets {
            a.add(i, j, v);
        }
        a
    }

    pub fn identity(n: usize) -> SparseMatrix {
        SparseMatrix::from_triplets(n, &(0..n).map(|i| (i, i, 1.0)).collect::<Vec<_>>())
    }

    pub fn from_dense(a: &DMatrix<f64>) -> SparseMatrix {
        let mut t = Vec::new();
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                if a[(i, j)] != 0.0 {
                    t.push((i, j, a[(i, j)]));
                }
            }
        }
        SparseMatrix::from_triplets(a.nrows(), &t)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.cols[r.clone()], &self.vals[r])
    }

    /// Adds `v` to entry `(i, j)`, which must be in the pattern.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        let k = self.cols[r.clone()]
            .binary_search(&j)
            .unwrap_or_else(|_| panic!("entry ({i}, {j}) is outside the sparsity pattern"));
        self.vals[r.start + k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (c, v) = self.row(i);
        c.binary_search(&j).map(|k| v[k]).unwrap_or(0.0)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// `S A S` for the diagonal matrix `S = diag(s)`.
    pub fn scaled(&self, s: &[f64]) -> SparseMatrix {
        let mut out = self.clone();
        for i in 0..self.n {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                out.vals[p] *= s[i] * s[self.cols[p]];
            }
        }
        out
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row_dot(i, x);
        }
    }

    /// Row-parallel product; each row is still summed sequentially, so the
    /// result is identical to [`SparseMatrix::matvec`].
    pub fn par_matvec(&self, x: &[f64], y: &mut [f64]) {
        y.par_iter_mut()
            .with_min_len(256)
            .enumerate()
            .for_each(|(i, yi)| *yi = self.row_dot(i, x));
    }

    #[inline]
    fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        let (c, v) = self.row(i);
        c.iter().zip(v).map(|(&j, a)| a * x[j]).sum()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            let (c, v) = self.row(i);
            for (&j, &a) in c.iter().zip(v) {
                d[(i, j)] += a;
            }
        }
        d
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |A - A^T| / max |A|`.
    pub fn symmetry_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            let (c, v) = self.row(i);
            for (&j, &a) in c.iter().zip(v) {
                worst = worst.max((a - self.get(j, i)).abs());
            }
        }
        let scale = self.max_abs();
        if scale == 0.0 {
            0.0
        } else {
            worst / scale
        }
    }

    /// Rows whose stored entries are all zero.
    pub fn zero_rows(&self) -> Vec<usize> {
        (0..self.n)
            .filter(|&i| self.row(i).1.iter().all(|&v| v == 0.0))
            .collect()
    }

    /// MatrixMarket coordinate format, 1-based.
    pub fn write_matrix_market(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(w, "{} {} {}", self.n, self.n, self.nnz())?;
        for i in 0..self.n {
            let (c, v) = self.row(i);
            for (&j, &a) in c.iter().zip(v) {
                writeln!(w, "{} {} {:e}", i + 1, j + 1, a)?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SolveMethod {
    JacobiPcg,
    /// PCG preconditioned by a sparse Cholesky factor, used when
    /// Jacobi-PCG stalls.
    CholeskyPcg,
    DenseCholesky,
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveReport {
    pub iterations: usize,
    /// `|b - A x| / |b|` after symmetric diagonal scaling of `A`.
    pub relative_residual: f64,
    pub method: SolveMethod,
    /// The same quantity for the unscaled system.
    pub unscaled_residual: f64,
}

#[derive(Clone, Debug)]
pub struct SolverOptions {
    pub tol: f64,
    /// Cap for each iterative stage; defaults to `20 sqrt(n)`.
    pub max_iterations: Option<usize>,
    /// Retry with a sparse Cholesky preconditioner when Jacobi stalls.
    pub cholesky_fallback: bool,
    pub dense_fallback: bool,
    pub parallel: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: DEFAULT_TOL,
            max_iterations: None,
            cholesky_fallback: true,
            dense_fallback: true,
            parallel: false,
        }
    }
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        SolverOptions {
            tol,
            ..Default::default()
        }
    }
}

pub fn solve_spd(a: &SparseMatrix, b: &[f64], tol: f64) -> Result<(Vec<f64>, SolveReport)> {
    solve_spd_with(a, b, &SolverOptions::with_tol(tol))
}

/// Conjugate gradients on the symmetrically diagonal-scaled system
/// `D^-1/2 A D^-1/2`, which makes the residual independent of how the
/// basis functions are scaled. Jacobi preconditioning is tried first; when
/// that stalls the solve is retried with a sparse Cholesky preconditioner,
/// then with a dense Cholesky factorization for small systems.
pub fn solve_spd_with(
    a: &SparseMatrix,
    b: &[f64],
    opts: &SolverOptions,
) -> Result<(Vec<f64>, SolveReport)> {
    let n = a.dim();
    assert_eq!(b.len(), n);
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("right-hand side"));
    }
    let s: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| {
            if d > 0.0 && d.is_finite() {
                1.0 / d.sqrt()
            } else {
                1.0
            }
        })
        .collect();
    let sa = a.scaled(&s);
    let sb: Vec<f64> = b.iter().zip(&s).map(|(b, s)| b * s).collect();
    let (y, mut report) = solve_scaled(&sa, &sb, opts)?;
    let x: Vec<f64> = y.iter().zip(&s).map(|(y, s)| y * s).collect();
    report.unscaled_residual = relative_residual(a, &x, b);
    Ok((x, report))
}

fn solve_scaled(
    a: &SparseMatrix,
    b: &[f64],
    opts: &SolverOptions,
) -> Result<(Vec<f64>, SolveReport)> {
    let n = a.dim();
    let max_it = opts
        .max_iterations
        .unwrap_or_else(|| ((JACOBI_ITERATION_FACTOR * (n as f64).sqrt()).ceil() as usize).max(50));
    let err = match pcg(a, b, opts.tol, max_it, opts.parallel, &Jacobi::new(a)) {
        Err(e @ Error::NotConverged { .. }) => e,
        r => return r,
    };
    let err = if opts.cholesky_fallback {
        match SparseCholesky::new(a).and_then(|c| pcg(a, b, opts.tol, max_it, opts.parallel, &c)) {
            Err(e @ Error::NotConverged { .. }) => e,
            Err(Error::NonFinite(_)) => err,
            r => return r,
        }
    } else {
        err
    };
    if opts.dense_fallback && n <= DENSE_LIMIT {
        let x = dense_cholesky_solve(a, b)?;
        let res = relative_residual(a, &x, b);
        return Ok((
            x,
            SolveReport {
                iterations: 0,
                relative_residual: res,
                method: SolveMethod::DenseCholesky,
                unscaled_residual: res,
            },
        ));
    }
    Err(err)
}

/// `z = M^-1 r` for a symmetric positive definite `M`.
pub trait Preconditioner: Sync {
    fn apply(&self, r: &[f64], z: &mut [f64]);
    fn method(&self) -> SolveMethod;
}

pub struct Jacobi {
    inv_diag: Vec<f64>,
}

impl Jacobi {
    pub fn new(a: &SparseMatrix) -> Jacobi {
        let inv_diag = a
            .diagonal()
            .iter()
            .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
            .collect();
        Jacobi { inv_diag }
    }
}

impl Preconditioner for Jacobi {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        for ((z, r), d) in z.iter_mut().zip(r).zip(&self.inv_diag) {
            *z = d * r;
        }
    }

    fn method(&self) -> SolveMethod {
        SolveMethod::JacobiPcg
    }
}

/// Sparse Cholesky factor of the matrix itself (fill-reducing ordering),
/// used as a preconditioner so that round-off is still corrected by the
/// outer iteration.
pub struct SparseCholesky {
    llt: faer::sparse::linalg::solvers::Llt<usize, f64>,
}

impl SparseCholesky {
    pub fn new(a: &SparseMatrix) -> Result<SparseCholesky> {
        let mut t = Vec::with_capacity(a.nnz() / 2 + a.dim());
        for i in 0..a.dim() {
            let (c, v) = a.row(i);
            for (&j, &x) in c.iter().zip(v) {
                if j >= i {
                    t.push(faer::sparse::Triplet::new(j, i, x));
                }
            }
        }
        let m =
            faer::sparse::SparseColMat::<usize, f64>::try_new_from_triplets(a.dim(), a.dim(), &t)
                .map_err(|_| Error::NonFinite("sparse Cholesky assembly"))?;
        let llt = m
            .sp_cholesky(faer::Side::Lower)
            .map_err(|_| Error::NonFinite("sparse Cholesky factorization"))?;
        Ok(SparseCholesky { llt })
    }
}

impl Preconditioner for SparseCholesky {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        use faer::linalg::solvers::Solve;
        z.copy_from_slice(r);
        let n = z.len();
        self.llt
            .solve_in_place(faer::MatMut::from_column_major_slice_mut(z, n, 1));
    }

    fn method(&self) -> SolveMethod {
        SolveMethod::CholeskyPcg
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn relative_residual(a: &SparseMatrix, x: &[f64], b: &[f64]) -> f64 {
    let mut ax = vec![0.0; b.len()];
    a.matvec(x, &mut ax);
    let r: f64 = ax
        .iter()
        .zip(b)
        .map(|(p, q)| (p - q) * (p - q))
        .sum::<f64>()
        .sqrt();
    let nb = norm(b);
    if nb == 0.0 {
        r
    } else {
        r / nb
    }
}

pub fn pcg(
    a: &SparseMatrix,
    b: &[f64],
    tol: f64,
    max_iterations: usize,
    parallel: bool,
    m: &dyn Preconditioner,
) -> Result<(Vec<f64>, SolveReport)> {
    let n = a.dim();
    let bnorm = norm(b);
    let mut x = vec![0.0; n];
    let report = |iterations, relative_residual| SolveReport {
        iterations,
        relative_residual,
        method: m.method(),
        unscaled_residual: relative_residual,
    };
    if bnorm == 0.0 {
        return Ok((x, report(0, 0.0)));
    }
    let apply = |x: &[f64], y: &mut [f64]| {
        if parallel {
            a.par_matvec(x, y)
        } else {
            a.matvec(x, y)
        }
    };

    let mut r = b.to_vec();
    let mut z = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut ap = vec![0.0; n];
    let mut iterations = 0;
    // restart from the true residual when the recursive one has drifted
    for _restart in 0..4 {
        apply(&x, &mut ap);
        for i in 0..n {
            r[i] = b[i] - ap[i];
        }
        m.apply(&r, &mut z);
        p.copy_from_slice(&z);
        let mut rz = dot(&r, &z);
        let mut rnorm = norm(&r);
        while rnorm > tol * bnorm && iterations < max_iterations {
            apply(&p, &mut ap);
            let pap = dot(&p, &ap);
            if !pap.is_finite() || !rz.is_finite() {
                return Err(Error::NonFinite("conjugate gradient iteration"));
            }
            if pap <= 0.0 {
                break;
            }
            let alpha = rz / pap;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            m.apply(&r, &mut z);
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
            rnorm = norm(&r);
            iterations += 1;
        }
        let true_res = relative_residual(a, &x, b);
        if !true_res.is_finite() {
            return Err(Error::NonFinite("conjugate gradient iteration"));
        }
        if true_res <= tol {
            return Ok((x, report(iterations, true_res)));
        }
        if iterations >= max_iterations {
            return Err(Error::NotConverged {
                iterations,
                residual: true_res,
            });
        }
    }
    Err(Error::NotConverged {
        iterations,
        residual: relative_residual(a, &x, b),
    })
}

pub fn dense_cholesky_solve(a: &SparseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    if a.dim() > DENSE_LIMIT {
        return Err(Error::SizeExceeded {
            size: a.dim(),
            limit: DENSE_LIMIT,
        });
    }
    let chol = a.to_dense().cholesky().ok_or(Error::NonFinite(
        "dense Cholesky factorization (matrix not positive definite)",
    ))?;
    Ok(chol
        .solve(&DVector::from_column_slice(b))
        .as_slice()
        .to_vec())
}

/// Smallest and largest eigenvalue of a symmetric matrix (dense path).
pub fn eigen_extrema_dense(a: &SparseMatrix) -> Result<(f64, f64)> {
    if a.dim() > DENSE_LIMIT {
        return Err(Error::SizeExceeded {
            size: a.dim(),
            limit: DENSE_LIMIT,
        });
    }
    let eig = a.to_dense().symmetric_eigen();
    let lo = eig
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let hi = eig
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn identity_one_iteration() {
        let a = SparseMatrix::identity(5);
        let b = [1.0, -2.0, 3.0, 0.5, 7.0];
        let (x, rep) = solve_spd(&a, &b, 1e-12).unwrap();
        assert_eq!(rep.iterations, 1);
        assert_eq!(x, b.to_vec());
    }

    #[test]
    fn two_by_two() {
        let a =
            SparseMatrix::from_triplets(2, &[(0, 0, 4.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 3.0)]);
        let (x, rep) = solve_spd(&a, &[1.0, 2.0], 1e-14).unwrap();
        assert!((x[0] - 1.0 / 11.0).abs() < 1e-14);
        assert!((x[1] - 7.0 / 11.0).abs() < 1e-14);
        assert!(rep.relative_residual <= 1e-14);
    }

    #[test]
    fn random_spd_against_dense_cholesky() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        let n = 50;
        let m = DMatrix::<f64>::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let dense = m.transpose() * &m + DMatrix::identity(n, n);
        let a = SparseMatrix::from_dense(&dense);
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (x, _) = solve_spd(&a, &b, 1e-13).unwrap();
        let exact = dense
            .cholesky()
            .unwrap()
            .solve(&DVector::from_column_slice(&b));
        let err = (DVector::from_column_slice(&x) - &exact).norm() / exact.norm();
        assert!(err <= 1e-9, "{err}");
    }

    #[test]
    fn zero_rhs() {
        let a = SparseMatrix::identity(3);
        let (x, rep) = solve_spd(&a, &[0.0; 3], 1e-12).unwrap();
        assert_eq!(x, vec![0.0; 3]);
        assert_eq!(rep.iterations, 0);
    }

    #[test]
    fn non_finite_rhs() {
        let a = SparseMatrix::identity(2);
        assert!(matches!(
            solve_spd(&a, &[f64::NAN, 1.0], 1e-12),
            Err(Error::NonFinite(_))
        ));
    }

    fn laplacian_2d(m: usize) -> SparseMatrix {
        let id = |i: usize, j: usize| i * m + j;
        let mut t = Vec::new();
        for i in 0..m {
            for j in 0..m {
                t.push((id(i, j), id(i, j), 4.0));
                if i + 1 < m {
                    t.push((id(i, j), id(i + 1, j), -1.0));
                    t.push((id(i + 1, j), id(i, j), -1.0));
                }
                if j + 1 < m {
                    t.push((id(i, j), id(i, j + 1), -1.0));
                    t.push((id(i, j + 1), id(i, j), -1.0));
                }
            }
        }
        SparseMatrix::from_triplets(m * m, &t)
    }

    #[test]
    fn max_iterations_reported() {
        let a = laplacian_2d(10);
        let b = vec![1.0; 100];
        let opts = SolverOptions {
            tol: 1e-12,
            max_iterations: Some(3),
            cholesky_fallback: false,
            dense_fallback: false,
            parallel: false,
        };
        match solve_spd_with(&a, &b, &opts) {
            Err(Error::NotConverged {
                iterations,
                residual,
            }) => {
                assert_eq!(iterations, 3);
                assert!(residual > 1e-12);
            }
            other => panic!("{other:?}"),
        }
        let opts = SolverOptions {
            dense_fallback: true,
            ..opts
        };
        let (_, rep) = solve_spd_with(&a, &b, &opts).unwrap();
        assert_eq!(rep.method, SolveMethod::DenseCholesky);
        assert!(rep.relative_residual < 1e-12);
    }

    #[test]
    fn cholesky_takes_over_from_jacobi() {
        let a = laplacian_2d(20);
        let b: Vec<f64> = (0..400).map(|i| (i as f64 * 0.3).sin()).collect();
        let (_, rep) = pcg(&a, &b, 1e-12, 10, false, &SparseCholesky::new(&a).unwrap()).unwrap();
        assert!(rep.iterations <= 2, "{}", rep.iterations);
        assert_eq!(rep.method, SolveMethod::CholeskyPcg);
        // Jacobi stalls under a tight cap
        let opts = SolverOptions {
            max_iterations: Some(30),
            dense_fallback: false,
            ..SolverOptions::with_tol(1e-10)
        };
        let (x, rep) = solve_spd_with(&a, &b, &opts).unwrap();
        assert_eq!(rep.method, SolveMethod::CholeskyPcg);
        assert!(rep.unscaled_residual <= 1e-10);
        assert!(relative_residual(&a, &x, &b) <= 1e-10);
    }

    #[test]
    fn eigen_extrema() {
        assert_eq!(
            eigen_extrema_dense(&SparseMatrix::identity(4)).unwrap(),
            (1.0, 1.0)
        );
        let d = SparseMatrix::from_triplets(3, &[(0, 0, 1.0), (1, 1, 2.0), (2, 2, 3.0)]);
        let (lo, hi) = eigen_extrema_dense(&d).unwrap();
        assert!((lo - 1.0).abs() < 1e-12 && (hi - 3.0).abs() < 1e-12);
    }

    #[test]
    fn matvec_against_dense() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(5);
        for n in [1, 17, 200] {
            let mut t = Vec::new();
            for _ in 0..5 * n {
                t.push((
                    rng.gen_range(0..n),
                    rng.gen_range(0..n),
                    rng.gen_range(-1.0..1.0),
                ));
            }
            let a = SparseMatrix::from_triplets(n, &t);
            let d = a.to_dense();
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut y = vec![0.0; n];
            a.matvec(&x, &mut y);
            let mut yp = vec![0.0; n];
            a.par_matvec(&x, &mut yp);
            assert_eq!(y, yp);
            let yd = &d * DVector::from_column_slice(&x);
            for i in 0..n {
                assert!((y[i] - yd[i]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn matrix_market_dump() {
        let a =
            SparseMatrix::from_triplets(2, &[(0, 0, 4.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 3.0)]);
        let mut buf = Vec::new();
        a.write_matrix_market(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("%%MatrixMarket matrix coordinate real general\n2 2 4\n1 1 4e0\n"));
        assert_eq!(a.symmetry_error(), 0.0);
    }
}
