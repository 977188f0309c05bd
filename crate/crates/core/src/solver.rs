//! Linear solvers: sparse LU (via `faer`), diagonally preconditioned
//! conjugate gradients, and BiCGStab.

use std::fmt;

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::{norm2, CsrMatrix, SparseSystem};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverMethod {
    DirectLu,
    Cg,
    #[serde(rename = "bicgstab")]
    BiCgStab,
}

impl fmt::Display for SolverMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::DirectLu => "direct-lu",
            Self::Cg => "cg",
            Self::BiCgStab => "bicgstab",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SolveReport {
    pub method: SolverMethod,
    pub iterations: usize,
    /// `‖Ax − b‖₂ / ‖b‖₂`, recomputed after the solve.
    pub residual: f64,
}

/// Relative asymmetry below which CG is allowed.
pub const SYMMETRY_TOL: f64 = 1e-10;

pub fn solve(system: &SparseSystem, method: SolverMethod, tol: f64, max_iter: usize) -> Result<(Vec<f64>, SolveReport)> {
    let a = &system.matrix;
    let b = &system.rhs;
    if a.n_rows != a.n_cols || a.n_rows != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.n_rows,
            got: b.len(),
        });
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::InvalidParameter {
            name: "tol",
            reason: format!("relative tolerance must lie in (0, 1), got {tol}"),
        });
    }
    let (x, iterations) = match method {
        SolverMethod::DirectLu => (direct_lu(a, b)?, 1),
        SolverMethod::Cg => {
            let asym = a.asymmetry();
            if asym > SYMMETRY_TOL {
                return Err(Error::NotSymmetric(asym));
            }
            cg(a, b, tol, max_iter)?
        }
        SolverMethod::BiCgStab => bicgstab(a, b, tol, max_iter)?,
    };
    let residual = system.relative_residual(&x);
    let report = SolveReport {
        method,
        iterations,
        residual,
    };
    if !(residual <= tol) {
        return Err(Error::NotConverged {
            iterations,
            residual,
            best: x,
        });
    }
    Ok((x, report))
}

fn direct_lu(a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.n_rows;
    if n == 0 {
        return Ok(Vec::new());
    }
    faer::set_global_parallelism(faer::Par::Seq);
    let mut triplets = Vec::with_capacity(a.nnz());
    for r in 0..n {
        for (c, v) in a.row(r) {
            triplets.push(Triplet::new(r, c, v));
        }
    }
    let mat = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
        .map_err(|e| Error::Singular(format!("{e:?}")))?;
    // The sparse factorization panics on structurally or numerically zero pivots.
    let lu = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| mat.sp_lu()))
        .map_err(|_| Error::Singular("zero pivot in sparse LU".into()))?
        .map_err(|e| Error::Singular(format!("{e:?}")))?;
    let mut x = b.to_vec();
    // A couple of refinement sweeps recover digits lost to pivoting.
    for sweep in 0..3 {
        let r: Vec<f64> = if sweep == 0 {
            b.to_vec()
        } else {
            let ax = a.mul_vec(&x);
            b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect()
        };
        let mut rhs = Mat::<f64>::from_fn(n, 1, |i, _| r[i]);
        lu.solve_in_place(&mut rhs);
        let dx: Vec<f64> = (0..n).map(|i| rhs[(i, 0)]).collect();
        if dx.iter().any(|v| !v.is_finite()) {
            return Err(Error::Singular("factorization produced non-finite values".into()));
        }
        if sweep == 0 {
            x = dx;
        } else {
            for (xi, di) in x.iter_mut().zip(&dx) {
                *xi += di;
            }
        }
        let nb = norm2(b).max(f64::MIN_POSITIVE);
        let ax = a.mul_vec(&x);
        let res: f64 = ax.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
        if res / nb < 1e-14 {
            break;
        }
    }
    Ok(x)
}

fn dotv(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn cg(a: &CsrMatrix, b: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, usize)> {
    let n = b.len();
    let diag = a.diagonal();
    if let Some(i) = diag.iter().position(|&d| !(d > 0.0)) {
        return Err(Error::Singular(format!("non-positive diagonal entry at row {i}")));
    }
    let nb = norm2(b);
    if nb == 0.0 {
        return Ok((vec![0.0; n], 0));
    }
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(ri, di)| ri / di).collect();
    let mut p = z.clone();
    let mut rz = dotv(&r, &z);
    let mut ap = vec![0.0; n];
    let mut best = (f64::INFINITY, x.clone());
    for it in 1..=max_iter {
        a.mul_vec_into(&p, &mut ap);
        let pap = dotv(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::Singular("matrix is not positive definite".into()));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rel = norm2(&r) / nb;
        if rel < best.0 {
            best = (rel, x.clone());
        }
        // Stop slightly below the target so the recomputed residual passes.
        if rel <= 0.5 * tol {
            return Ok((x, it));
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new = dotv(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::NotConverged {
        iterations: max_iter,
        residual: best.0,
        best: best.1,
    })
}

fn bicgstab(a: &CsrMatrix, b: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, usize)> {
    let n = b.len();
    let diag: Vec<f64> = a.diagonal().into_iter().map(|d| if d != 0.0 { d } else { 1.0 }).collect();
    let nb = norm2(b);
    if nb == 0.0 {
        return Ok((vec![0.0; n], 0));
    }
    let precond = |v: &[f64]| -> Vec<f64> { v.iter().zip(&diag).map(|(x, d)| x / d).collect() };
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let r0 = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut best = (f64::INFINITY, x.clone());
    for it in 1..=max_iter {
        let rho_new = dotv(&r0, &r);
        if rho_new == 0.0 {
            break;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        let y = precond(&p);
        a.mul_vec_into(&y, &mut v);
        alpha = rho / dotv(&r0, &v);
        let s: Vec<f64> = r.iter().zip(&v).map(|(ri, vi)| ri - alpha * vi).collect();
        let zs = precond(&s);
        let t = a.mul_vec(&zs);
        let tt = dotv(&t, &t);
        omega = if tt > 0.0 { dotv(&t, &s) / tt } else { 0.0 };
        for i in 0..n {
            x[i] += alpha * y[i] + omega * zs[i];
            r[i] = s[i] - omega * t[i];
        }
        let rel = norm2(&r) / nb;
        if rel < best.0 {
            best = (rel, x.clone());
        }
        if rel <= 0.5 * tol {
            return Ok((x, it));
        }
        if omega == 0.0 || !rel.is_finite() {
            break;
        }
    }
    Err(Error::NotConverged {
        iterations: max_iter,
        residual: best.0,
        best: best.1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn system(rows: &[Vec<f64>], rhs: Vec<f64>) -> SparseSystem {
        let n = rows.len();
        SparseSystem {
            matrix: CsrMatrix::from_dense(rows),
            rhs,
            n_bulk: n,
            n_interface: 0,
        }
    }

    #[test]
    fn identity_returns_rhs() {
        let s = SparseSystem {
            matrix: CsrMatrix::identity(4),
            rhs: vec![1.0, -2.0, 3.0, 0.5],
            n_bulk: 4,
            n_interface: 0,
        };
        for m in [SolverMethod::DirectLu, SolverMethod::Cg, SolverMethod::BiCgStab] {
            let (x, rep) = solve(&s, m, 1e-12, 10).unwrap();
            assert_eq!(x, s.rhs);
            assert!(rep.iterations <= 1);
        }
    }

    #[test]
    fn two_by_two_spd() {
        let s = system(&[vec![2.0, 1.0], vec![1.0, 2.0]], vec![1.0, 1.0]);
        for m in [SolverMethod::DirectLu, SolverMethod::Cg, SolverMethod::BiCgStab] {
            let (x, rep) = solve(&s, m, 1e-12, 10).unwrap();
            assert!((x[0] - 1.0 / 3.0).abs() < 1e-14 && (x[1] - 1.0 / 3.0).abs() < 1e-14);
            assert!(rep.residual <= 1e-12);
        }
    }

    #[test]
    fn cg_refuses_nonsymmetric_matrices() {
        let s = system(&[vec![2.0, 1.0], vec![0.0, 2.0]], vec![1.0, 1.0]);
        assert!(matches!(solve(&s, SolverMethod::Cg, 1e-10, 10), Err(Error::NotSymmetric(_))));
        let (x, _) = solve(&s, SolverMethod::DirectLu, 1e-12, 10).unwrap();
        assert!((x[1] - 0.5).abs() < 1e-15 && (x[0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn singular_matrix_is_reported() {
        let s = system(&[vec![1.0, 1.0], vec![1.0, 1.0]], vec![1.0, 2.0]);
        assert!(solve(&s, SolverMethod::DirectLu, 1e-10, 10).is_err());
    }

    #[test]
    fn non_convergence_returns_best_iterate() {
        let n = 50;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| match (i as i64 - j as i64).abs() {
                        0 => 2.0,
                        1 => -1.0,
                        _ => 0.0,
                    })
                    .collect()
            })
            .collect();
        let s = system(&rows, vec![1.0; n]);
        match solve(&s, SolverMethod::Cg, 1e-12, 3) {
            Err(Error::NotConverged { iterations, best, .. }) => {
                assert_eq!(iterations, 3);
                assert_eq!(best.len(), n);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
