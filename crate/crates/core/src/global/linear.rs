//! Sparse symmetric positive definite solves.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use nalgebra_sparse::factorization::CscCholesky;
use nalgebra_sparse::{CscMatrix, CsrMatrix};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, VemError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    /// Jacobi-preconditioned conjugate gradient.
    Cg,
    /// Sparse Cholesky factorization.
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub kind: SolverKind,
    /// Relative residual target `‖b - Ax‖ / ‖b‖`.
    pub tol: f64,
    /// Iteration cap; `None` means `max(1000, 10 n)`.
    pub max_iter: Option<usize>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            kind: SolverKind::Cg,
            tol: 1e-12,
            max_iter: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    /// Final relative residual, recomputed from the returned solution.
    pub residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `y = A x`, one row per task so the result does not depend on threading.
fn spmv(a: &CsrMatrix<f64>, x: &[f64], y: &mut [f64]) {
    let offsets = a.row_offsets();
    let cols = a.col_indices();
    let vals = a.values();
    y.par_iter_mut().enumerate().for_each(|(i, yi)| {
        let r = offsets[i]..offsets[i + 1];
        *yi = cols[r.clone()].iter().zip(&vals[r]).map(|(&j, v)| v * x[j]).sum();
    });
}

fn relative_residual(a: &CsrMatrix<f64>, x: &[f64], b: &[f64]) -> f64 {
    let mut ax = vec![0.0; b.len()];
    spmv(a, x, &mut ax);
    let r: Vec<f64> = b.iter().zip(&ax).map(|(b, ax)| b - ax).collect();
    let nb = dot(b, b).sqrt();
    dot(&r, &r).sqrt() / if nb > 0.0 { nb } else { 1.0 }
}

fn pcg(a: &CsrMatrix<f64>, b: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, usize)> {
    let n = b.len();
    let mut diag = vec![1.0; n];
    for (i, row) in a.row_iter().enumerate() {
        if let Some(pos) = row.col_indices().iter().position(|&j| j == i) {
            let d = row.values()[pos];
            if d > 0.0 {
                diag[i] = 1.0 / d;
            }
        }
    }
    let nb = dot(b, b).sqrt();
    let mut x = vec![0.0; n];
    if nb == 0.0 {
        return Ok((x, 0));
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut history = Vec::new();
    for it in 1..=max_iter {
        spmv(a, &p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            history.push(dot(&r, &r).sqrt() / nb);
            return Err(VemError::Solver {
                iterations: it,
                residual: *history.last().unwrap(),
                history,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let res = dot(&r, &r).sqrt() / nb;
        history.push(res);
        if res <= tol {
            return Ok((x, it));
        }
        for i in 0..n {
            z[i] = r[i] * diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(VemError::Solver {
        iterations: max_iter,
        residual: *history.last().unwrap_or(&f64::NAN),
        history,
    })
}

/// Solves `A x = b` for a symmetric positive definite `A`.
pub fn solve_linear(
    a: &CsrMatrix<f64>,
    b: &DVector<f64>,
    opts: &SolverOptions,
) -> Result<(DVector<f64>, SolveStats)> {
    let n = b.len();
    if a.nrows() != n || a.ncols() != n {
        return Err(VemError::Config(format!(
            "system size mismatch: matrix {}x{}, rhs {n}",
            a.nrows(),
            a.ncols()
        )));
    }
    if n == 0 {
        let stats = SolveStats {
            iterations: 0,
            residual: 0.0,
        };
        return Ok((DVector::zeros(0), stats));
    }
    let (x, iterations) = match opts.kind {
        SolverKind::Cg => {
            let max_iter = opts.max_iter.unwrap_or((10 * n).max(1000));
            pcg(a, b.as_slice(), opts.tol, max_iter)?
        }
        SolverKind::Direct => {
            let csc = CscMatrix::from(a);
            let chol = CscCholesky::factor(&csc).map_err(|e| VemError::Singular {
                what: "global system",
                entity: format!("{n} free DOFs ({e})"),
            })?;
            let rhs = DMatrix::from_column_slice(n, 1, b.as_slice());
            (chol.solve(&rhs).column(0).iter().copied().collect(), 1)
        }
    };
    let residual = relative_residual(a, &x, b.as_slice());
    Ok((DVector::from_vec(x), SolveStats { iterations, residual }))
}

/// Writes the lower triangle of a symmetric matrix as 1-based
/// `row col value` coordinate text.
pub fn write_matrix_market(a: &CsrMatrix<f64>, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    let entries: Vec<(usize, usize, f64)> = a
        .triplet_iter()
        .filter(|(i, j, _)| j <= i)
        .map(|(i, j, v)| (i, j, *v))
        .collect();
    writeln!(out, "%%MatrixMarket matrix coordinate real symmetric")?;
    writeln!(out, "{} {} {}", a.nrows(), a.ncols(), entries.len())?;
    for (i, j, v) in entries {
        writeln!(out, "{} {} {:.17e}", i + 1, j + 1, v)?;
    }
    out.flush()?;
    Ok(())
}
