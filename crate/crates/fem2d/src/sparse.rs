//! Symmetric sparse linear algebra: CSR storage and Jacobi-preconditioned
//! conjugate gradients. Deterministic by construction (no pivoting, fixed
//! iteration order); a dense factorization is kept around as a test oracle.

use nalgebra::{DMatrix, DVector};

use crate::{FemError, Result};

/// Triplet accumulator; duplicate entries sum.
#[derive(Debug, Clone)]
pub struct Triplets {
    pub n: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl Triplets {
    pub fn new(n: usize) -> Triplets {
        Triplets {
            n,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.n && j < self.n);
        if v != 0.0 {
            self.entries.push((i, j, v));
        }
    }

    pub fn to_csr(&self) -> Csr {
        let mut sorted = self.entries.clone();
        sorted.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; self.n + 1];
        let mut col_idx = Vec::new();
        let mut vals: Vec<f64> = Vec::new();
        let mut last: Option<(usize, usize)> = None;
        for &(i, j, v) in &sorted {
            if last == Some((i, j)) {
                *vals.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                vals.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..self.n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Csr {
            n: self.n,
            row_ptr,
            col_idx,
            vals,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Csr {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub vals: Vec<f64>,
}

impl Csr {
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut s = 0.0;
            for idx in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[idx] * x[self.col_idx[idx]];
            }
            y[i] = s;
        }
    }

    pub fn diag(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for i in 0..self.n {
            for idx in self.row_ptr[i]..self.row_ptr[i + 1] {
                if self.col_idx[idx] == i {
                    d[i] = self.vals[idx];
                }
            }
        }
        d
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for idx in self.row_ptr[i]..self.row_ptr[i + 1] {
                m[(i, self.col_idx[idx])] += self.vals[idx];
            }
        }
        m
    }

    pub fn symmetry_defect(&self) -> f64 {
        let d = self.to_dense();
        (&d - d.transpose()).abs().max()
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CgOptions {
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Default for CgOptions {
    fn default() -> Self {
        CgOptions {
            rel_tol: 1e-12,
            max_iter: 0, // 0 = automatic (10 n + 1000)
        }
    }
}

/// Jacobi-preconditioned CG. Returns the solution and the relative-residual
/// history. Errors on non-positive diagonal, detected indefiniteness, or
/// non-convergence (with the history attached).
pub fn pcg(a: &Csr, b: &[f64], opts: CgOptions) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = a.n;
    assert_eq!(b.len(), n);
    let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if bnorm == 0.0 {
        return Ok((vec![0.0; n], vec![0.0]));
    }
    let diag = a.diag();
    for (i, &d) in diag.iter().enumerate() {
        if d <= 0.0 {
            return Err(FemError::NotSpd {
                reason: format!("non-positive diagonal entry {d:.3e} at row {i}"),
            });
        }
    }
    let max_iter = if opts.max_iter == 0 {
        10 * n + 1000
    } else {
        opts.max_iter
    };
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(ri, di)| ri / di).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut ap = vec![0.0; n];
    let mut history = vec![1.0];
    for _ in 0..max_iter {
        a.matvec(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if pap <= 0.0 {
            return Err(FemError::NotSpd {
                reason: format!("indefinite operator: p.Ap = {pap:.3e}"),
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rnorm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        let rel = rnorm / bnorm;
        history.push(rel);
        if rel <= opts.rel_tol {
            return Ok((x, history));
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let residual = *history.last().unwrap();
    Err(FemError::CgDivergence {
        iters: max_iter,
        residual,
        history,
    })
}

/// Dense Cholesky solve, used as an independent oracle in tests.
pub fn dense_solve(a: &Csr, b: &[f64]) -> Result<Vec<f64>> {
    let m = a.to_dense();
    let chol = m.cholesky().ok_or_else(|| FemError::NotSpd {
        reason: "dense Cholesky failed".into(),
    })?;
    let x = chol.solve(&DVector::from_column_slice(b));
    Ok(x.as_slice().to_vec())
}
