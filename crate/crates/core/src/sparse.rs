//! Coordinate and compressed-row sparse matrices.

use std::fmt::Write as _;
use std::io::Write;

use crate::error::Result;

/// Triplet accumulator. Duplicate entries are summed on conversion, in
/// insertion order, so the result does not depend on hashing.
#[derive(Clone, Debug, Default)]
pub struct CooMatrix {
    pub n_rows: usize,
    pub n_cols: usize,
    rows: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CooMatrix {
    pub fn new(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            ..Default::default()
        }
    }

    pub fn push(&mut self, r: usize, c: usize, v: f64) {
        debug_assert!(r < self.n_rows && c < self.n_cols);
        self.rows.push(r);
        self.cols.push(c);
        self.vals.push(v);
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn to_csr(&self) -> CsrMatrix {
        let mut order: Vec<usize> = (0..self.vals.len()).collect();
        // Stable: ties keep insertion order.
        order.sort_by_key(|&i| (self.rows[i], self.cols[i]));
        let mut row_ptr = vec![0usize; self.n_rows + 1];
        let mut col_idx = Vec::with_capacity(order.len());
        let mut vals: Vec<f64> = Vec::with_capacity(order.len());
        let mut last: Option<(usize, usize)> = None;
        for i in order {
            let key = (self.rows[i], self.cols[i]);
            if last == Some(key) {
                *vals.last_mut().unwrap() += self.vals[i];
            } else {
                col_idx.push(key.1);
                vals.push(self.vals[i]);
                row_ptr[key.0 + 1] += 1;
                last = Some(key);
            }
        }
        for r in 0..self.n_rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        CsrMatrix {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            row_ptr,
            col_idx,
            vals,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    pub n_rows: usize,
    pub n_cols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub vals: Vec<f64>,
}

impl CsrMatrix {
    pub fn identity(n: usize) -> Self {
        Self {
            n_rows: n,
            n_cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            vals: vec![1.0; n],
        }
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let n_cols = rows.first().map_or(0, |r| r.len());
        let mut coo = CooMatrix::new(rows.len(), n_cols);
        for (i, r) in rows.iter().enumerate() {
            for (j, &v) in r.iter().enumerate() {
                if v != 0.0 {
                    coo.push(i, j, v);
                }
            }
        }
        coo.to_csr()
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[range.clone()].iter().copied().zip(self.vals[range].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.col_idx[range.clone()].binary_search(&c) {
            Ok(k) => self.vals[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n_rows];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        for (r, yr) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                s += self.vals[k] * x[self.col_idx[k]];
            }
            *yr = s;
        }
    }

    pub fn transpose(&self) -> Self {
        let mut coo = CooMatrix::new(self.n_cols, self.n_rows);
        for r in 0..self.n_rows {
            for (c, v) in self.row(r) {
                coo.push(c, r, v);
            }
        }
        coo.to_csr()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n_rows.min(self.n_cols)).map(|i| self.get(i, i)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |A - Aᵀ| / max |A|`.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for r in 0..self.n_rows {
            for (c, v) in self.row(r) {
                worst = worst.max((v - self.get(c, r)).abs());
            }
        }
        worst / scale
    }

    /// Entrywise `self - other` over the union of both patterns.
    pub fn sub(&self, other: &Self) -> Self {
        let mut coo = CooMatrix::new(self.n_rows, self.n_cols);
        for r in 0..self.n_rows {
            for (c, v) in self.row(r) {
                coo.push(r, c, v);
            }
            for (c, v) in other.row(r) {
                coo.push(r, c, -v);
            }
        }
        coo.to_csr()
    }

    /// Writes one `row col value` line per stored entry.
    pub fn write_text(&self, mut out: impl Write) -> Result<()> {
        let mut s = String::new();
        for r in 0..self.n_rows {
            for (c, v) in self.row(r) {
                writeln!(s, "{r} {c} {v:.17e}").unwrap();
            }
        }
        out.write_all(s.as_bytes())?;
        Ok(())
    }
}

pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Assembled linear system together with its block layout: bulk dofs first,
/// then interface dofs.
#[derive(Clone, Debug)]
pub struct SparseSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub n_bulk: usize,
    pub n_interface: usize,
}

impl SparseSystem {
    pub fn n_dofs(&self) -> usize {
        self.n_bulk + self.n_interface
    }

    /// `‖A x − b‖₂ / ‖b‖₂`, or the absolute residual when `b = 0`.
    pub fn relative_residual(&self, x: &[f64]) -> f64 {
        let ax = self.matrix.mul_vec(x);
        let r: Vec<f64> = ax.iter().zip(&self.rhs).map(|(a, b)| a - b).collect();
        let nb = norm2(&self.rhs);
        if nb > 0.0 {
            norm2(&r) / nb
        } else {
            norm2(&r)
        }
    }

    /// Which block a global dof belongs to, with its index inside the block.
    pub fn locate(&self, dof: usize) -> (DofBlock, usize) {
        if dof < self.n_bulk {
            (DofBlock::Bulk, dof)
        } else {
            (DofBlock::Interface, dof - self.n_bulk)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DofBlock {
    Bulk,
    Interface,
}
