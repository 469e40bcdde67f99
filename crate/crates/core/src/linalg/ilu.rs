use super::CsrMatrix;
use crate::{Error, Result};

/// Zero fill-in incomplete LU factorization sharing the sparsity of `A`.
/// `L` is unit lower triangular; both factors live in one value array.
#[derive(Debug, Clone)]
pub struct Ilu0 {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    diag: Vec<usize>,
}

impl Ilu0 {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        let n = a.n();
        let row_ptr = a.row_ptr().to_vec();
        let col_idx = a.col_idx().to_vec();
        let mut values = a.values().to_vec();

        let mut diag = vec![usize::MAX; n];
        for (i, d) in diag.iter_mut().enumerate() {
            for p in row_ptr[i]..row_ptr[i + 1] {
                if col_idx[p] == i {
                    *d = p;
                }
            }
            if *d == usize::MAX {
                return Err(Error::SingularMatrix(format!("row {i} has no diagonal entry")));
            }
        }

        // position of each column in the current row, usize::MAX when absent
        let mut pos = vec![usize::MAX; n];
        for i in 0..n {
            let (start, end) = (row_ptr[i], row_ptr[i + 1]);
            for p in start..end {
                pos[col_idx[p]] = p;
            }
            for p in start..end {
                let k = col_idx[p];
                if k >= i {
                    break;
                }
                let pivot = values[diag[k]];
                if pivot == 0.0 {
                    return Err(Error::SingularMatrix(format!("zero pivot in row {k}")));
                }
                let lik = values[p] / pivot;
                values[p] = lik;
                for q in diag[k] + 1..row_ptr[k + 1] {
                    let target = pos[col_idx[q]];
                    if target != usize::MAX {
                        values[target] -= lik * values[q];
                    }
                }
            }
            for p in start..end {
                pos[col_idx[p]] = usize::MAX;
            }
            if values[diag[i]] == 0.0 || !values[diag[i]].is_finite() {
                return Err(Error::SingularMatrix(format!("zero pivot in row {i}")));
            }
        }
        Ok(Self {
            n,
            row_ptr,
            col_idx,
            values,
            diag,
        })
    }

    /// Solves `L U out = rhs`.
    pub fn apply(&self, rhs: &[f64], out: &mut [f64]) {
        for i in 0..self.n {
            let mut acc = rhs[i];
            for p in self.row_ptr[i]..self.diag[i] {
                acc -= self.values[p] * out[self.col_idx[p]];
            }
            out[i] = acc;
        }
        for i in (0..self.n).rev() {
            let mut acc = out[i];
            for p in self.diag[i] + 1..self.row_ptr[i + 1] {
                acc -= self.values[p] * out[self.col_idx[p]];
            }
            out[i] = acc / self.values[self.diag[i]];
        }
    }
}
