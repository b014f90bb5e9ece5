//! Row-major sparse matrices for assembling the optimization blocks.

/// A sparse matrix stored as one coefficient list per row.
///
/// Exact zeros are never stored; pushing a zero coefficient is a no-op.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseMatrix {
    ncols: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl SparseMatrix {
    pub fn new(ncols: usize) -> Self {
        Self { ncols, rows: Vec::new() }
    }

    pub fn with_rows(nrows: usize, ncols: usize) -> Self {
        Self { ncols, rows: vec![Vec::new(); nrows] }
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    /// Appends an empty row and returns its index.
    pub fn push_empty_row(&mut self) -> usize {
        self.rows.push(Vec::new());
        self.rows.len() - 1
    }

    /// Appends a row given as `(column, coefficient)` terms.
    pub fn push_row(&mut self, terms: &[(usize, f64)]) -> usize {
        let r = self.push_empty_row();
        for &(c, v) in terms {
            self.set(r, c, v);
        }
        r
    }

    /// Adds `value` to entry `(row, col)` (inserting it if absent).
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        assert!(col < self.ncols, "column {col} out of range {}", self.ncols);
        if value == 0.0 {
            return;
        }
        let r = &mut self.rows[row];
        match r.iter_mut().find(|(c, _)| *c == col) {
            Some((_, v)) => *v += value,
            None => r.push((col, value)),
        }
    }

    pub fn row(&self, r: usize) -> &[(usize, f64)] {
        &self.rows[r]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[(usize, f64)]> {
        self.rows.iter().map(|r| r.as_slice())
    }

    /// `self * x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(c, v)| v * x[c]).sum())
            .collect()
    }

    /// `self^T * y` (one entry per column).
    pub fn t_mul_vec(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.nrows());
        let mut out = vec![0.0; self.ncols];
        for (i, row) in self.rows.iter().enumerate() {
            let yi = y[i];
            if yi == 0.0 {
                continue;
            }
            for &(c, v) in row {
                out[c] += v * yi;
            }
        }
        out
    }

    /// Dot product of row `r` with `x`.
    pub fn row_dot(&self, r: usize, x: &[f64]) -> f64 {
        self.rows[r].iter().map(|&(c, v)| v * x[c]).sum()
    }

    /// Column-major copy of the matrix.
    pub fn transposed(&self) -> SparseMatrix {
        let mut t = SparseMatrix::with_rows(self.ncols, self.nrows());
        for (i, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                t.rows[c].push((i, v));
            }
        }
        t
    }

    /// Appends all rows of `other` (same column count) and returns the row
    /// offset at which they start.
    pub fn append_rows(&mut self, other: &SparseMatrix) -> usize {
        assert_eq!(self.ncols, other.ncols);
        let at = self.rows.len();
        self.rows.extend(other.rows.iter().cloned());
        at
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mul_and_transpose_agree() {
        let mut m = SparseMatrix::new(3);
        m.push_row(&[(0, 1.0), (2, -2.0)]);
        m.push_row(&[(1, 4.0)]);
        let x = vec![1.0, 2.0, 3.0];
        assert_eq!(m.mul_vec(&x), vec![-5.0, 8.0]);
        let y = vec![1.0, 0.5];
        let t = m.transposed();
        assert_eq!(m.t_mul_vec(&y), t.mul_vec(&y));
    }

    #[test]
    fn set_accumulates() {
        let mut m = SparseMatrix::with_rows(1, 2);
        m.set(0, 1, 2.0);
        m.set(0, 1, 3.0);
        assert_eq!(m.row_dot(0, &[0.0, 1.0]), 5.0);
    }
}
