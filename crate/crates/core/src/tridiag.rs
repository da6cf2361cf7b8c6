//! Constant-coefficient tridiagonal systems, factored once and solved many times.

use crate::exec::Exec;

/// `sub·x[i-1] + diag·x[i] + sup·x[i+1] = r[i]`, `i = 0..n`.
#[derive(Debug, Clone)]
pub struct Tridiag {
    sub: f64,
    cp: Vec<f64>,
    inv_den: Vec<f64>,
}

impl Tridiag {
    pub fn new(n: usize, sub: f64, diag: f64, sup: f64) -> Self {
        let mut cp = vec![0.0; n];
        let mut inv_den = vec![0.0; n];
        let mut prev = 0.0;
        for i in 0..n {
            let den = diag - sub * prev;
            inv_den[i] = 1.0 / den;
            prev = sup * inv_den[i];
            cp[i] = prev;
        }
        Tridiag { sub, cp, inv_den }
    }

    pub fn len(&self) -> usize {
        self.cp.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cp.is_empty()
    }

    /// Overwrites `r` with the solution (Thomas algorithm).
    pub fn solve(&self, r: &mut [f64]) {
        let n = self.len();
        debug_assert_eq!(r.len(), n);
        let mut prev = 0.0;
        for (x, inv) in r.iter_mut().zip(&self.inv_den) {
            prev = (*x - self.sub * prev) * inv;
            *x = prev;
        }
        for i in (0..n.saturating_sub(1)).rev() {
            r[i] -= self.cp[i] * r[i + 1];
        }
    }

    /// Solves every contiguous row of length `n` in `data`.
    pub fn solve_rows(&self, data: &mut [f64], exec: Exec) {
        let n = self.len();
        exec.for_each_chunk_mut(data, n, |row| self.solve(row));
    }
}

/// Transposes a row-major `rows × cols` array into `out` (`cols × rows`).
pub fn transpose(data: &[f64], rows: usize, cols: usize, out: &mut [f64]) {
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = data[r * cols + c];
        }
    }
}
