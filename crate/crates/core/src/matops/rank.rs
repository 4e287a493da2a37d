use super::Matrix;
use crate::error::{Error, Result};

/// Relative pivot threshold, scaled by the largest initial entry.
pub const RANK_TOL: f64 = 1e-9;

/// Numerical rank by Gaussian elimination with full pivoting.
pub fn rank(m: &Matrix) -> usize {
    let scale = m.max_abs();
    if scale == 0.0 {
        return 0;
    }
    let threshold = RANK_TOL * scale;
    let (rows, cols) = m.shape();
    let mut a = m.to_rows();
    let mut r = 0;
    while r < rows.min(cols) {
        let mut best = (r, r, 0.0f64);
        for (i, row) in a.iter().enumerate().skip(r) {
            for (j, v) in row.iter().enumerate().skip(r) {
                if v.abs() > best.2 {
                    best = (i, j, v.abs());
                }
            }
        }
        if best.2 < threshold {
            break;
        }
        a.swap(r, best.0);
        for row in a.iter_mut() {
            row.swap(r, best.1);
        }
        let pivot_row = a[r].clone();
        for row in a.iter_mut().skip(r + 1) {
            let f = row[r] / pivot_row[r];
            for (x, p) in row.iter_mut().zip(&pivot_row).skip(r) {
                *x -= f * p;
            }
        }
        r += 1;
    }
    r
}

/// `[B, AB, …, A^{blocks−1}B]`.
pub fn krylov_blocks(a: &Matrix, b: &Matrix, blocks: usize) -> Matrix {
    assert!(blocks >= 1);
    let mut out = b.clone();
    let mut cur = b.clone();
    for _ in 1..blocks {
        cur = a * &cur;
        out = out.hstack(&cur);
    }
    out
}

/// Smallest number of Krylov blocks whose columns span the state space.
pub fn controllability_index(a: &Matrix, b: &Matrix) -> Result<usize> {
    if !a.is_square() || b.rows() != a.rows() {
        return Err(Error::Dimension(format!(
            "pair ({}x{}, {}x{})",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let n = a.rows();
    let mut last = 0;
    for blocks in 1..=n {
        last = rank(&krylov_blocks(a, b, blocks));
        if last == n {
            return Ok(blocks);
        }
    }
    Err(Error::NotControllable { rank: last, n })
}

/// Errors unless `(C, A)` is observable.
pub fn check_observable(c: &Matrix, a: &Matrix) -> Result<()> {
    if !a.is_square() || c.cols() != a.rows() {
        return Err(Error::Dimension(format!(
            "pair ({}x{}, {}x{})",
            c.rows(),
            c.cols(),
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    let r = rank(&krylov_blocks(&a.transpose(), &c.transpose(), n));
    if r < n {
        return Err(Error::NotObservable { rank: r, n });
    }
    Ok(())
}
