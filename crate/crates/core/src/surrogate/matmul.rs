//! Small dense matrix kernels for the surrogate network.
//!
//! All parallelism is over disjoint output regions with a fixed sequential
//! inner loop, so results are bitwise identical regardless of thread count.

use rayon::prelude::*;

/// Work threshold (multiply-adds) below which threading is not worth it.
const PAR_THRESHOLD: usize = 1 << 17;

/// c[m x n] = a[m x k] * b[n x k]^T  (both row-major; dot of rows).
pub fn matmul_nt(a: &[f64], b: &[f64], c: &mut [f64], m: usize, n: usize, k: usize) {
    assert_eq!(a.len(), m * k);
    assert_eq!(b.len(), n * k);
    assert_eq!(c.len(), m * n);
    let row = |a_row: &[f64], c_row: &mut [f64]| {
        for (j, cj) in c_row.iter_mut().enumerate() {
            let b_row = &b[j * k..(j + 1) * k];
            *cj = dot(a_row, b_row);
        }
    };
    if m * n * k < PAR_THRESHOLD {
        for (i, c_row) in c.chunks_exact_mut(n).enumerate() {
            row(&a[i * k..(i + 1) * k], c_row);
        }
    } else if m == 1 {
        // One output row: parallelize over column blocks instead.
        c.par_chunks_mut(256).enumerate().for_each(|(blk, c_blk)| {
            let j0 = blk * 256;
            for (dj, cj) in c_blk.iter_mut().enumerate() {
                let j = j0 + dj;
                *cj = dot(a, &b[j * k..(j + 1) * k]);
            }
        });
    } else {
        c.par_chunks_mut(n).enumerate().for_each(|(i, c_row)| {
            row(&a[i * k..(i + 1) * k], c_row);
        });
    }
}

/// c[m x n] = a[m x k] * b[k x n]  (row-major).
pub fn matmul_nn(a: &[f64], b: &[f64], c: &mut [f64], m: usize, n: usize, k: usize) {
    assert_eq!(a.len(), m * k);
    assert_eq!(b.len(), k * n);
    assert_eq!(c.len(), m * n);
    let row = |a_row: &[f64], c_row: &mut [f64]| {
        c_row.fill(0.0);
        for (l, &alv) in a_row.iter().enumerate() {
            if alv == 0.0 {
                continue;
            }
            axpy(alv, &b[l * n..(l + 1) * n], c_row);
        }
    };
    if m * n * k < PAR_THRESHOLD {
        for (i, c_row) in c.chunks_exact_mut(n).enumerate() {
            row(&a[i * k..(i + 1) * k], c_row);
        }
    } else {
        c.par_chunks_mut(n).enumerate().for_each(|(i, c_row)| {
            row(&a[i * k..(i + 1) * k], c_row);
        });
    }
}

/// c[m x n] = a[rows x m]^T * b[rows x n]  (row-major inputs).
pub fn matmul_tn(a: &[f64], b: &[f64], c: &mut [f64], m: usize, n: usize, rows: usize) {
    assert_eq!(a.len(), rows * m);
    assert_eq!(b.len(), rows * n);
    assert_eq!(c.len(), m * n);
    let row = |i: usize, c_row: &mut [f64]| {
        c_row.fill(0.0);
        for r in 0..rows {
            let w = a[r * m + i];
            if w == 0.0 {
                continue;
            }
            axpy(w, &b[r * n..(r + 1) * n], c_row);
        }
    };
    if m * n * rows < PAR_THRESHOLD {
        for (i, c_row) in c.chunks_exact_mut(n).enumerate() {
            row(i, c_row);
        }
    } else {
        c.par_chunks_mut(n).enumerate().for_each(|(i, c_row)| {
            row(i, c_row);
        });
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    // Four partial sums keep the FP order fixed while letting the compiler
    // vectorize.
    let mut s = [0.0f64; 4];
    let chunks = a.len() / 4;
    for i in 0..chunks {
        let ai = &a[i * 4..i * 4 + 4];
        let bi = &b[i * 4..i * 4 + 4];
        s[0] += ai[0] * bi[0];
        s[1] += ai[1] * bi[1];
        s[2] += ai[2] * bi[2];
        s[3] += ai[3] * bi[3];
    }
    let mut tail = 0.0;
    for i in chunks * 4..a.len() {
        tail += a[i] * b[i];
    }
    (s[0] + s[1]) + (s[2] + s[3]) + tail
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
