use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::real::{gemm, Real};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Matrix<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(rows * cols, data.len(), "matrix data length does not match shape");
        Self { rows, cols, data }
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: T) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [T] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn transpose(&self) -> Self {
        const B: usize = 8;
        let (rows, cols) = (self.rows, self.cols);
        let mut out = Self::zeros(cols, rows);
        for r0 in (0..rows).step_by(B) {
            let rn = B.min(rows - r0);
            for c0 in (0..cols).step_by(B) {
                let cn = B.min(cols - c0);
                let mut block = [[T::zero(); B]; B];
                for (dr, src) in self.data[r0 * cols..].chunks(cols).take(rn).enumerate() {
                    for (dc, &v) in src[c0..c0 + cn].iter().enumerate() {
                        block[dc][dr] = v;
                    }
                }
                for (dc, dst) in block.iter().take(cn).enumerate() {
                    let start = (c0 + dc) * rows + r0;
                    out.data[start..start + rn].copy_from_slice(&dst[..rn]);
                }
            }
        }
        out
    }
}

const SMALL_ROWS: usize = 2;

/// Dot product with eight independent accumulators so the loop vectorizes.
fn dot<T: Real>(x: &[T], y: &[T]) -> T {
    let mut acc = [T::zero(); 8];
    let xc = x.chunks_exact(8);
    let yc = y.chunks_exact(8);
    let tail: T = xc.remainder().iter().zip(yc.remainder()).map(|(&a, &b)| a * b).sum();
    for (xs, ys) in xc.zip(yc) {
        for i in 0..8 {
            acc[i] += xs[i] * ys[i];
        }
    }
    acc.iter().copied().sum::<T>() + tail
}

/// `a (m x k) . b (k x n)`.
pub fn matmul_nn<T: Real>(a: &Matrix<T>, b: &Matrix<T>) -> Matrix<T> {
    let mut out = Matrix::zeros(a.rows, b.cols);
    matmul_nn_acc(a, b, &mut out);
    out
}

/// `out += a . b` where `a` is `m x k` and `b` is `k x n`.
pub fn matmul_nn_acc<T: Real>(a: &Matrix<T>, b: &Matrix<T>, out: &mut Matrix<T>) {
    assert_eq!(a.cols, b.rows);
    assert_eq!((out.rows, out.cols), (a.rows, b.cols));
    if a.rows <= SMALL_ROWS {
        // Packing `b` would cost more than the product itself.
        for r in 0..a.rows {
            let o = &mut out.data[r * b.cols..(r + 1) * b.cols];
            for (&x, w) in a.row(r).iter().zip(b.data.chunks_exact(b.cols)) {
                for (ov, &wv) in o.iter_mut().zip(w) {
                    *ov += x * wv;
                }
            }
        }
        return;
    }
    gemm(
        a.rows,
        a.cols,
        b.cols,
        T::one(),
        (&a.data, a.cols, 1),
        (&b.data, b.cols, 1),
        T::one(),
        (&mut out.data, b.cols, 1),
    );
}

/// `a (m x k) . b^T` where `b` is `n x k`.
pub fn matmul_nt<T: Real>(a: &Matrix<T>, b: &Matrix<T>) -> Matrix<T> {
    assert_eq!(a.cols, b.cols);
    if a.rows <= SMALL_ROWS {
        let mut out = Matrix::zeros(a.rows, b.rows);
        for r in 0..a.rows {
            let x = a.row(r);
            for (o, w) in out.row_mut(r).iter_mut().zip(b.data.chunks_exact(b.cols)) {
                *o = dot(x, w);
            }
        }
        return out;
    }
    let mut out = Matrix::zeros(a.rows, b.rows);
    gemm(
        a.rows,
        a.cols,
        b.rows,
        T::one(),
        (&a.data, a.cols, 1),
        (&b.data, 1, b.cols),
        T::zero(),
        (&mut out.data, b.rows, 1),
    );
    out
}

/// `a^T . b` where `a` is `k x m` and `b` is `k x n`.
pub fn matmul_tn<T: Real>(a: &Matrix<T>, b: &Matrix<T>) -> Matrix<T> {
    assert_eq!(a.rows, b.rows);
    let mut out = Matrix::zeros(a.cols, b.cols);
    gemm(
        a.cols,
        a.rows,
        b.cols,
        T::one(),
        (&a.data, 1, a.cols),
        (&b.data, b.cols, 1),
        T::zero(),
        (&mut out.data, b.cols, 1),
    );
    out
}
