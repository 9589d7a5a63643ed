//! Packed symmetric/triangular kernels used by the GP solver.
//!
//! Kernel matrices are symmetric positive (semi-)definite, so only the
//! lower triangle is stored, row-major: row `i` occupies
//! `data[i*(i+1)/2 .. i*(i+1)/2 + i + 1]`. Every inner loop below walks
//! rows contiguously; the transposed solve uses the axpy form instead of
//! column gathers for the same reason.

use alloc::vec;
use alloc::vec::Vec;

use crate::fmath;

/// Dot product with four accumulators. The reassociation changes the
/// rounding relative to a strict left fold but is itself deterministic,
/// which is what reproducibility requires.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    let (a4, a_tail) = a.split_at(chunks * 4);
    let (b4, b_tail) = b.split_at(chunks * 4);
    for (ca, cb) in a4.chunks_exact(4).zip(b4.chunks_exact(4)) {
        acc[0] += ca[0] * cb[0];
        acc[1] += ca[1] * cb[1];
        acc[2] += ca[2] * cb[2];
        acc[3] += ca[3] * cb[3];
    }
    let mut tail = 0.0;
    for (x, y) in a_tail.iter().zip(b_tail) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Row-major packed lower triangle of a symmetric `n x n` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PackedLower {
    n: usize,
    data: Vec<f64>,
}

#[inline]
fn row_offset(i: usize) -> usize {
    i * (i + 1) / 2
}

impl PackedLower {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; row_offset(n)],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[row_offset(i)..row_offset(i) + i + 1]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[row_offset(i)..row_offset(i) + i + 1]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(j <= i);
        self.data[row_offset(i) + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(j <= i);
        self.data[row_offset(i) + j] = v;
    }

    pub fn add_to_diagonal(&mut self, v: f64) {
        for i in 0..self.n {
            self.data[row_offset(i) + i] += v;
        }
    }

    /// In-place Cholesky factorization, `self = L L^T` on success.
    /// Returns the failing pivot row when the matrix is not numerically
    /// positive definite; contents are unspecified after a failure.
    pub fn cholesky_in_place(&mut self) -> Result<(), usize> {
        let n = self.n;
        for i in 0..n {
            let (head, tail) = self.data.split_at_mut(row_offset(i));
            let row_i = &mut tail[..i + 1];
            for j in 0..i {
                let row_j = &head[row_offset(j)..row_offset(j) + j + 1];
                let s = dot(&row_i[..j], &row_j[..j]);
                row_i[j] = (row_i[j] - s) / row_j[j];
            }
            let d = row_i[i] - dot(&row_i[..i], &row_i[..i]);
            if !(d.is_finite() && d > 0.0) {
                return Err(i);
            }
            row_i[i] = fmath::sqrt(d);
        }
        Ok(())
    }

    /// Solves `L z = b` in place (forward substitution).
    pub fn solve_lower(&self, b: &mut [f64]) {
        debug_assert_eq!(b.len(), self.n);
        for i in 0..self.n {
            let row = self.row(i);
            let s = dot(&row[..i], &b[..i]);
            b[i] = (b[i] - s) / row[i];
        }
    }

    /// Solves `L^T x = b` in place (back substitution, axpy form so the
    /// triangle is still traversed row-contiguously).
    pub fn solve_transposed(&self, b: &mut [f64]) {
        debug_assert_eq!(b.len(), self.n);
        for i in (0..self.n).rev() {
            let row = self.row(i);
            let xi = b[i] / row[i];
            b[i] = xi;
            for (bj, lij) in b[..i].iter_mut().zip(&row[..i]) {
                *bj -= xi * lij;
            }
        }
    }

    /// Solves `L L^T x = b` in place.
    pub fn solve(&self, b: &mut [f64]) {
        self.solve_lower(b);
        self.solve_transposed(b);
    }

    /// `log det(L L^T)`.
    pub fn logdet(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            s += fmath::ln(self.get(i, i));
        }
        2.0 * s
    }

    /// Packed inverse of `A = L L^T`.
    ///
    /// Columns of `L^-1` are obtained by forward solves against unit
    /// vectors and stored as rows of an intermediate buffer, so that
    /// `A^-1_ij = sum_m M_mi M_mj` reduces to contiguous dots.
    pub fn inverse_of_factored(&self) -> PackedLower {
        let n = self.n;
        // minv_rows[i] holds column i of L^-1, entries m = i..n.
        let mut minv = vec![0.0f64; n * n];
        let mut col = vec![0.0f64; n];
        for i in 0..n {
            col[..i].iter_mut().for_each(|v| *v = 0.0);
            col[i] = 1.0 / self.get(i, i);
            for m in i + 1..n {
                let row = self.row(m);
                let s = dot(&row[i..m], &col[i..m]);
                col[m] = -s / row[m];
            }
            minv[i * n + i..(i + 1) * n].copy_from_slice(&col[i..]);
        }
        let mut out = PackedLower::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                // Entries of both columns vanish before row i (i >= j).
                let a = &minv[i * n + i..(i + 1) * n];
                let b = &minv[j * n + i..j * n + n];
                out.set(i, j, dot(a, b));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// 3x3 SPD matrix with a Cholesky factor that is exact in binary
    /// floating point: A = L L^T for L = [[2,0,0],[1,3,0],[0.5,1,1.5]].
    fn spd3() -> PackedLower {
        let mut a = PackedLower::zeros(3);
        a.set(0, 0, 4.0);
        a.set(1, 0, 2.0);
        a.set(1, 1, 10.0);
        a.set(2, 0, 1.0);
        a.set(2, 1, 3.5);
        a.set(2, 2, 3.5);
        a
    }

    #[test]
    fn cholesky_recovers_exact_factor() {
        let mut a = spd3();
        a.cholesky_in_place().unwrap();
        assert_eq!(a.get(0, 0), 2.0);
        assert_eq!(a.get(1, 0), 1.0);
        assert_eq!(a.get(1, 1), 3.0);
        assert_eq!(a.get(2, 0), 0.5);
        assert_eq!(a.get(2, 1), 1.0);
        assert_eq!(a.get(2, 2), 1.5);
    }

    #[test]
    fn cholesky_rejects_indefinite_matrix() {
        let mut a = PackedLower::zeros(2);
        a.set(0, 0, 1.0);
        a.set(1, 0, 2.0);
        a.set(1, 1, 1.0); // leading minor ok, determinant negative
        assert_eq!(a.cholesky_in_place(), Err(1));
    }

    #[test]
    fn solve_inverts_the_factorization() {
        let mut a = spd3();
        a.cholesky_in_place().unwrap();
        // b = A * [1, -2, 3]^T computed by hand.
        let mut b = [3.0, -7.5, 4.5];
        a.solve(&mut b);
        assert_relative_eq!(b[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(b[1], -2.0, epsilon = 1e-12);
        assert_relative_eq!(b[2], 3.0, epsilon = 1e-12);
    }

    #[test]
    fn logdet_matches_product_of_pivots() {
        let mut a = spd3();
        a.cholesky_in_place().unwrap();
        // det(A) = (2*3*1.5)^2 = 81
        assert_relative_eq!(a.logdet(), 81.0f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn packed_inverse_matches_identity_product() {
        let mut a = spd3();
        let orig = a.clone();
        a.cholesky_in_place().unwrap();
        let inv = a.inverse_of_factored();
        // A * A^-1 = I, checked entrywise from the packed halves.
        let full = |m: &PackedLower, i: usize, j: usize| {
            if i >= j {
                m.get(i, j)
            } else {
                m.get(j, i)
            }
        };
        for i in 0..3 {
            for j in 0..3 {
                let mut s = 0.0;
                for k in 0..3 {
                    s += full(&orig, i, k) * full(&inv, k, j);
                }
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_relative_eq!(s, expect, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn dot_handles_tail_lengths() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0];
        let b = [1.0; 7];
        assert_eq!(dot(&a, &b), 28.0);
        assert_eq!(dot(&a[..3], &b[..3]), 6.0);
        assert_eq!(dot(&[], &[]), 0.0);
    }
}
