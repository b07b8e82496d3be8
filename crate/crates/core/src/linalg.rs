use alloc::vec::Vec;

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix,
/// stored as packed rows (row `i` holds `i + 1` entries).
///
/// Row `i` of the factor depends only on rows `0..=i` of the matrix, so a
/// factor grown row by row with [`extend`](Cholesky::extend) is identical to
/// one computed in a single pass.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

#[inline]
fn row_start(i: usize) -> usize {
    i * (i + 1) / 2
}

impl Cholesky {
    pub(crate) fn empty() -> Cholesky {
        Cholesky { n: 0, l: Vec::new() }
    }

    #[cfg(test)]
    /// Factorizes the row-major `n x n` matrix `a`, reading only its lower
    /// triangle. Returns `None` if a pivot is not strictly positive.
    pub(crate) fn factor(n: usize, a: &[f64]) -> Option<Cholesky> {
        debug_assert_eq!(a.len(), n * n);
        let mut chol = Cholesky::empty();
        for i in 0..n {
            if !chol.extend(&a[i * n..i * n + i + 1]) {
                return None;
            }
        }
        Some(chol)
    }

    /// Appends one matrix row: `row` holds its `dim() + 1` lower-triangle
    /// entries, diagonal last. On a non-positive pivot the factor is left
    /// unchanged and `false` is returned.
    pub(crate) fn extend(&mut self, row: &[f64]) -> bool {
        let n = self.n;
        debug_assert_eq!(row.len(), n + 1);
        let start = self.l.len();
        self.l.reserve(n + 1);
        for j in 0..n {
            let rj = &self.l[row_start(j)..row_start(j) + j + 1];
            let v = row[j] - dot(&self.l[start..start + j], &rj[..j]);
            let value = v / rj[j];
            self.l.push(value);
        }
        let v = row[n] - dot(&self.l[start..], &self.l[start..]);
        if v <= 0.0 || !v.is_finite() {
            self.l.truncate(start);
            return false;
        }
        self.l.push(libm::sqrt(v));
        self.n += 1;
        true
    }

    pub(crate) fn dim(&self) -> usize {
        self.n
    }

    /// Solves `L x = b` in place.
    pub(crate) fn forward_solve(&self, b: &mut [f64]) {
        debug_assert_eq!(b.len(), self.n);
        for i in 0..self.n {
            let row = &self.l[row_start(i)..row_start(i) + i + 1];
            b[i] = (b[i] - dot(&row[..i], &b[..i])) / row[i];
        }
    }

    /// Solves `L^T x = b` in place.
    #[cfg(test)]
    pub(crate) fn backward_solve(&self, b: &mut [f64]) {
        let n = self.n;
        debug_assert_eq!(b.len(), n);
        for i in (0..n).rev() {
            let tail: f64 = (i + 1..n).map(|k| self.l[row_start(k) + i] * b[k]).sum();
            b[i] = (b[i] - tail) / self.l[row_start(i) + i];
        }
    }

    pub(crate) fn log_det(&self) -> f64 {
        2.0 * (0..self.n).map(|i| libm::log(self.l[row_start(i) + i])).sum::<f64>()
    }
}

const LANES: usize = 8;

/// Reduces `f` over paired elements with independent accumulators so the
/// loop vectorizes.
#[inline(always)]
fn lanes_sum(a: &[f64], b: &[f64], f: impl Fn(f64, f64) -> f64) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0; LANES];
    let mut ca = a.chunks_exact(LANES);
    let mut cb = b.chunks_exact(LANES);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for k in 0..LANES {
            acc[k] += f(x[k], y[k]);
        }
    }
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(&x, &y)| f(x, y)).sum();
    acc.iter().sum::<f64>() + tail
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    lanes_sum(a, b, |x, y| x * y)
}

#[inline]
pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    lanes_sum(a, b, |x, y| (x - y) * (x - y))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factor_and_solve_small_system() {
        // A = [[4, 2, 0.4], [2, 5, 1], [0.4, 1, 3]]
        let a = [4.0, 2.0, 0.4, 2.0, 5.0, 1.0, 0.4, 1.0, 3.0];
        let chol = Cholesky::factor(3, &a).unwrap();
        let x_true = [1.0, -2.0, 0.5];
        let mut b: Vec<f64> = (0..3).map(|i| dot(&a[i * 3..i * 3 + 3], &x_true)).collect();
        chol.forward_solve(&mut b);
        chol.backward_solve(&mut b);
        for (x, t) in b.iter().zip(x_true) {
            assert!((x - t).abs() < 1e-12);
        }
        // det by cofactor expansion: 4*(15-1) - 2*(6-0.4) + 0.4*(2-2) = 44.8
        assert!((chol.log_det() - libm::log(44.8)).abs() < 1e-12);
    }

    #[test]
    fn extension_matches_full_factor() {
        let a = [4.0, 2.0, 0.4, 2.0, 5.0, 1.0, 0.4, 1.0, 3.0];
        let full = Cholesky::factor(3, &a).unwrap();
        let mut grown = Cholesky::factor(2, &[4.0, 2.0, 2.0, 5.0]).unwrap();
        assert!(!grown.extend(&[0.4, 1.0, -1.0]));
        assert_eq!(grown.dim(), 2);
        assert!(grown.extend(&[0.4, 1.0, 3.0]));
        assert_eq!(grown, full);
    }

    #[test]
    fn rejects_indefinite_matrix() {
        assert!(Cholesky::factor(2, &[1.0, 2.0, 2.0, 1.0]).is_none());
        assert!(Cholesky::factor(2, &[1.0, 1.0, 1.0, 1.0]).is_none());
    }
}
