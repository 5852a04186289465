//! Small dense and sparse matrix kernels used by the embedding.
//!
//! All reductions run in a fixed sequential order so results are bitwise
//! reproducible.

use alloc::vec;
use alloc::vec::Vec;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Dense {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Dense {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Dense { rows, cols, data }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "dense matrix shape mismatch");
        Dense { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `self += alpha * other`
    pub fn axpy(&mut self, alpha: f64, other: &Dense) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        self.data.iter_mut().for_each(|v| *v *= alpha);
    }

    /// `self * other`
    pub fn matmul(&self, other: &Dense) -> Dense {
        assert_eq!(self.cols, other.rows);
        let mut out = Dense::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `selfᵀ * self`
    pub fn gram(&self) -> Dense {
        let c = self.cols;
        let mut out = Dense::zeros(c, c);
        for i in 0..self.rows {
            let r = self.row(i);
            for a in 0..c {
                let ra = r[a];
                if ra == 0.0 {
                    continue;
                }
                let dst = &mut out.data[a * c..(a + 1) * c];
                for b in a..c {
                    dst[b] += ra * r[b];
                }
            }
        }
        for a in 0..c {
            for b in 0..a {
                out.data[a * c + b] = out.data[b * c + a];
            }
        }
        out
    }

    pub fn transpose(&self) -> Dense {
        Dense::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    /// Scales every non-zero row to unit L2 norm. Returns the index of the
    /// first all-zero row, if any.
    pub fn normalize_rows(&mut self) -> Option<usize> {
        let mut first_zero = None;
        for i in 0..self.rows {
            let row = self.row_mut(i);
            let norm = libm::sqrt(row.iter().map(|v| v * v).sum::<f64>());
            if norm > 0.0 {
                row.iter_mut().for_each(|v| *v /= norm);
            } else if first_zero.is_none() {
                first_zero = Some(i);
            }
        }
        first_zero
    }
}

/// Replaces the columns of `m` by an orthonormal basis of their span
/// (modified Gram-Schmidt, applied twice). Columns that are numerically
/// dependent on earlier ones become zero.
pub fn orthonormalize_columns(m: &Dense) -> Dense {
    let (n, c) = (m.rows, m.cols);
    let mut cols: Vec<Vec<f64>> = (0..c)
        .map(|j| (0..n).map(|i| m.get(i, j)).collect())
        .collect();
    for j in 0..c {
        let original = norm(&cols[j]);
        for _ in 0..2 {
            for k in 0..j {
                let (done, rest) = cols.split_at_mut(j);
                let proj = dot(&done[k], &rest[0]);
                if proj != 0.0 {
                    for (x, q) in rest[0].iter_mut().zip(&done[k]) {
                        *x -= proj * q;
                    }
                }
            }
        }
        let nrm = norm(&cols[j]);
        if nrm > 1e-10 * original && nrm > 0.0 {
            cols[j].iter_mut().for_each(|x| *x /= nrm);
        } else {
            cols[j].iter_mut().for_each(|x| *x = 0.0);
        }
    }
    Dense::from_fn(n, c, |i, j| cols[j][i])
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in descending order and the matching eigenvectors as
/// columns.
pub fn symmetric_eigen(a: &Dense) -> (Vec<f64>, Dense) {
    let n = a.rows;
    assert_eq!(n, a.cols, "symmetric_eigen needs a square matrix");
    let mut m = a.clone();
    let mut v = Dense::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 });
    let scale: f64 = m.data.iter().map(|x| x * x).sum();
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += m.get(p, q) * m.get(p, q);
            }
        }
        if off <= 1e-30 * scale || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let app = m.get(p, p);
                let aqq = m.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = libm::copysign(1.0, theta)
                    / (libm::fabs(theta) + libm::sqrt(theta * theta + 1.0));
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..n {
                    let mkp = m.get(k, p);
                    let mkq = m.get(k, q);
                    m.set(k, p, c * mkp - s * mkq);
                    m.set(k, q, s * mkp + c * mkq);
                }
                for k in 0..n {
                    let mpk = m.get(p, k);
                    let mqk = m.get(q, k);
                    m.set(p, k, c * mpk - s * mqk);
                    m.set(q, k, s * mpk + c * mqk);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m.get(j, j).total_cmp(&m.get(i, i)).then(i.cmp(&j)));
    let values = order.iter().map(|&i| m.get(i, i)).collect();
    let vectors = Dense::from_fn(n, n, |r, c| v.get(r, order[c]));
    (values, vectors)
}

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Csr {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<f64>,
}

impl Csr {
    /// Builds from `(row, col, value)` triplets; duplicates are summed and
    /// columns within a row are sorted.
    pub fn from_triplets(rows: usize, cols: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by_key(|t| (t.0, t.1));
        let mut indptr = vec![0usize; rows + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut data: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            assert!(r < rows && c < cols, "triplet out of bounds");
            if last == Some((r, c)) {
                *data.last_mut().expect("previous entry") += v;
                continue;
            }
            indices.push(c);
            data.push(v);
            indptr[r + 1] += 1;
            last = Some((r, c));
        }
        for r in 0..rows {
            indptr[r + 1] += indptr[r];
        }
        Csr {
            rows,
            cols,
            indptr,
            indices,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    /// `(col, value)` pairs of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.indptr[i]..self.indptr[i + 1];
        self.indices[span.clone()]
            .iter()
            .copied()
            .zip(self.data[span].iter().copied())
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.data[self.indptr[i]..self.indptr[i + 1]].iter().sum()
    }

    /// Applies `f(row, col, value)` to every stored entry.
    pub fn map_values(&self, mut f: impl FnMut(usize, usize, f64) -> f64) -> Csr {
        let mut out = self.clone();
        for r in 0..self.rows {
            for k in self.indptr[r]..self.indptr[r + 1] {
                out.data[k] = f(r, self.indices[k], self.data[k]);
            }
        }
        out
    }

    pub fn transpose(&self) -> Csr {
        let mut triplets = Vec::with_capacity(self.nnz());
        for r in 0..self.rows {
            for (c, v) in self.row(r) {
                triplets.push((c, r, v));
            }
        }
        Csr::from_triplets(self.cols, self.rows, triplets)
    }

    /// `self * x` for a dense `x`.
    pub fn mul_dense(&self, x: &Dense) -> Dense {
        assert_eq!(self.cols, x.rows, "sparse-dense shape mismatch");
        let mut out = Dense::zeros(self.rows, x.cols);
        for r in 0..self.rows {
            let dst = out.row_mut(r);
            for (c, v) in self.row(r) {
                for (o, &b) in dst.iter_mut().zip(x.row(c)) {
                    *o += v * b;
                }
            }
        }
        out
    }

    pub fn to_dense(&self) -> Dense {
        let mut out = Dense::zeros(self.rows, self.cols);
        for r in 0..self.rows {
            for (c, v) in self.row(r) {
                out.set(r, c, v);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csr_sums_duplicates_and_multiplies() {
        let a = Csr::from_triplets(
            2,
            3,
            vec![(1, 2, 1.0), (0, 0, 2.0), (1, 2, 0.5), (0, 1, -1.0)],
        );
        assert_eq!(a.nnz(), 3);
        let x = Dense::from_row_major(3, 1, vec![1.0, 2.0, 3.0]);
        assert_eq!(a.mul_dense(&x).as_slice(), &[0.0, 4.5]);
        assert_eq!(a.transpose().to_dense(), a.to_dense().transpose());
    }

    #[test]
    fn gram_matches_matmul() {
        let m = Dense::from_fn(5, 3, |i, j| (i * 3 + j) as f64 - 4.0);
        assert_eq!(m.gram(), m.transpose().matmul(&m));
    }

    #[test]
    fn orthonormal_columns() {
        let m = Dense::from_fn(6, 3, |i, j| {
            libm::sin((i * i * 7 + j * j * 3 + i * j) as f64)
        });
        let q = orthonormalize_columns(&m);
        let g = q.gram();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((g.get(i, j) - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dependent_columns_become_zero() {
        let m = Dense::from_fn(4, 2, |i, _| i as f64 + 1.0);
        let q = orthonormalize_columns(&m);
        assert!((0..4).all(|i| q.get(i, 1) == 0.0));
    }

    #[test]
    fn jacobi_eigen_reconstructs() {
        let b = Dense::from_fn(4, 4, |i, j| libm::cos((i + 2 * j) as f64));
        let a = b.gram();
        let (vals, vecs) = symmetric_eigen(&a);
        assert!(vals.windows(2).all(|w| w[0] >= w[1]));
        let lambda = Dense::from_fn(4, 4, |i, j| if i == j { vals[i] } else { 0.0 });
        let back = vecs.matmul(&lambda).matmul(&vecs.transpose());
        for (x, y) in back.as_slice().iter().zip(a.as_slice()) {
            assert!((x - y).abs() < 1e-10);
        }
    }
}
