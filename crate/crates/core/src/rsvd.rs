//! Randomized truncated SVD of a sparse matrix.
//!
//! Range finder with a Gaussian test matrix, `q` rounds of orthonormalized
//! power iteration, then an exact eigen-decomposition of the small
//! `l × l` Gram matrix of the projected problem.

use alloc::vec::Vec;

use crate::linalg::{orthonormalize_columns, symmetric_eigen, Csr, Dense};

/// Counter-based Gaussian source: the same `(key, row_key, col)` always
/// yields the same value, independent of draw order.
#[derive(Debug, Clone, Copy)]
pub struct GaussianSource {
    key: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl GaussianSource {
    pub fn new(seed: u64, digest: &[u8; 32]) -> Self {
        let mut key = splitmix64(seed);
        for chunk in digest.chunks_exact(8) {
            let word = u64::from_le_bytes(chunk.try_into().expect("8-byte chunk"));
            key = splitmix64(key ^ word);
        }
        GaussianSource { key }
    }

    /// Standard normal sample for cell `(row_key, col)` via Box-Muller.
    pub fn sample(&self, row_key: u64, col: u64) -> f64 {
        let base = splitmix64(self.key ^ splitmix64(row_key ^ splitmix64(col)));
        let a = splitmix64(base);
        let b = splitmix64(base ^ 0x5851_f42d_4c95_7f2d);
        // (0, 1] so the log is finite
        let u1 = ((a >> 11) as f64 + 1.0) / (1u64 << 53) as f64;
        let u2 = (b >> 11) as f64 / (1u64 << 53) as f64;
        libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(2.0 * core::f64::consts::PI * u2)
    }
}

/// FNV-1a, used to key Gaussian rows by node label rather than position.
pub fn label_key(label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

#[derive(Debug, Clone)]
pub struct TruncatedSvd {
    /// `m × rank` left singular vectors; columns past the numerical rank
    /// are zero.
    pub u: Dense,
    /// Descending singular values, zero-padded to `rank`.
    pub singular_values: Vec<f64>,
}

/// Rank-`rank` randomized SVD of `m`.
///
/// `row_keys[j]` keys row `j` of the `cols × (rank + oversample)` Gaussian
/// test matrix.
pub fn randomized_svd(
    m: &Csr,
    rank: usize,
    oversample: usize,
    power_iters: usize,
    source: &GaussianSource,
    row_keys: &[u64],
) -> TruncatedSvd {
    assert_eq!(
        row_keys.len(),
        m.cols(),
        "one Gaussian row key per column of m"
    );
    let width = (rank + oversample).min(m.rows()).min(m.cols()).max(1);
    let omega = Dense::from_fn(m.cols(), width, |i, j| source.sample(row_keys[i], j as u64));
    let mt = m.transpose();

    let mut q = orthonormalize_columns(&m.mul_dense(&omega));
    for _ in 0..power_iters {
        let z = orthonormalize_columns(&mt.mul_dense(&q));
        q = orthonormalize_columns(&m.mul_dense(&z));
    }

    // B = Qᵀ M is width × cols; B Bᵀ = Cᵀ C with C = Mᵀ Q.
    let c = mt.mul_dense(&q);
    let (eigvals, w) = symmetric_eigen(&c.gram());
    let mut u_all = q.matmul(&w);
    fix_signs(&mut u_all, row_keys);

    let mut u = Dense::zeros(m.rows(), rank);
    let mut singular_values = Vec::with_capacity(rank);
    for (j, &lambda) in eigvals
        .iter()
        .chain(core::iter::repeat(&0.0))
        .take(rank)
        .enumerate()
    {
        if j < width {
            singular_values.push(libm::sqrt(lambda.max(0.0)));
            for i in 0..m.rows() {
                u.set(i, j, u_all.get(i, j));
            }
        } else {
            singular_values.push(0.0);
        }
    }
    TruncatedSvd { u, singular_values }
}

/// Flips each column so that its largest-magnitude entry is positive. Near
/// ties go to the smaller row key, so the choice does not depend on row
/// order.
fn fix_signs(u: &mut Dense, row_keys: &[u64]) {
    for j in 0..u.cols() {
        let top = (0..u.rows()).map(|i| u.get(i, j).abs()).fold(0.0, f64::max);
        let pivot = (0..u.rows())
            .filter(|&i| u.get(i, j).abs() >= top * (1.0 - 1e-9))
            .min_by_key(|&i| row_keys[i]);
        if let Some(i) = pivot {
            if u.get(i, j) < 0.0 {
                for r in 0..u.rows() {
                    let v = u.get(r, j);
                    u.set(r, j, -v);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn gaussian_source_is_counter_based() {
        let src = GaussianSource::new(42, &[7u8; 32]);
        let a = src.sample(3, 5);
        let _ = src.sample(99, 1);
        assert_eq!(a, src.sample(3, 5));
        assert_ne!(a, src.sample(5, 3));
        assert_ne!(a, GaussianSource::new(43, &[7u8; 32]).sample(3, 5));
    }

    #[test]
    fn gaussian_moments() {
        let src = GaussianSource::new(1, &[0u8; 32]);
        let n = 20000;
        let xs: Vec<f64> = (0..n).map(|i| src.sample(i, 0)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.03, "mean {mean}");
        assert!((var - 1.0).abs() < 0.05, "var {var}");
    }

    #[test]
    fn diagonal_matrix_singular_values() {
        let m = Csr::from_triplets(
            5,
            5,
            vec![
                (0, 0, 5.0),
                (1, 1, 4.0),
                (2, 2, 3.0),
                (3, 3, 2.0),
                (4, 4, 1.0),
            ],
        );
        let keys: Vec<u64> = (0..5).collect();
        let svd = randomized_svd(&m, 3, 2, 2, &GaussianSource::new(0, &[0; 32]), &keys);
        for (got, want) in svd.singular_values.iter().zip([5.0, 4.0, 3.0]) {
            assert!((got - want).abs() < 1e-10, "{got} vs {want}");
        }
    }

    #[test]
    fn rank_larger_than_matrix_is_zero_padded() {
        let m = Csr::from_triplets(2, 2, vec![(0, 1, 1.0), (1, 0, 1.0)]);
        let svd = randomized_svd(&m, 4, 10, 5, &GaussianSource::new(0, &[0; 32]), &[0, 1]);
        assert_eq!(svd.singular_values.len(), 4);
        assert!((svd.singular_values[0] - 1.0).abs() < 1e-12);
        assert!((svd.singular_values[1] - 1.0).abs() < 1e-12);
        assert_eq!(&svd.singular_values[2..], &[0.0, 0.0]);
        assert_eq!(svd.u.cols(), 4);
    }
}
