//! Compressed sparse row storage and a direct sparse solver.
//!
//! The factorization itself is delegated to `faer`'s sparse LU (partial
//! pivoting on a fill-reducing column ordering). Everything the rest of the
//! crate touches goes through [`SparseMatrix`], which keeps the pattern
//! sorted and duplicate-free so that matrices assembled on the same mesh can
//! be combined entry by entry.

use faer::col::ColMut;
use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};

use crate::error::{Error, Result};

/// Conditioning threshold used to reject numerically singular systems.
///
/// A solve is refused when `|A|_inf |x|_inf > PIVOT_LIMIT |b|_inf`, which is a
/// lower bound on the condition number.
const PIVOT_LIMIT: f64 = 1e14;

/// Relative residual accepted from the direct solve.
const SOLVE_RTOL: f64 = 1e-10;

/// Why a linear solve was rejected.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolveFailure {
    #[error("matrix is structurally or numerically singular")]
    Singular,
    #[error("pivot below threshold (condition estimate {0:.3e})")]
    IllConditioned(f64),
    #[error("residual check failed: |Ax-b| = {residual:.3e} exceeds {bound:.3e}")]
    Inaccurate { residual: f64, bound: f64 },
}

/// Square sparse matrix in CSR form with sorted, unique column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Zero matrix with the given per-row column lists as its pattern.
    pub fn from_pattern(rows: &[Vec<usize>]) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for row in rows {
            let mut cols = row.clone();
            cols.sort_unstable();
            cols.dedup();
            debug_assert!(cols.iter().all(|&c| c < n));
            col_idx.extend_from_slice(&cols);
            row_ptr.push(col_idx.len());
        }
        let nnz = col_idx.len();
        Self {
            n,
            row_ptr,
            col_idx,
            values: vec![0.0; nnz],
        }
    }

    /// Builds a matrix from `(row, col, value)` triplets, summing duplicates.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut rows = vec![Vec::new(); n];
        for &(i, j, _) in triplets {
            assert!(i < n && j < n, "triplet ({i}, {j}) out of range for n = {n}");
            rows[i].push(j);
        }
        let mut m = Self::from_pattern(&rows);
        for &(i, j, v) in triplets {
            m.add(i, j, v);
        }
        m
    }

    pub fn identity(n: usize) -> Self {
        let triplets: Vec<_> = (0..n).map(|i| (i, i, 1.0)).collect();
        Self::from_triplets(n, &triplets)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Iterates `(col, value)` over the stored entries of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    fn position(&self, i: usize, j: usize) -> Option<usize> {
        let start = self.row_ptr[i];
        let cols = &self.col_idx[start..self.row_ptr[i + 1]];
        cols.binary_search(&j).ok().map(|p| start + p)
    }

    /// Adds `v` to entry `(i, j)`.
    ///
    /// # Panics
    ///
    /// Panics if `(i, j)` is not part of the pattern.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let p = self
            .position(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) is not in the sparsity pattern"));
        self.values[p] += v;
    }

    /// Stored value at `(i, j)`, zero outside the pattern.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.position(i, j).map_or(0.0, |p| self.values[p])
    }

    pub fn same_pattern(&self, other: &Self) -> bool {
        self.n == other.n && self.row_ptr == other.row_ptr && self.col_idx == other.col_idx
    }

    /// Returns `self * a + other * b`; both operands must share a pattern.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Self {
        assert!(self.same_pattern(other), "combine requires identical sparsity patterns");
        let mut out = self.clone();
        for (v, w) in out.values.iter_mut().zip(&other.values) {
            *v = a * *v + b * w;
        }
        out
    }

    pub fn scale(&mut self, a: f64) {
        self.values.iter_mut().for_each(|v| *v *= a);
    }

    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: x.len(),
            });
        }
        Ok((0..self.n)
            .map(|i| self.row(i).map(|(j, a)| a * x[j]).sum())
            .collect())
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Entrywise two-norm (Frobenius norm).
    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `max |A_ij - A_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (i, row) in d.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        d
    }

    /// Solves `A x = b` by sparse LU.
    ///
    /// The answer is accepted only if it is finite, the implied condition
    /// estimate stays below the pivot limit, and the residual satisfies
    /// `|Ax - b| <= 1e-10 (|A| |x| + |b|)` in the infinity norm.
    pub fn solve(&self, b: &[f64]) -> std::result::Result<Vec<f64>, SolveFailure> {
        assert_eq!(b.len(), self.n, "right-hand side length mismatch");
        if self.n == 0 {
            return Ok(Vec::new());
        }
        let triplets: Vec<Triplet<usize, usize, f64>> = (0..self.n)
            .flat_map(|i| self.row(i).map(move |(j, v)| Triplet::new(i, j, v)))
            .collect();
        let a = SparseColMat::<usize, f64>::try_new_from_triplets(self.n, self.n, &triplets)
            .map_err(|_| SolveFailure::Singular)?;
        let lu = a.sp_lu().map_err(|_| SolveFailure::Singular)?;
        let mut x = b.to_vec();
        lu.solve_in_place(ColMut::from_slice_mut(&mut x));

        if x.iter().any(|v| !v.is_finite()) {
            return Err(SolveFailure::Singular);
        }
        let norm_a = self.norm_inf();
        let norm_x = inf_norm(&x);
        let norm_b = inf_norm(b);
        if norm_b > 0.0 && norm_a * norm_x > PIVOT_LIMIT * norm_b {
            return Err(SolveFailure::IllConditioned(norm_a * norm_x / norm_b));
        }
        let ax = self.spmv(&x).expect("dimension checked above");
        let residual = ax
            .iter()
            .zip(b)
            .map(|(p, q)| (p - q).abs())
            .fold(0.0, f64::max);
        let bound = SOLVE_RTOL * (norm_a * norm_x + norm_b);
        if residual > bound {
            return Err(SolveFailure::Inaccurate { residual, bound });
        }
        Ok(x)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dense_matvec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
        a.iter().map(|row| dot(row, x)).collect()
    }

    /// Gaussian elimination with partial pivoting, used as an oracle.
    fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))
                .unwrap();
            a.swap(k, p);
            b.swap(k, p);
            for i in k + 1..n {
                let l = a[i][k] / a[k][k];
                for j in k..n {
                    a[i][j] -= l * a[k][j];
                }
                b[i] -= l * b[k];
            }
        }
        let mut x = vec![0.0; n];
        for k in (0..n).rev() {
            let s: f64 = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
            x[k] = (b[k] - s) / a[k][k];
        }
        x
    }

    fn random_sparse(n: usize, fill: f64, diag_boost: f64, rng: &mut ChaCha8Rng) -> SparseMatrix {
        let mut trips = Vec::new();
        for i in 0..n {
            let mut row_sum = 0.0;
            for j in 0..n {
                if i != j && rng.gen::<f64>() < fill {
                    let v = rng.gen_range(-1.0..1.0);
                    row_sum += f64::abs(v);
                    trips.push((i, j, v));
                }
            }
            trips.push((i, i, row_sum * diag_boost + 1.0));
        }
        SparseMatrix::from_triplets(n, &trips)
    }

    #[test]
    fn identity_spmv_is_identity() {
        let x = vec![1.0, -2.0, 3.5];
        assert_eq!(SparseMatrix::identity(3).spmv(&x).unwrap(), x);
    }

    #[test]
    fn zero_matrix_spmv_is_zero() {
        let a = SparseMatrix::from_pattern(&[vec![0, 1], vec![1], vec![0, 2]]);
        assert_eq!(a.spmv(&[1.0, 2.0, 3.0]).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn spmv_rejects_wrong_length() {
        let a = SparseMatrix::identity(3);
        assert!(matches!(
            a.spmv(&[1.0]),
            Err(Error::DimensionMismatch { expected: 3, found: 1 })
        ));
    }

    #[test]
    fn spmv_matches_dense_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_sparse(50, 0.1, 0.0, &mut rng);
        let x: Vec<f64> = (0..50).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let sparse = a.spmv(&x).unwrap();
        let dense = dense_matvec(&a.to_dense(), &x);
        for (s, d) in sparse.iter().zip(&dense) {
            assert!((s - d).abs() <= 1e-13 * (1.0 + d.abs()));
        }
    }

    #[test]
    fn duplicate_triplets_are_summed() {
        let a = SparseMatrix::from_triplets(2, &[(0, 0, 1.0), (0, 0, 2.0), (1, 0, 4.0)]);
        assert_eq!(a.get(0, 0), 3.0);
        assert_eq!(a.get(1, 0), 4.0);
        assert_eq!(a.get(1, 1), 0.0);
        assert_eq!(a.nnz(), 2);
    }

    #[test]
    fn solve_spd_meets_residual_contract() {
        // 1D Laplacian, SPD.
        let n = 40;
        let mut trips = Vec::new();
        for i in 0..n {
            trips.push((i, i, 2.0));
            if i > 0 {
                trips.push((i, i - 1, -1.0));
                trips.push((i - 1, i, -1.0));
            }
        }
        let a = SparseMatrix::from_triplets(n, &trips);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = a.solve(&b).unwrap();
        let r: Vec<f64> = a.spmv(&x).unwrap().iter().zip(&b).map(|(p, q)| p - q).collect();
        assert!(inf_norm(&r) <= 1e-10 * (a.norm_inf() * inf_norm(&x) + inf_norm(&b)));
    }

    #[test]
    fn solve_rejects_singular_matrix() {
        let a = SparseMatrix::from_triplets(
            3,
            &[
                (0, 0, 1.0),
                (0, 1, 2.0),
                (1, 0, 1.0),
                (1, 1, 2.0),
                (2, 2, 1.0),
            ],
        );
        assert!(a.solve(&[1.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn solve_matches_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_sparse(200, 0.03, 1.5, &mut rng);
        let b: Vec<f64> = (0..200).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = a.solve(&b).unwrap();
        let x_ref = dense_solve(a.to_dense(), b);
        let err = x.iter().zip(&x_ref).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        assert!(err <= 1e-9 * inf_norm(&x_ref));
    }

    #[test]
    fn solve_handles_nonsymmetric_systems() {
        let a = SparseMatrix::from_triplets(
            3,
            &[(0, 0, 4.0), (0, 2, 1.0), (1, 0, -2.0), (1, 1, 5.0), (2, 1, 3.0), (2, 2, 6.0)],
        );
        let x_true = [1.0, -1.0, 2.0];
        let b = a.spmv(&x_true).unwrap();
        let x = a.solve(&b).unwrap();
        for (p, q) in x.iter().zip(&x_true) {
            assert!((p - q).abs() < 1e-13);
        }
    }

    proptest::proptest! {
        #[test]
        fn solve_inverts_spmv(seed in 0u64..500, n in 2usize..60) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_sparse(n, 0.15, 1.2, &mut rng);
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let b = a.spmv(&x).unwrap();
            let y = a.solve(&b).unwrap();
            let err = x.iter().zip(&y).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
            proptest::prop_assert!(err <= 1e-9 * inf_norm(&x));
        }
    }
}
