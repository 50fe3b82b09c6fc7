//! Dense symmetric linear algebra on top of `nalgebra`.
//!
//! [`SymMatrix`] keeps a full dense buffer but only ever exposes symmetric
//! updates, so symmetry holds by construction.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    data: DMatrix<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        SymMatrix {
            data: DMatrix::zeros(n, n),
        }
    }

    pub fn identity(n: usize) -> Self {
        SymMatrix {
            data: DMatrix::identity(n, n),
        }
    }

    pub fn ones(n: usize) -> Self {
        SymMatrix {
            data: DMatrix::from_element(n, n, 1.0),
        }
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        SymMatrix {
            data: DMatrix::from_diagonal(&DVector::from_column_slice(d)),
        }
    }

    /// Symmetric part `(A + Aᵀ)/2` of a square matrix.
    pub fn from_dense(a: DMatrix<f64>) -> Self {
        assert_eq!(a.nrows(), a.ncols(), "matrix must be square");
        let t = a.transpose();
        SymMatrix { data: (a + t) * 0.5 }
    }

    /// From row-major rows; the strict lower triangle is ignored.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let mut m = SymMatrix::zeros(n);
        for i in 0..n {
            assert_eq!(rows[i].len(), n, "row {i} has wrong length");
            for j in i..n {
                m.set(i, j, rows[i][j]);
            }
        }
        m
    }

    pub fn order(&self) -> usize {
        self.data.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[(i, j)]
    }

    /// Sets both `(i, j)` and `(j, i)`.
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[(i, j)] = value;
        self.data[(j, i)] = value;
    }

    /// Adds `value` to `(i, j)` and, off the diagonal, to `(j, i)`.
    pub fn add_at(&mut self, i: usize, j: usize, value: f64) {
        self.data[(i, j)] += value;
        if i != j {
            self.data[(j, i)] += value;
        }
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.data
    }

    pub fn trace(&self) -> f64 {
        self.data.trace()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.norm()
    }

    /// Frobenius inner product.
    pub fn dot(&self, other: &SymMatrix) -> f64 {
        self.data.dot(&other.data)
    }

    pub fn sum(&self) -> f64 {
        self.data.sum()
    }

    pub fn scaled(&self, alpha: f64) -> SymMatrix {
        SymMatrix {
            data: &self.data * alpha,
        }
    }

    pub fn add(&self, other: &SymMatrix) -> SymMatrix {
        SymMatrix {
            data: &self.data + &other.data,
        }
    }

    pub fn sub(&self, other: &SymMatrix) -> SymMatrix {
        SymMatrix {
            data: &self.data - &other.data,
        }
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &SymMatrix) {
        self.data.zip_apply(&other.data, |a, b| *a += alpha * b);
    }

    pub fn check_finite(&self) -> Result<()> {
        for j in 0..self.order() {
            for i in 0..self.order() {
                if !self.data[(i, j)].is_finite() {
                    return Err(Error::NonFinite(i, j));
                }
            }
        }
        Ok(())
    }

    pub fn min_eigenvalue(&self) -> f64 {
        if self.order() == 0 {
            return 0.0;
        }
        SymmetricEigen::new(self.data.clone())
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Principal submatrix on `indices`.
    pub fn submatrix(&self, indices: &[usize]) -> SymMatrix {
        let k = indices.len();
        SymMatrix {
            data: DMatrix::from_fn(k, k, |i, j| self.data[(indices[i], indices[j])]),
        }
    }
}

impl Serialize for SymMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = self.data.row_iter().map(|r| r.iter().copied().collect()).collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for SymMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        if rows.iter().any(|r| r.len() != rows.len()) {
            return Err(serde::de::Error::custom("matrix rows must be square"));
        }
        Ok(SymMatrix::from_rows(&rows))
    }
}

/// Eigen-decomposition with eigenvalues ascending and matching orthonormal
/// eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<f64>,
}

impl SpectralDecomposition {
    pub fn reconstruct(&self) -> SymMatrix {
        self.reconstruct_with(|l| l)
    }

    /// `V f(Λ) Vᵀ`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let n = self.eigenvalues.len();
        let mut scaled = self.eigenvectors.clone();
        for (j, &l) in self.eigenvalues.iter().enumerate() {
            let fl = f(l);
            for i in 0..n {
                scaled[(i, j)] *= fl;
            }
        }
        SymMatrix::from_dense(&scaled * self.eigenvectors.transpose())
    }

    pub fn eigenvector(&self, j: usize) -> DVector<f64> {
        self.eigenvectors.column(j).into_owned()
    }
}

/// Full symmetric eigen-decomposition (Householder tridiagonalization followed
/// by implicit symmetric QR).
pub fn eigh(a: &SymMatrix) -> Result<SpectralDecomposition> {
    a.check_finite()?;
    let n = a.order();
    if n == 0 {
        return Ok(SpectralDecomposition {
            eigenvalues: Vec::new(),
            eigenvectors: DMatrix::zeros(0, 0),
        });
    }
    let eig = SymmetricEigen::new(a.as_matrix().clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let eigenvectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Frobenius-nearest positive semidefinite matrix: negative eigenvalues are
/// clamped to exactly zero.
pub fn project_psd(a: &SymMatrix) -> SymMatrix {
    project_psd_with_decomposition(a).0
}

/// Like [`project_psd`], also returning the decomposition of `a`.
pub fn project_psd_with_decomposition(a: &SymMatrix) -> (SymMatrix, Option<SpectralDecomposition>) {
    let n = a.order();
    if n == 0 {
        return (SymMatrix::zeros(0), None);
    }
    let dec = match eigh(a) {
        Ok(d) => d,
        Err(_) => return (SymMatrix::zeros(n), None),
    };
    if dec.eigenvalues[0] >= 0.0 {
        return (a.clone(), Some(dec));
    }
    // reconstruct from whichever side has fewer columns
    let positive: Vec<usize> = (0..n).filter(|&j| dec.eigenvalues[j] > 0.0).collect();
    let mut out = DMatrix::zeros(n, n);
    if positive.len() <= n / 2 {
        for &j in &positive {
            let v = dec.eigenvectors.column(j);
            out.ger(dec.eigenvalues[j], &v, &v, 1.0);
        }
    } else {
        out.copy_from(a.as_matrix());
        for j in (0..n).filter(|&j| dec.eigenvalues[j] < 0.0) {
            let v = dec.eigenvectors.column(j);
            out.ger(-dec.eigenvalues[j], &v, &v, 1.0);
        }
    }
    (SymMatrix::from_dense(out), Some(dec))
}

/// Default diagonal shift for [`cholesky_psd`]: `1e-9 · trace / n`.
pub fn default_shift(a: &SymMatrix) -> f64 {
    let n = a.order();
    if n == 0 {
        return 0.0;
    }
    1e-9 * (a.trace().abs() / n as f64).max(1e-300)
}

/// Lower-triangular `L` with `L Lᵀ = a + shift·I`.
///
/// Semidefinite input whose shifted pivots still fall below `-shift` (a
/// genuinely indefinite matrix) is reported as a breakdown; tiny negative
/// pivots within the shift budget are clamped to zero so rank-deficient
/// solver output factors cleanly.
pub fn cholesky_psd(a: &SymMatrix, shift: f64) -> Result<DMatrix<f64>> {
    a.check_finite()?;
    let n = a.order();
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = a.get(j, j) + shift;
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d < -shift.max(1e-12) * 10.0 {
            return Err(Error::Cholesky {
                pivot: j,
                value: d,
                shift,
            });
        }
        let ljj = d.max(0.0).sqrt();
        l[(j, j)] = ljj;
        for i in j + 1..n {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = if ljj > 0.0 { s / ljj } else { 0.0 };
        }
    }
    Ok(l)
}

/// Rows of a Gram factor for `a`: `⟨v_i, v_j⟩ ≈ a_ij`.
///
/// Tries [`cholesky_psd`] with the default shift and falls back to the
/// eigen-decomposition of the PSD projection.
pub fn gram_vectors(a: &SymMatrix) -> Vec<Vec<f64>> {
    let n = a.order();
    if let Ok(l) = cholesky_psd(a, default_shift(a)) {
        return (0..n).map(|i| l.row(i).iter().copied().collect()).collect();
    }
    let dec = match eigh(a) {
        Ok(d) => d,
        Err(_) => return vec![vec![0.0; n]; n],
    };
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| dec.eigenvectors[(i, j)] * dec.eigenvalues[j].max(0.0).sqrt())
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn random_sym(n: usize, seed: u64) -> SymMatrix {
        use rand::Rng;
        let mut rng = crate::graph::seeded_rng(seed);
        let mut m = SymMatrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                m.set(i, j, rng.random_range(-1.0..1.0));
            }
        }
        m
    }

    #[test]
    fn eigh_identity_and_ones() {
        let d = eigh(&SymMatrix::identity(3)).unwrap();
        assert!(d.eigenvalues.iter().all(|&l| (l - 1.0).abs() < 1e-12));
        let d = eigh(&SymMatrix::ones(3)).unwrap();
        assert!(d.eigenvalues[0].abs() < 1e-12);
        assert!(d.eigenvalues[1].abs() < 1e-12);
        assert!((d.eigenvalues[2] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn eigh_rejects_non_finite() {
        let mut a = SymMatrix::zeros(2);
        a.set(0, 1, f64::NAN);
        assert!(eigh(&a).is_err());
    }

    #[test]
    fn degenerate_orders() {
        assert!(eigh(&SymMatrix::zeros(0)).unwrap().eigenvalues.is_empty());
        assert_eq!(project_psd(&SymMatrix::zeros(0)).order(), 0);
        let one = SymMatrix::from_diagonal(&[-2.0]);
        assert_eq!(project_psd(&one).get(0, 0), 0.0);
        assert_eq!(
            cholesky_psd(&SymMatrix::from_diagonal(&[4.0]), 0.0).unwrap()[(0, 0)],
            2.0
        );
    }

    #[test]
    fn projection_clamps() {
        let a = SymMatrix::from_diagonal(&[2.0, -3.0]);
        let p = project_psd(&a);
        assert!((p.get(0, 0) - 2.0).abs() < 1e-12);
        assert!(p.get(1, 1).abs() < 1e-12);
        let psd = SymMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]);
        assert!(project_psd(&psd).sub(&psd).frobenius_norm() < 1e-12);
    }

    #[test]
    fn projection_is_nearest_among_samples() {
        use rand::Rng;
        let a = random_sym(6, 11);
        let p = project_psd(&a);
        let best = p.sub(&a).frobenius_norm();
        let mut rng = crate::graph::seeded_rng(5);
        for _ in 0..100 {
            let g = DMatrix::from_fn(6, 6, |_, _| rng.random_range(-1.0..1.0));
            let candidate = SymMatrix::from_dense(&g * g.transpose());
            assert!(best <= candidate.sub(&a).frobenius_norm() + 1e-12);
        }
    }

    #[test]
    fn cholesky_of_identity_and_ones() {
        let l = cholesky_psd(&SymMatrix::identity(3), 0.0).unwrap();
        assert!((l - DMatrix::<f64>::identity(3, 3)).norm() < 1e-14);
        let j2 = SymMatrix::ones(2);
        let shift = default_shift(&j2);
        let l = cholesky_psd(&j2, shift).unwrap();
        // closed form: l00 = sqrt(1+s), l10 = 1/l00, l11 = sqrt(1+s-l10^2)
        let l00 = (1.0 + shift).sqrt();
        let l10 = 1.0 / l00;
        let l11 = (1.0 + shift - l10 * l10).sqrt();
        assert!((l[(0, 0)] - l00).abs() < 1e-15);
        assert!((l[(1, 0)] - l10).abs() < 1e-15);
        assert!((l[(1, 1)] - l11).abs() < 1e-12);
        assert!(l11 > 0.0 && l11 < 1e-4);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = SymMatrix::from_diagonal(&[1.0, -1.0]);
        assert!(cholesky_psd(&a, 1e-9).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn eigh_reconstructs(seed in 0u64..1000, n in 1usize..12) {
            let a = random_sym(n, seed);
            let d = eigh(&a).unwrap();
            let err = d.reconstruct().sub(&a).frobenius_norm();
            prop_assert!(err <= 1e-10 * a.frobenius_norm().max(1.0));
            let vtv = d.eigenvectors.transpose() * &d.eigenvectors;
            prop_assert!((vtv - DMatrix::<f64>::identity(n, n)).norm() <= 1e-10);
            prop_assert!(d.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        }

        #[test]
        fn projection_idempotent_and_psd(seed in 0u64..1000, n in 1usize..10) {
            let a = random_sym(n, seed);
            let p = project_psd(&a);
            prop_assert!(p.min_eigenvalue() >= -1e-10);
            prop_assert!(project_psd(&p).sub(&p).frobenius_norm() <= 1e-10);
        }

        #[test]
        fn gram_rows_reproduce_psd_entries(seed in 0u64..1000, n in 1usize..10) {
            let p = project_psd(&random_sym(n, seed));
            let v = gram_vectors(&p);
            let tol = 1e-6 * p.trace().max(1.0);
            for i in 0..n {
                for j in 0..n {
                    let dot: f64 = v[i].iter().zip(&v[j]).map(|(a, b)| a * b).sum();
                    prop_assert!((dot - p.get(i, j)).abs() <= tol);
                }
            }
        }
    }
}
