//! Dense linear algebra. The SVD comes from `faer` and the remaining
//! factorizations from `nalgebra`; this module fixes orderings and
//! conventions used throughout the crate.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const SOLVER_EPS: f64 = 5.0 * f64::EPSILON;

/// Singular value decomposition with singular values sorted descending.
#[derive(Debug, Clone)]
pub struct Svd {
    pub singular_values: Vec<f64>,
    /// Left singular vectors as columns, matching `singular_values`.
    pub u: DMatrix<f64>,
    /// Right singular vectors as rows, matching `singular_values`.
    pub v_t: DMatrix<f64>,
}

impl Svd {
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let k = self.singular_values.len();
        let s = DMatrix::from_diagonal(&DVector::from_column_slice(&self.singular_values));
        self.u.columns(0, k) * s * self.v_t.rows(0, k)
    }
}

pub fn svd(matrix: &DMatrix<f64>) -> Result<Svd> {
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    let (r, c) = matrix.shape();
    if r == 0 || c == 0 {
        return Ok(Svd {
            singular_values: vec![],
            u: DMatrix::zeros(r, 0),
            v_t: DMatrix::zeros(0, c),
        });
    }
    let dec = faer::Mat::<f64>::from_fn(r, c, |i, j| matrix[(i, j)])
        .thin_svd()
        .map_err(|e| Error::NumericalFailure(format!("svd did not converge: {e:?}")))?;
    let (du, dv, ds) = (dec.U(), dec.V(), dec.S().column_vector());
    let k = r.min(c);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| ds[b].total_cmp(&ds[a]));
    let singular_values: Vec<f64> = order.iter().map(|&i| ds[i].max(0.0)).collect();
    let u = DMatrix::from_fn(r, k, |i, j| du[(i, order[j])]);
    let v_t = DMatrix::from_fn(k, c, |i, j| dv[(j, order[i])]);
    let frob2 = matrix.norm_squared();
    let sum2: f64 = singular_values.iter().map(|s| s * s).sum();
    if (frob2 - sum2).abs() > 1e-8 * frob2.max(f64::MIN_POSITIVE) {
        return Err(Error::NumericalFailure(format!(
            "svd inconsistent with Frobenius norm ({sum2} vs {frob2})"
        )));
    }
    Ok(Svd {
        singular_values,
        u,
        v_t,
    })
}

pub fn spectral_norm(matrix: &DMatrix<f64>) -> Result<f64> {
    Ok(svd(matrix)?.singular_values.first().copied().unwrap_or(0.0))
}

pub fn nuclear_norm(matrix: &DMatrix<f64>) -> Result<f64> {
    Ok(svd(matrix)?.singular_values.iter().sum())
}

/// Eigen-decomposition of a symmetric matrix: (eigenvalues, eigenvectors as
/// columns), eigenvalues sorted descending.
pub fn symmetric_eigen(matrix: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    let n = matrix.nrows();
    let sym = (matrix + matrix.transpose()) * 0.5;
    let dec = nalgebra::SymmetricEigen::try_new(sym, SOLVER_EPS, 10_000)
        .ok_or_else(|| Error::NumericalFailure("symmetric eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| dec.eigenvalues[b].total_cmp(&dec.eigenvalues[a]));
    let values = order.iter().map(|&i| dec.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |i, j| dec.eigenvectors[(i, order[j])]);
    Ok((values, vectors))
}

/// Solves a square system by LU with partial pivoting.
pub fn solve(a: &DMatrix<f64>, b: &[f64]) -> Option<Vec<f64>> {
    let lu = a.clone().lu();
    lu.solve(&DVector::from_column_slice(b))
        .map(|x| x.iter().copied().collect())
        .filter(|x: &Vec<f64>| x.iter().all(|v| v.is_finite()))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn l2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_singular_values() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 3.0]);
        let s = svd(&m).unwrap();
        assert_eq!(s.singular_values.len(), 2);
        assert!((s.singular_values[0] - 3.0).abs() < 1e-14);
        assert!((s.singular_values[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rank_one_outer_product() {
        let x = [-0.41, 1.73, 0.28, -2.05];
        let y = [1.12, -0.37, 0.96, 0.5];
        let m = DMatrix::from_fn(4, 4, |i, j| x[i] * y[j]);
        let expect = x.iter().map(|v| v * v).sum::<f64>().sqrt() * y.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((spectral_norm(&m).unwrap() - expect).abs() < 1e-12 * expect);
        assert!((nuclear_norm(&m).unwrap() - expect).abs() < 1e-10 * expect);
    }

    #[test]
    fn low_rank_reconstruction() {
        let x = [[0.3, -1.1, 0.7], [1.4, 0.2, -0.9]];
        let y = [[0.5, 0.1, -0.8, 1.3, 0.0], [-0.2, 0.9, 0.4, 0.6, -1.5]];
        let m = DMatrix::from_fn(3, 5, |i, j| x[0][i] * y[0][j] + x[1][i] * y[1][j]);
        let s = svd(&m).unwrap();
        assert!((s.reconstruct() - &m).amax() < 1e-13);
        assert!(s.singular_values[2] < 1e-14);
        assert!(s.singular_values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn zero_matrix() {
        let s = svd(&DMatrix::zeros(3, 2)).unwrap();
        assert!(s.singular_values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn reflection_has_unit_singular_values() {
        // AᵀA = I, so both eigenvalues of AᵀA are 1
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let ata = m.transpose() * &m;
        let (ev, _) = symmetric_eigen(&ata).unwrap();
        let s = svd(&m).unwrap();
        for (sv, e) in s.singular_values.iter().zip(ev) {
            assert!((sv - e.sqrt()).abs() < 1e-14);
        }
    }

    #[test]
    fn reconstruction_is_tight() {
        let m = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, -0.5, 4.0, 3.0, -1.0]);
        let s = svd(&m).unwrap();
        let err = (s.reconstruct() - &m).abs().max();
        assert!(err <= 1e-10 * s.singular_values[0]);
    }

    #[test]
    fn eigen_sorted() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let (v, _) = symmetric_eigen(&m).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-14 && (v[1] + 1.0).abs() < 1e-14);
    }
}
