//! Truncated Laplacian eigenbases and spectral filtering.

use std::cmp::Ordering;

use ndarray::{s, Array2, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::graph::{Laplacian, LaplacianKind};
use crate::spectral::eigen::symmetric_eigen;

/// Residual budget relative to the Frobenius norm of `L`.
const RESIDUAL_TOL: f64 = 1e-7;

/// The `d` eigenpairs of a Laplacian with the smallest eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralBasis {
    pub kind: LaplacianKind,
    /// Eigenvalues, ascending.
    pub lambda: Vec<f64>,
    /// `n x d`, one unit eigenvector per column.
    pub v: Array2<f64>,
}

impl SpectralBasis {
    pub fn n(&self) -> usize {
        self.v.nrows()
    }

    pub fn d(&self) -> usize {
        self.v.ncols()
    }

    /// The first `d` columns of this basis.
    pub fn truncate(&self, d: usize) -> Result<SpectralBasis> {
        if d == 0 || d > self.d() {
            return Err(Error::ShapeMismatch(format!(
                "cannot truncate a basis of {} vectors to {d}",
                self.d()
            )));
        }
        Ok(SpectralBasis {
            kind: self.kind,
            lambda: self.lambda[..d].to_vec(),
            v: self.v.slice(s![.., ..d]).to_owned(),
        })
    }

    /// Coefficients `V^T x` for an `n x f` signal.
    pub fn analyze(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        if x.nrows() != self.n() {
            return Err(Error::ShapeMismatch(format!(
                "signal has {} rows, basis has {}",
                x.nrows(),
                self.n()
            )));
        }
        Ok(self.v.t().dot(&x))
    }
}

/// Full dense eigensolve of `laplacian`, truncated to the `d` smallest
/// eigenvalues, with deterministic signs and tie ordering.
pub fn eigendecompose(laplacian: &Laplacian, d: usize) -> Result<SpectralBasis> {
    let n = laplacian.n();
    if d == 0 || d > n {
        return Err(Error::ShapeMismatch(format!("cutoff d = {d} outside 1..={n}")));
    }
    let (values, mut rows) = symmetric_eigen(&laplacian.matrix)?;
    let scale = laplacian.norm().max(1.0);

    for mut row in rows.rows_mut() {
        let peak = row.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let lead = row
            .iter()
            .position(|v| v.abs() >= peak * (1.0 - 1e-9))
            .unwrap_or(0);
        if row[lead] < 0.0 {
            row.mapv_inplace(|v| -v);
        }
    }

    // Within a block of numerically equal eigenvalues, order vectors by the
    // first entry at which they differ, larger first.
    let mut order: Vec<usize> = (0..n).collect();
    let tie = 1e-9 * scale;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[end] - values[start] <= tie {
            end += 1;
        }
        if end - start > 1 {
            order[start..end].sort_by(|&a, &b| lexicographic_desc(&rows, a, b));
        }
        start = end;
    }

    let kept = &order[..d];
    let lambda: Vec<f64> = kept.iter().map(|&i| values[i]).collect();
    let v = rows.select(Axis(0), kept).reversed_axes();
    let v = v.as_standard_layout().into_owned();

    let residual = laplacian.matrix.dot(&v) - &(&v * &ndarray::Array1::from(lambda.clone()));
    let worst = residual.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    if worst.is_nan() || worst > RESIDUAL_TOL * scale {
        return Err(Error::ConvergenceFailure(format!(
            "eigenpair residual {worst:e} exceeds {:e}",
            RESIDUAL_TOL * scale
        )));
    }
    Ok(SpectralBasis {
        kind: laplacian.kind,
        lambda,
        v,
    })
}

fn lexicographic_desc(rows: &Array2<f64>, a: usize, b: usize) -> Ordering {
    for (x, y) in rows.row(a).iter().zip(rows.row(b).iter()) {
        if (x - y).abs() > 1e-9 {
            return y.total_cmp(x);
        }
    }
    a.cmp(&b)
}

/// `V diag(m) V^T x` applied to each column of the `n x f` signal `x`.
pub fn spectral_filter(
    basis: &SpectralBasis,
    multiplier: &[f64],
    x: ArrayView2<f64>,
) -> Result<Array2<f64>> {
    if multiplier.len() != basis.d() {
        return Err(Error::ShapeMismatch(format!(
            "multiplier has {} entries, basis keeps {}",
            multiplier.len(),
            basis.d()
        )));
    }
    if multiplier.iter().any(|m| !m.is_finite()) {
        return Err(Error::ShapeMismatch("multiplier has non-finite entries".into()));
    }
    let mut coeffs = basis.analyze(x)?;
    for (mut row, &m) in coeffs.rows_mut().into_iter().zip(multiplier) {
        row *= m;
    }
    Ok(basis.v.dot(&coeffs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::WeightedGraph;
    use ndarray::array;

    fn path(n: usize) -> WeightedGraph {
        let mut w = Array2::zeros((n, n));
        for i in 0..n - 1 {
            w[[i, i + 1]] = 1.0;
            w[[i + 1, i]] = 1.0;
        }
        WeightedGraph::from_weights(w).unwrap()
    }

    #[test]
    fn two_node_path() {
        let b = eigendecompose(&path(2).laplacian(LaplacianKind::Combinatorial), 2).unwrap();
        assert!(b.lambda[0].abs() < 1e-14 && (b.lambda[1] - 2.0).abs() < 1e-14);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((b.v[[0, 0]] - h).abs() < 1e-14 && (b.v[[1, 0]] - h).abs() < 1e-14);
        assert!((b.v[[0, 1]].abs() - h).abs() < 1e-14);
        assert!((b.v[[0, 1]] + b.v[[1, 1]]).abs() < 1e-14);
    }

    #[test]
    fn three_node_path_spectrum() {
        // det(L - t I) = -t (t - 1) (t - 3)
        let b = eigendecompose(&path(3).laplacian(LaplacianKind::Combinatorial), 3).unwrap();
        for (got, want) in b.lambda.iter().zip([0.0, 1.0, 3.0]) {
            assert!((got - want).abs() < 1e-13);
        }
    }

    #[test]
    fn columns_have_positive_peak() {
        let b = eigendecompose(&path(9).laplacian(LaplacianKind::Normalized), 9).unwrap();
        for col in b.v.columns() {
            let peak = col.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let first = col.iter().find(|v| v.abs() >= peak * (1.0 - 1e-9)).unwrap();
            assert!(*first > 0.0);
        }
        assert!(b.lambda.iter().all(|&l| (-1e-8..=2.0 + 1e-8).contains(&l)));
    }

    #[test]
    fn degenerate_block_order_is_lexicographic() {
        // A 4-cycle has the double eigenvalue 2.
        let w = array![
            [0.0, 1.0, 0.0, 1.0],
            [1.0, 0.0, 1.0, 0.0],
            [0.0, 1.0, 0.0, 1.0],
            [1.0, 0.0, 1.0, 0.0]
        ];
        let g = WeightedGraph::from_weights(w).unwrap();
        let b = eigendecompose(&g.laplacian(LaplacianKind::Combinatorial), 4).unwrap();
        assert!((b.lambda[1] - 2.0).abs() < 1e-12 && (b.lambda[2] - 2.0).abs() < 1e-12);
        let (c1, c2) = (b.v.column(1), b.v.column(2));
        let k = (0..4).find(|&k| (c1[k] - c2[k]).abs() > 1e-9).unwrap();
        assert!(c1[k] > c2[k]);
    }

    #[test]
    fn bad_cutoff() {
        let l = path(3).laplacian(LaplacianKind::Combinatorial);
        assert!(matches!(eigendecompose(&l, 0), Err(Error::ShapeMismatch(_))));
        assert!(matches!(eigendecompose(&l, 4), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn lowpass_projects_onto_constants() {
        let b = eigendecompose(&path(5).laplacian(LaplacianKind::Combinatorial), 3).unwrap();
        let x = array![[1.0, 0.0], [2.0, 0.0], [3.0, 5.0], [4.0, 0.0], [5.0, 0.0]];
        let y = spectral_filter(&b, &[1.0, 0.0, 0.0], x.view()).unwrap();
        for r in 0..5 {
            assert!((y[[r, 0]] - 3.0).abs() < 1e-12);
            assert!((y[[r, 1]] - 1.0).abs() < 1e-12);
        }
        assert!(spectral_filter(&b, &[1.0, 0.0], x.view()).is_err());
        assert!(spectral_filter(&b, &[1.0, f64::NAN, 0.0], x.view()).is_err());
    }
}
