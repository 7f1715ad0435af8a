//! Natural cubic-spline kernels that map a few coefficients to a smooth
//! spectral multiplier.

use ndarray::Array2;

use crate::error::{Error, Result};

/// `d x q` interpolation matrix: column `j` is the natural cubic spline
/// through the unit impulse at knot `j`, sampled at rank positions `0..d`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineKernel {
    pub d: usize,
    pub q: usize,
    pub k: Array2<f64>,
}

impl SplineKernel {
    /// Multiplier values `K alpha`.
    pub fn expand(&self, alpha: &[f64]) -> Vec<f64> {
        debug_assert_eq!(alpha.len(), self.q);
        self.k
            .rows()
            .into_iter()
            .map(|row| row.iter().zip(alpha).map(|(k, a)| k * a).sum())
            .collect()
    }
}

/// Knots sit at `j (d - 1) / (q - 1)` for `j = 0..q`.
pub fn spline_kernel(d: usize, q: usize) -> Result<SplineKernel> {
    if q < 2 || q > d {
        return Err(Error::Config(format!("spline needs 2 <= q <= d, got q = {q}, d = {d}")));
    }
    let knots: Vec<f64> = (0..q)
        .map(|j| (j * (d - 1)) as f64 / (q - 1) as f64)
        .collect();
    let mut k = Array2::zeros((d, q));
    let mut y = vec![0.0; q];
    for j in 0..q {
        y.fill(0.0);
        y[j] = 1.0;
        let m = second_derivatives(&knots, &y);
        let mut seg = 0;
        for t in 0..d {
            let x = t as f64;
            while seg + 2 < q && x > knots[seg + 1] {
                seg += 1;
            }
            let h = knots[seg + 1] - knots[seg];
            let a = (knots[seg + 1] - x) / h;
            let b = 1.0 - a;
            k[[t, j]] = a * y[seg]
                + b * y[seg + 1]
                + ((a * a * a - a) * m[seg] + (b * b * b - b) * m[seg + 1]) * h * h / 6.0;
        }
    }
    Ok(SplineKernel { d, q, k })
}

/// Second derivatives of the natural spline through `(x, y)`, by the
/// Thomas algorithm on the interior knots.
fn second_derivatives(x: &[f64], y: &[f64]) -> Vec<f64> {
    let q = x.len();
    let mut m = vec![0.0; q];
    if q < 3 {
        return m;
    }
    let mut diag = vec![0.0; q];
    let mut rhs = vec![0.0; q];
    for i in 1..q - 1 {
        let (h0, h1) = (x[i] - x[i - 1], x[i + 1] - x[i]);
        diag[i] = (h0 + h1) / 3.0;
        rhs[i] = (y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0;
        if i > 1 {
            let sub = h0 / 6.0;
            let w = sub / diag[i - 1];
            diag[i] -= w * sub;
            rhs[i] -= w * rhs[i - 1];
        }
    }
    for i in (1..q - 1).rev() {
        let sup = if i + 1 < q - 1 { (x[i + 1] - x[i]) / 6.0 } else { 0.0 };
        m[i] = (rhs[i] - sup * m[i + 1]) / diag[i];
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_resolution_is_identity() {
        for d in [2, 3, 7, 40] {
            let s = spline_kernel(d, d).unwrap();
            assert_eq!(s.k, Array2::<f64>::eye(d));
        }
    }

    #[test]
    fn two_knots_are_linear() {
        let s = spline_kernel(5, 2).unwrap();
        for t in 0..5 {
            let w = t as f64 / 4.0;
            assert!((s.k[[t, 0]] - (1.0 - w)).abs() < 1e-15);
            assert!((s.k[[t, 1]] - w).abs() < 1e-15);
        }
    }

    #[test]
    fn reproduces_constants_and_lines() {
        let s = spline_kernel(300, 32).unwrap();
        assert_eq!(s.k.dim(), (300, 32));
        for v in s.expand(&[2.5; 32]) {
            assert!((v - 2.5).abs() < 1e-10);
        }
        let knots: Vec<f64> = (0..32).map(|j| j as f64 * 299.0 / 31.0).collect();
        for (t, v) in s.expand(&knots).iter().enumerate() {
            assert!((v - t as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn interpolates_at_knots() {
        let s = spline_kernel(10, 4).unwrap();
        for (j, t) in [0usize, 3, 6, 9].iter().enumerate() {
            for c in 0..4 {
                let want = if c == j { 1.0 } else { 0.0 };
                assert!((s.k[[*t, c]] - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(spline_kernel(5, 1).is_err());
        assert!(spline_kernel(5, 6).is_err());
    }
}
