//! Dense symmetric eigensolver: Householder reduction to tridiagonal form
//! followed by the implicit QL iteration with Wilkinson-style shifts.
//!
//! Eigenvectors are carried as rows throughout so that the plane rotations
//! of the QL sweep touch two contiguous rows.

use ndarray::Array2;

use crate::error::{Error, Result};

/// QL sweeps allowed per eigenvalue before giving up.
const MAX_SWEEPS: usize = 60;

/// Eigenvalues in ascending order and the matching unit eigenvectors, one per
/// row of the returned `n x n` matrix.
pub fn symmetric_eigen(matrix: &Array2<f64>) -> Result<(Vec<f64>, Array2<f64>)> {
    let n = matrix.nrows();
    if n == 0 || matrix.ncols() != n {
        return Err(Error::ShapeMismatch(format!(
            "eigensolver needs a square matrix, got {:?}",
            matrix.dim()
        )));
    }
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(Error::ConvergenceFailure("matrix has non-finite entries".into()));
    }
    let mut a: Vec<f64> = matrix.iter().copied().collect();
    let (mut diag, mut off, reflector_norms) = tridiagonalize(&mut a, n);
    let mut rows = transformation_transpose(&a, &reflector_norms, n);
    tridiagonal_ql(&mut diag, &mut off, &mut rows, n)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| diag[i].total_cmp(&diag[j]));
    let values = order.iter().map(|&i| diag[i]).collect();
    let mut vectors = Array2::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        vectors
            .row_mut(dst)
            .as_slice_mut()
            .expect("standard layout")
            .copy_from_slice(&rows[src * n..(src + 1) * n]);
    }
    Ok((values, vectors))
}

/// Reduces the symmetric matrix `a` (row-major, lower triangle used) in place.
///
/// Returns the tridiagonal diagonal, the subdiagonal (`off[i]` couples rows
/// `i - 1` and `i`, `off[0] = 0`) and the Householder normalizers. The
/// reflector of step `i` is left in `a[i][0..i]`.
fn tridiagonalize(a: &mut [f64], n: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut off = vec![0.0; n];
    let mut hs = vec![0.0; n];
    let mut u = vec![0.0; n];
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        if l > 0 {
            let scale: f64 = a[i * n..i * n + i].iter().map(|v| v.abs()).sum();
            if scale == 0.0 {
                off[i] = a[i * n + l];
            } else {
                for v in &mut a[i * n..i * n + i] {
                    *v /= scale;
                    h += *v * *v;
                }
                let f = a[i * n + l];
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                off[i] = scale * g;
                h -= f * g;
                a[i * n + l] = f - g;
                u[..i].copy_from_slice(&a[i * n..i * n + i]);

                // p = A u / h over the leading i x i block, reading the lower triangle.
                let p = &mut off[..i];
                p.fill(0.0);
                for j in 0..i {
                    let row = &a[j * n..j * n + j];
                    let uj = u[j];
                    let mut acc = a[j * n + j] * uj;
                    for (k, &ajk) in row.iter().enumerate() {
                        acc += ajk * u[k];
                        p[k] += ajk * uj;
                    }
                    p[j] += acc;
                }
                let mut f = 0.0;
                for j in 0..i {
                    p[j] /= h;
                    f += p[j] * u[j];
                }
                let hh = f / (h + h);
                for j in 0..i {
                    p[j] -= hh * u[j];
                }
                for j in 0..i {
                    let (fj, gj) = (u[j], p[j]);
                    let row = &mut a[j * n..j * n + j + 1];
                    for (k, v) in row.iter_mut().enumerate() {
                        *v -= fj * p[k] + gj * u[k];
                    }
                }
                off[i] = scale * g;
            }
        } else {
            off[i] = a[i * n + l];
        }
        hs[i] = h;
    }
    let diag = (0..n).map(|i| a[i * n + i]).collect();
    off[0] = 0.0;
    (diag, off, hs)
}

/// Builds `Q^T`, where the original matrix equals `Q T Q^T`.
fn transformation_transpose(a: &[f64], hs: &[f64], n: usize) -> Vec<f64> {
    // Q = P_{n-1} ... P_1; apply the reflectors in ascending order so the
    // active block of Q only grows.
    let mut q = vec![0.0; n * n];
    for i in 0..n {
        q[i * n + i] = 1.0;
    }
    let mut r = vec![0.0; n];
    for i in 1..n {
        let h = hs[i];
        if h == 0.0 {
            continue;
        }
        let u = &a[i * n..i * n + i];
        let r = &mut r[..i];
        r.fill(0.0);
        for (k, &uk) in u.iter().enumerate() {
            if uk != 0.0 {
                for (rj, &qkj) in r.iter_mut().zip(&q[k * n..k * n + i]) {
                    *rj += uk * qkj;
                }
            }
        }
        for (k, &uk) in u.iter().enumerate() {
            let coef = uk / h;
            if coef != 0.0 {
                for (qkj, &rj) in q[k * n..k * n + i].iter_mut().zip(r.iter()) {
                    *qkj -= coef * rj;
                }
            }
        }
    }
    let mut qt = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            qt[j * n + i] = q[i * n + j];
        }
    }
    qt
}

/// Implicit QL on the tridiagonal `(diag, off)`, rotating the rows of `z`.
fn tridiagonal_ql(diag: &mut [f64], off: &mut [f64], z: &mut [f64], n: usize) -> Result<()> {
    let d = diag;
    let e = off;
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1 = 0.0f64;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            let mut sweeps = 0;
            loop {
                sweeps += 1;
                if sweeps > MAX_SWEEPS {
                    return Err(Error::ConvergenceFailure(format!(
                        "eigenvalue {l} not isolated after {MAX_SWEEPS} QL sweeps"
                    )));
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let h = g - d[l];
                for v in &mut d[l + 2..n] {
                    *v -= h;
                }
                f += h;

                p = d[m];
                let (mut c, mut c2, mut c3) = (1.0, 1.0, 1.0);
                let el1 = e[l + 1];
                let (mut s, mut s2) = (0.0, 0.0);
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    let h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);

                    let (head, tail) = z.split_at_mut((i + 1) * n);
                    let zi = &mut head[i * n..];
                    let zi1 = &mut tail[..n];
                    for (a, b) in zi.iter_mut().zip(zi1.iter_mut()) {
                        let t = *b;
                        *b = s * *a + c * t;
                        *a = c * *a - s * t;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}
