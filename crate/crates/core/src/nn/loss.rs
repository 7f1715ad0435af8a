use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};

/// Mean softmax cross-entropy over the batch and its gradient
/// `(softmax - onehot) / batch`.
pub fn cross_entropy(logits: ArrayView2<f64>, labels: &[usize]) -> Result<(f64, Array2<f64>)> {
    let (batch, classes) = logits.dim();
    if labels.len() != batch {
        return Err(Error::ShapeMismatch(format!(
            "{batch} logit rows but {} labels",
            labels.len()
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&y| y >= classes) {
        return Err(Error::ShapeMismatch(format!("label {bad} outside {classes} classes")));
    }
    let mut grad = Array2::zeros((batch, classes));
    let mut loss = 0.0;
    for ((row, mut g), &y) in logits.rows().into_iter().zip(grad.rows_mut()).zip(labels) {
        let max = row.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        let sum: f64 = row.iter().map(|&v| (v - max).exp()).sum();
        let lse = max + sum.ln();
        loss += lse - row[y];
        for (gk, &v) in g.iter_mut().zip(row.iter()) {
            *gk = (v - lse).exp() / batch as f64;
        }
        g[y] -= 1.0 / batch as f64;
    }
    Ok((loss / batch as f64, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn uniform_logits_give_log_classes() {
        let (l, g) = cross_entropy(Array2::zeros((3, 10)).view(), &[0, 4, 9]).unwrap();
        assert!((l - 10f64.ln()).abs() < 1e-14);
        assert!((g.sum()).abs() < 1e-15);
    }

    #[test]
    fn margin_drives_loss_down() {
        let mut prev = f64::INFINITY;
        for m in [0.0, 1.0, 5.0, 20.0, 100.0] {
            let (l, _) = cross_entropy(array![[m, 0.0, 0.0]].view(), &[0]).unwrap();
            assert!(l < prev);
            prev = l;
        }
        assert!(prev < 1e-40);
        assert!(cross_entropy(array![[1e308, -1e308]].view(), &[0]).unwrap().0.is_finite());
    }

    #[test]
    fn gradient_matches_differences() {
        let logits = array![[0.3, -1.2, 2.0, 0.1], [1.5, 0.2, -0.7, 0.0]];
        let labels = [2, 1];
        let (_, g) = cross_entropy(logits.view(), &labels).unwrap();
        let h = 1e-6;
        for idx in [(0, 0), (0, 2), (1, 1), (1, 3)] {
            let mut p = logits.clone();
            p[idx] += h;
            let mut m = logits.clone();
            m[idx] -= h;
            let fd = (cross_entropy(p.view(), &labels).unwrap().0
                - cross_entropy(m.view(), &labels).unwrap().0)
                / (2.0 * h);
            assert!((fd - g[idx]).abs() <= 1e-6 * fd.abs().max(1e-3));
        }
    }

    #[test]
    fn label_range_is_checked() {
        assert!(cross_entropy(Array2::zeros((1, 3)).view(), &[3]).is_err());
        assert!(cross_entropy(Array2::zeros((2, 3)).view(), &[0]).is_err());
    }
}
