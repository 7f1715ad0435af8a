use ndarray::{ArrayView2, Axis};

/// 1-nearest-neighbor test error in percent under Euclidean distance.
/// Distances use `|a|^2 - 2 a.b` in `f32`; ties go to the lowest train index.
pub fn nn_baseline(
    train: ArrayView2<f32>,
    train_labels: &[u8],
    test: ArrayView2<f32>,
    test_labels: &[u8],
) -> f64 {
    assert!(!train_labels.is_empty() && !test_labels.is_empty(), "empty split");
    let norms: Vec<f32> = train.rows().into_iter().map(|r| r.dot(&r)).collect();
    let mut wrong = 0usize;
    for (start, chunk) in test.axis_chunks_iter(Axis(0), 1000).enumerate() {
        let cross = chunk.dot(&train.t());
        for (r, row) in cross.rows().into_iter().enumerate() {
            let mut best = (f32::INFINITY, 0);
            for (j, (&c, &n)) in row.iter().zip(&norms).enumerate() {
                let d = n - 2.0 * c;
                if d < best.0 {
                    best = (d, j);
                }
            }
            if train_labels[best.1] != test_labels[start * 1000 + r] {
                wrong += 1;
            }
        }
    }
    100.0 * wrong as f64 / test_labels.len() as f64
}
