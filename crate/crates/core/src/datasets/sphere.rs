//! MNIST digits projected onto points of the unit sphere from random
//! viewpoints.
//!
//! Each image gets an orthonormal frame `(u1, u2, u3)`. The digit lies on
//! the plane tangent to the sphere at `u1`, its columns along `u2` and its
//! rows along `-u3`, scaled so the image spans `half_extent_deg` of arc on
//! each side of `u1`. A sphere point `p` on the visible hemisphere reads the
//! image where the ray from the origin through `p` meets that plane.

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::datasets::mnist::{Mnist, Split};
use crate::datasets::{DatasetMeta, GraphDataset};
use crate::error::{Error, Result};
use crate::graph::{build_knn_gaussian, Bandwidth};
use crate::spectral::eigen::symmetric_eigen;

const MAX_REDRAWS: usize = 64;
const DROPPED_LABEL: u8 = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SphereMode {
    /// Frame from the principal axes of a perturbed ellipsoid.
    Mild,
    /// Frame drawn uniformly from the orthogonal group.
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereConfig {
    pub n_points: usize,
    /// Lengths of the unperturbed ellipsoid axes.
    pub norms: [f64; 3],
    /// Variance of the perturbation entries.
    pub sigma2: f64,
    pub mode: SphereMode,
    pub seed: u64,
    /// Angular half-width of the projected image, in degrees.
    pub half_extent_deg: f64,
    pub k: usize,
}

impl Default for SphereConfig {
    fn default() -> Self {
        SphereConfig {
            n_points: 4096,
            norms: [1.0, 2.0, 3.0],
            sigma2: 0.2,
            mode: SphereMode::Mild,
            seed: 0,
            half_extent_deg: 50.0,
            k: 8,
        }
    }
}

impl SphereConfig {
    pub fn validate(&self) -> Result<()> {
        if self.mode == SphereMode::Mild && !(0.0..1.0).contains(&self.sigma2) {
            return Err(Error::Config(format!("mild mode needs 0 <= sigma2 < 1, got {}", self.sigma2)));
        }
        if !(self.half_extent_deg > 0.0 && self.half_extent_deg < 90.0) {
            return Err(Error::Config("half extent must lie in (0, 90) degrees".into()));
        }
        if self.n_points < 2 || self.k == 0 || self.k >= self.n_points {
            return Err(Error::Config("need n_points >= 2 and 1 <= k < n_points".into()));
        }
        Ok(())
    }
}

pub type Frame = [[f64; 3]; 3];

/// `n` points uniform on the unit sphere.
pub fn sphere_points(n: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts = Array2::zeros((n, 3));
    for mut row in pts.rows_mut() {
        loop {
            let v: [f64; 3] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
            let norm = dot(&v, &v).sqrt();
            if norm > 1e-12 {
                for a in 0..3 {
                    row[a] = v[a] / norm;
                }
                break;
            }
        }
    }
    pts
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Principal axes of `(E + N)^T (E + N)` with `N` iid Gaussian of variance
/// `sigma2`, ordered by descending eigenvalue, each with its largest-magnitude
/// entry positive.
pub fn mild_frame(rng: &mut ChaCha8Rng, norms: [f64; 3], sigma2: f64) -> Result<Frame> {
    let noise = Normal::new(0.0, sigma2.sqrt()).map_err(|e| Error::Config(e.to_string()))?;
    for _ in 0..MAX_REDRAWS {
        let mut m = Array2::<f64>::zeros((3, 3));
        for i in 0..3 {
            for j in 0..3 {
                m[[i, j]] = noise.sample(rng) + if i == j { norms[i] } else { 0.0 };
            }
        }
        let sigma = m.t().dot(&m);
        let (vals, vecs) = symmetric_eigen(&sigma)?;
        let scale = vals[2].abs().max(f64::MIN_POSITIVE);
        if vals[0] <= 1e-12 * scale || vals[1] - vals[0] <= 1e-9 * scale || vals[2] - vals[1] <= 1e-9 * scale {
            continue;
        }
        let mut frame = [[0.0; 3]; 3];
        for (slot, row) in frame.iter_mut().zip([2, 1, 0]) {
            let v = vecs.row(row);
            let mut lead = 0;
            for a in 1..3 {
                if v[a].abs() > v[lead].abs() + 1e-12 {
                    lead = a;
                }
            }
            let s = v[lead].signum();
            *slot = [s * v[0], s * v[1], s * v[2]];
        }
        return Ok(frame);
    }
    Err(Error::DegenerateCovariance { attempts: MAX_REDRAWS })
}

/// Haar-distributed orthogonal frame: Gram-Schmidt on a Gaussian matrix.
pub fn uniform_frame(rng: &mut ChaCha8Rng) -> Frame {
    loop {
        let mut cols: Frame = std::array::from_fn(|_| std::array::from_fn(|_| StandardNormal.sample(rng)));
        let mut ok = true;
        for i in 0..3 {
            for j in 0..i {
                let p = dot(&cols[i], &cols[j]);
                let cj = cols[j];
                cols[i].iter_mut().zip(cj).for_each(|(v, c)| *v -= p * c);
            }
            let norm = dot(&cols[i], &cols[i]).sqrt();
            if norm < 1e-10 {
                ok = false;
                break;
            }
            cols[i].iter_mut().for_each(|v| *v /= norm);
        }
        if ok {
            return cols;
        }
    }
}

fn catmull_rom(t: f64) -> [f64; 4] {
    let (t2, t3) = (t * t, t * t * t);
    [
        (-t3 + 2.0 * t2 - t) / 2.0,
        (3.0 * t3 - 5.0 * t2 + 2.0) / 2.0,
        (-3.0 * t3 + 4.0 * t2 + t) / 2.0,
        (t3 - t2) / 2.0,
    ]
}

/// Catmull-Rom bicubic sample at fractional pixel `(row, col)`; pixels outside
/// the image read 0 and the result is clamped to `[0, 1]`.
pub fn bicubic(img: &[f32], rows: usize, cols: usize, row: f64, col: f64) -> f64 {
    let (r0, c0) = (row.floor(), col.floor());
    let (wr, wc) = (catmull_rom(row - r0), catmull_rom(col - c0));
    let (r0, c0) = (r0 as i64, c0 as i64);
    let mut acc = 0.0;
    for (a, wa) in wr.iter().enumerate() {
        let r = r0 - 1 + a as i64;
        if r < 0 || r >= rows as i64 {
            continue;
        }
        for (b, wb) in wc.iter().enumerate() {
            let c = c0 - 1 + b as i64;
            if c < 0 || c >= cols as i64 {
                continue;
            }
            acc += wa * wb * img[r as usize * cols + c as usize] as f64;
        }
    }
    acc.clamp(0.0, 1.0)
}

/// Values of `img` seen at each sphere point through `frame`.
pub fn project_image(
    img: &[f32],
    rows: usize,
    cols: usize,
    points: &Array2<f64>,
    frame: &Frame,
    half_extent_deg: f64,
    out: &mut [f32],
) {
    let t = half_extent_deg.to_radians().tan();
    let (cr, cc) = ((rows as f64 - 1.0) / 2.0, (cols as f64 - 1.0) / 2.0);
    let (sr, sc) = (rows as f64 / 2.0 / t, cols as f64 / 2.0 / t);
    for (p, o) in points.rows().into_iter().zip(out.iter_mut()) {
        let p = [p[0], p[1], p[2]];
        let c = dot(&p, &frame[0]);
        *o = 0.0;
        if c <= 1e-6 {
            continue;
        }
        let col = cc + dot(&p, &frame[1]) / c * sc;
        let row = cr - dot(&p, &frame[2]) / c * sr;
        if row > -2.0 && row < rows as f64 + 1.0 && col > -2.0 && col < cols as f64 + 1.0 {
            *o = bicubic(img, rows, cols, row, col) as f32;
        }
    }
}

/// Per-image generator: stream `split << 40 | index` of the seeded ChaCha.
fn image_rng(seed: u64, split: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    rng.set_stream((split << 40) | index as u64);
    rng
}

pub fn frame_for(cfg: &SphereConfig, rng: &mut ChaCha8Rng) -> Result<Frame> {
    match cfg.mode {
        SphereMode::Mild => mild_frame(rng, cfg.norms, cfg.sigma2),
        SphereMode::Uniform => Ok(uniform_frame(rng)),
    }
}

fn project_split(split: &Split, id: u64, points: &Array2<f64>, cfg: &SphereConfig) -> Result<(Array2<f32>, Vec<u8>)> {
    let keep: Vec<usize> = (0..split.len()).filter(|&i| split.labels[i] != DROPPED_LABEL).collect();
    let mut signals = Array2::<f32>::zeros((keep.len(), points.nrows()));
    for (&i, mut row) in keep.iter().zip(signals.rows_mut()) {
        let mut rng = image_rng(cfg.seed, id, i);
        let frame = frame_for(cfg, &mut rng)?;
        let img = split.images.row(i);
        project_image(
            img.as_slice().expect("contiguous image"),
            split.rows,
            split.cols,
            points,
            &frame,
            cfg.half_extent_deg,
            row.as_slice_mut().expect("contiguous row"),
        );
    }
    let labels = keep.iter().map(|&i| split.labels[i]).collect();
    Ok((signals, labels))
}

pub fn make_sphere(mnist: &Mnist, cfg: &SphereConfig) -> Result<GraphDataset> {
    cfg.validate()?;
    let points = sphere_points(cfg.n_points, cfg.seed);
    let graph = build_knn_gaussian(points.view(), cfg.k, Bandwidth::Auto)?;
    let (train, train_labels) = project_split(&mnist.train, 0, &points, cfg)?;
    let (test, test_labels) = project_split(&mnist.test, 1, &points, cfg)?;
    Ok(GraphDataset {
        graph,
        train,
        train_labels,
        test,
        test_labels,
        classes: 9,
        meta: DatasetMeta {
            generator: "sphere".into(),
            params: serde_json::to_value(cfg)?,
            train_count: mnist.train.len(),
            test_count: mnist.test.len(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unperturbed_frame_is_the_coordinate_axes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = mild_frame(&mut rng, [1.0, 2.0, 3.0], 0.0).unwrap();
        assert_eq!(f, [[0.0, 0.0, 1.0], [0.0, 1.0, 0.0], [1.0, 0.0, 0.0]]);
    }

    #[test]
    fn frames_are_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            for f in [uniform_frame(&mut rng), mild_frame(&mut rng, [1.0, 2.0, 3.0], 0.2).unwrap()] {
                for i in 0..3 {
                    for j in 0..3 {
                        let want = if i == j { 1.0 } else { 0.0 };
                        assert!((dot(&f[i], &f[j]) - want).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn bicubic_reproduces_pixels_and_clamps() {
        let img = [0.0f32, 0.5, 1.0, 0.25];
        assert_eq!(bicubic(&img, 2, 2, 0.0, 1.0), 0.5);
        assert_eq!(bicubic(&img, 2, 2, 1.0, 1.0), 0.25);
        assert_eq!(bicubic(&img, 2, 2, 10.0, 10.0), 0.0);
        let spike = [0.0f32, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0];
        for k in 0..=20 {
            let v = bicubic(&spike, 1, 9, 0.0, k as f64 * 0.4);
            assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn centre_of_view_reads_the_image_centre() {
        let mut img = vec![0.0f32; 28 * 28];
        for r in 13..15 {
            for c in 13..15 {
                img[r * 28 + c] = 1.0;
            }
        }
        let frame = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let pts = ndarray::array![[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
        let mut out = [9.0f32; 3];
        project_image(&img, 28, 28, &pts, &frame, 50.0, &mut out);
        assert!(out[0] > 0.5);
        assert_eq!(&out[1..], &[0.0, 0.0]);
    }
}
