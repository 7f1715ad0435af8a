//! IDX reader for the MNIST distribution files.

use std::fs;
use std::path::{Path, PathBuf};

use ndarray::{Array2, Axis};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

pub const TRAIN_IMAGES: &str = "train-images-idx3-ubyte";
pub const TRAIN_LABELS: &str = "train-labels-idx1-ubyte";
pub const TEST_IMAGES: &str = "t10k-images-idx3-ubyte";
pub const TEST_LABELS: &str = "t10k-labels-idx1-ubyte";

/// Images flattened row-major to `rows * cols` pixels in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub images: Array2<f32>,
    pub labels: Vec<u8>,
    pub rows: usize,
    pub cols: usize,
}

impl Split {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn select(&self, indices: &[usize]) -> Split {
        Split {
            images: self.images.select(Axis(0), indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            rows: self.rows,
            cols: self.cols,
        }
    }

    /// `count` distinct examples drawn by `seed`, kept in ascending index order.
    /// Asking for at least the whole split returns it unchanged.
    pub fn sample(&self, count: usize, seed: u64) -> Split {
        if count >= self.len() {
            return self.clone();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut idx = sample(&mut rng, self.len(), count).into_vec();
        idx.sort_unstable();
        self.select(&idx)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mnist {
    pub train: Split,
    pub test: Split,
}

impl Mnist {
    /// Reads the four standard files from `dir`.
    pub fn load(dir: &Path) -> Result<Mnist> {
        let split = |images: &str, labels: &str| -> Result<Split> {
            let (images, rows, cols) = read_images(&dir.join(images))?;
            let labels_path = dir.join(labels);
            let labels = read_labels(&labels_path)?;
            if labels.len() != images.nrows() {
                return Err(Error::Format {
                    path: labels_path,
                    detail: format!("{} labels for {} images", labels.len(), images.nrows()),
                });
            }
            Ok(Split { images, labels, rows, cols })
        };
        Ok(Mnist {
            train: split(TRAIN_IMAGES, TRAIN_LABELS)?,
            test: split(TEST_IMAGES, TEST_LABELS)?,
        })
    }

    /// Random subsets of both splits, with independent draws per split.
    pub fn sample(&self, train: usize, test: usize, seed: u64) -> Mnist {
        Mnist {
            train: self.train.sample(train, seed),
            test: self.test.sample(test, seed ^ 0x9e37_79b9_7f4a_7c15),
        }
    }
}

/// Directory holding the MNIST files: `GCNN_MNIST_DIR` if set, else
/// `data/mnist` under the workspace root.
pub fn default_mnist_dir() -> PathBuf {
    match std::env::var_os("GCNN_MNIST_DIR") {
        Some(dir) => PathBuf::from(dir),
        None => Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist"),
    }
}

fn read_header(path: &Path, bytes: &[u8], magic: u32, dims: usize) -> Result<Vec<usize>> {
    let need = 4 + 4 * dims;
    if bytes.len() < need {
        return Err(Error::TruncatedFile {
            path: path.to_path_buf(),
            detail: format!("header needs {need} bytes, file has {}", bytes.len()),
        });
    }
    let word = |at: usize| u32::from_be_bytes(bytes[at..at + 4].try_into().unwrap());
    let found = word(0);
    if found != magic {
        return Err(Error::BadMagic {
            path: path.to_path_buf(),
            expected: magic,
            found,
        });
    }
    Ok((0..dims).map(|d| word(4 + 4 * d) as usize).collect())
}

fn read_payload<'a>(path: &Path, bytes: &'a [u8], offset: usize, len: usize) -> Result<&'a [u8]> {
    bytes.get(offset..offset + len).ok_or_else(|| Error::TruncatedFile {
        path: path.to_path_buf(),
        detail: format!("expected {len} data bytes, found {}", bytes.len().saturating_sub(offset)),
    })
}

/// Returns `(images, rows, cols)`.
pub fn read_images(path: &Path) -> Result<(Array2<f32>, usize, usize)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let dims = read_header(path, &bytes, IMAGES_MAGIC, 3)?;
    let (count, rows, cols) = (dims[0], dims[1], dims[2]);
    let data = read_payload(path, &bytes, 16, count * rows * cols)?;
    let pixels = data.iter().map(|&b| b as f32 / 255.0).collect();
    let images = Array2::from_shape_vec((count, rows * cols), pixels).expect("sized above");
    Ok((images, rows, cols))
}

pub fn read_labels(path: &Path) -> Result<Vec<u8>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let dims = read_header(path, &bytes, LABELS_MAGIC, 1)?;
    Ok(read_payload(path, &bytes, 8, dims[0])?.to_vec())
}
