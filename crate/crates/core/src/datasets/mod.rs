//! MNIST ingestion, graph-signal dataset generators and the 1-NN baseline.

pub mod baseline;
pub mod mnist;
pub mod sphere;
pub mod subsampled;
pub mod synthetic;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;

pub use baseline::nn_baseline;
pub use mnist::{default_mnist_dir, Mnist, Split};
pub use sphere::{make_sphere, SphereConfig, SphereMode};
pub use subsampled::{make_subsampled, SubsampleConfig};
pub use synthetic::stationary_ring_signals;

/// Generator name and parameters; identifies a dataset for caching.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub generator: String,
    pub params: serde_json::Value,
    /// Size of the MNIST splits the dataset was generated from.
    pub train_count: usize,
    pub test_count: usize,
}

impl DatasetMeta {
    pub fn cache_key(&self) -> String {
        let json = serde_json::to_string(self).expect("meta serializes");
        Sha256::digest(json.as_bytes())
            .iter()
            .take(8)
            .fold(String::new(), |mut s, b| {
                let _ = write!(s, "{b:02x}");
                s
            })
    }
}

/// Signals on the nodes of a graph, one row per example, values in `[0, 1]`.
#[derive(Debug, Clone)]
pub struct GraphDataset {
    pub graph: WeightedGraph,
    pub train: Array2<f32>,
    pub train_labels: Vec<u8>,
    pub test: Array2<f32>,
    pub test_labels: Vec<u8>,
    pub classes: usize,
    pub meta: DatasetMeta,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    meta: DatasetMeta,
    nodes: usize,
    classes: usize,
    train_rows: usize,
    test_rows: usize,
    graph_hash: String,
    /// Columns of `coords.bin`, 0 when the graph has no coordinates.
    coord_dims: usize,
}

impl GraphDataset {
    pub fn n(&self) -> usize {
        self.graph.n()
    }

    /// Writes `manifest.json`, `graph.txt`, `signals.bin`, `labels.bin` and,
    /// when the graph has them, `coords.bin` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let manifest = Manifest {
            meta: self.meta.clone(),
            nodes: self.n(),
            classes: self.classes,
            train_rows: self.train.nrows(),
            test_rows: self.test.nrows(),
            graph_hash: self.graph.content_hash(),
            coord_dims: self.graph.coords().map_or(0, |c| c.ncols()),
        };
        self.graph.save_text(&dir.join("graph.txt"))?;
        if let Some(c) = self.graph.coords() {
            let bytes: Vec<u8> = c.iter().flat_map(|v| v.to_le_bytes()).collect();
            write(&dir.join("coords.bin"), &bytes)?;
        }
        let signals: Vec<u8> = self
            .train
            .iter()
            .chain(self.test.iter())
            .flat_map(|v| v.to_le_bytes())
            .collect();
        write(&dir.join("signals.bin"), &signals)?;
        let labels: Vec<u8> = self.train_labels.iter().chain(&self.test_labels).copied().collect();
        write(&dir.join("labels.bin"), &labels)?;
        // The manifest goes last so a partially written directory is not taken as complete.
        write(
            &dir.join("manifest.json"),
            serde_json::to_string_pretty(&manifest)?.as_bytes(),
        )
    }

    pub fn load(dir: &Path) -> Result<GraphDataset> {
        let path = dir.join("manifest.json");
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let m: Manifest = serde_json::from_str(&text)?;
        let bad = |path: PathBuf, detail: String| Error::Format { path, detail };
        let mut graph = WeightedGraph::load_text(&dir.join("graph.txt"))?;
        if graph.n() != m.nodes || graph.content_hash() != m.graph_hash {
            return Err(bad(dir.join("graph.txt"), "graph does not match manifest".into()));
        }
        if m.coord_dims > 0 {
            let path = dir.join("coords.bin");
            let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
            if bytes.len() != m.nodes * m.coord_dims * 8 {
                return Err(bad(path, "coordinate table has the wrong size".into()));
            }
            let values = bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            graph = graph.with_coords(Array2::from_shape_vec((m.nodes, m.coord_dims), values).expect("sized"))?;
        }
        let sig_path = dir.join("signals.bin");
        let bytes = fs::read(&sig_path).map_err(|e| Error::io(&sig_path, e))?;
        let rows = m.train_rows + m.test_rows;
        if bytes.len() != rows * m.nodes * 4 {
            return Err(bad(sig_path, format!("expected {} bytes, found {}", rows * m.nodes * 4, bytes.len())));
        }
        let values: Vec<f32> = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let (tr, te) = values.split_at(m.train_rows * m.nodes);
        let lab_path = dir.join("labels.bin");
        let labels = fs::read(&lab_path).map_err(|e| Error::io(&lab_path, e))?;
        if labels.len() != rows {
            return Err(bad(lab_path, format!("expected {rows} labels, found {}", labels.len())));
        }
        Ok(GraphDataset {
            graph,
            train: Array2::from_shape_vec((m.train_rows, m.nodes), tr.to_vec()).expect("sized"),
            train_labels: labels[..m.train_rows].to_vec(),
            test: Array2::from_shape_vec((m.test_rows, m.nodes), te.to_vec()).expect("sized"),
            test_labels: labels[m.train_rows..].to_vec(),
            classes: m.classes,
            meta: m.meta,
        })
    }

    /// Loads `root/<key>` when its manifest matches `meta`, otherwise runs
    /// `generate` and stores the result there.
    pub fn cached(
        root: &Path,
        meta: &DatasetMeta,
        generate: impl FnOnce() -> Result<GraphDataset>,
    ) -> Result<GraphDataset> {
        let dir = root.join(format!("{}-{}", meta.generator, meta.cache_key()));
        if dir.join("manifest.json").exists() {
            if let Ok(ds) = GraphDataset::load(&dir) {
                if &ds.meta == meta {
                    return Ok(ds);
                }
            }
        }
        let ds = generate()?;
        ds.save(&dir)?;
        Ok(ds)
    }
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
