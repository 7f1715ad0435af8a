//! JSON checkpoints with base64 little-endian `f64` parameter blobs.
//!
//! The manifest records layer kinds and shapes plus an opaque configuration
//! echo; the caller rebuilds the layer stack (bases, supports, pool maps)
//! from that echo and then restores parameters into it.

use std::fs;
use std::path::Path;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::layers::Shape;
use crate::nn::network::Network;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerRecord {
    pub kind: String,
    pub input: Shape,
    pub output: Shape,
    pub params: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub architecture: String,
    pub config: serde_json::Value,
    pub layers: Vec<LayerRecord>,
    pub params: Vec<String>,
}

impl Checkpoint {
    pub fn capture(net: &Network, architecture: &str, config: serde_json::Value) -> Self {
        Checkpoint {
            architecture: architecture.to_string(),
            config,
            layers: net
                .layers
                .iter()
                .map(|l| LayerRecord {
                    kind: l.kind().to_string(),
                    input: l.input_shape(),
                    output: l.output_shape(),
                    params: l.param_count(),
                })
                .collect(),
            params: net.params.iter().map(|p| encode(p)).collect(),
        }
    }

    /// Copies the stored parameters into a network with the same layer layout.
    pub fn restore_into(&self, net: &mut Network) -> Result<()> {
        if net.layers.len() != self.layers.len() {
            return Err(Error::ShapeMismatch(format!(
                "checkpoint has {} layers, network has {}",
                self.layers.len(),
                net.layers.len()
            )));
        }
        for (idx, (rec, layer)) in self.layers.iter().zip(&net.layers).enumerate() {
            if rec.kind != layer.kind()
                || rec.input != layer.input_shape()
                || rec.output != layer.output_shape()
                || rec.params != layer.param_count()
            {
                return Err(Error::ShapeMismatch(format!(
                    "layer {idx}: checkpoint {} {:?}->{:?}, network {} {:?}->{:?}",
                    rec.kind,
                    rec.input,
                    rec.output,
                    layer.kind(),
                    layer.input_shape(),
                    layer.output_shape()
                )));
            }
        }
        let mut decoded = Vec::with_capacity(self.params.len());
        for (idx, (blob, rec)) in self.params.iter().zip(&self.layers).enumerate() {
            let p = decode(blob).map_err(|e| Error::ShapeMismatch(format!("layer {idx}: {e}")))?;
            if p.len() != rec.params {
                return Err(Error::ShapeMismatch(format!(
                    "layer {idx}: blob holds {} values, expected {}",
                    p.len(),
                    rec.params
                )));
            }
            decoded.push(p);
        }
        net.params = decoded;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            detail: e.to_string(),
        })
    }
}

fn encode(values: &[f64]) -> String {
    let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
    STANDARD.encode(bytes)
}

fn decode(blob: &str) -> std::result::Result<Vec<f64>, String> {
    let bytes = STANDARD.decode(blob).map_err(|e| e.to_string())?;
    if bytes.len() % 8 != 0 {
        return Err(format!("blob length {} is not a multiple of 8", bytes.len()));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}
