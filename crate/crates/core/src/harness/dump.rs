//! Node-domain views of learned filters.
//!
//! For a locally connected layer the filter of pair `(i, j)` at output node
//! `t` is its weight vector over the receptive field of `t`. For a spectral
//! layer it is the response `V diag(m_ij) V^T e_t` to an impulse at `t`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{Layer, Network};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterView {
    pub f_in: usize,
    pub f_out: usize,
    /// Node the filter is centred on.
    pub target: usize,
    pub values: Vec<f64>,
    pub participation_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DumpSummary {
    pub layer: usize,
    pub kind: String,
    pub filters: usize,
    pub mean_participation_ratio: f64,
}

/// `(sum f^2)^2 / (n sum f^4)`; 1 for a flat vector, `1/n` for a spike.
/// The zero vector yields 0.
pub fn participation_ratio(f: &[f64]) -> f64 {
    let s2: f64 = f.iter().map(|v| v * v).sum();
    let s4: f64 = f.iter().map(|v| v.powi(4)).sum();
    if s4 == 0.0 {
        0.0
    } else {
        s2 * s2 / (f.len() as f64 * s4)
    }
}

/// Filters of layer `layer` centred on each of `targets`.
pub fn filter_views(net: &Network, layer: usize, targets: &[usize]) -> Result<Vec<FilterView>> {
    let params = net.params.get(layer).ok_or(Error::BadLayerIndex { index: layer })?;
    let mut views = Vec::new();
    let mut push = |f_in, f_out, target, values: Vec<f64>| {
        let participation_ratio = participation_ratio(&values);
        views.push(FilterView { f_in, f_out, target, values, participation_ratio });
    };
    match &net.layers[layer] {
        Layer::Lrf(l) => {
            let mut offset = 0;
            for (t, field) in l.fields.iter().enumerate() {
                let block = field.len() * l.f_in * l.f_out;
                if targets.contains(&t) {
                    for i in 0..l.f_in {
                        for j in 0..l.f_out {
                            let mut values = vec![0.0; l.width];
                            for (r, &s) in field.iter().enumerate() {
                                values[s] = params[offset + (r * l.f_in + i) * l.f_out + j];
                            }
                            push(i, j, t, values);
                        }
                    }
                }
                offset += block;
            }
        }
        Layer::Spectral(l) => {
            let m = l.multipliers(params);
            let v = &l.basis.v;
            for &t in targets {
                if t >= l.width() {
                    return Err(Error::Config(format!("target node {t} outside {} nodes", l.width())));
                }
                let row = v.row(t);
                for i in 0..l.f_in {
                    for j in 0..l.f_out {
                        let coeff: Array1<f64> = &row * &m.row(i * l.f_out + j);
                        push(i, j, t, v.dot(&coeff).to_vec());
                    }
                }
            }
        }
        _ => return Err(Error::BadLayerIndex { index: layer }),
    }
    Ok(views)
}

/// Node nearest the centroid of `coords`.
pub fn central_node(coords: &Array2<f64>) -> usize {
    let centroid = coords.mean_axis(ndarray::Axis(0)).expect("nonempty coords");
    let mut best = (f64::INFINITY, 0);
    for (i, p) in coords.rows().into_iter().enumerate() {
        let d: f64 = p.iter().zip(&centroid).map(|(a, b)| (a - b).powi(2)).sum();
        if d < best.0 {
            best = (d, i);
        }
    }
    best.1
}

/// Writes `filters.csv`, `summary.json` and, for 2-D coordinates, one PGM
/// image per filter into `out`.
pub fn dump_filters(
    net: &Network,
    layer: usize,
    targets: &[usize],
    coords: Option<&Array2<f64>>,
    out: &Path,
    pgm: bool,
) -> Result<DumpSummary> {
    let views = filter_views(net, layer, targets)?;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let dims = coords.map_or(0, |c| c.ncols());
    let mut csv = String::from("f_in,f_out,target,node");
    for a in 0..dims {
        let _ = write!(csv, ",x{a}");
    }
    csv.push_str(",value\n");
    for v in &views {
        for (node, value) in v.values.iter().enumerate() {
            let _ = write!(csv, "{},{},{},{node}", v.f_in, v.f_out, v.target);
            if let Some(c) = coords {
                for a in 0..dims {
                    let _ = write!(csv, ",{}", c[[node, a]]);
                }
            }
            let _ = writeln!(csv, ",{value:e}");
        }
    }
    let path = out.join("filters.csv");
    fs::write(&path, csv).map_err(|e| Error::io(&path, e))?;

    if pgm {
        if let Some(c) = coords.filter(|c| c.ncols() == 2) {
            for v in &views {
                let path = out.join(format!("filter_t{}_i{}_j{}.pgm", v.target, v.f_in, v.f_out));
                fs::write(&path, render_pgm(c, &v.values)).map_err(|e| Error::io(&path, e))?;
            }
        }
    }
    let mean = views.iter().map(|v| v.participation_ratio).sum::<f64>() / views.len().max(1) as f64;
    let summary = DumpSummary {
        layer,
        kind: net.layers[layer].kind().to_string(),
        filters: views.len(),
        mean_participation_ratio: mean,
    };
    let path = out.join("summary.json");
    fs::write(&path, serde_json::to_string_pretty(&summary)?).map_err(|e| Error::io(&path, e))?;
    Ok(summary)
}

/// Binary PGM on the integer grid spanned by the coordinates: zero maps to
/// mid-gray, the largest magnitude to black or white.
fn render_pgm(coords: &Array2<f64>, values: &[f64]) -> Vec<u8> {
    let min = |a: usize| coords.column(a).iter().fold(f64::INFINITY, |m, &v| m.min(v));
    let max = |a: usize| coords.column(a).iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let (r0, c0) = (min(0), min(1));
    let rows = (max(0) - r0).round() as usize + 1;
    let cols = (max(1) - c0).round() as usize + 1;
    let peak = values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let mut img = vec![128u8; rows * cols];
    for (p, &v) in coords.rows().into_iter().zip(values) {
        let (r, c) = ((p[0] - r0).round() as usize, (p[1] - c0).round() as usize);
        img[r * cols + c] = (128.0 + 127.0 * v / peak).round().clamp(0.0, 255.0) as u8;
    }
    let mut out = format!("P5\n{cols} {rows}\n255\n").into_bytes();
    out.extend_from_slice(&img);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn participation_extremes() {
        assert!((participation_ratio(&[1.0; 8]) - 1.0).abs() < 1e-15);
        let mut spike = [0.0; 8];
        spike[3] = -2.0;
        assert!((participation_ratio(&spike) - 0.125).abs() < 1e-15);
        assert_eq!(participation_ratio(&[0.0; 4]), 0.0);
    }
}
