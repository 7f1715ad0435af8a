//! On-disk cache of eigenbases, keyed by graph content hash, Laplacian kind
//! and cutoff.
//!
//! Layout (little-endian): the 8-byte magic, `n` and `d` as `u64`, the kind
//! byte, the 64-byte hex graph hash, `d` eigenvalues, then `V` row-major.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::graph::{LaplacianKind, WeightedGraph};
use crate::spectral::basis::{eigendecompose, SpectralBasis};

const MAGIC: &[u8; 8] = b"GCNNBAS1";

pub fn cache_path(dir: &Path, hash: &str, kind: LaplacianKind, d: usize) -> PathBuf {
    dir.join(format!("{}-{}-{d}.basis", &hash[..16.min(hash.len())], kind.as_str()))
}

/// Returns the basis of `graph`, reading it from `dir` when a full or
/// exact-cutoff entry exists and storing the full decomposition otherwise.
pub fn cached_basis(
    graph: &WeightedGraph,
    kind: LaplacianKind,
    d: usize,
    dir: Option<&Path>,
) -> Result<SpectralBasis> {
    let n = graph.n();
    let Some(dir) = dir else {
        return eigendecompose(&graph.laplacian(kind), d);
    };
    let hash = graph.content_hash();
    for key in [d, n] {
        let path = cache_path(dir, &hash, kind, key);
        if path.exists() {
            if let Ok(basis) = read_basis(&path, &hash, kind, n) {
                if basis.d() >= d {
                    return basis.truncate(d);
                }
            }
        }
    }
    let full = eigendecompose(&graph.laplacian(kind), n)?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_basis(&cache_path(dir, &hash, kind, n), &hash, &full)?;
    full.truncate(d)
}

pub fn write_basis(path: &Path, hash: &str, basis: &SpectralBasis) -> Result<()> {
    let (n, d) = (basis.n(), basis.d());
    let mut buf = Vec::with_capacity(8 + 17 + 64 + 8 * d * (n + 1));
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(n as u64).to_le_bytes());
    buf.extend_from_slice(&(d as u64).to_le_bytes());
    buf.push(kind_byte(basis.kind));
    let mut hash_bytes = [b'0'; 64];
    let hb = hash.as_bytes();
    hash_bytes[..hb.len().min(64)].copy_from_slice(&hb[..hb.len().min(64)]);
    buf.extend_from_slice(&hash_bytes);
    for l in &basis.lambda {
        buf.extend_from_slice(&l.to_le_bytes());
    }
    for v in basis.v.iter() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    // Write then rename so concurrent readers never see a partial file.
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(&buf).map_err(|e| Error::io(&tmp, e))?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn read_basis(path: &Path, hash: &str, kind: LaplacianKind, n: usize) -> Result<SpectralBasis> {
    let mut buf = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut buf))
        .map_err(|e| Error::io(path, e))?;
    let bad = |detail: &str| Error::Format {
        path: path.to_path_buf(),
        detail: detail.to_string(),
    };
    if buf.len() < 89 || &buf[..8] != MAGIC {
        return Err(bad("not a basis cache file"));
    }
    let word = |at: usize| u64::from_le_bytes(buf[at..at + 8].try_into().unwrap()) as usize;
    let (file_n, d) = (word(8), word(16));
    if file_n != n || buf[24] != kind_byte(kind) || &buf[25..89] != hash.as_bytes() {
        return Err(bad("cache key mismatch"));
    }
    if d == 0 || d > n || buf.len() != 89 + 8 * d * (n + 1) {
        return Err(bad("unexpected payload size"));
    }
    let floats: Vec<f64> = buf[89..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let lambda = floats[..d].to_vec();
    let v = Array2::from_shape_vec((n, d), floats[d..].to_vec()).map_err(|_| bad("shape"))?;
    Ok(SpectralBasis { kind, lambda, v })
}

fn kind_byte(kind: LaplacianKind) -> u8 {
    match kind {
        LaplacianKind::Combinatorial => 0,
        LaplacianKind::Normalized => 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_knn_gaussian, grid_points, Bandwidth};

    #[test]
    fn cache_roundtrip_is_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let g = build_knn_gaussian(grid_points(4, 5).view(), 4, Bandwidth::Auto).unwrap();
        let fresh = cached_basis(&g, LaplacianKind::Normalized, 7, Some(dir.path())).unwrap();
        let again = cached_basis(&g, LaplacianKind::Normalized, 7, Some(dir.path())).unwrap();
        assert_eq!(fresh, again);
        let full = cache_path(dir.path(), &g.content_hash(), LaplacianKind::Normalized, 20);
        assert!(full.exists());
        assert!(read_basis(&full, &g.content_hash(), LaplacianKind::Combinatorial, 20).is_err());
    }
}
