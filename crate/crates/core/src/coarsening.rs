//! Multiscale agglomerative clustering.
//!
//! Level 0 is the input graph. Each further level covers the row-normalized
//! weights of the previous level with [`epsilon_cover`], sums weights between
//! clusters into `A_k`, and row-normalizes that into `W_k`.

use std::fs;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;

pub const DEFAULT_EPSILON: f64 = 0.05;

/// Row-major sparse matrix holding only nonzero entries, columns ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseRows {
    pub cols: usize,
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl SparseRows {
    pub fn from_dense(m: &Array2<f64>) -> Self {
        let rows = m
            .rows()
            .into_iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .filter(|(_, &w)| w != 0.0)
                    .map(|(j, &w)| (j, w))
                    .collect()
            })
            .collect();
        SparseRows {
            cols: m.ncols(),
            rows,
        }
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut m = Array2::zeros((self.rows.len(), self.cols));
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, w) in row {
                m[[i, j]] = w;
            }
        }
        m
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match self.rows[i].binary_search_by_key(&j, |&(c, _)| c) {
            Ok(p) => self.rows[i][p].1,
            Err(_) => 0.0,
        }
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// Each row divided by its sum; all-zero rows stay zero.
    pub fn row_normalized(&self) -> Self {
        let rows = self
            .rows
            .iter()
            .map(|r| {
                let s: f64 = r.iter().map(|&(_, w)| w).sum();
                if s > 0.0 {
                    r.iter().map(|&(j, w)| (j, w / s)).collect()
                } else {
                    r.clone()
                }
            })
            .collect();
        SparseRows {
            cols: self.cols,
            rows,
        }
    }

    pub fn support(&self) -> Vec<Vec<usize>> {
        self.rows
            .iter()
            .map(|r| r.iter().map(|&(j, _)| j).collect())
            .collect()
    }
}

/// Greedy cover: nodes are visited by descending count of similarities
/// `>= epsilon` (ties by index); each unassigned node seeds a cluster and
/// absorbs every unassigned `j` with `sim[seed][j] >= epsilon`.
///
/// Returns the cluster id of every node; ids follow seed order.
pub fn epsilon_cover(sim: &SparseRows, epsilon: f64) -> Vec<usize> {
    let n = sim.nrows();
    let degree: Vec<usize> = sim
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| r.iter().filter(|&&(j, w)| j != i && w >= epsilon).count())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| degree[b].cmp(&degree[a]).then(a.cmp(&b)));

    let mut assignment = vec![usize::MAX; n];
    let mut next = 0;
    for seed in order {
        if assignment[seed] != usize::MAX {
            continue;
        }
        assignment[seed] = next;
        for &(j, w) in &sim.rows[seed] {
            if w >= epsilon && assignment[j] == usize::MAX {
                assignment[j] = next;
            }
        }
        next += 1;
    }
    assignment
}

/// Dense convenience wrapper around [`epsilon_cover`].
pub fn epsilon_cover_dense(sim: &Array2<f64>, epsilon: f64) -> Vec<usize> {
    epsilon_cover(&SparseRows::from_dense(sim), epsilon)
}

/// `A(i, j) = sum over s in cluster i, t in cluster j of w(s, t)`, accumulated
/// in ascending `(s, t)` order.
pub fn aggregate(w: &SparseRows, assignment: &[usize], clusters: usize) -> SparseRows {
    let mut dense_rows: Vec<std::collections::BTreeMap<usize, f64>> =
        vec![Default::default(); clusters];
    for (s, row) in w.rows.iter().enumerate() {
        let ci = assignment[s];
        for &(t, v) in row {
            *dense_rows[ci].entry(assignment[t]).or_insert(0.0) += v;
        }
    }
    SparseRows {
        cols: clusters,
        rows: dense_rows
            .into_iter()
            .map(|m| m.into_iter().filter(|&(_, v)| v != 0.0).collect())
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterHierarchy {
    pub epsilon: f64,
    /// `assignments[k - 1]` maps nodes of level `k - 1` to clusters of level `k`.
    pub assignments: Vec<Vec<usize>>,
    /// Aggregated weights per level; `aggregates[0]` is the input weights.
    pub aggregates: Vec<SparseRows>,
    /// Row-normalized weights per level; `weights[0]` is the input weights.
    pub weights: Vec<SparseRows>,
    /// `sizes[k] = |Omega_k|`.
    pub sizes: Vec<usize>,
}

impl ClusterHierarchy {
    /// Number of coarse scales.
    pub fn scales(&self) -> usize {
        self.assignments.len()
    }

    /// Neighborhoods `N_k = supp(W_k)`.
    pub fn supports(&self, k: usize) -> Vec<Vec<usize>> {
        self.weights[k].support()
    }

    /// Mean neighborhood size at level `k`.
    pub fn mean_support(&self, k: usize) -> f64 {
        self.weights[k].nnz() as f64 / self.sizes[k] as f64
    }

    /// Oversampling factor `S_k d_k / d_{k-1}` for `k >= 1`.
    pub fn oversampling(&self, k: usize) -> f64 {
        self.mean_support(k) * self.sizes[k] as f64 / self.sizes[k - 1] as f64
    }

    /// Members of every level-`k` cluster, as ascending indices of level `k - 1`.
    pub fn pool_map(&self, k: usize) -> Vec<Vec<usize>> {
        invert(&self.assignments[k - 1], self.sizes[k])
    }

    /// Members of every level-`to` cluster as ascending indices of level `from`.
    pub fn pool_map_between(&self, from: usize, to: usize) -> Vec<Vec<usize>> {
        let mut assignment: Vec<usize> = (0..self.sizes[from]).collect();
        for k in from..to {
            for a in assignment.iter_mut() {
                *a = self.assignments[k][*a];
            }
        }
        invert(&assignment, self.sizes[to])
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }
}

fn invert(assignment: &[usize], clusters: usize) -> Vec<Vec<usize>> {
    let mut members = vec![Vec::new(); clusters];
    for (node, &c) in assignment.iter().enumerate() {
        members[c].push(node);
    }
    members
}

fn push_level(h: &mut ClusterHierarchy) -> Result<()> {
    let k = h.assignments.len() + 1;
    let prev = &h.weights[k - 1];
    let sim = if k == 1 { prev.row_normalized() } else { prev.clone() };
    let assignment = epsilon_cover(&sim, h.epsilon);
    let size = assignment.iter().max().map_or(0, |m| m + 1);
    if size >= h.sizes[k - 1] {
        return Err(Error::TooManyScales { scale: k, size });
    }
    let a = aggregate(prev, &assignment, size);
    h.weights.push(a.row_normalized());
    h.aggregates.push(a);
    h.assignments.push(assignment);
    h.sizes.push(size);
    Ok(())
}

fn level_zero(g: &WeightedGraph, epsilon: f64) -> ClusterHierarchy {
    let w0 = SparseRows::from_dense(g.weights());
    ClusterHierarchy {
        epsilon,
        assignments: Vec::new(),
        aggregates: vec![w0.clone()],
        weights: vec![w0],
        sizes: vec![g.n()],
    }
}

/// Builds `scales` coarse levels above `g`.
pub fn build_hierarchy(g: &WeightedGraph, scales: usize, epsilon: f64) -> Result<ClusterHierarchy> {
    if scales == 0 {
        return Err(Error::Config("hierarchy needs at least one scale".into()));
    }
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::Config(format!("epsilon {epsilon} outside (0, 1]")));
    }
    let mut h = level_zero(g, epsilon);
    for _ in 0..scales {
        push_level(&mut h)?;
    }
    Ok(h)
}

/// Adds levels until the coarsest has at most `target` clusters or a level
/// stops shrinking.
pub fn build_hierarchy_until(g: &WeightedGraph, target: usize, epsilon: f64) -> Result<ClusterHierarchy> {
    let mut h = level_zero(g, epsilon);
    while *h.sizes.last().unwrap() > target.max(1) {
        if push_level(&mut h).is_err() {
            break;
        }
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    pub(crate) fn block_model() -> Array2<f64> {
        let mut w = Array2::zeros((40, 40));
        for i in 0..40 {
            for j in 0..40 {
                if i != j && (i < 20) == (j < 20) {
                    w[[i, j]] = 0.9;
                }
            }
        }
        w[[19, 20]] = 0.05;
        w[[20, 19]] = 0.05;
        w
    }

    #[test]
    fn row_normalize_example() {
        let m = SparseRows::from_dense(&array![[1.0, 1.0], [3.0, 1.0]]).row_normalized();
        assert_eq!(m.to_dense(), array![[0.5, 0.5], [0.75, 0.25]]);
    }

    #[test]
    fn cover_extremes() {
        let full = Array2::from_elem((5, 5), 0.5) - Array2::<f64>::eye(5) * 0.5;
        assert!(epsilon_cover_dense(&full, 0.4).iter().all(|&c| c == 0));
        assert_eq!(epsilon_cover_dense(&full, 0.6), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn cover_recovers_blocks() {
        let a = epsilon_cover_dense(&block_model(), 0.5);
        assert!(a[..20].iter().all(|&c| c == a[0]));
        assert!(a[20..].iter().all(|&c| c == a[20]));
        assert_ne!(a[0], a[20]);
    }

    #[test]
    fn two_nodes_collapse() {
        let g = WeightedGraph::from_weights(array![[0.0, 2.0], [2.0, 0.0]]).unwrap();
        let h = build_hierarchy(&g, 1, 0.5).unwrap();
        assert_eq!(h.sizes, vec![2, 1]);
        assert_eq!(h.aggregates[1].to_dense(), array![[4.0]]);
        assert_eq!(h.weights[1].to_dense(), array![[1.0]]);
        assert_eq!(h.pool_map(1), vec![vec![0, 1]]);
        assert!(matches!(build_hierarchy(&g, 2, 0.5), Err(Error::TooManyScales { scale: 2, .. })));
    }

    #[test]
    fn hierarchy_json_roundtrip() {
        let g = WeightedGraph::from_weights(block_model()).unwrap();
        // Row-normalized within-block similarity is about 1/19.
        let h = build_hierarchy(&g, 1, 0.04).unwrap();
        assert_eq!(h.sizes, vec![40, 2]);
        assert_eq!(h.pool_map(1), vec![(0..20).collect::<Vec<_>>(), (20..40).collect()]);
        assert_eq!(ClusterHierarchy::from_json(&h.to_json().unwrap()).unwrap(), h);
    }
}
