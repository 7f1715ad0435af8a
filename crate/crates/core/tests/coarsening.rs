mod common;

use common::random_connected;
use gcnn::coarsening::{
    build_hierarchy, build_hierarchy_until, epsilon_cover, epsilon_cover_dense, ClusterHierarchy, SparseRows,
    DEFAULT_EPSILON,
};
use gcnn::datasets::subsampled::sample_pixels;
use gcnn::graph::{build_knn_gaussian, grid_points, Bandwidth, WeightedGraph};
use ndarray::Array2;
use proptest::prelude::*;

fn members(assignment: &[usize], size: usize) -> Vec<Vec<usize>> {
    let mut m = vec![Vec::new(); size];
    for (node, &c) in assignment.iter().enumerate() {
        m[c].push(node);
    }
    m
}

/// Every cluster has a member `s` with `sim[s][j] >= eps` for all others.
fn is_covering(sim: &SparseRows, assignment: &[usize], size: usize, eps: f64) -> bool {
    members(assignment, size).iter().all(|c| {
        !c.is_empty() && c.iter().any(|&s| c.iter().all(|&j| j == s || sim.get(s, j) >= eps))
    })
}

fn check_hierarchy(h: &ClusterHierarchy) -> Result<(), TestCaseError> {
    for k in 1..h.sizes.len() {
        let prev = h.weights[k - 1].to_dense();
        let groups = h.pool_map(k);
        let a = h.aggregates[k].to_dense();
        for (c, gc) in groups.iter().enumerate() {
            for (d, gd) in groups.iter().enumerate() {
                let mut sum = 0.0;
                for &s in gc {
                    for &t in gd {
                        if prev[[s, t]] != 0.0 {
                            sum += prev[[s, t]];
                        }
                    }
                }
                prop_assert_eq!(a[[c, d]], sum, "A_{}[{}, {}]", k, c, d);
            }
        }
        let total_prev: f64 = prev.sum();
        prop_assert!((a.sum() - total_prev).abs() <= 1e-10 * total_prev);
        let w = h.weights[k].to_dense();
        for (c, row) in w.rows().into_iter().enumerate() {
            prop_assert!((row.sum() - 1.0).abs() <= 1e-10, "row {} of W_{}", c, k);
            for (d, &v) in row.iter().enumerate() {
                let total = a.row(c).iter().fold(0.0, |acc, x| acc + x);
                prop_assert_eq!(v, a[[c, d]] / total);
            }
        }
        let sim = if k == 1 { h.weights[0].row_normalized() } else { h.weights[k - 1].clone() };
        prop_assert!(is_covering(&sim, &h.assignments[k - 1], h.sizes[k], h.epsilon));
        prop_assert!(h.sizes[k] < h.sizes[k - 1]);
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn hierarchy_matches_brute_force(n in 2usize..=50, density in 0.0f64..0.3, eps in 0.02f64..0.4, seed in any::<u64>()) {
        let g = random_connected(n, density, seed);
        let h = build_hierarchy_until(&g, 1, eps).unwrap();
        check_hierarchy(&h)?;
        prop_assert_eq!(build_hierarchy_until(&g, 1, eps).unwrap(), h);
    }

    #[test]
    fn cover_is_a_covering_partition(n in 1usize..40, eps in 0.05f64..0.9, seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let sim = Array2::from_shape_fn((n, n), |_| rand::Rng::random_range(&mut r, 0.0..1.0));
        let a = epsilon_cover_dense(&sim, eps);
        let size = a.iter().max().unwrap() + 1;
        prop_assert!((0..size).all(|c| a.contains(&c)));
        prop_assert!(is_covering(&SparseRows::from_dense(&sim), &a, size, eps));
    }

    #[test]
    fn pool_maps_compose(n in 4usize..50, seed in any::<u64>()) {
        let g = random_connected(n, 0.1, seed);
        let h = build_hierarchy_until(&g, 1, DEFAULT_EPSILON).unwrap();
        let top = h.sizes.len() - 1;
        let direct = h.pool_map_between(0, top);
        let mut covered: Vec<usize> = direct.iter().flatten().copied().collect();
        covered.sort_unstable();
        prop_assert_eq!(covered, (0..n).collect::<Vec<_>>());
        if top >= 2 {
            for (c, nodes) in h.pool_map_between(0, 2).iter().enumerate() {
                let via: Vec<usize> = h.pool_map(2)[c].iter().flat_map(|&m| h.pool_map(1)[m].clone()).collect();
                let mut via = via;
                via.sort_unstable();
                prop_assert_eq!(&via, nodes);
            }
        }
    }
}

#[test]
fn block_model_is_recovered() {
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
    let blocks = vec![(0..20).collect::<Vec<_>>(), (20..40).collect()];
    let raw = epsilon_cover(&SparseRows::from_dense(&w), 0.5);
    assert_eq!(members(&raw, 2), blocks);
    let g = WeightedGraph::from_weights(w).unwrap();
    let h = build_hierarchy(&g, 1, 0.04).unwrap();
    assert_eq!(h.pool_map(1), blocks);
}

#[test]
fn subsampled_grid_oversampling_is_moderate() {
    let pixels = sample_pixels(28, 28, 400, 0);
    let grid = grid_points(28, 28);
    let pts = Array2::from_shape_fn((400, 2), |(i, c)| grid[[pixels[i], c]]);
    let g = build_knn_gaussian(pts.view(), 8, Bandwidth::Auto).unwrap();
    let h = build_hierarchy(&g, 2, DEFAULT_EPSILON).unwrap();
    for k in 1..=2 {
        let alpha = h.oversampling(k);
        assert!(alpha > 1.0 && alpha < 4.0, "alpha_{k} = {alpha}");
    }
}

#[test]
fn hierarchy_survives_disk_roundtrip() {
    let g = random_connected(30, 0.1, 9);
    let h = build_hierarchy_until(&g, 1, DEFAULT_EPSILON).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("h.json");
    h.save(&path).unwrap();
    assert_eq!(ClusterHierarchy::load(&path).unwrap(), h);
}

#[test]
fn bad_epsilon_is_rejected() {
    let g = random_connected(5, 0.0, 1);
    assert!(build_hierarchy(&g, 1, 0.0).is_err());
    assert!(build_hierarchy(&g, 1, 1.5).is_err());
    assert!(build_hierarchy(&g, 0, 0.1).is_err());
}
