mod common;

use common::{random_connected, random_matrix};
use gcnn::datasets::subsampled::sample_pixels;
use gcnn::graph::{build_covariance_graph, build_knn_gaussian, grid_points, Bandwidth, LaplacianKind, WeightedGraph};
use gcnn::spectral::eigen::symmetric_eigen;
use gcnn::Error;
use ndarray::{array, Array1, Array2};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn laplacian_is_symmetric_psd_with_zero_row_sums(n in 2usize..30, seed in any::<u64>()) {
        let g = random_connected(n, 0.2, seed);
        let l = g.laplacian(LaplacianKind::Combinatorial).matrix;
        for i in 0..n {
            prop_assert!(l.row(i).sum().abs() < 1e-12);
            for j in 0..n {
                prop_assert_eq!(l[[i, j]], l[[j, i]]);
            }
        }
        let x = random_matrix(n, 1, seed ^ 1).column(0).to_owned();
        prop_assert!(x.dot(&l.dot(&x)) >= -1e-12);
    }

    #[test]
    fn smoothness_is_twice_the_quadratic_form(n in 2usize..40, seed in any::<u64>()) {
        let g = random_connected(n, 0.3, seed);
        let x: Array1<f64> = random_matrix(n, 1, seed.wrapping_add(7)).column(0).to_owned();
        let l = g.laplacian(LaplacianKind::Combinatorial).matrix;
        let q = 2.0 * x.dot(&l.dot(&x));
        let s = g.smoothness(x.as_slice().unwrap());
        prop_assert!((s - q).abs() <= 1e-10 * q.abs().max(1e-300));
    }

    #[test]
    fn normalized_spectrum_lies_in_zero_two(n in 2usize..25, seed in any::<u64>()) {
        let g = random_connected(n, 0.3, seed);
        let (lambda, _) = symmetric_eigen(&g.laplacian(LaplacianKind::Normalized).matrix).unwrap();
        prop_assert!(lambda[0].abs() < 1e-9);
        prop_assert!(lambda.iter().all(|&l| (-1e-9..=2.0 + 1e-9).contains(&l)));
    }

    #[test]
    fn text_roundtrip_keeps_hash(n in 2usize..20, seed in any::<u64>()) {
        let g = random_connected(n, 0.3, seed);
        let back = WeightedGraph::from_text(&g.to_text()).unwrap();
        prop_assert_eq!(back.weights(), g.weights());
        prop_assert_eq!(back.content_hash(), g.content_hash());
    }
}

#[test]
fn invalid_weights_are_rejected() {
    assert!(WeightedGraph::from_weights(array![[0.0, 1.0], [0.5, 0.0]]).is_err());
    assert!(WeightedGraph::from_weights(array![[0.0, -1.0], [-1.0, 0.0]]).is_err());
    assert!(WeightedGraph::from_weights(array![[1.0, 1.0], [1.0, 0.0]]).is_err());
    let split = array![
        [0.0, 1.0, 0.0, 0.0],
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [0.0, 0.0, 1.0, 0.0]
    ];
    assert!(WeightedGraph::from_weights(split).is_err());
}

#[test]
fn knn_on_subsampled_pixels_has_expected_degree() {
    let pixels = sample_pixels(28, 28, 400, 0);
    let grid = grid_points(28, 28);
    let pts = Array2::from_shape_fn((400, 2), |(i, c)| grid[[pixels[i], c]]);
    let g = build_knn_gaussian(pts.view(), 8, Bandwidth::Auto).unwrap();
    let deg = g.mean_degree();
    assert!((8.0..=16.0).contains(&deg), "mean degree {deg}");
    let w = g.weights();
    assert!(w.iter().all(|&v| (0.0..=1.0).contains(&v)));
    assert!((0..400).all(|i| w[[i, i]] == 0.0));
}

#[test]
fn coincident_points_are_reported() {
    let pts = array![[0.0, 0.0], [0.0, 0.0], [0.0, 0.0], [1.0, 1.0]];
    assert!(matches!(
        build_knn_gaussian(pts.view(), 2, Bandwidth::Auto),
        Err(Error::DuplicatePoints { .. })
    ));
}

#[test]
fn covariance_graph_of_white_noise_is_weak() {
    let samples = 20_000;
    let mut r = common::rng(3);
    let x = Array2::from_shape_fn((samples, 6), |_| rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut r));
    let g = build_covariance_graph(x.view()).unwrap();
    let bound = 5.0 / (samples as f64).sqrt();
    assert!(g.weights().iter().all(|&w| w < bound));
}

#[test]
fn covariance_graph_rejects_constant_coordinates() {
    let mut x = random_matrix(50, 4, 1);
    x.column_mut(2).fill(3.0);
    assert!(matches!(build_covariance_graph(x.view()), Err(Error::DegenerateData { index: 2 })));
}
