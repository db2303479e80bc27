use std::f64::consts::PI;

use chemcons_core::topology::{
    algebraic_connectivity, laplacian, make_complete, make_regular_lattice, make_ring,
    make_small_world, mirror_laplacian, NetworkGraph,
};
use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;

fn nalgebra_lambda2(g: &NetworkGraph) -> f64 {
    let l = mirror_laplacian(g);
    let m = DMatrix::from_fn(l.rows(), l.cols(), |i, j| l[(i, j)]);
    let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev[1]
}

#[test]
fn lambda2_matches_nalgebra() {
    let graphs = [
        make_ring(25).unwrap(),
        make_complete(25).unwrap(),
        make_regular_lattice(25, 3).unwrap(),
        make_small_world(25, 75, 0.2, 3).unwrap(),
        make_small_world(60, 180, 0.2, 9).unwrap(),
        make_regular_lattice(40, 1).unwrap(),
    ];
    for g in &graphs {
        let ours = algebraic_connectivity(g).unwrap();
        assert!((ours - nalgebra_lambda2(g)).abs() < 1e-9);
    }
}

#[test]
fn circulant_closed_forms() {
    for m in [5, 12, 25, 64] {
        let ring = 1.0 - (2.0 * PI / m as f64).cos();
        assert!((algebraic_connectivity(&make_ring(m).unwrap()).unwrap() - ring).abs() < 1e-9);
        let undirected = 2.0 * (1.0 - (2.0 * PI / m as f64).cos());
        assert!((algebraic_connectivity(&make_regular_lattice(m, 1).unwrap()).unwrap() - undirected).abs() < 1e-9);
        if m > 6 {
            let k3 = 6.0 - 2.0 * (1..=3).map(|j| (2.0 * PI * j as f64 / m as f64).cos()).sum::<f64>();
            assert!((algebraic_connectivity(&make_regular_lattice(m, 3).unwrap()).unwrap() - k3).abs() < 1e-9);
        }
    }
}

/// 200 realizations at M = 25, 75 undirected edges, p = 0.2. The sweep
/// spans [0.889, 1.883]; the band leaves a little room on both sides and
/// stays above the k = 3 lattice (0.8523).
#[test]
fn small_world_lambda2_band() {
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for seed in 0..200 {
        let l2 = algebraic_connectivity(&make_small_world(25, 75, 0.2, seed).unwrap()).unwrap();
        lo = lo.min(l2);
        hi = hi.max(l2);
    }
    println!("small-world lambda_2 over 200 seeds: [{lo:.4}, {hi:.4}]");
    assert!(lo >= 0.86 && hi <= 2.1, "[{lo}, {hi}]");
}

#[test]
fn disconnected_mirror_has_zero_lambda2() {
    let g = NetworkGraph::from_edges(6, &[(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)]).unwrap();
    assert!(!g.is_strongly_connected());
    assert!(nalgebra_lambda2(&g).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn generators_are_balanced_and_connected(m in 7usize..40, k in 1usize..4, p in 0.0f64..1.0, seed in any::<u64>()) {
        let k = k.min((m - 1) / 2);
        for g in [
            make_ring(m).unwrap(),
            make_complete(m).unwrap(),
            make_regular_lattice(m, k).unwrap(),
            make_small_world(m, k * m, p, seed).unwrap(),
        ] {
            prop_assert!(g.is_balanced());
            prop_assert!(g.is_strongly_connected());
            let l = laplacian(&g);
            for i in 0..m {
                prop_assert_eq!((0..m).map(|j| l[(i, j)]).sum::<f64>(), 0.0);
                prop_assert_eq!((0..m).map(|j| l[(j, i)]).sum::<f64>(), 0.0);
            }
            prop_assert!(algebraic_connectivity(&g).unwrap() > 0.0);
        }
        let sw = make_small_world(m, k * m, p, seed).unwrap();
        prop_assert_eq!(sw.edge_count(), 2 * k * m);
    }
}
