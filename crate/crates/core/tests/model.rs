mod common;

use common::{bfs_components, fixture, random_matrix, random_support};
use lsd_core::codes::{code_capacity_model, random_regular_seed, surface_code, Side};
use lsd_core::model::{error_clusters, fault_graph, load_model, save_model, DetectorModel, FaultGraph};
use lsd_core::{Model, SparseBinaryMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn minimal_file_parses() {
    let m = Model::parse("qdem 1 2 3 1\nf 0.1 d 0 L 0\nf 0.2 d 0 1\nf 0.3 d 1\n").unwrap();
    assert_eq!((m.num_detectors(), m.num_faults(), m.num_observables()), (2, 3, 1));
    assert_eq!(m.priors(), &[0.1, 0.2, 0.3]);
    assert_eq!(m.h().col(1), &[0, 1]);
    assert_eq!(m.observables().row(0), &[0]);
}

#[test]
fn malformed_files_are_rejected() {
    for text in [
        "",
        "qdem 2 2 3 1\nf 0.1 d 0\nf 0.1 d 0 1\nf 0.1 d 1\n",
        "qdem 1 2 3 1\nf 0.1 d 0\nf 0.1 d 0 1\n",
        "qdem 1 2 3 1\nf 0.1 d 0\nf 1.5 d 0 1\nf 0.1 d 1\n",
        "qdem 1 2 3 1\nf 0.1 d 0\nf 0.1 d 0 7\nf 0.1 d 1\n",
        "qdem 1 2 3 1\nf 0.1 d 0 L 3\nf 0.1 d 0 1\nf 0.1 d 1\n",
    ] {
        assert!(Model::parse(text).is_err(), "accepted {text:?}");
    }
}

#[test]
fn shipped_surface_fixtures_match_constructor() {
    let code = surface_code(3).unwrap();
    for side in [Side::X, Side::Z] {
        let m: Model = load_model(fixture(&format!("surface_d3_{side}.dem"))).unwrap();
        assert_eq!((m.num_faults(), m.num_detectors()), (9, 4));
        let built = code_capacity_model::<f64>(&code, side, 0.1).unwrap();
        assert_eq!(m, built);
    }
    let rep: Model = load_model(fixture("repetition_3.dem")).unwrap();
    assert_eq!((rep.num_detectors(), rep.num_faults()), (2, 3));
}

#[test]
fn save_and_load_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let dir = std::env::temp_dir().join(format!("lsd-model-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    for i in 0..50 {
        let h = random_matrix(&mut rng, 8, 12, 0.25);
        let obs = random_matrix(&mut rng, 2, 12, 0.3);
        let priors = (0..12).map(|_| rng.random_range(0.001..0.4)).collect();
        let m = DetectorModel::new(h, priors, obs).unwrap();
        let path = dir.join(format!("m{i}.dem"));
        save_model(&m, &path).unwrap();
        let back: Model = load_model(&path).unwrap();
        assert_eq!(back, m);
        assert_eq!(Model::parse(&back.to_dem_text()).unwrap(), m);
    }
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn small_fault_graphs() {
    let g = FaultGraph::from_matrix(&SparseBinaryMatrix::from_dense(&[vec![1, 1]]));
    assert_eq!(g.neighbors(0), &[1]);
    assert_eq!(g.num_edges(), 1);
    let g = FaultGraph::from_matrix(&SparseBinaryMatrix::identity(2));
    assert_eq!(g.num_edges(), 0);
}

fn pairwise_adjacent(h: &SparseBinaryMatrix, a: usize, b: usize) -> bool {
    a != b && h.col(a).iter().any(|d| h.col(b).contains(d))
}

#[test]
fn fault_graph_matches_pairwise_oracle() {
    for seed in 0..5 {
        let h = random_regular_seed(9, 12, 3, 4, seed).unwrap();
        let m = Model::uniform(h.clone(), 0.01, SparseBinaryMatrix::zeros(0, 12)).unwrap();
        let g = fault_graph(&m);
        for a in 0..12 {
            let expect: Vec<usize> = (0..12).filter(|&b| pairwise_adjacent(&h, a, b)).collect();
            assert_eq!(g.neighbors(a), expect.as_slice());
        }
        // A weight-3 column meets at most 3 rows of weight 4.
        assert!(g.max_degree() <= 3 * (4 - 1));
        let ht = h.transpose();
        let gt = FaultGraph::from_matrix(&ht);
        for a in 0..ht.num_cols() {
            let expect: Vec<usize> = (0..ht.num_cols()).filter(|&b| pairwise_adjacent(&ht, a, b)).collect();
            assert_eq!(gt.neighbors(a), expect.as_slice());
        }
        assert!(gt.max_degree() <= 4 * (3 - 1));
    }
}

#[test]
fn error_clusters_match_bfs_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    assert!(error_clusters(&SparseBinaryMatrix::identity(3), &[]).is_empty());
    assert_eq!(error_clusters(&SparseBinaryMatrix::identity(3), &[2]), vec![vec![2]]);
    for _ in 0..1000 {
        let density = rng.random_range(0.03..0.2);
        let h = random_matrix(&mut rng, 20, 30, density);
        let weight = rng.random_range(0.05..0.5);
        let e = random_support(&mut rng, 30, weight);
        assert_eq!(error_clusters(&h, &e), bfs_components(&h, &e));
    }
}

#[test]
fn row_permutation_preserves_clusters() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..100 {
        let h = random_matrix(&mut rng, 15, 25, 0.1);
        let mut perm: Vec<usize> = (0..15).collect();
        rand::seq::SliceRandom::shuffle(perm.as_mut_slice(), &mut rng);
        let rows = (0..15).map(|r| h.row(perm[r]).to_vec()).collect();
        let permuted = SparseBinaryMatrix::from_rows(25, rows).unwrap();
        let e = random_support(&mut rng, 25, 0.3);
        assert_eq!(error_clusters(&h, &e), error_clusters(&permuted, &e));
        assert_eq!(FaultGraph::from_matrix(&h), FaultGraph::from_matrix(&permuted));
    }
}

#[test]
fn syndrome_and_failure_bookkeeping() {
    let m: Model = load_model(fixture("repetition_3.dem")).unwrap();
    assert_eq!(m.syndrome_of(&[1]).bits(), &[0, 1]);
    assert_eq!(m.syndrome_of(&[0, 1]).bits(), &[1]);
    assert!(!m.is_logical_failure(&[1], &[1]));
    assert!(m.is_logical_failure(&[0], &[1, 2]));
    assert!(!m.is_logical_failure(&[2], &[2]));
}
