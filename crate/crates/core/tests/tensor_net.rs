mod common;

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tnshap::fit::random_network;
use tnshap::io::{model_from_json, model_to_json};
use tnshap::{DenseTensor, FeatureMap, LiftSpec, MultilinearMap, TensorNetworkModel, TnTopology, TopologyKind};

const KINDS: [TopologyKind; 2] = [TopologyKind::TensorTrain, TopologyKind::BalancedBinaryTree];

fn random_model(kind: TopologyKind, phys: Vec<usize>, bond: usize, seed: u64) -> TensorNetworkModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let topo = TnTopology::clipped(kind, phys, bond).unwrap();
    TensorNetworkModel::from_fn(topo, |_, _| rng.random_range(-1.0..1.0)).unwrap()
}

fn random_inputs(phys: &[usize], rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    phys.iter().map(|&d| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect()).collect()
}

/// Row-major multi-index of `flat` in a tensor of `shape`.
fn unravel(mut flat: usize, shape: &[usize]) -> Vec<usize> {
    let mut idx = vec![0; shape.len()];
    for a in (0..shape.len()).rev() {
        idx[a] = flat % shape[a];
        flat /= shape[a];
    }
    idx
}

fn numerical_rank(m: &DMatrix<f64>) -> usize {
    let sv = m.clone().svd(false, false).singular_values;
    let top = sv.iter().copied().fold(0.0, f64::max);
    sv.iter().filter(|&&s| s > 1e-9 * top).count()
}

/// Matricization of `t` with the features in `rows` as row index.
fn matricize(t: &DenseTensor, rows: &[usize]) -> DMatrix<f64> {
    let shape = t.shape();
    let cols: Vec<usize> = (0..shape.len()).filter(|a| !rows.contains(a)).collect();
    let nr: usize = rows.iter().map(|&a| shape[a]).product();
    let nc: usize = cols.iter().map(|&a| shape[a]).product();
    let mut m = DMatrix::zeros(nr, nc);
    for flat in 0..t.len() {
        let idx = unravel(flat, shape);
        let r = rows.iter().fold(0, |acc, &a| acc * shape[a] + idx[a]);
        let c = cols.iter().fold(0, |acc, &a| acc * shape[a] + idx[a]);
        m[(r, c)] = t.data()[flat];
    }
    m
}

/// Features under tree node `u` of a heap-ordered tree with `leaves` leaves.
fn features_below(u: usize, leaves: usize, n: usize) -> Vec<usize> {
    let (mut lo, mut hi) = (u, u);
    while lo < leaves - 1 {
        lo = 2 * lo + 1;
        hi = 2 * hi + 2;
    }
    (lo + 1 - leaves..=hi + 1 - leaves).filter(|&j| j < n).collect()
}

#[test]
fn forward_matches_materialized_tensor() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for kind in KINDS {
        for phys in [vec![2], vec![2, 3], vec![3, 2, 2], vec![2, 2, 2, 2, 2], vec![2, 3, 1, 2, 2, 2]] {
            let model = random_model(kind, phys.clone(), 3, rng.random());
            let full = model.materialize_full().unwrap();
            assert_eq!(full.shape(), &phys[..]);
            for _ in 0..5 {
                let xs = random_inputs(&phys, &mut rng);
                let mut dense = 0.0;
                for flat in 0..full.len() {
                    let idx = unravel(flat, &phys);
                    dense += full.data()[flat] * idx.iter().enumerate().map(|(i, &j)| xs[i][j]).product::<f64>();
                }
                let g = model.forward(&xs).unwrap();
                assert!((g - dense).abs() <= 1e-10 * (1.0 + dense.abs()), "{kind:?} {phys:?}: {g} vs {dense}");
                assert!((full.contract_all(&xs).unwrap() - dense).abs() <= 1e-10 * (1.0 + dense.abs()));
            }
        }
    }
}

#[test]
fn tensor_train_cut_ranks_equal_bonds() {
    let model = random_model(TopologyKind::TensorTrain, vec![2; 7], 3, 5);
    let full = model.materialize_full().unwrap();
    for cut in 1..7 {
        let rows: Vec<usize> = (0..cut).collect();
        let rank = numerical_rank(&matricize(&full, &rows));
        assert_eq!(rank, model.topology().bond_dims()[cut - 1], "cut after {cut}");
    }
    assert_eq!(model.cut_rank(), 3);
}

#[test]
fn tree_cut_ranks_equal_bonds() {
    for n in [3, 5, 8] {
        let model = random_model(TopologyKind::BalancedBinaryTree, vec![2; n], 3, n as u64);
        let full = model.materialize_full().unwrap();
        let topo = model.topology();
        let leaves = topo.leaf_count();
        let mut largest = 1;
        for u in 1..2 * leaves - 1 {
            let rows = features_below(u, leaves, n);
            let rank = if rows.is_empty() || rows.len() == n {
                1
            } else {
                numerical_rank(&matricize(&full, &rows))
            };
            largest = largest.max(rank);
            assert!(rank <= topo.bond_dims()[u - 1], "n {n} node {u}");
            if !rows.is_empty() && rows.len() < n {
                assert_eq!(rank, topo.bond_dims()[u - 1], "n {n} node {u}");
            }
        }
        assert_eq!(largest, model.cut_rank());
    }
}

#[test]
fn generated_teacher_reports_requested_bond() {
    let lifts = LiftSpec::binary(8);
    for bond in [1, 3, 16] {
        let m = random_network(TopologyKind::BalancedBinaryTree, &lifts, bond, 1).unwrap();
        assert_eq!(m.cut_rank(), bond);
    }
}

#[test]
fn leg_environments_reproduce_forward() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for kind in KINDS {
        let phys = vec![2, 3, 2, 2, 4];
        let model = random_model(kind, phys.clone(), 4, 9);
        let xs = random_inputs(&phys, &mut rng);
        let envs = model.leg_environments(&xs).unwrap();
        let g = model.forward(&xs).unwrap();
        for (i, env) in envs.iter().enumerate() {
            let via_env: f64 = env.iter().zip(&xs[i]).map(|(a, b)| a * b).sum();
            assert!((via_env - g).abs() < 1e-10 * (1.0 + g.abs()), "{kind:?} leg {i}");
        }
    }
}

#[test]
fn json_round_trip_is_exact() {
    let lifts = LiftSpec::new(vec![FeatureMap::Binary, FeatureMap::Polynomial { k: 2 }, FeatureMap::fourier(1)]).unwrap();
    for kind in KINDS {
        let model = random_network(kind, &lifts, 3, 4).unwrap();
        let text = model_to_json(&model, &lifts).unwrap();
        let (back, back_lifts) = model_from_json(&text).unwrap();
        assert_eq!(back, model);
        assert_eq!(back_lifts, lifts);
        assert_eq!(model_to_json(&back, &back_lifts).unwrap(), text);
    }
}

#[test]
fn fifty_feature_network_loads_and_evaluates() {
    let lifts = LiftSpec::binary(50);
    let model = random_network(TopologyKind::BalancedBinaryTree, &lifts, 16, 0).unwrap();
    let (back, _) = model_from_json(&model_to_json(&model, &lifts).unwrap()).unwrap();
    let x = lifts.lift_all(&vec![0.3; 50]).unwrap();
    assert_eq!(back.forward(&x).unwrap(), model.forward(&x).unwrap());
    assert!(matches!(model.materialize_full(), Err(tnshap::Error::TooLarge { .. })));
}

#[test]
fn bond_one_tree_is_a_product() {
    let model = random_model(TopologyKind::BalancedBinaryTree, vec![2; 4], 1, 3);
    let full = model.materialize_full().unwrap();
    for split in 1..4 {
        let rows: Vec<usize> = (0..split).collect();
        assert_eq!(numerical_rank(&matricize(&full, &rows)), 1);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn forward_is_linear_in_each_leg(
        seed in any::<u64>(),
        tree in any::<bool>(),
        n in 1usize..6,
        leg in 0usize..6,
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
    ) {
        let kind = if tree { TopologyKind::BalancedBinaryTree } else { TopologyKind::TensorTrain };
        let phys: Vec<usize> = (0..n).map(|i| 2 + i % 2).collect();
        let model = random_model(kind, phys.clone(), 3, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let leg = leg % n;
        let base = random_inputs(&phys, &mut rng);
        let u: Vec<f64> = (0..phys[leg]).map(|_| rng.random_range(-2.0..2.0)).collect();
        let w: Vec<f64> = (0..phys[leg]).map(|_| rng.random_range(-2.0..2.0)).collect();
        let at = |v: Vec<f64>| {
            let mut xs = base.clone();
            xs[leg] = v;
            model.forward(&xs).unwrap()
        };
        let mixed = at(u.iter().zip(&w).map(|(p, q)| a * p + b * q).collect());
        let split = a * at(u.clone()) + b * at(w.clone());
        prop_assert!((mixed - split).abs() <= 1e-9 * (1.0 + mixed.abs() + split.abs()));
    }
}

#[test]
fn forward_counter_counts_calls() {
    let model = random_model(TopologyKind::TensorTrain, vec![2; 3], 2, 0);
    let xs = vec![vec![1.0, 1.0]; 3];
    let before = model.forward_count();
    for _ in 0..7 {
        model.forward(&xs).unwrap();
    }
    assert_eq!(model.forward_count() - before, 7);
    assert!(model.forward(&xs[..2]).is_err());
}
