mod common;

use common::{game, max_abs_diff, shapley_by_permutations, sii_by_definition};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tnshap::attribute::chebyshev_nodes;
use tnshap::fit::{gen_cp_teacher, gen_tree_teacher};
use tnshap::oracle::{
    diagonal_coefficient_probe, enumerate_game, exact_shapley, exact_sii, mobius_coefficients, size_groups,
    zeta_transform, CoalitionTable,
};
use tnshap::{LiftSpec, MultilinearMap};

fn random_table(n: usize, rng: &mut ChaCha8Rng) -> CoalitionTable {
    CoalitionTable::new(n, (0..1 << n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

#[test]
fn mobius_matches_naive_double_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for n in 0..=6 {
        let t = random_table(n, &mut rng);
        let fast = mobius_coefficients(&t);
        for tm in 0..1usize << n {
            let mut naive = 0.0;
            for l in 0..1usize << n {
                if l & !tm == 0 {
                    let sign = if (tm.count_ones() - l.count_ones()) % 2 == 0 { 1.0 } else { -1.0 };
                    naive += sign * t.value(l);
                }
            }
            assert!((fast[tm] - naive).abs() < 1e-12);
        }
    }
}

#[test]
fn mobius_and_zeta_are_inverse() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for n in [1, 4, 9, 12] {
        let t = random_table(n, &mut rng);
        let back = zeta_transform(n, &mobius_coefficients(&t)).unwrap();
        assert!(max_abs_diff(back.values(), t.values()) < 1e-10, "n {n}");
    }
}

#[test]
fn shapley_oracles_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in 1..=6 {
        let t = random_table(n, &mut rng);
        let phi = exact_shapley(&t);
        assert!(max_abs_diff(&phi, &shapley_by_permutations(t.values(), n)) < 1e-12);
        assert!(max_abs_diff(&phi, &exact_sii(&t, 1).unwrap().values()) < 1e-12);
        for k in 1..=n {
            for e in exact_sii(&t, k).unwrap().entries {
                assert!((e.value - sii_by_definition(t.values(), n, &e.subset)).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn enumeration_spends_two_to_the_n_forwards() {
    let lifts = LiftSpec::binary(9);
    let model = gen_tree_teacher(&lifts, 3, 0).unwrap();
    let x = vec![0.25; 9];
    let before = model.forward_count();
    let table = enumerate_game(&model, &lifts, &x).unwrap();
    assert_eq!(model.forward_count() - before, 512);
    assert_eq!(table.values(), &game(&model, &lifts, &x)[..]);
}

#[test]
fn table_dump_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let t = random_table(5, &mut rng);
    let mut buf = Vec::new();
    t.write_to(&mut buf).unwrap();
    assert_eq!(buf.len(), 8 + 8 + 8 * 32);
    assert_eq!(&buf[..8], b"TNSHAPCT");
    let back = CoalitionTable::read_from(&buf[..]).unwrap();
    assert_eq!(back.values(), t.values());
    assert!(CoalitionTable::read_from(&buf[..40]).is_err());
    let mut corrupt = buf.clone();
    corrupt[0] = b'X';
    assert!(CoalitionTable::read_from(&corrupt[..]).is_err());
}

#[test]
fn diagonal_probe_recovers_size_groups() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for n in [1, 3, 6, 9] {
        let lifts = LiftSpec::binary(n);
        let model = gen_cp_teacher(&lifts, 3, n as u64).unwrap();
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let table = enumerate_game(&model, &lifts, &x).unwrap();
        let groups = size_groups(n, &mobius_coefficients(&table));
        let probe = diagonal_coefficient_probe(&model, &lifts, &x, &chebyshev_nodes(n + 1)).unwrap();
        assert!(max_abs_diff(&probe.sums, &groups) < 1e-9, "n {n}: {:?} vs {groups:?}", probe.sums);
        assert!(!probe.ill_conditioned);
    }
}

#[test]
fn diagonal_probe_examples() {
    // g = x1 x2 as a two-feature tensor train with rank one
    let topo = tnshap::TnTopology::uniform(tnshap::TopologyKind::TensorTrain, vec![2, 2], 1).unwrap();
    let model = tnshap::TensorNetworkModel::from_fn(topo, |_, off| if off == 0 { 1.0 } else { 0.0 }).unwrap();
    let lifts = LiftSpec::binary(2);
    let probe = diagonal_coefficient_probe(&model, &lifts, &[1.0, 1.0], &[0.0, 0.5, 1.0]).unwrap();
    assert!(max_abs_diff(&probe.sums, &[0.0, 0.0, 1.0]) < 1e-12);
    assert!(diagonal_coefficient_probe(&model, &lifts, &[1.0, 1.0], &[0.0, 1.0]).is_err());
    assert_eq!(model.forward(&[vec![3.0, 1.0], vec![2.0, 1.0]]).unwrap(), 6.0);
}

#[test]
fn size_limits() {
    assert!(CoalitionTable::new(2, vec![0.0; 3]).is_err());
    let lifts = LiftSpec::binary(21);
    let model = gen_tree_teacher(&lifts, 1, 0).unwrap();
    assert!(enumerate_game(&model, &lifts, &[0.0; 21]).is_err());
}
