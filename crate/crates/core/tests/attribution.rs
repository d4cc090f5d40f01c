mod common;

use common::{game, max_abs_diff, shapley_by_permutations, sii_by_definition};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tnshap::attribute::{
    all_subsets, chebyshev_nodes, expected_forwards, probe_value, Evaluation, ExplainOptions, Explainer, ProbeMode,
    ProbePlan, Subsets,
};
use tnshap::fit::{gen_cp_teacher, random_network};
use tnshap::lift::{off_state, selector_apply, signed_toggle, Selector};
use tnshap::{explain, FeatureMap, LiftSpec, MultilinearMap, TensorNetworkModel, TopologyKind};

const MODES: [ProbeMode; 2] = [ProbeMode::InclusionExclusion, ProbeMode::SignedToggle];
const EVALS: [Evaluation; 2] = [Evaluation::Direct, Evaluation::SharedEnvironments];

fn mixed_lifts(n: usize, seed: u64) -> LiftSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let maps = (0..n)
        .map(|_| match rng.random_range(0..3) {
            0 => FeatureMap::Binary,
            1 => FeatureMap::Polynomial { k: 2 },
            _ => FeatureMap::Fourier { k: 1, omega: 1.3 },
        })
        .collect();
    LiftSpec::new(maps).unwrap()
}

fn instance(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

#[test]
fn matches_definitions_for_every_mode_and_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for n in 1..=7 {
        for (j, kind) in [TopologyKind::TensorTrain, TopologyKind::BalancedBinaryTree].into_iter().enumerate() {
            let lifts = mixed_lifts(n, (n * 10 + j) as u64);
            let model = random_network(kind, &lifts, 3, n as u64).unwrap();
            let x = instance(n, &mut rng);
            let v = game(&model, &lifts, &x);
            for k in 1..=n.min(3) {
                let truth: Vec<f64> = all_subsets(n, k).iter().map(|s| sii_by_definition(&v, n, s)).collect();
                for mode in MODES {
                    for eval in EVALS {
                        let opts = ExplainOptions::for_order(k).with_mode(mode).with_evaluation(eval);
                        let got = explain(&model, &lifts, &x, k, &Subsets::All, opts).unwrap();
                        assert!(
                            max_abs_diff(&got.values(), &truth) < 1e-9,
                            "n {n} k {k} {mode:?} {eval:?}: {:?} vs {truth:?}",
                            got.values()
                        );
                        assert!(!got.any_ill_conditioned());
                    }
                }
            }
            if n <= 6 {
                let phi = explain(&model, &lifts, &x, 1, &Subsets::All, ExplainOptions::for_order(1)).unwrap();
                assert!(max_abs_diff(&phi.values(), &shapley_by_permutations(&v, n)) < 1e-9);
            }
        }
    }
}

#[test]
fn cp_teacher_is_explained_directly() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let lifts = LiftSpec::binary(6);
    let teacher = gen_cp_teacher(&lifts, 3, 8).unwrap();
    let x = instance(6, &mut rng);
    let v = game(&teacher, &lifts, &x);
    let set = explain(&teacher, &lifts, &x, 2, &Subsets::All, ExplainOptions::for_order(2)).unwrap();
    for e in &set.entries {
        assert!((e.value - sii_by_definition(&v, 6, &e.subset)).abs() < 1e-10);
    }
}

#[test]
fn additive_game_attributions() {
    // g(x) = Σ a_i x_i + c; the value of feature i at x is a_i x_i
    let n = 5;
    let a = [0.5, -1.0, 2.0, 0.25, 3.0];
    let c = 0.7;
    let lifts = LiftSpec::binary(n);
    let topo = tnshap::TnTopology::uniform(TopologyKind::TensorTrain, vec![2; n], 2).unwrap();
    // core i: left state 1 = "already added", state 0 = "nothing yet"
    let model = TensorNetworkModel::from_fn(topo.clone(), |core, off| {
        let shape = &topo.core_shapes()[core];
        let (l, p, r) = (off / (shape[1] * shape[2]), off / shape[2] % shape[1], off % shape[2]);
        let (l, r) = (if core == 0 { 0 } else { l }, if core == n - 1 { 1 } else { r });
        match (l, p, r) {
            (0, 1, 0) => 1.0,
            (0, 0, 1) => a[core],
            (0, 1, 1) if core == 0 => c,
            (1, 1, 1) => 1.0,
            _ => 0.0,
        }
    })
    .unwrap();
    let x = [0.9, -0.4, 0.1, 1.0, -0.6];
    let g = model.forward(&lifts.lift_all(&x).unwrap()).unwrap();
    let expect = c + a.iter().zip(&x).map(|(p, q)| p * q).sum::<f64>();
    assert!((g - expect).abs() < 1e-12);
    let phi = explain(&model, &lifts, &x, 1, &Subsets::All, ExplainOptions::for_order(1)).unwrap();
    for i in 0..n {
        assert!((phi.values()[i] - a[i] * x[i]).abs() < 1e-12, "feature {i}");
    }
    for k in [2, 3] {
        let set = explain(&model, &lifts, &x, k, &Subsets::All, ExplainOptions::for_order(k)).unwrap();
        assert!(set.values().iter().all(|v| v.abs() < 1e-12));
    }
}

#[test]
fn selector_algebra() {
    let v = vec![0.3, -1.2, 2.0, 1.0];
    for (a, b) in [(0.2, 0.7), (1.0, 0.4), (0.0, 0.9)] {
        assert!(max_abs_diff(&selector_apply(a, &selector_apply(b, &v)), &selector_apply(a * b, &v)) < 1e-15);
    }
    assert_eq!(Selector::ON.apply(&v), v);
    assert_eq!(Selector::OFF.apply(&v), off_state(4));
    let toggled: Vec<f64> = Selector::ON.apply(&v).iter().zip(Selector::OFF.apply(&v)).map(|(p, q)| p - q).collect();
    assert_eq!(signed_toggle(&v), toggled);
}

#[test]
fn probe_is_a_polynomial_of_bounded_degree() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let n = 7;
    let lifts = mixed_lifts(n, 3);
    let model = random_network(TopologyKind::BalancedBinaryTree, &lifts, 4, 5).unwrap();
    let x = instance(n, &mut rng);
    for subset in [vec![2], vec![0, 5], vec![1, 3, 6]] {
        let k = subset.len();
        let plan = ProbePlan::chebyshev(n - k + 1).unwrap();
        let q: Vec<f64> = plan
            .nodes()
            .iter()
            .map(|&t| probe_value(&model, &lifts, &x, &subset, t, ProbeMode::InclusionExclusion).unwrap())
            .collect();
        let coeffs = plan.solve(&q).unwrap().coeffs;
        for _ in 0..5 {
            let t: f64 = rng.random_range(-1.5..1.5);
            let direct = probe_value(&model, &lifts, &x, &subset, t, ProbeMode::InclusionExclusion).unwrap();
            let poly: f64 = coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c);
            assert!((direct - poly).abs() < 1e-8 * (1.0 + direct.abs()), "{subset:?} at {t}");
        }
    }
}

#[test]
fn signed_toggle_equals_inclusion_exclusion_pointwise() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let n = 6;
    let lifts = mixed_lifts(n, 1);
    let model = random_network(TopologyKind::TensorTrain, &lifts, 3, 2).unwrap();
    let x = instance(n, &mut rng);
    for k in 1..=4 {
        for subset in all_subsets(n, k).into_iter().take(6) {
            let t: f64 = rng.random();
            let ie = probe_value(&model, &lifts, &x, &subset, t, ProbeMode::InclusionExclusion).unwrap();
            let st = probe_value(&model, &lifts, &x, &subset, t, ProbeMode::SignedToggle).unwrap();
            assert!((ie - st).abs() < 1e-10 * (1.0 + ie.abs()));
        }
    }
}

#[test]
fn direct_evaluation_forward_counts() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for n in [1, 4, 9] {
        let lifts = LiftSpec::binary(n);
        let model = random_network(TopologyKind::BalancedBinaryTree, &lifts, 2, 1).unwrap();
        let x = instance(n, &mut rng);
        for k in 1..=n.min(3) {
            for mode in MODES {
                let before = model.forward_count();
                let opts = ExplainOptions::for_order(k).with_mode(mode).with_evaluation(Evaluation::Direct);
                let set = explain(&model, &lifts, &x, k, &Subsets::All, opts).unwrap();
                let used = model.forward_count() - before;
                let subsets = all_subsets(n, k).len() as u64;
                let per_node = if mode == ProbeMode::SignedToggle { 1 } else { 1 << k };
                assert_eq!(used, subsets * (n - k + 1) as u64 * per_node);
                assert_eq!(set.forwards_used, used);
                assert_eq!(expected_forwards(n, k, subsets as usize, mode), used);
            }
        }
    }
}

#[test]
fn explicit_subsets_and_errors() {
    let lifts = LiftSpec::binary(4);
    let model = random_network(TopologyKind::TensorTrain, &lifts, 2, 0).unwrap();
    let x = [0.1, 0.2, 0.3, 0.4];
    let ex = Explainer::new(4, 2).unwrap();
    let all = ex.explain(&model, &lifts, &x, &Subsets::All, ExplainOptions::for_order(2)).unwrap();
    let some = ex
        .explain(&model, &lifts, &x, &Subsets::Explicit(vec![vec![3, 1]]), ExplainOptions::for_order(2))
        .unwrap();
    assert_eq!(some.entries[0].subset, vec![1, 3]);
    assert_eq!(some.get(&[1, 3]), all.get(&[1, 3]));
    for bad in [vec![1, 1], vec![0, 4], vec![2]] {
        assert!(ex.explain(&model, &lifts, &x, &Subsets::Explicit(vec![bad]), ExplainOptions::for_order(2)).is_err());
    }
    assert!(Explainer::new(4, 5).is_err());
    assert!(Explainer::new(4, 0).is_err());
    assert!(ex.explain(&model, &lifts, &x[..3], &Subsets::All, ExplainOptions::for_order(2)).is_err());
    assert!(ProbePlan::from_nodes(vec![0.5, 0.5]).is_err());
}

#[test]
fn batch_agrees_with_single_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let lifts = LiftSpec::binary(5);
    let model = random_network(TopologyKind::BalancedBinaryTree, &lifts, 3, 3).unwrap();
    let xs: Vec<Vec<f64>> = (0..4).map(|_| instance(5, &mut rng)).collect();
    let ex = Explainer::new(5, 1).unwrap();
    let batch = ex.explain_batch(&model, &lifts, &xs, &Subsets::All, ExplainOptions::for_order(1));
    for (x, b) in xs.iter().zip(batch) {
        let single = ex.explain(&model, &lifts, x, &Subsets::All, ExplainOptions::for_order(1)).unwrap();
        assert_eq!(b.unwrap(), single);
    }
}

#[test]
fn node_layout() {
    let t = chebyshev_nodes(5);
    assert!(t.iter().all(|&v| v > 0.0 && v < 1.0));
    assert!(t.windows(2).all(|w| w[0] > w[1]));
}
