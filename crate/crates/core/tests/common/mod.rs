#![allow(dead_code)]

use tnshap::lift::off_state;
use tnshap::{LiftSpec, MultilinearMap};

pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// `v(mask)` for every coalition, straight from forward passes.
pub fn game<M: MultilinearMap + ?Sized>(model: &M, lifts: &LiftSpec, x: &[f64]) -> Vec<f64> {
    let n = model.n();
    let on = lifts.lift_all(x).unwrap();
    (0..1usize << n)
        .map(|mask| {
            let inputs: Vec<Vec<f64>> = (0..n)
                .map(|i| if mask >> i & 1 == 1 { on[i].clone() } else { off_state(on[i].len()) })
                .collect();
            model.forward(&inputs).unwrap()
        })
        .collect()
}

fn permutations(items: Vec<usize>) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items];
    }
    let mut out = Vec::new();
    for (j, &first) in items.iter().enumerate() {
        let mut rest = items.clone();
        rest.remove(j);
        for mut p in permutations(rest) {
            p.insert(0, first);
            out.push(p);
        }
    }
    out
}

/// Shapley values as the average marginal contribution over all orderings.
pub fn shapley_by_permutations(v: &[f64], n: usize) -> Vec<f64> {
    let perms = permutations((0..n).collect());
    let mut phi = vec![0.0; n];
    for p in &perms {
        let mut mask = 0usize;
        for &i in p {
            phi[i] += v[mask | 1 << i] - v[mask];
            mask |= 1 << i;
        }
    }
    phi.iter().map(|s| s / perms.len() as f64).collect()
}

/// Shapley interaction index of `subset` from its defining weighted sum of
/// discrete derivatives.
pub fn sii_by_definition(v: &[f64], n: usize, subset: &[usize]) -> f64 {
    let k = subset.len();
    let smask: usize = subset.iter().map(|i| 1 << i).sum();
    let mut total = 0.0;
    for t in 0..1usize << n {
        if t & smask != 0 {
            continue;
        }
        let size = t.count_ones() as usize;
        let w = factorial(n - size - k) * factorial(size) / factorial(n - k + 1);
        let mut delta = 0.0;
        for l in 0..1usize << k {
            let mut m = t;
            for (b, &i) in subset.iter().enumerate() {
                if l >> b & 1 == 1 {
                    m |= 1 << i;
                }
            }
            let sign = if (k - (l.count_ones() as usize)) % 2 == 0 { 1.0 } else { -1.0 };
            delta += sign * v[m];
        }
        total += w * delta;
    }
    total
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
