//! Ground truth by exhaustive coalition enumeration.
//!
//! Coalitions are bitmasks: bit `i` set means feature `i` (zero-based) is
//! on, i.e. keeps its lifted vector; features that are off get the bias-only
//! vector `[0, …, 0, 1]`.

use std::io::{Read, Write};

use rayon::prelude::*;

use crate::attribute::{all_subsets, sii_weights, Attribution, AttributionSet, PolySolve, ProbePlan};
use crate::error::{Error, Result};
use crate::lift::{off_state, selector_apply, LiftSpec};
use crate::map::MultilinearMap;

/// Largest feature count the oracle enumerates.
pub const MAX_ORACLE_FEATURES: usize = 20;

const TABLE_MAGIC: &[u8; 8] = b"TNSHAPCT";

/// Values of all `2ⁿ` coalitions, indexed by bitmask.
#[derive(Debug, Clone, PartialEq)]
pub struct CoalitionTable {
    n: usize,
    values: Vec<f64>,
}

impl CoalitionTable {
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        if n > MAX_ORACLE_FEATURES {
            return Err(Error::TooLarge {
                what: "coalition table",
                required: 1u128 << n,
                limit: 1u128 << MAX_ORACLE_FEATURES,
            });
        }
        if values.len() != 1 << n {
            return Err(Error::InvalidShape(format!(
                "coalition table for {n} features needs {} values, {} given",
                1usize << n,
                values.len()
            )));
        }
        Ok(Self { n, values })
    }

    /// Table of an explicit set function over `n` players.
    pub fn from_fn(n: usize, f: impl Fn(usize) -> f64) -> Result<Self> {
        Self::new(n, (0..1usize << n).map(f).collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, mask: usize) -> f64 {
        self.values[mask]
    }

    pub fn full_mask(&self) -> usize {
        (1 << self.n) - 1
    }

    /// Writes the magic, `n` and all values, little-endian.
    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        w.write_all(TABLE_MAGIC)?;
        w.write_all(&(self.n as u64).to_le_bytes())?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != TABLE_MAGIC {
            return Err(Error::Format("not a coalition table dump".into()));
        }
        let mut word = [0u8; 8];
        r.read_exact(&mut word)?;
        let n = u64::from_le_bytes(word) as usize;
        if n > MAX_ORACLE_FEATURES {
            return Err(Error::Format(format!("table dump claims {n} features")));
        }
        let mut values = Vec::with_capacity(1 << n);
        for _ in 0..1usize << n {
            r.read_exact(&mut word)?;
            values.push(f64::from_le_bytes(word));
        }
        Self::new(n, values)
    }
}

fn check_oracle_size(n: usize) -> Result<()> {
    if n > MAX_ORACLE_FEATURES {
        return Err(Error::TooLarge {
            what: "coalition table",
            required: 1u128 << n.min(127),
            limit: 1u128 << MAX_ORACLE_FEATURES,
        });
    }
    Ok(())
}

/// Evaluates every coalition of the surrogate game at instance `x`.
/// Spends exactly `2ⁿ` forward passes.
pub fn enumerate_game<M: MultilinearMap + ?Sized>(
    model: &M,
    lifts: &LiftSpec,
    x: &[f64],
) -> Result<CoalitionTable> {
    let n = model.n();
    check_oracle_size(n)?;
    lifts.check_dims(model.phys_dims())?;
    let on = lifts.lift_all(x)?;
    let off: Vec<Vec<f64>> = on.iter().map(|v| off_state(v.len())).collect();
    let values = (0..1usize << n)
        .into_par_iter()
        .map(|mask| {
            let inputs: Vec<Vec<f64>> = (0..n)
                .map(|i| if mask >> i & 1 == 1 { on[i].clone() } else { off[i].clone() })
                .collect();
            model.forward(&inputs)
        })
        .collect::<Result<Vec<_>>>()?;
    CoalitionTable::new(n, values)
}

/// Shapley values by the defining weighted sum of marginal contributions.
pub fn exact_shapley(table: &CoalitionTable) -> Vec<f64> {
    let n = table.n;
    if n == 0 {
        return Vec::new();
    }
    let alpha = sii_weights(n, 1).expect("n within range");
    (0..n)
        .map(|i| {
            let bit = 1usize << i;
            (0..1usize << n)
                .filter(|m| m & bit == 0)
                .map(|m| alpha[m.count_ones() as usize] * (table.values[m | bit] - table.values[m]))
                .sum()
        })
        .collect()
}

/// Order-`k` Shapley interaction indices of every size-`k` subset:
/// `Φ(S) = Σ_{C ⊆ N∖S} β_{|C|}(n,k) Σ_{L ⊆ S} (−1)^{k−|L|} v(C ∪ L)`.
pub fn exact_sii(table: &CoalitionTable, k: usize) -> Result<AttributionSet> {
    let n = table.n;
    let beta = sii_weights(n, k)?;
    let entries = all_subsets(n, k)
        .into_iter()
        .map(|subset| {
            let s_mask: usize = subset.iter().map(|&i| 1usize << i).sum();
            let value = (0..1usize << n)
                .filter(|c| c & s_mask == 0)
                .map(|c| beta[c.count_ones() as usize] * discrete_derivative(table, c, s_mask, k))
                .sum();
            Attribution {
                subset,
                value,
                residual: 0.0,
                ill_conditioned: false,
            }
        })
        .collect();
    Ok(AttributionSet {
        order: k,
        entries,
        forwards_used: table.values.len() as u64,
        max_solve_residual: 0.0,
    })
}

/// `Σ_{L ⊆ S} (−1)^{k−|L|} v(C ∪ L)` with `S` given as a mask of size `k`.
fn discrete_derivative(table: &CoalitionTable, c: usize, s_mask: usize, k: usize) -> f64 {
    let mut acc = 0.0;
    let mut l = s_mask;
    loop {
        let v = table.values[c | l];
        if (k - l.count_ones() as usize) % 2 == 0 {
            acc += v;
        } else {
            acc -= v;
        }
        if l == 0 {
            break;
        }
        l = (l - 1) & s_mask;
    }
    acc
}

/// Möbius coefficients `c_T = Σ_{L ⊆ T} (−1)^{|T|−|L|} v(L)` by the fast
/// subset-sum transform.
pub fn mobius_coefficients(table: &CoalitionTable) -> Vec<f64> {
    let mut a = table.values.clone();
    for i in 0..table.n {
        let bit = 1usize << i;
        for m in 0..a.len() {
            if m & bit != 0 {
                a[m] -= a[m ^ bit];
            }
        }
    }
    a
}

/// Inverse of [`mobius_coefficients`]: `v(C) = Σ_{T ⊆ C} c_T`.
pub fn zeta_transform(n: usize, coeffs: &[f64]) -> Result<CoalitionTable> {
    let mut a = coeffs.to_vec();
    for i in 0..n {
        let bit = 1usize << i;
        for m in 0..a.len() {
            if m & bit != 0 {
                a[m] += a[m ^ bit];
            }
        }
    }
    CoalitionTable::new(n, a)
}

/// Sums `Σ_{|T|=s} c_T` for `s = 0..=n`.
pub fn size_groups(n: usize, coeffs: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    for (m, c) in coeffs.iter().enumerate() {
        out[m.count_ones() as usize] += c;
    }
    out
}

/// Coefficients of the diagonal polynomial `p(t) = g(S(t)x̃₁, …, S(t)x̃ₙ)`,
/// which are the size-aggregated Möbius sums `Σ_{|T|=s} c_T`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalProbe {
    pub sums: Vec<f64>,
    pub residual: f64,
    pub ill_conditioned: bool,
}

/// Interpolates the diagonal polynomial from its values at `nodes`
/// (`n + 1` distinct points). Spends `n + 1` forward passes.
pub fn diagonal_coefficient_probe<M: MultilinearMap + ?Sized>(
    model: &M,
    lifts: &LiftSpec,
    x: &[f64],
    nodes: &[f64],
) -> Result<DiagonalProbe> {
    let n = model.n();
    if nodes.len() != n + 1 {
        return Err(Error::Config(format!(
            "diagonal probe over {n} features needs {} nodes, {} given",
            n + 1,
            nodes.len()
        )));
    }
    lifts.check_dims(model.phys_dims())?;
    let lifted = lifts.lift_all(x)?;
    let plan = ProbePlan::from_nodes(nodes.to_vec())?;
    let values = nodes
        .iter()
        .map(|&t| {
            let inputs: Vec<Vec<f64>> = lifted.iter().map(|v| selector_apply(t, v)).collect();
            model.forward(&inputs)
        })
        .collect::<Result<Vec<_>>>()?;
    let PolySolve {
        coeffs,
        residual,
        ill_conditioned,
    } = plan.solve(&values)?;
    Ok(DiagonalProbe {
        sums: coeffs,
        residual,
        ill_conditioned,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn product_table() -> CoalitionTable {
        CoalitionTable::new(2, vec![0.0, 0.0, 0.0, 1.0]).unwrap()
    }

    #[test]
    fn product_game() {
        let t = product_table();
        assert_eq!(exact_shapley(&t), vec![0.5, 0.5]);
        assert_eq!(mobius_coefficients(&t), vec![0.0, 0.0, 0.0, 1.0]);
        let sii = exact_sii(&t, 2).unwrap();
        assert_eq!(sii.entries.len(), 1);
        assert_eq!(sii.entries[0].value, 1.0);
    }

    #[test]
    fn constant_game_has_only_empty_coefficient() {
        let t = CoalitionTable::from_fn(3, |_| 2.5).unwrap();
        let c = mobius_coefficients(&t);
        assert_eq!(c[0], 2.5);
        assert!(c[1..].iter().all(|&v| v == 0.0));
        assert!(exact_shapley(&t).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn triple_product_interaction() {
        let t = CoalitionTable::from_fn(3, |m| if m == 7 { 1.0 } else { 0.0 }).unwrap();
        assert_eq!(exact_sii(&t, 3).unwrap().entries[0].value, 1.0);
    }

    #[test]
    fn additive_game() {
        let a = [1.5, -2.0, 0.25, 4.0];
        let t = CoalitionTable::from_fn(4, |m| (0..4).filter(|i| m >> i & 1 == 1).map(|i| a[i]).sum())
            .unwrap();
        for (phi, ai) in exact_shapley(&t).iter().zip(a) {
            assert!((phi - ai).abs() < 1e-12);
        }
        assert!(exact_sii(&t, 2).unwrap().entries.iter().all(|e| e.value.abs() < 1e-12));
    }

    #[test]
    fn dump_round_trip() {
        let t = CoalitionTable::from_fn(3, |m| m as f64 * 0.1 - 0.3).unwrap();
        let mut buf = Vec::new();
        t.write_to(&mut buf).unwrap();
        assert_eq!(buf.len(), 16 + 8 * 8);
        assert_eq!(&buf[..8], b"TNSHAPCT");
        assert_eq!(CoalitionTable::read_from(buf.as_slice()).unwrap(), t);
        buf[0] = b'X';
        assert!(CoalitionTable::read_from(buf.as_slice()).is_err());
    }

    #[test]
    fn table_size_guard() {
        assert!(matches!(
            CoalitionTable::new(21, vec![]),
            Err(Error::TooLarge { .. })
        ));
    }
}
