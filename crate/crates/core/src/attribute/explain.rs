use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attribute::plan::{PolySolve, ProbePlan};
use crate::attribute::weights::{monomial_to_marginals, sii_weights};
use crate::error::{Error, Result};
use crate::lift::{off_state, selector_apply, signed_toggle, LiftSpec};
use crate::map::MultilinearMap;
use crate::tensor::dot;

/// How the discrete derivative over the target subset is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbeMode {
    /// Alternating sum over all `2^k` on/off patterns of the subset.
    InclusionExclusion,
    /// One contraction with `S(1) − S(0)` on every subset leg.
    SignedToggle,
}

impl ProbeMode {
    /// Inclusion-exclusion for single features, signed toggle otherwise.
    pub fn default_for_order(k: usize) -> Self {
        if k >= 2 {
            ProbeMode::SignedToggle
        } else {
            ProbeMode::InclusionExclusion
        }
    }

    /// Forward passes per probe node for a subset of size `k`.
    pub fn forwards_per_node(self, k: usize) -> u64 {
        match self {
            ProbeMode::InclusionExclusion => 1u64 << k,
            ProbeMode::SignedToggle => 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ProbeMode::InclusionExclusion => "inclusion-exclusion",
            ProbeMode::SignedToggle => "signed-toggle",
        }
    }
}

impl std::str::FromStr for ProbeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ie" | "inclusion-exclusion" => Ok(ProbeMode::InclusionExclusion),
            "st" | "signed-toggle" => Ok(ProbeMode::SignedToggle),
            other => Err(Error::Config(format!("unknown probe mode {other:?}"))),
        }
    }
}

/// Whether single-feature probes run as independent contractions or
/// share one set of leg environments per node.
///
/// Both evaluate the same probe values and report the same logical
/// forward count; `Direct` is the one whose calls show up one-to-one in
/// the model's own counter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Evaluation {
    Direct,
    #[default]
    SharedEnvironments,
}

impl std::str::FromStr for Evaluation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(Evaluation::Direct),
            "shared" | "shared-environments" => Ok(Evaluation::SharedEnvironments),
            other => Err(Error::Config(format!("unknown evaluation strategy {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExplainOptions {
    pub mode: ProbeMode,
    pub evaluation: Evaluation,
}

impl ExplainOptions {
    pub fn for_order(k: usize) -> Self {
        Self {
            mode: ProbeMode::default_for_order(k),
            evaluation: Evaluation::default(),
        }
    }

    pub fn with_mode(mut self, mode: ProbeMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_evaluation(mut self, evaluation: Evaluation) -> Self {
        self.evaluation = evaluation;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Subsets {
    /// Every size-`k` subset in lexicographic order.
    All,
    /// Zero-based feature indices.
    Explicit(Vec<Vec<usize>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attribution {
    /// Zero-based, strictly increasing feature indices.
    pub subset: Vec<usize>,
    pub value: f64,
    pub residual: f64,
    pub ill_conditioned: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionSet {
    pub order: usize,
    pub entries: Vec<Attribution>,
    pub forwards_used: u64,
    pub max_solve_residual: f64,
}

impl AttributionSet {
    pub fn values(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.value).collect()
    }

    pub fn get(&self, subset: &[usize]) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.subset == subset)
            .map(|e| e.value)
    }

    pub fn any_ill_conditioned(&self) -> bool {
        self.entries.iter().any(|e| e.ill_conditioned)
    }
}

/// Forward passes `explain` spends on `subsets` subsets of size `k`.
pub fn expected_forwards(n: usize, k: usize, subsets: usize, mode: ProbeMode) -> u64 {
    subsets as u64 * (n - k + 1) as u64 * mode.forwards_per_node(k)
}

/// All size-`k` subsets of `0..n` in lexicographic order.
pub fn all_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    (0..n).combinations(k).collect()
}

/// Sorts a subset and checks it against `n` features.
pub fn normalize_subset(subset: &[usize], n: usize) -> Result<Vec<usize>> {
    if subset.is_empty() {
        return Err(Error::InvalidSubset("subset is empty".into()));
    }
    let mut s = subset.to_vec();
    s.sort_unstable();
    if let Some(&bad) = s.iter().find(|&&i| i >= n) {
        return Err(Error::InvalidSubset(format!(
            "feature index {bad} out of range for {n} features"
        )));
    }
    if s.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidSubset(format!("duplicate feature in {subset:?}")));
    }
    Ok(s)
}

/// `Q_S(t; x)`: discrete derivative over `subset` with every other leg
/// scaled by `S(t)`.
pub fn probe_value<M: MultilinearMap + ?Sized>(
    model: &M,
    lifts: &LiftSpec,
    x: &[f64],
    subset: &[usize],
    t: f64,
    mode: ProbeMode,
) -> Result<f64> {
    lifts.check_dims(model.phys_dims())?;
    let lifted = lifts.lift_all(x)?;
    let subset = normalize_subset(subset, lifted.len())?;
    let scaled = scale_all(&lifted, t);
    probe_lifted(model, &lifted, &scaled, &subset, mode)
}

fn scale_all(lifted: &[Vec<f64>], t: f64) -> Vec<Vec<f64>> {
    lifted.iter().map(|v| selector_apply(t, v)).collect()
}

/// Probe value from pre-lifted (`lifted`) and selector-scaled (`scaled`)
/// inputs. `subset` must already be normalized.
pub(crate) fn probe_lifted<M: MultilinearMap + ?Sized>(
    model: &M,
    lifted: &[Vec<f64>],
    scaled: &[Vec<f64>],
    subset: &[usize],
    mode: ProbeMode,
) -> Result<f64> {
    let mut inputs = scaled.to_vec();
    match mode {
        ProbeMode::SignedToggle => {
            for &i in subset {
                inputs[i] = signed_toggle(&lifted[i]);
            }
            model.forward(&inputs)
        }
        ProbeMode::InclusionExclusion => {
            let k = subset.len();
            let mut acc = 0.0;
            for pattern in 0u64..(1 << k) {
                for (b, &i) in subset.iter().enumerate() {
                    inputs[i] = if pattern >> b & 1 == 1 {
                        lifted[i].clone()
                    } else {
                        off_state(lifted[i].len())
                    };
                }
                let v = model.forward(&inputs)?;
                if (k - pattern.count_ones() as usize) % 2 == 0 {
                    acc += v;
                } else {
                    acc -= v;
                }
            }
            Ok(acc)
        }
    }
}

/// Order-`k` probe plan and index weights for `n` features, reusable across
/// instances and subsets.
#[derive(Debug, Clone)]
pub struct Explainer {
    n: usize,
    k: usize,
    plan: ProbePlan,
    beta: Vec<f64>,
}

impl Explainer {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        let beta = sii_weights(n, k)?;
        let plan = ProbePlan::chebyshev(n - k + 1)?;
        Ok(Self { n, k, plan, beta })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.k
    }

    pub fn plan(&self) -> &ProbePlan {
        &self.plan
    }

    /// Index value from the probe's node values: monomial coefficients,
    /// converted to size-aggregated marginals, weighted by `β_s(n, k)`.
    pub fn combine(&self, node_values: &[f64]) -> Result<(f64, PolySolve)> {
        let sol = self.plan.solve(node_values)?;
        let marginals = monomial_to_marginals(&sol.coeffs);
        let value = marginals.iter().zip(&self.beta).map(|(m, b)| m * b).sum();
        Ok((value, sol))
    }

    pub fn resolve_subsets(&self, subsets: &Subsets) -> Result<Vec<Vec<usize>>> {
        match subsets {
            Subsets::All => Ok(all_subsets(self.n, self.k)),
            Subsets::Explicit(list) => list
                .iter()
                .map(|s| {
                    if s.len() != self.k {
                        return Err(Error::InvalidSubset(format!(
                            "subset {s:?} does not have order {}",
                            self.k
                        )));
                    }
                    normalize_subset(s, self.n)
                })
                .collect(),
        }
    }

    pub fn explain<M: MultilinearMap + ?Sized>(
        &self,
        model: &M,
        lifts: &LiftSpec,
        x: &[f64],
        subsets: &Subsets,
        options: ExplainOptions,
    ) -> Result<AttributionSet> {
        if model.n() != self.n {
            return Err(Error::ArityMismatch {
                expected: self.n,
                found: model.n(),
            });
        }
        lifts.check_dims(model.phys_dims())?;
        let lifted = lifts.lift_all(x)?;
        let subsets = self.resolve_subsets(subsets)?;
        let nodes = self.plan.nodes();
        let mode = options.mode;

        // node_values[subset][node]
        let node_values: Vec<Vec<f64>> =
            if self.k == 1 && options.evaluation == Evaluation::SharedEnvironments {
                let per_node = nodes
                    .par_iter()
                    .map(|&t| -> Result<Vec<f64>> {
                        let envs = model.leg_environments(&scale_all(&lifted, t))?;
                        Ok(subsets
                            .iter()
                            .map(|s| {
                                let i = s[0];
                                let (e, v) = (&envs[i], &lifted[i]);
                                match mode {
                                    ProbeMode::SignedToggle => dot(e, &signed_toggle(v)),
                                    ProbeMode::InclusionExclusion => {
                                        dot(e, v) - e[v.len() - 1]
                                    }
                                }
                            })
                            .collect())
                    })
                    .collect::<Result<Vec<_>>>()?;
                (0..subsets.len())
                    .map(|s| per_node.iter().map(|row| row[s]).collect())
                    .collect()
            } else {
                let scaled: Vec<Vec<Vec<f64>>> = nodes.iter().map(|&t| scale_all(&lifted, t)).collect();
                subsets
                    .par_iter()
                    .map(|s| {
                        scaled
                            .iter()
                            .map(|sc| probe_lifted(model, &lifted, sc, s, mode))
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<Vec<_>>>()?
            };

        let mut entries = Vec::with_capacity(subsets.len());
        let mut max_residual = 0.0f64;
        for (subset, q) in subsets.into_iter().zip(node_values) {
            let (value, sol) = self.combine(&q)?;
            max_residual = max_residual.max(sol.residual);
            if sol.ill_conditioned {
                log::warn!(
                    "subset {subset:?}: interpolation residual {:e} exceeds tolerance",
                    sol.residual
                );
            }
            entries.push(Attribution {
                subset,
                value,
                residual: sol.residual,
                ill_conditioned: sol.ill_conditioned,
            });
        }
        Ok(AttributionSet {
            order: self.k,
            forwards_used: expected_forwards(self.n, self.k, entries.len(), mode),
            entries,
            max_solve_residual: max_residual,
        })
    }

    /// One result per instance; a failing instance does not abort the rest.
    pub fn explain_batch<M: MultilinearMap + ?Sized>(
        &self,
        model: &M,
        lifts: &LiftSpec,
        instances: &[Vec<f64>],
        subsets: &Subsets,
        options: ExplainOptions,
    ) -> Vec<Result<AttributionSet>> {
        instances
            .par_iter()
            .map(|x| self.explain(model, lifts, x, subsets, options))
            .collect()
    }
}

/// Order-`k` attributions of one instance.
pub fn explain<M: MultilinearMap + ?Sized>(
    model: &M,
    lifts: &LiftSpec,
    x: &[f64],
    k: usize,
    subsets: &Subsets,
    options: ExplainOptions,
) -> Result<AttributionSet> {
    Explainer::new(model.n(), k)?.explain(model, lifts, x, subsets, options)
}

/// Order-`k` attributions of many instances sharing one probe plan.
pub fn explain_batch<M: MultilinearMap + ?Sized>(
    model: &M,
    lifts: &LiftSpec,
    instances: &[Vec<f64>],
    k: usize,
    subsets: &Subsets,
    options: ExplainOptions,
) -> Result<Vec<Result<AttributionSet>>> {
    let explainer = Explainer::new(model.n(), k)?;
    Ok(explainer.explain_batch(model, lifts, instances, subsets, options))
}
