use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::attribute::chebyshev_nodes;
use crate::error::{Error, Result};
use crate::lift::{off_state, selector_apply, LiftSpec};
use crate::map::MultilinearMap;

/// Standard deviation of a uniform variable on `[−1, 1]`.
pub const UNIFORM_STD: f64 = 0.577_350_269_189_625_8;

/// How training configurations are drawn around a center point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingConfig {
    /// Gaussian neighborhood samples per center (`M`).
    pub neighborhood: usize,
    /// Neighborhood σ as a fraction of each feature's standard deviation.
    pub sigma_frac: f64,
    /// Per-feature standard deviation; `None` means uniform on `[−1, 1]`.
    pub feature_std: Option<Vec<f64>>,
    /// Add the `2n²` on/off probe configurations at `n` Chebyshev nodes.
    pub structured: bool,
    /// Weight of structured rows relative to neighborhood rows.
    pub structured_weight: f64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            neighborhood: 100,
            sigma_frac: 0.1,
            feature_std: None,
            structured: true,
            structured_weight: 1.0,
        }
    }
}

impl SamplingConfig {
    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.sigma_frac > 0.0 && self.sigma_frac.is_finite()) {
            return Err(Error::Config(format!("sigma_frac must be positive, got {}", self.sigma_frac)));
        }
        if !(self.structured_weight > 0.0 && self.structured_weight.is_finite()) {
            return Err(Error::Config("structured_weight must be positive".into()));
        }
        if let Some(std) = &self.feature_std {
            if std.len() != n {
                return Err(Error::Config(format!(
                    "feature_std has {} entries for {n} features",
                    std.len()
                )));
            }
            if std.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
                return Err(Error::Config("feature_std entries must be finite and non-negative".into()));
            }
        }
        Ok(())
    }
}

/// Lifted input configurations with teacher targets.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingSet {
    pub inputs: Vec<Vec<Vec<f64>>>,
    pub targets: Vec<f64>,
    pub weights: Vec<f64>,
    /// Teacher forward passes spent building the set.
    pub teacher_calls: u64,
}

impl TrainingSet {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn extend(&mut self, other: TrainingSet) {
        self.inputs.extend(other.inputs);
        self.targets.extend(other.targets);
        self.weights.extend(other.weights);
        self.teacher_calls += other.teacher_calls;
    }
}

/// The two probe configurations for feature `i` with every other leg at
/// `S(t)`: `(on, off)`.
pub fn structured_pair(lifted: &[Vec<f64>], i: usize, t: f64) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut on: Vec<Vec<f64>> = lifted.iter().map(|v| selector_apply(t, v)).collect();
    let mut off = on.clone();
    on[i] = lifted[i].clone();
    off[i] = off_state(lifted[i].len());
    (on, off)
}

/// `M` Gaussian samples around `center` plus, when enabled, `2n²`
/// structured rows at `center`. Every row costs one teacher call.
pub fn build_training_set<M: MultilinearMap + ?Sized>(
    teacher: &M,
    lifts: &LiftSpec,
    center: &[f64],
    config: &SamplingConfig,
    seed: u64,
) -> Result<TrainingSet> {
    let n = teacher.n();
    lifts.check_dims(teacher.phys_dims())?;
    if center.len() != n {
        return Err(Error::ArityMismatch {
            expected: n,
            found: center.len(),
        });
    }
    config.validate(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sigmas: Vec<f64> = match &config.feature_std {
        Some(std) => std.iter().map(|s| s * config.sigma_frac).collect(),
        None => vec![UNIFORM_STD * config.sigma_frac; n],
    };
    let normals = sigmas
        .iter()
        .map(|&s| Normal::new(0.0, s).map_err(|e| Error::Config(e.to_string())))
        .collect::<Result<Vec<_>>>()?;

    let mut inputs = Vec::new();
    let mut weights = Vec::new();
    for _ in 0..config.neighborhood {
        let x: Vec<f64> = center
            .iter()
            .zip(&normals)
            .map(|(c, d)| c + d.sample(&mut rng))
            .collect();
        inputs.push(lifts.lift_all(&x)?);
        weights.push(1.0);
    }
    if config.structured {
        let lifted = lifts.lift_all(center)?;
        for i in 0..n {
            for &t in &chebyshev_nodes(n) {
                let (on, off) = structured_pair(&lifted, i, t);
                inputs.push(on);
                inputs.push(off);
                weights.extend([config.structured_weight; 2]);
            }
        }
    }
    let targets = inputs
        .iter()
        .map(|x| teacher.forward(x))
        .collect::<Result<Vec<_>>>()?;
    Ok(TrainingSet {
        teacher_calls: targets.len() as u64,
        inputs,
        targets,
        weights,
    })
}

/// Training rows around several centers, each with its own seed stream.
pub fn build_training_set_multi<M: MultilinearMap + ?Sized>(
    teacher: &M,
    lifts: &LiftSpec,
    centers: &[Vec<f64>],
    config: &SamplingConfig,
    seed: u64,
) -> Result<TrainingSet> {
    let mut set = TrainingSet::default();
    for (c, center) in centers.iter().enumerate() {
        let part = build_training_set(
            teacher,
            lifts,
            center,
            config,
            seed.wrapping_add((c as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)),
        )?;
        set.extend(part);
    }
    Ok(set)
}

/// `count` instances drawn uniformly from `[−1, 1]ⁿ`.
pub fn uniform_instances(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect())
        .collect()
}
