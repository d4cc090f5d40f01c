use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::data::{SamplingConfig, TrainingSet};
use crate::fit::metrics::OrderQuality;
use crate::fit::teacher::random_cores;
use crate::tensor::{TensorNetworkModel, TnTopology, TopologyKind};

/// Relative Tikhonov strength of every local solve.
pub const TIKHONOV_SCALE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub version: u32,
    pub topology: TopologyKind,
    /// Student bond dimension χ.
    pub bond_dim: usize,
    /// Cap each student edge at the largest rank its cut can carry.
    pub clip_bonds: bool,
    pub sampling: SamplingConfig,
    pub max_sweeps: usize,
    /// Stop once a sweep improves the training R² by less than this.
    pub tol: f64,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            version: 1,
            topology: TopologyKind::BalancedBinaryTree,
            bond_dim: 8,
            clip_bonds: true,
            sampling: SamplingConfig::default(),
            max_sweeps: 30,
            tol: 1e-9,
            seed: 0,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.version != 1 {
            return Err(Error::Config(format!("unsupported fit config version {}", self.version)));
        }
        if self.bond_dim == 0 {
            return Err(Error::Config("bond_dim must be at least 1".into()));
        }
        if self.max_sweeps == 0 {
            return Err(Error::Config("max_sweeps must be at least 1".into()));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::Config("tol must be non-negative".into()));
        }
        Ok(())
    }

    pub fn student_topology(&self, phys_dims: Vec<usize>) -> Result<TnTopology> {
        if self.clip_bonds {
            TnTopology::clipped(self.topology, phys_dims, self.bond_dim)
        } else {
            TnTopology::uniform(self.topology, phys_dims, self.bond_dim)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub version: u32,
    pub train_r2: f64,
    pub train_mse: f64,
    pub sweeps: usize,
    /// Training MSE before the first sweep and after every sweep.
    pub mse_history: Vec<f64>,
    pub r2_history: Vec<f64>,
    /// Local solves whose Cholesky factorization needed a larger ridge.
    pub tikhonov_fallbacks: usize,
    /// Local updates discarded because they did not lower the loss.
    pub rejected_updates: usize,
    pub rows: usize,
    pub teacher_calls: u64,
    /// Not serialized, so reports of identical runs are byte-identical.
    #[serde(skip)]
    pub wall_time_s: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub quality: Vec<OrderQuality>,
}

/// Weighted squared error and weighted R² of `pred` against the set.
fn train_metrics(set: &TrainingSet, pred: &[f64]) -> (f64, f64) {
    let wsum: f64 = set.weights.iter().sum();
    let mean = set.targets.iter().zip(&set.weights).map(|(y, w)| w * y).sum::<f64>() / wsum;
    let mut sse = 0.0;
    let mut sst = 0.0;
    for ((y, p), w) in set.targets.iter().zip(pred).zip(&set.weights) {
        sse += w * (y - p).powi(2);
        sst += w * (y - mean).powi(2);
    }
    let mse = sse / wsum;
    let mean_sq = set.targets.iter().zip(&set.weights).map(|(y, w)| w * y * y).sum::<f64>() / wsum;
    let r2 = if sst > 1e-24 * mean_sq * wsum {
        1.0 - sse / sst
    } else if mse <= 1e-10 * mean_sq || mse == 0.0 {
        // constant target, reproduced to rounding
        1.0
    } else {
        0.0
    };
    (mse, r2)
}

fn predictions(model: &TensorNetworkModel, set: &TrainingSet) -> Result<Vec<f64>> {
    set.inputs.par_iter().map(|x| model.forward(x)).collect()
}

/// Fits a tensor-network student to `set` by alternating least squares.
///
/// Each step replaces one core by the minimizer of the weighted squared
/// error plus `λ‖w − w_old‖²`, with `λ = 10⁻¹⁰ · trace(AᵀA)/p`. The
/// proximal term keeps every local system positive definite and makes the
/// loss non-increasing; updates that fail to lower it (rounding) are
/// discarded.
pub fn fit_student(set: &TrainingSet, config: &FitConfig) -> Result<(TensorNetworkModel, FitReport)> {
    config.validate()?;
    if set.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let started = Instant::now();
    let phys_dims: Vec<usize> = set.inputs[0].iter().map(Vec::len).collect();
    if let Some(bad) = set
        .inputs
        .iter()
        .position(|x| x.len() != phys_dims.len() || x.iter().map(Vec::len).ne(phys_dims.iter().copied()))
    {
        return Err(Error::InvalidShape(format!("training row {bad} has inconsistent lifted dims")));
    }
    let topo = config.student_topology(phys_dims)?;
    let mut model = random_cores(topo, config.seed)?;
    let core_count = model.cores().len();

    let sqrt_w: Vec<f64> = set.weights.iter().map(|w| w.sqrt()).collect();
    let y = DVector::from_iterator(set.len(), set.targets.iter().zip(&sqrt_w).map(|(t, s)| t * s));

    let (mut mse, mut r2) = train_metrics(set, &predictions(&model, set)?);
    let mut mse_history = vec![mse];
    let mut r2_history = vec![r2];
    let mut fallbacks = 0;
    let mut rejected = 0;
    let mut sweeps = 0;

    for sweep in 0..config.max_sweeps {
        let order: Vec<usize> = if sweep % 2 == 0 {
            (0..core_count).rev().collect()
        } else {
            (0..core_count).collect()
        };
        for c in order {
            let p = model.cores()[c].len();
            let rows = set
                .inputs
                .par_iter()
                .zip(&sqrt_w)
                .map(|(x, s)| {
                    let mut env = model.core_environment(x, c)?;
                    env.iter_mut().for_each(|e| *e *= s);
                    Ok(env)
                })
                .collect::<Result<Vec<_>>>()?;
            let a = DMatrix::from_row_iterator(set.len(), p, rows.into_iter().flatten());
            let w_old = DVector::from_column_slice(model.cores()[c].data());
            let outcome = local_solve(&a, &y, &w_old)?;
            fallbacks += outcome.fallbacks;
            if outcome.accepted {
                model.core_mut(c).data_mut().copy_from_slice(outcome.w.as_slice());
            } else {
                rejected += 1;
            }
        }
        sweeps = sweep + 1;
        let (new_mse, new_r2) = train_metrics(set, &predictions(&model, set)?);
        log::debug!("sweep {sweeps}: mse {new_mse:e}, r2 {new_r2}");
        mse_history.push(new_mse);
        r2_history.push(new_r2);
        let improvement = new_r2 - r2;
        mse = new_mse;
        r2 = new_r2;
        if improvement < config.tol || mse == 0.0 {
            break;
        }
    }
    model.reset_forward_count();
    let report = FitReport {
        version: 1,
        train_r2: r2,
        train_mse: mse,
        sweeps,
        mse_history,
        r2_history,
        tikhonov_fallbacks: fallbacks,
        rejected_updates: rejected,
        rows: set.len(),
        teacher_calls: set.teacher_calls,
        wall_time_s: started.elapsed().as_secs_f64(),
        quality: Vec::new(),
    };
    Ok((model, report))
}

struct LocalOutcome {
    w: DVector<f64>,
    accepted: bool,
    fallbacks: usize,
}

/// `argmin ‖A w − y‖² + λ‖w − w_old‖²`, escalating `λ` when the
/// regularized Gram matrix is not numerically positive definite.
fn local_solve(a: &DMatrix<f64>, y: &DVector<f64>, w_old: &DVector<f64>) -> Result<LocalOutcome> {
    let p = a.ncols();
    let gram = a.tr_mul(a);
    let rhs = a.tr_mul(y);
    let trace = gram.trace();
    let mut lambda = if trace > 0.0 { TIKHONOV_SCALE * trace / p as f64 } else { TIKHONOV_SCALE };
    let mut fallbacks = 0;
    for _ in 0..12 {
        let mut g = gram.clone();
        for i in 0..p {
            g[(i, i)] += lambda;
        }
        if let Some(chol) = g.cholesky() {
            let w = chol.solve(&(&rhs + w_old * lambda));
            let old_loss = (a * w_old - y).norm_squared();
            let new_loss = (a * &w - y).norm_squared();
            let accepted = new_loss.is_finite() && new_loss <= old_loss;
            return Ok(LocalOutcome { w, accepted, fallbacks });
        }
        fallbacks += 1;
        lambda *= 100.0;
    }
    Err(Error::Solve("local least-squares system stayed indefinite".into()))
}
