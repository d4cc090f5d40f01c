use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::lift::LiftSpec;
use crate::map::MultilinearMap;
use crate::tensor::{dot, DenseTensor, TensorNetworkModel, TnTopology, TopologyKind};

/// Uniform samples on `[−1, 1]ⁿ` used to normalize teacher output scale.
pub const SCALE_SAMPLES: usize = 1024;

/// Rank-`R` CP multilinear function `Σ_r w_r Π_i ⟨f_{i,r}, x̃_i⟩`.
#[derive(Debug)]
pub struct CpTeacher {
    phys_dims: Vec<usize>,
    rank: usize,
    /// Per feature, an `R × d_i` row-major matrix.
    factors: Vec<Vec<f64>>,
    weights: Vec<f64>,
    forwards: AtomicU64,
}

impl Clone for CpTeacher {
    fn clone(&self) -> Self {
        Self {
            phys_dims: self.phys_dims.clone(),
            rank: self.rank,
            factors: self.factors.clone(),
            weights: self.weights.clone(),
            forwards: AtomicU64::new(0),
        }
    }
}

impl CpTeacher {
    pub fn new(phys_dims: Vec<usize>, factors: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        let rank = weights.len();
        if rank == 0 {
            return Err(Error::Config("CP rank must be at least 1".into()));
        }
        if phys_dims.is_empty() || factors.len() != phys_dims.len() {
            return Err(Error::InvalidShape(format!(
                "{} factor matrices for {} features",
                factors.len(),
                phys_dims.len()
            )));
        }
        for (i, (f, &d)) in factors.iter().zip(&phys_dims).enumerate() {
            if f.len() != rank * d {
                return Err(Error::InvalidShape(format!(
                    "factor {i} has {} entries, expected {rank} x {d}",
                    f.len()
                )));
            }
        }
        Ok(Self {
            phys_dims,
            rank,
            factors,
            weights,
            forwards: AtomicU64::new(0),
        })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn factor(&self, i: usize, r: usize) -> &[f64] {
        let d = self.phys_dims[i];
        &self.factors[i][r * d..(r + 1) * d]
    }

    /// `⟨f_{i,r}, x̃_i⟩` for every feature and rank component.
    fn projections(&self, inputs: &[Vec<f64>]) -> Vec<Vec<f64>> {
        (0..self.phys_dims.len())
            .map(|i| (0..self.rank).map(|r| dot(self.factor(i, r), &inputs[i])).collect())
            .collect()
    }

    fn check(&self, inputs: &[Vec<f64>]) -> Result<()> {
        if inputs.len() != self.phys_dims.len() {
            return Err(Error::ArityMismatch {
                expected: self.phys_dims.len(),
                found: inputs.len(),
            });
        }
        for (mode, (v, &d)) in inputs.iter().zip(&self.phys_dims).enumerate() {
            if v.len() != d {
                return Err(Error::DimensionMismatch {
                    mode,
                    expected: d,
                    found: v.len(),
                });
            }
        }
        Ok(())
    }

    fn eval_unchecked(&self, inputs: &[Vec<f64>]) -> f64 {
        let proj = self.projections(inputs);
        (0..self.rank)
            .map(|r| self.weights[r] * proj.iter().map(|p| p[r]).product::<f64>())
            .sum()
    }

    /// Exact tensor-train form with all internal bonds equal to the rank.
    pub fn to_tensor_train(&self) -> Result<TensorNetworkModel> {
        let n = self.phys_dims.len();
        let r = self.rank;
        let topo = TnTopology::uniform(TopologyKind::TensorTrain, self.phys_dims.clone(), r)?;
        let cores = (0..n)
            .map(|i| {
                let d = self.phys_dims[i];
                if n == 1 {
                    let data = (0..d)
                        .map(|p| (0..r).map(|k| self.weights[k] * self.factor(i, k)[p]).sum())
                        .collect();
                    return DenseTensor::new(vec![1, d, 1], data);
                }
                if i == 0 {
                    DenseTensor::from_fn(vec![1, d, r], |ix| self.weights[ix[2]] * self.factor(0, ix[2])[ix[1]])
                } else if i + 1 == n {
                    DenseTensor::from_fn(vec![r, d, 1], |ix| self.factor(i, ix[0])[ix[1]])
                } else {
                    DenseTensor::from_fn(vec![r, d, r], |ix| {
                        if ix[0] == ix[2] {
                            self.factor(i, ix[0])[ix[1]]
                        } else {
                            0.0
                        }
                    })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        TensorNetworkModel::new(topo, cores)
    }
}

impl MultilinearMap for CpTeacher {
    fn phys_dims(&self) -> &[usize] {
        &self.phys_dims
    }

    fn forward(&self, inputs: &[Vec<f64>]) -> Result<f64> {
        self.check(inputs)?;
        self.forwards.fetch_add(1, Ordering::Relaxed);
        Ok(self.eval_unchecked(inputs))
    }

    fn leg_environments(&self, inputs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        self.check(inputs)?;
        let n = self.phys_dims.len();
        let proj = self.projections(inputs);
        // prefix/suffix products per rank component, so zeros need no division
        let mut envs: Vec<Vec<f64>> = self.phys_dims.iter().map(|&d| vec![0.0; d]).collect();
        for r in 0..self.rank {
            let mut prefix = vec![1.0; n + 1];
            for i in 0..n {
                prefix[i + 1] = prefix[i] * proj[i][r];
            }
            let mut suffix = 1.0;
            for i in (0..n).rev() {
                let coef = self.weights[r] * prefix[i] * suffix;
                for (e, f) in envs[i].iter_mut().zip(self.factor(i, r)) {
                    *e += coef * f;
                }
                suffix *= proj[i][r];
            }
        }
        Ok(envs)
    }

    fn forward_count(&self) -> u64 {
        self.forwards.load(Ordering::Relaxed)
    }
}

/// Mean of `⟨f, lift(x)⟩²` over a midpoint grid on `[−1, 1]`.
fn mean_square_on_interval(lifts: &LiftSpec, i: usize, f: &[f64]) -> f64 {
    const GRID: usize = 256;
    (0..GRID)
        .map(|g| {
            let x = -1.0 + (2 * g + 1) as f64 / GRID as f64;
            dot(f, &lifts.lift(i, x)).powi(2)
        })
        .sum::<f64>()
        / GRID as f64
}

/// Standard deviation of `model` outputs over uniform samples in `[−1, 1]ⁿ`.
pub fn output_std<M: MultilinearMap + ?Sized>(model: &M, lifts: &LiftSpec, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = model.n();
    let mut values = Vec::with_capacity(SCALE_SAMPLES);
    for _ in 0..SCALE_SAMPLES {
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
        values.push(model.forward(&lifts.lift_all(&x)?)?);
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / values.len() as f64;
    Ok(var.sqrt())
}

/// Seed of the stream used for output-scale normalization.
fn scale_seed(seed: u64) -> u64 {
    seed ^ 0x5ca1_e5ee_d000_0001
}

/// Random CP teacher: standard-normal factors, each factor row rescaled to
/// unit mean square on `[−1, 1]`, standard-normal weights, then all
/// weights scaled so outputs on uniform `[−1, 1]ⁿ` have standard deviation 1.
pub fn gen_cp_teacher(lifts: &LiftSpec, rank: usize, seed: u64) -> Result<CpTeacher> {
    if rank == 0 {
        return Err(Error::Config("CP rank must be at least 1".into()));
    }
    let dims = lifts.dims();
    if dims.is_empty() {
        return Err(Error::Config("a teacher needs at least one feature".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut factors = Vec::with_capacity(dims.len());
    for (i, &d) in dims.iter().enumerate() {
        let mut f = Vec::with_capacity(rank * d);
        for _ in 0..rank {
            let mut row: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            let ms = mean_square_on_interval(lifts, i, &row);
            if ms > 0.0 {
                let s = ms.sqrt().recip();
                row.iter_mut().for_each(|v| *v *= s);
            }
            f.extend(row);
        }
        factors.push(f);
    }
    let weights: Vec<f64> = (0..rank).map(|_| rng.sample(StandardNormal)).collect();
    let mut teacher = CpTeacher::new(dims, factors, weights)?;
    let std = output_std(&teacher, lifts, scale_seed(seed))?;
    if std > 0.0 && std.is_finite() {
        teacher.weights.iter_mut().for_each(|w| *w /= std);
    }
    teacher.forwards.store(0, Ordering::Relaxed);
    Ok(teacher)
}

/// Random balanced-tree teacher with every bond equal to `bond`.
///
/// Cores are standard normal divided by the square root of their incoming
/// extent; the root is then rescaled so outputs on uniform `[−1, 1]ⁿ`
/// have standard deviation 1.
pub fn gen_tree_teacher(lifts: &LiftSpec, bond: usize, seed: u64) -> Result<TensorNetworkModel> {
    random_network(TopologyKind::BalancedBinaryTree, lifts, bond, seed)
}

/// Same construction as [`gen_tree_teacher`] for an arbitrary topology kind.
pub fn random_network(
    kind: TopologyKind,
    lifts: &LiftSpec,
    bond: usize,
    seed: u64,
) -> Result<TensorNetworkModel> {
    if bond == 0 {
        return Err(Error::Config("bond dimension must be at least 1".into()));
    }
    let topo = TnTopology::uniform(kind, lifts.dims(), bond)?;
    let model = random_cores(topo, seed)?;
    normalize_output(model, lifts, seed)
}

/// Standard-normal cores scaled by `1/√(fan-in)`.
pub(crate) fn random_cores(topo: TnTopology, seed: u64) -> Result<TensorNetworkModel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shapes = topo.core_shapes();
    let cores = shapes
        .into_iter()
        .map(|shape| {
            let fan_in = fan_in(topo.kind(), &shape);
            let s = (fan_in as f64).sqrt().recip();
            let len = shape.iter().product();
            let data = (0..len).map(|_| s * rng.sample::<f64, _>(StandardNormal)).collect();
            DenseTensor::new(shape, data)
        })
        .collect::<Result<Vec<_>>>()?;
    TensorNetworkModel::new(topo, cores)
}

fn fan_in(kind: TopologyKind, shape: &[usize]) -> usize {
    match kind {
        // (left, d, right): contracted from the left together with the input
        TopologyKind::TensorTrain => shape[0] * shape[1],
        // leaves (d, parent), internal (l, r, parent), root (l, r)
        TopologyKind::BalancedBinaryTree => match shape.len() {
            2 => shape[0],
            _ => shape[0] * shape[1],
        },
    }
}

fn normalize_output(mut model: TensorNetworkModel, lifts: &LiftSpec, seed: u64) -> Result<TensorNetworkModel> {
    let std = output_std(&model, lifts, scale_seed(seed))?;
    if std > 0.0 && std.is_finite() {
        model.core_mut(0).data_mut().iter_mut().for_each(|v| *v /= std);
    }
    model.reset_forward_count();
    Ok(model)
}
