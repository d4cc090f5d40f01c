use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};
use crate::map::MultilinearMap;
use crate::tensor::{DenseTensor, TnTopology, TopologyKind};

/// Default cap on the number of entries `materialize_full` will allocate.
pub const DEFAULT_MATERIALIZE_LIMIT: usize = 1 << 20;

/// A tensor network realizing the multilinear map
/// `g(x̃₁, …, x̃ₙ) = 𝒯 ×₁ x̃₁ ⋯ ×ₙ x̃ₙ`.
///
/// Cores are immutable once the model is built (the fitting code in this
/// crate is the only writer). Every call to [`TensorNetworkModel::forward`]
/// bumps an atomic counter so callers can audit evaluation budgets.
#[derive(Debug)]
pub struct TensorNetworkModel {
    topology: TnTopology,
    cores: Vec<DenseTensor>,
    forwards: AtomicU64,
}

impl Clone for TensorNetworkModel {
    fn clone(&self) -> Self {
        Self {
            topology: self.topology.clone(),
            cores: self.cores.clone(),
            forwards: AtomicU64::new(0),
        }
    }
}

impl PartialEq for TensorNetworkModel {
    fn eq(&self, other: &Self) -> bool {
        self.topology == other.topology && self.cores == other.cores
    }
}

impl TensorNetworkModel {
    pub fn new(topology: TnTopology, cores: Vec<DenseTensor>) -> Result<Self> {
        let shapes = topology.core_shapes();
        if shapes.len() != cores.len() {
            return Err(Error::InvalidShape(format!(
                "topology expects {} cores, {} given",
                shapes.len(),
                cores.len()
            )));
        }
        for (i, (shape, core)) in shapes.iter().zip(&cores).enumerate() {
            if core.shape() != shape.as_slice() {
                return Err(Error::InvalidShape(format!(
                    "core {i} has shape {:?}, topology requires {shape:?}",
                    core.shape()
                )));
            }
        }
        Ok(Self {
            topology,
            cores,
            forwards: AtomicU64::new(0),
        })
    }

    /// Builds a model whose cores are filled by `fill(core_index, flat_offset)`.
    pub fn from_fn(topology: TnTopology, mut fill: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let cores = topology
            .core_shapes()
            .into_iter()
            .enumerate()
            .map(|(c, shape)| {
                let len: usize = shape.iter().product();
                DenseTensor::new(shape, (0..len).map(|o| fill(c, o)).collect())
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(topology, cores)
    }

    pub fn topology(&self) -> &TnTopology {
        &self.topology
    }

    pub fn cores(&self) -> &[DenseTensor] {
        &self.cores
    }

    pub(crate) fn core_mut(&mut self, c: usize) -> &mut DenseTensor {
        &mut self.cores[c]
    }

    pub fn into_parts(self) -> (TnTopology, Vec<DenseTensor>) {
        (self.topology, self.cores)
    }

    pub fn n(&self) -> usize {
        self.topology.n()
    }

    pub fn cut_rank(&self) -> usize {
        self.topology.cut_rank()
    }

    pub fn parameter_count(&self) -> usize {
        self.cores.iter().map(DenseTensor::len).sum()
    }

    pub fn reset_forward_count(&self) {
        self.forwards.store(0, Ordering::Relaxed);
    }

    fn check_inputs(&self, inputs: &[Vec<f64>]) -> Result<()> {
        let dims = self.topology.phys_dims();
        if inputs.len() != dims.len() {
            return Err(Error::ArityMismatch {
                expected: dims.len(),
                found: inputs.len(),
            });
        }
        for (mode, (v, &d)) in inputs.iter().zip(dims).enumerate() {
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

    /// Full contraction with one lifted vector per feature.
    pub fn forward(&self, inputs: &[Vec<f64>]) -> Result<f64> {
        self.check_inputs(inputs)?;
        self.forwards.fetch_add(1, Ordering::Relaxed);
        Ok(match self.topology.kind() {
            TopologyKind::TensorTrain => self.chain_forward(inputs),
            TopologyKind::BalancedBinaryTree => self.tree_forward(inputs),
        })
    }

    /// For every feature `i`, the vector `e_i` with
    /// `g(…, v at mode i, …) = ⟨e_i, v⟩` when all other modes keep `inputs`.
    pub fn leg_environments(&self, inputs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        self.check_inputs(inputs)?;
        Ok(match self.topology.kind() {
            TopologyKind::TensorTrain => {
                let m = ChainMessages::compute(self, inputs);
                (0..self.n())
                    .map(|i| {
                        let core = self.cores[i].data();
                        let s = self.cores[i].shape();
                        let (l, d, r) = (s[0], s[1], s[2]);
                        let (left, right) = (&m.left[i], &m.right[i + 1]);
                        let mut env = vec![0.0; d];
                        for a in 0..l {
                            for (p, e) in env.iter_mut().enumerate() {
                                let row = &core[(a * d + p) * r..(a * d + p + 1) * r];
                                *e += left[a] * dot(row, right);
                            }
                        }
                        env
                    })
                    .collect()
            }
            TopologyKind::BalancedBinaryTree => {
                let m = TreeMessages::compute(self, inputs);
                let leaves = self.topology.leaf_count();
                (0..self.n())
                    .map(|i| {
                        let u = leaves - 1 + i;
                        let core = self.cores[u].data();
                        let b = self.cores[u].shape()[1];
                        core.chunks_exact(b).map(|row| dot(row, &m.down[u])).collect()
                    })
                    .collect()
            }
        })
    }

    /// Environment of core `c`: the tensor `E` (same layout as the core)
    /// such that `g(inputs) = ⟨core_c, E⟩`.
    pub fn core_environment(&self, inputs: &[Vec<f64>], c: usize) -> Result<Vec<f64>> {
        self.check_inputs(inputs)?;
        if c >= self.cores.len() {
            return Err(Error::InvalidShape(format!("core index {c} out of range")));
        }
        Ok(match self.topology.kind() {
            TopologyKind::TensorTrain => {
                let m = ChainMessages::compute(self, inputs);
                outer3(&m.left[c], &inputs[c], &m.right[c + 1])
            }
            TopologyKind::BalancedBinaryTree => {
                let m = TreeMessages::compute(self, inputs);
                let leaves = self.topology.leaf_count();
                if c >= leaves - 1 {
                    let j = c - (leaves - 1);
                    let x = leaf_input(inputs, j);
                    outer2(x, &m.down[c])
                } else if c == 0 {
                    outer2(&m.up[1], &m.up[2])
                } else {
                    outer3(&m.up[2 * c + 1], &m.up[2 * c + 2], &m.down[c])
                }
            }
        })
    }

    /// Contracts the network into its full coefficient tensor.
    pub fn materialize_full(&self) -> Result<DenseTensor> {
        self.materialize_full_with_limit(DEFAULT_MATERIALIZE_LIMIT)
    }

    pub fn materialize_full_with_limit(&self, limit: usize) -> Result<DenseTensor> {
        let dims = self.topology.phys_dims();
        let required = dims.iter().fold(1u128, |acc, &d| acc * d as u128);
        if required > limit as u128 {
            return Err(Error::TooLarge {
                what: "full coefficient tensor",
                required,
                limit: limit as u128,
            });
        }
        let data = match self.topology.kind() {
            TopologyKind::TensorTrain => {
                // rows: physical multi-index so far, cols: open right bond
                let mut acc = vec![1.0];
                let mut rows = 1;
                for core in &self.cores {
                    let s = core.shape();
                    let (l, d, r) = (s[0], s[1], s[2]);
                    let mut next = vec![0.0; rows * d * r];
                    for row in 0..rows {
                        for a in 0..l {
                            let w = acc[row * l + a];
                            for p in 0..d {
                                let src = &core.data()[(a * d + p) * r..(a * d + p + 1) * r];
                                let dst = &mut next[(row * d + p) * r..(row * d + p + 1) * r];
                                axpy(w, src, dst);
                            }
                        }
                    }
                    acc = next;
                    rows *= d;
                }
                acc
            }
            TopologyKind::BalancedBinaryTree => self.subtree_tensor(0).1,
        };
        DenseTensor::new(dims.to_vec(), data)
    }

    /// Row-major matrix (subtree physical index × parent bond) of node `u`.
    fn subtree_tensor(&self, u: usize) -> (usize, Vec<f64>) {
        let leaves = self.topology.leaf_count();
        let core = &self.cores[u];
        if u >= leaves - 1 {
            return (core.shape()[0], core.data().to_vec());
        }
        let (rl, left) = self.subtree_tensor(2 * u + 1);
        let (rr, right) = self.subtree_tensor(2 * u + 2);
        let s = core.shape();
        let (a_dim, b_dim) = (s[0], s[1]);
        let c_dim = if u == 0 { 1 } else { s[2] };
        let mut out = vec![0.0; rl * rr * c_dim];
        for il in 0..rl {
            for ir in 0..rr {
                let dst = &mut out[(il * rr + ir) * c_dim..(il * rr + ir + 1) * c_dim];
                for a in 0..a_dim {
                    let la = left[il * a_dim + a];
                    for b in 0..b_dim {
                        let w = la * right[ir * b_dim + b];
                        let src = &core.data()[(a * b_dim + b) * c_dim..(a * b_dim + b + 1) * c_dim];
                        axpy(w, src, dst);
                    }
                }
            }
        }
        (rl * rr, out)
    }

    fn chain_forward(&self, inputs: &[Vec<f64>]) -> f64 {
        let mut v = vec![1.0];
        for (core, x) in self.cores.iter().zip(inputs) {
            v = chain_step_left(core, &v, x);
        }
        v[0]
    }

    fn tree_forward(&self, inputs: &[Vec<f64>]) -> f64 {
        let up = tree_up(self, inputs);
        let root = self.cores[0].data();
        bilinear(root, &up[1], &up[2])
    }
}

impl MultilinearMap for TensorNetworkModel {
    fn phys_dims(&self) -> &[usize] {
        self.topology.phys_dims()
    }

    fn forward(&self, inputs: &[Vec<f64>]) -> Result<f64> {
        TensorNetworkModel::forward(self, inputs)
    }

    fn leg_environments(&self, inputs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        TensorNetworkModel::leg_environments(self, inputs)
    }

    fn forward_count(&self) -> u64 {
        self.forwards.load(Ordering::Relaxed)
    }
}

const ONE: [f64; 1] = [1.0];

fn leaf_input(inputs: &[Vec<f64>], j: usize) -> &[f64] {
    inputs.get(j).map(Vec::as_slice).unwrap_or(&ONE)
}

/// Left-to-right chain prefix (`left[i]` enters core `i`) and suffix
/// (`right[i]` leaves core `i - 1`) vectors.
struct ChainMessages {
    left: Vec<Vec<f64>>,
    right: Vec<Vec<f64>>,
}

impl ChainMessages {
    fn compute(model: &TensorNetworkModel, inputs: &[Vec<f64>]) -> Self {
        let n = model.n();
        let mut left = Vec::with_capacity(n + 1);
        left.push(vec![1.0]);
        for i in 0..n {
            let next = chain_step_left(&model.cores[i], &left[i], &inputs[i]);
            left.push(next);
        }
        let mut right = vec![Vec::new(); n + 1];
        right[n] = vec![1.0];
        for i in (0..n).rev() {
            right[i] = chain_step_right(&model.cores[i], &right[i + 1], &inputs[i]);
        }
        Self { left, right }
    }
}

fn chain_step_left(core: &DenseTensor, v: &[f64], x: &[f64]) -> Vec<f64> {
    let s = core.shape();
    let (l, d, r) = (s[0], s[1], s[2]);
    let data = core.data();
    let mut out = vec![0.0; r];
    for a in 0..l {
        for p in 0..d {
            let w = v[a] * x[p];
            axpy(w, &data[(a * d + p) * r..(a * d + p + 1) * r], &mut out);
        }
    }
    out
}

fn chain_step_right(core: &DenseTensor, v: &[f64], x: &[f64]) -> Vec<f64> {
    let s = core.shape();
    let (l, d, r) = (s[0], s[1], s[2]);
    let data = core.data();
    (0..l)
        .map(|a| {
            (0..d)
                .map(|p| x[p] * dot(&data[(a * d + p) * r..(a * d + p + 1) * r], v))
                .sum()
        })
        .collect()
}

/// Upward messages of every non-root tree node (`up[0]` is unused).
fn tree_up(model: &TensorNetworkModel, inputs: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let leaves = model.topology.leaf_count();
    let nodes = 2 * leaves - 1;
    let mut up = vec![Vec::new(); nodes];
    for j in 0..leaves {
        let u = leaves - 1 + j;
        let core = &model.cores[u];
        let b = core.shape()[1];
        let x = leaf_input(inputs, j);
        let mut msg = vec![0.0; b];
        for (p, &xp) in x.iter().enumerate() {
            axpy(xp, &core.data()[p * b..(p + 1) * b], &mut msg);
        }
        up[u] = msg;
    }
    for u in (1..leaves - 1).rev() {
        up[u] = node_up(&model.cores[u], &up[2 * u + 1], &up[2 * u + 2]);
    }
    up
}

struct TreeMessages {
    up: Vec<Vec<f64>>,
    /// `down[u]`: contraction of everything outside the subtree of `u`,
    /// indexed by the bond between `u` and its parent.
    down: Vec<Vec<f64>>,
}

impl TreeMessages {
    fn compute(model: &TensorNetworkModel, inputs: &[Vec<f64>]) -> Self {
        let up = tree_up(model, inputs);
        let leaves = model.topology.leaf_count();
        let nodes = 2 * leaves - 1;
        let mut down = vec![Vec::new(); nodes];
        let root = &model.cores[0];
        let (a_dim, b_dim) = (root.shape()[0], root.shape()[1]);
        down[1] = (0..a_dim)
            .map(|a| dot(&root.data()[a * b_dim..(a + 1) * b_dim], &up[2]))
            .collect();
        let mut right = vec![0.0; b_dim];
        for a in 0..a_dim {
            axpy(up[1][a], &root.data()[a * b_dim..(a + 1) * b_dim], &mut right);
        }
        down[2] = right;
        for u in 1..leaves - 1 {
            let core = &model.cores[u];
            let s = core.shape();
            let (a_dim, b_dim, c_dim) = (s[0], s[1], s[2]);
            let (lu, ru, du) = (&up[2 * u + 1], &up[2 * u + 2], &down[u]);
            let mut to_left = vec![0.0; a_dim];
            let mut to_right = vec![0.0; b_dim];
            for a in 0..a_dim {
                for b in 0..b_dim {
                    let w = dot(&core.data()[(a * b_dim + b) * c_dim..(a * b_dim + b + 1) * c_dim], du);
                    to_left[a] += w * ru[b];
                    to_right[b] += w * lu[a];
                }
            }
            down[2 * u + 1] = to_left;
            down[2 * u + 2] = to_right;
        }
        Self { up, down }
    }
}

fn node_up(core: &DenseTensor, left: &[f64], right: &[f64]) -> Vec<f64> {
    let s = core.shape();
    let (a_dim, b_dim, c_dim) = (s[0], s[1], s[2]);
    let data = core.data();
    let mut out = vec![0.0; c_dim];
    for a in 0..a_dim {
        if left[a] == 0.0 {
            continue;
        }
        for b in 0..b_dim {
            let w = left[a] * right[b];
            axpy(w, &data[(a * b_dim + b) * c_dim..(a * b_dim + b + 1) * c_dim], &mut out);
        }
    }
    out
}

fn bilinear(matrix: &[f64], left: &[f64], right: &[f64]) -> f64 {
    let b_dim = right.len();
    left.iter()
        .enumerate()
        .map(|(a, &la)| la * dot(&matrix[a * b_dim..(a + 1) * b_dim], right))
        .sum()
}

fn outer2(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().flat_map(|&x| b.iter().map(move |&y| x * y)).collect()
}

fn outer3(a: &[f64], b: &[f64], c: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len() * b.len() * c.len());
    for &x in a {
        for &y in b {
            let xy = x * y;
            out.extend(c.iter().map(|&z| xy * z));
        }
    }
    out
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
