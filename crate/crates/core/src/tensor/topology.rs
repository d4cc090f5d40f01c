use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TopologyKind {
    #[serde(rename = "tt")]
    TensorTrain,
    #[serde(rename = "btree")]
    BalancedBinaryTree,
}

impl TopologyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TopologyKind::TensorTrain => "tt",
            TopologyKind::BalancedBinaryTree => "btree",
        }
    }
}

impl std::str::FromStr for TopologyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tt" | "tensor-train" => Ok(TopologyKind::TensorTrain),
            "btree" | "tree" => Ok(TopologyKind::BalancedBinaryTree),
            other => Err(Error::InvalidTopology(format!("unknown topology {other:?}"))),
        }
    }
}

/// Shape of a tensor network: which cores exist and how they are wired.
///
/// Tensor train: `n` cores in a chain, core `i` has shape
/// `(left, d_i, right)` and the two boundary bonds have extent 1.
/// `bond_dims` lists the `n - 1` internal edges in chain order.
///
/// Balanced binary tree: the `n` features are padded to `P = 2^L` leaves
/// (`L = max(1, ceil(log2 n))`), padding leaves have physical extent 1 and
/// are always fed the scalar 1. Nodes are stored in heap order: node 0 is
/// the root, the children of node `u` are `2u + 1` and `2u + 2`, and leaf
/// `j` is node `P - 1 + j`. Every non-root node `u` owns the edge to its
/// parent, so `bond_dims[u - 1]` is that edge's extent (BFS order).
/// Core shapes are `(left, right)` for the root, `(left, right, parent)`
/// for internal nodes and `(d, parent)` for leaves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TnTopology {
    kind: TopologyKind,
    phys_dims: Vec<usize>,
    bond_dims: Vec<usize>,
}

impl TnTopology {
    pub fn new(kind: TopologyKind, phys_dims: Vec<usize>, bond_dims: Vec<usize>) -> Result<Self> {
        let n = phys_dims.len();
        if n == 0 {
            return Err(Error::InvalidTopology("at least one feature is required".into()));
        }
        if let Some(i) = phys_dims.iter().position(|&d| d == 0) {
            return Err(Error::InvalidTopology(format!("physical dim of feature {i} is zero")));
        }
        let expected_edges = match kind {
            TopologyKind::TensorTrain => n - 1,
            TopologyKind::BalancedBinaryTree => 2 * tree_leaf_count(n) - 2,
        };
        if bond_dims.len() != expected_edges {
            return Err(Error::InvalidTopology(format!(
                "{} with {n} features has {expected_edges} bonds, {} given",
                kind.as_str(),
                bond_dims.len()
            )));
        }
        if let Some(e) = bond_dims.iter().position(|&b| b == 0) {
            return Err(Error::InvalidTopology(format!("bond {e} has extent zero")));
        }
        Ok(Self {
            kind,
            phys_dims,
            bond_dims,
        })
    }

    /// Topology with every bond set to `bond`.
    pub fn uniform(kind: TopologyKind, phys_dims: Vec<usize>, bond: usize) -> Result<Self> {
        let n = phys_dims.len();
        let edges = match kind {
            TopologyKind::TensorTrain => n.saturating_sub(1),
            TopologyKind::BalancedBinaryTree => 2 * tree_leaf_count(n.max(1)) - 2,
        };
        Self::new(kind, phys_dims, vec![bond; edges])
    }

    /// Like [`TnTopology::uniform`], but every edge is capped by the largest
    /// rank it can carry: the product of physical extents on the smaller
    /// side of the cut it induces.
    pub fn clipped(kind: TopologyKind, phys_dims: Vec<usize>, bond: usize) -> Result<Self> {
        let mut t = Self::uniform(kind, phys_dims, bond)?;
        let total = t.phys_dims.iter().fold(1usize, |a, &d| a.saturating_mul(d));
        let side = |inner: usize| inner.min(total / inner.max(1));
        match kind {
            TopologyKind::TensorTrain => {
                let mut left = 1usize;
                for e in 0..t.bond_dims.len() {
                    left = left.saturating_mul(t.phys_dims[e]);
                    t.bond_dims[e] = t.bond_dims[e].min(side(left));
                }
            }
            TopologyKind::BalancedBinaryTree => {
                let leaves = t.leaf_count();
                let mut inner = vec![1usize; 2 * leaves - 1];
                for u in (0..2 * leaves - 1).rev() {
                    inner[u] = if u >= leaves - 1 {
                        t.leaf_dim(u - (leaves - 1))
                    } else {
                        inner[2 * u + 1].saturating_mul(inner[2 * u + 2])
                    };
                }
                for u in 1..2 * leaves - 1 {
                    t.bond_dims[u - 1] = t.bond_dims[u - 1].min(side(inner[u]));
                }
            }
        }
        Ok(t)
    }

    pub fn kind(&self) -> TopologyKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.phys_dims.len()
    }

    pub fn phys_dims(&self) -> &[usize] {
        &self.phys_dims
    }

    pub fn bond_dims(&self) -> &[usize] {
        &self.bond_dims
    }

    /// Number of leaves of the padded tree (`n` for a tensor train).
    pub fn leaf_count(&self) -> usize {
        match self.kind {
            TopologyKind::TensorTrain => self.n(),
            TopologyKind::BalancedBinaryTree => tree_leaf_count(self.n()),
        }
    }

    pub fn core_count(&self) -> usize {
        match self.kind {
            TopologyKind::TensorTrain => self.n(),
            TopologyKind::BalancedBinaryTree => 2 * self.leaf_count() - 1,
        }
    }

    /// Heap index of the core holding feature `i`.
    pub fn core_of_feature(&self, i: usize) -> usize {
        match self.kind {
            TopologyKind::TensorTrain => i,
            TopologyKind::BalancedBinaryTree => self.leaf_count() - 1 + i,
        }
    }

    /// Extent of the edge between tree node `u` and its parent.
    pub(crate) fn parent_bond(&self, u: usize) -> usize {
        debug_assert!(u > 0);
        self.bond_dims[u - 1]
    }

    /// Physical extent of tree leaf `j` (1 for padding leaves).
    pub(crate) fn leaf_dim(&self, j: usize) -> usize {
        self.phys_dims.get(j).copied().unwrap_or(1)
    }

    pub fn core_shapes(&self) -> Vec<Vec<usize>> {
        match self.kind {
            TopologyKind::TensorTrain => {
                let n = self.n();
                (0..n)
                    .map(|i| {
                        let left = if i == 0 { 1 } else { self.bond_dims[i - 1] };
                        let right = if i + 1 == n { 1 } else { self.bond_dims[i] };
                        vec![left, self.phys_dims[i], right]
                    })
                    .collect()
            }
            TopologyKind::BalancedBinaryTree => {
                let leaves = self.leaf_count();
                (0..2 * leaves - 1)
                    .map(|u| {
                        if u >= leaves - 1 {
                            vec![self.leaf_dim(u - (leaves - 1)), self.parent_bond(u)]
                        } else {
                            let l = self.parent_bond(2 * u + 1);
                            let r = self.parent_bond(2 * u + 2);
                            if u == 0 {
                                vec![l, r]
                            } else {
                                vec![l, r, self.parent_bond(u)]
                            }
                        }
                    })
                    .collect()
            }
        }
    }

    /// Maximal cut rank χ.
    ///
    /// Both topologies are trees, so every minimal cut that separates the
    /// network into two connected parts crosses exactly one edge and χ is
    /// the largest bond extent. A single-feature tensor train has no
    /// internal edge and reports 1.
    pub fn cut_rank(&self) -> usize {
        self.bond_dims.iter().copied().max().unwrap_or(1)
    }
}

/// Leaves of the balanced tree over `n` features: `2^max(1, ceil(log2 n))`.
pub(crate) fn tree_leaf_count(n: usize) -> usize {
    n.next_power_of_two().max(2)
}
