//! Isolation forest over a univariate value vector.
//!
//! Each tree is grown on a without-replacement subsample; splits pick a
//! uniform value strictly between the node's min and max. Points isolating
//! in few splits score close to 1.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

const EULER_MASCHERONI: f64 = 0.577_215_664_9;

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Split {
        value: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
    Leaf {
        count: usize,
    },
}

/// One isolation tree, grown to at most `height_limit`.
#[derive(Debug, Clone, PartialEq)]
pub struct ITree {
    root: Node,
    height_limit: usize,
}

impl ITree {
    fn grow(values: &mut [f64], rng: &mut ChaCha8Rng, height_limit: usize) -> ITree {
        let root = grow_node(values, rng, 0, height_limit);
        ITree { root, height_limit }
    }

    /// Path length for a probe: edges traversed plus the average-path
    /// adjustment for the leaf's population.
    fn path_length(&self, x: f64) -> f64 {
        let mut node = &self.root;
        let mut edges = 0usize;
        loop {
            match node {
                Node::Split { value, left, right } => {
                    edges += 1;
                    node = if x < *value { left } else { right };
                }
                Node::Leaf { count } => {
                    return edges as f64 + average_path_c(*count);
                }
            }
        }
    }

    #[cfg(test)]
    fn height(&self) -> usize {
        fn depth(node: &Node) -> usize {
            match node {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + depth(left).max(depth(right)),
            }
        }
        depth(&self.root)
    }
}

fn grow_node(values: &mut [f64], rng: &mut ChaCha8Rng, height: usize, limit: usize) -> Node {
    if values.len() <= 1 || height >= limit {
        return Node::Leaf {
            count: values.len(),
        };
    }
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if min == max {
        return Node::Leaf {
            count: values.len(),
        };
    }
    let split = rng.gen_range(min..max);
    // With one attribute, partitioning is a comparison against the split value.
    let mut mid = 0;
    for i in 0..values.len() {
        if values[i] < split {
            values.swap(i, mid);
            mid += 1;
        }
    }
    let (left_vals, right_vals) = values.split_at_mut(mid);
    let left = grow_node(left_vals, rng, height + 1, limit);
    let right = grow_node(right_vals, rng, height + 1, limit);
    Node::Split {
        value: split,
        left: Box::new(left),
        right: Box::new(right),
    }
}

/// Ensemble of isolation trees plus the subsample size used to normalize
/// path lengths.
#[derive(Debug, Clone, PartialEq)]
pub struct IsolationForestModel {
    trees: Vec<ITree>,
    subsample_size: usize,
    seed: u64,
}

impl IsolationForestModel {
    pub fn tree_count(&self) -> usize {
        self.trees.len()
    }

    pub fn subsample_size(&self) -> usize {
        self.subsample_size
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    #[cfg(test)]
    pub(crate) fn max_tree_height(&self) -> usize {
        self.trees.iter().map(ITree::height).max().unwrap_or(0)
    }
}

/// Average unsuccessful-search path length in a binary search tree of `n`
/// points: `c(n) = 2 H(n-1) - 2 (n-1)/n` with `H(i) = ln(i) + gamma`.
/// Small-n conventions are pinned exactly: c(0) = c(1) = 0, c(2) = 1.
pub fn average_path_c(n: usize) -> f64 {
    match n {
        0 | 1 => 0.0,
        2 => 1.0,
        _ => {
            let nf = n as f64;
            2.0 * ((nf - 1.0).ln() + EULER_MASCHERONI) - 2.0 * (nf - 1.0) / nf
        }
    }
}

/// Grows `t` trees on without-replacement subsamples of `min(psi, n)`
/// values. Each tree's randomness derives from `seed` plus the tree index,
/// so parallel and serial builds produce identical forests.
pub fn build_isolation_forest(
    values: &[f64],
    t: usize,
    psi: usize,
    seed: u64,
) -> Result<IsolationForestModel> {
    if t < 1 {
        return Err(Error::InvalidParam("tree count t must be at least 1".into()));
    }
    if psi < 2 {
        return Err(Error::InvalidParam(
            "subsample size psi must be at least 2".into(),
        ));
    }
    if values.len() < 2 {
        return Err(Error::InvalidParam(
            "isolation forest needs at least 2 values".into(),
        ));
    }
    let effective_psi = psi.min(values.len());
    let height_limit = (effective_psi as f64).log2().ceil() as usize;

    let trees: Vec<ITree> = (0..t)
        .into_par_iter()
        .map(|tree_idx| {
            let mut rng = tree_rng(seed, tree_idx);
            let mut subsample: Vec<f64> = values
                .choose_multiple(&mut rng, effective_psi)
                .cloned()
                .collect();
            ITree::grow(&mut subsample, &mut rng, height_limit)
        })
        .collect();

    Ok(IsolationForestModel {
        trees,
        subsample_size: effective_psi,
        seed,
    })
}

fn tree_rng(seed: u64, tree_idx: usize) -> ChaCha8Rng {
    // splitmix-style mix keeps per-tree streams decorrelated.
    let mixed = (seed ^ (tree_idx as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)).wrapping_add(1);
    ChaCha8Rng::seed_from_u64(mixed)
}

/// Anomaly score per probe value: `s(x) = 2^(-E[h(x)] / c(psi))`, higher is
/// more anomalous.
pub fn iforest_scores(model: &IsolationForestModel, values: &[f64]) -> Vec<f64> {
    let norm = average_path_c(model.subsample_size);
    values
        .iter()
        .map(|&x| {
            let total: f64 = model.trees.iter().map(|t| t.path_length(x)).sum();
            let mean_path = total / model.trees.len() as f64;
            2f64.powf(-mean_path / norm)
        })
        .collect()
}
