//! Partitioning a training set across nodes.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::data::{Dataset, Shard};
use crate::error::{Error, Result};
use crate::seed;

/// Node id → shard. Node ids are the positions `0..n_nodes`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShardAssignment {
    pub node_shards: Vec<Shard>,
}

impl ShardAssignment {
    pub fn n_nodes(&self) -> usize {
        self.node_shards.len()
    }

    pub fn shard(&self, node: usize) -> &Shard {
        &self.node_shards[node]
    }
}

/// Splits `items` into `parts` contiguous runs; the first `len % parts`
/// runs get one extra item.
fn split_even<T: Clone>(items: &[T], parts: usize) -> Vec<Vec<T>> {
    let base = items.len() / parts;
    let extra = items.len() % parts;
    let mut out = Vec::with_capacity(parts);
    let mut start = 0;
    for p in 0..parts {
        let len = base + usize::from(p < extra);
        out.push(items[start..start + len].to_vec());
        start += len;
    }
    out
}

/// Random permutation followed by contiguous, equal-size splits.
pub fn shard_iid(dataset: &Dataset, n_nodes: usize, seed: u64) -> Result<ShardAssignment> {
    if n_nodes == 0 || dataset.len() < n_nodes {
        return Err(Error::InvalidArgument(format!(
            "cannot split {} samples across {n_nodes} nodes",
            dataset.len()
        )));
    }
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    order.shuffle(&mut seed::rng(seed::derive(seed, seed::Stream::Sharding, &[])));
    let node_shards = split_even(&order, n_nodes)
        .into_iter()
        .map(|idx| Shard::from_indices(dataset, idx))
        .collect();
    Ok(ShardAssignment { node_shards })
}

/// Label-sorted sharding: every node receives one shard of a single label.
///
/// Each label's samples (in dataset order) are cut into
/// `n_nodes / classes` shards; node `i` receives shard `i mod s` of label
/// `i / s`, where `s` is the shards-per-label count.
pub fn shard_noniid(dataset: &Dataset, n_nodes: usize) -> Result<ShardAssignment> {
    let classes = dataset.classes();
    if n_nodes == 0 || !n_nodes.is_multiple_of(classes) {
        return Err(Error::InvalidArgument(format!(
            "non-IID sharding needs a node count divisible by {classes} classes, got {n_nodes}"
        )));
    }
    let per_label = n_nodes / classes;
    let mut by_label: Vec<Vec<usize>> = vec![Vec::new(); classes];
    for (i, &l) in dataset.labels().iter().enumerate() {
        by_label[usize::from(l)].push(i);
    }
    let mut node_shards = Vec::with_capacity(n_nodes);
    for (label, indices) in by_label.iter().enumerate() {
        if indices.len() < per_label {
            return Err(Error::InvalidArgument(format!(
                "label {label} has {} samples, fewer than {per_label} shards",
                indices.len()
            )));
        }
        node_shards.extend(
            split_even(indices, per_label)
                .into_iter()
                .map(|idx| Shard::from_indices(dataset, idx)),
        );
    }
    Ok(ShardAssignment { node_shards })
}

/// Replaces every label with a uniform draw from the other `classes − 1`
/// classes. Indices (and hence images) are untouched.
pub fn flip_labels(shard: &Shard, classes: usize, seed: u64) -> Result<Shard> {
    if classes < 2 {
        return Err(Error::InvalidArgument(format!(
            "label flipping needs at least 2 classes, got {classes}"
        )));
    }
    let mut rng = seed::rng(seed::derive(seed, seed::Stream::LabelFlip, &[]));
    let labels = shard
        .labels
        .iter()
        .map(|&l| {
            let offset = rng.random_range(1..classes);
            ((usize::from(l) + offset) % classes) as u8
        })
        .collect();
    Ok(Shard {
        indices: shard.indices.clone(),
        labels,
    })
}
