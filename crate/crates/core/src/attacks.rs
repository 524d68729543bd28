//! Untargeted poisoning attacks: projected gradient ascent (model
//! poisoning) and label flipping (data poisoning).

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::data::{flip_labels, Dataset, ShardAssignment};
use crate::error::{Error, Result};
use crate::model::{Direction, Model, TrainConfig};
use crate::param::ParamVector;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttackKind {
    #[default]
    None,
    Pga,
    Lf,
}

/// What the PGA attacker rescales to the global model's norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PgaScaling {
    /// The whole poisoned model.
    #[default]
    Model,
    /// Only the poisoned delta `M − global`, which is then re-added.
    Delta,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AttackConfig {
    pub kind: AttackKind,
    pub attacker_ids: BTreeSet<usize>,
    pub seed: u64,
}

impl AttackConfig {
    pub fn is_attacker(&self, node: usize) -> bool {
        self.kind != AttackKind::None && self.attacker_ids.contains(&node)
    }
}

/// Poisoned model from a PGA attacker.
///
/// Trains by gradient ascent from `global` on the attacker's own (benign)
/// shard with the benign hyperparameters, then rescales so the result has
/// the global model's L2 norm. Unconstrained ascent on cross-entropy
/// overflows within a few epochs, so the iterate is also projected onto a
/// ball around the origin after every step (radius `‖global‖`, doubled in
/// `Delta` mode so the delta is not forced towards `−global`).
pub fn pga_update(
    model: &impl Model,
    global: &ParamVector,
    data: &Dataset,
    shard: &crate::data::Shard,
    train: &TrainConfig,
    scaling: PgaScaling,
) -> Result<ParamVector> {
    let target = global.l2_norm();
    if target == 0.0 {
        return Err(Error::InvalidArgument(
            "PGA needs a non-zero global model to set its norm bound".into(),
        ));
    }
    match scaling {
        PgaScaling::Model => {
            let ascent = TrainConfig {
                direction: Direction::Ascent,
                max_norm: Some(target),
                ..train.clone()
            };
            model.train_local(global, data, shard, &ascent)?.scale_to_norm(target)
        }
        PgaScaling::Delta => {
            let ascent = TrainConfig {
                direction: Direction::Ascent,
                max_norm: Some(2.0 * target),
                ..train.clone()
            };
            let poisoned = model.train_local(global, data, shard, &ascent)?;
            let delta = poisoned.sub(global)?;
            if delta.l2_norm() == 0.0 {
                return Ok(global.clone());
            }
            global.add(&delta.scale_to_norm(target)?)
        }
    }
}

/// Replaces every attacker's shard with a label-flipped copy. Each attacker
/// gets its own flip stream derived from `seed` and its node id.
pub fn apply_lf(
    assignment: &ShardAssignment,
    attacker_ids: &BTreeSet<usize>,
    classes: usize,
    seed: u64,
) -> Result<ShardAssignment> {
    if let Some(&bad) = attacker_ids.iter().find(|&&id| id >= assignment.n_nodes()) {
        return Err(Error::InvalidArgument(format!(
            "attacker id {bad} outside 0..{}",
            assignment.n_nodes()
        )));
    }
    let node_shards = assignment
        .node_shards
        .iter()
        .enumerate()
        .map(|(node, shard)| {
            if attacker_ids.contains(&node) {
                flip_labels(
                    shard,
                    classes,
                    seed::derive(seed, seed::Stream::LabelFlip, &[node as u64]),
                )
            } else {
                Ok(shard.clone())
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ShardAssignment { node_shards })
}
