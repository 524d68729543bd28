//! Client-level aggregation: SHFL's edge-side selection and weighting, and
//! the FedAvg, Multi-krum and Trimmed-mean baselines.

pub(crate) mod baselines;
mod edge;

pub use baselines::{fedavg, multi_krum, multi_krum_scores, multi_krum_select, trimmed_mean, KrumDistance};
pub use edge::{edge_aggregate, edge_weights, select_clients_shfl, trust_metric, TrustRanking};

use crate::param::ParamVector;

/// A trained local model as received by an aggregator.
#[derive(Debug, Clone, PartialEq)]
pub struct ClientUpdate {
    pub node_id: usize,
    pub model: ParamVector,
    /// Number of training samples behind `model`.
    pub data_size: usize,
}

impl AsRef<ParamVector> for ClientUpdate {
    fn as_ref(&self) -> &ParamVector {
        &self.model
    }
}
