//! Secure hierarchical federated learning simulator.
//!
//! Clients train a 2NN MLP on local shards; edge servers filter clients by
//! their distance to the global model and aggregate the survivors; the cloud
//! weights edge aggregates by solving a concave utility-maximization problem
//! in closed form. PGA and label-flipping attackers, plus FedAvg, Multi-krum
//! and Trimmed-mean baselines, complete the experimental setup.

pub mod aggregation;
pub mod attacks;
pub mod cloud;
pub mod data;
pub mod error;
pub mod model;
pub mod param;
pub mod seed;
pub mod sim;

pub use error::{Error, Result};
pub use param::ParamVector;
