//! Experiment driver: topology, the round loop and per-round metrics.
//!
//! A round is distribute → local training → selection/aggregation →
//! evaluation. The participating set is refreshed every
//! `selection_period` rounds and held fixed in between. Client training
//! runs on the rayon pool; every client draws from its own
//! `(master_seed, round, client)` stream and results are collected in
//! client order, so records do not depend on the worker count.

use std::collections::BTreeSet;
use std::path::PathBuf;

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aggregation::{self, edge_aggregate, fedavg, multi_krum_select, select_clients_shfl, trimmed_mean};
use crate::aggregation::{ClientUpdate, KrumDistance};
use crate::attacks::{apply_lf, pga_update, AttackKind, PgaScaling};
use crate::cloud::{run_cloud_round, CloudConfig, EdgeReport, EdgeWeight};
use crate::data::{gen_synthetic_with_dim, load_idx, shard_iid, shard_noniid, Dataset, ShardAssignment};
use crate::error::{Error, Result};
use crate::model::{Direction, Mlp, Model, TrainConfig};
use crate::param::ParamVector;
use crate::seed::{self, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Defense {
    Shfl,
    FedAvg,
    MultiKrum,
    TrimmedMean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TopologyMode {
    /// Clients → edge servers → cloud.
    Hierarchical,
    /// Every client reports straight to the cloud.
    Flat,
}

/// Edge `j` hosts the clients `i` with `i mod n_edges = j`. Under the
/// label-ordered non-IID sharding this gives every edge one client per
/// label block rather than a single label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Topology {
    pub n_clients: usize,
    pub n_edges: usize,
    pub mode: TopologyMode,
}

impl Default for Topology {
    fn default() -> Self {
        Self {
            n_clients: 100,
            n_edges: 10,
            mode: TopologyMode::Hierarchical,
        }
    }
}

impl Topology {
    pub fn clients_per_edge(&self) -> usize {
        self.n_clients / self.n_edges.max(1)
    }

    /// Client ids of `edge`, ascending.
    pub fn edge_members(&self, edge: usize) -> Vec<usize> {
        (edge..self.n_clients).step_by(self.n_edges).collect()
    }

    pub fn edge_of(&self, client: usize) -> usize {
        client % self.n_edges
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sharding {
    Iid,
    NonIid,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSpec {
    /// IDX image/label files; `train_subsample` keeps the first N training
    /// samples.
    Idx {
        train_images: PathBuf,
        train_labels: PathBuf,
        test_images: PathBuf,
        test_labels: PathBuf,
        train_subsample: Option<usize>,
    },
    /// Gaussian class blobs drawn from the master seed.
    Synthetic {
        train: usize,
        test: usize,
        classes: usize,
        dim: usize,
    },
}

impl DataSpec {
    /// Training and test sets.
    pub fn load(&self, master_seed: u64) -> Result<(Dataset, Dataset)> {
        match self {
            DataSpec::Idx {
                train_images,
                train_labels,
                test_images,
                test_labels,
                train_subsample,
            } => {
                let mut train = load_idx(train_images, train_labels)?;
                if let Some(n) = *train_subsample {
                    train = train.take(n);
                }
                Ok((train, load_idx(test_images, test_labels)?))
            }
            DataSpec::Synthetic {
                train,
                test,
                classes,
                dim,
            } => {
                // One draw, then split, so both halves share class prototypes.
                let all = gen_synthetic_with_dim(train + test, *classes, *dim, master_seed)?;
                Ok(all.split_at(*train))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AttackSpec {
    pub kind: AttackKind,
    /// Number of attacker clients, placed uniformly at random.
    pub count: usize,
    pub pga_scaling: PgaScaling,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub topology: Topology,
    pub data: DataSpec,
    pub sharding: Sharding,
    pub defense: Defense,
    pub attack: AttackSpec,
    /// Local training hyperparameters. `seed` and `direction` are ignored:
    /// each client gets a derived seed and attackers choose their own
    /// direction.
    pub train: TrainConfig,
    /// Hidden layer widths of the MLP.
    pub hidden: [usize; 2],
    pub clients_per_round: usize,
    pub selection_period: usize,
    pub rounds: usize,
    /// Clients dropped per edge by trust ranking; baselines use
    /// `a · n_edges` as their global attacker estimate.
    pub estimated_attackers_per_edge: usize,
    pub cloud: CloudConfig,
    pub krum_f: Option<usize>,
    pub krum_k: Option<usize>,
    pub krum_distance: KrumDistance,
    pub trim_m: Option<usize>,
    pub master_seed: u64,
}

impl SimConfig {
    /// Defaults for a 100-client, 10-edge SHFL run on the given data.
    pub fn new(data: DataSpec) -> Self {
        Self {
            topology: Topology::default(),
            data,
            sharding: Sharding::Iid,
            defense: Defense::Shfl,
            attack: AttackSpec::default(),
            train: TrainConfig::new(0),
            hidden: [200, 200],
            clients_per_round: 30,
            selection_period: 3,
            rounds: 100,
            estimated_attackers_per_edge: 0,
            cloud: CloudConfig::default(),
            krum_f: None,
            krum_k: None,
            krum_distance: KrumDistance::Squared,
            trim_m: None,
            master_seed: 0,
        }
    }

    pub fn attacker_count(&self) -> usize {
        if self.attack.kind == AttackKind::None {
            0
        } else {
            self.attack.count
        }
    }

    fn hierarchical(&self) -> bool {
        self.topology.mode == TopologyMode::Hierarchical
    }

    /// Clients selected per edge in hierarchical mode.
    pub fn per_edge_selection(&self) -> usize {
        self.clients_per_round / self.topology.n_edges.max(1)
    }

    pub fn krum_f(&self) -> usize {
        self.krum_f
            .unwrap_or(self.estimated_attackers_per_edge * self.topology.n_edges)
    }

    pub fn krum_k(&self) -> usize {
        self.krum_k.unwrap_or(self.clients_per_round)
    }

    pub fn trim_m(&self) -> usize {
        self.trim_m
            .unwrap_or(self.estimated_attackers_per_edge * self.topology.n_edges)
    }

    pub fn validate(&self) -> Result<()> {
        let t = &self.topology;
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if t.n_clients == 0 || t.n_edges == 0 {
            return bad("topology needs at least one client and one edge".into());
        }
        if self.clients_per_round == 0 || self.clients_per_round > t.n_clients {
            return bad(format!(
                "clients_per_round = {} must lie in 1..={}",
                self.clients_per_round, t.n_clients
            ));
        }
        if self.selection_period == 0 {
            return bad("selection period must be at least 1".into());
        }
        if self.attack.kind != AttackKind::None && self.attack.count > t.n_clients {
            return bad(format!(
                "{} attackers requested but only {} clients exist",
                self.attack.count, t.n_clients
            ));
        }
        if self.hidden.contains(&0) {
            return bad("hidden layer widths must be positive".into());
        }
        self.train.validate()?;
        match (self.defense, t.mode) {
            (Defense::Shfl, TopologyMode::Flat) => return bad("shfl needs the hierarchical topology".into()),
            (Defense::MultiKrum | Defense::TrimmedMean, TopologyMode::Hierarchical) => {
                return bad(format!("{:?} runs on the flat topology only", self.defense))
            }
            _ => {}
        }
        if self.hierarchical() {
            if !t.n_clients.is_multiple_of(t.n_edges) {
                return bad(format!(
                    "{} clients cannot be split evenly across {} edges",
                    t.n_clients, t.n_edges
                ));
            }
            if !self.clients_per_round.is_multiple_of(t.n_edges) {
                return bad(format!(
                    "clients_per_round = {} is not a multiple of {} edges",
                    self.clients_per_round, t.n_edges
                ));
            }
            let m = self.per_edge_selection();
            let a = if self.defense == Defense::Shfl {
                self.estimated_attackers_per_edge
            } else {
                0
            };
            if a + m > t.clients_per_edge() {
                return bad(format!(
                    "cannot select {m} clients per edge after removing {a} of {}",
                    t.clients_per_edge()
                ));
            }
        }
        match self.defense {
            Defense::Shfl => self.cloud.validate(t.n_edges)?,
            Defense::MultiKrum => {
                let (f, k) = (self.krum_f(), self.krum_k());
                if t.n_clients < f + 3 || k == 0 || k > t.n_clients - f {
                    return bad(format!(
                        "multi-krum with f = {f}, k = {k} is infeasible for {} clients",
                        t.n_clients
                    ));
                }
            }
            Defense::TrimmedMean => {
                let m = self.trim_m();
                if 2 * m >= self.clients_per_round {
                    return bad(format!(
                        "trimmed mean with m = {m} needs more than {} clients per round",
                        2 * m
                    ));
                }
            }
            Defense::FedAvg => {}
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub round: usize,
    pub accuracy: f64,
    pub loss: f64,
    /// Clients whose updates were aggregated this round.
    pub selected: Vec<usize>,
    pub attackers_selected: usize,
    /// Cloud-side distance, score and weight per edge (SHFL only).
    pub edges: Vec<EdgeWeight>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutcome {
    pub attackers: BTreeSet<usize>,
    pub records: Vec<RoundRecord>,
    pub global: ParamVector,
}

/// Attacker ids drawn uniformly without replacement.
pub fn place_attackers(n_clients: usize, count: usize, seed: u64) -> Result<BTreeSet<usize>> {
    if count > n_clients {
        return Err(Error::InvalidArgument(format!(
            "cannot place {count} attackers among {n_clients} clients"
        )));
    }
    let mut rng = seed::rng(seed::derive(seed, Stream::AttackerPlacement, &[]));
    Ok(index::sample(&mut rng, n_clients, count).into_iter().collect())
}

/// Loads the configured data and runs the experiment.
pub fn run_experiment(config: &SimConfig) -> Result<SimOutcome> {
    config.validate()?;
    let (train, test) = config.data.load(config.master_seed)?;
    run_with_data(config, &train, &test, |_| {})
}

/// Runs the experiment on already-loaded data, calling `on_round` after
/// every round.
pub fn run_with_data(
    config: &SimConfig,
    train: &Dataset,
    test: &Dataset,
    on_round: impl FnMut(&RoundRecord),
) -> Result<SimOutcome> {
    config.validate()?;
    Simulation::new(config, train, test)?.run(on_round)
}

struct Simulation<'a> {
    cfg: &'a SimConfig,
    train: &'a Dataset,
    test: &'a Dataset,
    model: Mlp,
    shards: ShardAssignment,
    attackers: BTreeSet<usize>,
}

impl<'a> Simulation<'a> {
    fn new(cfg: &'a SimConfig, train: &'a Dataset, test: &'a Dataset) -> Result<Self> {
        if train.dim() != test.dim() || train.classes() != test.classes() {
            return Err(Error::InvalidArgument(format!(
                "train ({}-dim, {} classes) and test ({}-dim, {} classes) sets disagree",
                train.dim(),
                train.classes(),
                test.dim(),
                test.classes()
            )));
        }
        if test.is_empty() {
            return Err(Error::Empty("test set is empty"));
        }
        let n = cfg.topology.n_clients;
        let shards = match cfg.sharding {
            Sharding::Iid => shard_iid(train, n, cfg.master_seed)?,
            Sharding::NonIid => shard_noniid(train, n)?,
        };
        let attackers = place_attackers(n, cfg.attacker_count(), cfg.master_seed)?;
        let shards = if cfg.attack.kind == AttackKind::Lf {
            apply_lf(&shards, &attackers, train.classes(), cfg.master_seed)?
        } else {
            shards
        };
        if let Some(node) = shards.node_shards.iter().position(|s| s.is_empty()) {
            return Err(Error::InvalidArgument(format!(
                "client {node} received no training data"
            )));
        }
        let model = Mlp::new(train.dim(), cfg.hidden[0], cfg.hidden[1], train.classes());
        Ok(Self {
            cfg,
            train,
            test,
            model,
            shards,
            attackers,
        })
    }

    fn seed(&self, stream: Stream, path: &[u64]) -> u64 {
        seed::derive(self.cfg.master_seed, stream, path)
    }

    fn train_one(&self, round: usize, client: usize, global: &ParamVector) -> Result<ClientUpdate> {
        let shard = self.shards.shard(client);
        let train = TrainConfig {
            seed: self.seed(Stream::ClientTraining, &[round as u64, client as u64]),
            direction: Direction::Descent,
            ..self.cfg.train.clone()
        };
        let model = if self.cfg.attack.kind == AttackKind::Pga && self.attackers.contains(&client) {
            pga_update(
                &self.model,
                global,
                self.train,
                shard,
                &train,
                self.cfg.attack.pga_scaling,
            )?
        } else {
            self.model.train_local(global, self.train, shard, &train)?
        };
        Ok(ClientUpdate {
            node_id: client,
            model,
            data_size: shard.len(),
        })
    }

    /// Trains `clients` in parallel; results come back in input order.
    fn train_all(&self, round: usize, clients: &[usize], global: &ParamVector) -> Result<Vec<ClientUpdate>> {
        clients.par_iter().map(|&c| self.train_one(round, c, global)).collect()
    }

    /// `k` of `pool` uniformly without replacement, ascending.
    fn random_subset(&self, pool: &[usize], k: usize, path: &[u64]) -> Vec<usize> {
        let mut rng = seed::rng(self.seed(Stream::Selection, path));
        let mut ids: Vec<usize> = index::sample(&mut rng, pool.len(), k)
            .into_iter()
            .map(|i| pool[i])
            .collect();
        ids.sort_unstable();
        ids
    }

    /// New participant set and the updates it produced this round.
    fn refresh(&self, round: usize, global: &ParamVector) -> Result<(Vec<usize>, Vec<ClientUpdate>)> {
        let cfg = self.cfg;
        let t = &cfg.topology;
        let r = round as u64;
        let all: Vec<usize> = (0..t.n_clients).collect();
        match cfg.defense {
            Defense::Shfl if round > 0 => {
                let updates = self.train_all(round, &all, global)?;
                let m = cfg.per_edge_selection();
                let mut by_edge: Vec<Vec<ClientUpdate>> = vec![Vec::new(); t.n_edges];
                for u in updates {
                    by_edge[t.edge_of(u.node_id)].push(u);
                }
                let mut selected = Vec::with_capacity(cfg.clients_per_round);
                let mut kept = Vec::with_capacity(cfg.clients_per_round);
                for (edge, members) in by_edge.into_iter().enumerate() {
                    let seed = self.seed(Stream::Selection, &[r, edge as u64]);
                    let chosen = select_clients_shfl(&members, global, cfg.estimated_attackers_per_edge, m, seed)?;
                    kept.extend(members.into_iter().filter(|u| chosen.contains(&u.node_id)));
                    selected.extend(chosen);
                }
                selected.sort_unstable();
                kept.sort_by_key(|u| u.node_id);
                Ok((selected, kept))
            }
            Defense::MultiKrum => {
                let updates = self.train_all(round, &all, global)?;
                let chosen = multi_krum_select(&updates, cfg.krum_f(), cfg.krum_k(), cfg.krum_distance)?;
                let selected: Vec<usize> = chosen.iter().map(|&i| updates[i].node_id).collect();
                let kept = updates.into_iter().filter(|u| selected.contains(&u.node_id)).collect();
                Ok((selected, kept))
            }
            _ => {
                let selected = if cfg.hierarchical() {
                    let m = cfg.per_edge_selection();
                    let mut ids: Vec<usize> = (0..t.n_edges)
                        .flat_map(|e| self.random_subset(&t.edge_members(e), m, &[r, e as u64]))
                        .collect();
                    ids.sort_unstable();
                    ids
                } else {
                    self.random_subset(&all, cfg.clients_per_round, &[r])
                };
                let updates = self.train_all(round, &selected, global)?;
                Ok((selected, updates))
            }
        }
    }

    fn aggregate(&self, updates: &[ClientUpdate], global: &ParamVector) -> Result<(ParamVector, Vec<EdgeWeight>)> {
        let cfg = self.cfg;
        match cfg.defense {
            Defense::Shfl => {
                let round = run_cloud_round(&self.edge_reports(updates)?, global, &cfg.cloud)?;
                Ok((round.global, round.edges))
            }
            Defense::FedAvg if cfg.hierarchical() => {
                let edges: Vec<ClientUpdate> = self
                    .edge_reports(updates)?
                    .into_iter()
                    .map(|r| ClientUpdate {
                        node_id: r.edge_id,
                        model: r.model,
                        data_size: r.data_total,
                    })
                    .collect();
                Ok((fedavg(&edges)?, Vec::new()))
            }
            Defense::FedAvg => Ok((fedavg(updates)?, Vec::new())),
            Defense::MultiKrum => {
                let all: Vec<usize> = (0..updates.len()).collect();
                Ok((aggregation::baselines::mean_of(updates, &all)?, Vec::new()))
            }
            Defense::TrimmedMean => Ok((trimmed_mean(updates, cfg.trim_m())?, Vec::new())),
        }
    }

    fn edge_reports(&self, updates: &[ClientUpdate]) -> Result<Vec<EdgeReport>> {
        let t = &self.cfg.topology;
        let mut by_edge: Vec<Vec<ClientUpdate>> = vec![Vec::new(); t.n_edges];
        for u in updates {
            by_edge[t.edge_of(u.node_id)].push(u.clone());
        }
        by_edge
            .into_iter()
            .enumerate()
            .map(|(edge_id, ups)| {
                let (model, data_total) = edge_aggregate(&ups)?;
                Ok(EdgeReport {
                    edge_id,
                    model,
                    data_total,
                })
            })
            .collect()
    }

    fn run(self, mut on_round: impl FnMut(&RoundRecord)) -> Result<SimOutcome> {
        let cfg = self.cfg;
        let mut global = self.model.init(self.seed(Stream::ModelInit, &[]));
        let mut selected: Vec<usize> = Vec::new();
        let test_shard = self.test.full_shard();
        let mut records = Vec::with_capacity(cfg.rounds);
        for round in 0..cfg.rounds {
            let updates = if round % cfg.selection_period == 0 {
                let (sel, updates) = self.refresh(round, &global)?;
                selected = sel;
                updates
            } else {
                self.train_all(round, &selected, &global)?
            };
            let (next, edges) = self.aggregate(&updates, &global)?;
            global = next;
            let eval = self.model.evaluate(&global, self.test, &test_shard)?;
            let record = RoundRecord {
                round,
                accuracy: eval.accuracy,
                loss: eval.loss,
                attackers_selected: selected.iter().filter(|c| self.attackers.contains(c)).count(),
                selected: selected.clone(),
                edges,
            };
            on_round(&record);
            records.push(record);
        }
        Ok(SimOutcome {
            attackers: self.attackers,
            records,
            global,
        })
    }
}
