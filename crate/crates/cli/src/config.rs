//! Flat `key = value` experiment files.
//!
//! ```text
//! # PGA against SHFL on MNIST
//! seed = 7
//! defense = shfl
//! attack.kind = pga
//! attack.count = 10
//! estimated_attackers_per_edge = 1
//! data.images_path = data/mnist/train-images-idx3-ubyte
//! ```
//!
//! Blank lines and `#` comments are ignored. Unknown or repeated keys are
//! errors. When `data.source = mnist` and a path key is missing, the file
//! is looked up in `$SHFL_DATA_DIR` under its standard MNIST name.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use shfl::aggregation::KrumDistance;
use shfl::attacks::{AttackKind, PgaScaling};
use shfl::cloud::CloudConfig;
use shfl::sim::{AttackSpec, DataSpec, Defense, Sharding, SimConfig, Topology, TopologyMode};

pub const DATA_DIR_ENV: &str = "SHFL_DATA_DIR";

/// Every accepted key, in the order [`to_pairs`] writes them.
pub const KEYS: &[&str] = &[
    "seed",
    "rounds",
    "defense",
    "sharding",
    "topology.n_clients",
    "topology.n_edges",
    "topology.mode",
    "clients_per_round",
    "selection.period",
    "estimated_attackers_per_edge",
    "attack.kind",
    "attack.count",
    "attack.pga_scaling",
    "train.lr",
    "train.epochs",
    "train.batch_size",
    "model.hidden1",
    "model.hidden2",
    "cloud.zeta",
    "cloud.tau",
    "multikrum.f",
    "multikrum.k",
    "multikrum.distance",
    "trimmedmean.m",
    "data.source",
    "data.images_path",
    "data.labels_path",
    "data.test_images_path",
    "data.test_labels_path",
    "data.train_subsample",
    "data.synthetic_train",
    "data.synthetic_test",
    "data.synthetic_classes",
    "data.synthetic_dim",
];

const MNIST_FILES: [(&str, &str); 4] = [
    ("data.images_path", "train-images-idx3-ubyte"),
    ("data.labels_path", "train-labels-idx1-ubyte"),
    ("data.test_images_path", "t10k-images-idx3-ubyte"),
    ("data.test_labels_path", "t10k-labels-idx1-ubyte"),
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub key: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.line, &self.key) {
            (Some(l), Some(k)) => write!(f, "line {l}: {k}: {}", self.message),
            (Some(l), None) => write!(f, "line {l}: {}", self.message),
            (None, Some(k)) => write!(f, "{k}: {}", self.message),
            (None, None) => write!(f, "{}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

fn err(line: Option<usize>, key: Option<&str>, message: impl Into<String>) -> ConfigError {
    ConfigError {
        line,
        key: key.map(str::to_owned),
        message: message.into(),
    }
}

/// Key → (line number, raw value). Pairs built in code carry no line.
struct Entries(BTreeMap<String, (Option<usize>, String)>);

impl Entries {
    fn raw(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(|(_, v)| v.as_str())
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        match self.0.get(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse()
                .map(Some)
                .map_err(|e| err(*line, Some(key), format!("cannot parse {v:?}: {e}"))),
        }
    }

    fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    fn choice<T: Copy>(&self, key: &str, options: &[(&str, T)], default: T) -> Result<T, ConfigError> {
        let Some((line, v)) = self.0.get(key) else {
            return Ok(default);
        };
        let v = v.to_ascii_lowercase();
        options
            .iter()
            .find(|(name, _)| *name == v)
            .map(|(_, t)| *t)
            .ok_or_else(|| {
                let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
                err(
                    *line,
                    Some(key),
                    format!("expected one of {}, got {v:?}", names.join(", ")),
                )
            })
    }
}

const DEFENSES: &[(&str, Defense)] = &[
    ("shfl", Defense::Shfl),
    ("fedavg", Defense::FedAvg),
    ("multikrum", Defense::MultiKrum),
    ("trimmedmean", Defense::TrimmedMean),
];
const SHARDINGS: &[(&str, Sharding)] = &[("iid", Sharding::Iid), ("noniid", Sharding::NonIid)];
const MODES: &[(&str, TopologyMode)] = &[
    ("hierarchical", TopologyMode::Hierarchical),
    ("flat", TopologyMode::Flat),
];
const ATTACKS: &[(&str, AttackKind)] = &[
    ("none", AttackKind::None),
    ("pga", AttackKind::Pga),
    ("lf", AttackKind::Lf),
];
const SCALINGS: &[(&str, PgaScaling)] = &[("model", PgaScaling::Model), ("delta", PgaScaling::Delta)];
const DISTANCES: &[(&str, KrumDistance)] = &[
    ("squared", KrumDistance::Squared),
    ("euclidean", KrumDistance::Euclidean),
];

fn name_of<T: PartialEq>(options: &[(&'static str, T)], value: T) -> &'static str {
    options
        .iter()
        .find(|(_, t)| *t == value)
        .map(|(n, _)| *n)
        .expect("every variant is named")
}

/// Parses config text. `data_dir` supplies default MNIST paths.
pub fn parse_str(text: &str, data_dir: Option<&Path>) -> Result<SimConfig, ConfigError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| err(Some(line), None, format!("expected `key = value`, got {content:?}")))?;
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(err(Some(line), Some(key), "unknown key"));
        }
        if let Some((first, _)) = map.insert(key.to_owned(), (Some(line), value.to_owned())) {
            return Err(err(
                Some(line),
                Some(key),
                format!("repeated key (first set on line {})", first.unwrap_or(0)),
            ));
        }
    }
    build(&Entries(map), data_dir)
}

/// Reads and parses a config file, taking default data paths from
/// `$SHFL_DATA_DIR`.
pub fn load(path: &Path) -> Result<SimConfig, ConfigError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| err(None, None, format!("cannot read {}: {e}", path.display())))?;
    let data_dir = std::env::var_os(DATA_DIR_ENV).map(PathBuf::from);
    parse_str(&text, data_dir.as_deref())
}

/// Rebuilds a config from `(key, value)` pairs such as a summary's echo.
pub fn from_pairs<K: AsRef<str>, V: AsRef<str>>(pairs: &[(K, V)]) -> Result<SimConfig, ConfigError> {
    let mut map = BTreeMap::new();
    for (k, v) in pairs {
        let k = k.as_ref();
        if !KEYS.contains(&k) {
            return Err(err(None, Some(k), "unknown key"));
        }
        map.insert(k.to_owned(), (None, v.as_ref().to_owned()));
    }
    build(&Entries(map), None)
}

fn build(e: &Entries, data_dir: Option<&Path>) -> Result<SimConfig, ConfigError> {
    let data = match e.raw("data.source").unwrap_or("mnist").to_ascii_lowercase().as_str() {
        "mnist" | "idx" => {
            let mut paths = Vec::with_capacity(4);
            for (key, file) in MNIST_FILES {
                let path = match (e.get::<PathBuf>(key)?, data_dir) {
                    (Some(p), _) => p,
                    (None, Some(dir)) => dir.join(file),
                    (None, None) => {
                        return Err(err(
                            None,
                            Some(key),
                            format!("required for MNIST data (or set {DATA_DIR_ENV})"),
                        ))
                    }
                };
                paths.push(path);
            }
            let [train_images, train_labels, test_images, test_labels]: [PathBuf; 4] =
                paths.try_into().expect("four paths");
            DataSpec::Idx {
                train_images,
                train_labels,
                test_images,
                test_labels,
                train_subsample: e.get("data.train_subsample")?,
            }
        }
        "synthetic" => DataSpec::Synthetic {
            train: e.get_or("data.synthetic_train", 1000)?,
            test: e.get_or("data.synthetic_test", 200)?,
            classes: e.get_or("data.synthetic_classes", 10)?,
            dim: e.get_or("data.synthetic_dim", shfl::data::IMAGE_DIM)?,
        },
        other => {
            let line = e.0.get("data.source").and_then(|(l, _)| *l);
            return Err(err(
                line,
                Some("data.source"),
                format!("expected mnist or synthetic, got {other:?}"),
            ));
        }
    };

    let mut cfg = SimConfig::new(data);
    cfg.defense = e.choice("defense", DEFENSES, Defense::Shfl)?;
    let default_mode = if cfg.defense == Defense::Shfl {
        TopologyMode::Hierarchical
    } else {
        TopologyMode::Flat
    };
    let defaults = Topology::default();
    cfg.topology = Topology {
        n_clients: e.get_or("topology.n_clients", defaults.n_clients)?,
        n_edges: e.get_or("topology.n_edges", defaults.n_edges)?,
        mode: e.choice("topology.mode", MODES, default_mode)?,
    };
    cfg.sharding = e.choice("sharding", SHARDINGS, Sharding::Iid)?;
    cfg.attack = AttackSpec {
        kind: e.choice("attack.kind", ATTACKS, AttackKind::None)?,
        count: e.get_or("attack.count", 0)?,
        pga_scaling: e.choice("attack.pga_scaling", SCALINGS, PgaScaling::Model)?,
    };
    cfg.train.learning_rate = e.get_or("train.lr", cfg.train.learning_rate)?;
    cfg.train.epochs = e.get_or("train.epochs", cfg.train.epochs)?;
    cfg.train.batch_size = e.get_or("train.batch_size", cfg.train.batch_size)?;
    cfg.hidden = [
        e.get_or("model.hidden1", cfg.hidden[0])?,
        e.get_or("model.hidden2", cfg.hidden[1])?,
    ];
    cfg.clients_per_round = e.get_or("clients_per_round", cfg.clients_per_round)?;
    cfg.selection_period = e.get_or("selection.period", cfg.selection_period)?;
    cfg.rounds = e.get_or("rounds", cfg.rounds)?;
    cfg.estimated_attackers_per_edge = e.get_or("estimated_attackers_per_edge", 0)?;
    let cloud = CloudConfig::default();
    cfg.cloud = CloudConfig {
        zeta: e.get_or("cloud.zeta", cloud.zeta)?,
        tau: e.get_or("cloud.tau", cloud.tau)?,
    };
    cfg.krum_f = e.get("multikrum.f")?;
    cfg.krum_k = e.get("multikrum.k")?;
    cfg.krum_distance = e.choice("multikrum.distance", DISTANCES, KrumDistance::Squared)?;
    cfg.trim_m = e.get("trimmedmean.m")?;
    cfg.master_seed = e.get_or("seed", 0)?;

    cfg.validate().map_err(|e| err(None, None, e.to_string()))?;
    Ok(cfg)
}

/// Every setting of `cfg` as key/value pairs, defaults included, so the
/// result re-parses to the same config without any environment.
pub fn to_pairs(cfg: &SimConfig) -> Vec<(String, String)> {
    let mut out: Vec<(&str, String)> = vec![
        ("seed", cfg.master_seed.to_string()),
        ("rounds", cfg.rounds.to_string()),
        ("defense", name_of(DEFENSES, cfg.defense).into()),
        ("sharding", name_of(SHARDINGS, cfg.sharding).into()),
        ("topology.n_clients", cfg.topology.n_clients.to_string()),
        ("topology.n_edges", cfg.topology.n_edges.to_string()),
        ("topology.mode", name_of(MODES, cfg.topology.mode).into()),
        ("clients_per_round", cfg.clients_per_round.to_string()),
        ("selection.period", cfg.selection_period.to_string()),
        (
            "estimated_attackers_per_edge",
            cfg.estimated_attackers_per_edge.to_string(),
        ),
        ("attack.kind", name_of(ATTACKS, cfg.attack.kind).into()),
        ("attack.count", cfg.attack.count.to_string()),
        ("attack.pga_scaling", name_of(SCALINGS, cfg.attack.pga_scaling).into()),
        ("train.lr", cfg.train.learning_rate.to_string()),
        ("train.epochs", cfg.train.epochs.to_string()),
        ("train.batch_size", cfg.train.batch_size.to_string()),
        ("model.hidden1", cfg.hidden[0].to_string()),
        ("model.hidden2", cfg.hidden[1].to_string()),
        ("cloud.zeta", cfg.cloud.zeta.to_string()),
        ("cloud.tau", cfg.cloud.tau.to_string()),
    ];
    if let Some(f) = cfg.krum_f {
        out.push(("multikrum.f", f.to_string()));
    }
    if let Some(k) = cfg.krum_k {
        out.push(("multikrum.k", k.to_string()));
    }
    out.push(("multikrum.distance", name_of(DISTANCES, cfg.krum_distance).into()));
    if let Some(m) = cfg.trim_m {
        out.push(("trimmedmean.m", m.to_string()));
    }
    match &cfg.data {
        DataSpec::Idx {
            train_images,
            train_labels,
            test_images,
            test_labels,
            train_subsample,
        } => {
            out.push(("data.source", "mnist".into()));
            for (key, p) in [
                ("data.images_path", train_images),
                ("data.labels_path", train_labels),
                ("data.test_images_path", test_images),
                ("data.test_labels_path", test_labels),
            ] {
                out.push((key, p.display().to_string()));
            }
            if let Some(n) = train_subsample {
                out.push(("data.train_subsample", n.to_string()));
            }
        }
        DataSpec::Synthetic {
            train,
            test,
            classes,
            dim,
        } => {
            out.push(("data.source", "synthetic".into()));
            out.push(("data.synthetic_train", train.to_string()));
            out.push(("data.synthetic_test", test.to_string()));
            out.push(("data.synthetic_classes", classes.to_string()));
            out.push(("data.synthetic_dim", dim.to_string()));
        }
    }
    out.into_iter().map(|(k, v)| (k.to_owned(), v)).collect()
}

/// Config text in the on-disk format.
pub fn to_text(cfg: &SimConfig) -> String {
    to_pairs(cfg).into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
}
