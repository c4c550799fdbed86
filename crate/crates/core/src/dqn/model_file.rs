//! JSON model files.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::network::QNetwork;
use crate::error::{Error, Result};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentKind {
    #[serde(rename = "choosesubtree")]
    ChooseSubtree,
    Split,
}

impl AgentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AgentKind::ChooseSubtree => "choosesubtree",
            AgentKind::Split => "split",
        }
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AgentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "choosesubtree" => Ok(AgentKind::ChooseSubtree),
            "split" => Ok(AgentKind::Split),
            other => Err(Error::ModelMismatch(format!("unknown agent `{other}`"))),
        }
    }
}

/// Training settings recorded alongside the weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub gamma: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub memory_capacity: usize,
    pub target_sync_every: usize,
    pub epsilon_start: f64,
    pub epsilon_decay: f64,
    pub epsilon_floor: f64,
    pub epochs: usize,
    pub objects_per_round: usize,
    pub parts: usize,
    pub max_entries: usize,
    pub min_entries: usize,
    pub train_query_area_fraction: f64,
    pub training_objects: usize,
}

/// What a model file records besides the weights.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelMeta {
    pub agent: AgentKind,
    pub dims: usize,
    pub hyperparameters: Hyperparameters,
    pub seed: u64,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    agent: AgentKind,
    k: usize,
    dims: usize,
    hidden: usize,
    activation: String,
    w1: Vec<Vec<f64>>,
    b1: Vec<f64>,
    w2: Vec<Vec<f64>>,
    b2: Vec<f64>,
    hyperparameters: Hyperparameters,
    seed: u64,
}

fn rows(flat: &[f64], width: usize) -> Vec<Vec<f64>> {
    flat.chunks(width.max(1)).map(<[f64]>::to_vec).collect()
}

pub fn model_to_json(net: &QNetwork, meta: &ModelMeta) -> Result<String> {
    let file = ModelFile {
        format_version: MODEL_FORMAT_VERSION,
        agent: meta.agent,
        k: net.actions(),
        dims: meta.dims,
        hidden: net.hidden(),
        activation: "selu".to_string(),
        w1: rows(&net.w1, net.inputs()),
        b1: net.b1.clone(),
        w2: rows(&net.w2, net.hidden()),
        b2: net.b2.clone(),
        hyperparameters: meta.hyperparameters.clone(),
        seed: meta.seed,
    };
    let mut json = serde_json::to_string_pretty(&file)?;
    json.push('\n');
    Ok(json)
}

pub fn model_from_json(json: &str) -> Result<(QNetwork, ModelMeta)> {
    let file: ModelFile =
        serde_json::from_str(json).map_err(|e| Error::Corrupt(format!("model file: {e}")))?;
    if file.format_version != MODEL_FORMAT_VERSION {
        return Err(Error::ModelMismatch(format!(
            "format version {} (supported: {MODEL_FORMAT_VERSION})",
            file.format_version
        )));
    }
    if file.activation != "selu" {
        return Err(Error::ModelMismatch(format!(
            "activation `{}` (supported: selu)",
            file.activation
        )));
    }
    if file.k < 1 {
        return Err(Error::ModelMismatch("k must be positive".into()));
    }
    let w1: Vec<f64> = file.w1.into_iter().flatten().collect();
    let w2: Vec<f64> = file.w2.into_iter().flatten().collect();
    let net = QNetwork::from_raw(file.k, file.hidden, w1, file.b1, w2, file.b2)?;
    Ok((
        net,
        ModelMeta {
            agent: file.agent,
            dims: file.dims,
            hyperparameters: file.hyperparameters,
            seed: file.seed,
        },
    ))
}

pub fn save_model(path: &Path, net: &QNetwork, meta: &ModelMeta) -> Result<()> {
    fs::write(path, model_to_json(net, meta)?)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<(QNetwork, ModelMeta)> {
    model_from_json(&fs::read_to_string(path)?)
}

/// Loads a model and checks that it fits the pipeline it is meant for.
pub fn load_model_checked(
    path: &Path,
    agent: AgentKind,
    k: Option<usize>,
    dims: usize,
) -> Result<(QNetwork, ModelMeta)> {
    let (net, meta) = load_model(path)?;
    check_model(&net, &meta, agent, k, dims)?;
    Ok((net, meta))
}

pub fn check_model(
    net: &QNetwork,
    meta: &ModelMeta,
    agent: AgentKind,
    k: Option<usize>,
    dims: usize,
) -> Result<()> {
    if meta.agent != agent {
        return Err(Error::ModelMismatch(format!(
            "expected a {agent} model, found {}",
            meta.agent
        )));
    }
    if let Some(k) = k {
        if net.actions() != k {
            return Err(Error::ModelMismatch(format!(
                "model has k={}, pipeline expects k={k}",
                net.actions()
            )));
        }
    }
    if meta.dims != dims {
        return Err(Error::ModelMismatch(format!(
            "model trained on {}-d data, pipeline is {dims}-d",
            meta.dims
        )));
    }
    Ok(())
}
