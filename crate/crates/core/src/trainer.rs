//! Training loops for the ChooseSubtree and Split agents.
//!
//! Both loops compare the tree under training (`T_rl`) with a reference tree
//! (`T_r`) that starts every round with the same structure. After `p`
//! objects, the difference of their mean normalized node-access rates on the
//! round's training queries becomes the shared reward of every transition
//! recorded in the round.

use std::fmt;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::datagen::{rng_for, streams, window_with_ratio, ASPECT_RATIO_RANGE};
use crate::dqn::{
    AgentKind, DqnAgent, ExplorationState, Hyperparameters, ModelMeta, QNetwork, ReplayMemory,
    Transition, DEFAULT_BATCH_SIZE, DEFAULT_MEMORY_CAPACITY,
};
use crate::error::{Error, Result};
use crate::geometry::Rect;
use crate::heuristics::HeuristicPolicy;
use crate::learned::{Decider, Decision, LearnedPolicy};
use crate::rtree::{ObjectRecord, RTree};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Action-space size of both agents.
    pub k: usize,
    /// Objects per round.
    pub p: usize,
    pub epochs_cs: usize,
    pub epochs_split: usize,
    pub parts: usize,
    pub gamma_cs: f64,
    pub gamma_split: f64,
    pub lr_cs: f64,
    pub lr_split: f64,
    pub batch_size: usize,
    pub memory_capacity: usize,
    pub target_sync_every: usize,
    pub train_query_area_fraction: f64,
    pub aspect_ratio_range: (f64, f64),
    pub max_entries: usize,
    pub min_entries: usize,
    pub epsilon_start: f64,
    pub epsilon_decay: f64,
    pub epsilon_floor: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let explore = ExplorationState::default();
        Self {
            k: 2,
            p: 50,
            epochs_cs: 20,
            epochs_split: 15,
            parts: 15,
            gamma_cs: 0.95,
            gamma_split: 0.8,
            lr_cs: 0.003,
            lr_split: 0.01,
            batch_size: DEFAULT_BATCH_SIZE,
            memory_capacity: DEFAULT_MEMORY_CAPACITY,
            target_sync_every: 30,
            train_query_area_fraction: 1e-4,
            aspect_ratio_range: ASPECT_RATIO_RANGE,
            max_entries: 50,
            min_entries: 20,
            epsilon_start: explore.epsilon,
            epsilon_decay: explore.decay,
            epsilon_floor: explore.floor,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if self.k < 2 {
            return bad("k must be at least 2");
        }
        if self.p == 0 || self.batch_size == 0 || self.memory_capacity == 0 {
            return bad("p, batch size and memory capacity must be positive");
        }
        if self.parts < 2 {
            return bad("parts must be at least 2");
        }
        if self.min_entries == 0 || self.min_entries > self.max_entries / 2 {
            return bad("capacities need 1 <= m <= M/2");
        }
        let positive = [
            self.gamma_cs,
            self.gamma_split,
            self.lr_cs,
            self.lr_split,
            self.train_query_area_fraction,
            self.aspect_ratio_range.0,
            self.epsilon_decay,
        ];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return bad("discounts, learning rates, query size and ratios must be positive");
        }
        if self.aspect_ratio_range.0 > self.aspect_ratio_range.1 {
            return bad("empty aspect ratio range");
        }
        if !(0.0..=1.0).contains(&self.epsilon_start) || !(0.0..=1.0).contains(&self.epsilon_floor) {
            return bad("epsilon must lie in [0, 1]");
        }
        Ok(())
    }

    fn exploration(&self) -> ExplorationState {
        ExplorationState {
            epsilon: self.epsilon_start,
            decay: self.epsilon_decay,
            floor: self.epsilon_floor,
        }
    }

    fn agent(&self, kind: AgentKind) -> DqnAgent {
        let (stream, gamma, lr) = match kind {
            AgentKind::ChooseSubtree => (streams::NETWORK_INIT, self.gamma_cs, self.lr_cs),
            AgentKind::Split => (streams::NETWORK_INIT_SPLIT, self.gamma_split, self.lr_split),
        };
        let net = QNetwork::random(self.k, &mut rng_for(self.seed, stream));
        let mut agent = DqnAgent::new(net, gamma, lr);
        agent.memory = ReplayMemory::new(self.memory_capacity);
        agent.batch_size = self.batch_size;
        agent.target_sync_every = self.target_sync_every;
        agent.exploration = self.exploration();
        agent
    }

    /// Metadata for a model file produced by this configuration.
    pub fn model_meta(&self, agent: AgentKind, dims: usize, training_objects: usize) -> ModelMeta {
        let (gamma, learning_rate, epochs) = match agent {
            AgentKind::ChooseSubtree => (self.gamma_cs, self.lr_cs, self.epochs_cs),
            AgentKind::Split => (self.gamma_split, self.lr_split, self.epochs_split),
        };
        ModelMeta {
            agent,
            dims,
            hyperparameters: Hyperparameters {
                gamma,
                learning_rate,
                batch_size: self.batch_size,
                memory_capacity: self.memory_capacity,
                target_sync_every: self.target_sync_every,
                epsilon_start: self.epsilon_start,
                epsilon_decay: self.epsilon_decay,
                epsilon_floor: self.epsilon_floor,
                epochs,
                objects_per_round: self.p,
                parts: self.parts,
                max_entries: self.max_entries,
                min_entries: self.min_entries,
                train_query_area_fraction: self.train_query_area_fraction,
                training_objects,
            },
            seed: self.seed,
        }
    }

    fn empty_tree<const D: usize>(&self) -> Result<RTree<D>> {
        RTree::new(self.max_entries, self.min_entries)
    }
}

/// Progress records emitted by the training loops.
#[derive(Clone, Debug, PartialEq)]
pub enum TrainEvent {
    Round {
        agent: AgentKind,
        epoch: usize,
        round: usize,
        reward: f64,
        epsilon: f64,
        loss: Option<f64>,
        transitions: usize,
        memory_size: usize,
    },
    Epoch {
        agent: AgentKind,
        epoch: usize,
        rounds: usize,
        transitions: usize,
        mean_reward: f64,
        mean_loss: Option<f64>,
        epsilon: f64,
    },
    Warning(String),
}

impl fmt::Display for TrainEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let loss = |l: &Option<f64>| l.map_or_else(|| "-".to_string(), |v| format!("{v:.6e}"));
        match self {
            TrainEvent::Round {
                agent,
                epoch,
                round,
                reward,
                epsilon,
                loss: l,
                transitions,
                memory_size,
            } => write!(
                f,
                "round agent={agent} epoch={epoch} round={round} r={reward:.6} epsilon={epsilon:.4} loss={} transitions={transitions} memory={memory_size}",
                loss(l)
            ),
            TrainEvent::Epoch {
                agent,
                epoch,
                rounds,
                transitions,
                mean_reward,
                mean_loss,
                epsilon,
            } => write!(
                f,
                "epoch agent={agent} epoch={epoch} rounds={rounds} transitions={transitions} mean_r={mean_reward:.6} mean_loss={} epsilon={epsilon:.4}",
                loss(mean_loss)
            ),
            TrainEvent::Warning(msg) => write!(f, "warning {msg}"),
        }
    }
}

/// Receives [`TrainEvent`]s; closures work directly.
pub trait TrainSink {
    fn event(&mut self, event: &TrainEvent);
}

impl<F: FnMut(&TrainEvent)> TrainSink for F {
    fn event(&mut self, event: &TrainEvent) {
        self(event)
    }
}

/// Discards all events.
pub struct NoSink;

impl TrainSink for NoSink {
    fn event(&mut self, _: &TrainEvent) {}
}

/// Training query of the configured size around `center`, with a random
/// aspect ratio.
pub fn make_training_query<const D: usize, R: Rng + ?Sized>(
    center: [f64; D],
    cfg: &TrainConfig,
    rng: &mut R,
) -> Rect<D> {
    let (lo, hi) = cfg.aspect_ratio_range;
    let ratio = rng.random_range(lo..=hi);
    window_with_ratio(center, cfg.train_query_area_fraction, ratio)
}

/// Mean normalized access rate of `reference` minus that of `rl`; positive
/// when the tree under training touches fewer nodes.
pub fn compute_reward<const D: usize>(rl: &RTree<D>, reference: &RTree<D>, queries: &[Rect<D>]) -> f64 {
    if queries.is_empty() {
        return 0.0;
    }
    let rate = |tree: &RTree<D>| {
        let h = tree.height() as f64;
        queries.iter().map(|q| tree.range_count(q).0 as f64 / h).sum::<f64>() / queries.len() as f64
    };
    rate(reference) - rate(rl)
}

/// Pushes the transitions of one round; each trace is the ordered list of
/// decisions made while inserting one object.
fn push_transitions(memory: &mut ReplayMemory, traces: Vec<Vec<Decision>>, reward: f64) -> usize {
    let mut pushed = 0;
    for trace in traces {
        let mut it = trace.into_iter().peekable();
        while let Some(d) = it.next() {
            let next = it.peek().map(|n| n.state.clone());
            memory.push(Transition {
                state: d.state,
                action: d.action,
                reward,
                next,
            });
            pushed += 1;
        }
    }
    pushed
}

#[derive(Default)]
struct EpochTally {
    rounds: usize,
    transitions: usize,
    reward_sum: f64,
    loss_sum: f64,
    losses: usize,
}

impl EpochTally {
    #[allow(clippy::too_many_arguments)]
    fn round(
        &mut self,
        sink: &mut dyn TrainSink,
        kind: AgentKind,
        epoch: usize,
        agent: &DqnAgent,
        reward: f64,
        loss: Option<f64>,
        transitions: usize,
        epsilon: f64,
    ) {
        self.rounds += 1;
        self.transitions += transitions;
        self.reward_sum += reward;
        if let Some(l) = loss {
            self.loss_sum += l;
            self.losses += 1;
        }
        sink.event(&TrainEvent::Round {
            agent: kind,
            epoch,
            round: self.rounds,
            reward,
            epsilon,
            loss,
            transitions,
            memory_size: agent.memory.len(),
        });
    }

    fn finish(&self, sink: &mut dyn TrainSink, kind: AgentKind, epoch: usize, agent: &DqnAgent) {
        sink.event(&TrainEvent::Epoch {
            agent: kind,
            epoch,
            rounds: self.rounds,
            transitions: self.transitions,
            mean_reward: if self.rounds > 0 {
                self.reward_sum / self.rounds as f64
            } else {
                0.0
            },
            mean_loss: (self.losses > 0).then(|| self.loss_sum / self.losses as f64),
            epsilon: agent.exploration.epsilon,
        });
    }
}

/// Random streams of one training run.
struct Streams {
    explore: ChaCha8Rng,
    queries: ChaCha8Rng,
}

impl Streams {
    fn new(seed: u64) -> Self {
        Self {
            explore: rng_for(seed, streams::TRAINING),
            queries: rng_for(seed, streams::TRAINING_QUERIES),
        }
    }
}

/// One ChooseSubtree epoch. Splits use `split_net` greedily when given,
/// otherwise the reference rule, in both trees.
fn choose_subtree_epoch<const D: usize>(
    data: &[ObjectRecord<D>],
    cfg: &TrainConfig,
    agent: &mut DqnAgent,
    split_net: Option<&QNetwork>,
    rngs: &mut Streams,
    epoch: usize,
    sink: &mut dyn TrainSink,
) -> Result<()> {
    let kind = AgentKind::ChooseSubtree;
    agent.memory.clear();
    let mut t_rl = cfg.empty_tree::<D>()?;
    let mut t_r = cfg.empty_tree::<D>()?;
    let mut tally = EpochTally::default();
    let mut queries = Vec::with_capacity(cfg.p);
    let mut traces = Vec::with_capacity(cfg.p);
    for chunk in data.chunks(cfg.p) {
        t_r.sync_from(&mut t_rl);
        queries.clear();
        traces.clear();
        let epsilon = agent.exploration.epsilon;
        {
            let mut reference = LearnedPolicy::greedy(None, split_net);
            let mut learner = LearnedPolicy::new(
                Decider::Explore {
                    net: &agent.net,
                    epsilon,
                    rng: &mut rngs.explore,
                },
                split_net.map_or(Decider::Rule, Decider::Greedy),
            );
            for obj in chunk {
                t_r.insert(*obj, &mut reference);
                t_rl.insert(*obj, &mut learner);
                traces.push(learner.take_choose_trace());
                queries.push(make_training_query(obj.mbr.center(), cfg, &mut rngs.queries));
            }
        }
        let reward = compute_reward(&t_rl, &t_r, &queries);
        let pushed = push_transitions(&mut agent.memory, std::mem::take(&mut traces), reward);
        let loss = agent.learn(&mut rngs.explore)?;
        agent.exploration.decay();
        tally.round(sink, kind, epoch, agent, reward, loss, pushed, epsilon);
    }
    tally.finish(sink, kind, epoch, agent);
    Ok(())
}

/// Base tree and training part of one Split-training iteration.
pub struct SplitPreparation<const D: usize> {
    pub base: RTree<D>,
    /// Objects inserted into the base tree after the initial part.
    pub fill_count: usize,
    /// Objects whose insertion would overflow a leaf of the base tree.
    pub training: Vec<ObjectRecord<D>>,
}

/// Builds the base tree from the first `j/parts` of `data` with the reference
/// rules, then scans the rest: objects reaching a full leaf form the training
/// part, all others are inserted.
pub fn prepare_split_training<const D: usize>(
    data: &[ObjectRecord<D>],
    j: usize,
    parts: usize,
    cfg: &TrainConfig,
) -> Result<SplitPreparation<D>> {
    if j == 0 || j >= parts {
        return Err(Error::InvalidConfig(format!(
            "iteration {j} outside 1..{parts}"
        )));
    }
    let initial = data.len() * j / parts;
    let mut policy = HeuristicPolicy::reference();
    let mut base = cfg.empty_tree::<D>()?;
    base.extend(data[..initial].iter().copied(), &mut policy);
    let mut fill_count = 0;
    let mut training = Vec::new();
    for obj in &data[initial..] {
        let leaf = base.descend(&obj.mbr, &mut policy);
        if base.node(leaf).len() >= base.max_entries() {
            training.push(*obj);
        } else {
            base.insert(*obj, &mut policy);
            fill_count += 1;
        }
    }
    Ok(SplitPreparation {
        base,
        fill_count,
        training,
    })
}

/// One Split epoch. ChooseSubtree uses `choose_net` greedily when given,
/// otherwise the reference rule, in both trees.
fn split_epoch<const D: usize>(
    data: &[ObjectRecord<D>],
    cfg: &TrainConfig,
    agent: &mut DqnAgent,
    choose_net: Option<&QNetwork>,
    rngs: &mut Streams,
    epoch: usize,
    sink: &mut dyn TrainSink,
) -> Result<()> {
    let kind = AgentKind::Split;
    agent.memory.clear();
    let mut tally = EpochTally::default();
    let mut queries = Vec::with_capacity(cfg.p);
    let mut traces = Vec::with_capacity(cfg.p);
    for j in 1..cfg.parts {
        let prep = prepare_split_training(data, j, cfg.parts, cfg)?;
        if prep.training.is_empty() {
            sink.event(&TrainEvent::Warning(format!(
                "epoch {epoch}: empty training part for iteration {j}, skipped"
            )));
            continue;
        }
        let mut t_rl = prep.base;
        t_rl.checkpoint();
        let mut t_r = t_rl.clone();
        t_r.checkpoint();
        for chunk in prep.training.chunks(cfg.p) {
            t_rl.rollback();
            t_r.rollback();
            queries.clear();
            traces.clear();
            let epsilon = agent.exploration.epsilon;
            {
                let mut reference = LearnedPolicy::greedy(choose_net, None);
                let mut learner = LearnedPolicy::new(
                    choose_net.map_or(Decider::Rule, Decider::Greedy),
                    Decider::Explore {
                        net: &agent.net,
                        epsilon,
                        rng: &mut rngs.explore,
                    },
                );
                for obj in chunk {
                    t_r.insert(*obj, &mut reference);
                    t_rl.insert(*obj, &mut learner);
                    if learner.take_split_calls() > 0 {
                        queries.push(make_training_query(obj.mbr.center(), cfg, &mut rngs.queries));
                    }
                    traces.push(learner.take_split_trace());
                }
            }
            let reward = compute_reward(&t_rl, &t_r, &queries);
            let pushed = push_transitions(&mut agent.memory, std::mem::take(&mut traces), reward);
            let loss = agent.learn(&mut rngs.explore)?;
            agent.exploration.decay();
            tally.round(sink, kind, epoch, agent, reward, loss, pushed, epsilon);
        }
    }
    tally.finish(sink, kind, epoch, agent);
    Ok(())
}

fn check_data<const D: usize>(data: &[ObjectRecord<D>], cfg: &TrainConfig, needed: usize) -> Result<()> {
    cfg.validate()?;
    if data.len() < needed {
        return Err(Error::InsufficientData(format!(
            "{} objects, training needs at least {needed}",
            data.len()
        )));
    }
    Ok(())
}

/// Trains the ChooseSubtree agent; splits use the reference rule.
pub fn train_choose_subtree<const D: usize>(
    data: &[ObjectRecord<D>],
    cfg: &TrainConfig,
    sink: &mut dyn TrainSink,
) -> Result<QNetwork> {
    check_data(data, cfg, cfg.p)?;
    let mut agent = cfg.agent(AgentKind::ChooseSubtree);
    let mut rngs = Streams::new(cfg.seed);
    for epoch in 1..=cfg.epochs_cs {
        choose_subtree_epoch(data, cfg, &mut agent, None, &mut rngs, epoch, sink)?;
    }
    Ok(agent.net)
}

/// Trains the Split agent; ChooseSubtree uses the reference rule.
pub fn train_split<const D: usize>(
    data: &[ObjectRecord<D>],
    cfg: &TrainConfig,
    sink: &mut dyn TrainSink,
) -> Result<QNetwork> {
    check_data(data, cfg, cfg.parts)?;
    let mut agent = cfg.agent(AgentKind::Split);
    let mut rngs = Streams::new(cfg.seed);
    for epoch in 1..=cfg.epochs_split {
        split_epoch(data, cfg, &mut agent, None, &mut rngs, epoch, sink)?;
    }
    Ok(agent.net)
}

/// Which agent trains in each epoch of the alternating schedule: the two
/// alternate starting with ChooseSubtree until one runs out of epochs.
pub fn combined_schedule(epochs_cs: usize, epochs_split: usize) -> Vec<AgentKind> {
    let mut out = Vec::with_capacity(epochs_cs + epochs_split);
    let (mut cs, mut sp) = (epochs_cs, epochs_split);
    while cs + sp > 0 {
        if cs > 0 {
            out.push(AgentKind::ChooseSubtree);
            cs -= 1;
        }
        if sp > 0 {
            out.push(AgentKind::Split);
            sp -= 1;
        }
    }
    out
}

/// Trains both agents alternately; the idle agent acts greedily.
pub fn train_combined<const D: usize>(
    data: &[ObjectRecord<D>],
    cfg: &TrainConfig,
    sink: &mut dyn TrainSink,
) -> Result<(QNetwork, QNetwork)> {
    check_data(data, cfg, cfg.p.max(cfg.parts))?;
    let mut cs = cfg.agent(AgentKind::ChooseSubtree);
    let mut sp = cfg.agent(AgentKind::Split);
    let mut rngs = Streams::new(cfg.seed);
    for (i, kind) in combined_schedule(cfg.epochs_cs, cfg.epochs_split)
        .into_iter()
        .enumerate()
    {
        let epoch = i + 1;
        match kind {
            AgentKind::ChooseSubtree => {
                choose_subtree_epoch(data, cfg, &mut cs, Some(&sp.net), &mut rngs, epoch, sink)?
            }
            AgentKind::Split => split_epoch(data, cfg, &mut sp, Some(&cs.net), &mut rngs, epoch, sink)?,
        }
    }
    Ok((cs.net, sp.net))
}

/// Inserts `data` one by one, taking greedy decisions from the given
/// networks and the reference rules elsewhere. `expected_k` rejects networks
/// with a different action-space size.
pub fn build_rlr_tree<const D: usize>(
    data: &[ObjectRecord<D>],
    choose_net: Option<&QNetwork>,
    split_net: Option<&QNetwork>,
    max_entries: usize,
    min_entries: usize,
    expected_k: Option<usize>,
) -> Result<RTree<D>> {
    for net in [choose_net, split_net].into_iter().flatten() {
        if let Some(k) = expected_k {
            if net.actions() != k {
                return Err(Error::ModelMismatch(format!(
                    "model has k={}, expected k={k}",
                    net.actions()
                )));
            }
        }
        if !net.is_finite() {
            return Err(Error::ModelMismatch("model has non-finite parameters".into()));
        }
    }
    let mut tree = RTree::new(max_entries, min_entries)?;
    tree.extend(data.iter().copied(), &mut LearnedPolicy::greedy(choose_net, split_net));
    Ok(tree)
}
