//! Deep Q-learning: value network, target network, replay memory and
//! ε-greedy exploration.

mod explore;
mod model_file;
mod network;
mod replay;

pub use explore::{select_action, ExplorationState};
pub use model_file::{
    check_model, load_model, load_model_checked, model_from_json, model_to_json, save_model,
    AgentKind, Hyperparameters, ModelMeta, MODEL_FORMAT_VERSION,
};
pub use network::{
    masked_argmax, selu, selu_derivative, sync_target, train_step, Gradients, QNetwork,
    HIDDEN_UNITS, SELU_ALPHA, SELU_LAMBDA,
};
pub use replay::{ReplayMemory, Transition, DEFAULT_BATCH_SIZE, DEFAULT_MEMORY_CAPACITY};

use rand::Rng;

use crate::error::Result;

/// A learning agent: online and target networks, replay memory and the
/// update schedule.
#[derive(Clone, Debug)]
pub struct DqnAgent {
    pub net: QNetwork,
    pub target: QNetwork,
    pub memory: ReplayMemory,
    pub exploration: ExplorationState,
    pub gamma: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub target_sync_every: usize,
    updates: u64,
}

impl DqnAgent {
    /// Online and target networks start from the same weights.
    pub fn new(net: QNetwork, gamma: f64, learning_rate: f64) -> Self {
        Self {
            target: net.clone(),
            net,
            memory: ReplayMemory::default(),
            exploration: ExplorationState::default(),
            gamma,
            learning_rate,
            batch_size: DEFAULT_BATCH_SIZE,
            target_sync_every: 30,
            updates: 0,
        }
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    /// One batch update from replay memory, syncing the target network every
    /// `target_sync_every` updates. `None` when the memory is empty.
    pub fn learn<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Option<f64>> {
        if self.memory.is_empty() {
            return Ok(None);
        }
        let batch = self.memory.sample(self.batch_size, rng);
        let loss = train_step(
            &mut self.net,
            &self.target,
            &batch,
            self.gamma,
            self.learning_rate,
        )?;
        self.updates += 1;
        if self.target_sync_every > 0 && self.updates % self.target_sync_every as u64 == 0 {
            sync_target(&self.net, &mut self.target);
        }
        Ok(Some(loss))
    }
}
