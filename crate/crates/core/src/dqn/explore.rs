use rand::Rng;

use super::network::{masked_argmax, QNetwork};
use crate::error::Result;
use crate::features::StateVector;

/// Multiplicatively decaying ε with a floor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExplorationState {
    pub epsilon: f64,
    pub decay: f64,
    pub floor: f64,
}

impl Default for ExplorationState {
    fn default() -> Self {
        Self {
            epsilon: 1.0,
            decay: 0.99,
            floor: 0.1,
        }
    }
}

impl ExplorationState {
    pub fn decay(&mut self) {
        self.epsilon = (self.epsilon * self.decay).max(self.floor);
    }
}

/// ε-greedy over the valid actions of `state`. A single valid action is
/// returned without touching the RNG.
pub fn select_action<R: Rng + ?Sized>(
    net: &QNetwork,
    state: &StateVector,
    epsilon: f64,
    rng: &mut R,
) -> Result<usize> {
    let valid = state.valid_actions.max(1);
    if valid == 1 {
        return Ok(0);
    }
    if rng.random::<f64>() < epsilon {
        return Ok(rng.random_range(0..valid));
    }
    let q = net.forward(&state.values)?;
    Ok(masked_argmax(&q, valid))
}
