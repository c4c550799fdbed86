use std::collections::VecDeque;

use rand::seq::index;
use rand::Rng;

use crate::features::StateVector;

pub const DEFAULT_MEMORY_CAPACITY: usize = 5_000;
pub const DEFAULT_BATCH_SIZE: usize = 64;

/// `(s, a, r, s')`; `next` is `None` for terminal transitions.
#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub state: StateVector,
    pub action: usize,
    pub reward: f64,
    pub next: Option<StateVector>,
}

impl Transition {
    pub fn is_terminal(&self) -> bool {
        self.next.is_none()
    }
}

/// Bounded FIFO of transitions; pushing into a full memory evicts the oldest.
#[derive(Clone, Debug)]
pub struct ReplayMemory {
    buffer: VecDeque<Transition>,
    capacity: usize,
}

impl ReplayMemory {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay memory needs a positive capacity");
        Self {
            buffer: VecDeque::with_capacity(capacity),
            capacity,
        }
    }

    pub fn push(&mut self, t: Transition) {
        debug_assert!(t.action < t.state.valid_actions);
        if self.buffer.len() == self.capacity {
            self.buffer.pop_front();
        }
        self.buffer.push_back(t);
    }

    pub fn len(&self) -> usize {
        self.buffer.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buffer.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn clear(&mut self) {
        self.buffer.clear();
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.buffer.iter()
    }

    /// `batch` transitions drawn uniformly: without replacement when the
    /// memory holds at least `batch`, with replacement otherwise. Empty only
    /// when the memory is.
    pub fn sample<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Vec<&Transition> {
        let n = self.buffer.len();
        if n == 0 {
            return Vec::new();
        }
        if n >= batch {
            index::sample(rng, n, batch)
                .into_iter()
                .map(|i| &self.buffer[i])
                .collect()
        } else {
            (0..batch)
                .map(|_| &self.buffer[rng.random_range(0..n)])
                .collect()
        }
    }
}

impl Default for ReplayMemory {
    fn default() -> Self {
        Self::new(DEFAULT_MEMORY_CAPACITY)
    }
}
