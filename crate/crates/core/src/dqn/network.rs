use rand::Rng;

use super::replay::Transition;
use crate::error::{Error, Result};
use crate::features::{StateVector, FEATURES_PER_CANDIDATE};

pub const HIDDEN_UNITS: usize = 64;

pub const SELU_LAMBDA: f64 = 1.050_700_987_355_480_5;
pub const SELU_ALPHA: f64 = 1.673_263_242_354_377_3;

#[inline]
pub fn selu(x: f64) -> f64 {
    if x > 0.0 {
        SELU_LAMBDA * x
    } else {
        SELU_LAMBDA * SELU_ALPHA * (x.exp() - 1.0)
    }
}

#[inline]
pub fn selu_derivative(x: f64) -> f64 {
    if x > 0.0 {
        SELU_LAMBDA
    } else {
        SELU_LAMBDA * SELU_ALPHA * x.exp()
    }
}

/// One-hidden-layer Q-value network: `w2 · selu(w1 · s + b1) + b2`.
///
/// Weights are row-major: `w1` is `hidden × inputs`, `w2` is
/// `actions × hidden`.
#[derive(Clone, Debug, PartialEq)]
pub struct QNetwork {
    inputs: usize,
    hidden: usize,
    actions: usize,
    pub(crate) w1: Vec<f64>,
    pub(crate) b1: Vec<f64>,
    pub(crate) w2: Vec<f64>,
    pub(crate) b2: Vec<f64>,
}

/// Gradient of the loss with respect to every parameter, same layout as
/// [`QNetwork`].
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl QNetwork {
    /// All-zero network for `k` actions.
    pub fn zeros(k: usize) -> Self {
        Self::zeros_with_hidden(k, HIDDEN_UNITS)
    }

    pub fn zeros_with_hidden(k: usize, hidden: usize) -> Self {
        let inputs = FEATURES_PER_CANDIDATE * k;
        Self {
            inputs,
            hidden,
            actions: k,
            w1: vec![0.0; hidden * inputs],
            b1: vec![0.0; hidden],
            w2: vec![0.0; k * hidden],
            b2: vec![0.0; k],
        }
    }

    /// Weights and biases drawn uniformly from `±1/sqrt(fan_in)` per layer.
    pub fn random<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Self {
        let mut net = Self::zeros(k);
        let b1 = 1.0 / (net.inputs as f64).sqrt();
        let b2 = 1.0 / (net.hidden as f64).sqrt();
        for w in net.w1.iter_mut().chain(net.b1.iter_mut()) {
            *w = rng.random_range(-b1..=b1);
        }
        for w in net.w2.iter_mut().chain(net.b2.iter_mut()) {
            *w = rng.random_range(-b2..=b2);
        }
        net
    }

    pub(crate) fn from_raw(
        k: usize,
        hidden: usize,
        w1: Vec<f64>,
        b1: Vec<f64>,
        w2: Vec<f64>,
        b2: Vec<f64>,
    ) -> Result<Self> {
        let inputs = FEATURES_PER_CANDIDATE * k;
        let shapes = [
            (w1.len(), hidden * inputs, "w1"),
            (b1.len(), hidden, "b1"),
            (w2.len(), k * hidden, "w2"),
            (b2.len(), k, "b2"),
        ];
        for (found, expected, name) in shapes {
            if found != expected {
                return Err(Error::ModelMismatch(format!(
                    "{name} has {found} values, expected {expected}"
                )));
            }
        }
        let net = Self {
            inputs,
            hidden,
            actions: k,
            w1,
            b1,
            w2,
            b2,
        };
        if !net.is_finite() {
            return Err(Error::ModelMismatch("non-finite parameter".into()));
        }
        Ok(net)
    }

    /// Number of actions, `k`.
    pub fn actions(&self) -> usize {
        self.actions
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn is_finite(&self) -> bool {
        self.params().all(f64::is_finite)
    }

    fn params(&self) -> impl Iterator<Item = f64> + '_ {
        self.w1
            .iter()
            .chain(&self.b1)
            .chain(&self.w2)
            .chain(&self.b2)
            .copied()
    }

    /// Q-values for every action slot.
    pub fn forward(&self, state: &[f64]) -> Result<Vec<f64>> {
        if state.len() != self.inputs {
            return Err(Error::StateLength {
                expected: self.inputs,
                found: state.len(),
            });
        }
        let mut pre = vec![0.0; self.hidden];
        let mut out = vec![0.0; self.actions];
        self.forward_into(state, &mut pre, &mut out);
        Ok(out)
    }

    /// Forward pass keeping the hidden pre-activations in `pre`.
    fn forward_into(&self, state: &[f64], pre: &mut [f64], out: &mut [f64]) {
        for (j, z) in pre.iter_mut().enumerate() {
            let row = &self.w1[j * self.inputs..(j + 1) * self.inputs];
            *z = self.b1[j] + row.iter().zip(state).map(|(w, x)| w * x).sum::<f64>();
        }
        for (a, q) in out.iter_mut().enumerate() {
            let row = &self.w2[a * self.hidden..(a + 1) * self.hidden];
            *q = self.b2[a] + row.iter().zip(pre.iter()).map(|(w, z)| w * selu(*z)).sum::<f64>();
        }
    }

    /// Highest-valued action among the first `valid` slots; ties go to the
    /// lowest index.
    pub fn greedy_action(&self, state: &StateVector) -> Result<usize> {
        let q = self.forward(&state.values)?;
        Ok(masked_argmax(&q, state.valid_actions))
    }

    /// Regression target for one transition, from this (target) network.
    pub fn td_target(&self, t: &Transition, gamma: f64) -> Result<f64> {
        match &t.next {
            None => Ok(t.reward),
            Some(next) => {
                let q = self.forward(&next.values)?;
                let best = q[..next.valid_actions.clamp(1, q.len())]
                    .iter()
                    .copied()
                    .fold(f64::NEG_INFINITY, f64::max);
                Ok(t.reward + gamma * best)
            }
        }
    }

    /// Mean squared TD error over `batch` given precomputed targets.
    pub fn loss(&self, batch: &[&Transition], targets: &[f64]) -> Result<f64> {
        let mut total = 0.0;
        for (t, y) in batch.iter().zip(targets) {
            let q = self.forward(&t.state.values)?;
            let err = y - q[t.action];
            total += err * err;
        }
        Ok(total / batch.len() as f64)
    }

    /// Loss and its gradient with respect to this network's parameters; the
    /// targets are constants.
    pub fn loss_and_gradient(&self, batch: &[&Transition], targets: &[f64]) -> Result<(f64, Gradients)> {
        let mut grad = Gradients {
            w1: vec![0.0; self.w1.len()],
            b1: vec![0.0; self.b1.len()],
            w2: vec![0.0; self.w2.len()],
            b2: vec![0.0; self.b2.len()],
        };
        let mut pre = vec![0.0; self.hidden];
        let mut out = vec![0.0; self.actions];
        let mut dpre = vec![0.0; self.hidden];
        let scale = 1.0 / batch.len() as f64;
        let mut loss = 0.0;
        for (t, &y) in batch.iter().zip(targets) {
            let s = &t.state.values;
            if s.len() != self.inputs {
                return Err(Error::StateLength {
                    expected: self.inputs,
                    found: s.len(),
                });
            }
            self.forward_into(s, &mut pre, &mut out);
            let a = t.action;
            let err = out[a] - y;
            loss += err * err;
            let g = 2.0 * err * scale;
            grad.b2[a] += g;
            let w2_row = &self.w2[a * self.hidden..(a + 1) * self.hidden];
            let gw2_row = &mut grad.w2[a * self.hidden..(a + 1) * self.hidden];
            for j in 0..self.hidden {
                gw2_row[j] += g * selu(pre[j]);
                dpre[j] = g * w2_row[j] * selu_derivative(pre[j]);
            }
            for j in 0..self.hidden {
                grad.b1[j] += dpre[j];
                let row = &mut grad.w1[j * self.inputs..(j + 1) * self.inputs];
                for (gw, x) in row.iter_mut().zip(s) {
                    *gw += dpre[j] * x;
                }
            }
        }
        Ok((loss * scale, grad))
    }

    /// `θ ← θ − lr · ∇`.
    pub fn apply_gradient(&mut self, grad: &Gradients, lr: f64) {
        for (p, g) in self.w1.iter_mut().zip(&grad.w1) {
            *p -= lr * g;
        }
        for (p, g) in self.b1.iter_mut().zip(&grad.b1) {
            *p -= lr * g;
        }
        for (p, g) in self.w2.iter_mut().zip(&grad.w2) {
            *p -= lr * g;
        }
        for (p, g) in self.b2.iter_mut().zip(&grad.b2) {
            *p -= lr * g;
        }
    }

    /// Mutable view of every parameter in a fixed order (w1, b1, w2, b2).
    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.w1
            .iter_mut()
            .chain(self.b1.iter_mut())
            .chain(self.w2.iter_mut())
            .chain(self.b2.iter_mut())
    }

    /// Copies every parameter from `source`.
    pub fn copy_from(&mut self, source: &QNetwork) {
        self.clone_from(source);
    }
}

impl Gradients {
    /// Flattened in the same order as [`QNetwork::params_mut`].
    pub fn flatten(&self) -> Vec<f64> {
        self.w1
            .iter()
            .chain(&self.b1)
            .chain(&self.w2)
            .chain(&self.b2)
            .copied()
            .collect()
    }
}

/// Argmax over `q[..valid]`, lowest index on ties.
pub fn masked_argmax(q: &[f64], valid: usize) -> usize {
    let valid = valid.clamp(1, q.len());
    let mut best = 0;
    for a in 1..valid {
        if q[a] > q[best] {
            best = a;
        }
    }
    best
}

/// Gradient-descent update on one batch: targets from `target`, gradient of
/// the mean squared TD error applied to `net`. Returns the loss before the
/// update.
pub fn train_step(
    net: &mut QNetwork,
    target: &QNetwork,
    batch: &[&Transition],
    gamma: f64,
    lr: f64,
) -> Result<f64> {
    assert!(!batch.is_empty(), "empty training batch");
    let targets = batch
        .iter()
        .map(|t| target.td_target(t, gamma))
        .collect::<Result<Vec<f64>>>()?;
    let (loss, grad) = net.loss_and_gradient(batch, &targets)?;
    if !loss.is_finite() {
        return Err(Error::NonFiniteLoss(loss));
    }
    net.apply_gradient(&grad, lr);
    if !net.is_finite() {
        return Err(Error::NonFiniteLoss(loss));
    }
    Ok(loss)
}

/// Makes `target` a bitwise copy of `net`.
pub fn sync_target(net: &QNetwork, target: &mut QNetwork) {
    target.copy_from(net);
}
