//! Insert policy driven by trained Q-networks.
//!
//! Each of the two decisions is made by a [`Decider`]: a fixed heuristic
//! rule, a greedy network, or an exploring network that also records the
//! `(state, action)` pairs it produced. The containment shortcut and the
//! zero-overlap special case bypass the network and are never recorded.

use rand_chacha::ChaCha8Rng;

use crate::dqn::{select_action, QNetwork};
use crate::features::{
    choose_state, containment_shortcut, enumerate_candidate_splits, rank_candidate_children,
    split_special_case, split_state, StateVector,
};
use crate::geometry::Rect;
use crate::heuristics::{apply_choose, apply_split, ChooseRule, SplitRule};
use crate::rtree::{Entry, InsertPolicy, NodeId, RTree, SplitPartition};

/// A state the network scored and the action that was taken.
#[derive(Clone, Debug, PartialEq)]
pub struct Decision {
    pub state: StateVector,
    pub action: usize,
}

pub enum Decider<'a> {
    /// Use the policy's fallback heuristic rule.
    Rule,
    Greedy(&'a QNetwork),
    /// ε-greedy; decisions are recorded.
    Explore {
        net: &'a QNetwork,
        epsilon: f64,
        rng: &'a mut ChaCha8Rng,
    },
}

impl Decider<'_> {
    fn decide(&mut self, state: &StateVector) -> usize {
        match self {
            Decider::Rule => unreachable!("rule deciders never score states"),
            Decider::Greedy(net) => net
                .greedy_action(state)
                .expect("state length matches network"),
            Decider::Explore { net, epsilon, rng } => {
                select_action(net, state, *epsilon, &mut **rng).expect("state length matches network")
            }
        }
    }

    fn records(&self) -> bool {
        matches!(self, Decider::Explore { .. })
    }

    fn net(&self) -> Option<&QNetwork> {
        match self {
            Decider::Rule => None,
            Decider::Greedy(net) => Some(net),
            Decider::Explore { net, .. } => Some(net),
        }
    }
}

pub struct LearnedPolicy<'a> {
    pub choose_rule: ChooseRule,
    pub split_rule: SplitRule,
    choose: Decider<'a>,
    split: Decider<'a>,
    choose_trace: Vec<Decision>,
    split_trace: Vec<Decision>,
    split_calls: usize,
}

impl<'a> LearnedPolicy<'a> {
    /// Falls back to the reference rules for any decision driven by
    /// [`Decider::Rule`].
    pub fn new(choose: Decider<'a>, split: Decider<'a>) -> Self {
        Self {
            choose_rule: ChooseRule::MinAreaEnlargement,
            split_rule: SplitRule::MinOverlapPartition,
            choose,
            split,
            choose_trace: Vec::new(),
            split_trace: Vec::new(),
            split_calls: 0,
        }
    }

    /// Greedy inference; `None` selects the reference rule for that decision.
    pub fn greedy(choose: Option<&'a QNetwork>, split: Option<&'a QNetwork>) -> Self {
        Self::new(
            choose.map_or(Decider::Rule, Decider::Greedy),
            split.map_or(Decider::Rule, Decider::Greedy),
        )
    }

    /// Recorded ChooseSubtree decisions since the last call, root first.
    pub fn take_choose_trace(&mut self) -> Vec<Decision> {
        std::mem::take(&mut self.choose_trace)
    }

    /// Recorded Split decisions since the last call, leaf first.
    pub fn take_split_trace(&mut self) -> Vec<Decision> {
        std::mem::take(&mut self.split_trace)
    }

    /// Number of node splits since the last call.
    pub fn take_split_calls(&mut self) -> usize {
        std::mem::take(&mut self.split_calls)
    }
}

impl<const D: usize> InsertPolicy<D> for LearnedPolicy<'_> {
    fn choose_subtree(&mut self, tree: &RTree<D>, node: NodeId, obj: &Rect<D>) -> usize {
        let Some(net) = self.choose.net() else {
            return apply_choose(self.choose_rule, tree, node, obj);
        };
        let k = net.actions();
        if let Some(i) = containment_shortcut(tree.node(node).entries(), obj) {
            return i;
        }
        let candidates = rank_candidate_children(tree, node, obj, k);
        let state = choose_state(&candidates, k);
        let action = self.choose.decide(&state);
        let chosen = candidates[action].entry_index;
        if self.choose.records() {
            self.choose_trace.push(Decision { state, action });
        }
        chosen
    }

    fn split(&mut self, entries: &[Entry<D>], min: usize, _max: usize) -> SplitPartition {
        self.split_calls += 1;
        let Some(net) = self.split.net() else {
            return apply_split(self.split_rule, entries, min);
        };
        let k = net.actions();
        let candidates = enumerate_candidate_splits(entries, min);
        if let Some(forced) = split_special_case(&candidates) {
            return candidates.partition(&forced);
        }
        let top = candidates.top_zero_overlap(k);
        let state = split_state(&top, k);
        let action = self.split.decide(&state);
        let partition = candidates.partition(&top[action]);
        if self.split.records() {
            self.split_trace.push(Decision { state, action });
        }
        partition
    }
}
