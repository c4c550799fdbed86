//! R-Trees whose ChooseSubtree and Split decisions can be learned with deep
//! Q-learning, plus the classic heuristics, data generators and the
//! node-access benchmark harness used to compare them.

pub mod bench;
pub mod datagen;
pub mod dqn;
pub mod error;
pub mod features;
pub mod geometry;
pub mod heuristics;
pub mod io;
pub mod learned;
pub mod rtree;
pub mod snapshot;
pub mod trainer;

pub use error::{Error, Result};
pub use geometry::Rect;
pub use learned::{Decider, Decision, LearnedPolicy};
pub use heuristics::{ChooseRule, HeuristicPolicy, PolicyName, SplitRule};
pub use rtree::{InsertPolicy, KnnResult, NodeId, ObjectRecord, QueryStats, RTree, RangeResult, Violation};
