//! Lockstep query benchmarks over several indices on one object set.
//!
//! Every query runs on every index; the answers must agree with the
//! baseline's exactly, so a report never compares indices that disagree.
//! Relative I/O of a query is the index's node accesses divided by the
//! baseline's, and per-group means average those per-query ratios.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::Rect;
use crate::io::KnnQuery;
use crate::rtree::{QueryStats, RTree};

/// An index under test.
#[derive(Clone, Copy, Debug)]
pub struct NamedIndex<'a, const D: usize> {
    pub name: &'a str,
    pub tree: &'a RTree<D>,
}

impl<'a, const D: usize> NamedIndex<'a, D> {
    pub fn new(name: &'a str, tree: &'a RTree<D>) -> Self {
        Self { name, tree }
    }
}

/// One `(index, query)` measurement.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QueryRow {
    pub group: String,
    pub query: usize,
    pub index: String,
    pub node_accesses: u64,
    pub result_count: u64,
    pub elapsed_nanos: u64,
    pub relative_io: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BenchReport {
    pub baseline: String,
    pub indices: Vec<String>,
    pub rows: Vec<QueryRow>,
    pub metadata: BTreeMap<String, String>,
}

impl BenchReport {
    /// Mean per-query relative I/O of `index` in `group`.
    pub fn mean_relative_io(&self, index: &str, group: &str) -> Option<f64> {
        let (sum, n) = self
            .rows
            .iter()
            .filter(|r| r.index == index && r.group == group)
            .fold((0.0, 0usize), |(s, n), r| (s + r.relative_io, n + 1));
        (n > 0).then(|| sum / n as f64)
    }

    /// Mean node accesses of `index` in `group`.
    pub fn mean_accesses(&self, index: &str, group: &str) -> Option<f64> {
        let (sum, n) = self
            .rows
            .iter()
            .filter(|r| r.index == index && r.group == group)
            .fold((0u64, 0usize), |(s, n), r| (s + r.node_accesses, n + 1));
        (n > 0).then(|| sum as f64 / n as f64)
    }

    /// Groups in first-seen order.
    pub fn groups(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.group) {
                out.push(r.group.clone());
            }
        }
        out
    }

    /// `index -> group -> mean relative I/O`.
    pub fn summary(&self) -> BTreeMap<String, BTreeMap<String, f64>> {
        let groups = self.groups();
        self.indices
            .iter()
            .map(|index| {
                let per_group = groups
                    .iter()
                    .filter_map(|g| Some((g.clone(), self.mean_relative_io(index, g)?)))
                    .collect();
                (index.clone(), per_group)
            })
            .collect()
    }

    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "baseline": self.baseline,
            "metadata": self.metadata,
            "mean_relative_io": self.summary(),
        })
    }

    /// Appends another report over the same indices and baseline.
    pub fn merge(&mut self, other: BenchReport) -> Result<()> {
        if self.indices.is_empty() {
            *self = other;
            return Ok(());
        }
        if self.indices != other.indices || self.baseline != other.baseline {
            return Err(Error::InvalidConfig(
                "cannot merge reports over different indices".into(),
            ));
        }
        self.rows.extend(other.rows);
        self.metadata.extend(other.metadata);
        Ok(())
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
        for row in &self.rows {
            w.serialize(row).map_err(|e| Error::Corrupt(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut w, &self.summary_json())?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }
}

/// Per-query statistics of every index, or the first index whose answer
/// differed from the baseline's.
type QueryOutcome = std::result::Result<Vec<QueryStats>, usize>;

fn run_lockstep<Q, F>(queries: &[Q], parallel: bool, run: F) -> Vec<QueryOutcome>
where
    Q: Sync,
    F: Fn(&Q) -> QueryOutcome + Sync,
{
    if parallel {
        queries.par_iter().map(&run).collect()
    } else {
        queries.iter().map(&run).collect()
    }
}

fn assemble<const D: usize>(
    indices: &[NamedIndex<'_, D>],
    baseline: usize,
    outcomes: Vec<QueryOutcome>,
    group_of: impl Fn(usize) -> String,
) -> Result<BenchReport> {
    let mut rows = Vec::with_capacity(outcomes.len() * indices.len());
    for (qi, outcome) in outcomes.into_iter().enumerate() {
        let stats = outcome.map_err(|bad| Error::ResultMismatch {
            query: qi,
            index: indices[bad].name.to_string(),
            baseline: indices[baseline].name.to_string(),
        })?;
        let base = stats[baseline].node_accesses as f64;
        let group = group_of(qi);
        for (ix, s) in indices.iter().zip(&stats) {
            rows.push(QueryRow {
                group: group.clone(),
                query: qi,
                index: ix.name.to_string(),
                node_accesses: s.node_accesses,
                result_count: s.result_count,
                elapsed_nanos: s.elapsed_nanos,
                relative_io: s.node_accesses as f64 / base,
            });
        }
    }
    Ok(BenchReport {
        baseline: indices[baseline].name.to_string(),
        indices: indices.iter().map(|i| i.name.to_string()).collect(),
        rows,
        metadata: BTreeMap::new(),
    })
}

fn check_indices<const D: usize>(indices: &[NamedIndex<'_, D>], baseline: usize) -> Result<()> {
    if baseline >= indices.len() {
        return Err(Error::InvalidConfig(format!(
            "baseline {baseline} out of {} indices",
            indices.len()
        )));
    }
    let len = indices[baseline].tree.len();
    if let Some(bad) = indices.iter().find(|i| i.tree.len() != len) {
        return Err(Error::InvalidConfig(format!(
            "index `{}` holds {} objects, baseline holds {len}",
            bad.name,
            bad.tree.len()
        )));
    }
    Ok(())
}

/// Runs every range query on every index; all results are labeled `group`.
pub fn run_range_bench<const D: usize>(
    indices: &[NamedIndex<'_, D>],
    queries: &[Rect<D>],
    baseline: usize,
    group: &str,
    parallel: bool,
) -> Result<BenchReport> {
    check_indices(indices, baseline)?;
    let outcomes = run_lockstep(queries, parallel, |q| {
        let expected = indices[baseline].tree.range_query(q);
        let mut stats = Vec::with_capacity(indices.len());
        for (i, ix) in indices.iter().enumerate() {
            if i == baseline {
                stats.push(expected.stats);
                continue;
            }
            let got = ix.tree.range_query(q);
            if got.ids != expected.ids {
                return Err(i);
            }
            stats.push(got.stats);
        }
        Ok(stats)
    });
    assemble(indices, baseline, outcomes, |_| group.to_string())
}

/// Runs every KNN query on every index; results are grouped as `K=<k>`.
pub fn run_knn_bench<const D: usize>(
    indices: &[NamedIndex<'_, D>],
    queries: &[KnnQuery<D>],
    baseline: usize,
    parallel: bool,
) -> Result<BenchReport> {
    check_indices(indices, baseline)?;
    let outcomes = run_lockstep(queries, parallel, |q| {
        let expected = indices[baseline].tree.knn_query(&q.point, q.k);
        let mut stats = Vec::with_capacity(indices.len());
        for (i, ix) in indices.iter().enumerate() {
            if i == baseline {
                stats.push(expected.stats);
                continue;
            }
            let got = ix.tree.knn_query(&q.point, q.k);
            if got.neighbors != expected.neighbors {
                return Err(i);
            }
            stats.push(got.stats);
        }
        Ok(stats)
    });
    assemble(indices, baseline, outcomes, |qi| format!("K={}", queries[qi].k))
}

/// How often each index needs the fewest node accesses; ties count for
/// every tied index.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankingTable {
    pub names: Vec<String>,
    pub best_counts: Vec<usize>,
    pub queries: usize,
}

impl RankingTable {
    pub fn fractions(&self) -> Vec<f64> {
        self.best_counts
            .iter()
            .map(|&c| c as f64 / self.queries.max(1) as f64)
            .collect()
    }
}

pub fn ranking_experiment<const D: usize>(indices: &[NamedIndex<'_, D>], queries: &[Rect<D>]) -> RankingTable {
    let mut best_counts = vec![0; indices.len()];
    for q in queries {
        let accesses: Vec<u64> = indices.iter().map(|i| i.tree.range_count(q).0).collect();
        let min = accesses.iter().copied().min().unwrap_or(0);
        for (count, a) in best_counts.iter_mut().zip(&accesses) {
            if *a == min {
                *count += 1;
            }
        }
    }
    RankingTable {
        names: indices.iter().map(|i| i.name.to_string()).collect(),
        best_counts,
        queries: queries.len(),
    }
}
