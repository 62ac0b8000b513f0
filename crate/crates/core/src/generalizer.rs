//! Topical generalization.
//!
//! For every profile topic `e`, a bounded breadth-first walk collects the
//! categories reachable through one subject edge followed by at most `m - 1`
//! broader edges, keeping the minimum number of broader hops `d_ce`. The
//! union of those categories forms the rows of a sparse distance matrix whose
//! columns are the profile topics. Rows are scored with AdoptionRank
//!
//! ```text
//! rank(c) = kappa / coverage(c)^2 + sum_e d_ce / coverage(c)
//! ```
//!
//! (lower is better) and then scanned greedily: a category becomes a cluster
//! when it covers at least two topics that no earlier cluster has claimed.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::graph::{CategoryGraph, Labels, NodeId, NodeIdx};
use crate::profile::TopicProfile;
use crate::{Error, Result};

/// Traversal depth `m` and tie penalty constant `kappa`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneralizationConfig {
    pub m: u32,
    pub kappa: f64,
}

impl Default for GeneralizationConfig {
    fn default() -> Self {
        GeneralizationConfig { m: 3, kappa: 1.0 }
    }
}

impl GeneralizationConfig {
    /// Largest `m` whose distances (`< m`) still fit in a byte.
    pub const MAX_M: u32 = 256;

    pub fn new(m: u32, kappa: f64) -> Result<Self> {
        let config = GeneralizationConfig { m, kappa };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.m > Self::MAX_M {
            return Err(Error::Config(format!(
                "m must be between 1 and {}, got {}",
                Self::MAX_M,
                self.m
            )));
        }
        if !(self.kappa.is_finite() && self.kappa > 0.0) {
            return Err(Error::Config(format!(
                "kappa must be a positive number, got {}",
                self.kappa
            )));
        }
        Ok(())
    }
}

/// Minimum broader-hop distance from `topic` to every category reachable
/// within `m` levels, by node index, sorted by index.
pub fn traverse_idx(graph: &CategoryGraph, topic: NodeIdx, m: u32) -> Vec<(NodeIdx, u8)> {
    let mut seen: HashMap<u32, u8> = HashMap::new();
    if m == 0 {
        return Vec::new();
    }
    let mut frontier: Vec<u32> = Vec::new();
    for &c in graph.subject_targets(topic) {
        if seen.insert(c, 0).is_none() {
            frontier.push(c);
        }
    }
    let mut level: u32 = 0;
    while level + 1 < m && !frontier.is_empty() {
        let next_level = (level + 1) as u8;
        let mut next = Vec::new();
        for &c in &frontier {
            for &b in graph.broader_targets(NodeIdx(c)) {
                if let std::collections::hash_map::Entry::Vacant(slot) = seen.entry(b) {
                    slot.insert(next_level);
                    next.push(b);
                }
            }
        }
        frontier = next;
        level += 1;
    }
    let mut out: Vec<(NodeIdx, u8)> = seen.into_iter().map(|(c, d)| (NodeIdx(c), d)).collect();
    out.sort_unstable();
    out
}

/// Categories reachable from `topic` with their minimum distances. Unknown
/// topics yield an empty map.
pub fn traverse(graph: &CategoryGraph, topic: &str, m: u32) -> BTreeMap<NodeId, u8> {
    match graph.lookup(topic) {
        Some(idx) => traverse_idx(graph, idx, m)
            .into_iter()
            .map(|(c, d)| (graph.node(c).clone(), d))
            .collect(),
        None => BTreeMap::new(),
    }
}

/// Sparse category × topic matrix of minimum distances. Rows are kept sorted
/// by category id, columns by topic id.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistanceMatrix {
    m: u32,
    topics: Vec<NodeId>,
    categories: Vec<NodeId>,
    /// Per row: (column, distance), sorted by column.
    rows: Vec<Vec<(u32, u8)>>,
}

impl DistanceMatrix {
    /// Builds a matrix from explicit `(category, topic, distance)` entries.
    /// Every topic referenced by an entry must be among `topics`; distances
    /// must be below `m`. A repeated pair keeps its smallest distance.
    pub fn from_entries<I>(topics: Vec<NodeId>, entries: I, m: u32) -> Result<Self>
    where
        I: IntoIterator<Item = (NodeId, NodeId, u8)>,
    {
        let mut topics = topics;
        topics.sort();
        topics.dedup();
        let mut rows: BTreeMap<NodeId, BTreeMap<u32, u8>> = BTreeMap::new();
        for (cat, topic, d) in entries {
            if u32::from(d) >= m {
                return Err(Error::Integrity(format!(
                    "distance {d} for ({cat}, {topic}) is not below m = {m}"
                )));
            }
            let col = topics
                .binary_search(&topic)
                .map_err(|_| Error::Integrity(format!("topic {topic} is not a matrix column")))?;
            let slot = rows.entry(cat).or_default().entry(col as u32).or_insert(d);
            *slot = (*slot).min(d);
        }
        let (categories, rows) = rows
            .into_iter()
            .map(|(c, r)| (c, r.into_iter().collect()))
            .unzip();
        Ok(DistanceMatrix {
            m,
            topics,
            categories,
            rows,
        })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn topics(&self) -> &[NodeId] {
        &self.topics
    }

    pub fn categories(&self) -> &[NodeId] {
        &self.categories
    }

    pub fn row_count(&self) -> usize {
        self.categories.len()
    }

    pub fn entry_count(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn row_of(&self, category: &NodeId) -> Option<usize> {
        self.categories.binary_search(category).ok()
    }

    /// Non-null entries of a row as (column, distance).
    pub fn row(&self, row: usize) -> &[(u32, u8)] {
        &self.rows[row]
    }

    pub fn get(&self, category: &NodeId, topic: &NodeId) -> Option<u8> {
        let row = self.row_of(category)?;
        let col = self.topics.binary_search(topic).ok()? as u32;
        self.rows[row]
            .binary_search_by_key(&col, |&(c, _)| c)
            .ok()
            .map(|i| self.rows[row][i].1)
    }

    /// Iterates `(category, topic, distance)` over all stored entries.
    pub fn entries(&self) -> impl Iterator<Item = (&NodeId, &NodeId, u8)> {
        self.categories
            .iter()
            .zip(&self.rows)
            .flat_map(move |(c, row)| {
                row.iter()
                    .map(move |&(col, d)| (c, &self.topics[col as usize], d))
            })
    }
}

/// Builds the distance matrix for a profile: one column per profile topic
/// (topics missing from the graph get empty columns) and one row per
/// category reached by any traversal.
pub fn build_matrix(
    graph: &CategoryGraph,
    profile: &TopicProfile,
    config: &GeneralizationConfig,
) -> Result<DistanceMatrix> {
    config.validate()?;
    let topics: Vec<NodeId> = profile.topics().cloned().collect();
    // Columns first, then invert into rows keyed by node index, which is the
    // category id order.
    let mut rows: BTreeMap<NodeIdx, Vec<(u32, u8)>> = BTreeMap::new();
    for (col, topic) in topics.iter().enumerate() {
        let Some(idx) = graph.lookup(topic.as_str()) else {
            continue;
        };
        for (cat, d) in traverse_idx(graph, idx, config.m) {
            rows.entry(cat).or_default().push((col as u32, d));
        }
    }
    let (categories, rows) = rows
        .into_iter()
        .map(|(c, r)| (graph.node(c).clone(), r))
        .unzip();
    Ok(DistanceMatrix {
        m: config.m,
        topics,
        categories,
        rows,
    })
}

/// AdoptionRank of a category row: `kappa / coverage^2 + distance_sum /
/// coverage`. Lower values mean a broader and more direct cover.
pub fn adoption_rank(distance_sum: u64, coverage: u32, kappa: f64) -> Result<f64> {
    if coverage == 0 {
        return Err(Error::Precondition("coverage must be at least 1".into()));
    }
    let c = f64::from(coverage);
    Ok(kappa / (c * c) + distance_sum as f64 / c)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankedCategory {
    pub category: NodeId,
    pub rank: f64,
    pub coverage: u32,
    pub distance_sum: u64,
}

/// Matrix rows in ascending rank order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RankedCategories(pub Vec<RankedCategory>);

impl RankedCategories {
    pub fn iter(&self) -> std::slice::Iter<'_, RankedCategory> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Ascending rank, then higher coverage, then category id.
pub fn rank_order(a: &RankedCategory, b: &RankedCategory) -> Ordering {
    a.rank
        .total_cmp(&b.rank)
        .then_with(|| b.coverage.cmp(&a.coverage))
        .then_with(|| a.category.cmp(&b.category))
}

pub fn rank_categories(
    matrix: &DistanceMatrix,
    config: &GeneralizationConfig,
) -> Result<RankedCategories> {
    config.validate()?;
    let mut ranked = Vec::with_capacity(matrix.row_count());
    for (category, row) in matrix.categories.iter().zip(&matrix.rows) {
        let coverage = row.len() as u32;
        let distance_sum: u64 = row.iter().map(|&(_, d)| u64::from(d)).sum();
        ranked.push(RankedCategory {
            category: category.clone(),
            rank: adoption_rank(distance_sum, coverage, config.kappa)?,
            coverage,
            distance_sum,
        });
    }
    ranked.sort_by(rank_order);
    Ok(RankedCategories(ranked))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub category: NodeId,
    pub label: String,
    pub rank: f64,
    /// Every topic with a distance to the category.
    pub members: Vec<NodeId>,
    /// The members this cluster claimed first.
    pub newly_assigned: Vec<NodeId>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ClusterSet {
    pub clusters: Vec<Cluster>,
    pub orphans: Vec<NodeId>,
}

impl ClusterSet {
    /// Reorders members, newly assigned topics and orphans by profile weight
    /// descending, then id. Topics absent from the profile sort last.
    pub fn order_by_weight(&mut self, profile: &TopicProfile) {
        let key = |id: &NodeId| {
            (
                std::cmp::Reverse(profile.weight(id).unwrap_or(0)),
                id.clone(),
            )
        };
        for c in &mut self.clusters {
            c.members.sort_by_cached_key(key);
            c.newly_assigned.sort_by_cached_key(key);
        }
        self.orphans.sort_by_cached_key(key);
    }

    pub fn apply_labels(&mut self, labels: &Labels) {
        for c in &mut self.clusters {
            c.label = labels.get(&c.category);
        }
    }
}

/// Greedy cluster selection over ranked rows.
///
/// `to_assign` starts as `topics`. For each ranked row, the topics it shares
/// with `to_assign` are claimed when there are at least two of them; the
/// cluster keeps the full row as members. The scan stops once every topic is
/// claimed, and whatever is left becomes the orphans.
pub fn cluster(
    ranked: &RankedCategories,
    matrix: &DistanceMatrix,
    topics: &[NodeId],
) -> ClusterSet {
    let columns = matrix.topics();
    let mut pending = vec![false; columns.len()];
    let mut outside: Vec<NodeId> = Vec::new();
    for t in topics {
        match columns.binary_search(t) {
            Ok(col) => pending[col] = true,
            Err(_) => outside.push(t.clone()),
        }
    }
    outside.sort();
    outside.dedup();
    let mut remaining = pending.iter().filter(|p| **p).count() + outside.len();

    let mut clusters = Vec::new();
    for record in ranked.iter() {
        if remaining == 0 {
            break;
        }
        let Some(row) = matrix.row_of(&record.category) else {
            continue;
        };
        let row = matrix.row(row);
        let claimed: Vec<u32> = row
            .iter()
            .map(|&(col, _)| col)
            .filter(|&col| pending[col as usize])
            .collect();
        if claimed.len() > 1 {
            for &col in &claimed {
                pending[col as usize] = false;
            }
            remaining -= claimed.len();
            clusters.push(Cluster {
                category: record.category.clone(),
                label: record.category.local_name(),
                rank: record.rank,
                members: row
                    .iter()
                    .map(|&(c, _)| columns[c as usize].clone())
                    .collect(),
                newly_assigned: claimed
                    .iter()
                    .map(|&c| columns[c as usize].clone())
                    .collect(),
            });
        }
    }

    let mut orphans: Vec<NodeId> = pending
        .iter()
        .enumerate()
        .filter(|(_, p)| **p)
        .map(|(col, _)| columns[col].clone())
        .collect();
    orphans.extend(outside);
    orphans.sort();
    ClusterSet { clusters, orphans }
}

/// Full generalization of one profile: matrix, ranking, cluster selection.
/// Cluster labels come from the graph; member lists are ordered by weight.
pub fn generalize(
    graph: &CategoryGraph,
    profile: &TopicProfile,
    config: &GeneralizationConfig,
) -> Result<ClusterSet> {
    let matrix = build_matrix(graph, profile, config)?;
    let ranked = rank_categories(&matrix, config)?;
    let topics: Vec<NodeId> = profile.topics().cloned().collect();
    let mut set = cluster(&ranked, &matrix, &topics);
    set.apply_labels(graph.labels());
    set.order_by_weight(profile);
    Ok(set)
}

/// JSON-lines record of one generalized profile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterSetRecord {
    pub user_id: String,
    pub config: GeneralizationConfig,
    pub clusters: Vec<Cluster>,
    pub orphans: Vec<NodeId>,
}

impl ClusterSetRecord {
    pub fn new(user_id: impl Into<String>, config: GeneralizationConfig, set: ClusterSet) -> Self {
        ClusterSetRecord {
            user_id: user_id.into(),
            config,
            clusters: set.clusters,
            orphans: set.orphans,
        }
    }

    pub fn cluster_set(&self) -> ClusterSet {
        ClusterSet {
            clusters: self.clusters.clone(),
            orphans: self.orphans.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("cluster set serializes")
    }
}

pub fn load_cluster_sets(path: &std::path::Path) -> Result<Vec<ClusterSetRecord>> {
    crate::profile::load_jsonl(path, |l| serde_json::from_str(l).map_err(|e| e.to_string()))
}
