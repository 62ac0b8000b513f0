//! Category graph: articles, categories, subject edges (article → category)
//! and broader edges (category → category).
//!
//! Node names are interned into a sorted table, so a [`NodeIdx`] order is the
//! lexicographic order of the ids and two graphs built from the same edge sets
//! compare equal regardless of input line order. Adjacency is kept in CSR form
//! with sorted target arrays.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::io_util::{file_label, open_lines};
use crate::{Error, Result};

/// Opaque node identifier: an IRI or a compact curie such as `dbr:Pearl`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct NodeId(String);

impl NodeId {
    pub fn new(id: impl Into<String>) -> Result<Self> {
        let id = id.into();
        if id.is_empty() || id.chars().any(char::is_whitespace) {
            return Err(Error::InvalidNodeId(id));
        }
        Ok(NodeId(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Display fallback: the part after the last `/` or `:`, underscores as
    /// spaces.
    pub fn local_name(&self) -> String {
        let tail = match self.0.rfind(['/', ':']) {
            Some(pos) if pos + 1 < self.0.len() => &self.0[pos + 1..],
            _ => &self.0,
        };
        tail.replace('_', " ")
    }
}

impl TryFrom<String> for NodeId {
    type Error = Error;

    fn try_from(value: String) -> Result<Self> {
        NodeId::new(value)
    }
}

impl From<NodeId> for String {
    fn from(value: NodeId) -> Self {
        value.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::str::FromStr for NodeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        NodeId::new(s)
    }
}

/// Dense index of a node inside one [`CategoryGraph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeIdx(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeKind {
    Article,
    Category,
}

/// Display labels with a local-name fallback.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Labels(BTreeMap<NodeId, String>);

impl Labels {
    pub fn new() -> Self {
        Self::default()
    }

    /// Conflicting labels for one id keep the lexicographically smallest, so
    /// the result does not depend on input order.
    pub fn insert(&mut self, id: NodeId, label: String) {
        match self.0.get(&id) {
            Some(existing) if *existing <= label => {}
            _ => {
                self.0.insert(id, label);
            }
        }
    }

    pub fn get(&self, id: &NodeId) -> String {
        match self.0.get(id) {
            Some(label) if !label.trim().is_empty() => label.clone(),
            _ => id.local_name(),
        }
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct Csr {
    offsets: Vec<u32>,
    targets: Vec<u32>,
}

impl Default for Csr {
    fn default() -> Self {
        Csr {
            offsets: vec![0],
            targets: Vec::new(),
        }
    }
}

impl Csr {
    fn from_sorted_edges(nodes: usize, edges: &[(u32, u32)]) -> Self {
        let mut offsets = vec![0u32; nodes + 1];
        for &(src, _) in edges {
            offsets[src as usize + 1] += 1;
        }
        for i in 0..nodes {
            offsets[i + 1] += offsets[i];
        }
        Csr {
            offsets,
            targets: edges.iter().map(|&(_, dst)| dst).collect(),
        }
    }

    fn neighbors(&self, node: u32) -> &[u32] {
        let i = node as usize;
        if i + 1 >= self.offsets.len() {
            return &[];
        }
        &self.targets[self.offsets[i] as usize..self.offsets[i + 1] as usize]
    }

    fn edge_count(&self) -> usize {
        self.targets.len()
    }

    fn check(&self, nodes: usize) -> std::result::Result<(), String> {
        if self.offsets.len() != nodes + 1 {
            return Err("adjacency offsets do not match node count".into());
        }
        if self.offsets.windows(2).any(|w| w[0] > w[1])
            || *self.offsets.last().unwrap_or(&0) as usize != self.targets.len()
        {
            return Err("adjacency offsets are inconsistent".into());
        }
        if self.targets.iter().any(|&t| t as usize >= nodes) {
            return Err("adjacency target out of range".into());
        }
        Ok(())
    }
}

/// Immutable article/category graph.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryGraph {
    names: Vec<NodeId>,
    kinds: Vec<NodeKind>,
    subject: Csr,
    broader: Csr,
    labels: Labels,
}

impl CategoryGraph {
    pub fn node_count(&self) -> usize {
        self.names.len()
    }

    pub fn article_count(&self) -> usize {
        self.kinds
            .iter()
            .filter(|k| **k == NodeKind::Article)
            .count()
    }

    pub fn category_count(&self) -> usize {
        self.kinds
            .iter()
            .filter(|k| **k == NodeKind::Category)
            .count()
    }

    pub fn subject_edge_count(&self) -> usize {
        self.subject.edge_count()
    }

    pub fn broader_edge_count(&self) -> usize {
        self.broader.edge_count()
    }

    pub fn lookup(&self, id: &str) -> Option<NodeIdx> {
        self.names
            .binary_search_by(|n| n.as_str().cmp(id))
            .ok()
            .map(|i| NodeIdx(i as u32))
    }

    pub fn node(&self, idx: NodeIdx) -> &NodeId {
        &self.names[idx.0 as usize]
    }

    pub fn kind(&self, idx: NodeIdx) -> NodeKind {
        self.kinds[idx.0 as usize]
    }

    pub fn articles(&self) -> impl Iterator<Item = &NodeId> {
        self.nodes_of(NodeKind::Article)
    }

    pub fn categories(&self) -> impl Iterator<Item = &NodeId> {
        self.nodes_of(NodeKind::Category)
    }

    fn nodes_of(&self, kind: NodeKind) -> impl Iterator<Item = &NodeId> {
        self.names
            .iter()
            .zip(&self.kinds)
            .filter(move |(_, k)| **k == kind)
            .map(|(n, _)| n)
    }

    /// Subject-edge targets of a node, as indices.
    pub fn subject_targets(&self, idx: NodeIdx) -> &[u32] {
        self.subject.neighbors(idx.0)
    }

    /// Broader-edge targets of a node, as indices.
    pub fn broader_targets(&self, idx: NodeIdx) -> &[u32] {
        self.broader.neighbors(idx.0)
    }

    /// Categories an article is filed under. Empty for unknown ids and for
    /// categories.
    pub fn parents(&self, article: &str) -> Vec<&NodeId> {
        self.resolve(article, &self.subject)
    }

    /// Direct superordinate categories of a category.
    pub fn broaders(&self, category: &str) -> Vec<&NodeId> {
        self.resolve(category, &self.broader)
    }

    fn resolve(&self, id: &str, csr: &Csr) -> Vec<&NodeId> {
        match self.lookup(id) {
            Some(idx) => csr
                .neighbors(idx.0)
                .iter()
                .map(|&t| &self.names[t as usize])
                .collect(),
            None => Vec::new(),
        }
    }

    pub fn labels(&self) -> &Labels {
        &self.labels
    }

    pub fn label(&self, id: &NodeId) -> String {
        self.labels.get(id)
    }

    /// All subject edges as id pairs, in sorted order.
    pub fn subject_edges(&self) -> impl Iterator<Item = (&NodeId, &NodeId)> {
        self.edges(&self.subject)
    }

    /// All broader edges as id pairs, in sorted order.
    pub fn broader_edges(&self) -> impl Iterator<Item = (&NodeId, &NodeId)> {
        self.edges(&self.broader)
    }

    fn edges<'a>(&'a self, csr: &'a Csr) -> impl Iterator<Item = (&'a NodeId, &'a NodeId)> + 'a {
        (0..self.names.len() as u32).flat_map(move |src| {
            csr.neighbors(src)
                .iter()
                .map(move |&dst| (&self.names[src as usize], &self.names[dst as usize]))
        })
    }

    /// Structural consistency check used after deserializing an index.
    pub(crate) fn check(&self) -> std::result::Result<(), String> {
        let n = self.names.len();
        if self.kinds.len() != n {
            return Err("node kind table does not match node count".into());
        }
        if self.names.windows(2).any(|w| w[0] >= w[1]) {
            return Err("node table is not strictly sorted".into());
        }
        self.subject.check(n)?;
        self.broader.check(n)?;
        Ok(())
    }
}

/// Counts reported after ingestion.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub nodes: usize,
    pub articles: usize,
    pub categories: usize,
    pub subject_edges: usize,
    pub broader_edges: usize,
    pub labels: usize,
    pub duplicates_dropped: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skipped_triples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub invalid_skipped_triples: Option<usize>,
}

/// Collects edges as id sets, then freezes them into a [`CategoryGraph`].
#[derive(Debug, Default)]
pub struct GraphBuilder {
    subject: BTreeSet<(NodeId, NodeId)>,
    broader: BTreeSet<(NodeId, NodeId)>,
    labels: Labels,
    duplicates: usize,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds an article → category edge; returns `false` for a duplicate.
    pub fn add_subject(&mut self, article: NodeId, category: NodeId) -> bool {
        let fresh = self.subject.insert((article, category));
        if !fresh {
            self.duplicates += 1;
        }
        fresh
    }

    /// Adds a category → broader category edge; returns `false` for a duplicate.
    pub fn add_broader(&mut self, category: NodeId, broader: NodeId) -> bool {
        let fresh = self.broader.insert((category, broader));
        if !fresh {
            self.duplicates += 1;
        }
        fresh
    }

    pub fn add_label(&mut self, id: NodeId, label: String) {
        self.labels.insert(id, label);
    }

    pub fn duplicates_dropped(&self) -> usize {
        self.duplicates
    }

    pub fn build(self) -> Result<(CategoryGraph, IngestSummary)> {
        let mut kinds: BTreeMap<&NodeId, NodeKind> = BTreeMap::new();
        for (a, _) in &self.subject {
            kinds.insert(a, NodeKind::Article);
        }
        let categories = self
            .subject
            .iter()
            .map(|(_, c)| c)
            .chain(self.broader.iter().flat_map(|(c, b)| [c, b]));
        for c in categories {
            if let Some(NodeKind::Article) = kinds.insert(c, NodeKind::Category) {
                return Err(Error::ClassificationConflict {
                    node: c.to_string(),
                });
            }
        }

        let names: Vec<NodeId> = kinds.keys().map(|n| (*n).clone()).collect();
        let node_kinds: Vec<NodeKind> = kinds.values().copied().collect();
        let intern =
            |id: &NodeId| -> u32 { names.binary_search(id).expect("interned node") as u32 };
        // BTreeSet iteration is sorted by (src, dst) name, which matches index order.
        let subject: Vec<(u32, u32)> = self
            .subject
            .iter()
            .map(|(a, c)| (intern(a), intern(c)))
            .collect();
        let broader: Vec<(u32, u32)> = self
            .broader
            .iter()
            .map(|(c, b)| (intern(c), intern(b)))
            .collect();

        let graph = CategoryGraph {
            subject: Csr::from_sorted_edges(names.len(), &subject),
            broader: Csr::from_sorted_edges(names.len(), &broader),
            kinds: node_kinds,
            names,
            labels: self.labels,
        };
        let summary = IngestSummary {
            nodes: graph.node_count(),
            articles: graph.article_count(),
            categories: graph.category_count(),
            subject_edges: graph.subject_edge_count(),
            broader_edges: graph.broader_edge_count(),
            labels: graph.labels.len(),
            duplicates_dropped: self.duplicates,
            skipped_triples: None,
            invalid_skipped_triples: None,
        };
        Ok((graph, summary))
    }
}

#[derive(Clone, Copy)]
enum EdgeFile {
    Subject,
    Broader,
    Labels,
}

fn read_tsv(path: &Path, role: EdgeFile, builder: &mut GraphBuilder) -> Result<()> {
    let name = file_label(path);
    for (line_no, line) in open_lines(path)? {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 2 {
            return Err(Error::parse(
                &name,
                line_no,
                format!("expected 2 tab-separated fields, found {}", fields.len()),
            ));
        }
        let node =
            |s: &str| NodeId::new(s).map_err(|e| Error::parse(&name, line_no, e.to_string()));
        let child = node(fields[0])?;
        match role {
            EdgeFile::Subject => {
                builder.add_subject(child, node(fields[1])?);
            }
            EdgeFile::Broader => {
                builder.add_broader(child, node(fields[1])?);
            }
            EdgeFile::Labels => builder.add_label(child, fields[1].to_string()),
        }
    }
    Ok(())
}

/// Loads a graph from tab-separated `child\tparent` edge files and an
/// optional `id\tlabel` file. `#` lines and blank lines are ignored.
pub fn ingest_tsv(
    subject_path: &Path,
    broader_path: &Path,
    labels_path: Option<&Path>,
) -> Result<(CategoryGraph, IngestSummary)> {
    let mut builder = GraphBuilder::new();
    read_tsv(subject_path, EdgeFile::Subject, &mut builder)?;
    read_tsv(broader_path, EdgeFile::Broader, &mut builder)?;
    if let Some(labels) = labels_path {
        read_tsv(labels, EdgeFile::Labels, &mut builder)?;
    }
    builder.build()
}

/// Adds labels from an `id\tlabel` file to an existing builder.
pub fn read_labels(path: &Path, builder: &mut GraphBuilder) -> Result<()> {
    read_tsv(path, EdgeFile::Labels, builder)
}
