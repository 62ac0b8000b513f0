#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::path::PathBuf;
use std::process::{Command, Output};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use rand::Rng;
use topigen::{CategoryGraph, DistanceMatrix, GraphBuilder, NodeId, RankedCategories};

pub fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(rel)
}

pub fn id(s: &str) -> NodeId {
    NodeId::new(s).unwrap()
}

pub fn topigen(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_topigen"))
        .args(args)
        .env_remove("TOPIGEN_ANNOTATOR_URL")
        .output()
        .expect("run topigen")
}

/// Edge lists of a random graph: articles `a*`, categories `c*`.
#[derive(Debug, Clone)]
pub struct RandomGraph {
    pub articles: Vec<String>,
    pub categories: Vec<String>,
    pub subject: Vec<(String, String)>,
    pub broader: Vec<(String, String)>,
}

impl RandomGraph {
    pub fn generate<R: Rng>(rng: &mut R, max_nodes: usize, max_edges: usize) -> Self {
        let nodes = rng.gen_range(2..=max_nodes);
        let n_articles = rng.gen_range(1..nodes);
        let n_categories = nodes - n_articles;
        let articles: Vec<String> = (0..n_articles).map(|i| format!("a{i}")).collect();
        let categories: Vec<String> = (0..n_categories).map(|i| format!("c{i}")).collect();
        let edges = rng.gen_range(0..=max_edges);
        let mut subject = Vec::new();
        let mut broader = Vec::new();
        for _ in 0..edges {
            let c = categories[rng.gen_range(0..n_categories)].clone();
            if rng.gen_bool(0.4) {
                subject.push((articles[rng.gen_range(0..n_articles)].clone(), c));
            } else {
                broader.push((c, categories[rng.gen_range(0..n_categories)].clone()));
            }
        }
        RandomGraph {
            articles,
            categories,
            subject,
            broader,
        }
    }

    pub fn build(&self) -> CategoryGraph {
        let mut b = GraphBuilder::new();
        for (a, c) in &self.subject {
            b.add_subject(id(a), id(c));
        }
        for (c, p) in &self.broader {
            b.add_broader(id(c), id(p));
        }
        b.build().unwrap().0
    }
}

/// Enumerates every walk "subject edge, then up to m-1 broader edges" from
/// `topic` (revisits allowed) and keeps the smallest hop count per category.
pub fn brute_force_distances(g: &RandomGraph, topic: &str, m: u32) -> BTreeMap<String, u8> {
    let mut up: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for (c, p) in &g.broader {
        up.entry(c.as_str()).or_default().insert(p.as_str());
    }
    fn walk<'a>(
        up: &BTreeMap<&'a str, BTreeSet<&'a str>>,
        node: &'a str,
        hops: u32,
        m: u32,
        best: &mut BTreeMap<String, u8>,
    ) {
        let d = hops as u8;
        let slot = best.entry(node.to_string()).or_insert(d);
        if d < *slot {
            *slot = d;
        }
        if hops + 1 >= m {
            return;
        }
        for p in up.get(node).into_iter().flatten() {
            walk(up, p, hops + 1, m, best);
        }
    }
    let mut best: BTreeMap<String, u8> = BTreeMap::new();
    if m == 0 {
        return best;
    }
    let parents: BTreeSet<&str> = g
        .subject
        .iter()
        .filter(|(a, _)| a == topic)
        .map(|(_, c)| c.as_str())
        .collect();
    for c in parents {
        walk(&up, c, 0, m, &mut best);
    }
    best
}

/// (category, members, newly assigned) per emitted cluster.
pub type NaiveCluster = (String, BTreeSet<String>, BTreeSet<String>);

/// Straightforward transcription of the greedy selection with string sets.
pub fn naive_clusters(
    ranked: &RankedCategories,
    matrix: &DistanceMatrix,
    e: &[NodeId],
) -> (Vec<NaiveCluster>, BTreeSet<String>) {
    let mut rows: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for (c, t, _) in matrix.entries() {
        rows.entry(c.to_string()).or_default().insert(t.to_string());
    }
    let mut to_assign: HashSet<String> = e.iter().map(|t| t.to_string()).collect();
    let mut clusters = Vec::new();
    for r in ranked.iter() {
        let indices = rows.get(r.category.as_str()).cloned().unwrap_or_default();
        let in_both: BTreeSet<String> = indices
            .iter()
            .filter(|t| to_assign.contains(*t))
            .cloned()
            .collect();
        if in_both.len() > 1 {
            for t in &in_both {
                to_assign.remove(t);
            }
            clusters.push((r.category.to_string(), indices, in_both));
            if to_assign.is_empty() {
                break;
            }
        }
    }
    (clusters, to_assign.into_iter().collect())
}

/// Random sparse matrix instance: up to `max_topics` columns and
/// `max_categories` rows, distances below `m`.
pub fn random_matrix<R: Rng>(
    rng: &mut R,
    max_topics: usize,
    max_categories: usize,
    m: u32,
) -> DistanceMatrix {
    let n_topics = rng.gen_range(0..=max_topics);
    let n_cats = rng.gen_range(0..=max_categories);
    let topics: Vec<NodeId> = (0..n_topics).map(|i| id(&format!("e{i:02}"))).collect();
    let mut entries = Vec::new();
    if n_topics > 0 {
        for c in 0..n_cats {
            let density = rng.gen_range(0.05..0.6);
            let mut any = false;
            for t in &topics {
                if rng.gen_bool(density) {
                    entries.push((
                        id(&format!("c{c:02}")),
                        t.clone(),
                        rng.gen_range(0..m) as u8,
                    ));
                    any = true;
                }
            }
            if !any {
                let t = topics[rng.gen_range(0..n_topics)].clone();
                entries.push((id(&format!("c{c:02}")), t, rng.gen_range(0..m) as u8));
            }
        }
    }
    DistanceMatrix::from_entries(topics, entries, m).unwrap()
}

/// Minimal HTTP/1.1 server answering each POST with `respond(request_body)`.
pub struct FixtureServer {
    pub url: String,
    pub hits: Arc<AtomicUsize>,
}

impl FixtureServer {
    pub fn start<F>(respond: F) -> Self
    where
        F: Fn(usize, &str) -> (u16, String) + Send + Sync + 'static,
    {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/rest/annotate", listener.local_addr().unwrap());
        let hits = Arc::new(AtomicUsize::new(0));
        let counter = hits.clone();
        std::thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(mut stream) = stream else { continue };
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut length = 0usize;
                let mut accept_json = false;
                loop {
                    let mut line = String::new();
                    if reader.read_line(&mut line).unwrap_or(0) == 0 {
                        break;
                    }
                    let lower = line.to_ascii_lowercase();
                    if let Some(v) = lower.strip_prefix("content-length:") {
                        length = v.trim().parse().unwrap_or(0);
                    }
                    if lower.starts_with("accept:") && lower.contains("application/json") {
                        accept_json = true;
                    }
                    if line == "\r\n" {
                        break;
                    }
                }
                let mut body = vec![0u8; length];
                let _ = reader.read_exact(&mut body);
                let n = counter.fetch_add(1, Ordering::SeqCst);
                let (status, payload) = if accept_json {
                    respond(n, &String::from_utf8_lossy(&body))
                } else {
                    (406, String::new())
                };
                let response = format!(
                    "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{payload}",
                    payload.len()
                );
                let _ = stream.write_all(response.as_bytes());
            }
        });
        FixtureServer { url, hits }
    }
}

/// Builds a Spotlight-style JSON body listing `uris`.
pub fn spotlight_body(uris: &[&str]) -> String {
    let resources: Vec<_> = uris
        .iter()
        .map(|u| serde_json::json!({"@URI": u, "@surfaceForm": "x", "@offset": "0"}))
        .collect();
    serde_json::json!({"@text": "...", "@confidence": "0.5", "Resources": resources}).to_string()
}

/// A free local port with nothing listening on it.
pub fn dead_url() -> String {
    let l = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = l.local_addr().unwrap();
    drop(l);
    format!("http://{addr}/rest/annotate")
}
