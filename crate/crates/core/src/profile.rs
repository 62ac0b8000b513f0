//! Topical user profiles: topics weighted by the number of the user's
//! documents that mention them.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::graph::NodeId;
use crate::io_util::{file_label, open_lines};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawDocument {
    pub doc_id: String,
    pub user_id: String,
    pub text: String,
}

/// A document reduced to the set of topics linked in it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedDocument {
    pub doc_id: String,
    pub user_id: String,
    #[serde(default)]
    pub topics: BTreeSet<NodeId>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TopicProfile {
    pub user_id: String,
    pub display_name: Option<String>,
    /// Number of distinct source documents, when known.
    pub documents: Option<u32>,
    weights: BTreeMap<NodeId, u32>,
}

impl TopicProfile {
    pub fn new(user_id: impl Into<String>) -> Self {
        TopicProfile {
            user_id: user_id.into(),
            display_name: None,
            documents: Some(0),
            weights: BTreeMap::new(),
        }
    }

    /// Builds a profile from explicit weights. Zero weights are rejected.
    pub fn from_weights<I>(user_id: impl Into<String>, weights: I) -> Result<Self>
    where
        I: IntoIterator<Item = (NodeId, u32)>,
    {
        let mut map = BTreeMap::new();
        for (id, w) in weights {
            if w == 0 {
                return Err(Error::Integrity(format!("topic {id} has weight 0")));
            }
            if map.insert(id.clone(), w).is_some() {
                return Err(Error::Integrity(format!("topic {id} listed twice")));
            }
        }
        Ok(TopicProfile {
            user_id: user_id.into(),
            display_name: None,
            documents: None,
            weights: map,
        })
    }

    pub fn weight(&self, topic: &NodeId) -> Option<u32> {
        self.weights.get(topic).copied()
    }

    pub fn weights(&self) -> &BTreeMap<NodeId, u32> {
        &self.weights
    }

    /// The topic set, in id order.
    pub fn topics(&self) -> impl Iterator<Item = &NodeId> {
        self.weights.keys()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Topics ordered by weight descending, then id ascending.
    pub fn ranked_topics(&self) -> Vec<(&NodeId, u32)> {
        let mut v: Vec<_> = self.weights.iter().map(|(k, w)| (k, *w)).collect();
        v.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        v
    }
}

/// Counts, per topic, the distinct documents of `user_id` that mention it.
/// Repeated `doc_id`s keep the last occurrence.
pub fn build_profile(docs: &[AnnotatedDocument], user_id: &str) -> TopicProfile {
    let mut latest: BTreeMap<&str, &BTreeSet<NodeId>> = BTreeMap::new();
    for doc in docs.iter().filter(|d| d.user_id == user_id) {
        if let Some(prev) = latest.insert(&doc.doc_id, &doc.topics) {
            if *prev != doc.topics {
                warn!(
                    "document {} of user {user_id} appears twice with different topics; keeping the last",
                    doc.doc_id
                );
            }
        }
    }
    let mut weights: BTreeMap<NodeId, u32> = BTreeMap::new();
    for topics in latest.values() {
        for t in topics.iter() {
            *weights.entry(t.clone()).or_default() += 1;
        }
    }
    TopicProfile {
        user_id: user_id.to_string(),
        display_name: None,
        documents: Some(latest.len() as u32),
        weights,
    }
}

/// Builds one profile per user present in `docs`, ordered by user id.
pub fn build_all(docs: &[AnnotatedDocument]) -> Vec<TopicProfile> {
    let users: BTreeSet<&str> = docs.iter().map(|d| d.user_id.as_str()).collect();
    users.into_iter().map(|u| build_profile(docs, u)).collect()
}

/// Pointwise sum of two profiles of the same user built from disjoint
/// document sets. When both carry document counts, a summed weight exceeding
/// the summed count reveals overlapping inputs and is rejected.
pub fn merge_profiles(a: &TopicProfile, b: &TopicProfile) -> Result<TopicProfile> {
    if a.user_id != b.user_id {
        return Err(Error::UserMismatch {
            left: a.user_id.clone(),
            right: b.user_id.clone(),
        });
    }
    let mut weights = a.weights.clone();
    for (t, w) in &b.weights {
        *weights.entry(t.clone()).or_default() += w;
    }
    let documents = match (a.documents, b.documents) {
        (Some(x), Some(y)) => Some(x + y),
        _ => None,
    };
    if let Some(n) = documents {
        if let Some((t, w)) = weights.iter().find(|(_, w)| **w > n) {
            return Err(Error::Integrity(format!(
                "merged weight {w} of {t} exceeds the {n} underlying documents"
            )));
        }
    }
    Ok(TopicProfile {
        user_id: a.user_id.clone(),
        display_name: a.display_name.clone().or_else(|| b.display_name.clone()),
        documents,
        weights,
    })
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TopicRecord {
    id: NodeId,
    weight: u32,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileRecord {
    user_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    display_name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    documents: Option<u32>,
    topics: Vec<TopicRecord>,
}

/// One JSON object, no trailing newline.
pub fn profile_to_json(profile: &TopicProfile) -> String {
    let record = ProfileRecord {
        user_id: profile.user_id.clone(),
        display_name: profile.display_name.clone(),
        documents: profile.documents,
        topics: profile
            .ranked_topics()
            .into_iter()
            .map(|(id, weight)| TopicRecord {
                id: id.clone(),
                weight,
            })
            .collect(),
    };
    serde_json::to_string(&record).expect("profile serializes")
}

pub fn profile_from_json(line: &str) -> std::result::Result<TopicProfile, String> {
    let record: ProfileRecord = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let mut profile = TopicProfile::from_weights(
        record.user_id,
        record.topics.into_iter().map(|t| (t.id, t.weight)),
    )
    .map_err(|e| e.to_string())?;
    profile.display_name = record.display_name;
    profile.documents = record.documents;
    if let Some(n) = profile.documents {
        if let Some((t, w)) = profile.weights.iter().find(|(_, w)| **w > n) {
            return Err(format!("weight {w} of {t} exceeds document count {n}"));
        }
    }
    Ok(profile)
}

pub fn profiles_to_jsonl(profiles: &[TopicProfile]) -> String {
    profiles.iter().map(|p| profile_to_json(p) + "\n").collect()
}

pub fn save_profiles(profiles: &[TopicProfile], path: &Path) -> Result<()> {
    crate::io_util::write_atomic(path, profiles_to_jsonl(profiles).as_bytes())
}

pub fn load_profiles(path: &Path) -> Result<Vec<TopicProfile>> {
    load_jsonl(path, profile_from_json)
}

pub fn load_documents(path: &Path) -> Result<Vec<AnnotatedDocument>> {
    load_jsonl(path, |l| serde_json::from_str(l).map_err(|e| e.to_string()))
}

pub fn load_raw_documents(path: &Path) -> Result<Vec<RawDocument>> {
    load_jsonl(path, |l| serde_json::from_str(l).map_err(|e| e.to_string()))
}

/// Reads a JSON-lines file, skipping blank lines; errors carry the line.
pub(crate) fn load_jsonl<T>(
    path: &Path,
    parse: impl Fn(&str) -> std::result::Result<T, String>,
) -> Result<Vec<T>> {
    let name = file_label(path);
    let mut out = Vec::new();
    for (no, line) in open_lines(path)? {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(parse(&line).map_err(|m| Error::parse(&name, no, m))?);
    }
    Ok(out)
}
