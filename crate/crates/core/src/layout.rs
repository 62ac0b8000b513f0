//! Profile layouts.
//!
//! * flat: every topic, highest weight first, ties alphabetical by label;
//! * nested: an accordion of category headers over their member topics,
//!   followed by the orphan topics;
//! * clustered: per cluster the `k` heaviest members in the foreground and a
//!   single "more" line naming the category.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::generalizer::{Cluster, ClusterSet};
use crate::graph::{Labels, NodeId};
use crate::profile::TopicProfile;
use crate::{Error, Result};

pub const LAYOUT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayoutMode {
    Flat,
    Nested,
    Clustered,
}

impl FromStr for LayoutMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flat" => Ok(LayoutMode::Flat),
            "nested" => Ok(LayoutMode::Nested),
            "clustered" => Ok(LayoutMode::Clustered),
            other => Err(Error::Config(format!("unknown layout mode {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LayoutConfig {
    pub mode: LayoutMode,
    pub k: u32,
}

impl LayoutConfig {
    pub fn new(mode: LayoutMode, k: u32) -> Result<Self> {
        if k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        Ok(LayoutConfig { mode, k })
    }
}

impl Default for LayoutConfig {
    fn default() -> Self {
        LayoutConfig {
            mode: LayoutMode::Flat,
            k: 3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ItemKind {
    Topic,
    CategoryHeader,
    MoreLink,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutItem {
    pub kind: ItemKind,
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<NodeId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<u32>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<LayoutItem>,
}

impl LayoutItem {
    fn topic(id: &NodeId, weight: u32, labels: &Labels) -> Self {
        LayoutItem {
            kind: ItemKind::Topic,
            label: labels.get(id),
            id: Some(id.clone()),
            weight: Some(weight),
            children: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileLayout {
    pub layout_version: u32,
    pub user_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub display_name: Option<String>,
    pub mode: LayoutMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<u32>,
    pub entries: Vec<LayoutItem>,
}

impl ProfileLayout {
    fn new(profile: &TopicProfile, mode: LayoutMode, entries: Vec<LayoutItem>) -> Self {
        ProfileLayout {
            layout_version: LAYOUT_VERSION,
            user_id: profile.user_id.clone(),
            display_name: profile.display_name.clone(),
            mode,
            k: None,
            entries,
        }
    }
}

/// Case-insensitive codepoint comparison, falling back to the raw strings.
pub fn compare_labels(a: &str, b: &str) -> Ordering {
    let fold = |s: &str| {
        s.chars()
            .flat_map(char::to_lowercase)
            .collect::<Vec<char>>()
    };
    fold(a).cmp(&fold(b)).then_with(|| a.cmp(b))
}

/// Flat ordering: weight descending, then label, then id.
pub fn flat_order(a: (&str, u32, &NodeId), b: (&str, u32, &NodeId)) -> Ordering {
    b.1.cmp(&a.1)
        .then_with(|| compare_labels(a.0, b.0))
        .then_with(|| a.2.cmp(b.2))
}

fn sorted_topics<'a, I>(ids: I, profile: &TopicProfile, labels: &Labels) -> Result<Vec<LayoutItem>>
where
    I: IntoIterator<Item = &'a NodeId>,
{
    let mut items = ids
        .into_iter()
        .map(|id| {
            let weight = profile.weight(id).ok_or_else(|| {
                Error::Integrity(format!(
                    "topic {id} is not in the profile of {}",
                    profile.user_id
                ))
            })?;
            Ok(LayoutItem::topic(id, weight, labels))
        })
        .collect::<Result<Vec<_>>>()?;
    items.sort_by(|a, b| {
        flat_order(
            (
                &a.label,
                a.weight.unwrap_or(0),
                a.id.as_ref().expect("topic id"),
            ),
            (
                &b.label,
                b.weight.unwrap_or(0),
                b.id.as_ref().expect("topic id"),
            ),
        )
    });
    Ok(items)
}

pub fn render_flat(profile: &TopicProfile, labels: &Labels) -> ProfileLayout {
    let entries =
        sorted_topics(profile.topics(), profile, labels).expect("profile topics have weights");
    ProfileLayout::new(profile, LayoutMode::Flat, entries)
}

/// Clusters by summed member weight descending, then rank, then category id.
fn ordered_clusters<'a>(
    profile: &TopicProfile,
    clusters: &'a ClusterSet,
) -> Result<Vec<&'a Cluster>> {
    let mut keyed = Vec::with_capacity(clusters.clusters.len());
    for c in &clusters.clusters {
        let mut sum = 0u64;
        for m in &c.members {
            sum += u64::from(profile.weight(m).ok_or_else(|| {
                Error::Integrity(format!(
                    "cluster {} member {m} is not in the profile of {}",
                    c.category, profile.user_id
                ))
            })?);
        }
        keyed.push((sum, c));
    }
    keyed.sort_by(|(sa, a), (sb, b)| {
        sb.cmp(sa)
            .then_with(|| a.rank.total_cmp(&b.rank))
            .then_with(|| a.category.cmp(&b.category))
    });
    Ok(keyed.into_iter().map(|(_, c)| c).collect())
}

fn cluster_label(c: &Cluster) -> String {
    if c.label.trim().is_empty() {
        c.category.local_name()
    } else {
        c.label.clone()
    }
}

pub fn render_nested(
    profile: &TopicProfile,
    clusters: &ClusterSet,
    labels: &Labels,
) -> Result<ProfileLayout> {
    let mut entries = Vec::new();
    for c in ordered_clusters(profile, clusters)? {
        entries.push(LayoutItem {
            kind: ItemKind::CategoryHeader,
            label: cluster_label(c),
            id: Some(c.category.clone()),
            weight: None,
            children: sorted_topics(&c.members, profile, labels)?,
        });
    }
    entries.extend(sorted_topics(&clusters.orphans, profile, labels)?);
    Ok(ProfileLayout::new(profile, LayoutMode::Nested, entries))
}

/// Text of the line closing a cluster of `n` members when `k` are shown.
pub fn more_link_text(n: usize, k: usize, category: &str) -> String {
    if n > k {
        format!("and {} more topics in {category}", n - k)
    } else {
        format!("in category {category}")
    }
}

pub fn render_clustered(
    profile: &TopicProfile,
    clusters: &ClusterSet,
    k: u32,
    labels: &Labels,
) -> Result<ProfileLayout> {
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    let k = k as usize;
    let mut entries = Vec::new();
    for c in ordered_clusters(profile, clusters)? {
        let members = sorted_topics(&c.members, profile, labels)?;
        let label = cluster_label(c);
        entries.extend(members.iter().take(k).cloned());
        entries.push(LayoutItem {
            kind: ItemKind::MoreLink,
            label: more_link_text(members.len(), k, &label),
            id: Some(c.category.clone()),
            weight: None,
            children: members,
        });
    }
    entries.extend(sorted_topics(&clusters.orphans, profile, labels)?);
    let mut layout = ProfileLayout::new(profile, LayoutMode::Clustered, entries);
    layout.k = Some(k as u32);
    Ok(layout)
}

pub fn render(
    profile: &TopicProfile,
    clusters: Option<&ClusterSet>,
    config: &LayoutConfig,
    labels: &Labels,
) -> Result<ProfileLayout> {
    match (config.mode, clusters) {
        (LayoutMode::Flat, _) => Ok(render_flat(profile, labels)),
        (LayoutMode::Nested, Some(c)) => render_nested(profile, c, labels),
        (LayoutMode::Clustered, Some(c)) => render_clustered(profile, c, config.k, labels),
        (mode, None) => Err(Error::Config(format!(
            "{mode:?} layout requires cluster sets"
        ))),
    }
}

/// Canonical JSON: keys sorted within every object, two-space indent, a
/// trailing newline.
pub fn to_json(layout: &ProfileLayout) -> Vec<u8> {
    // serde_json::Value objects are BTreeMap-backed, so keys come out sorted.
    let value = serde_json::to_value(layout).expect("layout serializes");
    let mut out = serde_json::to_string_pretty(&value).expect("value serializes");
    out.push('\n');
    out.into_bytes()
}

pub fn from_json(bytes: &[u8]) -> Result<ProfileLayout> {
    serde_json::from_slice(bytes).map_err(|e| Error::parse("layout", e.line(), e.to_string()))
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}

const LIST_STYLE: &str = "list-style:none;padding-left:0;margin:0";
const NESTED_STYLE: &str = "list-style:none;padding-left:1.5em;margin:0";
const MORE_STYLE: &str = "padding-left:1.5em;font-style:italic;color:#555";

fn topic_items(out: &mut String, items: &[LayoutItem], indent: usize) {
    for item in items {
        let _ = writeln!(out, "{:indent$}<li>{}</li>", "", escape(&item.label));
    }
}

/// Self-contained HTML5 document with inline styles only.
pub fn to_html(layout: &ProfileLayout) -> Vec<u8> {
    let title = layout.display_name.as_deref().unwrap_or(&layout.user_id);
    let mode = match layout.mode {
        LayoutMode::Flat => "flat",
        LayoutMode::Nested => "nested",
        LayoutMode::Clustered => "clustered",
    };
    let mut out = String::new();
    out.push_str("<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n");
    let _ = writeln!(out, "<title>{}</title>", escape(title));
    out.push_str("</head>\n<body style=\"font-family:sans-serif\">\n");
    let _ = writeln!(out, "<h1>{}</h1>", escape(title));
    let _ = writeln!(out, "<ul class=\"profile {mode}\" style=\"{LIST_STYLE}\">");
    for item in &layout.entries {
        match item.kind {
            ItemKind::Topic => topic_items(&mut out, std::slice::from_ref(item), 2),
            ItemKind::CategoryHeader => {
                // <details> without `open` starts collapsed.
                out.push_str("  <li>\n    <details>\n");
                let _ = writeln!(out, "      <summary>{}</summary>", escape(&item.label));
                let _ = writeln!(out, "      <ul style=\"{NESTED_STYLE}\">");
                topic_items(&mut out, &item.children, 8);
                out.push_str("      </ul>\n    </details>\n  </li>\n");
            }
            ItemKind::MoreLink => {
                let _ = writeln!(out, "  <li style=\"{MORE_STYLE}\">");
                out.push_str("    <details>\n");
                let _ = writeln!(out, "      <summary>{}</summary>", escape(&item.label));
                let _ = writeln!(out, "      <ul style=\"{NESTED_STYLE}\">");
                topic_items(&mut out, &item.children, 8);
                out.push_str("      </ul>\n    </details>\n  </li>\n");
            }
        }
    }
    out.push_str("</ul>\n</body>\n</html>\n");
    out.into_bytes()
}

/// Collects the labels of every topic item, at any depth.
pub fn topic_labels(layout: &ProfileLayout) -> BTreeMap<String, usize> {
    fn walk(items: &[LayoutItem], acc: &mut BTreeMap<String, usize>) {
        for item in items {
            if item.kind == ItemKind::Topic {
                *acc.entry(item.label.clone()).or_default() += 1;
            }
            walk(&item.children, acc);
        }
    }
    let mut acc = BTreeMap::new();
    walk(&layout.entries, &mut acc);
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id(s: &str) -> NodeId {
        NodeId::new(s).unwrap()
    }

    fn profile(weights: &[(&str, u32)]) -> TopicProfile {
        TopicProfile::from_weights("u", weights.iter().map(|(t, w)| (id(t), *w))).unwrap()
    }

    fn cluster(cat: &str, rank: f64, members: &[&str]) -> Cluster {
        Cluster {
            category: id(cat),
            label: id(cat).local_name(),
            rank,
            members: members.iter().map(|m| id(m)).collect(),
            newly_assigned: members.iter().map(|m| id(m)).collect(),
        }
    }

    fn labels_of(items: &[LayoutItem]) -> Vec<&str> {
        items.iter().map(|i| i.label.as_str()).collect()
    }

    #[test]
    fn flat_by_weight_then_label() {
        let p = profile(&[("Cherry", 1), ("Banana", 3), ("Apple", 3)]);
        let l = render_flat(&p, &Labels::new());
        assert_eq!(labels_of(&l.entries), vec!["Apple", "Banana", "Cherry"]);
        assert!(l.entries.iter().all(|i| i.children.is_empty()));
    }

    #[test]
    fn flat_ties_ignore_case() {
        let p = profile(&[("b", 1), ("A", 1)]);
        assert_eq!(
            labels_of(&render_flat(&p, &Labels::new()).entries),
            vec!["A", "b"]
        );
    }

    #[test]
    fn flat_empty() {
        assert!(render_flat(&TopicProfile::new("u"), &Labels::new())
            .entries
            .is_empty());
    }

    #[test]
    fn nested_orders_clusters_by_weight_sum() {
        let p = profile(&[("a", 2), ("b", 1), ("c", 1), ("d", 1)]);
        let set = ClusterSet {
            clusters: vec![
                cluster("c2", 0.1, &["c", "d"]),
                cluster("c1", 0.5, &["a", "b"]),
            ],
            orphans: vec![],
        };
        let l = render_nested(&p, &set, &Labels::new()).unwrap();
        assert_eq!(labels_of(&l.entries), vec!["c1", "c2"]);
        assert_eq!(labels_of(&l.entries[0].children), vec!["a", "b"]);
    }

    #[test]
    fn nested_without_clusters_is_flat_listing() {
        let p = profile(&[("x", 1), ("y", 3), ("z", 2)]);
        let set = ClusterSet {
            clusters: vec![],
            orphans: vec![id("x"), id("y"), id("z")],
        };
        let nested = render_nested(&p, &set, &Labels::new()).unwrap();
        let flat = render_flat(&p, &Labels::new());
        assert_eq!(nested.entries, flat.entries);
    }

    #[test]
    fn nested_member_missing_from_profile() {
        let p = profile(&[("a", 1)]);
        let set = ClusterSet {
            clusters: vec![cluster("c", 0.1, &["a", "ghost"])],
            orphans: vec![],
        };
        assert!(matches!(
            render_nested(&p, &set, &Labels::new()),
            Err(Error::Integrity(_))
        ));
        assert!(matches!(
            render_clustered(&p, &set, 3, &Labels::new()),
            Err(Error::Integrity(_))
        ));
    }

    #[test]
    fn more_link_texts() {
        assert_eq!(
            more_link_text(5, 3, "Materials"),
            "and 2 more topics in Materials"
        );
        assert_eq!(more_link_text(3, 3, "Jewellery"), "in category Jewellery");
        assert_eq!(more_link_text(2, 5, "X"), "in category X");
    }

    #[test]
    fn clustered_small_cluster() {
        let p = profile(&[("a", 1), ("b", 2)]);
        let set = ClusterSet {
            clusters: vec![cluster("dbc:X", 0.2, &["a", "b"])],
            orphans: vec![],
        };
        let l = render_clustered(&p, &set, 5, &Labels::new()).unwrap();
        assert_eq!(labels_of(&l.entries), vec!["b", "a", "in category X"]);
        assert_eq!(l.entries[2].kind, ItemKind::MoreLink);
        assert_eq!(l.entries[2].children.len(), 2);
        assert!(render_clustered(&p, &set, 0, &Labels::new()).is_err());
    }

    #[test]
    fn json_is_canonical_and_round_trips() {
        let p = profile(&[("a", 1), ("b", 2), ("c", 1)]);
        let set = ClusterSet {
            clusters: vec![cluster("dbc:X", 0.2, &["a", "b"])],
            orphans: vec![id("c")],
        };
        let l = render_clustered(&p, &set, 1, &Labels::new()).unwrap();
        let bytes = to_json(&l);
        assert_eq!(bytes, to_json(&l));
        assert!(bytes.ends_with(b"\n"));
        let text = String::from_utf8(bytes.clone()).unwrap();
        let pos = |k: &str| text.find(&format!("\"{k}\"")).unwrap();
        assert!(pos("entries") < pos("k") && pos("k") < pos("layout_version"));
        assert_eq!(from_json(&bytes).unwrap(), l);
    }

    #[test]
    fn empty_layout_html() {
        let l = render_flat(&TopicProfile::new("u"), &Labels::new());
        let html = String::from_utf8(to_html(&l)).unwrap();
        assert!(html.starts_with("<!DOCTYPE html>"));
        assert!(html.contains("<ul class=\"profile flat\""));
        assert!(!html.contains("<li>"));
    }

    #[test]
    fn html_escapes_labels() {
        let mut labels = Labels::new();
        labels.insert(id("t"), "R&D <lab>".into());
        let p = profile(&[("t", 1)]);
        let html = String::from_utf8(to_html(&render_flat(&p, &labels))).unwrap();
        assert!(html.contains("<li>R&amp;D &lt;lab&gt;</li>"));
    }

    #[test]
    fn unknown_mode() {
        assert!("grid".parse::<LayoutMode>().is_err());
        assert_eq!("nested".parse::<LayoutMode>().unwrap(), LayoutMode::Nested);
    }
}
