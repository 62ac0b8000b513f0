//! Topical generalization of user profiles.
//!
//! Profiles are sets of fine-grained topics (knowledge-base articles) weighted
//! by how many of a user's documents mention them. This crate pairs groups of
//! those topics with broader categories from a category graph and renders the
//! result in flat, nested, and clustered layouts.
//!
//! The pipeline is:
//!
//! 1. [`graph`]: load the article/category graph from TSV or N-Triples dumps,
//!    optionally persisted as a binary [`index`].
//! 2. [`annotator`]: (optional) link raw text to topics through a
//!    Spotlight-compatible service.
//! 3. [`profile`]: aggregate annotated documents into weighted profiles.
//! 4. [`generalizer`]: bounded traversal, distance matrix, AdoptionRank and
//!    greedy cluster selection.
//! 5. [`layout`]: flat / nested / clustered layouts as JSON or HTML.

pub mod annotator;
pub mod cli;
pub mod error;
pub mod generalizer;
pub mod graph;
pub mod index;
pub mod io_util;
pub mod layout;
pub mod ntriples;
pub mod profile;

pub use error::{Error, Result};
pub use generalizer::{
    adoption_rank, build_matrix, cluster, generalize, rank_categories, traverse, Cluster,
    ClusterSet, ClusterSetRecord, DistanceMatrix, GeneralizationConfig, RankedCategories,
    RankedCategory,
};
pub use graph::{CategoryGraph, GraphBuilder, IngestSummary, Labels, NodeId, NodeIdx, NodeKind};
pub use layout::{ItemKind, LayoutConfig, LayoutItem, LayoutMode, ProfileLayout};
pub use profile::{AnnotatedDocument, RawDocument, TopicProfile};
