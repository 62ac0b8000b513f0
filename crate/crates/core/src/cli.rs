//! `topigen` command-line entry point.
//!
//! Exit codes: 0 success, 1 parse/schema/config error, 2 I/O error,
//! 3 unusable graph index, 4 annotation service failure.

use std::collections::HashMap;
use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::json;

use crate::annotator::{AnnotatorClient, DEFAULT_CONFIDENCE, URL_ENV};
use crate::generalizer::{generalize, load_cluster_sets, ClusterSetRecord, GeneralizationConfig};
use crate::graph::{ingest_tsv, read_labels, GraphBuilder, Labels};
use crate::index::{read_index, write_index};
use crate::io_util::write_atomic;
use crate::layout::{render, to_html, to_json, LayoutConfig, LayoutMode};
use crate::profile::{
    build_all, build_profile, load_documents, load_profiles, load_raw_documents, profiles_to_jsonl,
};
use crate::{ntriples, Error, Result};

#[derive(Parser, Debug)]
#[command(
    name = "topigen",
    version,
    about = "Topical generalization of user profiles"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a graph index from TSV edge files or an N-Triples dump.
    Ingest {
        #[arg(long)]
        subject: Option<PathBuf>,
        #[arg(long)]
        broader: Option<PathBuf>,
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long, conflicts_with_all = ["subject", "broader"])]
        ntriples: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Aggregate annotated documents into weighted profiles.
    Profile {
        #[arg(long)]
        docs: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        user: Option<String>,
    },
    /// Pair groups of profile topics with categories.
    Generalize {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        profiles: PathBuf,
        #[arg(short = 'm', long = "max-depth", default_value_t = 3)]
        m: u32,
        #[arg(long, default_value_t = 1.0)]
        kappa: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Render profiles as flat, nested or clustered layouts.
    Render {
        #[arg(long)]
        profiles: PathBuf,
        #[arg(long)]
        clusters: Option<PathBuf>,
        #[arg(long, default_value = "flat")]
        mode: String,
        #[arg(long, value_enum, default_value_t = Format::Html)]
        format: Format,
        #[arg(short = 'k', long, default_value_t = 3)]
        k: u32,
        /// Graph index used for topic labels.
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Annotate raw documents through a Spotlight-compatible service.
    Annotate {
        #[arg(long)]
        docs: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, env = URL_ENV)]
        service_url: String,
        #[arg(long, default_value_t = DEFAULT_CONFIDENCE)]
        confidence: f64,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Json,
    Html,
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("topigen: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Ingest {
            subject,
            broader,
            labels,
            ntriples,
            out,
        } => cmd_ingest(subject, broader, labels, ntriples, &out),
        Command::Profile { docs, out, user } => cmd_profile(&docs, &out, user.as_deref()),
        Command::Generalize {
            graph,
            profiles,
            m,
            kappa,
            out,
            jobs,
        } => cmd_generalize(
            &graph,
            &profiles,
            GeneralizationConfig { m, kappa },
            &out,
            jobs,
        ),
        Command::Render {
            profiles,
            clusters,
            mode,
            format,
            k,
            graph,
            out_dir,
        } => {
            let config = LayoutConfig::new(mode.parse()?, k)?;
            cmd_render(
                &profiles,
                clusters.as_deref(),
                config,
                format,
                graph.as_deref(),
                &out_dir,
            )
        }
        Command::Annotate {
            docs,
            out,
            service_url,
            confidence,
        } => cmd_annotate(&docs, &out, &service_url, confidence),
    }
}

fn cmd_ingest(
    subject: Option<PathBuf>,
    broader: Option<PathBuf>,
    labels: Option<PathBuf>,
    ntriples_path: Option<PathBuf>,
    out: &Path,
) -> Result<()> {
    let (graph, summary) = match (ntriples_path, subject, broader) {
        (Some(nt), _, _) => {
            let mut builder = GraphBuilder::new();
            let counts = ntriples::read_file(&nt, &mut builder)?;
            if let Some(l) = &labels {
                read_labels(l, &mut builder)?;
            }
            let (g, mut s) = builder.build()?;
            s.skipped_triples = Some(counts.skipped);
            s.invalid_skipped_triples = Some(counts.invalid_skipped);
            (g, s)
        }
        (None, Some(s), Some(b)) => ingest_tsv(&s, &b, labels.as_deref())?,
        _ => {
            return Err(Error::Config(
                "either --ntriples or both --subject and --broader are required".into(),
            ))
        }
    };
    write_index(&graph, out)?;
    println!(
        "{}",
        serde_json::to_string(&summary).expect("summary serializes")
    );
    Ok(())
}

fn cmd_profile(docs: &Path, out: &Path, user: Option<&str>) -> Result<()> {
    let docs = load_documents(docs)?;
    let profiles = match user {
        Some(u) => vec![build_profile(&docs, u)],
        None => build_all(&docs),
    };
    write_atomic(out, profiles_to_jsonl(&profiles).as_bytes())?;
    println!(
        "{}",
        json!({ "documents": docs.len(), "profiles": profiles.len() })
    );
    Ok(())
}

fn cmd_generalize(
    graph_path: &Path,
    profiles_path: &Path,
    config: GeneralizationConfig,
    out: &Path,
    jobs: usize,
) -> Result<()> {
    config.validate()?;
    if jobs == 0 {
        return Err(Error::Config("--jobs must be at least 1".into()));
    }
    let graph = read_index(graph_path)?;
    let profiles = load_profiles(profiles_path)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    // Indexed parallel collect keeps input order.
    let records: Vec<ClusterSetRecord> = pool.install(|| {
        profiles
            .par_iter()
            .map(|p| {
                generalize(&graph, p, &config)
                    .map(|set| ClusterSetRecord::new(p.user_id.clone(), config, set))
            })
            .collect::<Result<_>>()
    })?;
    let body: String = records.iter().map(|r| r.to_json() + "\n").collect();
    write_atomic(out, body.as_bytes())?;
    let clusters: usize = records.iter().map(|r| r.clusters.len()).sum();
    let orphans: usize = records.iter().map(|r| r.orphans.len()).sum();
    println!(
        "{}",
        json!({ "profiles": records.len(), "clusters": clusters, "orphans": orphans })
    );
    Ok(())
}

fn safe_file_stem(user_id: &str) -> Result<&str> {
    let bad = user_id.is_empty()
        || user_id == "."
        || user_id == ".."
        || user_id.contains(['/', '\\', '\0']);
    if bad {
        return Err(Error::Integrity(format!(
            "user id {user_id:?} cannot be used as a file name"
        )));
    }
    Ok(user_id)
}

fn cmd_render(
    profiles_path: &Path,
    clusters_path: Option<&Path>,
    config: LayoutConfig,
    format: Format,
    graph_path: Option<&Path>,
    out_dir: &Path,
) -> Result<()> {
    let profiles = load_profiles(profiles_path)?;
    let records = match (config.mode, clusters_path) {
        (LayoutMode::Flat, _) => Vec::new(),
        (_, Some(p)) => load_cluster_sets(p)?,
        (mode, None) => {
            return Err(Error::Config(format!(
                "--clusters is required for {mode:?} layouts"
            )))
        }
    };
    let by_user: HashMap<&str, &ClusterSetRecord> =
        records.iter().map(|r| (r.user_id.as_str(), r)).collect();
    let labels = match graph_path {
        Some(g) => read_index(g)?.labels().clone(),
        None => Labels::new(),
    };
    let ext = match format {
        Format::Json => "json",
        Format::Html => "html",
    };

    let mut outputs = Vec::with_capacity(profiles.len());
    for profile in &profiles {
        let stem = safe_file_stem(&profile.user_id)?;
        let set = match config.mode {
            LayoutMode::Flat => None,
            _ => Some(
                by_user
                    .get(profile.user_id.as_str())
                    .ok_or_else(|| {
                        Error::Integrity(format!("no cluster set for user {}", profile.user_id))
                    })?
                    .cluster_set(),
            ),
        };
        let layout = render(profile, set.as_ref(), &config, &labels)?;
        let bytes = match format {
            Format::Json => to_json(&layout),
            Format::Html => to_html(&layout),
        };
        outputs.push((out_dir.join(format!("{stem}.{ext}")), bytes));
    }
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    for (path, bytes) in &outputs {
        write_atomic(path, bytes)?;
    }
    println!("{}", json!({ "rendered": outputs.len() }));
    Ok(())
}

fn cmd_annotate(docs: &Path, out: &Path, service_url: &str, confidence: f64) -> Result<()> {
    let docs = load_raw_documents(docs)?;
    let client = AnnotatorClient::new(service_url, confidence)?;
    let file = File::create(out).map_err(|e| Error::io(out, e))?;
    let mut writer = BufWriter::new(file);
    for doc in &docs {
        let annotated = client.annotate(doc)?;
        let line = serde_json::to_string(&annotated).expect("document serializes");
        writeln!(writer, "{line}")
            .and_then(|_| writer.flush())
            .map_err(|e| Error::io(out, e))?;
    }
    println!("{}", json!({ "annotated": docs.len() }));
    Ok(())
}
