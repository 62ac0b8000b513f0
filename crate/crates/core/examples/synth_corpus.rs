//! Writes the synthetic benchmark corpus used by the end-to-end tests.
//!
//! ```text
//! cargo run --example synth_corpus -- crates/core/tests/fixtures/synthetic
//! ```
//!
//! The corpus is a layered category graph (with a few upward cycles) and 18
//! users whose profiles range from 5 to 94 topics.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::PathBuf;

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

const TOP: usize = 30;
const MID: usize = 300;
const LEAF: usize = 1500;
const ARTICLES: usize = 4000;
const USERS: usize = 18;

fn main() -> std::io::Result<()> {
    let out: PathBuf = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "crates/core/tests/fixtures/synthetic".into())
        .into();
    std::fs::create_dir_all(&out)?;
    let mut rng = StdRng::seed_from_u64(0x70_91_6e);

    let top = |i: usize| format!("cat:Top_{i:02}");
    let mid = |i: usize| format!("cat:Area_{i:03}");
    let leaf = |i: usize| format!("cat:Topic_group_{i:04}");
    let article = |i: usize| format!("art:Entity_{i:04}");

    let mut broader = BTreeSet::new();
    let mut mid_top = Vec::with_capacity(MID);
    for m in 0..MID {
        let t = m % TOP;
        mid_top.push(t);
        broader.insert((mid(m), top(t)));
        if rng.gen_bool(0.3) {
            broader.insert((mid(m), top(rng.gen_range(0..TOP))));
        }
    }
    let mut leaf_mid = Vec::with_capacity(LEAF);
    for l in 0..LEAF {
        let m = l % MID;
        leaf_mid.push(m);
        broader.insert((leaf(l), mid(m)));
        for _ in 0..rng.gen_range(0..2) {
            broader.insert((leaf(l), mid(rng.gen_range(0..MID))));
        }
    }
    // A handful of folksonomy cycles.
    for _ in 0..20 {
        let t = rng.gen_range(0..TOP);
        broader.insert((top(t), mid(rng.gen_range(0..MID))));
    }

    let mut subject = BTreeSet::new();
    let mut article_top = Vec::with_capacity(ARTICLES);
    for a in 0..ARTICLES {
        let l = a % LEAF;
        article_top.push(mid_top[leaf_mid[l]]);
        subject.insert((article(a), leaf(l)));
        for _ in 0..rng.gen_range(0..3) {
            // Mostly stay near the home leaf so themes stay coherent.
            let other = (l + rng.gen_range(1..40)) % LEAF;
            subject.insert((article(a), leaf(other)));
        }
    }

    let mut labels = String::new();
    for t in 0..TOP {
        let _ = writeln!(labels, "{}\tTop level {t}", top(t));
    }

    let mut docs = String::new();
    for u in 0..USERS {
        let size = match u {
            0 => 5,
            1 => 94,
            _ => rng.gen_range(6..94),
        };
        let theme = rng.gen_range(0..TOP);
        let mut pool: Vec<usize> = (0..ARTICLES).filter(|a| article_top[*a] == theme).collect();
        pool.shuffle(&mut rng);
        let mut chosen: Vec<usize> = pool.into_iter().take(size * 3 / 4).collect();
        while chosen.len() < size {
            let a = rng.gen_range(0..ARTICLES);
            if !chosen.contains(&a) {
                chosen.push(a);
            }
        }
        let n_docs = rng.gen_range(3..=5);
        let mut doc_topics: Vec<BTreeSet<String>> = vec![BTreeSet::new(); n_docs];
        for &a in &chosen {
            let home = rng.gen_range(0..n_docs);
            doc_topics[home].insert(article(a));
            for (d, topics) in doc_topics.iter_mut().enumerate() {
                if d != home && rng.gen_bool(0.25) {
                    topics.insert(article(a));
                }
            }
        }
        for (d, topics) in doc_topics.iter().enumerate() {
            let record = serde_json::json!({
                "doc_id": format!("u{u:02}-d{d}"),
                "user_id": format!("user{u:02}"),
                "topics": topics,
            });
            let _ = writeln!(docs, "{record}");
        }
    }

    let tsv = |edges: &BTreeSet<(String, String)>| {
        edges.iter().fold(String::new(), |mut s, (a, b)| {
            let _ = writeln!(s, "{a}\t{b}");
            s
        })
    };
    std::fs::write(out.join("subject.tsv"), tsv(&subject))?;
    std::fs::write(out.join("broader.tsv"), tsv(&broader))?;
    std::fs::write(out.join("labels.tsv"), labels)?;
    std::fs::write(out.join("docs.jsonl"), docs)?;
    Ok(())
}
