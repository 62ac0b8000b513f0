//! Streaming reader for the subset of N-Triples needed to build a category
//! graph: `dct:subject` and `skos:broader` triples. Everything else is
//! counted and skipped.

use std::path::Path;

use log::warn;

use crate::graph::{CategoryGraph, GraphBuilder, IngestSummary, NodeId};
use crate::io_util::{file_label, open_lines};
use crate::{Error, Result};

const SUBJECT_SUFFIX: &str = "/terms/subject";
const BROADER_SUFFIX: &str = "/core#broader";

#[derive(Debug, Clone, PartialEq, Eq)]
enum Term<'a> {
    Iri(&'a str),
    Blank(&'a str),
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Retained {
    Subject,
    Broader,
}

fn retained(predicate: &str) -> Option<Retained> {
    if predicate.ends_with(SUBJECT_SUFFIX) {
        Some(Retained::Subject)
    } else if predicate.ends_with(BROADER_SUFFIX) {
        Some(Retained::Broader)
    } else {
        None
    }
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_ws(&mut self) {
        let rest = &self.src[self.pos..];
        self.pos += rest.len() - rest.trim_start_matches([' ', '\t']).len();
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn term(&mut self) -> std::result::Result<Term<'a>, String> {
        self.skip_ws();
        let rest = &self.src[self.pos..];
        match self.peek() {
            Some('<') => {
                let end = rest.find('>').ok_or("unterminated IRI")?;
                let iri = &rest[1..end];
                if iri.is_empty() || iri.chars().any(|c| c.is_whitespace() || c == '<') {
                    return Err(format!("invalid IRI <{iri}>"));
                }
                self.pos += end + 1;
                Ok(Term::Iri(iri))
            }
            Some('_') if rest.starts_with("_:") => {
                let end = rest.find(|c: char| c.is_whitespace()).unwrap_or(rest.len());
                if end <= 2 {
                    return Err("empty blank node label".into());
                }
                self.pos += end;
                Ok(Term::Blank(&rest[2..end]))
            }
            Some('"') => {
                let mut escaped = false;
                let mut close = None;
                for (i, c) in rest.char_indices().skip(1) {
                    match c {
                        _ if escaped => escaped = false,
                        '\\' => escaped = true,
                        '"' => {
                            close = Some(i);
                            break;
                        }
                        _ => {}
                    }
                }
                let close = close.ok_or("unterminated literal")?;
                self.pos += close + 1;
                match self.peek() {
                    Some('@') => {
                        let rest = &self.src[self.pos..];
                        let end = rest.find(|c: char| c.is_whitespace()).unwrap_or(rest.len());
                        self.pos += end;
                    }
                    Some('^') => {
                        if !self.src[self.pos..].starts_with("^^") {
                            return Err("malformed datatype".into());
                        }
                        self.pos += 2;
                        match self.term()? {
                            Term::Iri(_) => {}
                            _ => return Err("datatype must be an IRI".into()),
                        }
                    }
                    _ => {}
                }
                Ok(Term::Literal)
            }
            Some(c) => Err(format!("unexpected character {c:?}")),
            None => Err("unexpected end of line".into()),
        }
    }

    fn end(&mut self) -> std::result::Result<(), String> {
        self.skip_ws();
        if self.peek() != Some('.') {
            return Err("missing terminal '.'".into());
        }
        self.pos += 1;
        self.skip_ws();
        match self.peek() {
            None | Some('#') => Ok(()),
            Some(c) => Err(format!("unexpected {c:?} after terminal '.'")),
        }
    }
}

fn parse_line(line: &str) -> std::result::Result<(Term<'_>, Term<'_>, Term<'_>), String> {
    let mut cur = Cursor { src: line, pos: 0 };
    let s = cur.term()?;
    let p = cur.term()?;
    let o = cur.term()?;
    cur.end()?;
    if !matches!(p, Term::Iri(_)) {
        return Err("predicate must be an IRI".into());
    }
    if matches!(s, Term::Literal) {
        return Err("subject cannot be a literal".into());
    }
    Ok((s, p, o))
}

fn mentions_retained(line: &str) -> bool {
    line.contains(&format!("{SUBJECT_SUFFIX}>")) || line.contains(&format!("{BROADER_SUFFIX}>"))
}

/// Line-level outcome, exposed for tests and for callers streaming their own
/// input.
#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct TripleCounts {
    pub subject: usize,
    pub broader: usize,
    pub skipped: usize,
    pub invalid_skipped: usize,
}

/// Feeds N-Triples lines into `builder`. `file` names the source in errors.
pub fn read_lines<I>(lines: I, file: &str, builder: &mut GraphBuilder) -> Result<TripleCounts>
where
    I: IntoIterator<Item = (usize, String)>,
{
    let mut counts = TripleCounts::default();
    for (line_no, raw) in lines {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (s, p, o) = match parse_line(line) {
            Ok(t) => t,
            Err(msg) if mentions_retained(line) => {
                return Err(Error::parse(file, line_no, msg));
            }
            Err(msg) => {
                warn!("{file}:{line_no}: skipping invalid triple: {msg}");
                counts.skipped += 1;
                counts.invalid_skipped += 1;
                continue;
            }
        };
        let Term::Iri(pred) = p else { unreachable!() };
        let Some(kind) = retained(pred) else {
            counts.skipped += 1;
            continue;
        };
        let (Term::Iri(s), Term::Iri(o)) = (s, o) else {
            return Err(Error::parse(
                file,
                line_no,
                "subject and object of a retained triple must be IRIs",
            ));
        };
        let node =
            |iri: &str| NodeId::new(iri).map_err(|e| Error::parse(file, line_no, e.to_string()));
        match kind {
            Retained::Subject => {
                builder.add_subject(node(s)?, node(o)?);
                counts.subject += 1;
            }
            Retained::Broader => {
                builder.add_broader(node(s)?, node(o)?);
                counts.broader += 1;
            }
        }
    }
    Ok(counts)
}

/// Loads subject and broader edges from an N-Triples dump. IRIs become node
/// ids verbatim, without angle brackets.
pub fn ingest_ntriples_subset(path: &Path) -> Result<(CategoryGraph, IngestSummary)> {
    let mut builder = GraphBuilder::new();
    let counts = read_file(path, &mut builder)?;
    let (graph, mut summary) = builder.build()?;
    summary.skipped_triples = Some(counts.skipped);
    summary.invalid_skipped_triples = Some(counts.invalid_skipped);
    Ok((graph, summary))
}

pub(crate) fn read_file(path: &Path, builder: &mut GraphBuilder) -> Result<TripleCounts> {
    let name = file_label(path);
    let mut lines = Vec::new();
    let mut counts = TripleCounts::default();
    // Stream in blocks to bound memory on large dumps.
    for (no, line) in open_lines(path)? {
        lines.push((no, line.map_err(|e| Error::io(path, e))?));
        if lines.len() == 8192 {
            merge(&mut counts, read_lines(lines.drain(..), &name, builder)?);
        }
    }
    merge(&mut counts, read_lines(lines, &name, builder)?);
    Ok(counts)
}

fn merge(total: &mut TripleCounts, part: TripleCounts) {
    total.subject += part.subject;
    total.broader += part.broader;
    total.skipped += part.skipped;
    total.invalid_skipped += part.invalid_skipped;
}

#[cfg(test)]
mod tests {
    use super::*;

    const SUBJ: &str = "<http://purl.org/dc/terms/subject>";
    const BROADER: &str = "<http://www.w3.org/2004/02/skos/core#broader>";

    fn run(text: &str) -> Result<(TripleCounts, CategoryGraph)> {
        let mut b = GraphBuilder::new();
        let lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.to_string()));
        let counts = read_lines(lines, "test.nt", &mut b)?;
        Ok((counts, b.build()?.0))
    }

    #[test]
    fn subject_triple_becomes_edge() {
        let (counts, g) = run(&format!(
            "<http://dbpedia.org/resource/Pearl> {SUBJ} <http://dbpedia.org/resource/Category:Gemstones> ."
        ))
        .unwrap();
        assert_eq!(counts.subject, 1);
        assert_eq!(g.subject_edge_count(), 1);
        assert_eq!(
            g.parents("http://dbpedia.org/resource/Pearl")[0].as_str(),
            "http://dbpedia.org/resource/Category:Gemstones"
        );
    }

    #[test]
    fn label_triple_is_skipped() {
        let (counts, g) = run(
            "<http://dbpedia.org/resource/Pearl> <http://www.w3.org/2000/01/rdf-schema#label> \"Pearl\"@en .",
        )
        .unwrap();
        assert_eq!(counts.skipped, 1);
        assert_eq!(counts.invalid_skipped, 0);
        assert_eq!(g.node_count(), 0);
    }

    #[test]
    fn typed_literals_and_blank_nodes_are_skipped() {
        let (counts, _) = run(
            "_:b1 <http://ex.org/p> \"4\"^^<http://www.w3.org/2001/XMLSchema#integer> .\n\
             <http://ex.org/s> <http://ex.org/p> \"a \\\"quoted\\\" word\" . # trailing comment",
        )
        .unwrap();
        assert_eq!(counts.skipped, 2);
        assert_eq!(counts.invalid_skipped, 0);
    }

    #[test]
    fn invalid_skipped_triple_only_warns() {
        let (counts, _) = run("<http://ex.org/s> <http://ex.org/p> \"open literal .").unwrap();
        assert_eq!(counts.skipped, 1);
        assert_eq!(counts.invalid_skipped, 1);
    }

    #[test]
    fn retained_triple_missing_dot_is_error() {
        let text = format!("# header\n<http://ex.org/c1> {BROADER} <http://ex.org/c2>");
        match run(&text) {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 2);
                assert!(message.contains("terminal"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn retained_triple_unterminated_iri_is_error() {
        let text = format!("<http://ex.org/a {SUBJ} <http://ex.org/c> .");
        // The unterminated subject swallows the predicate, so the subject IRI
        // is rejected for containing whitespace.
        assert!(matches!(run(&text), Err(Error::Parse { line: 1, .. })));
        let text = format!("<http://ex.org/a> {SUBJ} <http://ex.org/c .");
        assert!(matches!(run(&text), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn retained_triple_with_literal_object_is_error() {
        let text = format!("<http://ex.org/a> {SUBJ} \"Gems\" .");
        assert!(matches!(run(&text), Err(Error::Parse { line: 1, .. })));
    }
}
