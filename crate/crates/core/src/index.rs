//! Binary graph index: the `TOPIGEN1` magic, a little-endian `u32` format
//! version, then the bincode-encoded graph.

use std::fs;
use std::path::Path;

use crate::graph::CategoryGraph;
use crate::io_util::write_atomic;
use crate::{Error, Result};

pub const MAGIC: &[u8; 8] = b"TOPIGEN1";
pub const FORMAT_VERSION: u32 = 1;

pub fn encode(graph: &CategoryGraph) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(64);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    bincode::serialize_into(&mut out, graph).map_err(|e| Error::Index(e.to_string()))?;
    Ok(out)
}

pub fn decode(bytes: &[u8]) -> Result<CategoryGraph> {
    if bytes.len() < 12 || &bytes[..8] != MAGIC {
        return Err(Error::Index("missing TOPIGEN1 header".into()));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
    if version != FORMAT_VERSION {
        return Err(Error::IndexVersion {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let graph: CategoryGraph =
        bincode::deserialize(&bytes[12..]).map_err(|e| Error::Index(e.to_string()))?;
    graph.check().map_err(Error::Index)?;
    Ok(graph)
}

pub fn write_index(graph: &CategoryGraph, path: &Path) -> Result<()> {
    write_atomic(path, &encode(graph)?)
}

pub fn read_index(path: &Path) -> Result<CategoryGraph> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{GraphBuilder, NodeId};

    fn sample() -> CategoryGraph {
        let mut b = GraphBuilder::new();
        let id = |s: &str| NodeId::new(s).unwrap();
        b.add_subject(id("dbr:Pearl"), id("dbc:Gemstones"));
        b.add_broader(id("dbc:Gemstones"), id("dbc:Minerals"));
        b.add_label(id("dbr:Pearl"), "Pearl".into());
        b.build().unwrap().0
    }

    #[test]
    fn round_trip() {
        let g = sample();
        let bytes = encode(&g).unwrap();
        assert_eq!(&bytes[..8], b"TOPIGEN1");
        assert_eq!(decode(&bytes).unwrap(), g);
    }

    #[test]
    fn version_mismatch_is_rejected() {
        let mut bytes = encode(&sample()).unwrap();
        bytes[8..12].copy_from_slice(&7u32.to_le_bytes());
        assert!(matches!(
            decode(&bytes),
            Err(Error::IndexVersion {
                found: 7,
                expected: 1
            })
        ));
    }

    #[test]
    fn bad_magic_and_truncation() {
        assert!(matches!(
            decode(b"NOTANIDX\x01\0\0\0"),
            Err(Error::Index(_))
        ));
        let bytes = encode(&sample()).unwrap();
        assert!(matches!(
            decode(&bytes[..bytes.len() - 3]),
            Err(Error::Index(_))
        ));
    }
}
