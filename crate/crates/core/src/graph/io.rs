//! On-disk formats: nodes as JSON lines, edges as CSV, embeddings as a
//! little-endian binary sidecar.
//!
//! Sidecar records are laid out back to back:
//!
//! ```text
//! id: u64 LE | dimension: u32 LE | dimension x f32 LE
//! ```

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, ErrorKind, Read, Write};
use std::path::Path;

use serde::Deserialize;

use super::{EmbeddingVector, GraphError};
use crate::model::{Edge, Node, NodeId, RelType};

pub const NODES_FILE: &str = "nodes.jsonl";
pub const EDGES_FILE: &str = "edges.csv";
pub const EMBEDDINGS_FILE: &str = "embeddings.bin";
pub const EDGES_HEADER: &str = "from_id,to_id,type";

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> GraphError + '_ {
    move |source| GraphError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn write_nodes<'a>(path: &Path, nodes: impl IntoIterator<Item = &'a Node>) -> Result<(), GraphError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    for node in nodes {
        let line = serde_json::to_string(node).expect("node serializes");
        writeln!(out, "{line}").map_err(io_err(path))?;
    }
    out.flush().map_err(io_err(path))
}

pub fn write_edges<'a>(path: &Path, edges: impl IntoIterator<Item = &'a Edge>) -> Result<(), GraphError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    writeln!(out, "{EDGES_HEADER}").map_err(io_err(path))?;
    for e in edges {
        writeln!(out, "{},{},{}", e.from_id, e.to_id, e.rel_type).map_err(io_err(path))?;
    }
    out.flush().map_err(io_err(path))
}

pub fn read_nodes(path: &Path) -> Result<Vec<Node>, GraphError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut nodes = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let node: Node = serde_json::from_str(&line).map_err(|e| GraphError::NodesLine {
            line: idx + 1,
            message: e.to_string(),
        })?;
        nodes.push(node);
    }
    Ok(nodes)
}

#[derive(Deserialize)]
struct EdgeRow {
    from_id: String,
    to_id: String,
    #[serde(rename = "type")]
    rel_type: String,
}

/// Reads an edges CSV. Surrounding spaces in fields are tolerated. Returned
/// edges carry their 1-based file line for error reporting.
pub fn read_edges(path: &Path) -> Result<Vec<(usize, Edge)>, GraphError> {
    let file = File::open(path).map_err(io_err(path))?;
    read_edges_from(file)
}

pub fn read_edges_from(input: impl Read) -> Result<Vec<(usize, Edge)>, GraphError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let mut edges = Vec::new();
    for row in reader.deserialize::<EdgeRow>() {
        let row = row.map_err(|e| GraphError::EdgesLine {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = edges.len() + 2;
        let parse_id = |s: &str| {
            s.parse::<NodeId>().map_err(|_| GraphError::EdgesLine {
                line,
                message: format!("invalid node id `{s}`"),
            })
        };
        let rel_type: RelType = row.rel_type.parse().map_err(|e: crate::model::UnknownRelType| GraphError::EdgesLine {
            line,
            message: e.to_string(),
        })?;
        edges.push((line, Edge::new(parse_id(&row.from_id)?, parse_id(&row.to_id)?, rel_type)));
    }
    Ok(edges)
}

pub fn write_embeddings<'a>(
    path: &Path,
    vectors: impl IntoIterator<Item = (NodeId, &'a EmbeddingVector)>,
) -> Result<(), GraphError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    for (id, v) in vectors {
        out.write_all(&id.to_le_bytes()).map_err(io_err(path))?;
        out.write_all(&(v.dimension() as u32).to_le_bytes()).map_err(io_err(path))?;
        for x in v.values() {
            out.write_all(&x.to_le_bytes()).map_err(io_err(path))?;
        }
    }
    out.flush().map_err(io_err(path))
}

/// Raw sidecar record; values are validated by the store on attach.
pub struct RawEmbedding {
    pub id: NodeId,
    pub values: Vec<f32>,
}

pub fn read_embeddings(path: &Path) -> Result<Vec<RawEmbedding>, GraphError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut input = BufReader::new(file);
    let mut records = Vec::new();
    loop {
        let mut id = [0u8; 8];
        if !read_exact_or_eof(&mut input, &mut id).map_err(io_err(path))? {
            break;
        }
        let id = NodeId::from_le_bytes(id);
        let mut dim = [0u8; 4];
        input.read_exact(&mut dim).map_err(|_| GraphError::Sidecar {
            id,
            message: "truncated record header".into(),
        })?;
        let dim = u32::from_le_bytes(dim) as usize;
        let mut raw = vec![0u8; dim * 4];
        input.read_exact(&mut raw).map_err(|_| GraphError::Sidecar {
            id,
            message: format!("truncated record: expected {dim} values"),
        })?;
        let values = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        records.push(RawEmbedding { id, values });
    }
    Ok(records)
}

/// Fills `buf` completely, or returns `Ok(false)` on a clean EOF before the
/// first byte.
fn read_exact_or_eof(input: &mut impl Read, buf: &mut [u8]) -> io::Result<bool> {
    let mut filled = 0;
    while filled < buf.len() {
        match input.read(&mut buf[filled..]) {
            Ok(0) if filled == 0 => return Ok(false),
            Ok(0) => return Err(io::Error::new(ErrorKind::UnexpectedEof, "truncated embeddings record")),
            Ok(n) => filled += n,
            Err(e) if e.kind() == ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edges_tolerate_spaces() {
        let csv = "from_id, to_id, type\n149, 167, LINK\n149, 41289, PROOF_TECHNIQUE\n67015,6780, USES_DEFINITION\n";
        let edges = read_edges_from(csv.as_bytes()).unwrap();
        assert_eq!(edges.len(), 3);
        assert_eq!(edges[0], (2, Edge::new(149, 167, RelType::Link)));
        assert_eq!(edges[2], (4, Edge::new(67015, 6780, RelType::UsesDefinition)));
    }

    #[test]
    fn bad_rel_type_names_line() {
        let csv = "from_id,to_id,type\n1,2,LINK\n1,3,CITES\n";
        match read_edges_from(csv.as_bytes()) {
            Err(GraphError::EdgesLine { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn sidecar_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(EMBEDDINGS_FILE);
        let a = EmbeddingVector::new(vec![1.0, -2.5, 3.25]).unwrap();
        let b = EmbeddingVector::new(vec![0.5, 0.0, 1e-7]).unwrap();
        write_embeddings(&path, [(7, &a), (u64::MAX, &b)]).unwrap();
        assert_eq!(std::fs::metadata(&path).unwrap().len(), 2 * (8 + 4 + 12));
        let back = read_embeddings(&path).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].id, 7);
        assert_eq!(back[0].values, a.values());
        assert_eq!(back[1].id, u64::MAX);
        assert_eq!(back[1].values, b.values());
    }

    #[test]
    fn truncated_sidecar_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(EMBEDDINGS_FILE);
        let mut bytes = 1u64.to_le_bytes().to_vec();
        bytes.extend(2u32.to_le_bytes());
        bytes.extend(1f32.to_le_bytes());
        std::fs::write(&path, bytes).unwrap();
        assert!(matches!(read_embeddings(&path), Err(GraphError::Sidecar { id: 1, .. })));
    }
}
