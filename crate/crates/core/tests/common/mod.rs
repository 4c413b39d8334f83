#![allow(dead_code)]

use std::collections::{BTreeSet, HashSet};
use std::path::{Path, PathBuf};

use proofgraph::graph::{EmbeddingVector, GraphStore};
use proofgraph::model::{Edge, Node, NodeId, NodeType, RelType};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(rel)
}

/// A random store description, kept alongside the store so oracles can
/// work from the raw parts.
pub struct RandomGraph {
    pub store: GraphStore,
    pub vectors: Vec<Vec<f32>>,
    pub edges: Vec<(NodeId, NodeId, RelType)>,
}

/// Small-integer components make exact score ties common.
pub fn random_vector(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f32> {
    loop {
        let v: Vec<f32> = (0..dim).map(|_| rng.gen_range(-3i32..=3) as f32).collect();
        if v.iter().any(|x| *x != 0.0) {
            return v;
        }
    }
}

pub fn random_graph(seed: u64, max_nodes: usize, max_dim: usize) -> RandomGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=max_nodes);
    let dim = rng.gen_range(1..=max_dim);
    let mut store = GraphStore::new();
    let mut vectors = Vec::new();
    for id in 0..n as u64 {
        store
            .add_node(Node {
                id,
                node_type: NodeType::Theorem,
                title: format!("T{id}"),
                name: format!("t{id}"),
                content: String::new(),
            })
            .unwrap();
        let v = random_vector(&mut rng, dim);
        store.set_embedding(id, v.clone()).unwrap();
        vectors.push(v);
    }
    let mut seen = HashSet::new();
    let mut edges = Vec::new();
    if n > 1 {
        for _ in 0..rng.gen_range(0..=3 * n) {
            let a = rng.gen_range(0..n as u64);
            let b = rng.gen_range(0..n as u64);
            let t = RelType::ALL[rng.gen_range(0..RelType::ALL.len())];
            if a != b && seen.insert((a, b, t)) {
                store
                    .add_edge(Edge {
                        from_id: a,
                        to_id: b,
                        rel_type: t,
                    })
                    .unwrap();
                edges.push((a, b, t));
            }
        }
    }
    store.seal();
    RandomGraph { store, vectors, edges }
}

/// Cosine via explicit normalization, in f64.
pub fn oracle_cosine(a: &[f32], b: &[f32]) -> f64 {
    let a: Vec<f64> = a.iter().map(|x| *x as f64).collect();
    let b: Vec<f64> = b.iter().map(|x| *x as f64).collect();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    a.iter().zip(&b).map(|(x, y)| (x / na) * (y / nb)).sum::<f64>().clamp(-1.0, 1.0)
}

/// Same formula the library documents (dot over product of norms); used
/// where exact tie handling must agree.
pub fn oracle_score(a: &[f32], b: &[f32]) -> f64 {
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for i in 0..a.len() {
        dot += a[i] as f64 * b[i] as f64;
        na += a[i] as f64 * a[i] as f64;
        nb += b[i] as f64 * b[i] as f64;
    }
    (dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0)
}

fn oracle_rank(mut scored: Vec<(NodeId, f64)>) -> Vec<(NodeId, f64)> {
    scored.sort_by(|a, b| {
        if a.1 > b.1 {
            std::cmp::Ordering::Less
        } else if a.1 < b.1 {
            std::cmp::Ordering::Greater
        } else {
            a.0.cmp(&b.0)
        }
    });
    scored
}

/// Full sort of every node, then the first `k`.
pub fn oracle_top_k(g: &RandomGraph, q: &[f32], k: usize) -> Vec<(NodeId, f64)> {
    let scored = g.vectors.iter().enumerate().map(|(i, v)| (i as NodeId, oracle_score(q, v))).collect();
    oracle_rank(scored).into_iter().take(k).collect()
}

/// Breadth-first search over an undirected adjacency built from the raw
/// edge list, sorting each hop's unvisited neighbors in full.
pub fn oracle_expand(g: &RandomGraph, q: &[f32], seeds: &[NodeId], depth: usize, k: usize, types: Option<&[RelType]>) -> Vec<(NodeId, usize)> {
    let n = g.vectors.len();
    let mut adj = vec![BTreeSet::new(); n];
    for &(a, b, t) in &g.edges {
        if types.is_none_or(|ts| ts.contains(&t)) {
            adj[a as usize].insert(b);
            adj[b as usize].insert(a);
        }
    }
    let mut visited = vec![false; n];
    let mut out = Vec::new();
    let mut frontier = Vec::new();
    for &s in seeds {
        if !visited[s as usize] {
            visited[s as usize] = true;
            out.push((s, 0));
            frontier.push(s);
        }
    }
    for hop in 1..=depth {
        let mut cand = BTreeSet::new();
        for &f in &frontier {
            for &m in &adj[f as usize] {
                if !visited[m as usize] {
                    cand.insert(m);
                }
            }
        }
        let scored = cand.into_iter().map(|id| (id, oracle_score(q, &g.vectors[id as usize]))).collect();
        let kept: Vec<_> = oracle_rank(scored).into_iter().take(k).collect();
        if kept.is_empty() {
            break;
        }
        frontier = kept.iter().map(|(id, _)| *id).collect();
        for (id, _) in kept {
            visited[id as usize] = true;
            out.push((id, hop));
        }
    }
    out
}

pub fn ev(v: &[f32]) -> EmbeddingVector {
    EmbeddingVector::new(v.to_vec()).unwrap()
}
