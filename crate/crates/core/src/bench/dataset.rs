//! Benchmark dataset loading.

use std::collections::HashSet;
use std::io::BufRead;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{Map, Value};

use crate::model::Problem;

/// Alternate field names used by public datasets, mapped to ours.
pub const FIELD_ALIASES: &[(&str, &str)] = &[
    ("id", "name"),
    ("problem_name", "name"),
    ("informal_stmt", "informal_statement"),
    ("nl_statement", "informal_statement"),
    ("natural_language_statement", "informal_statement"),
    ("informal_problem", "informal_statement"),
    ("formal_stmt", "formal_statement"),
    ("lean4_statement", "formal_statement"),
    ("lean_statement", "formal_statement"),
    ("src_header", "header"),
    ("lean_header", "header"),
    ("prefix", "informal_prefix"),
];

/// Seed for the fixed MUSTARD subset sample.
pub const MUSTARD_SUBSET_SEED: u64 = 250;
pub const MUSTARD_SUBSET_SIZE: usize = 250;

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {} invalid record(s):\n{}", .errors.len(), .errors.join("\n"))]
    Invalid { path: String, errors: Vec<String> },
    #[error("unknown dataset format `{0}` (expected minif2f, proofnet, mustard or jsonl)")]
    UnknownFormat(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetFormat {
    MiniF2F,
    ProofNet,
    Mustard,
    Jsonl,
}

impl std::str::FromStr for DatasetFormat {
    type Err = DatasetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "minif2f" => Ok(DatasetFormat::MiniF2F),
            "proofnet" => Ok(DatasetFormat::ProofNet),
            "mustard" | "mustardsauce" => Ok(DatasetFormat::Mustard),
            "jsonl" | "generic" => Ok(DatasetFormat::Jsonl),
            other => Err(DatasetError::UnknownFormat(other.to_string())),
        }
    }
}

fn canonicalize(mut obj: Map<String, Value>) -> Map<String, Value> {
    for (alias, canonical) in FIELD_ALIASES {
        if !obj.contains_key(*canonical) {
            if let Some(v) = obj.remove(*alias) {
                obj.insert(canonical.to_string(), v);
            }
        }
    }
    obj
}

fn parse_record(line: &str) -> Result<Problem, String> {
    let value: Value = serde_json::from_str(line).map_err(|e| format!("not valid JSON: {e}"))?;
    let Value::Object(obj) = value else {
        return Err("record is not a JSON object".into());
    };
    let obj = canonicalize(obj);
    match obj.get("name") {
        Some(Value::String(s)) if !s.trim().is_empty() => {}
        Some(Value::Number(_)) => {}
        _ => return Err("missing name".into()),
    }
    match obj.get("formal_statement") {
        Some(Value::String(s)) if !s.trim().is_empty() => {}
        _ => return Err("missing formal_statement".into()),
    }
    let mut obj = obj;
    if let Some(Value::Number(n)) = obj.get("name") {
        let n = n.to_string();
        obj.insert("name".into(), Value::String(n));
    }
    if let Some(Value::Null) = obj.get("goal") {
        obj.remove("goal");
    }
    serde_json::from_value(Value::Object(obj)).map_err(|e| e.to_string())
}

/// Parses a JSONL dataset from a reader. Either every record loads or the
/// error lists every bad line.
pub fn parse_dataset(input: impl BufRead, origin: &str) -> Result<Vec<Problem>, DatasetError> {
    let mut problems = Vec::new();
    let mut errors = Vec::new();
    let mut names = HashSet::new();
    for (idx, line) in input.lines().enumerate() {
        let n = idx + 1;
        let line = line.map_err(|source| DatasetError::Io {
            path: origin.to_string(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        match parse_record(&line) {
            Ok(p) => {
                if !names.insert(p.name.clone()) {
                    errors.push(format!("line {n}: duplicate name `{}`", p.name));
                }
                problems.push(p);
            }
            Err(e) => errors.push(format!("line {n}: {e}")),
        }
    }
    if errors.is_empty() {
        Ok(problems)
    } else {
        Err(DatasetError::Invalid {
            path: origin.to_string(),
            errors,
        })
    }
}

/// Loads a dataset file. With the MUSTARD format hint the fixed
/// 250-problem subset is returned.
pub fn load_dataset(path: &Path, format: Option<DatasetFormat>) -> Result<Vec<Problem>, DatasetError> {
    let origin = path.display().to_string();
    let file = std::fs::File::open(path).map_err(|source| DatasetError::Io {
        path: origin.clone(),
        source,
    })?;
    let problems = parse_dataset(std::io::BufReader::new(file), &origin)?;
    tracing::info!(path = %origin, problems = problems.len(), "dataset loaded");
    Ok(match format {
        Some(DatasetFormat::Mustard) => mustard_subset(problems, MUSTARD_SUBSET_SIZE, MUSTARD_SUBSET_SEED),
        _ => problems,
    })
}

fn is_theorem_proving(p: &Problem) -> bool {
    ["problem_type", "type", "task"]
        .iter()
        .find_map(|k| p.extra.get(*k).and_then(Value::as_str))
        .is_none_or(|t| {
            let t = t.to_ascii_lowercase();
            t.contains("theorem") || t.contains("proof") || t.contains("proving")
        })
}

/// Keeps theorem-proving items, orders them by name and draws `n` with a
/// seeded generator. The sample is returned in name order.
pub fn mustard_subset(problems: Vec<Problem>, n: usize, seed: u64) -> Vec<Problem> {
    let mut pool: Vec<Problem> = problems.into_iter().filter(is_theorem_proving).collect();
    pool.sort_by(|a, b| a.name.cmp(&b.name));
    if pool.len() <= n {
        return pool;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked: Vec<Problem> = pool.choose_multiple(&mut rng, n).cloned().collect();
    picked.sort_by(|a, b| a.name.cmp(&b.name));
    picked
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Vec<Problem>, DatasetError> {
        parse_dataset(text.as_bytes(), "mem")
    }

    #[test]
    fn aliases_and_extras() {
        let p = parse(r#"{"id":"a","nl_statement":"Show x.","formal_statement":"theorem a : True := by","src_header":"import Mathlib","tags":[1]}"#)
            .unwrap();
        assert_eq!(p[0].name, "a");
        assert_eq!(p[0].informal_statement, "Show x.");
        assert_eq!(p[0].header, "import Mathlib");
        assert_eq!(p[0].extra["tags"], serde_json::json!([1]));
    }

    #[test]
    fn atomic_failure_lists_all_bad_lines() {
        let err = parse("{\"name\":\"a\",\"formal_statement\":\"t\"}\n{\"name\":\"b\"}\n\nnope\n{\"name\":\"a\",\"formal_statement\":\"u\"}\n").unwrap_err();
        match err {
            DatasetError::Invalid { errors, .. } => {
                assert_eq!(errors.len(), 3);
                assert!(errors[0].starts_with("line 2: missing formal_statement"));
                assert!(errors[1].starts_with("line 4:"));
                assert!(errors[2].contains("duplicate name `a`"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn mustard_subset_is_reproducible() {
        let lines: String = (0..40)
            .map(|i| {
                let kind = if i % 4 == 0 { "word problem" } else { "theorem proving" };
                format!("{{\"name\":\"m{i:02}\",\"formal_statement\":\"t\",\"problem_type\":\"{kind}\"}}\n")
            })
            .collect();
        let all = parse(&lines).unwrap();
        let a = mustard_subset(all.clone(), 10, MUSTARD_SUBSET_SEED);
        let b = mustard_subset(all.clone(), 10, MUSTARD_SUBSET_SEED);
        assert_eq!(a, b);
        assert_eq!(a.len(), 10);
        assert!(a.iter().all(is_theorem_proving));
        assert!(a.windows(2).all(|w| w[0].name < w[1].name));
        assert_eq!(mustard_subset(all, 100, 1).len(), 30);
    }
}
