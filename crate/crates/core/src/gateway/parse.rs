//! Parsers for model output: Lean code blocks and judge scores.

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("no fenced code block in model response")]
pub struct ExtractError {
    pub raw: String,
}

struct Block<'a> {
    lang: String,
    lines: Vec<&'a str>,
}

fn fenced_blocks(text: &str) -> Vec<Block<'_>> {
    let mut blocks = Vec::new();
    let mut current: Option<Block<'_>> = None;
    for line in text.lines() {
        let fence = line.trim_start().strip_prefix("```");
        match (&mut current, fence) {
            (None, Some(info)) => {
                current = Some(Block {
                    lang: info.trim().to_ascii_lowercase(),
                    lines: Vec::new(),
                });
            }
            (Some(_), Some(rest)) if rest.trim().is_empty() => {
                blocks.extend(current.take());
            }
            (Some(block), _) => block.lines.push(line),
            (None, None) => {}
        }
    }
    // An unclosed fence runs to the end of the response.
    blocks.extend(current);
    blocks
}

/// Returns the body of the first `lean4`/`lean` fenced block, falling back
/// to the first unlabeled block and then to the first block of any kind.
/// Trailing whitespace is trimmed.
pub fn extract_lean_block(response: &str) -> Result<String, ExtractError> {
    let text = response.replace("\r\n", "\n");
    let blocks = fenced_blocks(&text);
    let pick = blocks
        .iter()
        .find(|b| b.lang == "lean4" || b.lang == "lean")
        .or_else(|| blocks.iter().find(|b| b.lang.is_empty()))
        .or_else(|| blocks.first());
    match pick {
        Some(b) => Ok(b.lines.join("\n").trim_end().to_string()),
        None => Err(ExtractError {
            raw: response.to_string(),
        }),
    }
}

/// Wraps code in the output format the formalization prompt asks for.
pub fn wrap_lean_block(code: &str) -> String {
    format!("# Start\n```lean4\n{code}\n```\n# End")
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("no `SCORE: <n>` line in judge response")]
pub struct ScoreError {
    pub raw: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgeScore {
    pub score: u8,
    pub justification: String,
    /// Set when the stated score had to be rounded or clamped.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

static SCORE_LINE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)^[\s*_#>]*score[\s*_]*[:=][\s*_]*(-?\d+(?:\.\d+)?)\s*(?:/\s*10)?[\s*_.]*$").unwrap()
});

/// Reads the last `SCORE: n` line. Out-of-range or fractional scores are
/// clamped and rounded into 0..=10 and a warning is attached. Text before
/// the score line is the justification.
pub fn parse_judge_score(response: &str) -> Result<JudgeScore, ScoreError> {
    let text = response.replace("\r\n", "\n");
    let lines: Vec<&str> = text.lines().collect();
    let Some((idx, raw)) = lines
        .iter()
        .enumerate()
        .rev()
        .find_map(|(i, l)| SCORE_LINE.captures(l).map(|c| (i, c[1].to_string())))
    else {
        return Err(ScoreError {
            raw: response.to_string(),
        });
    };
    let value: f64 = raw.parse().map_err(|_| ScoreError {
        raw: response.to_string(),
    })?;
    let clamped = value.round().clamp(0.0, 10.0);
    let warning = if clamped != value {
        tracing::warn!(stated = %raw, used = clamped, "judge score adjusted");
        Some(format!("score {raw} adjusted to {clamped}"))
    } else {
        None
    };
    Ok(JudgeScore {
        score: clamped as u8,
        justification: lines[..idx].join("\n").trim().to_string(),
        warning,
    })
}
