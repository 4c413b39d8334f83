//! Lean diagnostics parsing, feedback rendering and submission assembly.

use std::sync::LazyLock;

use regex::Regex;

use super::LeanError;

static DIAGNOSTIC: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^(?:.*?):(\d+):(\d+):\s*(error|warning|info)(?:\([^)]*\))?:\s?(.*)$").unwrap()
});

static NOISE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\s*(?:$|✔|⚠|✖|info:|Build completed|\[\d+/\d+\])").unwrap());

/// Cap on errors listed in feedback.
pub const MAX_FEEDBACK_ERRORS: usize = 10;

#[derive(PartialEq)]
enum Current {
    None,
    Error,
    Other,
}

/// Extracts `file:line:col: error: message` diagnostics. Indented or
/// otherwise unmatched lines following an error are appended to its
/// message; warnings and infos are skipped. Stray lines before any
/// diagnostic are gathered into one trailing entry at line 0, column 0.
pub fn parse_errors(raw_output: &str) -> Vec<LeanError> {
    let mut errors: Vec<LeanError> = Vec::new();
    let mut stray: Vec<&str> = Vec::new();
    let mut current = Current::None;
    for line in raw_output.lines() {
        if let Some(c) = DIAGNOSTIC.captures(line) {
            if &c[3] == "error" {
                errors.push(LeanError {
                    line: c[1].parse().unwrap_or(0),
                    column: c[2].parse().unwrap_or(0),
                    message: c[4].trim_end().to_string(),
                });
                current = Current::Error;
            } else {
                current = Current::Other;
            }
            continue;
        }
        match current {
            Current::Error => {
                if !line.trim().is_empty() {
                    let last = errors.last_mut().expect("current error exists");
                    last.message.push('\n');
                    last.message.push_str(line.trim_end());
                }
            }
            Current::Other => {}
            Current::None => {
                if !NOISE.is_match(line) {
                    stray.push(line.trim_end());
                }
            }
        }
    }
    if !stray.is_empty() {
        errors.push(LeanError {
            line: 0,
            column: 0,
            message: stray.join("\n"),
        });
    }
    errors
}

/// Compact listing of errors with the offending source line, for the next
/// formalization prompt. Empty when there are no errors.
pub fn render_error_feedback(errors: &[LeanError], previous_code: &str) -> String {
    if errors.is_empty() {
        return String::new();
    }
    let source: Vec<&str> = previous_code.lines().collect();
    let mut out = String::from("The previous Lean code failed to check. Errors:\n");
    for e in errors.iter().take(MAX_FEEDBACK_ERRORS) {
        let mut message = e.message.lines().take(6).collect::<Vec<_>>().join("\n    ");
        if message.is_empty() {
            message = "(no message)".into();
        }
        out.push_str(&format!("- line {}, column {}: {}\n", e.line, e.column, message));
        if let Some(text) = (e.line as usize).checked_sub(1).and_then(|i| source.get(i)) {
            out.push_str(&format!("  {} | {}\n", e.line, text.trim_end()));
        }
    }
    if errors.len() > MAX_FEEDBACK_ERRORS {
        out.push_str(&format!("… and {} more\n", errors.len() - MAX_FEEDBACK_ERRORS));
    }
    out.trim_end().to_string()
}

fn is_import(line: &str) -> bool {
    line.trim_start().starts_with("import ")
}

/// Joins header, prefix and generated code into one file. Import lines from
/// all three are hoisted to the top, each kept once.
pub fn assemble_submission(header: &str, prefix: &str, code: &str) -> String {
    let mut imports: Vec<&str> = Vec::new();
    let mut sections: Vec<String> = Vec::new();
    for part in [header, prefix, code] {
        let mut body = Vec::new();
        for line in part.lines() {
            if is_import(line) {
                let line = line.trim();
                if !imports.contains(&line) {
                    imports.push(line);
                }
            } else {
                body.push(line.trim_end());
            }
        }
        let body = body.join("\n");
        let body = body.trim_matches('\n');
        if !body.trim().is_empty() {
            sections.push(body.to_string());
        }
    }
    let mut out = imports.join("\n");
    for s in sections {
        if !out.is_empty() {
            out.push_str("\n\n");
        }
        out.push_str(&s);
    }
    out.push('\n');
    out
}
