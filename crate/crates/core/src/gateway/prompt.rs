//! Prompt templates and rendering.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::Problem;
use crate::retrieval::RetrievalContext;

const INFORMAL: &str = include_str!("../../templates/informal.txt");
const FORMALIZE: &str = include_str!("../../templates/formalize.txt");
const JUDGE: &str = include_str!("../../templates/judge_v1.txt");

const INFORMAL_ROLE: &str = "You are a mathematics expert focused on generating clear informal proofs.";
const FORMALIZE_ROLE: &str = "You are a Lean 4 code generator.";
const JUDGE_ROLE: &str = "You are a strict reviewer of mathematical proofs.";

/// Substituted for the context slot when nothing was retrieved.
pub const NO_CONTEXT: &str = "(none)";
/// Substituted for an empty candidate in judge prompts.
pub const EMPTY_PROOF: &str = "(empty proof)";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TemplateId {
    Informal,
    Formalize,
    Judge,
}

impl TemplateId {
    pub fn as_str(self) -> &'static str {
        match self {
            TemplateId::Informal => "informal",
            TemplateId::Formalize => "formalize",
            TemplateId::Judge => "judge",
        }
    }

    /// Raw template text with `{slot}` placeholders.
    pub fn template(self) -> &'static str {
        match self {
            TemplateId::Informal => INFORMAL,
            TemplateId::Formalize => FORMALIZE,
            TemplateId::Judge => JUDGE,
        }
    }

    pub fn slots(self) -> &'static [&'static str] {
        match self {
            TemplateId::Informal => &["context", "problem"],
            TemplateId::Formalize => &["header", "informal_proof", "informal_prefix", "formal_statement", "goal"],
            TemplateId::Judge => &["problem", "candidate"],
        }
    }

    fn role(self) -> &'static str {
        match self {
            TemplateId::Informal => INFORMAL_ROLE,
            TemplateId::Formalize => FORMALIZE_ROLE,
            TemplateId::Judge => JUDGE_ROLE,
        }
    }
}

impl fmt::Display for TemplateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for TemplateId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "informal" => Ok(TemplateId::Informal),
            "formalize" | "formal" => Ok(TemplateId::Formalize),
            "judge" => Ok(TemplateId::Judge),
            other => Err(format!("unknown template `{other}`")),
        }
    }
}

/// A rendered prompt. `role_header` goes out as the system message and
/// `body` as the user message.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub template_id: TemplateId,
    pub role_header: String,
    pub body: String,
}

/// Replaces each `{slot}` whose name is in `values` in one left-to-right
/// pass. Substituted text is never rescanned, so braces in LaTeX or Lean
/// code pass through untouched.
pub fn fill(template: &str, values: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let slot = after
            .find('}')
            .map(|close| &after[..close])
            .and_then(|name| values.iter().find(|(k, _)| *k == name));
        match slot {
            Some((name, value)) => {
                out.push_str(value);
                rest = &after[name.len() + 1..];
            }
            None => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}

fn normalize_newlines(s: &str) -> String {
    s.replace("\r\n", "\n").replace('\r', "\n")
}

fn bundle(id: TemplateId, values: &[(&str, &str)]) -> PromptBundle {
    let values: Vec<(&str, String)> = values.iter().map(|(k, v)| (*k, normalize_newlines(v))).collect();
    let refs: Vec<(&str, &str)> = values.iter().map(|(k, v)| (*k, v.as_str())).collect();
    let template = id.template().trim_end_matches('\n');
    PromptBundle {
        template_id: id,
        role_header: id.role().to_string(),
        body: fill(template, &refs),
    }
}

/// Informal-proof prompt. An empty context renders as `Context: (none)`.
pub fn render_informal_prompt(problem: &Problem, context: &RetrievalContext) -> PromptBundle {
    let ctx = if context.rendered.trim().is_empty() {
        NO_CONTEXT
    } else {
        context.rendered.as_str()
    };
    bundle(
        TemplateId::Informal,
        &[("context", ctx), ("problem", problem.informal_statement.trim())],
    )
}

/// Slots of the formalization prompt.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FormalInputs<'a> {
    pub header: &'a str,
    pub informal_proof: &'a str,
    pub informal_prefix: &'a str,
    pub formal_statement: &'a str,
    pub goal: Option<&'a str>,
}

impl<'a> FormalInputs<'a> {
    pub fn for_problem(problem: &'a Problem, informal_proof: &'a str) -> Self {
        FormalInputs {
            header: &problem.header,
            informal_proof,
            informal_prefix: &problem.informal_prefix,
            formal_statement: &problem.formal_statement,
            goal: problem.goal.as_deref(),
        }
    }
}

/// Formalization prompt. Verifier feedback from a previous attempt, when
/// given, is appended after a blank line.
pub fn render_formal_prompt(inputs: &FormalInputs<'_>, feedback: Option<&str>) -> PromptBundle {
    let mut prompt = bundle(
        TemplateId::Formalize,
        &[
            ("header", inputs.header.trim_end()),
            ("informal_proof", inputs.informal_proof.trim()),
            ("informal_prefix", inputs.informal_prefix.trim_end()),
            ("formal_statement", inputs.formal_statement.trim_end()),
            ("goal", inputs.goal.unwrap_or("").trim_end()),
        ],
    );
    if let Some(fb) = feedback.map(str::trim).filter(|f| !f.is_empty()) {
        prompt.body.push_str("\n\n");
        prompt.body.push_str(&normalize_newlines(fb));
    }
    prompt
}

pub fn render_judge_prompt(problem: &Problem, candidate_proof: &str) -> PromptBundle {
    let candidate = if candidate_proof.trim().is_empty() {
        EMPTY_PROOF
    } else {
        candidate_proof.trim()
    };
    bundle(
        TemplateId::Judge,
        &[("problem", problem.informal_statement.trim()), ("candidate", candidate)],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn problem() -> Problem {
        Problem {
            name: "p".into(),
            informal_statement: "Show that $1 + 1 = 2$.".into(),
            header: "import Mathlib".into(),
            informal_prefix: "/-- one plus one -/".into(),
            formal_statement: "theorem t : 1 + 1 = 2 := by".into(),
            goal: None,
            split: "test".into(),
            extra: Default::default(),
        }
    }

    #[test]
    fn fill_is_single_pass() {
        assert_eq!(fill("a {x} b", &[("x", "{x}")]), "a {x} b");
        assert_eq!(fill("{x}{y}", &[("x", "1"), ("y", "{}")]), "1{}");
        assert_eq!(fill("\\set {y} {", &[("x", "1")]), "\\set {y} {");
    }

    #[test]
    fn templates_have_no_trailing_spaces() {
        for id in [TemplateId::Informal, TemplateId::Formalize, TemplateId::Judge] {
            assert!(id.template().lines().all(|l| l == l.trim_end()), "{id}");
            for slot in id.slots() {
                assert!(id.template().contains(&format!("{{{slot}}}")), "{id} lacks {slot}");
            }
        }
    }

    #[test]
    fn empty_context_renders_none() {
        let p = render_informal_prompt(&problem(), &RetrievalContext::default());
        assert!(p.body.contains("\nContext: (none)\n"));
        assert!(p.body.contains("Problem: Show that $1 + 1 = 2$."));
        assert!(p.body.ends_with("Informal Proof:\n[Your proof here]"));
        assert_eq!(p.role_header, INFORMAL_ROLE);
    }

    #[test]
    fn formal_prompt_slots() {
        let p = problem();
        let prompt = render_formal_prompt(&FormalInputs::for_problem(&p, "Trivial."), None);
        assert!(prompt.body.contains("GOAL (optional):\n\n\nINSTRUCTIONS:"));
        assert!(prompt.body.contains("# Start\n```lean4\n<Lean code here>\n```\n# End"));
        for slot in TemplateId::Formalize.slots() {
            assert!(!prompt.body.contains(&format!("{{{slot}}}")));
        }
        let with_fb = render_formal_prompt(&FormalInputs::for_problem(&p, "Trivial."), Some("ERR"));
        assert!(with_fb.body.ends_with("# End\n\nERR"));
    }

    #[test]
    fn backticks_pass_through() {
        let mut p = problem();
        p.informal_prefix = "-- uses `simp`\n```".into();
        let prompt = render_formal_prompt(&FormalInputs::for_problem(&p, ""), None);
        assert!(prompt.body.contains("PREFIX:\n-- uses `simp`\n```\n"));
    }

    #[test]
    fn judge_prompt_names_dimensions() {
        let prompt = render_judge_prompt(&problem(), "   ");
        for dim in ["mathematical correctness", "clarity", "reasoning completeness"] {
            assert!(prompt.body.contains(dim));
        }
        assert!(prompt.body.contains("Candidate Proof:\n(empty proof)\n"));
        assert!(prompt.body.ends_with("SCORE: <n>"));
    }
}
