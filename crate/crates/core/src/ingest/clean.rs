//! Wikitext cleanup.
//!
//! Comments, reference tags, maintenance/citation/navigation templates,
//! category and file links and bibliography-style sections are removed.
//! Internal links survive in normalized `[[Target|label]]` form. Math
//! (`$...$`, `$$...$$`, `<math>...</math>`) passes through untouched.
//!
//! The cleaner is applied until it reaches a fixed point, so
//! `clean_wikitext(clean_wikitext(x)) == clean_wikitext(x)`.

use std::sync::OnceLock;

use regex::Regex;

const MAX_PASSES: usize = 8;

/// Section headings whose whole section is dropped.
const DROPPED_SECTIONS: &[&str] = &[
    "sources",
    "historical note",
    "linguistic note",
    "source of name",
    "references",
];

/// Templates removed outright (maintenance banners, citations, attribution).
const DROPPED_TEMPLATES: &[&str] = &[
    "qed",
    "improve",
    "tidy",
    "refactor",
    "explain",
    "questionable",
    "proofread",
    "missinglinks",
    "missing links",
    "sourcereview",
    "citation needed",
    "link",
    "stub",
    "delete",
    "merge",
    "mergeto",
    "rename",
    "wip",
    "help",
    "namedfor",
    "namedfordef",
    "mistake",
    "expand",
    "extract",
    "finish",
    "proof wanted",
    "invalid proof",
    "transclude",
    "wikipedia",
    "mathworld",
    "planetmath",
    "also see",
    "mathematician",
];

/// Template name prefixes removed outright.
const DROPPED_TEMPLATE_PREFIXES: &[&str] = &["cite", "book", "source", "nav", "category", "citation"];

/// Templates replaced by a fixed phrase.
const INLINE_TEMPLATES: &[(&str, &str)] = &[
    ("iff", "if and only if"),
    ("wlog", "without loss of generality"),
    ("st", "such that"),
    ("hence", "hence"),
    ("begin-eqn", ""),
    ("end-eqn", ""),
    ("begin-axiom", ""),
    ("end-axiom", ""),
];

/// Cleans raw wikitext. Never panics, whatever the input.
pub fn clean_wikitext(raw: &str) -> String {
    let mut current = raw.replace("\r\n", "\n").replace('\r', "\n");
    for _ in 0..MAX_PASSES {
        let next = clean_pass(&current);
        if next == current {
            break;
        }
        current = next;
    }
    current
}

fn clean_pass(input: &str) -> String {
    let s = strip_comments(input);
    let s = strip_tags(&s);
    let s = drop_sections(&s);
    let s = render(&s);
    normalize_whitespace(&s)
}

fn strip_comments(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(start) = rest.find("<!--") {
        out.push_str(&rest[..start]);
        match rest[start + 4..].find("-->") {
            Some(end) => rest = &rest[start + 4 + end + 3..],
            None => return out,
        }
    }
    out.push_str(rest);
    out
}

fn tag_regexes() -> &'static [(Regex, &'static str)] {
    static RE: OnceLock<Vec<(Regex, &'static str)>> = OnceLock::new();
    RE.get_or_init(|| {
        [
            (r"(?is)<ref\b[^>]*/>", ""),
            (r"(?is)<ref\b[^>]*>.*?</ref\s*>", ""),
            (r"(?is)<noinclude\s*>.*?</noinclude\s*>", ""),
            (r"(?i)</?(onlyinclude|includeonly|noinclude)\s*/?>", ""),
            (r"(?i)<section\b[^>]*/>", ""),
            (r"(?i)<br\s*/?>", "\n"),
            (r"__[A-Z]+__", ""),
        ]
        .into_iter()
        .map(|(p, r)| (Regex::new(p).expect("static regex"), r))
        .collect()
    })
}

fn strip_tags(s: &str) -> String {
    let mut out = s.to_string();
    for (re, rep) in tag_regexes() {
        if re.is_match(&out) {
            out = re.replace_all(&out, *rep).into_owned();
        }
    }
    out
}

fn heading(line: &str) -> Option<(usize, &str)> {
    let t = line.trim();
    let level = t.chars().take_while(|&c| c == '=').count();
    if level < 2 || t.len() < 2 * level + 1 {
        return None;
    }
    let closing = t.chars().rev().take_while(|&c| c == '=').count();
    if closing < level {
        return None;
    }
    let inner = t[level..t.len() - level].trim();
    (!inner.is_empty()).then_some((level, inner))
}

fn drop_sections(s: &str) -> String {
    let mut out = Vec::new();
    let mut skipping: Option<usize> = None;
    for line in s.split('\n') {
        if let Some((level, title)) = heading(line) {
            if let Some(skip_level) = skipping {
                if level > skip_level {
                    continue;
                }
                skipping = None;
            }
            if DROPPED_SECTIONS.contains(&title.to_lowercase().as_str()) {
                skipping = Some(level);
                continue;
            }
        } else if skipping.is_some() {
            continue;
        }
        out.push(line);
    }
    out.join("\n")
}

fn normalize_whitespace(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut blank_run = 0;
    for line in s.trim().split('\n') {
        let line = line.trim_end();
        if line.is_empty() {
            blank_run += 1;
            if blank_run > 1 {
                continue;
            }
        } else {
            blank_run = 0;
        }
        out.push_str(line);
        out.push('\n');
    }
    out.trim().to_string()
}

/// End (exclusive) of a math region starting at `i`, if it is closed.
pub(crate) fn math_end(s: &str, i: usize) -> Option<usize> {
    let rest = &s[i..];
    if let Some(tail) = rest.strip_prefix("$$") {
        tail.find("$$").map(|e| i + 2 + e + 2)
    } else if let Some(tail) = rest.strip_prefix('$') {
        tail.find('$').map(|e| i + 1 + e + 1)
    } else if starts_with_ci(rest, "<math") {
        find_ci(rest, "</math>").map(|e| i + e + "</math>".len())
    } else {
        None
    }
}

fn starts_with_ci(s: &str, prefix: &str) -> bool {
    s.len() >= prefix.len() && s.as_bytes()[..prefix.len()].eq_ignore_ascii_case(prefix.as_bytes())
}

fn find_ci(s: &str, needle: &str) -> Option<usize> {
    let lower = s.to_ascii_lowercase();
    lower.find(needle)
}

/// Splits `s` into segments lying outside math regions, using the same
/// math detection as the cleaner.
pub fn outside_math(s: &str) -> Vec<&str> {
    let mut segments = Vec::new();
    let mut seg_start = 0;
    let mut i = 0;
    while i < s.len() {
        if let Some(end) = math_end(s, i) {
            segments.push(&s[seg_start..i]);
            i = end;
            seg_start = end;
        } else {
            i += next_char_len(s, i);
        }
    }
    segments.push(&s[seg_start..]);
    segments
}

fn next_char_len(s: &str, i: usize) -> usize {
    s[i..].chars().next().map_or(1, char::len_utf8)
}

/// Finds the index of the `close` delimiter that balances an `open` already
/// consumed just before `from`. Math regions are skipped. With
/// `single_line`, a newline at depth zero aborts the search.
fn matching_close(s: &str, from: usize, open: &str, close: &str, single_line: bool) -> Option<usize> {
    let mut depth = 0usize;
    let mut i = from;
    while i < s.len() {
        let rest = &s[i..];
        if let Some(end) = math_end(s, i) {
            i = end;
            continue;
        }
        if rest.starts_with(close) {
            if depth == 0 {
                return Some(i);
            }
            depth -= 1;
            i += close.len();
        } else if rest.starts_with(open) {
            depth += 1;
            i += open.len();
        } else {
            if single_line && depth == 0 && rest.starts_with('\n') {
                return None;
            }
            i += next_char_len(s, i);
        }
    }
    None
}

/// Splits template or link arguments on `|` at nesting depth zero.
fn split_args(s: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut start = 0;
    let mut braces = 0usize;
    let mut brackets = 0usize;
    let mut i = 0;
    while i < s.len() {
        let rest = &s[i..];
        if let Some(end) = math_end(s, i) {
            i = end;
            continue;
        }
        if rest.starts_with("{{") {
            braces += 1;
            i += 2;
        } else if rest.starts_with("}}") {
            braces = braces.saturating_sub(1);
            i += 2;
        } else if rest.starts_with("[[") {
            brackets += 1;
            i += 2;
        } else if rest.starts_with("]]") {
            brackets = brackets.saturating_sub(1);
            i += 2;
        } else {
            if rest.starts_with('|') && braces == 0 && brackets == 0 {
                parts.push(&s[start..i]);
                start = i + 1;
            }
            i += next_char_len(s, i);
        }
    }
    parts.push(&s[start..]);
    parts
}

/// Splits `key = value`; returns `(None, arg)` for positional arguments.
fn named_arg(arg: &str) -> (Option<String>, &str) {
    if let Some((key, value)) = arg.split_once('=') {
        let key = key.trim();
        if !key.is_empty() && key.chars().all(|c| c.is_alphanumeric() || c == '_' || c == ' ' || c == '-') {
            return (Some(key.to_lowercase()), value);
        }
    }
    (None, arg)
}

fn strip_dollars(s: &str) -> &str {
    let t = s.trim();
    t.strip_prefix('$')
        .and_then(|x| x.strip_suffix('$'))
        .map(str::trim)
        .unwrap_or(t)
}

fn collapse_spaces(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn render(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut i = 0;
    while i < s.len() {
        let rest = &s[i..];
        if let Some(end) = math_end(s, i) {
            out.push_str(&s[i..end]);
            i = end;
        } else if rest.starts_with("{{") {
            match matching_close(s, i + 2, "{{", "}}", false) {
                Some(end) => {
                    out.push_str(&render_template(&s[i + 2..end]));
                    i = end + 2;
                }
                // unterminated: drop the opening braces and keep going
                None => i += 2,
            }
        } else if rest.starts_with("}}") {
            i += 2;
        } else if rest.starts_with("[[") {
            match matching_close(s, i + 2, "[[", "]]", true) {
                Some(end) => {
                    out.push_str(&render_link(&s[i + 2..end]));
                    i = end + 2;
                }
                None => {
                    out.push_str("[[");
                    i += 2;
                }
            }
        } else if rest.starts_with("''") {
            i += rest.chars().take_while(|&c| c == '\'').count();
        } else {
            let len = next_char_len(s, i);
            out.push_str(&s[i..i + len]);
            i += len;
        }
    }
    out
}

fn template_dropped(name: &str) -> bool {
    DROPPED_TEMPLATES.contains(&name) || DROPPED_TEMPLATE_PREFIXES.iter().any(|p| name.starts_with(p))
}

fn render_template(inner: &str) -> String {
    let args = split_args(inner);
    let raw_name = args[0].trim();
    if let Some(page) = raw_name.strip_prefix(':') {
        let page = collapse_spaces(page);
        return if page.is_empty() {
            String::new()
        } else {
            format!("[[{page}]]")
        };
    }
    let name = collapse_spaces(&raw_name.replace('_', " ")).to_lowercase();
    if template_dropped(&name) {
        return String::new();
    }
    if let Some((_, text)) = INLINE_TEMPLATES.iter().find(|(n, _)| *n == name) {
        return (*text).to_string();
    }
    let params = &args[1..];
    match name.as_str() {
        "defof" => render_defof(params),
        "eqn" => render_eqn(params),
        _ => params
            .iter()
            .map(|a| render(named_arg(a).1).trim().to_string())
            .filter(|a| !a.is_empty())
            .collect::<Vec<_>>()
            .join(" "),
    }
}

fn render_defof(params: &[&str]) -> String {
    let positional: Vec<&str> = params
        .iter()
        .filter_map(|a| match named_arg(a) {
            (None, v) => Some(v.trim()),
            _ => None,
        })
        .collect();
    match positional.as_slice() {
        [] => String::new(),
        [""] => String::new(),
        [target] => format!("[[Definition:{}|{}]]", collapse_spaces(target), target),
        [target, label, ..] => format!("[[Definition:{}|{}]]", collapse_spaces(target), render(label).trim()),
    }
}

fn render_eqn(params: &[&str]) -> String {
    let mut lhs = "";
    let mut op = "";
    let mut rhs = "";
    let mut comment = String::new();
    for arg in params {
        if let (Some(key), value) = named_arg(arg) {
            match key.as_str() {
                "l" => lhs = strip_dollars(value),
                "o" => op = value.trim(),
                "r" => rhs = strip_dollars(value),
                "c" => comment = render(value).trim().to_string(),
                _ => {}
            }
        }
    }
    if op.is_empty() && !rhs.is_empty() {
        op = "=";
    }
    let math = [lhs, op, rhs]
        .iter()
        .filter(|p| !p.is_empty())
        .map(|p| collapse_spaces(p))
        .collect::<Vec<_>>()
        .join(" ");
    let mut out = String::new();
    if !math.is_empty() {
        out.push_str(&format!(":${math}$"));
    }
    if !comment.is_empty() {
        if !out.is_empty() {
            out.push_str("  ");
        }
        out.push_str(&format!("({comment})"));
    }
    out
}

fn is_dropped_link_namespace(target: &str) -> bool {
    let Some((prefix, _)) = target.split_once(':') else {
        return false;
    };
    let prefix = prefix.trim().to_lowercase();
    matches!(prefix.as_str(), "category" | "file" | "image" | "media")
        || (prefix.len() == 2 && prefix.chars().all(|c| c.is_ascii_lowercase()))
}

fn render_link(inner: &str) -> String {
    let (target, label) = match inner.split_once('|') {
        Some((t, l)) => (t, Some(l)),
        None => (inner, None),
    };
    let mut target = collapse_spaces(&target.replace('_', " "));
    let visible = target.starts_with(':');
    if visible {
        target = target.trim_start_matches(':').trim().to_string();
    }
    let label = label.map(|l| collapse_spaces(&render(l))).filter(|l| !l.is_empty());
    if is_dropped_link_namespace(&target) {
        if !visible {
            return String::new();
        }
        let name = target.split_once(':').map_or(target.as_str(), |(_, n)| n.trim());
        return label.unwrap_or_else(|| name.to_string());
    }
    if target.is_empty() {
        return label.unwrap_or_default();
    }
    match label {
        Some(l) => format!("[[{target}|{l}]]"),
        None => format!("[[{target}]]"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strips_comments() {
        assert_eq!(
            clean_wikitext("Let [[Definition:Group|group]] $G$…<!--note-->"),
            "Let [[Definition:Group|group]] $G$…"
        );
    }

    #[test]
    fn plain_text_is_unchanged() {
        let s = "A plain sentence with no markup at all.";
        assert_eq!(clean_wikitext(s), s);
    }

    #[test]
    fn unterminated_comment_truncates() {
        assert_eq!(clean_wikitext("keep <!-- lost"), "keep");
    }

    #[test]
    fn drops_maintenance_and_citation_templates() {
        let s = "Hence the result.\n{{qed}}\n{{BookReference|Topics|1975|Herstein}}";
        assert_eq!(clean_wikitext(s), "Hence the result.");
    }

    #[test]
    fn inline_templates_become_phrases() {
        assert_eq!(clean_wikitext("$a$ {{iff}} $b$"), "$a$ if and only if $b$");
    }

    #[test]
    fn eqn_template_renders_as_math_line() {
        let s = "{{eqn | l = x^2\n | r = y\n | c = by [[Definition:Square|squaring]]\n}}";
        assert_eq!(
            clean_wikitext(s),
            ":$x^2 = y$  (by [[Definition:Square|squaring]])"
        );
    }

    #[test]
    fn defof_becomes_definition_link() {
        assert_eq!(clean_wikitext("a {{Defof|Group}}"), "a [[Definition:Group|Group]]");
        assert_eq!(clean_wikitext("{{Defof|Ring|rings}}"), "[[Definition:Ring|rings]]");
    }

    #[test]
    fn transclusion_becomes_link() {
        assert_eq!(clean_wikitext("{{:Lagrange's Theorem/Proof 1}}"), "[[Lagrange's Theorem/Proof 1]]");
    }

    #[test]
    fn category_and_file_links_removed() {
        assert_eq!(
            clean_wikitext("text\n[[Category:Groups]]\n[[File:x.png|thumb|caption]]"),
            "text"
        );
        assert_eq!(clean_wikitext("see [[:Category:Groups]]"), "see Groups");
    }

    #[test]
    fn links_are_normalized() {
        assert_eq!(
            clean_wikitext("[[ Definition:Group  |  a  group ]] and [[Axiom_of_Choice]]"),
            "[[Definition:Group|a group]] and [[Axiom of Choice]]"
        );
    }

    #[test]
    fn math_is_untouched() {
        let s = "$f''(x) = \\frac {{a}} {{b}}$ and $$\\map f {{x}}$$";
        assert_eq!(clean_wikitext(s), s);
    }

    #[test]
    fn bold_and_italic_markup_removed() {
        assert_eq!(clean_wikitext("A '''group''' is ''nice''."), "A group is nice.");
    }

    #[test]
    fn dropped_section_runs_until_same_level_heading() {
        let s = "== Proof ==\nbody\n== Sources ==\n* a\n=== Sub ===\n* b\n== Also see ==\n* [[X]]";
        assert_eq!(clean_wikitext(s), "== Proof ==\nbody\n== Also see ==\n* [[X]]");
    }

    #[test]
    fn reference_tags_removed() {
        assert_eq!(clean_wikitext("a<ref name=\"x\">cite</ref> b<ref name=y/>"), "a b");
    }

    #[test]
    fn unbalanced_markup_does_not_panic() {
        for s in ["{{", "}}", "[[", "]]", "{{a|[[b", "$", "$$x", "<math>x", "{{{1}}}", "é{{é", "==", "''"] {
            let once = clean_wikitext(s);
            assert_eq!(clean_wikitext(&once), once, "input {s:?}");
        }
    }

    #[test]
    fn nested_comment_trick_is_idempotent() {
        let s = "<!-<!-- -->-- x -->tail";
        let once = clean_wikitext(s);
        assert_eq!(clean_wikitext(&once), once);
    }

    #[test]
    fn outside_math_splits_segments() {
        assert_eq!(outside_math("a $x$ b"), vec!["a ", " b"]);
        assert_eq!(outside_math("$ open"), vec!["$ open"]);
    }
}
