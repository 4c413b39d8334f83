//! Render the three prompts for a problem and parse typical model answers.

use std::path::PathBuf;

use proofgraph::bench::load_dataset;
use proofgraph::gateway::{
    extract_lean_block, parse_judge_score, render_formal_prompt, render_informal_prompt, render_judge_prompt,
    FormalInputs,
};
use proofgraph::retrieval::RetrievalContext;
use proofgraph::verifier::{parse_errors, render_error_feedback};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/bench/lagrange.json");
    let problem = load_dataset(&path, None)?.remove(0);

    let informal = render_informal_prompt(&problem, &RetrievalContext::default());
    println!("== {} ==\n[system] {}\n{}\n", informal.template_id, informal.role_header, informal.body);

    let proof = "The cosets of H partition G into classes of size |H|.";
    let lean_output = "Main.lean:10:8: error: unknown constant 'Subgroup.card_dvd_card'\n";
    let previous = "theorem t : True := by\n  exact Subgroup.card_dvd_card H";
    let feedback = render_error_feedback(&parse_errors(lean_output), previous);
    let formal = render_formal_prompt(&FormalInputs::for_problem(&problem, proof), Some(&feedback));
    println!("== {} ==\n{}\n", formal.template_id, formal.body);

    let judge = render_judge_prompt(&problem, proof);
    println!("== {} ==\n{}\n", judge.template_id, judge.body);

    let answers = [
        "# Start\n```lean4\ntheorem t : True := trivial\n```\n# End",
        "Sure:\n```\nexample : 1 = 1 := rfl\n```",
        "I cannot formalize this.",
    ];
    for a in answers {
        println!("extract {:?} -> {:?}", a.lines().next().unwrap_or(""), extract_lean_block(a).ok());
    }
    for a in ["Complete.\nSCORE: 8", "**Score: 11/10**", "no verdict"] {
        println!("score {a:?} -> {:?}", parse_judge_score(a).map(|s| (s.score, s.warning)).ok());
    }
    Ok(())
}
