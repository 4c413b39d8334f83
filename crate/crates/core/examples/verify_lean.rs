//! Check Lean code with a local toolchain.
//!
//! Uses `LEAN_CMD` (default `lean {file}`) and `LEAN_PROJECT_DIR`; for a
//! Mathlib project set `LEAN_CMD="lake env lean {file}"`.
//!
//! ```text
//! cargo run --example verify_lean -- [file.lean]
//! ```

use std::time::Duration;

use proofgraph::verifier::{LeanVerifier, Verifier, VerifyRequest};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let verifier = LeanVerifier::from_env();
    if !verifier.available() {
        eprintln!("`{}` is not runnable; install Lean 4 or set LEAN_CMD", verifier.command.join(" "));
        std::process::exit(2);
    }
    let sources = match std::env::args().nth(1) {
        Some(path) => vec![std::fs::read_to_string(path)?],
        None => vec![
            "theorem t : 1 + 1 = 2 := rfl\n".to_string(),
            "theorem t : 1 + 1 = 3 := rfl\n".to_string(),
            "theorem t : 2 + 2 = 4 := by sorry\n".to_string(),
        ],
    };
    for (i, code) in sources.iter().enumerate() {
        let request = VerifyRequest {
            problem_id: "example".into(),
            attempt: i as u32 + 1,
            code: code.clone(),
        };
        let result = verifier.verify(&request, Duration::from_secs(120));
        println!("{}{:?} in {} ms", code, result.status, result.elapsed_ms);
        for e in &result.errors {
            println!("  {}:{} {}", e.line, e.column, e.message);
        }
    }
    Ok(())
}
