//! Proof checking: run Lean on candidate code in a throwaway workspace and
//! turn its output into structured errors.

mod diagnostics;

use std::collections::HashMap;
use std::io::{BufRead, Read};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use wait_timeout::ChildExt;

pub use diagnostics::{assemble_submission, parse_errors, render_error_feedback, MAX_FEEDBACK_ERRORS};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerificationStatus {
    Verified,
    Failed,
    Timeout,
    ToolchainError,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeanError {
    pub line: u32,
    pub column: u32,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationResult {
    pub status: VerificationStatus,
    pub errors: Vec<LeanError>,
    pub raw_output: String,
    pub elapsed_ms: u64,
}

impl VerificationResult {
    pub fn is_verified(&self) -> bool {
        self.status == VerificationStatus::Verified
    }

    fn new(status: VerificationStatus, errors: Vec<LeanError>, raw_output: String, elapsed: Duration) -> Self {
        VerificationResult {
            status,
            errors,
            raw_output,
            elapsed_ms: elapsed.as_millis() as u64,
        }
    }

    pub fn toolchain_error(message: impl Into<String>) -> Self {
        Self::new(VerificationStatus::ToolchainError, Vec::new(), message.into(), Duration::ZERO)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifyRequest {
    pub problem_id: String,
    /// 1-based index of this verification within the problem.
    pub attempt: u32,
    pub code: String,
}

pub trait Verifier: Send + Sync {
    fn id(&self) -> String;
    /// Checks `request.code`. Proof failures are returned as values.
    fn verify(&self, request: &VerifyRequest, timeout: Duration) -> VerificationResult;
}

const SORRY_WARNING: &str = "declaration uses 'sorry'";

/// Runs a Lean command on the code written to a fresh temporary file.
#[derive(Debug, Clone)]
pub struct LeanVerifier {
    /// Program and arguments; `{file}` is replaced by the source path.
    pub command: Vec<String>,
    /// Working directory for the checker, typically a Lake project with
    /// dependencies already built. Defaults to the temporary workspace.
    pub project_dir: Option<PathBuf>,
    /// Where temporary workspaces are created. Defaults to the system
    /// temporary directory.
    pub workspace_root: Option<PathBuf>,
}

impl Default for LeanVerifier {
    fn default() -> Self {
        LeanVerifier {
            command: vec!["lean".into(), "{file}".into()],
            project_dir: None,
            workspace_root: None,
        }
    }
}

impl LeanVerifier {
    /// `lake env lean {file}` inside `project_dir`.
    pub fn lake_project(project_dir: impl Into<PathBuf>) -> Self {
        LeanVerifier {
            command: ["lake", "env", "lean", "{file}"].map(String::from).to_vec(),
            project_dir: Some(project_dir.into()),
            workspace_root: None,
        }
    }

    /// Reads `LEAN_CMD` (whitespace separated, `{file}` placeholder) and
    /// `LEAN_PROJECT_DIR`.
    pub fn from_env() -> Self {
        let mut v = LeanVerifier::default();
        if let Ok(cmd) = std::env::var("LEAN_CMD") {
            let parts: Vec<String> = cmd.split_whitespace().map(String::from).collect();
            if !parts.is_empty() {
                v.command = parts;
            }
        }
        v.project_dir = std::env::var_os("LEAN_PROJECT_DIR").map(PathBuf::from);
        v
    }

    /// True when the checker program can be started.
    pub fn available(&self) -> bool {
        let Some(program) = self.command.first() else {
            return false;
        };
        Command::new(program)
            .arg("--version")
            .stdout(Stdio::null())
            .stderr(Stdio::null())
            .status()
            .is_ok_and(|s| s.success())
    }

    fn run(&self, source: &Path, timeout: Duration) -> Result<(Option<i32>, String, Duration), std::io::Error> {
        let (program, args) = self
            .command
            .split_first()
            .ok_or_else(|| std::io::Error::new(std::io::ErrorKind::NotFound, "empty checker command"))?;
        let file = source.display().to_string();
        let cwd = self.project_dir.as_deref().or(source.parent()).unwrap_or(Path::new("."));
        let start = Instant::now();
        let mut command = Command::new(program);
        command
            .args(args.iter().map(|a| a.replace("{file}", &file)))
            .current_dir(cwd)
            .stdin(Stdio::null())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped());
        // Own process group, so a timeout also stops children such as the
        // `lean` process started by `lake`.
        #[cfg(unix)]
        std::os::unix::process::CommandExt::process_group(&mut command, 0);
        let mut child = command.spawn()?;
        let out = drain(child.stdout.take());
        let err = drain(child.stderr.take());
        let status = match child.wait_timeout(timeout)? {
            Some(status) => status.code(),
            None => {
                kill_tree(&mut child);
                let _ = child.wait();
                let elapsed = start.elapsed().max(timeout);
                return Ok((None, join_output(out, err), elapsed));
            }
        };
        let elapsed = start.elapsed();
        Ok((Some(status.unwrap_or(-1)), join_output(out, err), elapsed))
    }
}

fn kill_tree(child: &mut std::process::Child) {
    #[cfg(unix)]
    if let Ok(pid) = i32::try_from(child.id()) {
        // SAFETY: plain syscall on a process group we created.
        unsafe {
            libc::kill(-pid, libc::SIGKILL);
        }
    }
    let _ = child.kill();
}

fn drain(pipe: Option<impl Read + Send + 'static>) -> std::thread::JoinHandle<String> {
    std::thread::spawn(move || {
        let mut buf = String::new();
        if let Some(mut p) = pipe {
            let mut bytes = Vec::new();
            let _ = p.read_to_end(&mut bytes);
            buf = String::from_utf8_lossy(&bytes).into_owned();
        }
        buf
    })
}

fn join_output(out: std::thread::JoinHandle<String>, err: std::thread::JoinHandle<String>) -> String {
    let out = out.join().unwrap_or_default();
    let err = err.join().unwrap_or_default();
    match (out.is_empty(), err.is_empty()) {
        (_, true) => out,
        (true, false) => err,
        (false, false) => format!("{}\n{}", out.trim_end(), err),
    }
}

fn sorry_errors(raw: &str) -> Vec<LeanError> {
    raw.lines()
        .filter(|l| l.contains(SORRY_WARNING))
        .map(|l| {
            let mut nums = l.split(':').filter_map(|p| p.trim().parse::<u32>().ok());
            LeanError {
                line: nums.next().unwrap_or(0),
                column: nums.next().unwrap_or(0),
                message: SORRY_WARNING.to_string(),
            }
        })
        .collect()
}

impl Verifier for LeanVerifier {
    fn id(&self) -> String {
        format!("lean:{}", self.command.join(" "))
    }

    fn verify(&self, request: &VerifyRequest, timeout: Duration) -> VerificationResult {
        let dir = match &self.workspace_root {
            Some(root) => tempfile::Builder::new().prefix("lean-check-").tempdir_in(root),
            None => tempfile::Builder::new().prefix("lean-check-").tempdir(),
        };
        let dir = match dir {
            Ok(d) => d,
            Err(e) => return VerificationResult::toolchain_error(format!("cannot create workspace: {e}")),
        };
        let source = dir.path().join("Main.lean");
        if let Err(e) = std::fs::write(&source, &request.code) {
            return VerificationResult::toolchain_error(format!("cannot write source: {e}"));
        }
        let (code, raw, elapsed) = match self.run(&source, timeout) {
            Ok(r) => r,
            Err(e) => {
                tracing::error!(command = ?self.command, error = %e, "cannot start checker");
                return VerificationResult::toolchain_error(format!("cannot start `{}`: {e}", self.command.join(" ")));
            }
        };
        let result = match code {
            None => VerificationResult::new(VerificationStatus::Timeout, Vec::new(), raw, elapsed),
            Some(_) if elapsed >= timeout => VerificationResult::new(VerificationStatus::Timeout, Vec::new(), raw, elapsed),
            Some(0) if !raw.contains(SORRY_WARNING) && parse_errors(&raw).iter().all(|e| e.line == 0) => {
                VerificationResult::new(VerificationStatus::Verified, Vec::new(), raw, elapsed)
            }
            Some(status) => {
                let mut errors = parse_errors(&raw);
                errors.extend(sorry_errors(&raw));
                let raw = if raw.trim().is_empty() {
                    format!("checker exited with status {status}")
                } else {
                    raw
                };
                VerificationResult::new(VerificationStatus::Failed, errors, raw, elapsed)
            }
        };
        tracing::debug!(problem = %request.problem_id, attempt = request.attempt, status = ?result.status, "verified");
        result
    }
}

/// One line of a mock verifier script.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifierScriptEntry {
    /// A problem name, or `*` for any problem.
    pub problem_id: String,
    /// Attempt to answer; absent matches any attempt.
    #[serde(default)]
    pub attempt: Option<u32>,
    pub status: VerificationStatus,
    #[serde(default)]
    pub raw_output: String,
}

/// Replays scripted verdicts keyed by (problem, attempt).
#[derive(Debug, Default)]
pub struct MockVerifier {
    script: HashMap<(String, Option<u32>), (VerificationStatus, String)>,
    calls: AtomicUsize,
    per_problem: std::sync::Mutex<HashMap<String, usize>>,
}

impl MockVerifier {
    pub fn new(entries: impl IntoIterator<Item = VerifierScriptEntry>) -> Self {
        let mut script = HashMap::new();
        for e in entries {
            script.entry((e.problem_id, e.attempt)).or_insert((e.status, e.raw_output));
        }
        MockVerifier {
            script,
            ..Default::default()
        }
    }

    pub fn load(path: &Path) -> std::io::Result<Self> {
        let file = std::fs::File::open(path)?;
        let mut entries = Vec::new();
        for (n, line) in std::io::BufReader::new(file).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            entries.push(serde_json::from_str(&line).map_err(|e| {
                std::io::Error::new(std::io::ErrorKind::InvalidData, format!("{}:{}: {e}", path.display(), n + 1))
            })?);
        }
        Ok(Self::new(entries))
    }

    /// Scripts the given statuses as attempts 1, 2, ... of `problem_id`.
    pub fn sequence(problem_id: &str, statuses: &[VerificationStatus]) -> Self {
        Self::new(statuses.iter().enumerate().map(|(i, s)| VerifierScriptEntry {
            problem_id: problem_id.into(),
            attempt: Some(i as u32 + 1),
            status: *s,
            raw_output: match s {
                VerificationStatus::Failed => format!("Main.lean:1:0: error: scripted failure {}", i + 1),
                _ => String::new(),
            },
        }))
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn calls_for(&self, problem_id: &str) -> usize {
        self.per_problem
            .lock()
            .expect("mock verifier poisoned")
            .get(problem_id)
            .copied()
            .unwrap_or(0)
    }
}

impl Verifier for MockVerifier {
    fn id(&self) -> String {
        "mock".into()
    }

    fn verify(&self, request: &VerifyRequest, _timeout: Duration) -> VerificationResult {
        self.calls.fetch_add(1, Ordering::SeqCst);
        *self
            .per_problem
            .lock()
            .expect("mock verifier poisoned")
            .entry(request.problem_id.clone())
            .or_insert(0) += 1;
        let pid = request.problem_id.as_str();
        let hit = [(pid, Some(request.attempt)), (pid, None), ("*", Some(request.attempt)), ("*", None)]
            .into_iter()
            .find_map(|(p, a)| self.script.get(&(p.to_string(), a)));
        let Some((status, raw)) = hit else {
            return VerificationResult::toolchain_error(format!(
                "mock verifier has no entry for `{pid}` attempt {}",
                request.attempt
            ));
        };
        let (errors, raw) = match status {
            VerificationStatus::Failed => {
                let raw = if raw.trim().is_empty() {
                    "Main.lean:1:0: error: scripted failure".to_string()
                } else {
                    raw.clone()
                };
                (parse_errors(&raw), raw)
            }
            _ => (Vec::new(), raw.clone()),
        };
        VerificationResult::new(*status, errors, raw, Duration::ZERO)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use VerificationStatus::*;

    fn req(attempt: u32) -> VerifyRequest {
        VerifyRequest {
            problem_id: "p".into(),
            attempt,
            code: "theorem t : True := trivial".into(),
        }
    }

    #[test]
    fn mock_replays_sequence() {
        let mock = MockVerifier::sequence("p", &[Failed, Failed, Verified]);
        let statuses: Vec<_> = (1..=3).map(|a| mock.verify(&req(a), DEFAULT_TIMEOUT).status).collect();
        assert_eq!(statuses, vec![Failed, Failed, Verified]);
        assert_eq!(mock.calls(), 3);
        assert_eq!(mock.calls_for("p"), 3);
        let failed = mock.verify(&req(1), DEFAULT_TIMEOUT);
        assert_eq!(failed.errors.len(), 1);
        assert_eq!(mock.verify(&req(9), DEFAULT_TIMEOUT).status, ToolchainError);
    }

    #[test]
    fn missing_binary_is_toolchain_error() {
        let v = LeanVerifier {
            command: vec!["definitely-not-a-lean-binary-xyz".into(), "{file}".into()],
            ..Default::default()
        };
        let r = v.verify(&req(1), DEFAULT_TIMEOUT);
        assert_eq!(r.status, ToolchainError);
        assert!(!v.available());
    }

    #[cfg(unix)]
    #[test]
    fn command_outcomes_and_workspace_cleanup() {
        let root = tempfile::tempdir().unwrap();
        let with = |cmd: &str| LeanVerifier {
            command: vec!["sh".into(), "-c".into(), cmd.into(), "sh".into(), "{file}".into()],
            project_dir: None,
            workspace_root: Some(root.path().to_path_buf()),
        };
        assert_eq!(with("test -s \"$1\"").verify(&req(1), DEFAULT_TIMEOUT).status, Verified);
        let failed = with("echo \"$1:2:4: error: nope\"; exit 1").verify(&req(1), DEFAULT_TIMEOUT);
        assert_eq!(failed.status, Failed);
        assert_eq!((failed.errors[0].line, failed.errors[0].column), (2, 4));
        let sorry = with("echo \"$1:1:8: warning: declaration uses 'sorry'\"").verify(&req(1), DEFAULT_TIMEOUT);
        assert_eq!(sorry.status, Failed);
        assert_eq!(sorry.errors[0].line, 1);
        let silent = with("exit 3").verify(&req(1), DEFAULT_TIMEOUT);
        assert_eq!(silent.status, Failed);
        assert!(!silent.raw_output.is_empty());
        let slow = with("sleep 5").verify(&req(1), Duration::from_millis(200));
        assert_eq!(slow.status, Timeout);
        assert!(slow.elapsed_ms >= 200);
        assert_eq!(std::fs::read_dir(root.path()).unwrap().count(), 0);
    }
}
