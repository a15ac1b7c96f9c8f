#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Command;

pub const FIXTURES: &str = "tests/fixtures";

/// Name and arguments of every frozen CLI run.
pub fn golden_cases() -> Vec<(String, Vec<String>)> {
    let f = |name: &str| format!("{FIXTURES}/{name}.json");
    let s = |x: &str| x.to_string();
    let mut cases = Vec::new();
    for (short, stem, seq, target, twin, max_len) in [
        ("appendix", "appendix_hmm", "1 1", "umps", "appendix_hmm_umps", "4"),
        ("noom", "random_noom", "0 1 1", "psr", "random_noom_psr", "4"),
        ("qomdp", "random_qomdp", "0:1 1:0 1:1", "io_hqmm", "random_qomdp_io_hqmm", "3"),
    ] {
        cases.push((format!("{short}_validate"), vec![s("validate"), f(stem)]));
        cases.push((format!("{short}_eval"), vec![s("eval"), f(stem), s(seq)]));
        cases.push((format!("{short}_filter"), vec![s("filter"), f(stem), s(seq)]));
        cases.push((format!("{short}_convert"), vec![s("convert"), f(stem), s("--to"), s(target)]));
        cases.push((
            format!("{short}_compare"),
            vec![s("compare"), f(stem), f(twin), s("--max-len"), s(max_len)],
        ));
    }
    cases
}

pub fn manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Run {
    /// Single text holding everything the process emitted.
    pub fn transcript(&self) -> String {
        format!("exit={}\n[stdout]\n{}[stderr]\n{}", self.code, self.stdout, self.stderr)
    }
}

/// Runs the built binary from the crate directory with no inherited
/// configuration variables.
pub fn run_bin(args: &[String], envs: &[(&str, &str)], stdin: Option<&[u8]>) -> Run {
    use std::io::Write;
    use std::process::Stdio;
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_seqmodels"));
    cmd.current_dir(manifest_dir()).args(args);
    for (k, _) in std::env::vars() {
        if k.starts_with("SEQMODELS_") {
            cmd.env_remove(k);
        }
    }
    cmd.envs(envs.iter().copied());
    cmd.stdin(if stdin.is_some() { Stdio::piped() } else { Stdio::null() });
    cmd.stdout(Stdio::piped()).stderr(Stdio::piped());
    let mut child = cmd.spawn().expect("binary starts");
    if let Some(bytes) = stdin {
        child.stdin.take().expect("piped stdin").write_all(bytes).expect("stdin write");
    }
    let out = child.wait_with_output().expect("binary finishes");
    Run {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8(out.stdout).expect("utf-8 stdout"),
        stderr: String::from_utf8(out.stderr).expect("utf-8 stderr"),
    }
}

pub fn golden_path(name: &str) -> PathBuf {
    manifest_dir().join("tests/golden").join(format!("{name}.txt"))
}

/// Porcelain transcript of a golden case at a given thread count.
pub fn golden_run(args: &[String], threads: usize) -> Run {
    let mut full = args.to_vec();
    full.push("--porcelain".into());
    full.push("--threads".into());
    full.push(threads.to_string());
    run_bin(&full, &[], None)
}

pub fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}
