use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name)
}

struct Env {
    dir: tempfile::TempDir,
}

impl Env {
    fn new() -> Env {
        let env = Env { dir: tempfile::tempdir().unwrap() };
        for c in ["contexts/ecommerce.json", "contexts/smart-factory.json"] {
            let out = env.nlfw(&["context", "add", fixture(c).to_str().unwrap()]);
            assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        }
        env
    }

    fn nlfw(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_nlfw"))
            .args(args)
            .env("NLFW_STORE", self.dir.path().join("store"))
            .env("NLFW_AUDIT", self.dir.path().join("audit.jsonl"))
            .env_remove("NLFW_AGENT_URL")
            .output()
            .unwrap()
    }
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

#[test]
fn run_prints_compiled_lines() {
    let env = Env::new();
    let out = env.nlfw(&["run", "--context", "ecommerce", "--query", "Allow WebServer to reach DB on TCP 5432 during business hours"]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = text(&out.stdout);
    assert!(stdout.contains("set service svc-tcp-5432 protocol tcp port 5432\n"));
    assert!(stdout.contains("set rulebase security rules R1 schedule business-hours\n"));
    let audit = std::fs::read_to_string(env.dir.path().join("audit.jsonl")).unwrap();
    assert_eq!(audit.lines().count(), 1);
}

#[test]
fn any_to_any_exits_blocked() {
    let env = Env::new();
    let out = env.nlfw(&["run", "--context", "ecommerce", "--query", "Allow anyone to reach anything"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("E-SG-01"));
    assert!(out.stdout.is_empty());
}

#[test]
fn unknown_context_and_agent_without_endpoint_fail() {
    let env = Env::new();
    assert_eq!(env.nlfw(&["run", "--context", "missing", "--query", "Allow DB to reach WebServer"]).status.code(), Some(1));
    let out = env.nlfw(&["run", "--context", "ecommerce", "--query", "x", "--backend", "agent"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("AGENT_UNCONFIGURED"));
}

#[test]
fn trace_file_has_seven_stages() {
    let env = Env::new();
    let path = env.dir.path().join("trace.json");
    env.nlfw(&["run", "--context", "smart-factory", "--query", "Allow SCADA to reach PLC-Line1 over Modbus", "--trace", path.to_str().unwrap()]);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(v["stages"].as_array().unwrap().len(), 7);
    assert!(v["final"]["lines"].is_array());
}

#[test]
fn eval_curated_corpus_exits_zero() {
    let env = Env::new();
    let report = env.dir.path().join("report.json");
    let out = env.nlfw(&["eval", "--triplets", fixture("triplets.json").to_str().unwrap(), "--report", report.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    assert!(text(&out.stdout).contains("passed (100.0%)"));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(report).unwrap()).unwrap();
    assert_eq!(v["pass_rate"], 1.0);
}

#[test]
fn eval_with_tampered_case_exits_nonzero() {
    let env = Env::new();
    let mut doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(fixture("triplets.json")).unwrap()).unwrap();
    let cli = doc["cases"][0]["expected_cli"].as_str().unwrap().replacen("allow", "allaw", 1);
    doc["cases"][0]["expected_cli"] = cli.into();
    let path = env.dir.path().join("bad.json");
    std::fs::write(&path, doc.to_string()).unwrap();
    let out = env.nlfw(&["eval", "--triplets", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("+set rulebase"));
}

#[test]
fn invalid_context_is_rejected() {
    let env = Env::new();
    let path = env.dir.path().join("bad.json");
    std::fs::write(&path, r#"{"id":"x","zones":{},"objects":{"A":{"kind":"host","value":"1.2.3.4","zone":"nowhere"}}}"#).unwrap();
    let out = env.nlfw(&["context", "add", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("CTX_DANGLING_ZONE"));
    let list = text(&env.nlfw(&["context", "list"]).stdout);
    assert_eq!(list.lines().count(), 2);
}

#[test]
fn usage_error_exits_64() {
    let env = Env::new();
    let out = env.nlfw(&["run", "--query", "x"]);
    assert_eq!(out.status.code(), Some(64));
    assert!(text(&out.stderr).contains("Usage"));
}

#[test]
fn catalog_matches_published_document() {
    let env = Env::new();
    let out = env.nlfw(&["catalog"]);
    let published = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/findings.json")).unwrap();
    assert_eq!(text(&out.stdout), published);
}
