use std::path::PathBuf;
use std::process::Command;

use nlcmd_cli::files::{compile_spec, load_kb_file, save_kb_file};
use nlcmd_cli::repl::{run_repl, ReplOptions};
use nlcmd_core::{Config, Engine};

fn spec_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/lights.scs")
}

fn corpus_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/lights_corpus.jsonl")
}

fn engine() -> Engine {
    Engine::new(compile_spec(&spec_path()).unwrap(), Config::default()).unwrap()
}

fn repl(engine: &Engine, script: &str, save: Option<&std::path::Path>) -> String {
    let mut out = Vec::new();
    let opts = ReplOptions {
        save_path: save,
        prompt: false,
    };
    run_repl(engine, script.as_bytes(), &mut out, &opts).unwrap();
    String::from_utf8(out).unwrap()
}

#[test]
fn transcript_golden() {
    let e = engine();
    let out = repl(&e, "Turn off the light in the kitchen\n1\nturn off the light in the kitchen\n", None);
    let expected = "\
Bot: Sorry, I didn't get you. Do you mean to:
option-1. switch off the light in the kitchen, or
option-2. switch on the light in the kitchen,
option-3. change the color of the light?
Bot: Done: SwitchOffLight(X1=kitchen).
Bot: Learned [turn off the light in X1] for SwitchOffLight.
Bot: Done: SwitchOffLight(X1=kitchen).
";
    assert_eq!(out, expected);
}

#[test]
fn bad_option_number_is_reprompted() {
    let e = engine();
    let out = repl(&e, "Turn off the light in the kitchen\n9\n2\n", None);
    assert!(out.contains("Bot: Please answer with an option number from 1 to 3, or none."));
    assert!(out.contains("Bot: Done: SwitchOnLight(X1=kitchen).\nBot: Learned [turn off the light in X1] for SwitchOnLight.\n"));
}

#[test]
fn save_writes_learned_commands() {
    let dir = tempfile::tempdir().unwrap();
    let kb_path = dir.path().join("kb.json");
    save_kb_file(&kb_path, &compile_spec(&spec_path()).unwrap()).unwrap();
    let e = Engine::new(load_kb_file(&kb_path).unwrap(), Config::default()).unwrap();
    let out = repl(&e, "Turn off the light in the kitchen\n1\n:save\n:kb\n:quit\nignored\n", Some(&kb_path));
    assert!(out.contains("Saved knowledge base"));
    assert!(out.contains("SwitchOffLight: 2 authored, 1 learned"));
    assert!(out.contains("[turn off the light in X1]"));
    let saved = load_kb_file(&kb_path).unwrap();
    assert_eq!(saved.summary().learned_sc_count, 1);
}

fn nlcmd() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nlcmd"))
}

#[test]
fn missing_kb_exits_2() {
    let out = nlcmd()
        .args(["repl", "--kb", "/nonexistent/kb.json"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cannot read knowledge base"));
    let out = nlcmd().args(["repl"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = nlcmd().args(["frobnicate"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn compile_then_repl_binary() {
    let dir = tempfile::tempdir().unwrap();
    let kb = dir.path().join("kb.json");
    let out = nlcmd()
        .args(["compile", "--seed-spec"])
        .arg(spec_path())
        .arg("--kb")
        .arg(&kb)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("3 apis, 6 seed commands"));

    use std::io::Write;
    let mut child = nlcmd()
        .args(["repl", "--kb"])
        .arg(&kb)
        .stdin(std::process::Stdio::piped())
        .stdout(std::process::Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(b"Turn off the light in the kitchen\n1\n:quit\n")
        .unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with("Bot: Sorry, I didn't get you. Do you mean to:\noption-1."));
    // Clean exit persists what was learned.
    assert_eq!(load_kb_file(&kb).unwrap().summary().learned_sc_count, 1);
}

#[test]
fn eval_binary_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let report = dir.path().join(name);
        let out = nlcmd()
            .args(["eval", "--seed-spec"])
            .arg(spec_path())
            .arg("--corpus")
            .arg(corpus_path())
            .arg("--report")
            .arg(&report)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        assert!(String::from_utf8_lossy(&out.stdout).contains("exec_accuracy"));
        std::fs::read(report).unwrap()
    };
    assert_eq!(run("a.json"), run("b.json"));
}

#[test]
fn eval_rejects_unknown_gold_api() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("bad.jsonl");
    std::fs::write(&corpus, "{\"utterance\": \"beam me up\", \"gold_api\": \"Teleport\"}\n").unwrap();
    let out = nlcmd()
        .args(["eval", "--seed-spec"])
        .arg(spec_path())
        .arg("--corpus")
        .arg(&corpus)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown gold_api"));
}
