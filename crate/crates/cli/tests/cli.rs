use std::io::Write;
use std::process::{Command, Output, Stdio};

use promptgauge::{analyze_to_json, AnalyzeRequest};
use promptgauge_core::Assets;
use serde_json::{json, Value};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_promptgauge"));
    cmd.env_remove("PROMPTGAUGE_ASSETS").env_remove("PROMPTGAUGE_NLI_URL");
    cmd
}

fn run_with_stdin(args: &[&str], stdin: &str) -> Output {
    let mut child = bin()
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

#[test]
fn request_mode_matches_the_library_byte_for_byte() {
    let body = json!({
        "description": "The build fails after upgrading webpack.",
        "libraries_frameworks": "webpack 5, Node.js 20"
    })
    .to_string();
    let out = run_with_stdin(&["analyze", "--stdin", "--request"], &body);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let req = AnalyzeRequest::from_json(body.as_bytes()).unwrap();
    let expected = analyze_to_json(Assets::bundled(), None, &req).unwrap();
    assert_eq!(String::from_utf8(out.stdout).unwrap(), expected + "\n");
}

#[test]
fn field_flags_equal_the_json_request() {
    let out = bin()
        .args(["analyze", "--description", "Fix the login bug.", "--code", "login(user)", "--libs", "Flask"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let req = AnalyzeRequest::from_json(
        br#"{"description":"Fix the login bug.","code_snippets":["login(user)"],"libraries_frameworks":"Flask"}"#,
    )
    .unwrap();
    let expected = analyze_to_json(Assets::bundled(), None, &req).unwrap();
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim_end(), expected);
}

#[test]
fn exit_codes_separate_input_and_asset_failures() {
    let out = bin().args(["analyze", "--description", "  "]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    let out = run_with_stdin(&["analyze", "--stdin", "--request"], "{not json");
    assert_eq!(out.status.code(), Some(2));

    let empty = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["--assets", empty.path().to_str().unwrap(), "analyze", "--description", "hi there"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

fn corpus(n: usize) -> String {
    let detailed = [
        "My Flask route returns 500 when the form is empty. I use Flask 2.3 with SQLAlchemy.\n```python\n@app.route('/save')\ndef save():\n    return db.commit()\n```\nThe error is:\nValueError: empty form\nSee https://flask.palletsprojects.com/ for the docs. It must return 200 only if the input is valid.",
        "The parseConfig function throws on an empty file. How should parseConfig handle missing keys? I am on Node.js 18.\n```js\nfunction parseConfig(p) { return JSON.parse(fs.readFileSync(p)); }\n```",
        "Running pytest fails with an import error after upgrading numpy to 1.26. The test suite must pass on Python 3.11.\nImportError: cannot import name 'float_' from numpy",
    ];
    let sparse = ["fix it", "help me with teh code", "why not working", "it broke again pls"];
    let convs: Vec<Value> = (0..n)
        .map(|i| {
            let closed = i % 2 == 0;
            let prompt = if closed {
                format!("{} Attempt {i}.", detailed[i % detailed.len()])
            } else {
                format!("{} {}", sparse[i % sparse.len()], "again ".repeat(i % 5))
            };
            json!({
                "id": format!("c{i}"),
                "issue_url": format!("https://github.com/o/r/issues/{i}"),
                "issue_status": if closed { "closed" } else { "open" },
                "turns": [{"prompt": prompt, "response": "ok"}],
            })
        })
        .collect();
    Value::Array(convs).to_string()
}

#[test]
fn corpus_to_model_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let corpus_path = dir.path().join("corpus.json");
    std::fs::write(&corpus_path, corpus(40)).unwrap();
    let csv = dir.path().join("features.csv");
    let model = dir.path().join("model.json");
    let path = |p: &std::path::Path| p.to_str().unwrap().to_owned();

    let out = bin()
        .args(["corpus", "features", &path(&corpus_path), "--keep-non-english", "-o", &path(&csv)])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let out = bin()
        .args(["corpus", "stats", &path(&corpus_path), "--keep-non-english"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let stats: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(stats["n_open"], 20);
    assert_eq!(stats["n_closed"], 20);

    let out = bin()
        .args([
            "train",
            &path(&csv),
            "--features",
            "misspellings,code_snippets,words,urls",
            "-o",
            &path(&model),
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let params: Value = serde_json::from_str(&std::fs::read_to_string(&model).unwrap()).unwrap();
    assert_eq!(params["features"].as_array().unwrap().len(), 4);

    let out = bin()
        .args(["evaluate", &path(&csv), "--model", &path(&model)])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(report["accuracy"].as_f64().unwrap() >= 0.9, "{report}");

    let out = bin()
        .args(["evaluate", &path(&csv), "--model", &path(&model), "--cv", "4"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let cv: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(cv["fold_accuracies"].as_array().unwrap().len(), 4);
    assert!(cv["mean_accuracy"].as_f64().unwrap() >= 0.9, "{cv}");

    let out = bin().args(["vif", &path(&csv)]).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn malformed_corpus_reports_a_byte_offset() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    std::fs::write(&p, "[{\"id\": }]").unwrap();
    let out = bin().args(["corpus", "stats", p.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("at byte 8"));
}
