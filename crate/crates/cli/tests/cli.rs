use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/fixtures")
        .join(name)
}

fn evince(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_evince"))
        .args(args)
        .env_remove("EVINCE_API_KEY")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn json_files(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    v.sort();
    v
}

#[test]
fn replay_prints_round_table_and_converges() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = evince(&[
        "replay",
        "--script",
        fixture("reference_debate.json").to_str().unwrap(),
        "--out",
        out,
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("| 1 | 0.4500 | 0.3164 | 0.0812 |"), "{text}");
    assert!(text.contains("| 2 | 0.4700 | 0.2265 | 0.0563 |"));
    assert!(text.contains("| 3 | 0.1000 | 0.0156 | 0.0040 |"));
    assert!(text.contains("Verdict: Converged"));
    assert_eq!(json_files(dir.path()).len(), 1);
}

#[test]
fn truncated_replay_needs_review() {
    let dir = tempfile::tempdir().unwrap();
    let script = fixture("reference_debate.json");
    let args = [
        "replay",
        "--script",
        script.to_str().unwrap(),
        "--rounds",
        "2",
        "--out",
        dir.path().to_str().unwrap(),
    ];
    let o = evince(&args);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("HumanReview"));
}

#[test]
fn bad_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "k_consecutive = 0\n").unwrap();
    let script = fixture("reference_debate.json");
    let o = evince(&[
        "replay",
        "--script",
        script.to_str().unwrap(),
        "--config",
        cfg.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 2);
    assert_eq!(code(&evince(&["replay"])), 2);
    assert_eq!(code(&evince(&["no-such-command"])), 2);
}

#[test]
fn analyze_tables() {
    let data = fixture("tables.csv");
    let o = evince(&[
        "analyze",
        "--dataset",
        data.to_str().unwrap(),
        "--prefix",
        "D",
    ]);
    assert_eq!(code(&o), 0);
    let md = stdout(&o);
    assert!(md.contains("15, 8, 11") && md.contains("0.6875"), "{md}");

    let o = evince(&[
        "analyze",
        "--dataset",
        data.to_str().unwrap(),
        "--prefix",
        "D",
        "--format",
        "csv",
    ]);
    let csv = stdout(&o);
    assert!(csv.starts_with("id,category,DR,DS,SR,"));
    let total = csv.lines().last().unwrap();
    let sums = csv
        .lines()
        .skip(1)
        .filter(|l| !l.starts_with("TOTAL"))
        .map(|l| {
            l.split(',')
                .skip(2)
                .take(3)
                .map(|v| v.parse::<u32>().unwrap())
                .collect::<Vec<_>>()
        })
        .fold(vec![0; 3], |acc, r| {
            acc.iter().zip(r).map(|(a, b)| a + b).collect()
        });
    assert_eq!(
        total,
        format!("TOTAL,,{},{},{},0.6875,", sums[0], sums[1], sums[2])
    );
    assert_eq!(sums, [15, 8, 11]);
}

#[test]
fn analyze_single_article_and_bad_rows() {
    let dir = tempfile::tempdir().unwrap();
    let one = dir.path().join("one.csv");
    std::fs::write(
        &one,
        "id,category,source,D,R,S,c,g,justification\nX,Politics,AP,Neutral,Neutral,Neutral,,,\n",
    )
    .unwrap();
    let o = evince(&["analyze", "--dataset", one.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("Totals (DR, DS, SR): 0, 0, 0"));

    let bad = dir.path().join("bad.csv");
    std::fs::write(
        &bad,
        "id,category,source,D,R,S,c,g,justification\nX,Politics,AP,Neutral,meh,Neutral,,,\n",
    )
    .unwrap();
    let o = evince(&["analyze", "--dataset", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 4);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(
        err.contains("line 2") && err.contains("field R") && err.contains("meh"),
        "{err}"
    );
}

#[test]
fn crit_fixture_scores() {
    let f = fixture("crit.json");
    let o = evince(&[
        "crit",
        "--fixture",
        f.to_str().unwrap(),
        "--document",
        "three-reasons",
    ]);
    assert_eq!(code(&o), 3);
    assert!(stdout(&o).contains("Gamma: 4.4667"));
    let o = evince(&[
        "crit",
        "--fixture",
        f.to_str().unwrap(),
        "--document",
        "strong",
        "--format",
        "json",
    ]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["report"]["gamma_total"], 10.0);
}

#[test]
fn review_queue_lists_only_unresolved() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let script = fixture("reference_debate.json");
    assert_eq!(
        code(&evince(&[
            "replay",
            "--script",
            script.to_str().unwrap(),
            "--out",
            out
        ])),
        0
    );
    assert_eq!(
        code(&evince(&[
            "replay",
            "--script",
            script.to_str().unwrap(),
            "--rounds",
            "3",
            "--out",
            out
        ])),
        3
    );
    let o = evince(&["review-queue", "--out", out]);
    assert_eq!(code(&o), 0);
    let lines: Vec<String> = stdout(&o).lines().map(String::from).collect();
    assert_eq!(lines.len(), 1, "{lines:?}");
    assert!(lines[0].contains("HumanReview"));
    let listed = PathBuf::from(lines[0].split('\t').next().unwrap());
    assert!(listed.is_file());

    // Report renders the same transcript by path.
    let o = evince(&["report", listed.to_str().unwrap(), "--format", "csv"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).lines().count(), 11);
}

#[test]
fn debate_without_key_fails_before_network() {
    let o = evince(&[
        "debate",
        "--subject",
        "Some article",
        "--endpoint",
        "http://127.0.0.1:9/unreachable",
    ]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("EVINCE_API_KEY"));
}

const CANNED: &str = "Distribution:\nNegative: 5%\nWeak Negative: 10%\nNeutral: 60%\nWeak Positive: 15%\nPositive: 10%\n\nArgument:\nThe article reports both sides and quotes its sources directly.";

/// Minimal HTTP/1.1 server answering every request with the same completion.
fn stub_server(reply: &'static str, status: u16) -> (String, Arc<AtomicUsize>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let hits = Arc::new(AtomicUsize::new(0));
    let counter = hits.clone();
    thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(stream) = stream else { break };
            let counter = counter.clone();
            thread::spawn(move || serve(stream, reply, status, &counter));
        }
    });
    (format!("http://{addr}/v1/chat/completions"), hits)
}

fn serve(stream: TcpStream, reply: &str, status: u16, hits: &AtomicUsize) {
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut writer = stream;
    loop {
        let mut content_length = 0;
        let mut line = String::new();
        if reader.read_line(&mut line).unwrap_or(0) == 0 {
            return;
        }
        loop {
            line.clear();
            reader.read_line(&mut line).unwrap();
            let l = line.trim_end();
            if l.is_empty() {
                break;
            }
            if let Some(v) = l.to_ascii_lowercase().strip_prefix("content-length:") {
                content_length = v.trim().parse().unwrap();
            }
        }
        let mut body = vec![0; content_length];
        reader.read_exact(&mut body).unwrap();
        let request: serde_json::Value = serde_json::from_slice(&body).unwrap();
        assert!(request["messages"].is_array());
        hits.fetch_add(1, Ordering::SeqCst);
        let payload =
            serde_json::json!({"choices": [{"message": {"role": "assistant", "content": reply}}]})
                .to_string();
        let response = format!(
            "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\n\r\n{payload}",
            payload.len()
        );
        if writer.write_all(response.as_bytes()).is_err() {
            return;
        }
    }
}

fn debate_with_stub(reply: &'static str, status: u16, dir: &Path) -> (Output, usize) {
    let (endpoint, hits) = stub_server(reply, status);
    let o = Command::new(env!("CARGO_BIN_EXE_evince"))
        .args([
            "debate",
            "--subject",
            "An article about a city council vote.",
            "--endpoint",
            &endpoint,
        ])
        .args([
            "--api-key-env",
            "EVINCE_STUB_KEY",
            "--out",
            dir.to_str().unwrap(),
        ])
        .env("EVINCE_STUB_KEY", "stub-secret-value")
        .output()
        .unwrap();
    (o, hits.load(Ordering::SeqCst))
}

#[test]
fn debate_against_stub_converges() {
    let dir = tempfile::tempdir().unwrap();
    let (o, hits) = debate_with_stub(CANNED, 200, dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    // Identical replies: round 1 lacks similarity, rounds 2 and 3 pass.
    assert_eq!(hits, 6);
    let files = json_files(dir.path());
    assert_eq!(files.len(), 1);
    let saved = std::fs::read_to_string(&files[0]).unwrap();
    assert!(!saved.contains("stub-secret-value"));
    let v: serde_json::Value = serde_json::from_str(&saved).unwrap();
    let t = &v["transcript"];
    assert_eq!(t["verdict"]["kind"], "Converged");
    assert_eq!(t["rounds"].as_array().unwrap().len(), 3);
    assert_eq!(t["rounds"][0]["raw_a"], CANNED);
}

#[test]
fn debate_with_failing_endpoint_reports_remote_failure() {
    let dir = tempfile::tempdir().unwrap();
    let (o, hits) = debate_with_stub("I would rather not say.", 200, dir.path());
    assert_eq!(code(&o), 5, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(hits, 3);
    assert!(json_files(dir.path()).is_empty());

    let dir = tempfile::tempdir().unwrap();
    let (o, _) = debate_with_stub("overloaded", 503, dir.path());
    assert_eq!(code(&o), 5);
}
