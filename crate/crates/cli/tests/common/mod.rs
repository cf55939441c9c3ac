#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use screenwise_core::casegen::{generate_cases, write_cases, CaseRecord, GeneratorConfig};
use screenwise_core::llmlink::{mock_respond, ChatMessage, MockMode, Role};
use screenwise_core::oracle::evaluate;
use screenwise_core::rules::default_ruleset;

pub fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_screenwise"));
    for k in ["SCREENWISE_API_KEY", "SCREENWISE_BACKEND", "SCREENWISE_ENDPOINT", "SCREENWISE_MODEL"] {
        c.env_remove(k);
    }
    c
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn screenwise")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// The run directory is the last line `run` prints.
pub fn run_dir(o: &Output) -> PathBuf {
    PathBuf::from(stdout(o).lines().last().expect("run prints its directory"))
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

/// 50 cases that each trigger exactly one rule of the default pack, so every
/// faithful answer cites one rule.
pub fn single_rule_cases(path: &Path) {
    let rs = default_ruleset();
    let pool = generate_cases(&GeneratorConfig::new(7, 600)).unwrap();
    let records: Vec<CaseRecord> = pool
        .into_iter()
        .filter(|c| evaluate(c, &rs).triggered.len() == 1)
        .take(50)
        .enumerate()
        .map(|(i, mut c)| {
            c.case_id = i as u32 + 1;
            CaseRecord::from_case(&c)
        })
        .collect();
    assert_eq!(records.len(), 50);
    write_cases(path, &records).unwrap();
}

/// Structured: 3 wrong answers and 3 answers citing nothing.
/// Unstructured: 9 wrong answers and 4 answers citing an extra rule.
pub const TABLE_NOISE: &str = r#"{
  "structured": {
    "wrong_recommendation_indices": [5, 17, 33],
    "zero_rule_indices": [8, 21, 44]
  },
  "unstructured": {
    "wrong_recommendation_indices": [2, 6, 11, 19, 24, 30, 37, 42, 49],
    "extra_rule_indices": [3, 14, 27, 45]
  }
}
"#;

pub fn table_fixture(dir: &Path) -> (PathBuf, PathBuf) {
    let cases = dir.join("single_rule_cases.jsonl");
    single_rule_cases(&cases);
    let noise = dir.join("table_noise.json");
    std::fs::write(&noise, TABLE_NOISE).unwrap();
    (cases, noise)
}

#[derive(Debug, PartialEq, Eq)]
pub struct Row {
    pub mode: String,
    pub total: usize,
    pub correct: usize,
    pub incorrect: usize,
    pub one: usize,
    pub multi: usize,
    pub zero: usize,
    pub accuracy: String,
    pub faithful: usize,
}

pub fn csv_rows(dir: &Path) -> Vec<Row> {
    let text = std::fs::read_to_string(dir.join("report.csv")).unwrap();
    text.lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            let n = |i: usize| f[i].parse::<usize>().unwrap();
            Row {
                mode: f[0].to_string(),
                total: n(1),
                correct: n(2),
                incorrect: n(3),
                one: n(4),
                multi: n(5),
                zero: n(6),
                accuracy: f[7].to_string(),
                faithful: n(8),
            }
        })
        .collect()
}

/// A minimal chat-completions endpoint on localhost. `reply` maps the request
/// messages to the assistant text. Serves until the process exits.
pub fn serve_chat(reply: fn(&[ChatMessage]) -> String) -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { continue };
            std::thread::spawn(move || {
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                loop {
                    let mut len = 0usize;
                    let mut line = String::new();
                    if reader.read_line(&mut line).unwrap_or(0) == 0 {
                        return;
                    }
                    loop {
                        let mut h = String::new();
                        reader.read_line(&mut h).unwrap();
                        if h.trim().is_empty() {
                            break;
                        }
                        if let Some((k, v)) = h.split_once(':') {
                            if k.eq_ignore_ascii_case("content-length") {
                                len = v.trim().parse().unwrap();
                            }
                        }
                    }
                    let mut body = vec![0u8; len];
                    reader.read_exact(&mut body).unwrap();
                    let req: serde_json::Value = serde_json::from_slice(&body).unwrap();
                    let messages: Vec<ChatMessage> = req["messages"]
                        .as_array()
                        .unwrap()
                        .iter()
                        .map(|m| {
                            let role = match m["role"].as_str().unwrap() {
                                "system" => Role::System,
                                "assistant" => Role::Assistant,
                                _ => Role::User,
                            };
                            ChatMessage::new(role, m["content"].as_str().unwrap())
                        })
                        .collect();
                    let content = reply(&messages);
                    let resp = serde_json::json!({"choices": [{"message": {"role": "assistant", "content": content}}]})
                        .to_string();
                    let head = format!(
                        "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\n\r\n",
                        resp.len()
                    );
                    if stream.write_all(head.as_bytes()).and_then(|_| stream.write_all(resp.as_bytes())).is_err() {
                        return;
                    }
                }
            });
        }
    });
    format!("http://{addr}/v1/chat/completions")
}

pub fn perfect_reply(messages: &[ChatMessage]) -> String {
    mock_respond(messages, &MockMode::Perfect, &default_ruleset())
}

pub fn stubborn_reply(_: &[ChatMessage]) -> String {
    "OK".to_string()
}
