//! Minimal HTTP/1.1 bridge on a loopback port, answering `/embed`, `/nli`
//! and `/health` from the mock judges. Every request is recorded.

#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::{Arc, Mutex};
use std::thread;

use hedge_core::judges::{HashEmbedder, RuleNli};
use serde_json::{json, Value};

pub const DIM: usize = 16;

#[derive(Clone, Default)]
pub struct Log(Arc<Mutex<Vec<(String, Value)>>>);

impl Log {
    pub fn requests(&self) -> Vec<(String, Value)> {
        self.0.lock().unwrap().clone()
    }

    pub fn count(&self, path: &str) -> usize {
        self.0.lock().unwrap().iter().filter(|(p, _)| p == path).count()
    }
}

pub struct FakeBridge {
    pub url: String,
    pub log: Log,
}

/// Starts the server on a background thread; it lives until the process exits.
pub fn spawn(nli: RuleNli) -> FakeBridge {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    let log = Log::default();
    let shared = log.clone();
    thread::spawn(move || {
        for stream in listener.incoming().flatten() {
            let (log, nli) = (shared.clone(), nli.clone());
            thread::spawn(move || serve(stream, &log, &nli));
        }
    });
    FakeBridge { url, log }
}

fn serve(stream: TcpStream, log: &Log, nli: &RuleNli) {
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut request_line = String::new();
    if reader.read_line(&mut request_line).unwrap_or(0) == 0 {
        return;
    }
    let mut len = 0;
    loop {
        let mut line = String::new();
        reader.read_line(&mut line).unwrap();
        let line = line.trim_end();
        if line.is_empty() {
            break;
        }
        if let Some((k, v)) = line.split_once(':') {
            if k.eq_ignore_ascii_case("content-length") {
                len = v.trim().parse().unwrap();
            }
        }
    }
    let mut body = vec![0; len];
    reader.read_exact(&mut body).unwrap();
    let path = request_line.split_whitespace().nth(1).unwrap_or("").to_string();
    let parsed: Value = if body.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&body).unwrap()
    };
    log.0.lock().unwrap().push((path.clone(), parsed.clone()));

    let (status, reply) = respond(&path, &parsed, nli);
    let text = reply.to_string();
    let mut stream = stream;
    write!(
        stream,
        "HTTP/1.1 {status}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{text}",
        text.len()
    )
    .unwrap();
}

fn respond(path: &str, body: &Value, nli: &RuleNli) -> (&'static str, Value) {
    match path {
        "/health" => (
            "200 OK",
            json!({"embed_model_id": "hash-embed", "nli_model_id": "rule-nli", "dim": DIM}),
        ),
        "/embed" => {
            let e = HashEmbedder::new(DIM, 0);
            let vectors: Vec<Vec<f64>> = body["texts"]
                .as_array()
                .unwrap()
                .iter()
                .map(|t| e.vector(t.as_str().unwrap()).values().to_vec())
                .collect();
            ("200 OK", json!({"dim": DIM, "vectors": vectors}))
        }
        "/nli" => {
            let labels: Vec<_> = body["pairs"]
                .as_array()
                .unwrap()
                .iter()
                .map(|p| nli.label(p[0].as_str().unwrap(), p[1].as_str().unwrap()))
                .collect();
            ("200 OK", json!({"labels": labels}))
        }
        _ => ("404 Not Found", json!({"error": "not found"})),
    }
}
