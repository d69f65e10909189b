#![allow(dead_code)]

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};

/// Local chat-completions server. Every reply names the first listed
/// option; request numbers in `garbled` get an unusable reply instead.
pub fn spawn_chat_mock(garbled: fn(usize) -> bool) -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let counter = std::sync::Arc::new(std::sync::atomic::AtomicUsize::new(0));
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { continue };
            let counter = counter.clone();
            std::thread::spawn(move || {
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut len = 0usize;
                loop {
                    let mut line = String::new();
                    if reader.read_line(&mut line).unwrap_or(0) == 0 {
                        return;
                    }
                    let l = line.trim_end().to_ascii_lowercase();
                    if l.is_empty() {
                        break;
                    }
                    if let Some(v) = l.strip_prefix("content-length:") {
                        len = v.trim().parse().unwrap();
                    }
                }
                let mut body = vec![0u8; len];
                reader.read_exact(&mut body).unwrap();
                let n = counter.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                let req: serde_json::Value = serde_json::from_slice(&body).unwrap();
                let user = req["messages"][1]["content"].as_str().unwrap_or("");
                let first = user.lines().find_map(|l| l.strip_prefix("- ")).unwrap_or("none");
                let content = if garbled(n) {
                    "cannot comply".to_string()
                } else {
                    format!(
                        "{{\"decision\":\"{first}\",\"confidence\":0.7,\"reasoning\":\"mock\",\"autonomy_justified\":true}}"
                    )
                };
                let resp = serde_json::json!({"choices":[{"message":{"role":"assistant","content":content}}]})
                    .to_string();
                let _ = write!(
                    stream,
                    "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
                    resp.len(),
                    resp
                );
            });
        }
    });
    format!("http://{addr}/v1")
}

/// Endpoint file for three models behind `base_url`.
pub fn write_endpoint_config(dir: &Path, base_url: &str, credential_env: &str) -> PathBuf {
    let endpoints: Vec<_> = ["model-a", "model-b", "model-c"]
        .iter()
        .map(|m| {
            serde_json::json!({
                "base_url": base_url,
                "model_id": m,
                "credential_env": credential_env,
                "timeout_s": 10,
                "max_tokens": 128
            })
        })
        .collect();
    let path = dir.join("endpoints.json");
    std::fs::write(
        &path,
        serde_json::to_string_pretty(&serde_json::json!({"schema_version": 1, "endpoints": endpoints})).unwrap(),
    )
    .unwrap();
    path
}

/// Relative path -> bytes for every file under `root`.
pub fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        let mut entries: Vec<_> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
        entries.sort();
        for p in entries {
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

pub fn repo_data(file: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(file)
}
