use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use advint::toxicity::{RemoteConfig, RemoteScorer};

/// Minimal HTTP/1.1 server answering every POST with `status` and `body`.
struct Stub {
    url: String,
    hits: Arc<AtomicUsize>,
}

fn handle(mut stream: TcpStream, status: &str, body: &str) {
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut len = 0usize;
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line).unwrap_or(0) == 0 {
            return;
        }
        let l = line.trim_end();
        if l.is_empty() {
            break;
        }
        if let Some((k, v)) = l.split_once(':') {
            if k.eq_ignore_ascii_case("content-length") {
                len = v.trim().parse().unwrap();
            }
        }
    }
    let mut payload = vec![0u8; len];
    reader.read_exact(&mut payload).unwrap();
    let resp = format!(
        "HTTP/1.1 {status}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    );
    let _ = stream.write_all(resp.as_bytes());
}

fn stub(status: &'static str, body: &'static str) -> Stub {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let hits = Arc::new(AtomicUsize::new(0));
    let h = hits.clone();
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(stream) = stream else { break };
            h.fetch_add(1, Ordering::SeqCst);
            std::thread::spawn(move || handle(stream, status, body));
        }
    });
    Stub {
        url: format!("http://{addr}/score"),
        hits,
    }
}

fn config(url: &str) -> RemoteConfig {
    RemoteConfig {
        endpoint: url.to_string(),
        timeout_secs: 5.0,
        backoff_ms: 1,
        ..Default::default()
    }
}

#[test]
fn passes_service_score_through() {
    let s = stub("200 OK", r#"{"toxicity": 0.85}"#);
    let scorer = RemoteScorer::new(config(&s.url)).unwrap();
    let score = scorer.score("t1", "you absolute clown");
    assert!(score.scorable);
    assert_eq!(score.score, Some(0.85));
    assert_eq!(s.hits.load(Ordering::SeqCst), 1);
}

#[test]
fn persistent_server_error_gives_unscorable_after_three_attempts() {
    let s = stub("500 Internal Server Error", "{}");
    let scorer = RemoteScorer::new(config(&s.url)).unwrap();
    let score = scorer.score("t1", "you absolute clown");
    assert!(!score.scorable);
    assert_eq!(score.score, None);
    assert_eq!(scorer.request_count(), 3);
    assert_eq!(s.hits.load(Ordering::SeqCst), 3);
}

#[test]
fn out_of_range_response_is_not_retried() {
    let s = stub("200 OK", r#"{"toxicity": 1.5}"#);
    let scorer = RemoteScorer::new(config(&s.url)).unwrap();
    assert!(!scorer.score("t1", "you absolute clown").scorable);
    assert_eq!(scorer.request_count(), 1);
}

#[test]
fn cache_sidecar_avoids_second_request() {
    let s = stub("200 OK", r#"{"toxicity": 0.85}"#);
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache.jsonl");
    let cfg = RemoteConfig {
        cache_path: Some(cache.clone()),
        ..config(&s.url)
    };
    {
        let scorer = RemoteScorer::new(cfg.clone()).unwrap();
        assert_eq!(scorer.score("t1", "you   absolute clown").score, Some(0.85));
        // same text after whitespace normalization
        assert_eq!(scorer.score("t2", "you absolute clown").score, Some(0.85));
        assert_eq!(scorer.request_count(), 1);
    }
    let again = RemoteScorer::new(cfg).unwrap();
    assert_eq!(again.score("t3", "you absolute clown").score, Some(0.85));
    assert_eq!(again.request_count(), 0);
    assert_eq!(s.hits.load(Ordering::SeqCst), 1);
}

#[test]
fn batch_dedups_identical_texts() {
    let s = stub("200 OK", r#"{"toxicity": 0.2}"#);
    let scorer = RemoteScorer::new(config(&s.url)).unwrap();
    let items: Vec<(String, String)> = (0..6)
        .map(|i| (format!("t{i}"), if i % 2 == 0 { "first text here" } else { "second text here" }.to_string()))
        .chain([("t9".to_string(), "x".to_string())])
        .collect();
    let scores = scorer.score_batch(&items);
    assert_eq!(scores.len(), 7);
    assert!(scores[..6].iter().all(|s| s.score == Some(0.2)));
    assert!(!scores[6].scorable);
    assert_eq!(scorer.request_count(), 2);
}

#[test]
fn unreachable_service_is_unscorable() {
    // bind then drop to get a closed port
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let scorer = RemoteScorer::new(config(&format!("http://127.0.0.1:{port}/score"))).unwrap();
    let score = scorer.score("t1", "you absolute clown");
    assert!(!score.scorable);
    assert!(score.error.is_some());
}
