//! HTTP client for an external scoring service.
//!
//! Contract: `POST {endpoint}` with `{"text": ...}`, response `{"toxicity": x}`
//! where `x` is in `[0,1]`. Successful responses are cached by SHA-256 of the
//! whitespace-normalized text in a JSONL sidecar, so reruns do not touch the
//! network.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{is_scorable, ScorerKind, ToxicityScore};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RemoteConfig {
    /// Full URL of the scoring endpoint, e.g. `http://localhost:8080/score`.
    pub endpoint: String,
    pub timeout_secs: f64,
    pub max_attempts: u32,
    pub backoff_ms: u64,
    /// Maximum in-flight requests.
    pub concurrency: usize,
    pub cache_path: Option<PathBuf>,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        RemoteConfig {
            endpoint: "http://127.0.0.1:8080/score".into(),
            timeout_secs: 30.0,
            max_attempts: 3,
            backoff_ms: 250,
            concurrency: 4,
            cache_path: None,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct CacheLine {
    key: String,
    toxicity: f64,
}

#[derive(Serialize)]
struct ScoreRequest<'a> {
    text: &'a str,
}

#[derive(Deserialize)]
struct ScoreResponse {
    toxicity: f64,
}

struct Cache {
    map: HashMap<String, f64>,
    sidecar: Option<File>,
}

pub struct RemoteScorer {
    config: RemoteConfig,
    agent: ureq::Agent,
    cache: Mutex<Cache>,
    requests: AtomicUsize,
}

pub fn cache_key(text: &str) -> String {
    let normalized = text.split_whitespace().collect::<Vec<_>>().join(" ");
    hex::encode(Sha256::digest(normalized.as_bytes()))
}

fn load_cache(path: &Path) -> Result<HashMap<String, f64>> {
    let mut map = HashMap::new();
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(map),
        Err(e) => return Err(Error::io(path, e)),
    };
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<CacheLine>(&line) {
            Ok(c) => {
                map.insert(c.key, c.toxicity);
            }
            Err(e) => log::warn!("{}: ignoring bad cache line: {e}", path.display()),
        }
    }
    Ok(map)
}

impl RemoteScorer {
    pub fn new(config: RemoteConfig) -> Result<Self> {
        if config.max_attempts == 0 || config.concurrency == 0 {
            return Err(Error::InvalidParameter("remote scorer needs max_attempts and concurrency >= 1".into()));
        }
        let (map, sidecar) = match &config.cache_path {
            Some(p) => {
                let map = load_cache(p)?;
                let f = OpenOptions::new().create(true).append(true).open(p).map_err(|e| Error::io(p, e))?;
                (map, Some(f))
            }
            None => (HashMap::new(), None),
        };
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(config.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(RemoteScorer {
            config,
            agent,
            cache: Mutex::new(Cache { map, sidecar }),
            requests: AtomicUsize::new(0),
        })
    }

    /// HTTP requests issued so far (retries included).
    pub fn request_count(&self) -> usize {
        self.requests.load(Ordering::Relaxed)
    }

    fn cached(&self, key: &str) -> Option<f64> {
        self.cache.lock().expect("cache lock").map.get(key).copied()
    }

    fn store(&self, key: String, toxicity: f64) -> Result<()> {
        let mut cache = self.cache.lock().expect("cache lock");
        if let Some(f) = cache.sidecar.as_mut() {
            let line = serde_json::to_string(&CacheLine { key: key.clone(), toxicity }).expect("cache line");
            writeln!(f, "{line}").map_err(|e| Error::io(self.config.cache_path.clone().unwrap_or_default(), e))?;
        }
        cache.map.insert(key, toxicity);
        Ok(())
    }

    fn request_once(&self, text: &str) -> std::result::Result<f64, (bool, String)> {
        self.requests.fetch_add(1, Ordering::Relaxed);
        let body = serde_json::to_string(&ScoreRequest { text }).expect("request serializes");
        let mut resp = self
            .agent
            .post(&self.config.endpoint)
            .header("Content-Type", "application/json")
            .send(body.as_str())
            .map_err(|e| (true, format!("transport: {e}")))?;
        let status = resp.status();
        let payload = resp.body_mut().read_to_string().map_err(|e| (true, format!("body: {e}")))?;
        if !status.is_success() {
            return Err((true, format!("HTTP {status}")));
        }
        let parsed: ScoreResponse =
            serde_json::from_str(&payload).map_err(|e| (false, format!("bad response `{payload}`: {e}")))?;
        if !(0.0..=1.0).contains(&parsed.toxicity) {
            return Err((false, format!("toxicity {} outside [0,1]", parsed.toxicity)));
        }
        Ok(parsed.toxicity)
    }

    /// Scores one text, consulting the cache first. Transport failures and
    /// non-2xx statuses are retried with exponential backoff; protocol errors
    /// are not.
    pub fn score_text(&self, text: &str) -> Result<f64> {
        let key = cache_key(text);
        if let Some(x) = self.cached(&key) {
            return Ok(x);
        }
        let mut last = String::new();
        for attempt in 0..self.config.max_attempts {
            if attempt > 0 {
                std::thread::sleep(Duration::from_millis(self.config.backoff_ms << (attempt - 1)));
            }
            match self.request_once(text) {
                Ok(x) => {
                    self.store(key, x)?;
                    return Ok(x);
                }
                Err((false, msg)) => return Err(Error::Protocol(msg)),
                Err((true, msg)) => {
                    log::debug!("scorer attempt {} failed: {msg}", attempt + 1);
                    last = msg;
                }
            }
        }
        Err(Error::Protocol(format!("giving up after {} attempts: {last}", self.config.max_attempts)))
    }

    pub fn score(&self, tweet_id: &str, text: &str) -> ToxicityScore {
        if !is_scorable(text) {
            return ToxicityScore::unscorable(tweet_id, ScorerKind::Remote, None);
        }
        match self.score_text(text) {
            Ok(x) => ToxicityScore::scored(tweet_id, x, ScorerKind::Remote),
            Err(e) => {
                log::warn!("tweet {tweet_id}: {e}");
                ToxicityScore::unscorable(tweet_id, ScorerKind::Remote, Some(e.to_string()))
            }
        }
    }

    /// Scores `(tweet_id, text)` pairs with at most `concurrency` requests in
    /// flight. Identical texts are requested once.
    pub fn score_batch(&self, items: &[(String, String)]) -> Vec<ToxicityScore> {
        let mut unique: Vec<&str> = Vec::new();
        let mut seen = HashMap::new();
        for (_, text) in items {
            if is_scorable(text) && !seen.contains_key(text.as_str()) {
                seen.insert(text.as_str(), unique.len());
                unique.push(text);
            }
        }
        let results: Vec<Mutex<Option<std::result::Result<f64, String>>>> = unique.iter().map(|_| Mutex::new(None)).collect();
        let next = AtomicUsize::new(0);
        let workers = self.config.concurrency.min(unique.len().max(1));
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= unique.len() {
                        break;
                    }
                    let r = self.score_text(unique[i]).map_err(|e| e.to_string());
                    *results[i].lock().expect("result slot") = Some(r);
                });
            }
        });
        let results: Vec<_> = results.into_iter().map(|m| m.into_inner().expect("result slot")).collect();
        items
            .iter()
            .map(|(id, text)| match seen.get(text.as_str()) {
                None => ToxicityScore::unscorable(id, ScorerKind::Remote, None),
                Some(&i) => match &results[i] {
                    Some(Ok(x)) => ToxicityScore::scored(id, *x, ScorerKind::Remote),
                    Some(Err(e)) => {
                        log::warn!("tweet {id}: {e}");
                        ToxicityScore::unscorable(id, ScorerKind::Remote, Some(e.clone()))
                    }
                    None => ToxicityScore::unscorable(id, ScorerKind::Remote, Some("not scored".into())),
                },
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cache_key_ignores_whitespace_layout() {
        assert_eq!(cache_key("a  b\n"), cache_key("a b"));
        assert_ne!(cache_key("a b"), cache_key("a c"));
        assert_eq!(cache_key("x").len(), 64);
    }

    #[test]
    fn rejects_zero_attempts() {
        let cfg = RemoteConfig {
            max_attempts: 0,
            ..Default::default()
        };
        assert!(RemoteScorer::new(cfg).is_err());
    }
}
