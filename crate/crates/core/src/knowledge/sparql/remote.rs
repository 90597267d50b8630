//! SPARQL 1.1 protocol client with an on-disk response cache.

use std::collections::HashMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use serde_json::Value as Json;
use sha2::{Digest, Sha256};

use super::{Binding, BindingSet};
use crate::knowledge::StoreError;

const RESULTS_MIME: &str = "application/sparql-results+json";

/// Counting semaphore bounding in-flight requests.
#[derive(Debug)]
struct Slots {
    free: Mutex<usize>,
    cv: Condvar,
}

struct SlotGuard<'a>(&'a Slots);

impl Slots {
    fn acquire(&self) -> SlotGuard<'_> {
        let mut free = self.free.lock().unwrap_or_else(|e| e.into_inner());
        while *free == 0 {
            free = self.cv.wait(free).unwrap_or_else(|e| e.into_inner());
        }
        *free -= 1;
        SlotGuard(self)
    }
}

impl Drop for SlotGuard<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.cv.notify_one();
    }
}

#[derive(Debug)]
struct Inner {
    url: String,
    cache_dir: Option<PathBuf>,
    timeout: Duration,
    slots: Slots,
    key_locks: Mutex<HashMap<String, Arc<Mutex<()>>>>,
}

/// A remote endpoint. Cloning shares the concurrency limit and cache locks.
#[derive(Clone, Debug)]
pub struct RemoteEndpoint {
    inner: Arc<Inner>,
}

fn remote(message: impl Into<String>, retriable: bool) -> StoreError {
    StoreError::Remote { message: message.into(), retriable }
}

impl RemoteEndpoint {
    pub fn new(url: impl Into<String>) -> Self {
        RemoteEndpoint::with_options(url, None, Duration::from_secs(60), 4)
    }

    /// `max_in_flight` is clamped to at least one.
    pub fn with_options(url: impl Into<String>, cache_dir: Option<PathBuf>, timeout: Duration, max_in_flight: usize) -> Self {
        RemoteEndpoint {
            inner: Arc::new(Inner {
                url: url.into(),
                cache_dir,
                timeout,
                slots: Slots { free: Mutex::new(max_in_flight.max(1)), cv: Condvar::new() },
                key_locks: Mutex::new(HashMap::new()),
            }),
        }
    }

    pub fn url(&self) -> &str {
        &self.inner.url
    }

    pub fn cache_dir(&self) -> Option<&Path> {
        self.inner.cache_dir.as_deref()
    }

    /// Cache key: hex SHA-256 of `url`, a newline, and the query text.
    pub fn cache_key(&self, query: &str) -> String {
        let mut h = Sha256::new();
        h.update(self.inner.url.as_bytes());
        h.update(b"\n");
        h.update(query.as_bytes());
        hex::encode(h.finalize())
    }

    fn key_lock(&self, key: &str) -> Arc<Mutex<()>> {
        let mut locks = self.inner.key_locks.lock().unwrap_or_else(|e| e.into_inner());
        locks.entry(key.to_string()).or_default().clone()
    }

    /// Runs a SELECT query, answering from the cache when possible.
    pub fn select(&self, query: &str) -> Result<BindingSet, StoreError> {
        let Some(dir) = self.inner.cache_dir.as_deref() else {
            return parse_results_json(&self.fetch(query)?);
        };
        let key = self.cache_key(query);
        let lock = self.key_lock(&key);
        let _held = lock.lock().unwrap_or_else(|e| e.into_inner());
        let path = dir.join(format!("{key}.json"));
        if let Ok(body) = fs::read_to_string(&path) {
            if let Ok(set) = parse_results_json(&body) {
                return Ok(set);
            }
        }
        let body = self.fetch(query)?;
        let set = parse_results_json(&body)?;
        write_atomic(dir, &path, body.as_bytes())
            .map_err(|source| StoreError::Io { path: path.display().to_string(), source })?;
        Ok(set)
    }

    fn fetch(&self, query: &str) -> Result<String, StoreError> {
        let _slot = self.inner.slots.acquire();
        let agent: ureq::Agent = ureq::Agent::config_builder().timeout_global(Some(self.inner.timeout)).build().into();
        let response = agent
            .post(&self.inner.url)
            .header("Accept", RESULTS_MIME)
            .send_form([("query", query)]);
        let mut response = match response {
            Ok(r) => r,
            Err(ureq::Error::StatusCode(code)) => {
                return Err(remote(format!("{} returned HTTP {code}", self.inner.url), code == 429 || code >= 500));
            }
            Err(e @ (ureq::Error::Timeout(_) | ureq::Error::Io(_) | ureq::Error::ConnectionFailed)) => {
                return Err(remote(format!("{}: {e}", self.inner.url), true));
            }
            Err(e) => return Err(remote(format!("{}: {e}", self.inner.url), false)),
        };
        response
            .body_mut()
            .read_to_string()
            .map_err(|e| remote(format!("reading response from {}: {e}", self.inner.url), true))
    }
}

fn write_atomic(dir: &Path, path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

/// Parses an `application/sparql-results+json` document.
pub fn parse_results_json(body: &str) -> Result<BindingSet, StoreError> {
    let doc: Json = serde_json::from_str(body).map_err(|e| remote(format!("malformed results document: {e}"), false))?;
    let rows = doc
        .pointer("/results/bindings")
        .and_then(Json::as_array)
        .ok_or_else(|| remote("results document has no `results.bindings` array", false))?;
    let mut out = BindingSet::new();
    for row in rows {
        let obj = row.as_object().ok_or_else(|| remote("binding is not an object", false))?;
        let mut b = Binding::new();
        for (var, term) in obj {
            let value = term
                .get("value")
                .and_then(Json::as_str)
                .ok_or_else(|| remote(format!("binding for ?{var} has no string `value`"), false))?;
            b.insert(var.clone(), value.to_string());
        }
        out.insert(b);
    }
    Ok(out)
}
