//! Domain types and the persistent payload/result corpus.
//!
//! Corpora are stored as JSONL (one payload object per line) because results
//! accrue append-only across pipeline stages. Enum values serialize as exact
//! lowercase strings so golden files stay stable; unknown fields are
//! rejected.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Attack classification, mirroring the corpus result tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackType {
    Reflected,
    DomBased,
}

impl AttackType {
    pub fn as_str(&self) -> &'static str {
        match self {
            AttackType::Reflected => "reflected",
            AttackType::DomBased => "dom_based",
        }
    }
}

/// Where a payload came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Manual,
    LlmGenerated { provider: String, prompt: String },
}

/// Syntactic validation verdict carried by a payload.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Validation {
    Unchecked,
    Valid,
    Invalid(String),
}

/// Outcome of submitting a payload to a WAF target.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WafOutcome {
    Untested,
    Blocked(Vec<u64>),
    Bypassed,
}

/// One attack string with provenance, validation verdict and WAF outcome.
///
/// `raw` holds the exact URL-encoded form submitted on the wire; CR/LF bytes
/// must appear percent-encoded, never raw.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Payload {
    pub id: String,
    pub raw: String,
    pub attack_type: AttackType,
    pub source: Source,
    pub validation: Validation,
    pub waf_outcome: WafOutcome,
}

impl Payload {
    /// Construct an unchecked, untested payload.
    pub fn new(id: impl Into<String>, raw: impl Into<String>, attack_type: AttackType) -> Self {
        Payload {
            id: id.into(),
            raw: raw.into(),
            attack_type,
            source: Source::Manual,
            validation: Validation::Unchecked,
            waf_outcome: WafOutcome::Untested,
        }
    }

    /// Check the per-payload invariants.
    pub fn check(&self) -> Result<()> {
        if self.raw.is_empty() {
            return Err(Error::InvalidPayload {
                id: self.id.clone(),
                reason: "raw is empty".into(),
            });
        }
        if self.raw.contains('\r') || self.raw.contains('\n') {
            return Err(Error::InvalidPayload {
                id: self.id.clone(),
                reason: "raw contains unencoded CR/LF".into(),
            });
        }
        if self.waf_outcome != WafOutcome::Untested && self.validation != Validation::Valid {
            return Err(Error::InvalidPayload {
                id: self.id.clone(),
                reason: "waf_outcome set on a payload that is not Valid".into(),
            });
        }
        Ok(())
    }
}

/// A benign (non-attack) sample used for false-positive measurement. Same
/// JSONL schema as [`Payload`] with the `attack_type` field absent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenignSample {
    pub id: String,
    pub raw: String,
    #[serde(default = "untested")]
    pub waf_outcome: WafOutcome,
}

fn untested() -> WafOutcome {
    WafOutcome::Untested
}

/// Ordered payload collection plus free-form string metadata.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    pub payloads: Vec<Payload>,
    pub metadata: BTreeMap<String, String>,
}

impl Corpus {
    pub fn new() -> Self {
        Corpus::default()
    }

    pub fn len(&self) -> usize {
        self.payloads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.payloads.is_empty()
    }

    /// Append a payload, rejecting duplicate ids.
    pub fn push(&mut self, payload: Payload) -> Result<()> {
        payload.check()?;
        if self.payloads.iter().any(|p| p.id == payload.id) {
            return Err(Error::DuplicateId { id: payload.id });
        }
        self.payloads.push(payload);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&Payload> {
        self.payloads.iter().find(|p| p.id == id)
    }

    /// Sort payloads by id (the deterministic on-disk order).
    pub fn sort_by_id(&mut self) {
        self.payloads.sort_by(|a, b| a.id.cmp(&b.id));
    }

    /// Next free id of the form `<prefix>NNNN`.
    pub fn next_id(&self, prefix: &str) -> String {
        let mut n = self.payloads.len() as u64 + 1;
        loop {
            let id = format!("{prefix}{n:04}");
            if self.get(&id).is_none() {
                return id;
            }
            n += 1;
        }
    }
}

/// Sidecar path carrying the corpus metadata map (the JSONL file itself
/// holds payload records only).
fn metadata_path(path: &Path) -> std::path::PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    path.with_file_name(name)
}

/// Load a JSONL corpus. Every line must parse; duplicate ids are rejected.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let file = fs::File::open(path).map_err(|e| Error::io(&display, e))?;
    let reader = BufReader::new(file);
    let mut corpus = Corpus::new();
    let meta_path = metadata_path(path);
    if meta_path.exists() {
        let text = fs::read_to_string(&meta_path)
            .map_err(|e| Error::io(meta_path.display().to_string(), e))?;
        corpus.metadata = serde_json::from_str(&text).map_err(|e| Error::MalformedLine {
            path: meta_path.display().to_string(),
            line: 1,
            reason: e.to_string(),
        })?;
    }
    let mut seen: HashSet<String> = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(&display, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let payload: Payload = serde_json::from_str(&line).map_err(|e| Error::MalformedLine {
            path: display.clone(),
            line: idx + 1,
            reason: e.to_string(),
        })?;
        payload.check()?;
        if !seen.insert(payload.id.clone()) {
            return Err(Error::DuplicateId { id: payload.id });
        }
        corpus.payloads.push(payload);
    }
    Ok(corpus)
}

/// Save a corpus as JSONL, one compact object per line, in stored order.
pub fn save_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let mut out = Vec::new();
    for payload in &corpus.payloads {
        serde_json::to_writer(&mut out, payload).expect("payload serialization cannot fail");
        out.push(b'\n');
    }
    let mut file = fs::File::create(path).map_err(|e| Error::io(&display, e))?;
    file.write_all(&out).map_err(|e| Error::io(&display, e))?;
    if !corpus.metadata.is_empty() {
        let meta_path = metadata_path(path);
        let json = serde_json::to_string_pretty(&corpus.metadata).expect("metadata serializes");
        fs::write(&meta_path, json).map_err(|e| Error::io(meta_path.display().to_string(), e))?;
    }
    Ok(())
}

/// Collapse payloads with identical `raw` strings to the first occurrence,
/// preserving the relative order of survivors.
pub fn dedup(corpus: &Corpus) -> Corpus {
    let mut seen: HashSet<&str> = HashSet::new();
    let mut out = Corpus {
        payloads: Vec::with_capacity(corpus.payloads.len()),
        metadata: corpus.metadata.clone(),
    };
    for payload in &corpus.payloads {
        if seen.insert(payload.raw.as_str()) {
            out.payloads.push(payload.clone());
        }
    }
    out
}

/// Load benign samples (JSONL with no `attack_type` field).
pub fn load_benign(path: impl AsRef<Path>) -> Result<Vec<BenignSample>> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let file = fs::File::open(path).map_err(|e| Error::io(&display, e))?;
    let reader = BufReader::new(file);
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(&display, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let sample: BenignSample =
            serde_json::from_str(&line).map_err(|e| Error::MalformedLine {
                path: display.clone(),
                line: idx + 1,
                reason: e.to_string(),
            })?;
        out.push(sample);
    }
    Ok(out)
}
