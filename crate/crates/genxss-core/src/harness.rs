//! WAF test driver: run validated payloads against an embedded ruleset or
//! a remote HTTP target, record outcomes, and derive confusion-matrix
//! metrics.

use std::collections::BTreeSet;
use std::sync::mpsc;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::corpus::{BenignSample, Payload, Validation, WafOutcome};
use crate::secrule::{evaluate, Disposition, HttpRequest, RuleSet};
use crate::{Error, Result};

/// Query parameter payloads are injected into.
pub const DEFAULT_PARAM: &str = "p16";

/// Where payloads are tested.
#[derive(Debug, Clone)]
pub enum WafTarget {
    /// Offline evaluation through the SecRule engine.
    Embedded(RuleSet),
    /// A live WAF-protected endpoint.
    Remote(RemoteTarget),
}

/// Remote target settings. A response counts as Blocked when its status is
/// in `blocked_statuses`; as Bypassed when it is 2xx AND the reflection
/// marker appears in the body. A 2xx without the marker means the app
/// sanitized the payload — neither blocked nor a working bypass — and is
/// recorded as indeterminate.
#[derive(Debug, Clone)]
pub struct RemoteTarget {
    pub base_url: String,
    pub blocked_statuses: BTreeSet<u16>,
    pub reflection_marker: String,
    pub param: String,
    pub concurrency: usize,
    pub timeout: Duration,
}

impl RemoteTarget {
    pub fn new(base_url: impl Into<String>, reflection_marker: impl Into<String>) -> Self {
        RemoteTarget {
            base_url: base_url.into(),
            blocked_statuses: [403u16, 406u16].into_iter().collect(),
            reflection_marker: reflection_marker.into(),
            param: DEFAULT_PARAM.to_string(),
            concurrency: 8,
            timeout: Duration::from_secs(10),
        }
    }
}

/// Per-payload failures that did not abort the batch.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PayloadError {
    pub id: String,
    pub error: String,
}

/// Batch outcome: every input payload with `waf_outcome` set (except those
/// with errors), ordered by id.
#[derive(Debug, Clone)]
pub struct TestOutcome {
    pub payloads: Vec<Payload>,
    pub errors: Vec<PayloadError>,
}

impl TestOutcome {
    pub fn blocked_count(&self) -> usize {
        self.payloads
            .iter()
            .filter(|p| matches!(p.waf_outcome, WafOutcome::Blocked(_)))
            .count()
    }

    pub fn bypassed_count(&self) -> usize {
        self.payloads
            .iter()
            .filter(|p| p.waf_outcome == WafOutcome::Bypassed)
            .count()
    }
}

/// Test validated payloads against the target. Outcomes are set on every
/// payload; network failures are recorded per payload without aborting.
/// Results are ordered by payload id.
pub fn test_payloads(payloads: &[Payload], target: &WafTarget) -> Result<TestOutcome> {
    for payload in payloads {
        if payload.validation != Validation::Valid {
            return Err(Error::InvalidPayload {
                id: payload.id.clone(),
                reason: "only validated payloads reach the WAF stage".into(),
            });
        }
    }
    let mut outcome = match target {
        WafTarget::Embedded(rules) => test_embedded(payloads, rules),
        WafTarget::Remote(remote) => test_remote(payloads, remote),
    };
    outcome.payloads.sort_by(|a, b| a.id.cmp(&b.id));
    outcome.errors.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(outcome)
}

/// Raw-string variant used for benign samples: same dispositions, no
/// validation precondition.
pub fn test_benign(
    samples: &[BenignSample],
    target: &WafTarget,
) -> Result<(Vec<BenignSample>, Vec<PayloadError>)> {
    let as_payloads: Vec<Payload> = samples
        .iter()
        .map(|s| Payload {
            id: s.id.clone(),
            raw: s.raw.clone(),
            attack_type: crate::corpus::AttackType::Reflected,
            source: crate::corpus::Source::Manual,
            validation: Validation::Valid,
            waf_outcome: WafOutcome::Untested,
        })
        .collect();
    let outcome = test_payloads(&as_payloads, target)?;
    let tested = outcome
        .payloads
        .into_iter()
        .map(|p| BenignSample {
            id: p.id,
            raw: p.raw,
            waf_outcome: p.waf_outcome,
        })
        .collect();
    Ok((tested, outcome.errors))
}

fn test_embedded(payloads: &[Payload], rules: &RuleSet) -> TestOutcome {
    let tested = payloads
        .iter()
        .map(|payload| {
            let request = HttpRequest::get(
                "/gym",
                vec![(DEFAULT_PARAM.to_string(), payload.raw.clone())],
            );
            let result = evaluate(&request, rules);
            let mut updated = payload.clone();
            updated.waf_outcome = match result.disposition {
                Disposition::Blocked => WafOutcome::Blocked(result.blocking_rule_ids(rules)),
                Disposition::Passed => WafOutcome::Bypassed,
            };
            updated
        })
        .collect();
    TestOutcome {
        payloads: tested,
        errors: Vec::new(),
    }
}

fn test_remote(payloads: &[Payload], remote: &RemoteTarget) -> TestOutcome {
    let client = match reqwest::blocking::Client::builder()
        .timeout(remote.timeout)
        .build()
    {
        Ok(c) => c,
        Err(e) => {
            return TestOutcome {
                payloads: Vec::new(),
                errors: payloads
                    .iter()
                    .map(|p| PayloadError {
                        id: p.id.clone(),
                        error: format!("client build failed: {e}"),
                    })
                    .collect(),
            }
        }
    };

    let jobs: Arc<Mutex<Vec<(usize, Payload)>>> = Arc::new(Mutex::new(
        payloads.iter().cloned().enumerate().rev().collect(),
    ));
    let (tx, rx) = mpsc::channel::<(usize, std::result::Result<Payload, PayloadError>)>();
    let workers = remote.concurrency.max(1).min(payloads.len().max(1));
    let mut handles = Vec::with_capacity(workers);
    for _ in 0..workers {
        let jobs = Arc::clone(&jobs);
        let tx = tx.clone();
        let client = client.clone();
        let remote = remote.clone();
        handles.push(std::thread::spawn(move || loop {
            let job = jobs.lock().unwrap().pop();
            let Some((idx, payload)) = job else { break };
            let result = probe_remote(&client, &remote, payload);
            if tx.send((idx, result)).is_err() {
                break;
            }
        }));
    }
    drop(tx);

    let mut tested = Vec::new();
    let mut errors = Vec::new();
    for (_, result) in rx {
        match result {
            Ok(payload) => tested.push(payload),
            Err(error) => errors.push(error),
        }
    }
    for handle in handles {
        let _ = handle.join();
    }
    TestOutcome {
        payloads: tested,
        errors,
    }
}

fn probe_remote(
    client: &reqwest::blocking::Client,
    remote: &RemoteTarget,
    mut payload: Payload,
) -> std::result::Result<Payload, PayloadError> {
    let url = format!(
        "{}/gym?{}={}",
        remote.base_url.trim_end_matches('/'),
        remote.param,
        payload.raw
    );
    let response = client.get(&url).send().map_err(|e| PayloadError {
        id: payload.id.clone(),
        error: e.to_string(),
    })?;
    let status = response.status().as_u16();
    if remote.blocked_statuses.contains(&status) {
        payload.waf_outcome = WafOutcome::Blocked(Vec::new());
        return Ok(payload);
    }
    if (200..300).contains(&status) {
        let body = response.text().map_err(|e| PayloadError {
            id: payload.id.clone(),
            error: e.to_string(),
        })?;
        if body.contains(&remote.reflection_marker) {
            payload.waf_outcome = WafOutcome::Bypassed;
            return Ok(payload);
        }
        return Err(PayloadError {
            id: payload.id,
            error: format!("indeterminate: 2xx status {status} without reflection marker"),
        });
    }
    Err(PayloadError {
        id: payload.id,
        error: format!("indeterminate: unexpected status {status}"),
    })
}

/// TP/FP/TN/FN counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn new(tp: u64, fp: u64, tn: u64, fn_: u64) -> Self {
        ConfusionMatrix { tp, fp, tn, fn_ }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Count blocked/bypassed attacks and benign samples into a confusion
/// matrix. Any untested input is an error.
pub fn compute_confusion(
    attack_results: &[Payload],
    benign_results: &[BenignSample],
) -> Result<ConfusionMatrix> {
    let mut cm = ConfusionMatrix::default();
    for payload in attack_results {
        match &payload.waf_outcome {
            WafOutcome::Blocked(_) => cm.tp += 1,
            WafOutcome::Bypassed => cm.fn_ += 1,
            WafOutcome::Untested => {
                return Err(Error::UntestedPayload {
                    id: payload.id.clone(),
                })
            }
        }
    }
    for sample in benign_results {
        match &sample.waf_outcome {
            WafOutcome::Blocked(_) => cm.fp += 1,
            WafOutcome::Bypassed => cm.tn += 1,
            WafOutcome::Untested => {
                return Err(Error::UntestedPayload {
                    id: sample.id.clone(),
                })
            }
        }
    }
    Ok(cm)
}

/// Derived metrics. A zero denominator leaves the metric undefined.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
}

/// Accuracy, precision, recall and F1 from a confusion matrix.
pub fn metrics(cm: &ConfusionMatrix) -> Result<Metrics> {
    if cm.total() == 0 {
        return Err(Error::EmptyConfusionMatrix);
    }
    let accuracy = Some((cm.tn + cm.tp) as f64 / cm.total() as f64);
    let precision = (cm.tp + cm.fp > 0).then(|| cm.tp as f64 / (cm.tp + cm.fp) as f64);
    let recall = (cm.tp + cm.fn_ > 0).then(|| cm.tp as f64 / (cm.tp + cm.fn_) as f64);
    let f1 = match (precision, recall) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        _ => None,
    };
    Ok(Metrics {
        accuracy,
        precision,
        recall,
        f1,
    })
}
