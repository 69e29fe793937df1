//! Request evaluation against a parsed ruleset.

use serde::{Deserialize, Serialize};

use crate::normalize::{apply_chain, url_decode};

use super::{Disruptive, HttpRequest, Method, RuleSet, SecRule, Variable};

/// Final disposition of a request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Disposition {
    Blocked,
    Passed,
}

/// What a matching rule saw: the expanded variable, the value after the
/// rule's transformation chain, and the matched byte span within it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Evidence {
    pub rule_id: u64,
    pub variable: String,
    pub transformed: String,
    pub span: (usize, usize),
}

/// Evaluation outcome: disposition, every matched rule id in file order,
/// and per-rule evidence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchResult {
    pub disposition: Disposition,
    pub matched_rule_ids: Vec<u64>,
    pub evidence: Vec<Evidence>,
}

impl MatchResult {
    /// Ids of matched deny rules (chain starters for matched chains).
    pub fn blocking_rule_ids(&self, rules: &RuleSet) -> Vec<u64> {
        self.matched_rule_ids
            .iter()
            .copied()
            .filter(|id| {
                rules
                    .rules
                    .iter()
                    .any(|r| r.id == *id && r.disruptive == Some(Disruptive::Deny))
            })
            .collect()
    }
}

/// Expand a rule variable into `(label, value)` targets. ARGS values and
/// names are URL-decoded exactly once, mirroring argument parsing; anything
/// further must come from explicit `t:` entries. Phase-1 rules do not see
/// body-derived args.
fn expand_targets(var: Variable, req: &HttpRequest, phase: u8) -> Vec<(String, String)> {
    match var {
        Variable::Args => {
            let mut out: Vec<(String, String)> = req
                .query
                .iter()
                .map(|(k, v)| (format!("ARGS:{}", url_decode(k)), url_decode(v)))
                .collect();
            if phase >= 2 {
                for (k, v) in body_params(req) {
                    out.push((format!("ARGS:{k}"), v));
                }
            }
            out
        }
        Variable::ArgsNames => {
            let mut out: Vec<(String, String)> = req
                .query
                .iter()
                .map(|(k, _)| ("ARGS_NAMES".to_string(), url_decode(k)))
                .collect();
            if phase >= 2 {
                for (k, _) in body_params(req) {
                    out.push(("ARGS_NAMES".to_string(), k));
                }
            }
            out
        }
        Variable::QueryString => vec![("QUERY_STRING".to_string(), req.raw_query())],
        Variable::RequestUri => vec![("REQUEST_URI".to_string(), req.request_uri())],
        Variable::RequestHeaders => req
            .headers
            .iter()
            .map(|(k, v)| (format!("REQUEST_HEADERS:{k}"), v.clone()))
            .collect(),
    }
}

/// Form-encoded body parameters, URL-decoded once. Only POST bodies are
/// parsed.
fn body_params(req: &HttpRequest) -> Vec<(String, String)> {
    if req.method != Method::Post || req.body.is_empty() {
        return Vec::new();
    }
    let body = String::from_utf8_lossy(&req.body);
    body.split('&')
        .filter(|part| !part.is_empty())
        .map(|part| match part.split_once('=') {
            Some((k, v)) => (url_decode(k), url_decode(v)),
            None => (url_decode(part), String::new()),
        })
        .collect()
}

/// Does `rule` match the request? Negation applies per target: the rule
/// matches if any expanded target satisfies the (possibly negated)
/// operator. Returns the first matching target's evidence.
fn rule_matches(rule: &SecRule, req: &HttpRequest) -> Option<Evidence> {
    for var in &rule.variables {
        for (label, value) in expand_targets(*var, req, rule.phase) {
            let (transformed, _) = apply_chain(&value, &rule.transformations);
            let hit = rule.operator.find(&transformed);
            let matched = if rule.operator.negated {
                hit.is_none()
            } else {
                hit.is_some()
            };
            if matched {
                return Some(Evidence {
                    rule_id: rule.id,
                    variable: label,
                    transformed,
                    span: hit.unwrap_or((0, 0)),
                });
            }
        }
    }
    None
}

/// Evaluate `req` against `rules` in file order. A chain group matches iff
/// all members match; disposition is Blocked iff at least one deny rule or
/// complete deny chain matched. All rules are always evaluated so evidence
/// is complete.
pub fn evaluate(req: &HttpRequest, rules: &RuleSet) -> MatchResult {
    let mut matched_rule_ids = Vec::new();
    let mut evidence = Vec::new();
    let mut blocked = false;

    for group in rules.chain_groups() {
        let mut group_evidence = Vec::with_capacity(group.len());
        let mut all = true;
        for rule in group {
            match rule_matches(rule, req) {
                Some(ev) => group_evidence.push(ev),
                None => {
                    all = false;
                    break;
                }
            }
        }
        if all {
            for (rule, ev) in group.iter().zip(group_evidence) {
                matched_rule_ids.push(rule.id);
                evidence.push(ev);
            }
            if group[0].effective_disruptive() == Disruptive::Deny {
                blocked = true;
            }
        }
    }

    MatchResult {
        disposition: if blocked {
            Disposition::Blocked
        } else {
            Disposition::Passed
        },
        matched_rule_ids,
        evidence,
    }
}
