//! ModSecurity SecRule subset: parsing, request evaluation and linting.
//!
//! Supported surface:
//! * variables `ARGS`, `ARGS_NAMES`, `QUERY_STRING`, `REQUEST_URI`,
//!   `REQUEST_HEADERS`
//! * operators `@rx`, `@contains`, `@pm`, `@beginsWith`, `@endsWith`,
//!   each optionally negated with `!`
//! * actions `id`, `phase` (1 or 2), `deny`/`pass`, `status`, `msg`,
//!   `severity`, `chain` and ordered `t:` transformations; `log`/`nolog`/
//!   `auditlog`/`noauditlog`/`capture`/`tag`/`rev`/`ver` are accepted and
//!   ignored
//!
//! The regex dialect is the linear-time subset (no backreferences, no
//! lookaround). Phases collapse to request-time evaluation: phase 1 sees
//! the request line and headers, phase 2 adds args and body. Disposition is
//! first-deny-wins; there is no anomaly scoring.

mod eval;
mod lint;
mod parse;

pub use eval::{evaluate, Disposition, Evidence, MatchResult};
pub use lint::{lint_ruleset, LintWarning};
pub use parse::parse_ruleset;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::normalize::Transformation;

/// Request slots a rule can point its operator at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variable {
    Args,
    ArgsNames,
    QueryString,
    RequestUri,
    RequestHeaders,
}

impl Variable {
    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "ARGS" => Variable::Args,
            "ARGS_NAMES" => Variable::ArgsNames,
            "QUERY_STRING" => Variable::QueryString,
            "REQUEST_URI" => Variable::RequestUri,
            "REQUEST_HEADERS" => Variable::RequestHeaders,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Variable::Args => "ARGS",
            Variable::ArgsNames => "ARGS_NAMES",
            Variable::QueryString => "QUERY_STRING",
            Variable::RequestUri => "REQUEST_URI",
            Variable::RequestHeaders => "REQUEST_HEADERS",
        }
    }
}

/// Operator kinds of the supported subset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    Rx,
    Contains,
    Pm,
    BeginsWith,
    EndsWith,
}

impl OperatorKind {
    pub fn name(&self) -> &'static str {
        match self {
            OperatorKind::Rx => "rx",
            OperatorKind::Contains => "contains",
            OperatorKind::Pm => "pm",
            OperatorKind::BeginsWith => "beginsWith",
            OperatorKind::EndsWith => "endsWith",
        }
    }
}

/// A compiled operator: kind, raw argument and negation flag.
#[derive(Debug, Clone)]
pub struct Operator {
    pub kind: OperatorKind,
    pub argument: String,
    pub negated: bool,
    /// Compiled pattern, present iff `kind == Rx`.
    pub(crate) regex: Option<Regex>,
}

impl Operator {
    /// Match `value`, ignoring the negation flag. Returns the matched byte
    /// span on success.
    pub(crate) fn find(&self, value: &str) -> Option<(usize, usize)> {
        match self.kind {
            OperatorKind::Rx => self
                .regex
                .as_ref()
                .and_then(|re| re.find(value))
                .map(|m| (m.start(), m.end())),
            OperatorKind::Contains => value
                .find(&self.argument)
                .map(|s| (s, s + self.argument.len())),
            OperatorKind::Pm => {
                let lower = value.to_lowercase();
                for phrase in self.argument.split_whitespace() {
                    let phrase = phrase.to_lowercase();
                    if let Some(s) = lower.find(&phrase) {
                        return Some((s, s + phrase.len()));
                    }
                }
                None
            }
            OperatorKind::BeginsWith => value
                .starts_with(&self.argument)
                .then_some((0, self.argument.len())),
            OperatorKind::EndsWith => value
                .ends_with(&self.argument)
                .then(|| (value.len() - self.argument.len(), value.len())),
        }
    }
}

/// Disruptive action of a rule (or chain starter).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Disruptive {
    Deny,
    Pass,
}

/// One parsed `SecRule` directive.
#[derive(Debug, Clone)]
pub struct SecRule {
    pub id: u64,
    pub variables: Vec<Variable>,
    pub operator: Operator,
    pub transformations: Vec<Transformation>,
    pub phase: u8,
    /// `None` on chain members, which must not carry a disruptive action.
    pub disruptive: Option<Disruptive>,
    pub status: Option<u16>,
    pub msg: Option<String>,
    pub severity: Option<String>,
    pub chain: bool,
    /// Source line of the directive, for diagnostics.
    pub line: usize,
}

impl SecRule {
    /// Effective disruptive action (chain members inherit Pass).
    pub fn effective_disruptive(&self) -> Disruptive {
        self.disruptive.unwrap_or(Disruptive::Pass)
    }

    /// Status sent when this rule denies; 403 when unspecified.
    pub fn effective_status(&self) -> u16 {
        self.status.unwrap_or(403)
    }
}

/// A parsed ruleset: rules in file order, chains contiguous.
#[derive(Debug, Clone, Default)]
pub struct RuleSet {
    pub rules: Vec<SecRule>,
}

impl RuleSet {
    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    /// Contiguous chain groups: each group is a starter plus zero or more
    /// chained continuation rules.
    pub fn chain_groups(&self) -> Vec<&[SecRule]> {
        let mut groups = Vec::new();
        let mut start = 0;
        while start < self.rules.len() {
            let mut end = start;
            while self.rules[end].chain && end + 1 < self.rules.len() {
                end += 1;
            }
            groups.push(&self.rules[start..=end]);
            start = end + 1;
        }
        groups
    }

    /// Canonical `.conf` serialization. Operator arguments have `\` and `"`
    /// escaped, so the output reparses to an identical ruleset.
    pub fn to_conf(&self) -> String {
        let mut out = String::new();
        for rule in &self.rules {
            let vars: Vec<&str> = rule.variables.iter().map(|v| v.name()).collect();
            let mut op = String::new();
            if rule.operator.negated {
                op.push('!');
            }
            op.push('@');
            op.push_str(rule.operator.kind.name());
            if !rule.operator.argument.is_empty() {
                op.push(' ');
                op.push_str(&escape_quoted(&rule.operator.argument));
            }
            let mut actions: Vec<String> = vec![format!("id:{}", rule.id)];
            actions.push(format!("phase:{}", rule.phase));
            match rule.disruptive {
                Some(Disruptive::Deny) => actions.push("deny".into()),
                Some(Disruptive::Pass) => actions.push("pass".into()),
                None => {}
            }
            if let Some(status) = rule.status {
                actions.push(format!("status:{status}"));
            }
            for t in &rule.transformations {
                actions.push(format!("t:{}", t.name()));
            }
            if let Some(msg) = &rule.msg {
                actions.push(format!("msg:'{msg}'"));
            }
            if let Some(sev) = &rule.severity {
                actions.push(format!("severity:'{sev}'"));
            }
            if rule.chain {
                actions.push("chain".into());
            }
            out.push_str(&format!(
                "SecRule {} \"{}\" \"{}\"\n",
                vars.join("|"),
                op,
                actions.join(",")
            ));
        }
        out
    }
}

fn escape_quoted(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// HTTP method subset the engine evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    Get,
    Post,
}

/// The transaction a ruleset is evaluated against. Query values are stored
/// URL-encoded exactly as sent; names may repeat.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpRequest {
    pub method: Method,
    pub path: String,
    pub query: Vec<(String, String)>,
    pub headers: Vec<(String, String)>,
    pub body: Vec<u8>,
}

impl HttpRequest {
    /// GET request with the given raw (still URL-encoded) query pairs.
    pub fn get(path: impl Into<String>, query: Vec<(String, String)>) -> Self {
        HttpRequest {
            method: Method::Get,
            path: path.into(),
            query,
            headers: Vec::new(),
            body: Vec::new(),
        }
    }

    /// Raw query string exactly as it would appear on the request line.
    pub fn raw_query(&self) -> String {
        self.query
            .iter()
            .map(|(k, v)| {
                if v.is_empty() {
                    k.clone()
                } else {
                    format!("{k}={v}")
                }
            })
            .collect::<Vec<_>>()
            .join("&")
    }

    /// `REQUEST_URI`: path plus raw query when present.
    pub fn request_uri(&self) -> String {
        if self.query.is_empty() {
            self.path.clone()
        } else {
            format!("{}?{}", self.path, self.raw_query())
        }
    }
}
