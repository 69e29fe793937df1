//! Prompt construction. Builders are pure and deterministic: identical
//! inputs produce byte-identical serialized prompts, which the mock
//! provider keys on by content hash.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cluster::ClusterSummary;
use crate::corpus::{AttackType, Payload, Validation};
use crate::{Error, Result};

/// A structured prompt: a system role plus ordered titled sections.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptSpec {
    pub system_role: String,
    pub sections: Vec<(String, String)>,
    /// Few-shot examples embedded in the sections, kept for inspection.
    pub examples: Vec<String>,
    pub requested_count: usize,
}

impl PromptSpec {
    /// The user-message text: numbered sections in order.
    pub fn user_message(&self) -> String {
        let mut out = String::new();
        for (idx, (title, body)) in self.sections.iter().enumerate() {
            out.push_str(&format!("## {}. {}\n\n{}\n\n", idx + 1, title, body));
        }
        out.trim_end().to_string()
    }

    /// Canonical serialized form covering every field.
    pub fn render(&self) -> String {
        format!(
            "[system]\n{}\n\n[user]\n{}\n",
            self.system_role,
            self.user_message()
        )
    }

    /// Content hash of the serialized prompt (hex SHA-256).
    pub fn hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.render().as_bytes());
        hex_string(&hasher.finalize())
    }
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// One item of evaluation feedback (a payload or benign sample).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedbackItem {
    pub id: String,
    pub raw: String,
}

/// A free-text operator annotation attached to a rule or payload.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HumanNote {
    pub target_id: String,
    pub note: String,
}

/// Evaluation feedback fed into the next refinement prompt. False-negative
/// payloads are capped to bound prompt size.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedbackReport {
    pub iteration: usize,
    pub false_negative_payloads: Vec<FeedbackItem>,
    pub false_positive_samples: Vec<FeedbackItem>,
    pub lint_warnings: Vec<String>,
    pub parse_errors: Vec<String>,
    pub human_notes: Vec<HumanNote>,
}

/// Cap on quoted false negatives per prompt.
pub const MAX_FEEDBACK_FALSE_NEGATIVES: usize = 20;

impl FeedbackReport {
    pub fn is_empty(&self) -> bool {
        self.false_negative_payloads.is_empty()
            && self.false_positive_samples.is_empty()
            && self.lint_warnings.is_empty()
            && self.parse_errors.is_empty()
            && self.human_notes.is_empty()
    }

    /// Enforce the false-negative cap.
    pub fn capped(mut self) -> Self {
        self.false_negative_payloads
            .truncate(MAX_FEEDBACK_FALSE_NEGATIVES);
        self
    }
}

const ATTACK_SYSTEM_ROLE: &str = "You are an offensive security researcher generating cross-site \
scripting payloads for an authorized, isolated WAF test bench.";

const RULE_SYSTEM_ROLE: &str = "You are a web application security expert who writes precise \
ModSecurity SecRule signatures.";

/// Build the attack-generation prompt: problem description with few-shot
/// examples, obfuscation instructions, and an exact generation task.
pub fn build_attack_prompt(
    examples: &[Payload],
    attack_type: AttackType,
    count: usize,
    obfuscation_techniques: &[String],
) -> Result<PromptSpec> {
    if examples.is_empty() {
        return Err(Error::Prompt(
            "in-context learning requires at least one validated example".into(),
        ));
    }
    if let Some(bad) = examples.iter().find(|p| p.validation != Validation::Valid) {
        return Err(Error::Prompt(format!(
            "example payload {} is not validated",
            bad.id
        )));
    }
    if count == 0 {
        return Err(Error::Prompt(
            "requested payload count must be positive".into(),
        ));
    }

    let example_lines: Vec<String> = examples.iter().map(|p| p.raw.clone()).collect();
    let mut problem = String::from(
        "The goal is to produce obfuscated XSS payloads that stay syntactically executable \
after decoding and evade signature-based WAF rules. The following validated payloads show \
the expected style:\n",
    );
    for raw in &example_lines {
        problem.push_str(&format!("  {raw}\n"));
    }

    let mut instructions =
        String::from("Apply these obfuscation techniques, alone and combined:\n");
    for technique in obfuscation_techniques {
        instructions.push_str(&format!("  - {technique}\n"));
    }

    let task = format!(
        "Generate exactly {count} new {} XSS payloads in the style above.\n\
Write one payload per line, URL-encoded where the examples are, with no numbering, \
no commentary and no code fences.",
        attack_type.as_str()
    );

    Ok(PromptSpec {
        system_role: ATTACK_SYSTEM_ROLE.to_string(),
        sections: vec![
            (
                "Problem Description".to_string(),
                problem.trim_end().to_string(),
            ),
            (
                "Obfuscation Instructions".to_string(),
                instructions.trim_end().to_string(),
            ),
            ("Tasks".to_string(), task),
        ],
        examples: example_lines,
        requested_count: count,
    })
}

/// Build the rule-generation prompt from cluster summaries plus sample
/// payloads.
pub fn build_rule_prompt(summaries: &[ClusterSummary], samples: &[Payload]) -> Result<PromptSpec> {
    if summaries.is_empty() {
        return Err(Error::Prompt(
            "rule prompt requires at least one cluster summary".into(),
        ));
    }

    let role = String::from(
        "Act as a web application security expert. Your task is to craft ModSecurity SecRule \
directives that block the attack families described below.",
    );

    let mut characteristics = String::new();
    for summary in summaries {
        characteristics.push_str(&format!(
            "Cluster {} (size {}):\n  shared tokens: {}\n  representatives:\n",
            summary.cluster_id,
            summary.size,
            if summary.shared_tokens.is_empty() {
                "(none)".to_string()
            } else {
                summary.shared_tokens.join(", ")
            }
        ));
        for rep in &summary.representatives {
            characteristics.push_str(&format!("    {}\n", rep.raw));
        }
        characteristics.push('\n');
    }
    if !samples.is_empty() {
        characteristics.push_str("Additional attack samples:\n");
        for sample in samples {
            characteristics.push_str(&format!("    {}\n", sample.raw));
        }
    }

    let task = String::from(
        "Write syntactically correct ModSecurity SecRules that block every cluster above with a \
high true positive rate and minimal false positives on normal traffic.\n\
Requirements:\n\
  - use only the variables ARGS, ARGS_NAMES, QUERY_STRING, REQUEST_URI, REQUEST_HEADERS\n\
  - give every rule a unique numeric id and an explicit deny status\n\
  - apply the transformation chain each pattern needs (t:urlDecodeUni, t:jsDecode, \
t:removeComments, t:lowercase, ...)\n\
  - present the rules as one continuous block, with a # comment above each rule explaining \
its purpose\n\
  - output nothing but the comments and the rules",
    );

    Ok(PromptSpec {
        system_role: RULE_SYSTEM_ROLE.to_string(),
        sections: vec![
            ("System Role".to_string(), role),
            (
                "Cluster Characteristics".to_string(),
                characteristics.trim_end().to_string(),
            ),
            ("Task Definition".to_string(), task),
        ],
        examples: Vec::new(),
        requested_count: 0,
    })
}

/// Build the refinement prompt: the prior rules plus structured feedback
/// (still-bypassing payloads, blocked benign samples, lint findings, human
/// notes), instructing correction without regressions.
pub fn build_refine_prompt(previous_rules: &str, feedback: &FeedbackReport) -> Result<PromptSpec> {
    if feedback.is_empty() {
        return Err(Error::EmptyFeedback);
    }

    let rules_section = format!("```\n{}\n```", previous_rules.trim_end());

    let mut notes = String::new();
    if !feedback.false_negative_payloads.is_empty() {
        notes.push_str("Payloads still bypassing the rules (false negatives):\n");
        for item in &feedback.false_negative_payloads {
            notes.push_str(&format!("  [{}] {}\n", item.id, item.raw));
        }
    }
    if !feedback.false_positive_samples.is_empty() {
        notes.push_str("Normal samples the rules wrongly block (false positives):\n");
        for item in &feedback.false_positive_samples {
            notes.push_str(&format!("  [{}] {}\n", item.id, item.raw));
        }
    }
    if !feedback.lint_warnings.is_empty() {
        notes.push_str("Lint findings:\n");
        for warning in &feedback.lint_warnings {
            notes.push_str(&format!("  - {warning}\n"));
        }
    }
    if !feedback.parse_errors.is_empty() {
        notes.push_str("The previous response failed to parse:\n");
        for error in &feedback.parse_errors {
            notes.push_str(&format!("  - {error}\n"));
        }
    }
    if !feedback.human_notes.is_empty() {
        notes.push_str("Reviewer notes:\n");
        for note in &feedback.human_notes {
            notes.push_str(&format!("  [{}] {}\n", note.target_id, note.note));
        }
    }

    let task = String::from(
        "Revise the ruleset to fix every issue listed: block the quoted false negatives, stop \
blocking the quoted normal samples, and resolve lint and syntax findings.\n\
Do not regress: every payload the current rules already block must stay blocked.\n\
Output the complete corrected ruleset as one continuous block of # comments and SecRule lines.",
    );

    Ok(PromptSpec {
        system_role: RULE_SYSTEM_ROLE.to_string(),
        sections: vec![
            (
                format!("Current Rules (iteration {})", feedback.iteration),
                rules_section,
            ),
            (
                "Evaluation Feedback".to_string(),
                notes.trim_end().to_string(),
            ),
            ("Revision Task".to_string(), task),
        ],
        examples: Vec::new(),
        requested_count: 0,
    })
}
