//! Ruleset linting. Warnings feed the refinement feedback loop and flag
//! portability problems for backtracking regex engines.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Disruptive, OperatorKind, RuleSet};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LintWarning {
    pub rule_id: u64,
    pub message: String,
}

impl fmt::Display for LintWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "rule {}: {}", self.rule_id, self.message)
    }
}

/// Warn on duplicate ids, empty patterns, nested unbounded quantifiers
/// (catastrophic-backtracking heuristic) and deny rules without a status.
pub fn lint_ruleset(rules: &RuleSet) -> Vec<LintWarning> {
    let mut warnings = Vec::new();
    let mut seen: HashSet<u64> = HashSet::new();
    for rule in &rules.rules {
        if !seen.insert(rule.id) {
            warnings.push(LintWarning {
                rule_id: rule.id,
                message: format!("duplicate id {}", rule.id),
            });
        }
        if rule.operator.argument.is_empty() {
            warnings.push(LintWarning {
                rule_id: rule.id,
                message: "empty operator pattern".into(),
            });
        }
        if rule.operator.kind == OperatorKind::Rx
            && has_nested_unbounded_quantifier(&rule.operator.argument)
        {
            warnings.push(LintWarning {
                rule_id: rule.id,
                message: format!(
                    "pattern {:?} nests unbounded quantifiers (catastrophic backtracking on PCRE engines)",
                    rule.operator.argument
                ),
            });
        }
        if rule.disruptive == Some(Disruptive::Deny) && rule.status.is_none() {
            warnings.push(LintWarning {
                rule_id: rule.id,
                message: "deny without an explicit status (403 assumed)".into(),
            });
        }
    }
    warnings
}

/// Heuristic: a quantified group whose body itself contains an unbounded
/// quantifier, e.g. `(a+)+` or `(?:x*y)*`.
fn has_nested_unbounded_quantifier(pattern: &str) -> bool {
    let chars: Vec<char> = pattern.chars().collect();
    // stack of "group body contains an unbounded quantifier" flags
    let mut stack: Vec<bool> = Vec::new();
    let mut i = 0;
    let mut depth_flag = false; // current level
    while i < chars.len() {
        match chars[i] {
            '\\' => i += 1, // skip escaped char
            '[' => {
                // character class: skip to unescaped ]
                i += 1;
                while i < chars.len() && chars[i] != ']' {
                    if chars[i] == '\\' {
                        i += 1;
                    }
                    i += 1;
                }
            }
            '(' => {
                stack.push(depth_flag);
                depth_flag = false;
            }
            ')' => {
                let body_had_unbounded = depth_flag;
                depth_flag = stack.pop().unwrap_or(false) || body_had_unbounded;
                if body_had_unbounded {
                    if let Some(&next) = chars.get(i + 1) {
                        if next == '*' || next == '+' {
                            return true;
                        }
                        if next == '{' && is_unbounded_brace(&chars[i + 1..]) {
                            return true;
                        }
                    }
                }
            }
            '*' | '+' => depth_flag = true,
            '{' if is_unbounded_brace(&chars[i..]) => depth_flag = true,
            _ => {}
        }
        i += 1;
    }
    false
}

/// `{m,}` with no upper bound.
fn is_unbounded_brace(chars: &[char]) -> bool {
    debug_assert_eq!(chars.first(), Some(&'{'));
    let mut j = 1;
    let mut saw_digit = false;
    while j < chars.len() && chars[j].is_ascii_digit() {
        saw_digit = true;
        j += 1;
    }
    saw_digit && chars.get(j) == Some(&',') && chars.get(j + 1) == Some(&'}')
}
