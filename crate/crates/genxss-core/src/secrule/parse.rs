//! SecRule text parsing.

use regex::Regex;

use crate::normalize::Transformation;
use crate::{Error, Result};

use super::{Disruptive, Operator, OperatorKind, RuleSet, SecRule, Variable};

/// Parse a ruleset: one `SecRule VARIABLES "OPERATOR" "ACTIONS"` directive
/// per logical line. `#` comments and blank lines are skipped, trailing-
/// backslash continuations joined, chain groups validated.
pub fn parse_ruleset(text: &str) -> Result<RuleSet> {
    let mut rules = Vec::new();
    for (line_no, logical) in logical_lines(text) {
        let trimmed = logical.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut tokens = Tokenizer::new(trimmed, line_no);
        let directive = tokens.next_token()?.ok_or_else(|| Error::RuleSyntax {
            line: line_no,
            reason: "empty directive".into(),
        })?;
        if directive != "SecRule" {
            return Err(Error::RuleSyntax {
                line: line_no,
                reason: format!("unknown directive {directive:?}"),
            });
        }
        let variables_tok = expect_token(&mut tokens, line_no, "variables")?;
        let operator_tok = expect_token(&mut tokens, line_no, "operator")?;
        let actions_tok = expect_token(&mut tokens, line_no, "actions")?;
        if let Some(extra) = tokens.next_token()? {
            return Err(Error::RuleSyntax {
                line: line_no,
                reason: format!("unexpected trailing token {extra:?}"),
            });
        }
        let variables = parse_variables(&variables_tok, line_no)?;
        let operator = parse_operator(&operator_tok, line_no)?;
        let rule = parse_actions(&actions_tok, variables, operator, line_no)?;
        rules.push(rule);
    }
    validate_chains(&mut rules)?;
    Ok(RuleSet { rules })
}

/// Physical lines joined on trailing backslash, keyed by the first physical
/// line number (1-based).
fn logical_lines(text: &str) -> Vec<(usize, String)> {
    let mut out: Vec<(usize, String)> = Vec::new();
    let mut pending: Option<(usize, String)> = None;
    for (idx, line) in text.lines().enumerate() {
        let continued = line.trim_end().ends_with('\\');
        let content = if continued {
            let t = line.trim_end();
            t[..t.len() - 1].to_string()
        } else {
            line.to_string()
        };
        match pending.take() {
            Some((start, mut acc)) => {
                acc.push(' ');
                acc.push_str(content.trim_start());
                if continued {
                    pending = Some((start, acc));
                } else {
                    out.push((start, acc));
                }
            }
            None => {
                if continued {
                    pending = Some((idx + 1, content));
                } else {
                    out.push((idx + 1, content));
                }
            }
        }
    }
    if let Some(p) = pending {
        out.push(p);
    }
    out
}

struct Tokenizer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
}

impl<'a> Tokenizer<'a> {
    fn new(s: &'a str, line: usize) -> Self {
        Tokenizer {
            chars: s.chars().peekable(),
            line,
        }
    }

    /// Next whitespace-separated token; double-quoted tokens may contain
    /// whitespace, with `\"` and `\\` unescaped.
    fn next_token(&mut self) -> Result<Option<String>> {
        while matches!(self.chars.peek(), Some(c) if c.is_whitespace()) {
            self.chars.next();
        }
        let first = match self.chars.peek() {
            Some(&c) => c,
            None => return Ok(None),
        };
        let mut tok = String::new();
        if first == '"' {
            self.chars.next();
            loop {
                match self.chars.next() {
                    Some('\\') => match self.chars.next() {
                        Some('"') => tok.push('"'),
                        Some('\\') => tok.push('\\'),
                        Some(c) => {
                            tok.push('\\');
                            tok.push(c);
                        }
                        None => {
                            return Err(Error::RuleSyntax {
                                line: self.line,
                                reason: "unterminated quoted token".into(),
                            })
                        }
                    },
                    Some('"') => return Ok(Some(tok)),
                    Some(c) => tok.push(c),
                    None => {
                        return Err(Error::RuleSyntax {
                            line: self.line,
                            reason: "unterminated quoted token".into(),
                        })
                    }
                }
            }
        }
        while let Some(&c) = self.chars.peek() {
            if c.is_whitespace() {
                break;
            }
            tok.push(c);
            self.chars.next();
        }
        Ok(Some(tok))
    }
}

fn expect_token(tokens: &mut Tokenizer<'_>, line: usize, what: &str) -> Result<String> {
    tokens.next_token()?.ok_or_else(|| Error::RuleSyntax {
        line,
        reason: format!("missing {what}"),
    })
}

fn parse_variables(tok: &str, line: usize) -> Result<Vec<Variable>> {
    let mut vars = Vec::new();
    for name in tok.split('|') {
        let var = Variable::from_name(name.trim()).ok_or_else(|| Error::RuleSyntax {
            line,
            reason: format!("unknown variable {name:?}"),
        })?;
        vars.push(var);
    }
    if vars.is_empty() {
        return Err(Error::RuleSyntax {
            line,
            reason: "empty variable list".into(),
        });
    }
    Ok(vars)
}

fn parse_operator(tok: &str, line: usize) -> Result<Operator> {
    let (negated, rest) = match tok.strip_prefix('!') {
        Some(rest) => (true, rest),
        None => (false, tok),
    };
    let (kind, argument) = if let Some(rest) = rest.strip_prefix('@') {
        let (name, arg) = match rest.split_once(' ') {
            Some((n, a)) => (n, a.to_string()),
            None => (rest, String::new()),
        };
        let kind = match name {
            "rx" => OperatorKind::Rx,
            "contains" => OperatorKind::Contains,
            "pm" => OperatorKind::Pm,
            "beginsWith" => OperatorKind::BeginsWith,
            "endsWith" => OperatorKind::EndsWith,
            other => {
                return Err(Error::RuleSyntax {
                    line,
                    reason: format!("bad operator @{other}"),
                })
            }
        };
        (kind, arg)
    } else {
        // bare operator string defaults to @rx
        (OperatorKind::Rx, rest.to_string())
    };
    let regex = if kind == OperatorKind::Rx {
        Some(Regex::new(&argument).map_err(|e| Error::RuleSyntax {
            line,
            reason: format!("regex does not compile: {e}"),
        })?)
    } else {
        None
    };
    Ok(Operator {
        kind,
        argument,
        negated,
        regex,
    })
}

/// Actions the engine accepts but does not model.
const IGNORED_ACTIONS: &[&str] = &["log", "nolog", "auditlog", "noauditlog", "capture"];
const IGNORED_VALUED_ACTIONS: &[&str] = &["tag", "rev", "ver"];

fn parse_actions(
    tok: &str,
    variables: Vec<Variable>,
    operator: Operator,
    line: usize,
) -> Result<SecRule> {
    let mut id: Option<u64> = None;
    let mut phase: u8 = 2;
    let mut disruptive: Option<Disruptive> = None;
    let mut status: Option<u16> = None;
    let mut msg: Option<String> = None;
    let mut severity: Option<String> = None;
    let mut chain = false;
    let mut transformations = Vec::new();

    for item in split_actions(tok) {
        let item = item.trim();
        if item.is_empty() {
            continue;
        }
        let (key, value) = match item.split_once(':') {
            Some((k, v)) => (k.trim(), Some(unquote_value(v))),
            None => (item, None),
        };
        match (key, value) {
            ("id", Some(v)) => {
                let n: u64 = v.parse().map_err(|_| Error::RuleSyntax {
                    line,
                    reason: format!("id must be a positive integer, got {v:?}"),
                })?;
                if n == 0 {
                    return Err(Error::RuleSyntax {
                        line,
                        reason: "id must be a positive integer".into(),
                    });
                }
                id = Some(n);
            }
            ("phase", Some(v)) => {
                phase = match v.as_str() {
                    "1" => 1,
                    "2" => 2,
                    other => {
                        return Err(Error::RuleSyntax {
                            line,
                            reason: format!("unsupported phase {other:?}"),
                        })
                    }
                };
            }
            ("deny", None) => disruptive = Some(Disruptive::Deny),
            ("pass", None) => disruptive = Some(Disruptive::Pass),
            ("status", Some(v)) => {
                status = Some(v.parse().map_err(|_| Error::RuleSyntax {
                    line,
                    reason: format!("bad status {v:?}"),
                })?);
            }
            ("t", Some(v)) => {
                let t = Transformation::from_name(&v).ok_or_else(|| Error::RuleSyntax {
                    line,
                    reason: format!("unknown transformation t:{v}"),
                })?;
                transformations.push(t);
            }
            ("msg", Some(v)) => msg = Some(v),
            ("severity", Some(v)) => severity = Some(v),
            ("chain", None) => chain = true,
            (k, None) if IGNORED_ACTIONS.contains(&k) => {}
            (k, Some(_)) if IGNORED_VALUED_ACTIONS.contains(&k) => {}
            (k, _) => {
                return Err(Error::RuleSyntax {
                    line,
                    reason: format!("unknown action {k:?}"),
                })
            }
        }
    }

    let id = id.ok_or_else(|| Error::RuleSyntax {
        line,
        reason: "missing id".into(),
    })?;

    Ok(SecRule {
        id,
        variables,
        operator,
        transformations,
        phase,
        disruptive,
        status,
        msg,
        severity,
        chain,
        line,
    })
}

/// Split an action string on commas, respecting single-quoted values.
fn split_actions(s: &str) -> Vec<String> {
    let mut items = Vec::new();
    let mut cur = String::new();
    let mut in_quote = false;
    for c in s.chars() {
        match c {
            '\'' => {
                in_quote = !in_quote;
                cur.push(c);
            }
            ',' if !in_quote => {
                items.push(std::mem::take(&mut cur));
            }
            _ => cur.push(c),
        }
    }
    if !cur.is_empty() {
        items.push(cur);
    }
    items
}

fn unquote_value(v: &str) -> String {
    let v = v.trim();
    if v.len() >= 2 && v.starts_with('\'') && v.ends_with('\'') {
        v[1..v.len() - 1].to_string()
    } else {
        v.to_string()
    }
}

/// Enforce chain invariants: a `chain` flag needs a following rule, and
/// continuation rules must not carry a disruptive action.
fn validate_chains(rules: &mut [SecRule]) -> Result<()> {
    let mut in_chain = false;
    for rule in rules.iter_mut() {
        if in_chain {
            if rule.disruptive.is_some() {
                return Err(Error::RuleSyntax {
                    line: rule.line,
                    reason: format!(
                        "chain member {} carries a disruptive action; only the starter may",
                        rule.id
                    ),
                });
            }
        } else if rule.disruptive.is_none() {
            // standalone rules and chain starters default to pass
            rule.disruptive = Some(Disruptive::Pass);
        }
        in_chain = rule.chain;
    }
    if in_chain {
        let last = rules.last().expect("chain flag implies a rule");
        return Err(Error::RuleSyntax {
            line: last.line,
            reason: format!("broken chain: rule {} has no continuation", last.id),
        });
    }
    Ok(())
}
