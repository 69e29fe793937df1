//! Static syntactic XSS validation.
//!
//! No JavaScript engine is embedded: a payload is judged Valid when, after
//! full de-obfuscation, it (a) breaks out of its declared injection
//! context, (b) carries an execution primitive, (c) uses escape dialects
//! consistently in identifier position, and (d) leaves bracket syntax
//! balanced. This is an approximation of in-browser behavior; the labeled
//! fixture set is the contract where the two diverge.

use regex::Regex;
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

use crate::corpus::Validation;
use crate::normalize::{
    full_decode, remove_comments, remove_whitespace, url_decode_uni, DecodeTrace,
};

/// Where a vulnerable endpoint reflects the payload.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InjectionContext {
    /// Inside a double-quoted JavaScript string.
    JsStringDq,
    /// Inside a single-quoted JavaScript string.
    JsStringSq,
    /// Inside a double-quoted HTML attribute.
    HtmlAttribute,
    /// Directly in the HTML body.
    HtmlBody,
    /// Inside a URL parameter (fragment-style DOM source).
    UrlParam,
}

impl InjectionContext {
    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "js_string_dq" => InjectionContext::JsStringDq,
            "js_string_sq" => InjectionContext::JsStringSq,
            "html_attribute" => InjectionContext::HtmlAttribute,
            "html_body" => InjectionContext::HtmlBody,
            "url_param" => InjectionContext::UrlParam,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            InjectionContext::JsStringDq => "js_string_dq",
            InjectionContext::JsStringSq => "js_string_sq",
            InjectionContext::HtmlAttribute => "html_attribute",
            InjectionContext::HtmlBody => "html_body",
            InjectionContext::UrlParam => "url_param",
        }
    }
}

/// Machine-readable invalidity reasons.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValidationReason {
    NoContextBreak,
    NoExecutionPrimitive,
    MixedEncodingIdentifier,
    UnbalancedSyntax,
}

impl ValidationReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            ValidationReason::NoContextBreak => "no_context_break",
            ValidationReason::NoExecutionPrimitive => "no_execution_primitive",
            ValidationReason::MixedEncodingIdentifier => "mixed_encoding_identifier",
            ValidationReason::UnbalancedSyntax => "unbalanced_syntax",
        }
    }
}

/// Verdict status.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictStatus {
    Valid,
    Invalid,
}

/// Outcome of [`analyze_payload`]: status, reason (always present when
/// Invalid), the fully decoded form, and the decode trace.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationVerdict {
    pub status: VerdictStatus,
    pub reason: Option<ValidationReason>,
    pub decoded_form: String,
    pub trace: DecodeTrace,
}

impl ValidationVerdict {
    pub fn is_valid(&self) -> bool {
        self.status == VerdictStatus::Valid
    }

    /// Convert to the corpus validation field.
    pub fn to_validation(&self) -> Validation {
        match self.status {
            VerdictStatus::Valid => Validation::Valid,
            VerdictStatus::Invalid => Validation::Invalid(
                self.reason
                    .expect("invalid verdicts carry a reason")
                    .as_str()
                    .to_string(),
            ),
        }
    }
}

const MAX_DECODE_LAYERS: usize = 5;

/// Statically validate a payload against its injection context.
pub fn analyze_payload(raw: &str, context: InjectionContext) -> ValidationVerdict {
    let (decoded, trace) = full_decode(raw, MAX_DECODE_LAYERS);

    let invalid = |reason, decoded: &str, trace: &DecodeTrace| ValidationVerdict {
        status: VerdictStatus::Invalid,
        reason: Some(reason),
        decoded_form: decoded.to_string(),
        trace: trace.clone(),
    };

    if !breaks_context(&decoded, context) {
        return invalid(ValidationReason::NoContextBreak, &decoded, &trace);
    }
    if !has_execution_primitive(&decoded) {
        return invalid(ValidationReason::NoExecutionPrimitive, &decoded, &trace);
    }
    if has_mixed_identifier_encoding(raw) {
        return invalid(ValidationReason::MixedEncodingIdentifier, &decoded, &trace);
    }
    if !syntax_balanced(&decoded, context) {
        return invalid(ValidationReason::UnbalancedSyntax, &decoded, &trace);
    }

    ValidationVerdict {
        status: VerdictStatus::Valid,
        reason: None,
        decoded_form: decoded,
        trace,
    }
}

/// Context break: JS string contexts need an unescaped close-quote followed
/// by `;`; double-quoted HTML attributes need an unescaped `"`. Body and
/// URL-parameter sinks reflect into markup directly, so no break is needed.
fn breaks_context(decoded: &str, context: InjectionContext) -> bool {
    match context {
        InjectionContext::JsStringDq => contains_unescaped(decoded, "\";"),
        InjectionContext::JsStringSq => contains_unescaped(decoded, "';"),
        InjectionContext::HtmlAttribute => contains_unescaped(decoded, "\""),
        InjectionContext::HtmlBody | InjectionContext::UrlParam => true,
    }
}

/// Is `needle` present at a position where the preceding backslash run has
/// even length?
fn contains_unescaped(haystack: &str, needle: &str) -> bool {
    let chars: Vec<char> = haystack.chars().collect();
    let needle_chars: Vec<char> = needle.chars().collect();
    'outer: for start in 0..chars.len() {
        for (offset, &nc) in needle_chars.iter().enumerate() {
            if chars.get(start + offset) != Some(&nc) {
                continue 'outer;
            }
        }
        let backslashes = chars[..start]
            .iter()
            .rev()
            .take_while(|&&c| c == '\\')
            .count();
        if backslashes % 2 == 0 {
            return true;
        }
    }
    false
}

fn primitive_patterns() -> &'static [Regex; 4] {
    static PATTERNS: OnceLock<[Regex; 4]> = OnceLock::new();
    PATTERNS.get_or_init(|| {
        [
            Regex::new(r"[A-Za-z_$][A-Za-z0-9_$]*\(").unwrap(),
            Regex::new(r"(?i)\bon\w+=").unwrap(),
            Regex::new(r"(?i)<script").unwrap(),
            Regex::new(r"(?i)javascript:").unwrap(),
        ]
    })
}

/// An execution primitive: an identifier immediately followed by `(`, an
/// event-handler attribute, a `<script` element, or a `javascript:` scheme.
/// Comments and whitespace are token separators to a JS parser, so the
/// check runs on the comment-stripped, whitespace-free form: `alert/**/(1)`
/// and `alert%0d%0a(1)` both execute.
fn has_execution_primitive(decoded: &str) -> bool {
    let normalized = remove_whitespace(&remove_comments(decoded));
    primitive_patterns()
        .iter()
        .any(|re| re.is_match(&normalized))
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '$'
}

/// Escape-dialect consistency, checked on the URL-decoded (but not yet
/// JS-decoded) form: backslash-u escapes are legal inside JavaScript
/// identifiers, backslash-x escapes are not. A backslash-x escape whose
/// decoded character is an identifier character and which sits adjacent to
/// identifier material marks the payload invalid.
fn has_mixed_identifier_encoding(raw: &str) -> bool {
    // URL-layer fixpoint only: the JS escapes must remain visible
    let mut url_form = raw.to_string();
    for _ in 0..MAX_DECODE_LAYERS {
        let next = url_decode_uni(&url_form);
        if next == url_form {
            break;
        }
        url_form = next;
    }
    let chars: Vec<char> = url_form.chars().collect();
    let mut i = 0;
    while i + 3 < chars.len() {
        if chars[i] == '\\'
            && chars[i + 1] == 'x'
            && chars[i + 2].is_ascii_hexdigit()
            && chars[i + 3].is_ascii_hexdigit()
        {
            let hex: String = chars[i + 2..i + 4].iter().collect();
            let decoded_char = u32::from_str_radix(&hex, 16)
                .ok()
                .and_then(char::from_u32)
                .unwrap_or('\u{0}');
            if is_ident_char(decoded_char) {
                let before = i
                    .checked_sub(1)
                    .map(|p| is_ident_char(chars[p]))
                    .unwrap_or(false);
                let after = chars.get(i + 4).map(|&c| is_ident_char(c)).unwrap_or(false);
                if before || after {
                    return true;
                }
            }
            i += 4;
            continue;
        }
        i += 1;
    }
    false
}

/// Prefix the decoded form with its context's open quote, strip comments,
/// then check parenthesis balance outside string literals.
fn syntax_balanced(decoded: &str, context: InjectionContext) -> bool {
    let prefix = match context {
        InjectionContext::JsStringDq => "\"",
        InjectionContext::JsStringSq => "'",
        _ => "",
    };
    let program = format!("{prefix}{decoded}");
    let stripped = remove_comments(&program);
    let mut depth: i64 = 0;
    let mut in_string: Option<char> = None;
    let mut chars = stripped.chars().peekable();
    while let Some(c) = chars.next() {
        if let Some(quote) = in_string {
            if c == '\\' {
                chars.next();
            } else if c == quote {
                in_string = None;
            }
            continue;
        }
        match c {
            '"' | '\'' => in_string = Some(c),
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth < 0 {
                    return false;
                }
            }
            _ => {}
        }
    }
    depth == 0
}
