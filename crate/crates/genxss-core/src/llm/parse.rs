//! Parsers for LLM response text.

use crate::secrule::parse_ruleset;
use crate::{Error, Result};

/// Extract one payload per non-empty line, stripping code-fence delimiter
/// lines, numbering prefixes (`1.`, `2)`) and spaced bullets (`- x`).
/// Prose lines (space-separated words with no payload punctuation) are
/// dropped; payload bytes are otherwise preserved exactly.
pub fn parse_payload_list(text: &str) -> Result<Vec<String>> {
    let mut payloads = Vec::new();
    for line in text.lines() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with("```") {
            continue;
        }
        let stripped = strip_list_prefix(trimmed);
        if stripped.is_empty() || is_prose(stripped) {
            continue;
        }
        payloads.push(stripped.to_string());
    }
    if payloads.is_empty() {
        return Err(Error::EmptyLlmOutput);
    }
    Ok(payloads)
}

/// Remove `N.`/`N)` numbering or a `-`/`*`/`+` bullet followed by
/// whitespace. A bare leading `-` with no space stays: it can be payload
/// bytes.
fn strip_list_prefix(line: &str) -> &str {
    let bytes = line.as_bytes();
    let mut idx = 0;
    while idx < bytes.len() && bytes[idx].is_ascii_digit() {
        idx += 1;
    }
    if idx > 0 && idx < bytes.len() && (bytes[idx] == b'.' || bytes[idx] == b')') {
        let rest = &line[idx + 1..];
        if rest.starts_with(' ') || rest.starts_with('\t') {
            return rest.trim_start();
        }
    }
    for bullet in ["- ", "* ", "+ "] {
        if let Some(rest) = line.strip_prefix(bullet) {
            return rest.trim_start();
        }
    }
    line
}

/// Natural-language filter: a line of plain words and prose punctuation.
fn is_prose(line: &str) -> bool {
    line.contains(' ')
        && line
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || " ,.':;!?-".contains(c))
}

/// Extract the SecRule block from a response: keep `SecRule` lines, their
/// backslash continuations and `#` comment lines, inside or outside code
/// fences; drop everything else. The extracted text must parse.
pub fn parse_ruleset_block(text: &str) -> Result<String> {
    let mut kept: Vec<&str> = Vec::new();
    let mut continuing = false;
    let mut any_rule = false;
    for line in text.lines() {
        let trimmed = line.trim_start();
        if trimmed.starts_with("```") {
            continue;
        }
        if continuing {
            kept.push(line);
            continuing = line.trim_end().ends_with('\\');
            continue;
        }
        if trimmed.starts_with("SecRule") {
            any_rule = true;
            kept.push(line);
            continuing = line.trim_end().ends_with('\\');
        } else if trimmed.starts_with('#') {
            kept.push(line);
        }
    }
    if !any_rule {
        return Err(Error::NoRulesFound);
    }
    let mut block = kept.join("\n");
    block.push('\n');
    match parse_ruleset(&block) {
        Ok(_) => Ok(block),
        Err(e) => Err(Error::ExtractedRulesetInvalid(Box::new(e))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbered_list_strips_prefixes() {
        let payloads = parse_payload_list("1. alert(1)\n2. confirm(1)").unwrap();
        assert_eq!(payloads, vec!["alert(1)", "confirm(1)"]);
    }

    #[test]
    fn fenced_block_keeps_contents() {
        let text = "```\nalert(1)\nconfirm(2)\nprompt(3)\n```";
        let payloads = parse_payload_list(text).unwrap();
        assert_eq!(payloads.len(), 3);
    }

    #[test]
    fn prose_only_is_an_error() {
        let text = "I cannot produce that list.\nPlease provide more context.";
        assert!(matches!(
            parse_payload_list(text),
            Err(Error::EmptyLlmOutput)
        ));
    }

    #[test]
    fn leading_dash_payload_bytes_survive() {
        let payloads = parse_payload_list("-alert%0d%0a(1)-\n- confirm(1)").unwrap();
        assert_eq!(payloads, vec!["-alert%0d%0a(1)-", "confirm(1)"]);
    }

    #[test]
    fn mixed_prose_and_payloads() {
        let text = "Here are the payloads:\n\n1. \x5C\";\x5Cu0061lert(1);//\n2. %3Csvg%20onload%3Dalert(1)%3E\nThese should work well.";
        let payloads = parse_payload_list(text).unwrap();
        assert_eq!(
            payloads,
            vec![
                "\x5C\";\x5Cu0061lert(1);//",
                "%3Csvg%20onload%3Dalert(1)%3E"
            ]
        );
    }

    fn rule_line(id: u64) -> String {
        format!("SecRule ARGS \"@rx (?i)pattern{id}\" \"id:{id},phase:2,deny,status:403\"")
    }

    #[test]
    fn fenced_conf_block_extracts_all_rules() {
        let mut text = String::from("Here is the ruleset:\n```\n");
        for i in 0..15 {
            text.push_str(&format!("# rule {i}\n{}\n", rule_line(900001 + i)));
        }
        text.push_str("```\n");
        let block = parse_ruleset_block(&text).unwrap();
        let rules = parse_ruleset(&block).unwrap();
        assert_eq!(rules.len(), 15);
    }

    #[test]
    fn prose_between_rules_is_dropped() {
        let text = format!(
            "First, block script tags.\n{}\nNext, handle event handlers as well:\n# event handlers\n{}\n",
            rule_line(1),
            rule_line(2)
        );
        let block = parse_ruleset_block(&text).unwrap();
        assert!(block.contains("# event handlers"));
        assert!(!block.contains("First, block"));
        assert_eq!(parse_ruleset(&block).unwrap().len(), 2);
    }

    #[test]
    fn pure_prose_has_no_rules() {
        assert!(matches!(
            parse_ruleset_block("No rules today."),
            Err(Error::NoRulesFound)
        ));
    }

    #[test]
    fn broken_rule_reports_parse_failure() {
        let text = "SecRule ARGS \"@rx (\" \"id:1,phase:2,deny,status:403\"";
        assert!(matches!(
            parse_ruleset_block(text),
            Err(Error::ExtractedRulesetInvalid(_))
        ));
    }

    #[test]
    fn continuation_lines_stay_attached() {
        let text = "SecRule ARGS \\\n  \"@rx abc\" \\\n  \"id:5,phase:2,deny,status:403\"\n";
        let block = parse_ruleset_block(text).unwrap();
        assert_eq!(parse_ruleset(&block).unwrap().len(), 1);
    }
}
