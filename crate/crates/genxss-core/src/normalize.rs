//! Decoding and transformation primitives.
//!
//! These back both the payload validator (multi-layer de-obfuscation) and
//! the SecRule engine (per-rule `t:` transformation chains). Every
//! transformation is total: undecodable sequences pass through verbatim and
//! no input ever produces an error.
//!
//! Transformation names in ruleset files use the ModSecurity spellings:
//! `t:urlDecode`, `t:urlDecodeUni`, `t:jsDecode`, `t:htmlEntityDecode`,
//! `t:lowercase`, `t:removeComments`, `t:removeWhitespace`,
//! `t:compressWhitespace`, `t:none`.
//!
//! Two deliberate deviations from stock ModSecurity, both documented in the
//! ruleset fixtures: `removeComments` also strips `//`-to-end-of-line
//! comments (the payload corpus relies on `//` neutralization) and comment
//! removal leaves zero replacement characters instead of a single space.

use serde::{Deserialize, Serialize};

/// A single normalization step, named after its ModSecurity `t:` spelling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Transformation {
    UrlDecode,
    UrlDecodeUni,
    JsDecode,
    HtmlEntityDecode,
    Lowercase,
    RemoveComments,
    RemoveWhitespace,
    CompressWhitespace,
    None,
}

impl Transformation {
    /// Parse a ModSecurity `t:` name.
    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "urlDecode" => Transformation::UrlDecode,
            "urlDecodeUni" => Transformation::UrlDecodeUni,
            "jsDecode" => Transformation::JsDecode,
            "htmlEntityDecode" => Transformation::HtmlEntityDecode,
            "lowercase" => Transformation::Lowercase,
            "removeComments" => Transformation::RemoveComments,
            "removeWhitespace" => Transformation::RemoveWhitespace,
            "compressWhitespace" => Transformation::CompressWhitespace,
            "none" => Transformation::None,
            _ => return None,
        })
    }

    /// ModSecurity spelling of this transformation.
    pub fn name(&self) -> &'static str {
        match self {
            Transformation::UrlDecode => "urlDecode",
            Transformation::UrlDecodeUni => "urlDecodeUni",
            Transformation::JsDecode => "jsDecode",
            Transformation::HtmlEntityDecode => "htmlEntityDecode",
            Transformation::Lowercase => "lowercase",
            Transformation::RemoveComments => "removeComments",
            Transformation::RemoveWhitespace => "removeWhitespace",
            Transformation::CompressWhitespace => "compressWhitespace",
            Transformation::None => "none",
        }
    }

    /// Apply this transformation to `input`.
    pub fn apply(&self, input: &str) -> String {
        match self {
            Transformation::UrlDecode => url_decode(input),
            Transformation::UrlDecodeUni => url_decode_uni(input),
            Transformation::JsDecode => js_decode(input),
            Transformation::HtmlEntityDecode => html_entity_decode(input),
            Transformation::Lowercase => input.to_ascii_lowercase(),
            Transformation::RemoveComments => remove_comments(input),
            Transformation::RemoveWhitespace => remove_whitespace(input),
            Transformation::CompressWhitespace => compress_whitespace(input),
            Transformation::None => input.to_string(),
        }
    }
}

/// Record of the intermediate outputs of a transformation chain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodeTrace {
    /// Ordered `(transformation, output)` pairs, one per applied step.
    pub layers: Vec<(Transformation, String)>,
    /// Set when `full_decode` stopped at `max_layers` before reaching a
    /// fixpoint.
    pub truncated: bool,
}

impl DecodeTrace {
    fn empty() -> Self {
        DecodeTrace {
            layers: Vec::new(),
            truncated: false,
        }
    }

    /// Final canonical form, or `None` for traces with no recorded steps.
    pub fn canonical(&self) -> Option<&str> {
        self.layers.last().map(|(_, out)| out.as_str())
    }
}

fn hex_val(b: u8) -> Option<u8> {
    match b {
        b'0'..=b'9' => Some(b - b'0'),
        b'a'..=b'f' => Some(b - b'a' + 10),
        b'A'..=b'F' => Some(b - b'A' + 10),
        _ => None,
    }
}

/// Percent-decode at the byte level. `+` is left as-is; invalid sequences
/// (`%G1`, trailing `%`) are copied verbatim.
pub fn url_decode_bytes(input: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(input.len());
    let mut i = 0;
    while i < input.len() {
        if input[i] == b'%' {
            if let (Some(hi), Some(lo)) = (
                input.get(i + 1).copied().and_then(hex_val),
                input.get(i + 2).copied().and_then(hex_val),
            ) {
                out.push(hi * 16 + lo);
                i += 3;
                continue;
            }
        }
        out.push(input[i]);
        i += 1;
    }
    out
}

/// Decode `%XX` percent escapes. Invalid sequences pass through verbatim;
/// decoded byte sequences that are not valid UTF-8 are replaced lossily.
pub fn url_decode(input: &str) -> String {
    String::from_utf8_lossy(&url_decode_bytes(input.as_bytes())).into_owned()
}

/// As [`url_decode`], plus `%uXXXX` decoded to the corresponding code point.
pub fn url_decode_uni(input: &str) -> String {
    let bytes = input.as_bytes();
    let mut out: Vec<u8> = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'%' {
            // %uXXXX form
            if i + 5 < bytes.len() && (bytes[i + 1] == b'u' || bytes[i + 1] == b'U') {
                let hx: Option<Vec<u8>> = bytes[i + 2..i + 6].iter().map(|&b| hex_val(b)).collect();
                if let Some(hx) = hx {
                    let cp = ((hx[0] as u32) << 12)
                        | ((hx[1] as u32) << 8)
                        | ((hx[2] as u32) << 4)
                        | hx[3] as u32;
                    if let Some(c) = char::from_u32(cp) {
                        let mut buf = [0u8; 4];
                        out.extend_from_slice(c.encode_utf8(&mut buf).as_bytes());
                        i += 6;
                        continue;
                    }
                }
            }
            // %XX form
            if let (Some(hi), Some(lo)) = (
                bytes.get(i + 1).copied().and_then(hex_val),
                bytes.get(i + 2).copied().and_then(hex_val),
            ) {
                out.push(hi * 16 + lo);
                i += 3;
                continue;
            }
        }
        out.push(bytes[i]);
        i += 1;
    }
    String::from_utf8_lossy(&out).into_owned()
}

/// Decode JavaScript escapes: `\uXXXX` and `\xXX` become the escaped code
/// point; any other `\c` pair reduces to `c`; a lone trailing backslash is
/// preserved. `\u`/`\x` escapes with invalid hex pass through verbatim.
pub fn js_decode(input: &str) -> String {
    let chars: Vec<char> = input.chars().collect();
    let mut out = String::with_capacity(input.len());
    let mut i = 0;
    while i < chars.len() {
        if chars[i] != '\\' {
            out.push(chars[i]);
            i += 1;
            continue;
        }
        // lone trailing backslash
        if i + 1 >= chars.len() {
            out.push('\\');
            break;
        }
        match chars[i + 1] {
            'u' => {
                if i + 5 < chars.len() {
                    let hx: String = chars[i + 2..i + 6].iter().collect();
                    if hx.chars().all(|c| c.is_ascii_hexdigit()) {
                        if let Some(c) = u32::from_str_radix(&hx, 16).ok().and_then(char::from_u32)
                        {
                            out.push(c);
                            i += 6;
                            continue;
                        }
                    }
                }
                // undecodable: verbatim
                out.push('\\');
                out.push('u');
                i += 2;
            }
            'x' => {
                if i + 3 < chars.len() {
                    let hx: String = chars[i + 2..i + 4].iter().collect();
                    if hx.chars().all(|c| c.is_ascii_hexdigit()) {
                        if let Ok(cp) = u32::from_str_radix(&hx, 16) {
                            if let Some(c) = char::from_u32(cp) {
                                out.push(c);
                                i += 4;
                                continue;
                            }
                        }
                    }
                }
                out.push('\\');
                out.push('x');
                i += 2;
            }
            other => {
                out.push(other);
                i += 2;
            }
        }
    }
    out
}

/// Decode a small, fixed set of HTML entities: the named entities
/// `&lt; &gt; &amp; &quot; &apos; &nbsp;` plus numeric `&#NN;` and `&#xHH;`
/// forms. Entities must be semicolon-terminated; anything else passes
/// through verbatim.
pub fn html_entity_decode(input: &str) -> String {
    let chars: Vec<char> = input.chars().collect();
    let mut out = String::with_capacity(input.len());
    let mut i = 0;
    while i < chars.len() {
        if chars[i] != '&' {
            out.push(chars[i]);
            i += 1;
            continue;
        }
        let rest: String = chars[i..].iter().take(12).collect();
        let mut matched = None;
        for (name, ch) in [
            ("&lt;", '<'),
            ("&gt;", '>'),
            ("&amp;", '&'),
            ("&quot;", '"'),
            ("&apos;", '\''),
            ("&nbsp;", '\u{a0}'),
        ] {
            if rest.starts_with(name) {
                matched = Some((name.chars().count(), ch));
                break;
            }
        }
        if matched.is_none() && rest.starts_with("&#") {
            if let Some(semi) = rest.find(';') {
                let body = &rest[2..semi];
                let cp =
                    if let Some(hex) = body.strip_prefix('x').or_else(|| body.strip_prefix('X')) {
                        u32::from_str_radix(hex, 16).ok()
                    } else {
                        body.parse::<u32>().ok()
                    };
                if let Some(c) = cp.filter(|_| !body.is_empty()).and_then(char::from_u32) {
                    matched = Some((semi + 1, c));
                }
            }
        }
        if let Some((len, c)) = matched {
            out.push(c);
            i += len;
        } else {
            out.push('&');
            i += 1;
        }
    }
    out
}

/// Remove `/*...*/` block comments (non-nesting; unterminated blocks run to
/// end of input) and `//` line comments (through end of line). Removal
/// leaves zero replacement characters.
pub fn remove_comments(input: &str) -> String {
    let chars: Vec<char> = input.chars().collect();
    let mut out = String::with_capacity(input.len());
    let mut i = 0;
    while i < chars.len() {
        if chars[i] == '/' && i + 1 < chars.len() {
            match chars[i + 1] {
                '*' => {
                    let mut j = i + 2;
                    while j + 1 < chars.len() && !(chars[j] == '*' && chars[j + 1] == '/') {
                        j += 1;
                    }
                    i = if j + 1 < chars.len() {
                        j + 2
                    } else {
                        chars.len()
                    };
                    continue;
                }
                '/' => {
                    let mut j = i + 2;
                    while j < chars.len() && chars[j] != '\n' {
                        j += 1;
                    }
                    i = j;
                    continue;
                }
                _ => {}
            }
        }
        out.push(chars[i]);
        i += 1;
    }
    out
}

fn is_ws(c: char) -> bool {
    c.is_ascii_whitespace() || c == '\u{0b}'
}

/// Remove every whitespace character.
pub fn remove_whitespace(input: &str) -> String {
    input.chars().filter(|&c| !is_ws(c)).collect()
}

/// Collapse each maximal whitespace run into a single space.
pub fn compress_whitespace(input: &str) -> String {
    let mut out = String::with_capacity(input.len());
    let mut in_run = false;
    for c in input.chars() {
        if is_ws(c) {
            if !in_run {
                out.push(' ');
                in_run = true;
            }
        } else {
            out.push(c);
            in_run = false;
        }
    }
    out
}

/// Apply `chain` left to right, recording every intermediate output.
pub fn apply_chain(input: &str, chain: &[Transformation]) -> (String, DecodeTrace) {
    let mut trace = DecodeTrace::empty();
    let mut cur = input.to_string();
    for t in chain {
        cur = t.apply(&cur);
        trace.layers.push((*t, cur.clone()));
    }
    (cur, trace)
}

/// One de-obfuscation layer: URL (with `%uXXXX`), then JS escapes, then HTML
/// entities, mirroring the browser's outer-to-inner decode order for
/// URL-delivered payloads.
const DECODE_LAYER: [Transformation; 3] = [
    Transformation::UrlDecodeUni,
    Transformation::JsDecode,
    Transformation::HtmlEntityDecode,
];

/// Repeatedly apply the decode layer until a fixpoint or `max_layers`
/// passes. The returned trace records every step; `truncated` is set when
/// the cap was hit while the output was still changing.
pub fn full_decode(input: &str, max_layers: usize) -> (String, DecodeTrace) {
    let max_layers = max_layers.max(1);
    let mut trace = DecodeTrace::empty();
    let mut cur = input.to_string();
    for pass in 0..max_layers {
        let mut next = cur.clone();
        for t in DECODE_LAYER {
            next = t.apply(&next);
            trace.layers.push((t, next.clone()));
        }
        if next == cur {
            return (cur, trace);
        }
        cur = next;
        if pass + 1 == max_layers {
            // cap reached while still changing; probe once for an exact flag
            let mut probe = cur.clone();
            for t in DECODE_LAYER {
                probe = t.apply(&probe);
            }
            trace.truncated = probe != cur;
        }
    }
    (cur, trace)
}

/// Percent-encode every byte as `%XX` (uppercase hex). Used to build
/// deliberately layered fixtures and by encoding round-trip tests.
pub fn percent_encode_all(input: &str) -> String {
    let mut out = String::with_capacity(input.len() * 3);
    for b in input.as_bytes() {
        out.push_str(&format!("%{:02X}", b));
    }
    out
}
