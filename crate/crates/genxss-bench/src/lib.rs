//! Shared inputs for the pipeline benchmarks.

use genxss_core::corpus::{AttackType, Corpus, Payload, Validation};

/// The in-repo mini ruleset, embedded so benchmarks need no working
/// directory assumptions.
pub const MINI_RULESET: &str = include_str!("../../../fixtures/rules/mini-crs.conf");

/// A corpus of `n` obfuscated payloads cycling through the corpus'
/// recurring shapes.
pub fn obfuscated_corpus(n: usize) -> Corpus {
    let templates = [
        "%5C%22%3B%5Cu0061%5Cu006C%5Cu0065%5Cu0072%5Cu0074({i})%3B%2F%2F",
        "%22%3Balert%0D%0A%2F**%2F({i})%3B%2F%2F",
        "%22%3Bconfirm%2F**%2F({i})%3B%2F%2F",
        "%22%3B%3Cscript%3Ealert({i})%3C%2Fscript%3E",
        "%22%3B%2561%256C%2565%2572%2574({i})%3B%2F%2F",
        "%22%3Bprompt%2F*x*%2F({i})%3B%2F%2F",
    ];
    let mut corpus = Corpus::new();
    for i in 0..n {
        let raw = templates[i % templates.len()].replace("{i}", &i.to_string());
        corpus
            .push(Payload {
                validation: Validation::Valid,
                ..Payload::new(format!("p{i:04}"), raw, AttackType::Reflected)
            })
            .expect("bench corpus is well-formed");
    }
    corpus
}
