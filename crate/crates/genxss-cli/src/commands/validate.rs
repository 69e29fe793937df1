use genxss_core::corpus::{save_corpus, AttackType, Validation};
use genxss_core::validate::{analyze_payload, InjectionContext};

use crate::config::ResolvedConfig;
use crate::{CliError, ValidateArgs};

/// Context a payload is judged in when none is forced: reflected payloads
/// target the double-quoted JS string sink, DOM-based ones the URL
/// parameter sink.
pub(crate) fn context_for(attack_type: AttackType) -> InjectionContext {
    match attack_type {
        AttackType::Reflected => InjectionContext::JsStringDq,
        AttackType::DomBased => InjectionContext::UrlParam,
    }
}

pub fn run(config: &ResolvedConfig, args: &ValidateArgs) -> Result<(), CliError> {
    let corpus_path = args
        .corpus
        .clone()
        .unwrap_or_else(|| config.work_dir().join("corpus.jsonl"));
    let mut corpus = super::load_corpus_required(&corpus_path)?;

    let forced = match &args.context {
        Some(name) => Some(
            InjectionContext::from_name(name)
                .ok_or_else(|| CliError::usage(format!("unknown injection context {name:?}")))?,
        ),
        None => None,
    };

    let mut valid = 0usize;
    let mut invalid = 0usize;
    for payload in &mut corpus.payloads {
        let context = forced.unwrap_or_else(|| context_for(payload.attack_type));
        let verdict = analyze_payload(&payload.raw, context);
        payload.validation = verdict.to_validation();
        match payload.validation {
            Validation::Valid => valid += 1,
            _ => invalid += 1,
        }
    }

    let out_path = args.out.clone().unwrap_or(corpus_path);
    save_corpus(&corpus, &out_path)?;
    println!(
        "validated {} payloads: {} valid, {} invalid -> {}",
        corpus.len(),
        valid,
        invalid,
        out_path.display()
    );
    Ok(())
}
