use std::collections::HashSet;
use std::path::PathBuf;

use genxss_core::corpus::{
    load_corpus, save_corpus, Corpus, Payload, Source, Validation, WafOutcome,
};
use genxss_core::llm::{build_attack_prompt, complete, parse_payload_list};

use crate::config::{parse_attack_type, ResolvedConfig};
use crate::{CliError, GenerateArgs};

pub fn run(config: &ResolvedConfig, args: &GenerateArgs) -> Result<(), CliError> {
    let examples_path = args
        .examples
        .clone()
        .unwrap_or_else(|| config.resolve(&config.config.paths.examples));
    if !examples_path.exists() {
        return Err(CliError::usage(format!(
            "examples file {} does not exist",
            examples_path.display()
        )));
    }
    let examples = load_corpus(&examples_path)?;
    if examples.is_empty() {
        return Err(CliError::usage(format!(
            "examples file {} is empty",
            examples_path.display()
        )));
    }

    let count = args.count.unwrap_or(config.config.generation.count);
    let attack_type = match &args.attack_type {
        Some(name) => parse_attack_type(name)?,
        None => config.attack_type()?,
    };
    let out_path: PathBuf = args
        .out
        .clone()
        .unwrap_or_else(|| config.work_dir().join("corpus.jsonl"));

    let typed_examples: Vec<Payload> = examples
        .payloads
        .iter()
        .filter(|p| p.attack_type == attack_type)
        .cloned()
        .collect();
    let prompt = build_attack_prompt(
        if typed_examples.is_empty() {
            &examples.payloads
        } else {
            &typed_examples
        },
        attack_type,
        count,
        &config.config.generation.obfuscation_techniques,
    )?;
    let provider = config.provider()?;
    let response = complete(&prompt, &provider)?;
    let raws = parse_payload_list(&response.text)?;

    let mut corpus = if out_path.exists() {
        load_corpus(&out_path)?
    } else {
        if let Some(parent) = out_path.parent() {
            std::fs::create_dir_all(parent)
                .map_err(|e| CliError::runtime(format!("{}: {e}", parent.display())))?;
        }
        Corpus::new()
    };

    let generated_before: usize = corpus
        .metadata
        .get("generated_total")
        .and_then(|v| v.parse().ok())
        .unwrap_or(corpus.len());
    let mut seen: HashSet<String> = corpus.payloads.iter().map(|p| p.raw.clone()).collect();
    let mut appended = 0usize;
    let mut skipped_invalid = 0usize;
    for raw in &raws {
        if !seen.insert(raw.clone()) {
            continue;
        }
        let payload = Payload {
            id: corpus.next_id("p"),
            raw: raw.clone(),
            attack_type,
            source: Source::LlmGenerated {
                provider: response.provider.clone(),
                prompt: response.prompt_hash.clone(),
            },
            validation: Validation::Unchecked,
            waf_outcome: WafOutcome::Untested,
        };
        match corpus.push(payload) {
            Ok(()) => appended += 1,
            Err(_) => skipped_invalid += 1,
        }
    }
    corpus.metadata.insert(
        "generated_total".into(),
        (generated_before + raws.len()).to_string(),
    );
    corpus
        .metadata
        .insert("provider".into(), response.provider.clone());
    corpus
        .metadata
        .insert("prompt_hash".into(), response.prompt_hash.clone());
    save_corpus(&corpus, &out_path)?;

    println!(
        "generated {} candidates, appended {} new payloads ({} duplicates, {} invalid) -> {}",
        raws.len(),
        appended,
        raws.len() - appended - skipped_invalid,
        skipped_invalid,
        out_path.display()
    );
    Ok(())
}
