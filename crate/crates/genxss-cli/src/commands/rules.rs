use genxss_core::cluster::ClusterOutput;
use genxss_core::llm::{build_rule_prompt, complete, parse_ruleset_block};
use genxss_core::secrule::{lint_ruleset, parse_ruleset};

use crate::config::ResolvedConfig;
use crate::{CliError, RulesArgs};

pub fn run(config: &ResolvedConfig, args: &RulesArgs) -> Result<(), CliError> {
    let clusters_path = args
        .clusters
        .clone()
        .unwrap_or_else(|| config.work_dir().join("clusters.json"));
    let text = std::fs::read_to_string(&clusters_path)
        .map_err(|e| CliError::usage(format!("{}: {e}", clusters_path.display())))?;
    let clusters: ClusterOutput = serde_json::from_str(&text)
        .map_err(|e| CliError::runtime(format!("{}: {e}", clusters_path.display())))?;

    let corpus_path = args
        .corpus
        .clone()
        .unwrap_or_else(|| config.work_dir().join("tested.jsonl"));
    let corpus = super::load_corpus_required(&corpus_path)?;
    let samples: Vec<_> = super::bypassed_subset(&corpus)
        .payloads
        .into_iter()
        .take(config.config.refine.sample_count)
        .collect();

    let prompt = build_rule_prompt(&clusters.summaries, &samples)?;
    let provider = config.provider()?;
    let response = complete(&prompt, &provider)?;
    let block = parse_ruleset_block(&response.text)?;

    let rules = parse_ruleset(&block)?;
    for warning in lint_ruleset(&rules) {
        eprintln!("lint: {warning}");
    }

    let out_path = args
        .out
        .clone()
        .unwrap_or_else(|| config.work_dir().join("generated-rules.conf"));
    if let Some(parent) = out_path.parent() {
        std::fs::create_dir_all(parent)
            .map_err(|e| CliError::runtime(format!("{}: {e}", parent.display())))?;
    }
    std::fs::write(&out_path, &block)
        .map_err(|e| CliError::runtime(format!("{}: {e}", out_path.display())))?;
    println!("wrote {} rules -> {}", rules.len(), out_path.display());
    Ok(())
}
