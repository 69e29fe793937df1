use std::path::PathBuf;

use genxss_core::cluster::ClusterOutput;
use genxss_core::corpus::load_benign;
use genxss_core::refine::{ingest_annotations, run_refinement, RefineConfig};

use crate::config::ResolvedConfig;
use crate::{CliError, RefineArgs};

pub fn run(config: &ResolvedConfig, args: &RefineArgs) -> Result<(), CliError> {
    let corpus_path = args
        .corpus
        .clone()
        .unwrap_or_else(|| config.work_dir().join("tested.jsonl"));
    let corpus = super::load_corpus_required(&corpus_path)?;
    let bypassing = super::bypassed_subset(&corpus);
    if bypassing.is_empty() {
        return Err(CliError::usage(
            "nothing to refine: the corpus has no bypassing payloads".into(),
        ));
    }

    let benign_path = args
        .benign
        .clone()
        .unwrap_or_else(|| config.resolve(&config.config.paths.benign));
    let benign = load_benign(&benign_path)?;

    let clusters_path = args
        .clusters
        .clone()
        .unwrap_or_else(|| config.work_dir().join("clusters.json"));
    let text = std::fs::read_to_string(&clusters_path)
        .map_err(|e| CliError::usage(format!("{}: {e}", clusters_path.display())))?;
    let clusters: ClusterOutput = serde_json::from_str(&text)
        .map_err(|e| CliError::runtime(format!("{}: {e}", clusters_path.display())))?;

    let annotations_path: Option<PathBuf> = match &args.annotations {
        Some(path) => Some(path.clone()),
        None if !config.config.paths.annotations.is_empty() => {
            Some(config.resolve(&config.config.paths.annotations))
        }
        None => None,
    };
    let annotations = match annotations_path {
        Some(path) => ingest_annotations(&path)?,
        None => Vec::new(),
    };

    let out_dir = args
        .out_dir
        .clone()
        .unwrap_or_else(|| config.work_dir().join("refine"));
    let refine_config = RefineConfig {
        max_iterations: config.config.refine.max_iterations,
        target_recall: config.config.refine.target_recall,
        max_fp: config.config.refine.max_fp,
        checkpoint_dir: Some(out_dir.clone()),
        annotations,
        sample_count: config.config.refine.sample_count,
    };
    let provider = config.provider()?;

    let state = run_refinement(
        &bypassing.payloads,
        &benign,
        &clusters.summaries,
        &provider,
        &refine_config,
    )?;

    if let Some(best) = &state.best {
        // the consolidated ruleset lands next to the checkpoint directory
        let refined_path = out_dir
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or(&out_dir)
            .join("refined.conf");
        std::fs::write(&refined_path, &best.text)
            .map_err(|e| CliError::runtime(format!("{}: {e}", refined_path.display())))?;
        println!(
            "refinement {:?} after {} iterations: {} rules block {}/{} (fp {}) -> {}",
            state.stop_reason,
            state.iterations_completed,
            best.num_rules,
            best.blocked,
            best.blocked + best.bypassing,
            best.false_positives,
            refined_path.display()
        );
    } else {
        println!(
            "refinement {:?} after {} iterations: no candidate ruleset parsed",
            state.stop_reason, state.iterations_completed
        );
    }
    println!("checkpoints -> {}", out_dir.display());
    Ok(())
}
