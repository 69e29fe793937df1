use std::path::PathBuf;

use crate::config::ResolvedConfig;
use crate::{
    CliError, ClusterArgs, GenerateArgs, PipelineArgs, RefineArgs, ReportArgs, TestArgs,
    ValidateArgs,
};

/// Run the stages in order: generate, validate, test, cluster, refine,
/// report. A stage whose outputs all exist is skipped unless `--force`;
/// with `--force` prior outputs are removed first. Stage failures halt the
/// pipeline, naming the stage, with earlier artifacts preserved.
pub fn run(config: &ResolvedConfig, args: &PipelineArgs) -> Result<(), CliError> {
    let work_dir: PathBuf = args.out.clone().unwrap_or_else(|| config.work_dir());
    std::fs::create_dir_all(&work_dir)
        .map_err(|e| CliError::runtime(format!("{}: {e}", work_dir.display())))?;

    let corpus_path = work_dir.join("corpus.jsonl");
    let validated_path = work_dir.join("validated.jsonl");
    let tested_path = work_dir.join("tested.jsonl");
    let clusters_path = work_dir.join("clusters.json");
    let refine_dir = work_dir.join("refine");
    let refined_path = work_dir.join("refined.conf");
    let report_prefix = work_dir.join("report");

    let mut stages_run = 0usize;
    let mut stage = |name: &str,
                     outputs: &[&PathBuf],
                     body: &mut dyn FnMut() -> Result<(), CliError>|
     -> Result<(), CliError> {
        if !args.force && outputs.iter().all(|p| p.exists()) {
            println!("stage {name}: up to date");
            return Ok(());
        }
        for output in outputs {
            if output.is_dir() {
                std::fs::remove_dir_all(output)
                    .map_err(|e| CliError::runtime(format!("{}: {e}", output.display())))?;
            } else if output.exists() {
                std::fs::remove_file(output)
                    .map_err(|e| CliError::runtime(format!("{}: {e}", output.display())))?;
            }
        }
        println!("stage {name}: running");
        body().map_err(|e| CliError {
            code: e.code,
            message: format!("stage {name}: {}", e.message),
        })?;
        stages_run += 1;
        Ok(())
    };

    stage("generate", &[&corpus_path], &mut || {
        super::generate::run(
            config,
            &GenerateArgs {
                count: None,
                attack_type: None,
                examples: None,
                out: Some(corpus_path.clone()),
            },
        )
    })?;

    stage("validate", &[&validated_path], &mut || {
        super::validate::run(
            config,
            &ValidateArgs {
                corpus: Some(corpus_path.clone()),
                context: None,
                out: Some(validated_path.clone()),
            },
        )
    })?;

    stage("test", &[&tested_path], &mut || {
        super::test::run(
            config,
            &TestArgs {
                target: None,
                ruleset: None,
                url: None,
                concurrency: None,
                corpus: Some(validated_path.clone()),
                out: Some(tested_path.clone()),
            },
        )
    })?;

    stage("cluster", &[&clusters_path], &mut || {
        super::cluster::run(
            config,
            &ClusterArgs {
                corpus: Some(tested_path.clone()),
                method: None,
                threshold: None,
                eps: None,
                min_samples: None,
                all: false,
                out: Some(clusters_path.clone()),
            },
        )
    })?;

    let state_path = refine_dir.join("state.json");
    stage("refine", &[&refined_path, &state_path], &mut || {
        if refine_dir.exists() {
            std::fs::remove_dir_all(&refine_dir)
                .map_err(|e| CliError::runtime(format!("{}: {e}", refine_dir.display())))?;
        }
        super::refine::run(
            config,
            &RefineArgs {
                corpus: Some(tested_path.clone()),
                benign: None,
                clusters: Some(clusters_path.clone()),
                out_dir: Some(refine_dir.clone()),
                annotations: None,
            },
        )
    })?;

    let report_json = work_dir.join("report.json");
    let report_txt = work_dir.join("report.txt");
    stage("report", &[&report_json, &report_txt], &mut || {
        super::report::run(
            config,
            &ReportArgs {
                corpus: Some(tested_path.clone()),
                clusters: Some(clusters_path.clone()),
                refine_state: Some(state_path.clone()),
                out: Some(report_prefix.clone()),
            },
        )
    })?;

    if stages_run == 0 {
        println!("all stages up to date");
    } else {
        println!(
            "pipeline complete: {stages_run} stage(s) ran -> {}",
            work_dir.display()
        );
    }
    Ok(())
}
