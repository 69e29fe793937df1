use std::path::Path;

use genxss_core::cluster::ClusterOutput;
use genxss_core::corpus::load_benign;
use genxss_core::refine::RefineState;
use genxss_core::report::build_report;

use crate::config::ResolvedConfig;
use crate::{CliError, ReportArgs};

fn load_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))
}

pub fn run(config: &ResolvedConfig, args: &ReportArgs) -> Result<(), CliError> {
    let corpus_path = args
        .corpus
        .clone()
        .unwrap_or_else(|| config.work_dir().join("tested.jsonl"));
    let corpus = super::load_corpus_required(&corpus_path)?;

    let clusters: Option<ClusterOutput> = match &args.clusters {
        Some(path) => Some(load_json(path)?),
        None => {
            let default = config.work_dir().join("clusters.json");
            if default.exists() {
                Some(load_json(&default)?)
            } else {
                None
            }
        }
    };
    let refine_state: Option<RefineState> = match &args.refine_state {
        Some(path) => Some(load_json(path)?),
        None => {
            let default = config.work_dir().join("refine/state.json");
            if default.exists() {
                Some(load_json(&default)?)
            } else {
                None
            }
        }
    };
    let benign = {
        let path = config.resolve(&config.config.paths.benign);
        if path.exists() {
            Some(load_benign(&path)?)
        } else {
            None
        }
    };

    let report = build_report(&corpus, benign.as_deref(), clusters, refine_state.as_ref())?;

    let text = report.render_text();
    print!("{text}");

    if let Some(prefix) = &args.out {
        if let Some(parent) = prefix.parent() {
            std::fs::create_dir_all(parent)
                .map_err(|e| CliError::runtime(format!("{}: {e}", parent.display())))?;
        }
        let json_path = prefix.with_extension("json");
        let txt_path = prefix.with_extension("txt");
        let json = serde_json::to_string_pretty(&report).expect("report serializes");
        std::fs::write(&json_path, json)
            .map_err(|e| CliError::runtime(format!("{}: {e}", json_path.display())))?;
        std::fs::write(&txt_path, &text)
            .map_err(|e| CliError::runtime(format!("{}: {e}", txt_path.display())))?;
        println!(
            "\nreport -> {} and {}",
            json_path.display(),
            txt_path.display()
        );
    }
    Ok(())
}
