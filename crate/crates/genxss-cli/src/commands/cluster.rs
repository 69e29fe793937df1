use genxss_core::cluster::{cluster_corpus, ClusterMethod, MethodParams};

use crate::config::ResolvedConfig;
use crate::{CliError, ClusterArgs};

pub(crate) fn method_and_params(
    config: &ResolvedConfig,
    method: Option<&str>,
    threshold: Option<f64>,
    eps: Option<f64>,
    min_samples: Option<usize>,
) -> Result<(ClusterMethod, MethodParams), CliError> {
    let section = &config.config.clustering;
    let name = method.unwrap_or(&section.method);
    match name {
        "tfidf_hac" => Ok((
            ClusterMethod::TfidfHac,
            MethodParams::Ward {
                distance_threshold: threshold.unwrap_or(section.ward_threshold),
            },
        )),
        "seq_dbscan" => Ok((
            ClusterMethod::SeqDbscan,
            MethodParams::Dbscan {
                eps: eps.unwrap_or(section.eps),
                min_samples: min_samples.unwrap_or(section.min_samples),
            },
        )),
        other => Err(CliError::usage(format!(
            "unknown clustering method {other:?} (expected tfidf_hac or seq_dbscan)"
        ))),
    }
}

pub fn run(config: &ResolvedConfig, args: &ClusterArgs) -> Result<(), CliError> {
    let corpus_path = args
        .corpus
        .clone()
        .unwrap_or_else(|| config.work_dir().join("tested.jsonl"));
    let corpus = super::load_corpus_required(&corpus_path)?;
    let subject = if args.all {
        corpus
    } else {
        super::bypassed_subset(&corpus)
    };
    if subject.is_empty() {
        return Err(CliError::usage(
            "no payloads to cluster (nothing bypassed; use --all to cluster everything)".into(),
        ));
    }

    let (method, params) = method_and_params(
        config,
        args.method.as_deref(),
        args.threshold,
        args.eps,
        args.min_samples,
    )?;
    let output = cluster_corpus(&subject, method, &params);

    let out_path = args
        .out
        .clone()
        .unwrap_or_else(|| config.work_dir().join("clusters.json"));
    if let Some(parent) = out_path.parent() {
        std::fs::create_dir_all(parent)
            .map_err(|e| CliError::runtime(format!("{}: {e}", parent.display())))?;
    }
    let json =
        serde_json::to_string_pretty(&output).map_err(|e| CliError::runtime(e.to_string()))?;
    std::fs::write(&out_path, json)
        .map_err(|e| CliError::runtime(format!("{}: {e}", out_path.display())))?;

    println!(
        "clustered {} payloads into {} clusters ({} noise), silhouette {} -> {}",
        subject.len(),
        output.num_clusters(),
        output.num_noise(),
        output
            .silhouette
            .map(|s| format!("{s:.4}"))
            .unwrap_or_else(|| "undefined".into()),
        out_path.display()
    );
    Ok(())
}
