use genxss_core::corpus::load_benign;
use genxss_core::harness::{compute_confusion, metrics};

use crate::config::ResolvedConfig;
use crate::{CliError, MetricsArgs};

pub fn run(_config: &ResolvedConfig, args: &MetricsArgs) -> Result<(), CliError> {
    let attacks = super::load_corpus_required(&args.attacks)?;
    let benign = load_benign(&args.benign)?;

    let cm = compute_confusion(&attacks.payloads, &benign)?;
    let derived = metrics(&cm)?;

    let json = serde_json::json!({
        "confusion": cm,
        "metrics": derived,
    });
    let rendered = serde_json::to_string_pretty(&json).expect("metrics serialize");
    println!("{rendered}");
    if let Some(out) = &args.out {
        std::fs::write(out, rendered)
            .map_err(|e| CliError::runtime(format!("{}: {e}", out.display())))?;
    }
    Ok(())
}
