pub mod cluster;
pub mod generate;
pub mod metrics;
pub mod pipeline;
pub mod refine;
pub mod report;
pub mod rules;
pub mod serve;
pub mod validate;

use std::path::Path;

use genxss_core::corpus::{Corpus, WafOutcome};

use crate::CliError;

/// Load a corpus, mapping a missing file to a usage error.
pub(crate) fn load_corpus_required(path: &Path) -> Result<Corpus, CliError> {
    if !path.exists() {
        return Err(CliError::usage(format!(
            "corpus file {} does not exist",
            path.display()
        )));
    }
    genxss_core::corpus::load_corpus(path).map_err(CliError::from)
}

/// The bypassing subset of a tested corpus, in corpus order.
pub(crate) fn bypassed_subset(corpus: &Corpus) -> Corpus {
    Corpus {
        payloads: corpus
            .payloads
            .iter()
            .filter(|p| p.waf_outcome == WafOutcome::Bypassed)
            .cloned()
            .collect(),
        metadata: corpus.metadata.clone(),
    }
}
