//! TF-IDF vectorization of payload corpora.

use std::collections::{BTreeMap, BTreeSet};

use crate::corpus::Corpus;

use super::{tokenize, TfIdfMatrix};

/// Build the TF-IDF matrix: `tf` is the raw token count per document,
/// `idf = ln((1+N)/(1+df)) + 1` (smoothed so no token weighs zero), rows
/// L2-normalized.
pub fn build_tfidf(corpus: &Corpus) -> TfIdfMatrix {
    let docs: Vec<Vec<String>> = corpus.payloads.iter().map(|p| tokenize(&p.raw)).collect();

    let vocabulary: Vec<String> = docs
        .iter()
        .flatten()
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let index: BTreeMap<&str, usize> = vocabulary
        .iter()
        .enumerate()
        .map(|(i, t)| (t.as_str(), i))
        .collect();

    let n_docs = docs.len() as f64;
    let mut df = vec![0usize; vocabulary.len()];
    for doc in &docs {
        let unique: BTreeSet<&str> = doc.iter().map(|t| t.as_str()).collect();
        for token in unique {
            df[index[token]] += 1;
        }
    }
    let idf: Vec<f64> = df
        .iter()
        .map(|&d| ((1.0 + n_docs) / (1.0 + d as f64)).ln() + 1.0)
        .collect();

    let rows = docs
        .iter()
        .map(|doc| {
            let mut row = vec![0.0; vocabulary.len()];
            for token in doc {
                row[index[token.as_str()]] += 1.0;
            }
            for (value, weight) in row.iter_mut().zip(&idf) {
                *value *= weight;
            }
            let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                for value in &mut row {
                    *value /= norm;
                }
            }
            row
        })
        .collect();

    TfIdfMatrix { vocabulary, rows }
}
