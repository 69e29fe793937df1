//! Payload clustering: TF-IDF + Ward-linkage hierarchical agglomerative
//! clustering, and Ratcliff-Obershelp sequence similarity + DBSCAN, plus
//! silhouette scoring and per-cluster summaries for prompt building.

mod dbscan;
mod hac;
mod seq;
mod silhouette;
mod tfidf;

pub use dbscan::dbscan;
pub use hac::hac_ward;
pub use seq::{ro_ratio, sequence_distance_matrix};
pub use silhouette::silhouette;
pub use tfidf::build_tfidf;

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;

/// TF-IDF document matrix. Every row is L2-normalized (or the zero vector
/// for an empty token list); the vocabulary is sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct TfIdfMatrix {
    pub vocabulary: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// Symmetric pairwise distance matrix with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    pub n: usize,
    entries: Vec<Vec<f64>>,
}

impl DistanceMatrix {
    /// Build from a function over index pairs; `f` is called once per
    /// unordered pair, so symmetry holds by construction.
    #[allow(clippy::needless_range_loop)]
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut entries = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = f(i, j);
                entries[i][j] = d;
                entries[j][i] = d;
            }
        }
        DistanceMatrix { n, entries }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i][j]
    }
}

/// Clustering method of an assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterMethod {
    TfidfHac,
    SeqDbscan,
}

/// Parameters the assignment was produced with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", untagged)]
pub enum MethodParams {
    Ward { distance_threshold: f64 },
    Dbscan { eps: f64, min_samples: usize },
}

/// Per-payload labels. `-1` marks DBSCAN noise; non-noise labels are
/// contiguous from 0, ordered by each cluster's first member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    pub labels: Vec<i32>,
    pub method: ClusterMethod,
    pub params: MethodParams,
}

impl ClusterAssignment {
    /// Number of non-noise clusters.
    pub fn num_clusters(&self) -> usize {
        self.labels
            .iter()
            .filter(|&&l| l >= 0)
            .map(|&l| l as usize + 1)
            .max()
            .unwrap_or(0)
    }

    /// Member indices per cluster label.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_clusters()];
        for (idx, &label) in self.labels.iter().enumerate() {
            if label >= 0 {
                out[label as usize].push(idx);
            }
        }
        out
    }
}

/// A medoid representative of a cluster.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Representative {
    pub id: String,
    pub raw: String,
}

/// Cluster digest used to build rule-generation prompts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub cluster_id: i32,
    pub size: usize,
    /// Up to 3 medoids: minimal summed distance to members, ties by lowest
    /// index.
    pub representatives: Vec<Representative>,
    /// Tokens present in at least 80% of members, sorted.
    pub shared_tokens: Vec<String>,
}

/// The cluster-stage output file: labels, score and summaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterOutput {
    pub method: ClusterMethod,
    pub params: MethodParams,
    pub labels: Vec<i32>,
    pub silhouette: Option<f64>,
    pub summaries: Vec<ClusterSummary>,
}

impl ClusterOutput {
    pub fn num_clusters(&self) -> usize {
        self.labels
            .iter()
            .filter(|&&l| l >= 0)
            .map(|&l| l as usize + 1)
            .max()
            .unwrap_or(0)
    }

    pub fn num_noise(&self) -> usize {
        self.labels.iter().filter(|&&l| l < 0).count()
    }
}

/// Run one clustering pipeline end to end: vectorize/measure, cluster,
/// score, summarize.
pub fn cluster_corpus(
    corpus: &Corpus,
    method: ClusterMethod,
    params: &MethodParams,
) -> ClusterOutput {
    let (assignment, dm) = match (method, params) {
        (ClusterMethod::TfidfHac, MethodParams::Ward { distance_threshold }) => {
            let matrix = build_tfidf(corpus);
            let assignment = hac_ward(&matrix, *distance_threshold);
            let dm = DistanceMatrix::from_fn(corpus.len(), |i, j| {
                euclidean(&matrix.rows[i], &matrix.rows[j])
            });
            (assignment, dm)
        }
        (ClusterMethod::SeqDbscan, MethodParams::Dbscan { eps, min_samples }) => {
            let dm = sequence_distance_matrix(corpus);
            let assignment = dbscan(&dm, *eps, *min_samples);
            (assignment, dm)
        }
        _ => panic!("method/params mismatch"),
    };
    let score = silhouette(&dm, &assignment);
    let summaries = summarize_clusters(corpus, &assignment);
    ClusterOutput {
        method,
        params: params.clone(),
        labels: assignment.labels,
        silhouette: score,
        summaries,
    }
}

/// Tokenize a payload: lowercase, maximal `[a-z0-9]` runs become word
/// tokens, `%XX`/`%uXXXX` escapes are kept whole, every other non-space
/// character stands alone.
pub fn tokenize(raw: &str) -> Vec<String> {
    let chars: Vec<char> = raw.to_lowercase().chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    let is_word = |c: char| c.is_ascii_lowercase() || c.is_ascii_digit();
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if is_word(c) {
            let mut j = i;
            while j < chars.len() && is_word(chars[j]) {
                j += 1;
            }
            tokens.push(chars[i..j].iter().collect());
            i = j;
            continue;
        }
        if c == '%' {
            if chars.get(i + 1) == Some(&'u')
                && i + 5 < chars.len()
                && chars[i + 2..i + 6].iter().all(|c| c.is_ascii_hexdigit())
            {
                tokens.push(chars[i..i + 6].iter().collect());
                i += 6;
                continue;
            }
            if i + 2 < chars.len()
                && chars[i + 1].is_ascii_hexdigit()
                && chars[i + 2].is_ascii_hexdigit()
            {
                tokens.push(chars[i..i + 3].iter().collect());
                i += 3;
                continue;
            }
        }
        tokens.push(c.to_string());
        i += 1;
    }
    tokens
}

/// Euclidean distance between two equal-length vectors.
pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Summarize each cluster of `assignment`: size, up to 3 medoids and the
/// tokens shared by at least 80% of members. Medoid distances use the
/// assignment's own geometry (TF-IDF rows for HAC, sequence distance for
/// DBSCAN).
pub fn summarize_clusters(corpus: &Corpus, assignment: &ClusterAssignment) -> Vec<ClusterSummary> {
    let dm = match assignment.method {
        ClusterMethod::TfidfHac => {
            let matrix = build_tfidf(corpus);
            DistanceMatrix::from_fn(corpus.len(), |i, j| {
                euclidean(&matrix.rows[i], &matrix.rows[j])
            })
        }
        ClusterMethod::SeqDbscan => sequence_distance_matrix(corpus),
    };
    let mut summaries = Vec::new();
    for (cluster_id, members) in assignment.members().into_iter().enumerate() {
        if members.is_empty() {
            continue;
        }
        // medoids: minimal summed distance to other members, ties by index
        let mut ranked: Vec<(f64, usize)> = members
            .iter()
            .map(|&i| {
                let total: f64 = members.iter().map(|&j| dm.get(i, j)).sum();
                (total, i)
            })
            .collect();
        ranked.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        let representatives = ranked
            .iter()
            .take(3)
            .map(|&(_, i)| Representative {
                id: corpus.payloads[i].id.clone(),
                raw: corpus.payloads[i].raw.clone(),
            })
            .collect();

        let token_sets: Vec<std::collections::BTreeSet<String>> = members
            .iter()
            .map(|&i| tokenize(&corpus.payloads[i].raw).into_iter().collect())
            .collect();
        let mut counts: std::collections::BTreeMap<&str, usize> = Default::default();
        for set in &token_sets {
            for token in set {
                *counts.entry(token).or_insert(0) += 1;
            }
        }
        let size = members.len();
        let shared_tokens = counts
            .into_iter()
            .filter(|&(_, c)| 5 * c >= 4 * size)
            .map(|(t, _)| t.to_string())
            .collect();

        summaries.push(ClusterSummary {
            cluster_id: cluster_id as i32,
            size,
            representatives,
            shared_tokens,
        });
    }
    summaries
}
