//! Ratcliff-Obershelp (gestalt) sequence similarity.

use std::collections::HashMap;

use crate::corpus::Corpus;

use super::DistanceMatrix;

/// Ratcliff-Obershelp similarity ratio `2M / (|a| + |b|)`, where `M` is the
/// total length of recursively located longest common blocks. No junk
/// heuristic. `ratio("", "") == 1.0` by convention. Arguments are ordered
/// canonically first, so the ratio is symmetric by construction.
pub fn ro_ratio(a: &str, b: &str) -> f64 {
    let (a, b) = if (a.len(), a) <= (b.len(), b) {
        (a, b)
    } else {
        (b, a)
    };
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let mut positions: HashMap<char, Vec<usize>> = HashMap::new();
    for (j, &c) in b.iter().enumerate() {
        positions.entry(c).or_default().push(j);
    }
    let matched = match_total(&a, &positions, 0, a.len(), 0, b.len());
    2.0 * matched as f64 / (a.len() + b.len()) as f64
}

/// Total matched characters: longest common block plus, recursively, the
/// matches in the unmatched flanks on either side.
fn match_total(
    a: &[char],
    positions: &HashMap<char, Vec<usize>>,
    alo: usize,
    ahi: usize,
    blo: usize,
    bhi: usize,
) -> usize {
    let (i, j, size) = longest_match(a, positions, alo, ahi, blo, bhi);
    if size == 0 {
        return 0;
    }
    size + match_total(a, positions, alo, i, blo, j)
        + match_total(a, positions, i + size, ahi, j + size, bhi)
}

/// Longest matching block within `a[alo..ahi]` and `b[blo..bhi]`; ties go
/// to the earliest start in `a`, then in `b`.
#[allow(clippy::needless_range_loop)]
fn longest_match(
    a: &[char],
    positions: &HashMap<char, Vec<usize>>,
    alo: usize,
    ahi: usize,
    blo: usize,
    bhi: usize,
) -> (usize, usize, usize) {
    let (mut besti, mut bestj, mut bestsize) = (alo, blo, 0usize);
    let mut j2len: HashMap<usize, usize> = HashMap::new();
    for i in alo..ahi {
        let mut new_j2len: HashMap<usize, usize> = HashMap::new();
        if let Some(js) = positions.get(&a[i]) {
            for &j in js {
                if j < blo {
                    continue;
                }
                if j >= bhi {
                    break;
                }
                let k = if j > 0 {
                    j2len.get(&(j - 1)).copied().unwrap_or(0) + 1
                } else {
                    1
                };
                new_j2len.insert(j, k);
                if k > bestsize {
                    besti = i + 1 - k;
                    bestj = j + 1 - k;
                    bestsize = k;
                }
            }
        }
        j2len = new_j2len;
    }
    (besti, bestj, bestsize)
}

/// Pairwise distance matrix with `d(i, j) = 1 - ro_ratio(raw_i, raw_j)`.
pub fn sequence_distance_matrix(corpus: &Corpus) -> DistanceMatrix {
    DistanceMatrix::from_fn(corpus.len(), |i, j| {
        1.0 - ro_ratio(&corpus.payloads[i].raw, &corpus.payloads[j].raw)
    })
}
