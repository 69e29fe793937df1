//! Agglomerative clustering with Ward linkage.

use super::{euclidean, ClusterAssignment, ClusterMethod, MethodParams, TfIdfMatrix};

struct ActiveCluster {
    /// Smallest original row index; the deterministic cluster identity used
    /// for tie-breaking and final label order.
    key: usize,
    size: usize,
}

/// Hierarchical agglomerative clustering over the matrix rows.
///
/// Starts from singletons with pairwise Euclidean distances and repeatedly
/// merges the closest pair, updating distances with the Lance-Williams Ward
/// recurrence; merging stops once the minimum inter-cluster Ward distance
/// exceeds `distance_threshold`. Exact distance ties break toward the
/// lowest `(key_i, key_j)` pair. Flat clusters are labeled `0..k-1` by
/// first-member order.
#[allow(clippy::needless_range_loop)]
pub fn hac_ward(matrix: &TfIdfMatrix, distance_threshold: f64) -> ClusterAssignment {
    let n = matrix.rows.len();
    let params = MethodParams::Ward { distance_threshold };
    let mut clusters: Vec<ActiveCluster> =
        (0..n).map(|i| ActiveCluster { key: i, size: 1 }).collect();
    let mut members: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    // dist[i][j] for active positions i < j
    let mut dist: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| euclidean(&matrix.rows[i], &matrix.rows[j]))
                .collect()
        })
        .collect();

    while clusters.len() > 1 {
        // closest active pair, ties toward lowest (key_a, key_b)
        let mut best: Option<(f64, usize, usize)> = None;
        for a in 0..clusters.len() {
            for b in (a + 1)..clusters.len() {
                let d = dist[a][b];
                let (ka, kb) = ordered_keys(&clusters, a, b);
                let better = match best {
                    None => true,
                    Some((bd, bi, bj)) => {
                        let (bka, bkb) = ordered_keys(&clusters, bi, bj);
                        d < bd || (d == bd && (ka, kb) < (bka, bkb))
                    }
                };
                if better {
                    best = Some((d, a, b));
                }
            }
        }
        let (d_ab, a, b) = best.expect("at least one pair");
        if d_ab > distance_threshold {
            break;
        }

        // Lance-Williams Ward update against every other active cluster
        let (size_a, size_b) = (clusters[a].size, clusters[b].size);
        let merged_size = size_a + size_b;
        for k in 0..clusters.len() {
            if k == a || k == b {
                continue;
            }
            let size_k = clusters[k].size as f64;
            let d_ak = dist[a][k];
            let d_bk = dist[b][k];
            let num = (size_a as f64 + size_k) * d_ak * d_ak
                + (size_b as f64 + size_k) * d_bk * d_bk
                - size_k * d_ab * d_ab;
            let den = merged_size as f64 + size_k;
            let updated = (num / den).sqrt();
            dist[a][k] = updated;
            dist[k][a] = updated;
        }

        clusters[a] = ActiveCluster {
            key: clusters[a].key.min(clusters[b].key),
            size: merged_size,
        };
        let absorbed = members[b].clone();
        members[a].extend(absorbed);
        clusters.swap_remove(b);
        members.swap_remove(b);
        let last = clusters.len();
        for row in dist.iter_mut() {
            row.swap(b, last);
        }
        dist.swap(b, last);
    }

    // label clusters by ascending first-member key
    let mut order: Vec<usize> = (0..clusters.len()).collect();
    order.sort_by_key(|&i| clusters[i].key);
    let mut labels = vec![0i32; n];
    for (label, &pos) in order.iter().enumerate() {
        for &member in &members[pos] {
            labels[member] = label as i32;
        }
    }

    ClusterAssignment {
        labels,
        method: ClusterMethod::TfidfHac,
        params,
    }
}

fn ordered_keys(clusters: &[ActiveCluster], a: usize, b: usize) -> (usize, usize) {
    let (ka, kb) = (clusters[a].key, clusters[b].key);
    if ka < kb {
        (ka, kb)
    } else {
        (kb, ka)
    }
}
