//! DBSCAN over a precomputed distance matrix.

use std::collections::VecDeque;

use super::{ClusterAssignment, ClusterMethod, DistanceMatrix, MethodParams};

const NOISE: i32 = -1;
const UNVISITED: i32 = -2;

/// Standard DBSCAN: a point is core iff at least `min_samples` points
/// (itself included) lie within `eps`; clusters are the density-connected
/// components of core points plus their border points; everything else is
/// noise (`-1`). Deterministic: points are scanned in index order and
/// border ties go to the first-discovered cluster.
pub fn dbscan(dm: &DistanceMatrix, eps: f64, min_samples: usize) -> ClusterAssignment {
    let n = dm.n;
    let params = MethodParams::Dbscan { eps, min_samples };
    let mut labels = vec![UNVISITED; n];
    let neighbors = |i: usize| -> Vec<usize> { (0..n).filter(|&j| dm.get(i, j) <= eps).collect() };

    let mut next_label = 0i32;
    for seed in 0..n {
        if labels[seed] != UNVISITED {
            continue;
        }
        let seed_neighbors = neighbors(seed);
        if seed_neighbors.len() < min_samples {
            labels[seed] = NOISE;
            continue;
        }
        let label = next_label;
        next_label += 1;
        labels[seed] = label;
        let mut queue: VecDeque<usize> = seed_neighbors.into_iter().collect();
        while let Some(point) = queue.pop_front() {
            if labels[point] == NOISE {
                labels[point] = label; // border point claimed
                continue;
            }
            if labels[point] != UNVISITED {
                continue;
            }
            labels[point] = label;
            let point_neighbors = neighbors(point);
            if point_neighbors.len() >= min_samples {
                queue.extend(point_neighbors);
            }
        }
    }

    ClusterAssignment {
        labels,
        method: ClusterMethod::SeqDbscan,
        params,
    }
}
