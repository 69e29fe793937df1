//! Silhouette scoring over a precomputed distance matrix.

use super::{ClusterAssignment, DistanceMatrix};

/// Mean silhouette over non-noise points: `(b - a) / max(a, b)` where `a`
/// is the mean distance to the point's own cluster and `b` the smallest
/// mean distance to another cluster. Points in singleton clusters score 0;
/// noise points are excluded. Undefined (`None`) with fewer than two
/// non-noise clusters.
pub fn silhouette(dm: &DistanceMatrix, assignment: &ClusterAssignment) -> Option<f64> {
    let members = assignment.members();
    let populated: Vec<&Vec<usize>> = members.iter().filter(|m| !m.is_empty()).collect();
    if populated.len() < 2 {
        return None;
    }

    let mut total = 0.0;
    let mut count = 0usize;
    for (point, &label) in assignment.labels.iter().enumerate() {
        if label < 0 {
            continue;
        }
        let own = &members[label as usize];
        count += 1;
        if own.len() == 1 {
            continue; // singleton scores 0
        }
        let a = own
            .iter()
            .filter(|&&j| j != point)
            .map(|&j| dm.get(point, j))
            .sum::<f64>()
            / (own.len() - 1) as f64;
        let b = members
            .iter()
            .enumerate()
            .filter(|(other, m)| *other != label as usize && !m.is_empty())
            .map(|(_, m)| m.iter().map(|&j| dm.get(point, j)).sum::<f64>() / m.len() as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
        }
    }
    Some(total / count as f64)
}
