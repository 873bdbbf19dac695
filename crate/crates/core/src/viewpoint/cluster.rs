//! Average-linkage clustering with an inconsistency cut.

use serde::{Deserialize, Serialize};

use super::{Manifold, SamplePoint, ViewpointError};

/// Distance between two samples with each dimension scaled by `q`.
pub fn standardized_distance(a: &[f64; 4], b: &[f64; 4], q: &[f64; 4]) -> Result<f64, ViewpointError> {
    let mut sum = 0.0;
    for n in 0..4 {
        if !(q[n] > 0.0) {
            return Err(ViewpointError::DegenerateDimension(n));
        }
        sum += ((a[n] - b[n]) / q[n]).powi(2);
    }
    Ok(sum.sqrt())
}

/// Sample standard deviation of each dimension.
pub fn dimension_stds(samples: &[SamplePoint]) -> [f64; 4] {
    let n = samples.len() as f64;
    let mut out = [0.0; 4];
    for (d, o) in out.iter_mut().enumerate() {
        let mean = samples.iter().map(|s| s.as_array()[d]).sum::<f64>() / n;
        let var = samples.iter().map(|s| (s.as_array()[d] - mean).powi(2)).sum::<f64>() / (n - 1.0);
        *o = var.sqrt();
    }
    out
}

/// Full symmetric matrix of standardized distances. Dimensions with zero
/// spread carry no information and are left out, with a warning.
pub fn pairwise_dissimilarities(samples: &[SamplePoint]) -> Result<Vec<Vec<f64>>, ViewpointError> {
    if samples.len() < 2 {
        return Err(ViewpointError::TooFewSamples(samples.len()));
    }
    let q = dimension_stds(samples);
    let keep: Vec<usize> = (0..4).filter(|&d| q[d] > 0.0).collect();
    for d in (0..4).filter(|d| !keep.contains(d)) {
        log::warn!("clustering dimension {d} is constant and is ignored");
    }
    let n = samples.len();
    let mut dist = vec![vec![0.0; n]; n];
    for i in 0..n {
        let a = samples[i].as_array();
        for j in i + 1..n {
            let b = samples[j].as_array();
            let d = keep.iter().map(|&d| ((a[d] - b[d]) / q[d]).powi(2)).sum::<f64>().sqrt();
            dist[i][j] = d;
            dist[j][i] = d;
        }
    }
    Ok(dist)
}

/// One agglomeration step. Leaves are ids `0..n`; the cluster formed by
/// merge `k` has id `n + k`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub a: usize,
    pub b: usize,
    pub height: f64,
    pub size: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Linkage {
    pub leaves: usize,
    pub merges: Vec<Merge>,
}

impl Linkage {
    fn children(&self, id: usize) -> Option<(usize, usize)> {
        (id >= self.leaves).then(|| {
            let m = &self.merges[id - self.leaves];
            (m.a, m.b)
        })
    }

    fn leaves_under(&self, id: usize, out: &mut Vec<usize>) {
        match self.children(id) {
            None => out.push(id),
            Some((a, b)) => {
                self.leaves_under(a, out);
                self.leaves_under(b, out);
            }
        }
    }
}

/// UPGMA over a full distance matrix. Ties merge the pair with the lowest
/// cluster ids.
pub fn upgma_linkage(dist: &[Vec<f64>]) -> Result<Linkage, ViewpointError> {
    let n = dist.len();
    if n < 2 {
        return Err(ViewpointError::TooFewSamples(n));
    }
    let mut d: Vec<Vec<f64>> = dist.to_vec();
    // slot -> (cluster id, size); slots of merged clusters become None
    let mut slots: Vec<Option<(usize, usize)>> = (0..n).map(|i| Some((i, 1))).collect();
    let mut merges = Vec::with_capacity(n - 1);
    for k in 0..n - 1 {
        let mut best: Option<(f64, usize, usize, usize, usize)> = None;
        for i in 0..n {
            let Some((id_i, _)) = slots[i] else { continue };
            for j in i + 1..n {
                let Some((id_j, _)) = slots[j] else { continue };
                let (lo, hi) = (id_i.min(id_j), id_i.max(id_j));
                let cand = (d[i][j], lo, hi, i, j);
                let better = match best {
                    None => true,
                    Some(b) => cand.0 < b.0 || (cand.0 == b.0 && (cand.1, cand.2) < (b.1, b.2)),
                };
                if better {
                    best = Some(cand);
                }
            }
        }
        let (h, lo, hi, i, j) = best.expect("at least two active clusters");
        let (si, sj) = (slots[i].unwrap().1, slots[j].unwrap().1);
        for m in 0..n {
            if m == i || m == j || slots[m].is_none() {
                continue;
            }
            let v = (si as f64 * d[i][m] + sj as f64 * d[j][m]) / (si + sj) as f64;
            d[i][m] = v;
            d[m][i] = v;
        }
        slots[i] = Some((n + k, si + sj));
        slots[j] = None;
        merges.push(Merge { a: lo, b: hi, height: h, size: si + sj });
    }
    Ok(Linkage { leaves: n, merges })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Inconsistency {
    pub mean: f64,
    pub std: f64,
    pub count: usize,
    pub coefficient: f64,
}

/// Inconsistency of every merge over the links within `depth` levels below
/// it, the merge itself included.
pub fn inconsistency(linkage: &Linkage, depth: usize) -> Vec<Inconsistency> {
    let depth = depth.max(1);
    linkage
        .merges
        .iter()
        .enumerate()
        .map(|(k, m)| {
            let mut heights = Vec::new();
            let mut frontier = vec![linkage.leaves + k];
            for _ in 0..depth {
                let mut next = Vec::new();
                for id in frontier {
                    if let Some((a, b)) = linkage.children(id) {
                        heights.push(linkage.merges[id - linkage.leaves].height);
                        next.push(a);
                        next.push(b);
                    }
                }
                frontier = next;
            }
            let count = heights.len();
            let mean = heights.iter().sum::<f64>() / count as f64;
            let std = if count > 1 {
                (heights.iter().map(|h| (h - mean).powi(2)).sum::<f64>() / (count - 1) as f64).sqrt()
            } else {
                0.0
            };
            let coefficient = if std > 0.0 { (m.height - mean) / std } else { 0.0 };
            Inconsistency { mean, std, count, coefficient }
        })
        .collect()
}

/// Cluster label (dense, from 0) of every leaf. A subtree whose largest
/// inconsistency stays at or below `threshold` becomes one cluster.
pub fn cut_inconsistent(linkage: &Linkage, coefficients: &[f64], threshold: f64) -> Vec<usize> {
    let n = linkage.leaves;
    let mut max_below = vec![0.0f64; linkage.merges.len()];
    for (k, m) in linkage.merges.iter().enumerate() {
        let mut v = coefficients[k];
        for c in [m.a, m.b] {
            if c >= n {
                v = v.max(max_below[c - n]);
            }
        }
        max_below[k] = v;
    }
    let mut labels = vec![usize::MAX; n];
    let mut next = 0;
    let mut stack = vec![n + linkage.merges.len() - 1];
    while let Some(id) = stack.pop() {
        if id < n || max_below[id - n] <= threshold {
            let mut members = Vec::new();
            linkage.leaves_under(id, &mut members);
            for leaf in members {
                labels[leaf] = next;
            }
            next += 1;
        } else {
            let (a, b) = linkage.children(id).unwrap();
            stack.push(b);
            stack.push(a);
        }
    }
    labels
}

/// Group samples into manifolds: standardized distances, average linkage,
/// and an inconsistency cut at depth 2. Manifolds come back ranked by value,
/// lowest first.
pub fn upgma_cluster(samples: &[SamplePoint], threshold: f64) -> Result<Vec<Manifold>, ViewpointError> {
    if !(threshold > 0.0) || !threshold.is_finite() {
        return Err(ViewpointError::BadThreshold(threshold));
    }
    let dist = pairwise_dissimilarities(samples)?;
    let linkage = upgma_linkage(&dist)?;
    let coef: Vec<f64> = inconsistency(&linkage, 2).iter().map(|c| c.coefficient).collect();
    let labels = cut_inconsistent(&linkage, &coef, threshold);
    let count = labels.iter().max().map_or(0, |m| m + 1);
    let mut manifolds: Vec<Manifold> = (0..count)
        .map(|c| {
            let members: Vec<usize> = (0..samples.len()).filter(|&i| labels[i] == c).collect();
            let value = members.iter().map(|&i| samples[i].value).sum::<f64>() / members.len() as f64;
            Manifold { members, value, rank: 0 }
        })
        .collect();
    manifolds.sort_by(|a, b| a.value.total_cmp(&b.value).then(a.members[0].cmp(&b.members[0])));
    for (i, m) in manifolds.iter_mut().enumerate() {
        m.rank = i + 1;
    }
    Ok(manifolds)
}
