//! Average-linkage agglomerative clustering under cosine distance.

use std::collections::HashMap;
use std::hash::Hash;

use super::{cosine_score, MetricsError};

pub fn cosine_distance(a: &[f64], b: &[f64]) -> Result<f64, MetricsError> {
    Ok(1.0 - cosine_score(a, b)?)
}

/// Merges the closest pair of clusters until `k` remain. Distances between
/// clusters are the mean pairwise cosine distance of their members, kept up
/// to date with the Lance-Williams update. Ties go to the lexicographically
/// smallest `(i, j)` pair of cluster indices, and a merged cluster keeps the
/// smaller index.
///
/// Returns one label per point in `0..k`, numbered by first appearance.
pub fn agglomerative_cluster(points: &[Vec<f64>], k: usize) -> Result<Vec<usize>, MetricsError> {
    let n = points.len();
    if k == 0 || k > n {
        return Err(MetricsError::InvalidArgument(format!(
            "k must lie in 1..={n}, got {k}"
        )));
    }
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let v = cosine_distance(&points[i], &points[j])?;
            d[i][j] = v;
            d[j][i] = v;
        }
    }
    let mut owner: Vec<usize> = (0..n).collect();
    let mut size = vec![1usize; n];
    let mut active = vec![true; n];
    for _ in 0..n - k {
        let mut best: Option<(f64, usize, usize)> = None;
        for i in (0..n).filter(|&i| active[i]) {
            for j in (i + 1..n).filter(|&j| active[j]) {
                if best.is_none_or(|(b, _, _)| d[i][j] < b) {
                    best = Some((d[i][j], i, j));
                }
            }
        }
        let (_, i, j) = best.expect("at least two active clusters");
        let (ni, nj) = (size[i] as f64, size[j] as f64);
        for m in (0..n).filter(|&m| active[m] && m != i && m != j) {
            let v = (ni * d[i][m] + nj * d[j][m]) / (ni + nj);
            d[i][m] = v;
            d[m][i] = v;
        }
        size[i] += size[j];
        active[j] = false;
        for o in owner.iter_mut().filter(|o| **o == j) {
            *o = i;
        }
    }
    let mut relabel: HashMap<usize, usize> = HashMap::new();
    Ok(owner
        .into_iter()
        .map(|o| {
            let next = relabel.len();
            *relabel.entry(o).or_insert(next)
        })
        .collect())
}

/// Fraction of points whose label matches the majority label of their
/// cluster.
pub fn purity<L: Eq + Hash>(clusters: &[usize], labels: &[L]) -> Result<f64, MetricsError> {
    if clusters.len() != labels.len() || clusters.is_empty() {
        return Err(MetricsError::InvalidArgument(
            "purity needs equal, nonzero numbers of clusters and labels".into(),
        ));
    }
    let mut counts: HashMap<usize, HashMap<&L, usize>> = HashMap::new();
    for (c, l) in clusters.iter().zip(labels) {
        *counts.entry(*c).or_default().entry(l).or_default() += 1;
    }
    let majority: usize = counts
        .values()
        .map(|m| m.values().copied().max().unwrap_or(0))
        .sum();
    Ok(majority as f64 / clusters.len() as f64)
}

/// Mean cosine distance over distinct pairs within one set.
pub fn mean_within_distance(points: &[&[f64]]) -> Result<f64, MetricsError> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            sum += cosine_distance(points[i], points[j])?;
            count += 1;
        }
    }
    if count == 0 {
        return Err(MetricsError::InvalidArgument(
            "need at least two points".into(),
        ));
    }
    Ok(sum / count as f64)
}

/// Mean cosine distance over all pairs drawn from two sets.
pub fn mean_cross_distance(a: &[&[f64]], b: &[&[f64]]) -> Result<f64, MetricsError> {
    if a.is_empty() || b.is_empty() {
        return Err(MetricsError::InvalidArgument("empty point set".into()));
    }
    let mut sum = 0.0;
    for x in a {
        for y in b {
            sum += cosine_distance(x, y)?;
        }
    }
    Ok(sum / (a.len() * b.len()) as f64)
}
