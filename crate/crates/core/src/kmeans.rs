//! Deterministic cosine K-means.
//!
//! Seeds are the `k` most central documents (highest mean cosine similarity
//! to the rest of the corpus). Documents are assigned to their most similar
//! centroid, centroids are recomputed as member means, and the loop stops when
//! the assignment no longer changes or after `max_iter` rounds.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::WeightMatrix;
use crate::error::{check_len, Error, Result};

pub const DEFAULT_MAX_ITER: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub k: usize,
    pub centroids: Vec<Vec<f64>>,
    pub assignment: Vec<usize>,
    pub iterations_run: usize,
}

/// Cosine of the angle between `u` and `v`; 0 when either is the zero vector.
pub fn cosine_similarity(u: &[f64], v: &[f64]) -> Result<f64> {
    check_len(u.len(), v.len())?;
    Ok(cosine(u, v))
}

fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

fn norm(u: &[f64]) -> f64 {
    dot(u, u).sqrt()
}

fn cosine_with_norms(u: &[f64], nu: f64, v: &[f64], nv: f64) -> f64 {
    if nu == 0.0 || nv == 0.0 {
        0.0
    } else {
        dot(u, v) / (nu * nv)
    }
}

fn cosine(u: &[f64], v: &[f64]) -> f64 {
    cosine_with_norms(u, norm(u), v, norm(v))
}

/// Mean cosine similarity of each document to all others.
pub fn mean_similarities(matrix: &WeightMatrix) -> Vec<f64> {
    let n = matrix.n();
    let norms: Vec<f64> = matrix.rows().map(norm).collect();
    (0..n)
        .into_par_iter()
        .map(|i| {
            if n < 2 {
                return 0.0;
            }
            let total: f64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| cosine_with_norms(matrix.row(i), norms[i], matrix.row(j), norms[j]))
                .sum();
            total / (n - 1) as f64
        })
        .collect()
}

/// Indices of the `k` documents with the highest mean similarity, skipping
/// rows identical to one already chosen and all-zero rows. Ties go to the
/// lower index.
pub fn seed_centroids(matrix: &WeightMatrix, k: usize) -> Result<Vec<usize>> {
    if k == 0 || k > matrix.n() {
        return Err(Error::invalid(format!("k = {k} outside 1..={}", matrix.n())));
    }
    let mean = mean_similarities(matrix);
    let mut order: Vec<usize> = (0..matrix.n()).collect();
    order.sort_by(|&a, &b| mean[b].total_cmp(&mean[a]).then(a.cmp(&b)));
    let mut chosen: Vec<usize> = Vec::with_capacity(k);
    for i in order {
        if chosen.len() == k {
            break;
        }
        if matrix.is_zero_row(i) || chosen.iter().any(|&c| matrix.row(c) == matrix.row(i)) {
            continue;
        }
        chosen.push(i);
    }
    if chosen.len() < k {
        return Err(Error::invalid(format!(
            "k = {k} exceeds the {} distinct non-empty documents",
            chosen.len()
        )));
    }
    Ok(chosen)
}

/// Most similar centroid per document, ties to the lower centroid index.
/// Documents with no similarity to any centroid land in cluster 0.
pub fn assign(matrix: &WeightMatrix, centroids: &[Vec<f64>]) -> Vec<usize> {
    let norms: Vec<f64> = centroids.iter().map(|c| norm(c)).collect();
    (0..matrix.n())
        .into_par_iter()
        .map(|i| {
            let row = matrix.row(i);
            let nr = norm(row);
            let mut best = 0;
            let mut best_sim = f64::NEG_INFINITY;
            for (c, centroid) in centroids.iter().enumerate() {
                let s = cosine_with_norms(row, nr, centroid, norms[c]);
                if s > best_sim {
                    best_sim = s;
                    best = c;
                }
            }
            best
        })
        .collect()
}

/// Member means. All-zero rows carry no direction and are left out of the
/// means. A cluster without members is reseeded with the document least
/// similar to every centroid computed so far.
pub fn update_centroids(matrix: &WeightMatrix, assignment: &[usize], k: usize) -> Vec<Vec<f64>> {
    let t = matrix.t();
    let mut sums = vec![vec![0.0; t]; k];
    let mut counts = vec![0usize; k];
    for (i, &c) in assignment.iter().enumerate() {
        if matrix.is_zero_row(i) {
            continue;
        }
        counts[c] += 1;
        for (s, w) in sums[c].iter_mut().zip(matrix.row(i)) {
            *s += w;
        }
    }
    let mut centroids: Vec<Option<Vec<f64>>> = sums
        .into_iter()
        .zip(&counts)
        .map(|(s, &n)| (n > 0).then(|| s.into_iter().map(|x| x / n as f64).collect()))
        .collect();

    for c in 0..k {
        if centroids[c].is_some() {
            continue;
        }
        let current: Vec<&Vec<f64>> = centroids.iter().flatten().collect();
        let farthest = (0..matrix.n())
            .filter(|&i| !matrix.is_zero_row(i))
            .map(|i| {
                let closest = current
                    .iter()
                    .map(|cen| cosine(matrix.row(i), cen))
                    .fold(f64::NEG_INFINITY, f64::max);
                (i, closest)
            })
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
            .map(|(i, _)| i)
            .unwrap_or(0);
        centroids[c] = Some(matrix.row(farthest).to_vec());
    }
    centroids.into_iter().map(|c| c.expect("filled above")).collect()
}

pub fn run_kmeans(matrix: &WeightMatrix, k: usize, max_iter: usize) -> Result<ClusterModel> {
    if k < 2 || k > matrix.n() {
        return Err(Error::invalid(format!("k = {k} outside 2..={}", matrix.n())));
    }
    let mut centroids: Vec<Vec<f64>> = seed_centroids(matrix, k)?
        .into_iter()
        .map(|i| matrix.row(i).to_vec())
        .collect();
    let mut assignment = assign(matrix, &centroids);
    let mut iterations_run = 0;
    while iterations_run < max_iter {
        let updated = update_centroids(matrix, &assignment, k);
        let next = assign(matrix, &updated);
        iterations_run += 1;
        centroids = updated;
        if next == assignment {
            break;
        }
        assignment = next;
    }
    place_empty_documents(matrix, &mut assignment, k);
    Ok(ClusterModel {
        k,
        centroids,
        assignment,
        iterations_run,
    })
}

/// All-zero documents join the largest cluster.
fn place_empty_documents(matrix: &WeightMatrix, assignment: &mut [usize], k: usize) {
    let empty: Vec<usize> = (0..matrix.n()).filter(|&i| matrix.is_zero_row(i)).collect();
    if empty.is_empty() {
        return;
    }
    let mut sizes = vec![0usize; k];
    for (i, &c) in assignment.iter().enumerate() {
        if !matrix.is_zero_row(i) {
            sizes[c] += 1;
        }
    }
    let largest = (0..k).max_by(|&a, &b| sizes[a].cmp(&sizes[b]).then(b.cmp(&a))).unwrap_or(0);
    for i in empty {
        assignment[i] = largest;
    }
}
