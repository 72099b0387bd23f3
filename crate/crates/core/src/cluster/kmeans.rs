//! Lloyd's algorithm with k-means++ seeding.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::features::{FeatureConfig, FeatureMatrix};
use crate::error::{Error, Result};

/// Points per partial sum; fixed so reductions do not depend on the thread
/// count.
const CHUNK: usize = 4096;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub k: usize,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub seed: u64,
    /// Independent seedings; the lowest objective wins.
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(flatten)]
    pub features: FeatureConfig,
}

fn default_max_iters() -> usize {
    100
}

fn default_tol() -> f64 {
    1e-6
}

fn default_restarts() -> usize {
    1
}

impl KMeansConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            max_iters: default_max_iters(),
            tol: default_tol(),
            seed,
            restarts: default_restarts(),
            features: FeatureConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        if self.tol.is_nan() || self.tol < 0.0 {
            return Err(Error::Config(format!("tol must be >= 0, got {}", self.tol)));
        }
        if self.restarts == 0 {
            return Err(Error::Config("restarts must be at least 1".into()));
        }
        if self.features.xy_weight.is_nan() || self.features.xy_weight < 0.0 {
            return Err(Error::Config("xy_weight must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KMeansResult {
    /// Cluster index in `0..k` per point.
    pub assignments: Vec<u32>,
    /// `k` rows of `dim` values; the means of the final assignment.
    pub centroids: Vec<f64>,
    /// Sum of squared distances of every point to its cluster mean.
    pub objective: f64,
    /// Objective after every assignment and every update step, in order.
    pub history: Vec<f64>,
    pub iterations: usize,
    /// True when the assignment reached a fixed point.
    pub converged: bool,
}

impl KMeansResult {
    /// Cluster ids shifted to start at 1, as expected by
    /// [`assignments_to_segment_map`](super::assignments_to_segment_map).
    pub fn cluster_labels(&self) -> Vec<u32> {
        self.assignments.iter().map(|&a| a + 1).collect()
    }

    pub fn centroid(&self, k: usize, dim: usize) -> &[f64] {
        &self.centroids[k * dim..(k + 1) * dim]
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the closest centroid; ties go to the lower index.
fn nearest(point: &[f64], centroids: &[f64], dim: usize) -> (u32, f64) {
    let mut best = (0u32, f64::INFINITY);
    for (k, c) in centroids.chunks_exact(dim).enumerate() {
        let d = sq_dist(point, c);
        if d < best.1 {
            best = (k as u32, d);
        }
    }
    best
}

fn assign_all(x: &FeatureMatrix, centroids: &[f64]) -> Vec<u32> {
    let dim = x.dim();
    x.data()
        .par_chunks(dim)
        .map(|p| nearest(p, centroids, dim).0)
        .collect()
}

fn objective(x: &FeatureMatrix, assignments: &[u32], centroids: &[f64]) -> f64 {
    let dim = x.dim();
    let partial: Vec<f64> = x
        .data()
        .par_chunks(dim * CHUNK)
        .zip(assignments.par_chunks(CHUNK))
        .map(|(pts, asg)| {
            pts.chunks_exact(dim)
                .zip(asg)
                .map(|(p, &a)| {
                    let a = a as usize;
                    sq_dist(p, &centroids[a * dim..(a + 1) * dim])
                })
                .sum::<f64>()
        })
        .collect();
    partial.iter().sum()
}

fn means(x: &FeatureMatrix, assignments: &[u32], k: usize) -> Vec<f64> {
    let dim = x.dim();
    let mut sums = vec![0.0; k * dim];
    let mut counts = vec![0usize; k];
    for (p, &a) in x.data().chunks_exact(dim).zip(assignments) {
        let a = a as usize;
        counts[a] += 1;
        for (s, v) in sums[a * dim..(a + 1) * dim].iter_mut().zip(p) {
            *s += v;
        }
    }
    for (c, &n) in sums.chunks_exact_mut(dim).zip(&counts) {
        debug_assert!(n > 0, "empty clusters are repaired before the update");
        for v in c {
            *v /= n as f64;
        }
    }
    sums
}

/// Moves the point farthest from its centroid into each empty cluster.
fn repair_empty(x: &FeatureMatrix, assignments: &mut [u32], centroids: &[f64], k: usize) {
    let dim = x.dim();
    let mut counts = vec![0usize; k];
    for &a in assignments.iter() {
        counts[a as usize] += 1;
    }
    for empty in 0..k {
        if counts[empty] > 0 {
            continue;
        }
        let mut far = None;
        let mut far_d = -1.0;
        for (i, p) in x.data().chunks_exact(dim).enumerate() {
            let a = assignments[i] as usize;
            if counts[a] < 2 {
                continue;
            }
            let d = sq_dist(p, &centroids[a * dim..(a + 1) * dim]);
            if d > far_d {
                far_d = d;
                far = Some(i);
            }
        }
        let i = far.expect("n >= k leaves a cluster with two points");
        counts[assignments[i] as usize] -= 1;
        assignments[i] = empty as u32;
        counts[empty] = 1;
    }
}

/// k-means++: first center uniform, the rest drawn proportional to the
/// squared distance to the nearest chosen center.
fn seed_centroids(x: &FeatureMatrix, k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = x.len();
    let dim = x.dim();
    let mut centroids = Vec::with_capacity(k * dim);
    let first = rng.random_range(0..n);
    centroids.extend_from_slice(x.row(first));
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(x.row(i), x.row(first))).collect();
    for _ in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &d) in d2.iter().enumerate() {
                acc += d;
                if d > 0.0 && acc > target {
                    pick = Some(i);
                    break;
                }
            }
            // rounding can leave target just past the final partial sum
            pick.unwrap_or_else(|| d2.iter().rposition(|&d| d > 0.0).unwrap())
        } else {
            rng.random_range(0..n)
        };
        let c = x.row(pick).to_vec();
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(x.row(i), &c));
        }
        centroids.extend_from_slice(&c);
    }
    centroids
}

fn lloyd(x: &FeatureMatrix, cfg: &KMeansConfig, mut centroids: Vec<f64>) -> KMeansResult {
    let k = cfg.k;
    let dim = x.dim();
    let mut assignments = assign_all(x, &centroids);
    let mut history = vec![objective(x, &assignments, &centroids)];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < cfg.max_iters {
        iterations += 1;
        repair_empty(x, &mut assignments, &centroids, k);
        let updated = means(x, &assignments, k);
        history.push(objective(x, &assignments, &updated));
        let movement = updated
            .chunks_exact(dim)
            .zip(centroids.chunks_exact(dim))
            .map(|(a, b)| sq_dist(a, b).sqrt())
            .fold(0.0, f64::max);
        centroids = updated;

        let next = assign_all(x, &centroids);
        if next == assignments {
            converged = true;
            break;
        }
        if movement < cfg.tol {
            break;
        }
        assignments = next;
        history.push(objective(x, &assignments, &centroids));
        if iterations == cfg.max_iters {
            // leave centroids equal to the means of the returned assignment
            repair_empty(x, &mut assignments, &centroids, k);
            centroids = means(x, &assignments, k);
            history.push(objective(x, &assignments, &centroids));
        }
    }

    let objective = *history.last().unwrap();
    KMeansResult {
        assignments,
        centroids,
        objective,
        history,
        iterations,
        converged,
    }
}

/// Clusters `x` into `cfg.k` groups minimising the within-cluster sum of
/// squared Euclidean distances. Deterministic for a given seed, independent
/// of the rayon thread count.
pub fn kmeans(x: &FeatureMatrix, cfg: &KMeansConfig) -> Result<KMeansResult> {
    cfg.validate()?;
    if x.len() < cfg.k {
        return Err(Error::InsufficientPoints {
            needed: cfg.k,
            got: x.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut best: Option<KMeansResult> = None;
    for _ in 0..cfg.restarts {
        let init = seed_centroids(x, cfg.k, &mut rng);
        let run = lloyd(x, cfg, init);
        if best.as_ref().is_none_or(|b| run.objective < b.objective) {
            best = Some(run);
        }
    }
    Ok(best.unwrap())
}

/// The k-means++ centers [`kmeans`] starts its first run from.
pub fn kmeans_plus_plus(x: &FeatureMatrix, k: usize, seed: u64) -> Result<Vec<f64>> {
    if k == 0 || x.len() < k {
        return Err(Error::InsufficientPoints {
            needed: k.max(1),
            got: x.len(),
        });
    }
    Ok(seed_centroids(x, k, &mut ChaCha8Rng::seed_from_u64(seed)))
}

/// Lloyd iterations from explicit starting centers (`k` rows of `dim`).
pub fn lloyd_from(x: &FeatureMatrix, init: Vec<f64>, cfg: &KMeansConfig) -> Result<KMeansResult> {
    cfg.validate()?;
    if init.len() != cfg.k * x.dim() {
        return Err(Error::Shape(format!(
            "{} initial values for {} centroids of dimension {}",
            init.len(),
            cfg.k,
            x.dim()
        )));
    }
    if x.len() < cfg.k {
        return Err(Error::InsufficientPoints {
            needed: cfg.k,
            got: x.len(),
        });
    }
    Ok(lloyd(x, cfg, init))
}
