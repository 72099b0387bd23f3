//! Density-based clustering with a uniform-grid neighbour index.
//!
//! Points are bucketed into cubic cells of side `eps` over (at most) the
//! three feature dimensions with the widest extent. Two points within
//! `eps` of each other are within `eps` in every projected dimension, so
//! their cells differ by at most one step per grid axis, and the 3^m
//! surrounding cells always contain the full neighbourhood. Results are
//! identical to the quadratic scan.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::features::{FeatureConfig, FeatureMatrix};
use crate::error::{Error, Result};

const MAX_GRID_DIMS: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DbscanConfig {
    pub eps: f64,
    pub min_pts: usize,
    #[serde(flatten)]
    pub features: FeatureConfig,
}

impl DbscanConfig {
    pub fn new(eps: f64, min_pts: usize) -> Self {
        Self {
            eps,
            min_pts,
            features: FeatureConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::Config(format!("eps must be > 0, got {}", self.eps)));
        }
        if self.min_pts == 0 {
            return Err(Error::Config("min_pts must be at least 1".into()));
        }
        if self.features.xy_weight.is_nan() || self.features.xy_weight < 0.0 {
            return Err(Error::Config("xy_weight must be >= 0".into()));
        }
        Ok(())
    }
}

type CellKey = [i64; MAX_GRID_DIMS];

struct GridIndex<'a> {
    x: &'a FeatureMatrix,
    eps_sq: f64,
    axes: Vec<usize>,
    keys: Vec<CellKey>,
    cells: HashMap<CellKey, Vec<u32>>,
    offsets: Vec<CellKey>,
}

impl<'a> GridIndex<'a> {
    fn build(x: &'a FeatureMatrix, eps: f64) -> Self {
        let dim = x.dim();
        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        for p in x.data().chunks_exact(dim) {
            for (j, &v) in p.iter().enumerate() {
                lo[j] = lo[j].min(v);
                hi[j] = hi[j].max(v);
            }
        }
        let mut axes: Vec<usize> = (0..dim).collect();
        // widest extent first; stable sort keeps lower dims on ties
        axes.sort_by(|&a, &b| (hi[b] - lo[b]).total_cmp(&(hi[a] - lo[a])));
        axes.truncate(MAX_GRID_DIMS);
        axes.sort_unstable();

        // a hair wider than eps so rounding in the division can never
        // separate two points at distance exactly eps by two cells
        let cell = eps * (1.0 + 1e-9);
        let keys: Vec<CellKey> = x
            .data()
            .par_chunks(dim)
            .map(|p| {
                let mut key = [0i64; MAX_GRID_DIMS];
                for (slot, &a) in axes.iter().enumerate() {
                    key[slot] = ((p[a] - lo[a]) / cell).floor() as i64;
                }
                key
            })
            .collect();
        let mut cells: HashMap<CellKey, Vec<u32>> = HashMap::new();
        for (i, k) in keys.iter().enumerate() {
            cells.entry(*k).or_default().push(i as u32);
        }

        let mut offsets = vec![[0i64; MAX_GRID_DIMS]];
        for slot in 0..axes.len() {
            offsets = offsets
                .into_iter()
                .flat_map(|o| {
                    [-1i64, 0, 1].into_iter().map(move |d| {
                        let mut o = o;
                        o[slot] = d;
                        o
                    })
                })
                .collect();
        }

        Self {
            x,
            eps_sq: eps * eps,
            axes,
            keys,
            cells,
            offsets,
        }
    }

    fn for_each_neighbour(&self, i: usize, mut f: impl FnMut(usize)) {
        let p = self.x.row(i);
        let base = self.keys[i];
        for off in &self.offsets {
            let mut key = base;
            for slot in 0..self.axes.len() {
                key[slot] += off[slot];
            }
            let Some(members) = self.cells.get(&key) else {
                continue;
            };
            for &j in members {
                let q = self.x.row(j as usize);
                let d: f64 = p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum();
                if d <= self.eps_sq {
                    f(j as usize);
                }
            }
        }
    }

    fn count_neighbours(&self, i: usize, cap: usize) -> usize {
        let mut n = 0;
        self.for_each_neighbour(i, |_| n += 1);
        n.min(cap)
    }
}

/// Returns a cluster id per point, `0` for noise.
///
/// A point is core when at least `min_pts` points (itself included) lie
/// within `eps`. Clusters are grown from unclaimed core points in index
/// order and numbered from 1; a border point reachable from several
/// clusters joins the one created first.
pub fn dbscan(x: &FeatureMatrix, cfg: &DbscanConfig) -> Result<Vec<u32>> {
    cfg.validate()?;
    let n = x.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let index = GridIndex::build(x, cfg.eps);
    let core: Vec<bool> = (0..n)
        .into_par_iter()
        .map(|i| index.count_neighbours(i, usize::MAX) >= cfg.min_pts)
        .collect();

    let mut labels = vec![0u32; n];
    let mut cluster = 0u32;
    let mut stack = Vec::new();
    for seed in 0..n {
        if !core[seed] || labels[seed] != 0 {
            continue;
        }
        cluster += 1;
        labels[seed] = cluster;
        stack.push(seed);
        while let Some(p) = stack.pop() {
            index.for_each_neighbour(p, |q| {
                if labels[q] == 0 {
                    labels[q] = cluster;
                    if core[q] {
                        stack.push(q);
                    }
                }
            });
        }
    }
    Ok(labels)
}
