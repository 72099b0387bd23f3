//! Reference implementations used as test oracles. Each one is written
//! the slow, obvious way and shares no code with the library paths it
//! checks.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap, VecDeque};

use parcel_denoise::relabel::{BackgroundAction, DenoisePolicy, RelabelMode};
use parcel_denoise::segments::MaskSet;
use parcel_denoise::NODATA_LABEL;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub mod props;

/// Quadratic DBSCAN in the textbook formulation (noise may later be
/// claimed as a border point).
pub fn naive_dbscan(data: &[f64], dim: usize, eps: f64, min_pts: usize) -> Vec<u32> {
    const UNDEF: i64 = -1;
    const NOISE: i64 = 0;
    let n = data.len() / dim;
    let range = |p: usize| -> Vec<usize> {
        (0..n)
            .filter(|&q| {
                let d: f64 = (0..dim)
                    .map(|j| (data[p * dim + j] - data[q * dim + j]).powi(2))
                    .sum::<f64>()
                    .sqrt();
                d <= eps
            })
            .collect()
    };
    let mut labels = vec![UNDEF; n];
    let mut c = 0i64;
    for p in 0..n {
        if labels[p] != UNDEF {
            continue;
        }
        let nb = range(p);
        if nb.len() < min_pts {
            labels[p] = NOISE;
            continue;
        }
        c += 1;
        labels[p] = c;
        let mut queue: VecDeque<usize> = nb.into_iter().filter(|&q| q != p).collect();
        while let Some(q) = queue.pop_front() {
            if labels[q] == NOISE {
                labels[q] = c;
            }
            if labels[q] != UNDEF {
                continue;
            }
            labels[q] = c;
            let nq = range(q);
            if nq.len() >= min_pts {
                queue.extend(nq);
            }
        }
    }
    labels.into_iter().map(|l| l.max(0) as u32).collect()
}

/// True when the two labelings agree up to a bijective renaming of
/// non-zero ids, with id 0 matched exactly.
pub fn same_partition(a: &[u32], b: &[u32]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut fwd = HashMap::new();
    let mut back = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        if (x == 0) != (y == 0) {
            return false;
        }
        if x == 0 {
            continue;
        }
        if *fwd.entry(x).or_insert(y) != y || *back.entry(y).or_insert(x) != x {
            return false;
        }
    }
    true
}

/// Plain Lloyd from given centers; panics on an empty cluster.
pub fn reference_lloyd(data: &[f64], dim: usize, init: &[f64]) -> (Vec<usize>, f64) {
    let n = data.len() / dim;
    let k = init.len() / dim;
    let mut centers = init.to_vec();
    let mut assign: Vec<usize> = vec![usize::MAX; n];
    loop {
        let next: Vec<usize> = (0..n)
            .map(|i| {
                let mut best = 0;
                let mut best_d = f64::INFINITY;
                for c in 0..k {
                    let d: f64 = (0..dim)
                        .map(|j| (data[i * dim + j] - centers[c * dim + j]).powi(2))
                        .sum();
                    if d < best_d {
                        best_d = d;
                        best = c;
                    }
                }
                best
            })
            .collect();
        if next == assign {
            break;
        }
        assign = next;
        for c in 0..k {
            let members: Vec<usize> = (0..n).filter(|&i| assign[i] == c).collect();
            assert!(!members.is_empty(), "reference Lloyd hit an empty cluster");
            for j in 0..dim {
                centers[c * dim + j] =
                    members.iter().map(|&i| data[i * dim + j]).sum::<f64>() / members.len() as f64;
            }
        }
    }
    let j: f64 = (0..n)
        .map(|i| {
            (0..dim)
                .map(|d| (data[i * dim + d] - centers[assign[i] * dim + d]).powi(2))
                .sum::<f64>()
        })
        .sum();
    (assign, j)
}

/// `n` points around `centers` with isotropic Gaussian-ish spread, plus the
/// index of the blob each point came from.
pub fn blobs(
    centers: &[[f64; 2]],
    per_blob: usize,
    spread: f64,
    seed: u64,
) -> (Vec<f64>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::new();
    let mut truth = Vec::new();
    for (b, c) in centers.iter().enumerate() {
        for _ in 0..per_blob {
            // sum of uniforms, close enough to normal for well separated blobs
            let mut off = [0.0; 2];
            for o in &mut off {
                *o = (0..6).map(|_| rng.random::<f64>() - 0.5).sum::<f64>() * spread;
            }
            data.extend([c[0] + off[0], c[1] + off[1]]);
            truth.push(b);
        }
    }
    (data, truth)
}

/// Mode by counting every candidate value, smallest id on ties.
pub fn counting_mode(votes: &[u16]) -> (u16, f64) {
    let mut best = (u16::MAX, 0usize);
    let mut candidates: Vec<u16> = votes.to_vec();
    candidates.sort_unstable();
    candidates.dedup();
    for c in candidates {
        let n = votes.iter().filter(|&&v| v == c).count();
        if n > best.1 {
            best = (c, n);
        }
    }
    (best.0, best.1 as f64 / votes.len() as f64)
}

/// Pixel-by-pixel argmax over every covering mask.
pub fn brute_force_argmax(ms: &MaskSet) -> Vec<Option<usize>> {
    let n = ms.width * ms.height;
    let expanded: Vec<Vec<bool>> = ms
        .masks
        .iter()
        .map(|m| {
            let mut bits = Vec::new();
            let mut on = false;
            for &c in &m.counts {
                for _ in 0..c {
                    bits.push(on);
                }
                on = !on;
            }
            bits
        })
        .collect();
    (0..n)
        .map(|p| {
            let mut best: Option<usize> = None;
            for (i, bits) in expanded.iter().enumerate() {
                if !bits[p] {
                    continue;
                }
                match best {
                    Some(b) if ms.masks[b].score >= ms.masks[i].score => {}
                    _ => best = Some(i),
                }
            }
            best
        })
        .collect()
}

/// Recursive-style flood fill with an explicit stack.
pub fn flood_fill(w: usize, h: usize, labels: &[u16], eight: bool) -> Vec<u32> {
    let mut out = vec![0u32; w * h];
    let mut next = 0;
    for start in 0..w * h {
        if out[start] != 0 || labels[start] == NODATA_LABEL {
            continue;
        }
        next += 1;
        out[start] = next;
        let mut stack = vec![start];
        while let Some(p) = stack.pop() {
            let (y, x) = ((p / w) as i64, (p % w) as i64);
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    if (dy == 0 && dx == 0) || (!eight && dy != 0 && dx != 0) {
                        continue;
                    }
                    let (ny, nx) = (y + dy, x + dx);
                    if ny < 0 || nx < 0 || ny >= h as i64 || nx >= w as i64 {
                        continue;
                    }
                    let q = ny as usize * w + nx as usize;
                    if out[q] == 0 && labels[q] == labels[p] {
                        out[q] = next;
                        stack.push(q);
                    }
                }
            }
        }
    }
    out
}

/// Histogram-per-segment denoiser for the background = leave policy.
pub fn reference_denoise(
    labels: &[u16],
    segs: &[u32],
    unsure: u16,
    policy: &DenoisePolicy,
) -> Vec<u16> {
    assert_eq!(policy.background_action, BackgroundAction::Leave);
    let mut members: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, &s) in segs.iter().enumerate() {
        if s != 0 {
            members.entry(s).or_default().push(i);
        }
    }
    let mut out = labels.to_vec();
    for pixels in members.values() {
        let all: Vec<u16> = pixels
            .iter()
            .map(|&i| labels[i])
            .filter(|&l| l != NODATA_LABEL)
            .collect();
        if !all.iter().any(|&l| l != unsure) {
            continue;
        }
        let votes: Vec<u16> = if policy.unsure_votes {
            all
        } else {
            all.into_iter().filter(|&l| l != unsure).collect()
        };
        let mut hist: BTreeMap<u16, usize> = BTreeMap::new();
        for v in &votes {
            *hist.entry(*v).or_default() += 1;
        }
        let max = *hist.values().max().unwrap();
        let winner = *hist.iter().find(|(_, &n)| n == max).unwrap().0;
        if (max as f64 / votes.len() as f64) < policy.min_margin {
            continue;
        }
        for &i in pixels {
            let l = labels[i];
            if l == NODATA_LABEL {
                continue;
            }
            if policy.mode == RelabelMode::RelabelAll || l == unsure {
                out[i] = winner;
            }
        }
    }
    out
}

/// Counts, for every pixel, all same-label valid neighbours in the window.
pub fn naive_strays(w: usize, h: usize, labels: &[u16], window: usize) -> u64 {
    let r = (window / 2) as i64;
    let mut strays = 0;
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            let v = labels[(y * w as i64 + x) as usize];
            if v == NODATA_LABEL {
                continue;
            }
            let mut valid = 0;
            let mut same = 0;
            for ny in y - r..=y + r {
                for nx in x - r..=x + r {
                    if (ny, nx) == (y, x) || ny < 0 || nx < 0 || ny >= h as i64 || nx >= w as i64 {
                        continue;
                    }
                    let n = labels[(ny * w as i64 + nx) as usize];
                    if n == NODATA_LABEL {
                        continue;
                    }
                    valid += 1;
                    if n == v {
                        same += 1;
                    }
                }
            }
            if valid > 0 && same == 0 {
                strays += 1;
            }
        }
    }
    strays
}

/// Per-pixel confusion tally into a map keyed by (reference, predicted).
pub fn naive_tally(reference: &[u16], predicted: &[u16]) -> BTreeMap<(u16, u16), u64> {
    let mut m = BTreeMap::new();
    for (&r, &p) in reference.iter().zip(predicted) {
        if r == NODATA_LABEL || p == NODATA_LABEL {
            continue;
        }
        *m.entry((r, p)).or_default() += 1;
    }
    m
}
