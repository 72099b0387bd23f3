//! Scored run-length masks, the interchange format for externally produced
//! segmentations.
//!
//! A `MaskSet` file looks like
//! `{ "width": n, "height": n, "masks": [{"score": f, "counts": [ints]}] }`.
//! Counts alternate 0-runs and 1-runs over the row-major pixel order and
//! always start with a 0-run, which may be empty.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{SegmentMap, BACKGROUND};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoredMask {
    pub score: f64,
    pub counts: Vec<i64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaskSet {
    pub width: usize,
    pub height: usize,
    pub masks: Vec<ScoredMask>,
}

fn check_counts(counts: &[i64], pixels: usize) -> Result<()> {
    let mut total: i64 = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c < 0 {
            return Err(Error::Format(format!("run {i} has negative length {c}")));
        }
        total = total
            .checked_add(c)
            .ok_or_else(|| Error::Format("run lengths overflow".into()))?;
    }
    if total != pixels as i64 {
        return Err(Error::Format(format!(
            "runs sum to {total}, expected {pixels}"
        )));
    }
    Ok(())
}

/// Expands run-length counts into a row-major binary mask.
pub fn decode_rle(counts: &[i64], width: usize, height: usize) -> Result<Vec<bool>> {
    let pixels = width * height;
    check_counts(counts, pixels)?;
    let mut mask = Vec::with_capacity(pixels);
    for (i, &c) in counts.iter().enumerate() {
        mask.extend(std::iter::repeat_n(i % 2 == 1, c as usize));
    }
    Ok(mask)
}

/// Inverse of [`decode_rle`]; the first count is the leading 0-run.
pub fn encode_rle(mask: &[bool]) -> Vec<i64> {
    let mut counts = Vec::new();
    let mut current = false;
    let mut run = 0i64;
    for &bit in mask {
        if bit != current {
            counts.push(run);
            run = 0;
            current = bit;
        }
        run += 1;
    }
    counts.push(run);
    counts
}

impl MaskSet {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::Format(format!(
                "mask set dimensions must be positive, got {}x{}",
                self.width, self.height
            )));
        }
        let pixels = self.width * self.height;
        for (i, m) in self.masks.iter().enumerate() {
            if !m.score.is_finite() || !(0.0..=1.0).contains(&m.score) {
                return Err(Error::Format(format!(
                    "mask {i}: score {} outside [0, 1]",
                    m.score
                )));
            }
            check_counts(&m.counts, pixels).map_err(|e| match e {
                Error::Format(msg) => Error::Format(format!("mask {i}: {msg}")),
                other => other,
            })?;
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let set: MaskSet =
            serde_json::from_str(text).map_err(|e| Error::Format(format!("mask set: {e}")))?;
        set.validate()?;
        Ok(set)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("mask set serializes")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json())?;
        Ok(())
    }

    /// One mask per segment id, ascending, all with the same score.
    pub fn from_segment_map(segs: &SegmentMap, score: f64) -> Self {
        let mut ids: Vec<u32> = segs
            .ids()
            .iter()
            .copied()
            .filter(|&i| i != BACKGROUND)
            .collect();
        ids.sort_unstable();
        ids.dedup();
        let masks = ids
            .into_iter()
            .map(|id| {
                let bits: Vec<bool> = segs.ids().iter().map(|&s| s == id).collect();
                ScoredMask {
                    score,
                    counts: encode_rle(&bits),
                }
            })
            .collect();
        MaskSet {
            width: segs.width(),
            height: segs.height(),
            masks,
        }
    }
}

/// Assigns every pixel to the highest-scoring mask covering it.
///
/// Equal scores go to the lower mask index. Uncovered pixels are
/// background. Output ids run densely from 1 in descending score order,
/// skipping masks that end up owning no pixel.
pub fn masks_to_segment_map(ms: &MaskSet) -> Result<SegmentMap> {
    ms.validate()?;
    let pixels = ms.width * ms.height;

    let mut order: Vec<usize> = (0..ms.masks.len()).collect();
    order.sort_by(|&a, &b| {
        ms.masks[b]
            .score
            .total_cmp(&ms.masks[a].score)
            .then(a.cmp(&b))
    });

    // owner holds 1 + rank of the winning mask
    let mut owner = vec![0u32; pixels];
    for (rank, &m) in order.iter().enumerate() {
        let mut pos = 0usize;
        for (i, &c) in ms.masks[m].counts.iter().enumerate() {
            let end = pos + c as usize;
            if i % 2 == 1 {
                for o in &mut owner[pos..end] {
                    if *o == 0 {
                        *o = rank as u32 + 1;
                    }
                }
            }
            pos = end;
        }
    }

    let mut used = vec![false; order.len() + 1];
    for &o in &owner {
        used[o as usize] = true;
    }
    let mut dense = vec![BACKGROUND; order.len() + 1];
    let mut next = 0u32;
    for rank in 1..=order.len() {
        if used[rank] {
            next += 1;
            dense[rank] = next;
        }
    }
    let ids = owner.into_iter().map(|o| dense[o as usize]).collect();
    SegmentMap::new(ms.width, ms.height, ids)
}
