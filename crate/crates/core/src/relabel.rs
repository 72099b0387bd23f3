//! Per-segment majority voting over noisy labels.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{ensure_same_dims, LabelRaster, SegmentMap, BACKGROUND, NODATA_LABEL};
use crate::segments::{label_components, Connectivity};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelabelMode {
    /// Every voting pixel in a segment takes the winning class.
    #[default]
    RelabelAll,
    /// Only pixels carrying the unsure class are rewritten.
    RelabelUnsureOnly,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackgroundAction {
    #[default]
    Leave,
    /// Split the unsegmented area into connected regions and vote in each.
    PerComponentVote,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DenoisePolicy {
    pub mode: RelabelMode,
    /// Winning share a segment needs before it is rewritten.
    pub min_margin: f64,
    /// Whether unsure pixels vote when certain votes exist.
    pub unsure_votes: bool,
    pub background_action: BackgroundAction,
    pub background_connectivity: Connectivity,
}

impl Default for DenoisePolicy {
    fn default() -> Self {
        Self {
            mode: RelabelMode::RelabelAll,
            min_margin: 0.0,
            unsure_votes: false,
            background_action: BackgroundAction::Leave,
            background_connectivity: Connectivity::Four,
        }
    }
}

impl DenoisePolicy {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.min_margin) {
            return Err(Error::Config(format!(
                "min_margin must lie in [0, 1], got {}",
                self.min_margin
            )));
        }
        Ok(())
    }
}

/// Outcome of the vote in one segment (or one background component).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentVote {
    pub segment_id: u32,
    /// Pixels in the segment, NODATA included.
    pub size: u64,
    /// Ballots actually counted.
    pub votes: u64,
    pub winner: Option<u16>,
    pub margin: Option<f64>,
    pub applied: bool,
    pub relabeled: u64,
}

/// From-class to-class counts of rewritten pixels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassFlux {
    pub classes: Vec<u16>,
    /// `counts[i][j]`: pixels moved from `classes[i]` to `classes[j]`.
    pub counts: Vec<Vec<u64>>,
}

impl ClassFlux {
    fn new(classes: Vec<u16>) -> Self {
        let n = classes.len();
        Self {
            classes,
            counts: vec![vec![0; n]; n],
        }
    }

    fn index(&self, class: u16) -> usize {
        self.classes
            .binary_search(&class)
            .expect("labels were validated against the class map")
    }

    fn add(&mut self, from: u16, to: u16, n: u64) {
        let (i, j) = (self.index(from), self.index(to));
        self.counts[i][j] += n;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenoiseReport {
    pub pixels_total: u64,
    pub pixels_relabeled: u64,
    pub unsure_before: u64,
    pub unsure_after: u64,
    pub segments: Vec<SegmentVote>,
    pub background_components: Vec<SegmentVote>,
    pub flux: ClassFlux,
}

impl DenoiseReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Most frequent class and its share of the votes; ties go to the smallest
/// class id.
pub fn segment_mode(votes: &[u16]) -> Result<(u16, f64)> {
    if votes.is_empty() {
        return Err(Error::Precondition(
            "cannot take the mode of no votes".into(),
        ));
    }
    let mut counts: BTreeMap<u16, u64> = BTreeMap::new();
    for &v in votes {
        *counts.entry(v).or_default() += 1;
    }
    let tally: Vec<(u16, u64)> = counts.into_iter().collect();
    let (winner, n) = mode_of_tally(&tally);
    Ok((winner, n as f64 / votes.len() as f64))
}

/// `tally` must be sorted by class id and non-empty.
fn mode_of_tally(tally: &[(u16, u64)]) -> (u16, u64) {
    let mut best = tally[0];
    for &(class, n) in &tally[1..] {
        if n > best.1 {
            best = (class, n);
        }
    }
    best
}

#[derive(Default)]
struct Tally {
    size: u64,
    hist: Vec<(u16, u64)>,
}

impl Tally {
    fn add(&mut self, label: u16) {
        self.size += 1;
        if label == NODATA_LABEL {
            return;
        }
        match self.hist.iter_mut().find(|(c, _)| *c == label) {
            Some((_, n)) => *n += 1,
            None => self.hist.push((label, 1)),
        }
    }
}

/// Votes within each region of `regions` (0 = skip) and rewrites `out`.
fn vote_regions(
    regions: &[u32],
    input: &[u16],
    out: &mut [u16],
    unsure: u16,
    policy: &DenoisePolicy,
    flux: &mut ClassFlux,
) -> Vec<SegmentVote> {
    let mut slot: HashMap<u32, usize> = HashMap::new();
    let mut tallies: Vec<Tally> = Vec::new();
    let mut ids: Vec<u32> = Vec::new();
    for (&r, &l) in regions.iter().zip(input) {
        if r == BACKGROUND {
            continue;
        }
        let s = *slot.entry(r).or_insert_with(|| {
            ids.push(r);
            tallies.push(Tally::default());
            tallies.len() - 1
        });
        tallies[s].add(l);
    }

    let mut results: Vec<SegmentVote> = ids
        .iter()
        .zip(&mut tallies)
        .map(|(&id, t)| {
            t.hist.sort_unstable();
            let has_certain = t.hist.iter().any(|&(c, _)| c != unsure);
            let ballots: Vec<(u16, u64)> = if policy.unsure_votes {
                t.hist.clone()
            } else {
                t.hist
                    .iter()
                    .copied()
                    .filter(|&(c, _)| c != unsure)
                    .collect()
            };
            let total: u64 = ballots.iter().map(|&(_, n)| n).sum();
            let (winner, margin) = if has_certain && total > 0 {
                let (w, n) = mode_of_tally(&ballots);
                (Some(w), Some(n as f64 / total as f64))
            } else {
                (None, None)
            };
            SegmentVote {
                segment_id: id,
                size: t.size,
                votes: total,
                winner,
                margin,
                applied: margin.is_some_and(|m| m >= policy.min_margin),
                relabeled: 0,
            }
        })
        .collect();

    let target: Vec<Option<u16>> = results
        .iter()
        .map(|v| if v.applied { v.winner } else { None })
        .collect();
    for (i, (&r, &l)) in regions.iter().zip(input).enumerate() {
        if r == BACKGROUND || l == NODATA_LABEL {
            continue;
        }
        let s = slot[&r];
        let Some(winner) = target[s] else { continue };
        let eligible = match policy.mode {
            RelabelMode::RelabelAll => true,
            RelabelMode::RelabelUnsureOnly => l == unsure,
        };
        if eligible && l != winner {
            out[i] = winner;
            results[s].relabeled += 1;
            flux.add(l, winner, 1);
        }
    }
    results.sort_by_key(|v| v.segment_id);
    results
}

/// Rewrites each segment's pixels to the segment's majority class under
/// `policy`. NODATA pixels never vote and never change.
pub fn denoise(
    labels: &LabelRaster,
    segs: &SegmentMap,
    policy: &DenoisePolicy,
) -> Result<(LabelRaster, DenoiseReport)> {
    policy.validate()?;
    ensure_same_dims(
        "labels vs segments",
        (labels.width(), labels.height()),
        (segs.width(), segs.height()),
    )?;
    let unsure = labels.unsure_id();
    let input = labels.labels();
    let mut out = input.to_vec();
    let mut flux = ClassFlux::new(labels.class_map().ids().collect());

    let segments = vote_regions(segs.ids(), input, &mut out, unsure, policy, &mut flux);

    let background_components = match policy.background_action {
        BackgroundAction::Leave => Vec::new(),
        BackgroundAction::PerComponentVote => {
            let mask: Vec<bool> = segs
                .ids()
                .iter()
                .zip(input)
                .map(|(&s, &l)| s == BACKGROUND && l != NODATA_LABEL)
                .collect();
            let comps = label_components(
                labels.width(),
                labels.height(),
                &mask,
                |inside| !inside,
                policy.background_connectivity,
            );
            vote_regions(&comps, input, &mut out, unsure, policy, &mut flux)
        }
    };

    let pixels_relabeled = flux.total();
    let unsure_before = labels.count(unsure) as u64;
    let unsure_after = out.iter().filter(|&&l| l == unsure).count() as u64;
    let denoised = labels.with_labels(out)?;
    let report = DenoiseReport {
        pixels_total: labels.pixel_count() as u64,
        pixels_relabeled,
        unsure_before,
        unsure_after,
        segments,
        background_components,
        flux,
    };
    Ok((denoised, report))
}

/// Stray-pixel counts before and after denoising.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrayStats {
    pub window: usize,
    pub before: u64,
    pub after: u64,
}

/// Pixels whose label differs from every valid neighbour in a centered
/// `window x window` box. NODATA pixels are never stray and are not
/// neighbours; a pixel with no valid neighbour is not stray.
pub fn count_strays(labels: &LabelRaster, window: usize) -> Result<u64> {
    check_window(window)?;
    let (w, h) = (labels.width(), labels.height());
    let r = window / 2;
    let l = labels.labels();
    let mut strays = 0;
    for y in 0..h {
        let (y0, y1) = (y.saturating_sub(r), (y + r).min(h - 1));
        for x in 0..w {
            let v = l[y * w + x];
            if v == NODATA_LABEL {
                continue;
            }
            let (x0, x1) = (x.saturating_sub(r), (x + r).min(w - 1));
            let mut any_valid = false;
            let mut matched = false;
            'scan: for ny in y0..=y1 {
                for nx in x0..=x1 {
                    if ny == y && nx == x {
                        continue;
                    }
                    let n = l[ny * w + nx];
                    if n == NODATA_LABEL {
                        continue;
                    }
                    any_valid = true;
                    if n == v {
                        matched = true;
                        break 'scan;
                    }
                }
            }
            if any_valid && !matched {
                strays += 1;
            }
        }
    }
    Ok(strays)
}

fn check_window(window: usize) -> Result<()> {
    if window < 3 || window.is_multiple_of(2) {
        return Err(Error::Config(format!(
            "window must be odd and >= 3, got {window}"
        )));
    }
    Ok(())
}

pub fn stray_pixel_stats(
    before: &LabelRaster,
    after: &LabelRaster,
    window: usize,
) -> Result<StrayStats> {
    check_window(window)?;
    ensure_same_dims(
        "before vs after",
        (before.width(), before.height()),
        (after.width(), after.height()),
    )?;
    Ok(StrayStats {
        window,
        before: count_strays(before, window)?,
        after: count_strays(after, window)?,
    })
}
