//! Synthetic parcel scenes with known ground truth.
//!
//! Parcels are Voronoi cells of random pixel sites. Every parcel gets one
//! class, imagery is drawn per pixel from that class's spectral signature,
//! and the noisy labels add border jitter, random class flips and unsure
//! pixels on top of the clean ones.
//!
//! All randomness comes from one ChaCha8 stream seeded by `seed`, consumed
//! in this order:
//!
//! 1. parcel sites, rejection-sampled until `n_parcels` distinct pixels;
//! 2. class per parcel (one of each class, the rest uniform, then shuffled);
//! 3. imagery, pixel-major then band-minor;
//! 4. jitter radius per parcel in `0..=boundary_jitter` (skipped when 0);
//! 5. per pixel: one uniform draw for unsure/flip, plus one for the flip
//!    target when flipped.

use std::collections::HashSet;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{ClassMap, ImageRaster, LabelRaster, SegmentMap};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassSignature {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    #[serde(default)]
    pub flip_rate: f64,
    #[serde(default)]
    pub unsure_rate: f64,
    #[serde(default)]
    pub boundary_jitter: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub n_parcels: usize,
    pub n_classes: usize,
    pub bands: usize,
    /// One entry per class; empty selects [`default_signatures`].
    #[serde(default)]
    pub class_signatures: Vec<ClassSignature>,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub seed: u64,
}

/// Built-in signatures: band 0 means step by 0.1 per class, later bands
/// permute the same levels, every std is 0.04.
pub fn default_signatures(n_classes: usize, bands: usize) -> Vec<ClassSignature> {
    (0..n_classes)
        .map(|c| ClassSignature {
            mean: (0..bands)
                .map(|b| 0.1 + 0.1 * ((c * (b + 1) + b) % n_classes) as f64)
                .collect(),
            std: vec![0.04; bands],
        })
        .collect()
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.width == 0 || self.height == 0 {
            return fail(format!(
                "scene must be non-empty, got {}x{}",
                self.width, self.height
            ));
        }
        if self.bands == 0 {
            return fail("bands must be at least 1".into());
        }
        if self.n_classes < 2 {
            return fail(format!("n_classes must be >= 2, got {}", self.n_classes));
        }
        if self.n_parcels < self.n_classes {
            return fail(format!(
                "n_parcels ({}) must be >= n_classes ({})",
                self.n_parcels, self.n_classes
            ));
        }
        if self.n_parcels > self.width * self.height {
            return fail("more parcels than pixels".into());
        }
        let NoiseSpec {
            flip_rate,
            unsure_rate,
            ..
        } = self.noise;
        for (name, r) in [("flip_rate", flip_rate), ("unsure_rate", unsure_rate)] {
            if !(0.0..=1.0).contains(&r) {
                return fail(format!("{name} must lie in [0, 1], got {r}"));
            }
        }
        if flip_rate + unsure_rate > 1.0 {
            return fail(format!(
                "flip_rate + unsure_rate must be <= 1, got {}",
                flip_rate + unsure_rate
            ));
        }
        if !self.class_signatures.is_empty() {
            if self.class_signatures.len() != self.n_classes {
                return fail(format!(
                    "{} class signatures for {} classes",
                    self.class_signatures.len(),
                    self.n_classes
                ));
            }
            for (c, s) in self.class_signatures.iter().enumerate() {
                if s.mean.len() != self.bands || s.std.len() != self.bands {
                    return fail(format!("signature {c} must have {} bands", self.bands));
                }
                if s.mean.iter().any(|m| !m.is_finite())
                    || s.std.iter().any(|v| !(v.is_finite() && *v >= 0.0))
                {
                    return fail(format!("signature {c} has invalid mean or std"));
                }
            }
        }
        ClassMap::land_cover(self.n_classes).map(|_| ())
    }

    pub fn signatures(&self) -> Vec<ClassSignature> {
        if self.class_signatures.is_empty() {
            default_signatures(self.n_classes, self.bands)
        } else {
            self.class_signatures.clone()
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: SceneSpec =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("scene spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene spec serializes")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scene {
    pub image: ImageRaster,
    pub clean: LabelRaster,
    pub noisy: LabelRaster,
    /// True parcels, ids `1..=n_parcels`.
    pub segments: SegmentMap,
    pub class_map: Arc<ClassMap>,
}

pub fn generate(spec: &SceneSpec) -> Result<Scene> {
    spec.validate()?;
    let (w, h) = (spec.width, spec.height);
    let n_pix = w * h;
    let class_map = Arc::new(ClassMap::land_cover(spec.n_classes)?);
    let unsure = class_map.unsure_id();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut seen = HashSet::new();
    let mut sites = Vec::with_capacity(spec.n_parcels);
    while sites.len() < spec.n_parcels {
        let site = (rng.random_range(0..h), rng.random_range(0..w));
        if seen.insert(site) {
            sites.push(site);
        }
    }

    let mut parcel_class: Vec<u16> = (0..spec.n_classes).map(|c| c as u16).collect();
    parcel_class.extend(
        (spec.n_classes..spec.n_parcels).map(|_| rng.random_range(0..spec.n_classes) as u16),
    );
    parcel_class.shuffle(&mut rng);
    // class ids start at 1
    for c in &mut parcel_class {
        *c += 1;
    }

    let mut parcel = vec![0u32; n_pix];
    for r in 0..h {
        for c in 0..w {
            let mut best = (usize::MAX, 0usize);
            for (i, &(sr, sc)) in sites.iter().enumerate() {
                let dr = r.abs_diff(sr);
                let dc = c.abs_diff(sc);
                let d = dr * dr + dc * dc;
                if d < best.0 {
                    best = (d, i);
                }
            }
            parcel[r * w + c] = best.1 as u32;
        }
    }
    let clean: Vec<u16> = parcel.iter().map(|&p| parcel_class[p as usize]).collect();

    let signatures = spec.signatures();
    let dists: Vec<Vec<Option<Normal<f64>>>> = signatures
        .iter()
        .map(|s| {
            s.mean
                .iter()
                .zip(&s.std)
                .map(|(&m, &sd)| (sd > 0.0).then(|| Normal::new(m, sd).expect("validated std")))
                .collect()
        })
        .collect();
    let mut values = vec![0f32; n_pix * spec.bands];
    for (px, &label) in clean.iter().enumerate() {
        let k = (label - 1) as usize;
        for b in 0..spec.bands {
            let v = match &dists[k][b] {
                Some(d) => d.sample(&mut rng),
                None => signatures[k].mean[b],
            };
            values[b * n_pix + px] = v as f32;
        }
    }
    let image = ImageRaster::new(w, h, spec.bands, values)?;

    let mut noisy = clean.clone();
    let jitter = spec.noise.boundary_jitter;
    if jitter > 0 {
        let radii: Vec<usize> = (0..spec.n_parcels)
            .map(|_| rng.random_range(0..=jitter))
            .collect();
        jitter_borders(&mut noisy, &parcel, &parcel_class, &radii, w, h);
    }

    let NoiseSpec {
        flip_rate,
        unsure_rate,
        ..
    } = spec.noise;
    let n_classes = spec.n_classes as u16;
    for l in noisy.iter_mut() {
        let u: f64 = rng.random();
        if u < unsure_rate {
            *l = unsure;
        } else if u < unsure_rate + flip_rate {
            let mut other = rng.random_range(1..n_classes);
            if other >= *l {
                other += 1;
            }
            *l = other;
        }
    }

    let clean = LabelRaster::new(w, h, clean, Arc::clone(&class_map))?;
    let noisy = LabelRaster::new(w, h, noisy, Arc::clone(&class_map))?;
    let segments = SegmentMap::new(w, h, parcel.into_iter().map(|p| p + 1).collect())?;
    Ok(Scene {
        image,
        clean,
        noisy,
        segments,
        class_map,
    })
}

/// Paints every parcel in index order, dilated by its radius (square
/// element), so a pixel ends up with the class of the highest-index parcel
/// that reaches it.
fn jitter_borders(
    out: &mut [u16],
    parcel: &[u32],
    parcel_class: &[u16],
    radii: &[usize],
    w: usize,
    h: usize,
) {
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); radii.len()];
    for (i, &p) in parcel.iter().enumerate() {
        members[p as usize].push(i);
    }
    for (p, pixels) in members.iter().enumerate() {
        let class = parcel_class[p];
        let r = radii[p];
        for &i in pixels {
            out[i] = class;
        }
        if r == 0 {
            continue;
        }
        for &i in pixels {
            let (y, x) = (i / w, i % w);
            let on_border = (y.saturating_sub(1)..=(y + 1).min(h - 1)).any(|ny| {
                (x.saturating_sub(1)..=(x + 1).min(w - 1)).any(|nx| parcel[ny * w + nx] != p as u32)
            });
            if !on_border {
                continue;
            }
            for ny in y.saturating_sub(r)..=(y + r).min(h - 1) {
                for nx in x.saturating_sub(r)..=(x + r).min(w - 1) {
                    out[ny * w + nx] = class;
                }
            }
        }
    }
}
