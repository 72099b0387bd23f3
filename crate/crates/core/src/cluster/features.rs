use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::ImageRaster;

/// Optional spatial features appended to the spectral ones.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    #[serde(default)]
    pub include_xy: bool,
    #[serde(default)]
    pub xy_weight: f64,
}

/// Row-major point matrix; `provenance[i]` is the `(row, col)` of point `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    dim: usize,
    data: Vec<f64>,
    provenance: Vec<(u32, u32)>,
}

impl FeatureMatrix {
    pub fn new(dim: usize, data: Vec<f64>, provenance: Vec<(u32, u32)>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Precondition(
                "feature dimension must be positive".into(),
            ));
        }
        if data.len() != dim * provenance.len() {
            return Err(Error::Shape(format!(
                "{} values do not fill {} rows of width {dim}",
                data.len(),
                provenance.len()
            )));
        }
        if data.iter().any(|v| v.is_nan()) {
            return Err(Error::Precondition("feature matrix contains NaN".into()));
        }
        Ok(Self {
            dim,
            data,
            provenance,
        })
    }

    /// Points without pixel provenance; row `i` is recorded as `(0, i)`.
    pub fn from_points(dim: usize, data: Vec<f64>) -> Result<Self> {
        let n = data.len().checked_div(dim).unwrap_or(0);
        Self::new(dim, data, (0..n as u32).map(|i| (0, i)).collect())
    }

    pub fn len(&self) -> usize {
        self.provenance.len()
    }

    pub fn is_empty(&self) -> bool {
        self.provenance.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn provenance(&self) -> &[(u32, u32)] {
        &self.provenance
    }
}

/// Z-scores each band over the valid pixels (population std) and optionally
/// appends `(row / height, col / width) * xy_weight`. NODATA pixels are
/// skipped; a constant band contributes a zero column.
pub fn build_features(img: &ImageRaster, cfg: FeatureConfig) -> Result<FeatureMatrix> {
    if cfg.include_xy && !(cfg.xy_weight >= 0.0 && cfg.xy_weight.is_finite()) {
        return Err(Error::Config(format!(
            "xy_weight must be finite and >= 0, got {}",
            cfg.xy_weight
        )));
    }
    let (w, h) = (img.width(), img.height());
    let valid: Vec<usize> = (0..img.pixel_count())
        .filter(|&p| !img.is_nodata(p))
        .collect();
    if valid.is_empty() {
        return Err(Error::EmptyInput);
    }

    let bands = img.bands();
    let dim = bands + if cfg.include_xy { 2 } else { 0 };
    let mut data = vec![0.0f64; valid.len() * dim];
    let n = valid.len() as f64;
    for b in 0..bands {
        let plane = img.band(b);
        let first = plane[valid[0]];
        if valid.iter().all(|&p| plane[p] == first) {
            continue;
        }
        let mean = valid.iter().map(|&p| plane[p] as f64).sum::<f64>() / n;
        let var = valid
            .iter()
            .map(|&p| {
                let d = plane[p] as f64 - mean;
                d * d
            })
            .sum::<f64>()
            / n;
        let std = var.sqrt();
        for (i, &p) in valid.iter().enumerate() {
            data[i * dim + b] = (plane[p] as f64 - mean) / std;
        }
    }
    if cfg.include_xy {
        for (i, &p) in valid.iter().enumerate() {
            data[i * dim + bands] = (p / w) as f64 / h as f64 * cfg.xy_weight;
            data[i * dim + bands + 1] = (p % w) as f64 / w as f64 * cfg.xy_weight;
        }
    }
    let provenance = valid
        .iter()
        .map(|&p| ((p / w) as u32, (p % w) as u32))
        .collect();
    FeatureMatrix::new(dim, data, provenance)
}
