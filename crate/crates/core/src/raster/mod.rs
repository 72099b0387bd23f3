//! Grid types shared by every stage of the pipeline.
//!
//! Three grid kinds exist: multi-band `f32` imagery, `u16` class labels and
//! `u32` segment ids. All are row-major and immutable once built; the
//! constructors enforce the invariants so downstream code never re-checks
//! them.

mod class_map;
mod grid_io;
mod ppm;

use std::sync::Arc;

pub use class_map::{ClassEntry, ClassMap};
pub use grid_io::{
    decode_grid, encode_grid, read_grid, read_image, read_labels, read_segments, write_grid, DType,
    Grid, GridWrite, LabelGrid, MAGIC,
};
pub use ppm::{export_color_image, export_segment_image, render_labels_ppm, render_segments_ppm};

use crate::error::{Error, Result};

/// Label value marking pixels without data.
pub const NODATA_LABEL: u16 = u16::MAX;

/// Segment id reserved for unsegmented pixels.
pub const BACKGROUND: u32 = 0;

fn check_dims(width: usize, height: usize, len: usize, per_pixel: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::Precondition(format!(
            "grid dimensions must be positive, got {width}x{height}"
        )));
    }
    if width > u32::MAX as usize || height > u32::MAX as usize {
        return Err(Error::Precondition("grid dimensions exceed u32".into()));
    }
    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(per_pixel))
        .ok_or_else(|| Error::Precondition("grid size overflows".into()))?;
    if len != expected {
        return Err(Error::Precondition(format!(
            "expected {expected} values for {width}x{height}x{per_pixel}, got {len}"
        )));
    }
    Ok(())
}

/// Multi-band floating point imagery, stored band-sequential.
///
/// A pixel is NODATA when band 0 is NaN, in which case every band is NaN.
#[derive(Clone, Debug)]
pub struct ImageRaster {
    width: usize,
    height: usize,
    bands: usize,
    values: Vec<f32>,
}

impl ImageRaster {
    pub fn new(width: usize, height: usize, bands: usize, values: Vec<f32>) -> Result<Self> {
        if bands == 0 {
            return Err(Error::Precondition("image needs at least one band".into()));
        }
        check_dims(width, height, values.len(), bands)?;
        let plane = width * height;
        for px in 0..plane {
            let nodata = values[px].is_nan();
            for b in 1..bands {
                if values[b * plane + px].is_nan() != nodata {
                    return Err(Error::Precondition(format!(
                        "pixel {px}: NaN must appear in all bands or none"
                    )));
                }
            }
        }
        Ok(Self {
            width,
            height,
            bands,
            values,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bands(&self) -> usize {
        self.bands
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    /// One band as a row-major plane.
    pub fn band(&self, b: usize) -> &[f32] {
        let plane = self.pixel_count();
        &self.values[b * plane..(b + 1) * plane]
    }

    pub fn is_nodata(&self, pixel: usize) -> bool {
        self.values[pixel].is_nan()
    }
}

/// Bitwise comparison, so NaN positions (and payloads) must agree.
impl PartialEq for ImageRaster {
    fn eq(&self, other: &Self) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.bands == other.bands
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

/// Per-pixel class ids paired with the class map that gives them meaning.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelRaster {
    width: usize,
    height: usize,
    labels: Vec<u16>,
    class_map: Arc<ClassMap>,
}

impl LabelRaster {
    pub fn new(
        width: usize,
        height: usize,
        labels: Vec<u16>,
        class_map: impl Into<Arc<ClassMap>>,
    ) -> Result<Self> {
        check_dims(width, height, labels.len(), 1)?;
        let class_map = class_map.into();
        let known = class_map.lookup_table();
        if let Some(&bad) = labels
            .iter()
            .find(|&&l| l != NODATA_LABEL && !known[l as usize])
        {
            return Err(Error::Mapping(bad));
        }
        Ok(Self {
            width,
            height,
            labels,
            class_map,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixel_count(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[u16] {
        &self.labels
    }

    pub fn class_map(&self) -> &ClassMap {
        &self.class_map
    }

    pub fn shared_class_map(&self) -> Arc<ClassMap> {
        Arc::clone(&self.class_map)
    }

    pub fn unsure_id(&self) -> u16 {
        self.class_map.unsure_id()
    }

    /// Same class map, new labels.
    pub fn with_labels(&self, labels: Vec<u16>) -> Result<Self> {
        Self::new(self.width, self.height, labels, self.shared_class_map())
    }

    pub fn count(&self, label: u16) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    pub fn to_label_grid(&self) -> LabelGrid {
        LabelGrid {
            width: self.width,
            height: self.height,
            labels: self.labels.clone(),
        }
    }
}

/// Parcel partition of a scene. Id 0 is background.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SegmentMap {
    width: usize,
    height: usize,
    ids: Vec<u32>,
}

impl SegmentMap {
    pub fn new(width: usize, height: usize, ids: Vec<u32>) -> Result<Self> {
        check_dims(width, height, ids.len(), 1)?;
        Ok(Self { width, height, ids })
    }

    /// All pixels background.
    pub fn empty(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, vec![BACKGROUND; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixel_count(&self) -> usize {
        self.ids.len()
    }

    pub fn ids(&self) -> &[u32] {
        &self.ids
    }

    /// Number of distinct non-background ids.
    pub fn segment_count(&self) -> usize {
        let mut ids: Vec<u32> = self
            .ids
            .iter()
            .copied()
            .filter(|&i| i != BACKGROUND)
            .collect();
        ids.sort_unstable();
        ids.dedup();
        ids.len()
    }

    pub fn max_id(&self) -> u32 {
        self.ids.iter().copied().max().unwrap_or(BACKGROUND)
    }
}

/// Fails with a shape error unless the two grids share dimensions.
pub fn ensure_same_dims(
    what: &str,
    (w1, h1): (usize, usize),
    (w2, h2): (usize, usize),
) -> Result<()> {
    if (w1, h1) != (w2, h2) {
        return Err(Error::Shape(format!("{what}: {w1}x{h1} vs {w2}x{h2}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cmap() -> ClassMap {
        ClassMap::new(
            9,
            vec![
                ClassEntry::new(1, "a", [1, 1, 1]),
                ClassEntry::new(9, "unsure", [9, 9, 9]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn image_rejects_partial_nan() {
        let err = ImageRaster::new(2, 1, 2, vec![f32::NAN, 1.0, 0.0, 1.0]).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
        assert!(ImageRaster::new(2, 1, 2, vec![f32::NAN, 1.0, f32::NAN, 1.0]).is_ok());
    }

    #[test]
    fn image_rejects_bad_length_and_zero_dims() {
        assert!(ImageRaster::new(2, 2, 1, vec![0.0; 3]).is_err());
        assert!(ImageRaster::new(0, 2, 1, vec![]).is_err());
        assert!(ImageRaster::new(1, 1, 0, vec![]).is_err());
    }

    #[test]
    fn labels_must_be_in_class_map() {
        let err = LabelRaster::new(2, 1, vec![1, 4], cmap()).unwrap_err();
        assert!(matches!(err, Error::Mapping(4)));
        assert!(LabelRaster::new(2, 1, vec![1, NODATA_LABEL], cmap()).is_ok());
    }

    #[test]
    fn nan_positions_compare_bitwise() {
        let a = ImageRaster::new(2, 1, 1, vec![f32::NAN, 1.0]).unwrap();
        let b = ImageRaster::new(2, 1, 1, vec![f32::NAN, 1.0]).unwrap();
        let c = ImageRaster::new(2, 1, 1, vec![1.0, f32::NAN]).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn segment_count_ignores_background() {
        let s = SegmentMap::new(3, 1, vec![0, 5, 5]).unwrap();
        assert_eq!(s.segment_count(), 1);
        assert_eq!(s.max_id(), 5);
    }
}
