//! Binary PPM (P6) renders of label and segment rasters.

use std::fs;
use std::path::Path;

use super::{ClassMap, LabelRaster, SegmentMap, BACKGROUND, NODATA_LABEL};
use crate::error::{Error, Result};

fn ppm_header(width: usize, height: usize) -> Vec<u8> {
    format!("P6\n{width} {height}\n255\n").into_bytes()
}

/// Renders labels with the colors of `class_map`; NODATA is black.
pub fn render_labels_ppm(labels: &LabelRaster, class_map: &ClassMap) -> Result<Vec<u8>> {
    let mut palette = vec![None; 1 << 16];
    for c in class_map.classes() {
        palette[c.id as usize] = Some(c.color);
    }
    let mut out = ppm_header(labels.width(), labels.height());
    out.reserve(labels.pixel_count() * 3);
    for &l in labels.labels() {
        let rgb = if l == NODATA_LABEL {
            [0, 0, 0]
        } else {
            palette[l as usize].ok_or(Error::Mapping(l))?
        };
        out.extend_from_slice(&rgb);
    }
    Ok(out)
}

pub fn export_color_image(
    labels: &LabelRaster,
    class_map: &ClassMap,
    path: impl AsRef<Path>,
) -> Result<()> {
    let bytes = render_labels_ppm(labels, class_map)?;
    fs::write(path, bytes)?;
    Ok(())
}

/// Pseudo-random but stable color for a segment id.
fn segment_color(id: u32) -> [u8; 3] {
    // splitmix-style scramble so neighbouring ids get unrelated colors
    let mut z = (id as u64).wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    [
        64 + (z & 0xBF) as u8,
        64 + ((z >> 8) & 0xBF) as u8,
        64 + ((z >> 16) & 0xBF) as u8,
    ]
}

/// Renders segments with hashed colors; background is black.
pub fn render_segments_ppm(segs: &SegmentMap) -> Vec<u8> {
    let mut out = ppm_header(segs.width(), segs.height());
    out.reserve(segs.pixel_count() * 3);
    for &id in segs.ids() {
        let rgb = if id == BACKGROUND {
            [0, 0, 0]
        } else {
            segment_color(id)
        };
        out.extend_from_slice(&rgb);
    }
    out
}

pub fn export_segment_image(segs: &SegmentMap, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, render_segments_ppm(segs))?;
    Ok(())
}
