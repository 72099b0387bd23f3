//! Clustering baselines that produce segment maps from imagery alone.
//!
//! Pixels become feature vectors ([`build_features`]), are clustered by
//! K-means or DBSCAN, and the clusters are painted back onto the grid and
//! split into spatially connected pieces ([`assignments_to_segment_map`]).

mod dbscan;
mod features;
mod kmeans;

pub use dbscan::{dbscan, DbscanConfig};
pub use features::{build_features, FeatureConfig, FeatureMatrix};
pub use kmeans::{kmeans, kmeans_plus_plus, lloyd_from, KMeansConfig, KMeansResult};

use crate::error::{Error, Result};
use crate::raster::{SegmentMap, BACKGROUND};
use crate::segments::{label_components, Connectivity};

/// Paints per-point cluster ids (0 = noise) onto a `width x height` grid
/// and splits every cluster into its connected components.
pub fn assignments_to_segment_map(
    assignments: &[u32],
    provenance: &[(u32, u32)],
    width: usize,
    height: usize,
    connectivity: Connectivity,
) -> Result<SegmentMap> {
    if assignments.len() != provenance.len() {
        return Err(Error::Shape(format!(
            "{} assignments for {} points",
            assignments.len(),
            provenance.len()
        )));
    }
    let mut grid = vec![BACKGROUND; width * height];
    for (&a, &(r, c)) in assignments.iter().zip(provenance) {
        let (r, c) = (r as usize, c as usize);
        if r >= height || c >= width {
            return Err(Error::Shape(format!(
                "point at ({r}, {c}) lies outside a {width}x{height} grid"
            )));
        }
        grid[r * width + c] = a;
    }
    let ids = label_components(width, height, &grid, |v| v == BACKGROUND, connectivity);
    SegmentMap::new(width, height, ids)
}
