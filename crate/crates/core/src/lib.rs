//! Land-cover label denoising.
//!
//! Noisy per-pixel class rasters are cleaned in two stages. A segment map
//! partitions the scene into parcels, either from externally produced
//! scored masks ([`segments::masks_to_segment_map`]), from connected
//! components of a label raster, or from the K-means / DBSCAN baselines in
//! [`cluster`]. Each parcel then takes the majority class of its noisy labels
//! ([`relabel::denoise`]).
//!
//! The crate also ships the supporting pieces needed to run and score that
//! workflow: a small binary grid container ([`raster`]), per-class metrics
//! ([`metrics`]), a synthetic scene generator ([`synth`]) and the provider
//! plumbing used by the `pd` command-line tool ([`pipeline`]).

pub mod cluster;
pub mod error;
pub mod metrics;
pub mod pipeline;
pub mod raster;
pub mod relabel;
pub mod segments;
pub mod synth;

pub use error::{Error, Result};
pub use raster::{ClassEntry, ClassMap, ImageRaster, LabelRaster, SegmentMap, NODATA_LABEL};
