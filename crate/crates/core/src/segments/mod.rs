//! Segment providers: turn scored masks or label rasters into a
//! [`SegmentMap`].

mod components;
mod masks;

pub use components::{connected_components, label_components, Connectivity};
pub use masks::{decode_rle, encode_rle, masks_to_segment_map, MaskSet, ScoredMask};
