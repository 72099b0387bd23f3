//! The `PDGRID01` container.
//!
//! Layout, all little-endian:
//!
//! ```text
//! 0..8    magic "PDGRID01"
//! 8..12   u32 width
//! 12..16  u32 height
//! 16..20  u32 bands
//! 20..24  u32 dtype (1 = f32, 2 = u16, 3 = u32)
//! 24..    payload, band-sequential, row-major
//! ```

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use super::{check_dims, ClassMap, ImageRaster, LabelRaster, SegmentMap};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"PDGRID01";
const HEADER_LEN: usize = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u32)]
pub enum DType {
    F32 = 1,
    U16 = 2,
    U32 = 3,
}

impl DType {
    fn from_code(code: u32) -> Result<Self> {
        match code {
            1 => Ok(DType::F32),
            2 => Ok(DType::U16),
            3 => Ok(DType::U32),
            other => Err(Error::Format(format!("unknown dtype code {other}"))),
        }
    }

    fn size(self) -> usize {
        match self {
            DType::F32 | DType::U32 => 4,
            DType::U16 => 2,
        }
    }

    fn kind(self) -> &'static str {
        match self {
            DType::F32 => "image (f32)",
            DType::U16 => "labels (u16)",
            DType::U32 => "segments (u32)",
        }
    }
}

/// Label values as stored on disk, before a class map is attached.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelGrid {
    pub width: usize,
    pub height: usize,
    pub labels: Vec<u16>,
}

impl LabelGrid {
    pub fn with_class_map(self, class_map: impl Into<Arc<ClassMap>>) -> Result<LabelRaster> {
        LabelRaster::new(self.width, self.height, self.labels, class_map)
    }
}

/// Any grid read back from a `PDGRID01` file.
#[derive(Clone, Debug, PartialEq)]
pub enum Grid {
    Image(ImageRaster),
    Labels(LabelGrid),
    Segments(SegmentMap),
}

impl Grid {
    fn kind(&self) -> &'static str {
        match self {
            Grid::Image(_) => DType::F32.kind(),
            Grid::Labels(_) => DType::U16.kind(),
            Grid::Segments(_) => DType::U32.kind(),
        }
    }
}

/// Something that can be written as a `PDGRID01` container.
pub trait GridWrite {
    fn dtype(&self) -> DType;
    fn dims(&self) -> (usize, usize, usize);
    /// Checks type invariants before anything touches the disk.
    fn validate(&self) -> Result<()>;
    fn write_payload(&self, out: &mut Vec<u8>);
}

impl GridWrite for ImageRaster {
    fn dtype(&self) -> DType {
        DType::F32
    }
    fn dims(&self) -> (usize, usize, usize) {
        (self.width, self.height, self.bands)
    }
    fn validate(&self) -> Result<()> {
        check_dims(self.width, self.height, self.values.len(), self.bands)
    }
    fn write_payload(&self, out: &mut Vec<u8>) {
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
}

impl GridWrite for LabelGrid {
    fn dtype(&self) -> DType {
        DType::U16
    }
    fn dims(&self) -> (usize, usize, usize) {
        (self.width, self.height, 1)
    }
    fn validate(&self) -> Result<()> {
        check_dims(self.width, self.height, self.labels.len(), 1)
    }
    fn write_payload(&self, out: &mut Vec<u8>) {
        for v in &self.labels {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
}

impl GridWrite for LabelRaster {
    fn dtype(&self) -> DType {
        DType::U16
    }
    fn dims(&self) -> (usize, usize, usize) {
        (self.width, self.height, 1)
    }
    fn validate(&self) -> Result<()> {
        check_dims(self.width, self.height, self.labels.len(), 1)
    }
    fn write_payload(&self, out: &mut Vec<u8>) {
        for v in &self.labels {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
}

impl GridWrite for SegmentMap {
    fn dtype(&self) -> DType {
        DType::U32
    }
    fn dims(&self) -> (usize, usize, usize) {
        (self.width, self.height, 1)
    }
    fn validate(&self) -> Result<()> {
        check_dims(self.width, self.height, self.ids.len(), 1)
    }
    fn write_payload(&self, out: &mut Vec<u8>) {
        for v in &self.ids {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
}

impl GridWrite for Grid {
    fn dtype(&self) -> DType {
        match self {
            Grid::Image(g) => g.dtype(),
            Grid::Labels(g) => g.dtype(),
            Grid::Segments(g) => g.dtype(),
        }
    }
    fn dims(&self) -> (usize, usize, usize) {
        match self {
            Grid::Image(g) => g.dims(),
            Grid::Labels(g) => g.dims(),
            Grid::Segments(g) => g.dims(),
        }
    }
    fn validate(&self) -> Result<()> {
        match self {
            Grid::Image(g) => g.validate(),
            Grid::Labels(g) => g.validate(),
            Grid::Segments(g) => g.validate(),
        }
    }
    fn write_payload(&self, out: &mut Vec<u8>) {
        match self {
            Grid::Image(g) => g.write_payload(out),
            Grid::Labels(g) => g.write_payload(out),
            Grid::Segments(g) => g.write_payload(out),
        }
    }
}

/// Serializes a grid to container bytes.
pub fn encode_grid<G: GridWrite + ?Sized>(grid: &G) -> Result<Vec<u8>> {
    grid.validate()?;
    let (w, h, b) = grid.dims();
    let dtype = grid.dtype();
    let mut out = Vec::with_capacity(HEADER_LEN + w * h * b * dtype.size());
    out.extend_from_slice(MAGIC);
    for v in [w as u32, h as u32, b as u32, dtype as u32] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    grid.write_payload(&mut out);
    Ok(out)
}

pub fn write_grid<G: GridWrite + ?Sized>(grid: &G, path: impl AsRef<Path>) -> Result<()> {
    let bytes = encode_grid(grid)?;
    let mut w = BufWriter::new(fs::File::create(path)?);
    w.write_all(&bytes)?;
    w.flush()?;
    Ok(())
}

fn read_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap())
}

/// Parses container bytes into whichever grid kind the header declares.
pub fn decode_grid(bytes: &[u8]) -> Result<Grid> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(Error::Format("missing PDGRID01 magic".into()));
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::Corruption(format!(
            "header truncated at {} bytes",
            bytes.len()
        )));
    }
    let width = read_u32(bytes, 8) as usize;
    let height = read_u32(bytes, 12) as usize;
    let bands = read_u32(bytes, 16) as usize;
    let dtype = DType::from_code(read_u32(bytes, 20))?;
    if width == 0 || height == 0 || bands == 0 {
        return Err(Error::Format(format!(
            "degenerate header {width}x{height}x{bands}"
        )));
    }
    if dtype != DType::F32 && bands != 1 {
        return Err(Error::Format(format!(
            "{} grids must have one band, header says {bands}",
            dtype.kind()
        )));
    }
    let count = (width as u64) * (height as u64) * (bands as u64);
    let payload = &bytes[HEADER_LEN..];
    if payload.len() as u64 != count * dtype.size() as u64 {
        return Err(Error::Corruption(format!(
            "header declares {count} values ({} bytes), payload has {} bytes",
            count * dtype.size() as u64,
            payload.len()
        )));
    }
    let grid = match dtype {
        DType::F32 => {
            let values = payload
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect();
            Grid::Image(
                ImageRaster::new(width, height, bands, values)
                    .map_err(|e| Error::Corruption(e.to_string()))?,
            )
        }
        DType::U16 => Grid::Labels(LabelGrid {
            width,
            height,
            labels: payload
                .chunks_exact(2)
                .map(|c| u16::from_le_bytes(c.try_into().unwrap()))
                .collect(),
        }),
        DType::U32 => Grid::Segments(SegmentMap::new(
            width,
            height,
            payload
                .chunks_exact(4)
                .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
                .collect(),
        )?),
    };
    Ok(grid)
}

pub fn read_grid(path: impl AsRef<Path>) -> Result<Grid> {
    decode_grid(&fs::read(path)?)
}

pub fn read_image(path: impl AsRef<Path>) -> Result<ImageRaster> {
    match read_grid(path)? {
        Grid::Image(g) => Ok(g),
        other => Err(Error::Type {
            expected: DType::F32.kind(),
            found: other.kind(),
        }),
    }
}

pub fn read_labels(
    path: impl AsRef<Path>,
    class_map: impl Into<Arc<ClassMap>>,
) -> Result<LabelRaster> {
    match read_grid(path)? {
        Grid::Labels(g) => g.with_class_map(class_map),
        other => Err(Error::Type {
            expected: DType::U16.kind(),
            found: other.kind(),
        }),
    }
}

pub fn read_segments(path: impl AsRef<Path>) -> Result<SegmentMap> {
    match read_grid(path)? {
        Grid::Segments(g) => Ok(g),
        other => Err(Error::Type {
            expected: DType::U32.kind(),
            found: other.kind(),
        }),
    }
}
