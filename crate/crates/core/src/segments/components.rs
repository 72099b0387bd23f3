use serde::{Deserialize, Serialize};

use crate::raster::{LabelRaster, SegmentMap, NODATA_LABEL};

/// Pixel adjacency used when growing regions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Connectivity {
    #[default]
    Four,
    Eight,
}

impl TryFrom<u8> for Connectivity {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, String> {
        match v {
            4 => Ok(Connectivity::Four),
            8 => Ok(Connectivity::Eight),
            other => Err(format!("connectivity must be 4 or 8, got {other}")),
        }
    }
}

impl From<Connectivity> for u8 {
    fn from(c: Connectivity) -> u8 {
        match c {
            Connectivity::Four => 4,
            Connectivity::Eight => 8,
        }
    }
}

struct DisjointSet {
    parent: Vec<u32>,
}

impl DisjointSet {
    fn make(&mut self) -> u32 {
        let id = self.parent.len() as u32;
        self.parent.push(id);
        id
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let grand = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = grand;
            x = grand;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // keep the older label as root
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi as usize] = lo;
        }
    }
}

/// Labels maximal connected regions of equal value.
///
/// Pixels for which `is_background` holds get id 0; regions are numbered
/// from 1 in the order their first pixel appears in a raster scan.
pub fn label_components<T: Copy + Eq>(
    width: usize,
    height: usize,
    values: &[T],
    is_background: impl Fn(T) -> bool,
    connectivity: Connectivity,
) -> Vec<u32> {
    assert_eq!(values.len(), width * height, "grid length mismatch");
    const UNSET: u32 = u32::MAX;
    let mut provisional = vec![UNSET; values.len()];
    let mut sets = DisjointSet { parent: Vec::new() };

    for r in 0..height {
        for c in 0..width {
            let i = r * width + c;
            let v = values[i];
            if is_background(v) {
                continue;
            }
            let mut neighbours = [usize::MAX; 4];
            if c > 0 {
                neighbours[0] = i - 1;
            }
            if r > 0 {
                neighbours[1] = i - width;
                if connectivity == Connectivity::Eight {
                    if c > 0 {
                        neighbours[2] = i - width - 1;
                    }
                    if c + 1 < width {
                        neighbours[3] = i - width + 1;
                    }
                }
            }
            let mut label = UNSET;
            for &n in neighbours.iter().filter(|&&n| n != usize::MAX) {
                if provisional[n] == UNSET || values[n] != v {
                    continue;
                }
                if label == UNSET {
                    label = provisional[n];
                } else {
                    sets.union(label, provisional[n]);
                }
            }
            provisional[i] = if label == UNSET { sets.make() } else { label };
        }
    }

    let mut final_id = vec![0u32; sets.parent.len()];
    let mut next = 0u32;
    provisional
        .iter()
        .map(|&p| {
            if p == UNSET {
                return 0;
            }
            let root = sets.find(p) as usize;
            if final_id[root] == 0 {
                next += 1;
                final_id[root] = next;
            }
            final_id[root]
        })
        .collect()
}

/// Each maximal connected run of one class becomes a segment; NODATA is
/// background.
pub fn connected_components(labels: &LabelRaster, connectivity: Connectivity) -> SegmentMap {
    let ids = label_components(
        labels.width(),
        labels.height(),
        labels.labels(),
        |l| l == NODATA_LABEL,
        connectivity,
    );
    SegmentMap::new(labels.width(), labels.height(), ids)
        .expect("dimensions come from a valid raster")
}
