use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::NODATA_LABEL;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassEntry {
    pub id: u16,
    pub name: String,
    pub color: [u8; 3],
}

impl ClassEntry {
    pub fn new(id: u16, name: impl Into<String>, color: [u8; 3]) -> Self {
        Self {
            id,
            name: name.into(),
            color,
        }
    }
}

#[derive(Deserialize)]
struct ClassMapRepr {
    unsure_id: u16,
    classes: Vec<ClassEntry>,
}

/// Class ids, display names and colors, plus the id designated "unsure".
///
/// Serialized as `{ "unsure_id": n, "classes": [{"id", "name", "color"}] }`.
/// Classes are kept sorted by id.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ClassMapRepr")]
pub struct ClassMap {
    unsure_id: u16,
    classes: Vec<ClassEntry>,
}

impl TryFrom<ClassMapRepr> for ClassMap {
    type Error = Error;

    fn try_from(repr: ClassMapRepr) -> Result<Self> {
        ClassMap::new(repr.unsure_id, repr.classes)
    }
}

/// Level-1 land-cover classes plus the ambiguous "mosaic of uses" class.
const LULC_CLASSES: [(&str, [u8; 3]); 5] = [
    ("Cropland", [230, 140, 60]),
    ("Forest", [30, 100, 40]),
    ("Barren/Built-up", [180, 60, 60]),
    ("Waterbody", [40, 90, 200]),
    ("Pasture", [170, 210, 100]),
];
const EXTRA_COLORS: [[u8; 3]; 6] = [
    [120, 60, 160],
    [60, 180, 180],
    [200, 120, 180],
    [120, 120, 40],
    [90, 90, 90],
    [250, 200, 150],
];
const UNSURE_COLOR: [u8; 3] = [250, 230, 30];

impl ClassMap {
    pub fn new(unsure_id: u16, mut classes: Vec<ClassEntry>) -> Result<Self> {
        if unsure_id == NODATA_LABEL {
            return Err(Error::Config(format!(
                "unsure_id must not be the NODATA sentinel {NODATA_LABEL}"
            )));
        }
        let mut ids = HashSet::new();
        let mut colors = HashSet::new();
        for c in &classes {
            if c.id == NODATA_LABEL {
                return Err(Error::Config(format!(
                    "class id {NODATA_LABEL} is reserved for NODATA"
                )));
            }
            if !ids.insert(c.id) {
                return Err(Error::Config(format!("duplicate class id {}", c.id)));
            }
            if !colors.insert(c.color) {
                return Err(Error::Config(format!(
                    "color {:?} used by more than one class",
                    c.color
                )));
            }
        }
        if !ids.contains(&unsure_id) {
            return Err(Error::Config(format!(
                "unsure_id {unsure_id} is not a listed class"
            )));
        }
        classes.sort_by_key(|c| c.id);
        Ok(Self { unsure_id, classes })
    }

    /// Classes `1..=n_classes` named after the land-cover classes (generic
    /// names beyond five), with the unsure class at `n_classes + 1`.
    pub fn land_cover(n_classes: usize) -> Result<Self> {
        if n_classes == 0 || n_classes > LULC_CLASSES.len() + EXTRA_COLORS.len() {
            return Err(Error::Config(format!(
                "default class map supports 1..={} classes, got {n_classes}",
                LULC_CLASSES.len() + EXTRA_COLORS.len()
            )));
        }
        let mut classes: Vec<ClassEntry> = (0..n_classes)
            .map(|i| {
                let id = (i + 1) as u16;
                match LULC_CLASSES.get(i) {
                    Some(&(name, color)) => ClassEntry::new(id, name, color),
                    None => ClassEntry::new(
                        id,
                        format!("Class {id}"),
                        EXTRA_COLORS[i - LULC_CLASSES.len()],
                    ),
                }
            })
            .collect();
        let unsure_id = (n_classes + 1) as u16;
        classes.push(ClassEntry::new(unsure_id, "Mosaic of uses", UNSURE_COLOR));
        Self::new(unsure_id, classes)
    }

    pub fn unsure_id(&self) -> u16 {
        self.unsure_id
    }

    pub fn classes(&self) -> &[ClassEntry] {
        &self.classes
    }

    /// Ids in ascending order.
    pub fn ids(&self) -> impl Iterator<Item = u16> + '_ {
        self.classes.iter().map(|c| c.id)
    }

    /// Ids in ascending order, without the unsure class.
    pub fn certain_ids(&self) -> Vec<u16> {
        self.ids().filter(|&id| id != self.unsure_id).collect()
    }

    pub fn get(&self, id: u16) -> Option<&ClassEntry> {
        self.classes
            .binary_search_by_key(&id, |c| c.id)
            .ok()
            .map(|i| &self.classes[i])
    }

    pub fn contains(&self, id: u16) -> bool {
        self.get(id).is_some()
    }

    pub fn name(&self, id: u16) -> Option<&str> {
        self.get(id).map(|c| c.name.as_str())
    }

    /// Dense membership table indexed by label value.
    pub(crate) fn lookup_table(&self) -> Vec<bool> {
        let mut table = vec![false; 1 << 16];
        for c in &self.classes {
            table[c.id as usize] = true;
        }
        table
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("class map: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("class map serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_documented_schema() {
        let cm = ClassMap::from_json(
            r#"{ "unsure_id": 6, "classes": [
                {"id": 2, "name": "Forest", "color": [0, 100, 0]},
                {"id": 6, "name": "Mosaic", "color": [255, 255, 0]}
            ]}"#,
        )
        .unwrap();
        assert_eq!(cm.unsure_id(), 6);
        assert_eq!(cm.name(2), Some("Forest"));
        assert_eq!(cm.certain_ids(), vec![2]);
    }

    #[test]
    fn rejects_bad_maps() {
        let a = ClassEntry::new(1, "a", [0, 0, 0]);
        assert!(ClassMap::new(2, vec![a.clone()]).is_err());
        assert!(ClassMap::new(1, vec![a.clone(), ClassEntry::new(1, "b", [1, 1, 1])]).is_err());
        assert!(ClassMap::new(1, vec![a.clone(), ClassEntry::new(2, "b", [0, 0, 0])]).is_err());
        assert!(ClassMap::new(NODATA_LABEL, vec![a]).is_err());
        assert!(ClassMap::from_json(r#"{"unsure_id": 3, "classes": []}"#).is_err());
    }

    #[test]
    fn land_cover_defaults() {
        let cm = ClassMap::land_cover(5).unwrap();
        assert_eq!(cm.unsure_id(), 6);
        assert_eq!(cm.name(2), Some("Forest"));
        assert_eq!(cm.classes().len(), 6);
        let back = ClassMap::from_json(&cm.to_json()).unwrap();
        assert_eq!(back, cm);
    }
}
