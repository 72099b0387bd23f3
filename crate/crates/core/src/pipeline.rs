//! Segment-provider dispatch and run configuration shared by the CLI and
//! the experiments.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cluster::{
    assignments_to_segment_map, build_features, dbscan, kmeans, DbscanConfig, KMeansConfig,
};
use crate::error::{Error, Result};
use crate::raster::{ensure_same_dims, ImageRaster, LabelRaster, SegmentMap};
use crate::relabel::{denoise, DenoisePolicy, DenoiseReport};
use crate::segments::{connected_components, masks_to_segment_map, Connectivity, MaskSet};

/// Where the parcels come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provider {
    /// A `MaskSet` JSON file of scored masks.
    Masks {
        path: PathBuf,
    },
    Kmeans(KMeansConfig),
    Dbscan(DbscanConfig),
    /// Connected components of the noisy labels themselves.
    Components,
}

impl Provider {
    pub fn kind(&self) -> &'static str {
        match self {
            Provider::Masks { .. } => "masks",
            Provider::Kmeans(_) => "kmeans",
            Provider::Dbscan(_) => "dbscan",
            Provider::Components => "components",
        }
    }

    pub fn needs_image(&self) -> bool {
        matches!(self, Provider::Kmeans(_) | Provider::Dbscan(_))
    }
}

/// Already-loaded inputs for one scene.
#[derive(Clone, Copy, Debug)]
pub struct SceneInputs<'a> {
    pub labels: &'a LabelRaster,
    pub image: Option<&'a ImageRaster>,
    pub masks: Option<&'a MaskSet>,
}

fn need<'a, T>(v: Option<&'a T>, what: &str, provider: &Provider) -> Result<&'a T> {
    v.ok_or_else(|| Error::Config(format!("provider '{}' needs {what}", provider.kind())))
}

/// Builds the segment map for `inputs` with the chosen provider.
pub fn build_segments(
    provider: &Provider,
    inputs: SceneInputs<'_>,
    connectivity: Connectivity,
) -> Result<SegmentMap> {
    let dims = (inputs.labels.width(), inputs.labels.height());
    match provider {
        Provider::Masks { .. } => {
            let masks = need(inputs.masks, "a mask set", provider)?;
            ensure_same_dims("masks vs labels", (masks.width, masks.height), dims)?;
            masks_to_segment_map(masks)
        }
        Provider::Kmeans(cfg) => {
            cfg.validate()?;
            let image = need(inputs.image, "an image", provider)?;
            ensure_same_dims("image vs labels", (image.width(), image.height()), dims)?;
            let x = build_features(image, cfg.features)?;
            let result = kmeans(&x, cfg)?;
            assignments_to_segment_map(
                &result.cluster_labels(),
                x.provenance(),
                dims.0,
                dims.1,
                connectivity,
            )
        }
        Provider::Dbscan(cfg) => {
            cfg.validate()?;
            let image = need(inputs.image, "an image", provider)?;
            ensure_same_dims("image vs labels", (image.width(), image.height()), dims)?;
            let x = build_features(image, cfg.features)?;
            let labels = dbscan(&x, cfg)?;
            assignments_to_segment_map(&labels, x.provenance(), dims.0, dims.1, connectivity)
        }
        Provider::Components => Ok(connected_components(inputs.labels, connectivity)),
    }
}

/// Result of one provider + vote run.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub segments: SegmentMap,
    pub denoised: LabelRaster,
    pub report: DenoiseReport,
}

pub fn run(
    provider: &Provider,
    inputs: SceneInputs<'_>,
    connectivity: Connectivity,
    policy: &DenoisePolicy,
) -> Result<RunOutput> {
    policy.validate()?;
    let segments = build_segments(provider, inputs, connectivity)?;
    let (denoised, report) = denoise(inputs.labels, &segments, policy)?;
    Ok(RunOutput {
        segments,
        denoised,
        report,
    })
}

fn default_true() -> bool {
    true
}

fn default_window() -> usize {
    3
}

/// One archived run: inputs, provider, vote policy and outputs.
///
/// Relative paths are resolved against the directory holding the config
/// file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Row label in comparison tables; defaults to the provider kind.
    #[serde(default)]
    pub name: Option<String>,
    pub labels: PathBuf,
    pub class_map: PathBuf,
    #[serde(default)]
    pub image: Option<PathBuf>,
    /// Clean labels to score against, when available.
    #[serde(default)]
    pub reference: Option<PathBuf>,
    pub provider: Provider,
    #[serde(default)]
    pub connectivity: Connectivity,
    #[serde(default)]
    pub policy: DenoisePolicy,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    /// Write PPM renders next to the outputs.
    #[serde(default = "default_true")]
    pub render: bool,
    #[serde(default)]
    pub exclude_unsure_ref: bool,
    #[serde(default = "default_window")]
    pub stray_window: usize,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("run config: {e}")))?;
        cfg.policy.validate()?;
        match &cfg.provider {
            Provider::Kmeans(k) => k.validate()?,
            Provider::Dbscan(d) => d.validate()?,
            _ => {}
        }
        if cfg.provider.needs_image() && cfg.image.is_none() {
            return Err(Error::Config(format!(
                "provider '{}' needs an \"image\" path",
                cfg.provider.kind()
            )));
        }
        Ok(cfg)
    }

    /// Loads a config and makes its relative paths absolute with respect to
    /// the config file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut cfg = Self::from_json(&fs::read_to_string(path)?)?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.labels);
        fix(&mut self.class_map);
        for p in [&mut self.image, &mut self.reference, &mut self.out_dir]
            .into_iter()
            .flatten()
        {
            fix(p);
        }
        if let Provider::Masks { path } = &mut self.provider {
            fix(path);
        }
    }

    pub fn display_name(&self) -> String {
        self.name
            .clone()
            .unwrap_or_else(|| self.provider.kind().to_owned())
    }
}
