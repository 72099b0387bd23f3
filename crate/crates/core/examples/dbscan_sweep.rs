//! Grid search over DBSCAN settings on the acceptance scene. Writes the
//! best setting by post-vote accuracy to `tests/fixtures/dbscan_sweep.json`.
//!
//!     cargo run --release -p parcel-denoise --example dbscan_sweep

use std::time::Instant;

use parcel_denoise::cluster::{DbscanConfig, FeatureConfig};
use parcel_denoise::pipeline::{run, Provider, SceneInputs};
use parcel_denoise::relabel::DenoisePolicy;
use parcel_denoise::segments::Connectivity;
use parcel_denoise::synth::{generate, SceneSpec};
use serde_json::json;

const DIR: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures");

fn main() -> parcel_denoise::Result<()> {
    let spec = SceneSpec::load(format!("{DIR}/acceptance_scene.json"))?;
    let scene = generate(&spec)?;
    let inputs = SceneInputs {
        labels: &scene.noisy,
        image: Some(&scene.image),
        masks: None,
    };
    let mut rows = Vec::new();
    let mut best: Option<(f64, DbscanConfig)> = None;
    for xy_weight in [64.0, 128.0, 256.0] {
        for eps in [0.5, 0.75, 1.0, 1.5] {
            for min_pts in [4, 8, 16] {
                let cfg = DbscanConfig {
                    eps,
                    min_pts,
                    features: FeatureConfig {
                        include_xy: true,
                        xy_weight,
                    },
                };
                let t = Instant::now();
                let out = run(
                    &Provider::Dbscan(cfg.clone()),
                    inputs,
                    Connectivity::Four,
                    &DenoisePolicy::default(),
                )?;
                let hits = out
                    .denoised
                    .labels()
                    .iter()
                    .zip(scene.clean.labels())
                    .filter(|(a, b)| a == b)
                    .count();
                let acc = hits as f64 / out.denoised.labels().len() as f64;
                eprintln!(
                    "xy_weight {xy_weight:>5} eps {eps:>4} min_pts {min_pts:>2}: acc {acc:.4}, {} segments, {:.1}s",
                    out.segments.segment_count(),
                    t.elapsed().as_secs_f64()
                );
                rows.push(json!({
                    "eps": eps,
                    "min_pts": min_pts,
                    "xy_weight": xy_weight,
                    "accuracy": (acc * 1e4).round() / 1e4,
                    "segments": out.segments.segment_count(),
                }));
                if best.as_ref().is_none_or(|(a, _)| acc > *a) {
                    best = Some((acc, cfg));
                }
            }
        }
    }
    let (_, chosen) = best.expect("non-empty sweep");
    let doc = json!({ "chosen": chosen, "scene": "acceptance_scene.json", "sweep": rows });
    std::fs::write(
        format!("{DIR}/dbscan_sweep.json"),
        serde_json::to_string_pretty(&doc).unwrap() + "\n",
    )?;
    Ok(())
}
