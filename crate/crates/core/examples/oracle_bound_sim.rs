//! Denoises the acceptance scene with its true parcels for 100 seeds and
//! reports how often the per-parcel majority is wrong.
//!
//!     cargo run --release -p parcel-denoise --example oracle_bound_sim

use std::collections::HashMap;

use parcel_denoise::relabel::{denoise, DenoisePolicy};
use parcel_denoise::synth::{generate, SceneSpec};

fn main() -> parcel_denoise::Result<()> {
    let base = SceneSpec::load(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/tests/fixtures/acceptance_scene.json"
    ))?;
    let mut worst = f64::INFINITY;
    let mut wrong_parcels = 0usize;
    let mut smallest = usize::MAX;
    let mut worst_share = 0.0f64;
    for seed in 0..100u64 {
        let spec = SceneSpec {
            seed,
            ..base.clone()
        };
        let scene = generate(&spec)?;
        let (out, report) = denoise(&scene.noisy, &scene.segments, &DenoisePolicy::default())?;
        let hits = out
            .labels()
            .iter()
            .zip(scene.clean.labels())
            .filter(|(a, b)| a == b)
            .count();
        let acc = hits as f64 / out.labels().len() as f64;
        worst = worst.min(acc);
        smallest = smallest.min(
            report
                .segments
                .iter()
                .map(|v| v.size as usize)
                .min()
                .unwrap(),
        );
        // per-parcel histograms of the certain noisy labels
        let unsure = scene.class_map.unsure_id();
        let mut hist: HashMap<u32, (u16, HashMap<u16, u64>)> = HashMap::new();
        for ((&id, &truth), &noisy) in scene
            .segments
            .ids()
            .iter()
            .zip(scene.clean.labels())
            .zip(scene.noisy.labels())
        {
            let entry = hist.entry(id).or_insert((truth, HashMap::new()));
            if noisy != unsure {
                *entry.1.entry(noisy).or_default() += 1;
            }
        }
        for (truth, counts) in hist.values() {
            let certain: u64 = counts.values().sum();
            let right = counts.get(truth).copied().unwrap_or(0);
            if counts.iter().any(|(c, n)| c != truth && *n >= right) {
                wrong_parcels += 1;
            }
            for (c, n) in counts {
                if c != truth {
                    worst_share = worst_share.max(*n as f64 / certain as f64);
                }
            }
        }
    }
    println!("seeds: 100");
    println!("min accuracy: {worst:.6}");
    println!("parcels with wrong majority: {wrong_parcels}");
    println!("smallest parcel: {smallest} px");
    println!("largest wrong-class share of certain votes: {worst_share:.4}");
    Ok(())
}
