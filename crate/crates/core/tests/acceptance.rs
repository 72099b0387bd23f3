//! Acceptance runner: one line per criterion, non-zero exit on any failure.
//!
//!     cargo test -p parcel-denoise --test acceptance

mod common;

use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use common::props;
use parcel_denoise::cluster::{dbscan, kmeans, DbscanConfig, FeatureMatrix, KMeansConfig};
use parcel_denoise::metrics::{confusion, per_class_metrics, render_table, MetricsReport};
use parcel_denoise::pipeline::{run, Provider, SceneInputs};
use parcel_denoise::relabel::{
    denoise, segment_mode, stray_pixel_stats, DenoisePolicy, RelabelMode,
};
use parcel_denoise::segments::{Connectivity, MaskSet};
use parcel_denoise::synth::{generate, Scene, SceneSpec};
use parcel_denoise::{ClassMap, LabelRaster};
use proptest::test_runner::{Config, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures");

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn accuracy(a: &LabelRaster, b: &LabelRaster) -> f64 {
    let hits = a
        .labels()
        .iter()
        .zip(b.labels())
        .filter(|(x, y)| x == y)
        .count();
    hits as f64 / a.labels().len() as f64
}

fn scene() -> Scene {
    let spec = SceneSpec::load(format!("{FIXTURES}/acceptance_scene.json")).unwrap();
    generate(&spec).unwrap()
}

fn oracle_segments(scene: &Scene) -> Outcome {
    let policy = DenoisePolicy {
        mode: RelabelMode::RelabelAll,
        min_margin: 0.0,
        ..Default::default()
    };
    let t = Instant::now();
    let (out, _) = denoise(&scene.noisy, &scene.segments, &policy).map_err(|e| e.to_string())?;
    let secs = t.elapsed().as_secs_f64();
    let acc = accuracy(&out, &scene.clean);
    check(
        acc >= 0.99 && secs < 5.0,
        format!("accuracy {acc:.6} (>= 0.99), runtime {secs:.3} s (< 5 s)"),
    )
}

fn provider_ordering(scene: &Scene) -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("oracle_masks.json");
    MaskSet::from_segment_map(&scene.segments, 1.0)
        .save(&path)
        .map_err(|e| e.to_string())?;
    let masks = MaskSet::load(&path).map_err(|e| e.to_string())?;

    let sweep: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(format!("{FIXTURES}/dbscan_sweep.json")).unwrap(),
    )
    .unwrap();
    let db: DbscanConfig = serde_json::from_value(sweep["chosen"].clone()).unwrap();

    let inputs = SceneInputs {
        labels: &scene.noisy,
        image: Some(&scene.image),
        masks: Some(&masks),
    };
    let policy = DenoisePolicy::default();
    let mut acc = Vec::new();
    for provider in [
        Provider::Masks { path },
        Provider::Kmeans(KMeansConfig::new(5, 7)),
        Provider::Dbscan(db),
    ] {
        let out = run(&provider, inputs, Connectivity::Four, &policy).map_err(|e| e.to_string())?;
        acc.push((provider.kind(), accuracy(&out.denoised, &scene.clean)));
    }
    let detail = acc
        .iter()
        .map(|(k, a)| format!("{k} {a:.6}"))
        .collect::<Vec<_>>()
        .join(", ");
    check(acc[0].1 >= acc[1].1 && acc[0].1 >= acc[2].1, detail)
}

fn stray_reduction(scene: &Scene) -> Outcome {
    let (out, _) = denoise(&scene.noisy, &scene.segments, &DenoisePolicy::default())
        .map_err(|e| e.to_string())?;
    let s = stray_pixel_stats(&scene.noisy, &out, 3).map_err(|e| e.to_string())?;
    check(
        s.after as f64 <= 0.1 * s.before as f64,
        format!("strays before {}, after {} (<= 10%)", s.before, s.after),
    )
}

fn dbscan_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xdb5c);
    let mut mismatches = 0;
    let mut total_points = 0;
    for _ in 0..50 {
        let n = rng.random_range(1..=2000);
        let dim = rng.random_range(1..=5);
        // half the sets are clumpy so that real clusters form
        let data: Vec<f64> = if rng.random_bool(0.5) {
            (0..n * dim).map(|_| rng.random::<f64>() * 10.0).collect()
        } else {
            let centers: Vec<f64> = (0..4 * dim).map(|_| rng.random::<f64>() * 10.0).collect();
            (0..n)
                .flat_map(|_| {
                    let c = rng.random_range(0..4);
                    (0..dim)
                        .map(|d| centers[c * dim + d] + rng.random::<f64>() - 0.5)
                        .collect::<Vec<_>>()
                })
                .collect()
        };
        let eps = rng.random_range(0.05..2.0);
        let min_pts = rng.random_range(1..=12);
        let x = FeatureMatrix::from_points(dim, data.clone()).map_err(|e| e.to_string())?;
        let ours = dbscan(&x, &DbscanConfig::new(eps, min_pts)).map_err(|e| e.to_string())?;
        let naive = common::naive_dbscan(&data, dim, eps, min_pts);
        if !common::same_partition(&ours, &naive) {
            mismatches += 1;
        }
        total_points += n;
    }
    check(
        mismatches == 0,
        format!("50 sets, {total_points} points, {mismatches} mismatches"),
    )
}

fn kmeans_properties() -> Outcome {
    let (data, _) = common::blobs(&[[0.0, 0.0], [5.0, 5.0], [10.0, 0.0]], 400, 1.2, 21);
    let x = FeatureMatrix::from_points(2, data.clone()).map_err(|e| e.to_string())?;
    let cfg = KMeansConfig::new(3, 1234);
    let first = kmeans(&x, &cfg).map_err(|e| e.to_string())?;

    let monotone = first.history.windows(2).all(|w| w[1] <= w[0]);

    let mut nearest = true;
    for (i, p) in data.chunks(2).enumerate() {
        let d: Vec<f64> = (0..3)
            .map(|k| {
                let c = first.centroid(k, 2);
                (p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)
            })
            .collect();
        let best = (0..3).fold(0, |b, k| if d[k] < d[b] { k } else { b });
        nearest &= first.assignments[i] as usize == best;
    }

    let mut reproducible = true;
    for _ in 0..5 {
        let again = kmeans(&x, &cfg).map_err(|e| e.to_string())?;
        reproducible &= again.objective.to_bits() == first.objective.to_bits()
            && again.assignments == first.assignments;
    }
    check(
        monotone && nearest && reproducible,
        format!(
            "J non-increasing over {} steps: {monotone}; nearest-centroid: {nearest}; bit-equal J x5: {reproducible}",
            first.history.len()
        ),
    )
}

fn mode_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    let mut mismatches = 0;
    for _ in 0..1000 {
        let n = rng.random_range(1..=50);
        let classes = rng.random_range(1..=8u16);
        let votes: Vec<u16> = (0..n).map(|_| rng.random_range(1..=classes)).collect();
        if segment_mode(&votes).map_err(|e| e.to_string())? != common::counting_mode(&votes) {
            mismatches += 1;
        }
    }
    check(
        mismatches == 0,
        format!("1000 multisets, {mismatches} mismatches"),
    )
}

fn metrics_golden() -> Outcome {
    let cm = Arc::new(ClassMap::land_cover(2).unwrap());
    let raster = |v: Vec<u16>| LabelRaster::new(4, 1, v, Arc::clone(&cm)).unwrap();
    let reference = raster(vec![1, 1, 2, 2]);
    let four =
        confusion(&reference, &raster(vec![1, 2, 2, 2]), false).map_err(|e| e.to_string())?;
    let m = per_class_metrics(&four);
    let get = |c: u16| m.iter().find(|x| x.class == c).unwrap();
    let values_ok = get(1).precision == Some(1.0)
        && get(1).recall == Some(0.5)
        && get(2).precision == Some(2.0 / 3.0)
        && get(2).recall == Some(1.0);

    let flat =
        confusion(&reference, &raster(vec![2, 2, 2, 2]), false).map_err(|e| e.to_string())?;
    let rows = vec![
        (
            "four-pixel".to_string(),
            MetricsReport::new(four, &cm, false),
        ),
        (
            "all-forest".to_string(),
            MetricsReport::new(flat, &cm, false),
        ),
    ];
    let table = render_table(&cm, &[1, 2], &rows);
    let golden = std::fs::read_to_string(format!("{FIXTURES}/metrics_table.txt")).unwrap();
    let table_ok = table == golden;
    check(
        values_ok && table_ok,
        format!("P/R values exact: {values_ok}; table byte-exact: {table_ok}"),
    )
}

fn invariant_suite() -> Outcome {
    const CASES: u32 = 1000;
    let mut results = Vec::new();
    let runner = || {
        TestRunner::new(Config {
            cases: CASES,
            failure_persistence: None,
            ..Config::default()
        })
    };
    let inst = props::arb_instance();
    let suites: [(&str, Result<(), String>); 4] = [
        (
            "NODATA preservation",
            runner()
                .run(&inst, |i| props::nodata_preserved(&i))
                .map_err(|e| e.to_string()),
        ),
        (
            "unsure-only immutability",
            runner()
                .run(&inst, |i| props::unsure_only_keeps_certain(&i))
                .map_err(|e| e.to_string()),
        ),
        (
            "idempotence",
            runner()
                .run(&inst, |i| props::idempotent(&i))
                .map_err(|e| e.to_string()),
        ),
        (
            "PDGRID01 round-trip",
            runner()
                .run(&props::arb_grid(), |g| props::grid_round_trip(&g))
                .map_err(|e| e.to_string()),
        ),
    ];
    let mut ok = true;
    for (name, r) in suites {
        match r {
            Ok(()) => results.push(format!("{name} ok")),
            Err(e) => {
                ok = false;
                results.push(format!("{name} FAILED: {e}"));
            }
        }
    }
    check(ok, format!("{CASES} cases each: {}", results.join("; ")))
}

fn main() -> ExitCode {
    let scene = scene();
    let criteria: Vec<Criterion<'_>> = vec![
        (
            "oracle-segments denoising",
            Box::new(|| oracle_segments(&scene)),
        ),
        (
            "masks provider >= kmeans and dbscan",
            Box::new(|| provider_ordering(&scene)),
        ),
        (
            "stray-pixel reduction",
            Box::new(|| stray_reduction(&scene)),
        ),
        (
            "dbscan matches naive reference",
            Box::new(dbscan_equivalence),
        ),
        ("k-means properties", Box::new(kmeans_properties)),
        ("mode matches counting", Box::new(mode_oracle)),
        ("metrics golden values and table", Box::new(metrics_golden)),
        ("invariant property suite", Box::new(invariant_suite)),
    ];
    let mut failed = 0;
    for (name, f) in &criteria {
        match f() {
            Ok(detail) => println!("[PASS] {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {name}: {detail}");
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
