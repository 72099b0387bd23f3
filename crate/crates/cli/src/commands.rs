use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use parcel_denoise::metrics::{confusion, render_table, MetricsReport};
use parcel_denoise::pipeline::Provider;
use parcel_denoise::pipeline::{run, RunConfig, RunOutput, SceneInputs};
use parcel_denoise::raster::{
    read_image, read_labels, render_labels_ppm, render_segments_ppm, write_grid,
};
use parcel_denoise::relabel::stray_pixel_stats;
use parcel_denoise::segments::MaskSet;
use parcel_denoise::synth::{generate, SceneSpec};
use parcel_denoise::{ClassMap, Error, ImageRaster, LabelRaster, Result};
use serde_json::json;

use crate::manifest::Manifest;
use crate::Overrides;

fn write_text(dir: &Path, name: &str, text: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    fs::write(dir.join(name), text)?;
    written.push(name.into());
    Ok(())
}

fn write_bytes(dir: &Path, name: &str, bytes: &[u8], written: &mut Vec<PathBuf>) -> Result<()> {
    fs::write(dir.join(name), bytes)?;
    written.push(name.into());
    Ok(())
}

fn pretty(value: &serde_json::Value) -> String {
    serde_json::to_string_pretty(value).expect("json value serializes") + "\n"
}

pub fn synth(spec_path: &Path, out_dir: &Path, seed: Option<u64>, render: bool) -> Result<()> {
    let mut spec = SceneSpec::load(spec_path)?;
    if let Some(s) = seed {
        spec.seed = s;
    }
    let scene = generate(&spec)?;
    fs::create_dir_all(out_dir)?;

    let mut written = Vec::new();
    for (name, res) in [
        (
            "image.pdg",
            write_grid(&scene.image, out_dir.join("image.pdg")),
        ),
        (
            "clean.pdg",
            write_grid(&scene.clean, out_dir.join("clean.pdg")),
        ),
        (
            "noisy.pdg",
            write_grid(&scene.noisy, out_dir.join("noisy.pdg")),
        ),
        (
            "segments.pdg",
            write_grid(&scene.segments, out_dir.join("segments.pdg")),
        ),
    ] {
        res?;
        written.push(PathBuf::from(name));
    }
    write_text(out_dir, "spec.json", &spec.to_json(), &mut written)?;
    write_text(
        out_dir,
        "class_map.json",
        &scene.class_map.to_json(),
        &mut written,
    )?;
    let masks = MaskSet::from_segment_map(&scene.segments, 1.0);
    write_text(out_dir, "oracle_masks.json", &masks.to_json(), &mut written)?;
    if render {
        let cm = &scene.class_map;
        write_bytes(
            out_dir,
            "clean.ppm",
            &render_labels_ppm(&scene.clean, cm)?,
            &mut written,
        )?;
        write_bytes(
            out_dir,
            "noisy.ppm",
            &render_labels_ppm(&scene.noisy, cm)?,
            &mut written,
        )?;
    }

    let mut manifest = Manifest::new("synth");
    manifest.config(&spec.to_json());
    manifest.input(spec_path)?;
    manifest.outputs(out_dir, &written)?;
    manifest.write(out_dir)?;
    println!(
        "synth: {}x{} scene, {} parcels, {} classes -> {}",
        spec.width,
        spec.height,
        spec.n_parcels,
        spec.n_classes,
        out_dir.display()
    );
    Ok(())
}

/// Inputs of one run config, read from disk.
struct Loaded {
    class_map: Arc<ClassMap>,
    labels: LabelRaster,
    image: Option<ImageRaster>,
    masks: Option<MaskSet>,
}

fn load_inputs(cfg: &RunConfig, manifest: &mut Manifest) -> Result<Loaded> {
    let class_map = Arc::new(ClassMap::load(&cfg.class_map)?);
    manifest.input(&cfg.class_map)?;
    let labels = read_labels(&cfg.labels, Arc::clone(&class_map))?;
    manifest.input(&cfg.labels)?;
    let image = match (&cfg.image, cfg.provider.needs_image()) {
        (Some(path), true) => {
            manifest.input(path)?;
            Some(read_image(path)?)
        }
        _ => None,
    };
    let masks = match &cfg.provider {
        Provider::Masks { path } => {
            manifest.input(path)?;
            Some(MaskSet::load(path)?)
        }
        _ => None,
    };
    Ok(Loaded {
        class_map,
        labels,
        image,
        masks,
    })
}

fn execute(cfg: &RunConfig, loaded: &Loaded) -> Result<RunOutput> {
    let inputs = SceneInputs {
        labels: &loaded.labels,
        image: loaded.image.as_ref(),
        masks: loaded.masks.as_ref(),
    };
    run(&cfg.provider, inputs, cfg.connectivity, &cfg.policy)
}

fn score(
    cfg: &RunConfig,
    reference: &Path,
    predicted: &LabelRaster,
    class_map: &Arc<ClassMap>,
    manifest: &mut Manifest,
) -> Result<MetricsReport> {
    let reference_labels = read_labels(reference, Arc::clone(class_map))?;
    manifest.input(reference)?;
    let cm = confusion(&reference_labels, predicted, cfg.exclude_unsure_ref)?;
    Ok(MetricsReport::new(cm, class_map, cfg.exclude_unsure_ref))
}

fn apply_overrides(cfg: &mut RunConfig, o: &Overrides) -> Result<()> {
    if let Some(d) = &o.out_dir {
        cfg.out_dir = Some(d.clone());
    }
    if let Some(m) = o.mode {
        cfg.policy.mode = m.into();
    }
    if let Some(m) = o.min_margin {
        cfg.policy.min_margin = m;
    }
    if o.unsure_votes {
        cfg.policy.unsure_votes = true;
    }
    if let Some(r) = &o.reference {
        cfg.reference = Some(r.clone());
    }
    if o.no_render {
        cfg.render = false;
    }
    cfg.policy.validate()
}

fn canonical(cfg: &impl serde::Serialize) -> String {
    serde_json::to_string(cfg).expect("config serializes")
}

pub fn denoise(config_path: &Path, overrides: &Overrides) -> Result<()> {
    let mut cfg = RunConfig::load(config_path)?;
    apply_overrides(&mut cfg, overrides)?;
    let out_dir = cfg.out_dir.clone().ok_or_else(|| {
        Error::Config("no output directory: set \"out_dir\" or pass --out-dir".into())
    })?;

    let mut manifest = Manifest::new("denoise");
    manifest.config(&canonical(&cfg));
    manifest.input(config_path)?;
    let loaded = load_inputs(&cfg, &mut manifest)?;
    let out = execute(&cfg, &loaded)?;
    let strays = stray_pixel_stats(&loaded.labels, &out.denoised, cfg.stray_window)?;
    let metrics = match &cfg.reference {
        Some(r) => Some(score(
            &cfg,
            r,
            &out.denoised,
            &loaded.class_map,
            &mut manifest,
        )?),
        None => None,
    };

    fs::create_dir_all(&out_dir)?;
    let mut written = Vec::new();
    write_grid(&out.denoised, out_dir.join("denoised.pdg"))?;
    written.push("denoised.pdg".into());
    write_grid(&out.segments, out_dir.join("segments.pdg"))?;
    written.push("segments.pdg".into());
    write_text(&out_dir, "report.json", &out.report.to_json(), &mut written)?;
    write_text(
        &out_dir,
        "strays.json",
        &pretty(&json!(strays)),
        &mut written,
    )?;
    if let Some(m) = &metrics {
        write_text(&out_dir, "metrics.json", &m.to_json(), &mut written)?;
        let table = render_table(
            &loaded.class_map,
            &loaded.class_map.certain_ids(),
            &[(cfg.display_name(), m.clone())],
        );
        write_text(&out_dir, "metrics_table.txt", &table, &mut written)?;
    }
    if cfg.render {
        let cm = &loaded.class_map;
        write_bytes(
            &out_dir,
            "before.ppm",
            &render_labels_ppm(&loaded.labels, cm)?,
            &mut written,
        )?;
        write_bytes(
            &out_dir,
            "after.ppm",
            &render_labels_ppm(&out.denoised, cm)?,
            &mut written,
        )?;
        write_bytes(
            &out_dir,
            "segments.ppm",
            &render_segments_ppm(&out.segments),
            &mut written,
        )?;
    }
    manifest.outputs(&out_dir, &written)?;
    manifest.write(&out_dir)?;

    let r = &out.report;
    print!(
        "denoise [{}]: {} segments, {} of {} pixels relabeled, unsure {} -> {}, strays {} -> {}",
        cfg.display_name(),
        out.segments.segment_count(),
        r.pixels_relabeled,
        r.pixels_total,
        r.unsure_before,
        r.unsure_after,
        strays.before,
        strays.after
    );
    match metrics.and_then(|m| m.overall_accuracy) {
        Some(oa) => println!(", accuracy {oa:.4}"),
        None => println!(),
    }
    Ok(())
}

pub fn eval(
    reference: &Path,
    predicted: &Path,
    class_map_path: &Path,
    out_dir: &Path,
    name: &str,
    exclude_unsure_ref: bool,
) -> Result<()> {
    let class_map = Arc::new(ClassMap::load(class_map_path)?);
    let r = read_labels(reference, Arc::clone(&class_map))?;
    let p = read_labels(predicted, Arc::clone(&class_map))?;
    let report = MetricsReport::new(
        confusion(&r, &p, exclude_unsure_ref)?,
        &class_map,
        exclude_unsure_ref,
    );
    let table = render_table(
        &class_map,
        &class_map.certain_ids(),
        &[(name.to_owned(), report.clone())],
    );

    fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    write_text(out_dir, "metrics.json", &report.to_json(), &mut written)?;
    write_text(out_dir, "metrics_table.txt", &table, &mut written)?;
    let mut manifest = Manifest::new("eval");
    manifest.config(&canonical(&json!({
        "name": name,
        "exclude_unsure_ref": exclude_unsure_ref,
    })));
    for path in [reference, predicted, class_map_path] {
        manifest.input(path)?;
    }
    manifest.outputs(out_dir, &written)?;
    manifest.write(out_dir)?;
    print!("{table}");
    Ok(())
}

pub fn compare(
    configs: &[PathBuf],
    out_dir: &Path,
    reference: Option<&Path>,
    render: bool,
) -> Result<()> {
    if configs.is_empty() {
        return Err(Error::Config(
            "compare needs at least one run config".into(),
        ));
    }
    let mut runs = Vec::with_capacity(configs.len());
    for path in configs {
        let mut cfg = RunConfig::load(path)?;
        if let Some(r) = reference {
            cfg.reference = Some(r.to_path_buf());
        }
        if cfg.reference.is_none() {
            return Err(Error::Config(format!(
                "{}: compare needs a \"reference\" (or pass --reference)",
                path.display()
            )));
        }
        let name = cfg.display_name();
        if name.is_empty() || name.contains(['/', '\\']) || name.starts_with('.') {
            return Err(Error::Config(format!(
                "run name {name:?} cannot be used as a directory"
            )));
        }
        if runs
            .iter()
            .any(|(_, c): &(PathBuf, RunConfig)| c.display_name() == name)
        {
            return Err(Error::Config(format!(
                "two runs are named {name:?}; set \"name\" in the configs"
            )));
        }
        runs.push((path.clone(), cfg));
    }

    let mut manifest = Manifest::new("compare");
    let effective: Vec<&RunConfig> = runs.iter().map(|(_, c)| c).collect();
    manifest.config(&canonical(&effective));
    fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    let mut columns: Option<(Arc<ClassMap>, Vec<u16>)> = None;

    for (path, cfg) in &runs {
        manifest.input(path)?;
        let loaded = load_inputs(cfg, &mut manifest)?;
        let out = execute(cfg, &loaded)?;
        let reference = cfg.reference.as_deref().expect("checked above");
        let metrics = score(
            cfg,
            reference,
            &out.denoised,
            &loaded.class_map,
            &mut manifest,
        )?;
        let strays = stray_pixel_stats(&loaded.labels, &out.denoised, cfg.stray_window)?;

        let name = cfg.display_name();
        let sub = out_dir.join(&name);
        fs::create_dir_all(&sub)?;
        let mut local = Vec::new();
        write_text(&sub, "report.json", &out.report.to_json(), &mut local)?;
        if render {
            let cm = &loaded.class_map;
            write_bytes(
                &sub,
                "segments.ppm",
                &render_segments_ppm(&out.segments),
                &mut local,
            )?;
            write_bytes(
                &sub,
                "denoised.ppm",
                &render_labels_ppm(&out.denoised, cm)?,
                &mut local,
            )?;
        }
        written.extend(local.into_iter().map(|p| Path::new(&name).join(p)));

        summary.push(json!({
            "name": name,
            "provider": cfg.provider.kind(),
            "segments": out.segments.segment_count(),
            "pixels_relabeled": out.report.pixels_relabeled,
            "strays": strays,
            "metrics": metrics,
        }));
        columns.get_or_insert_with(|| {
            (
                Arc::clone(&loaded.class_map),
                loaded.class_map.certain_ids(),
            )
        });
        rows.push((name, metrics));
    }

    let (class_map, ids) = columns.expect("at least one run");
    let table = render_table(&class_map, &ids, &rows);
    write_text(out_dir, "compare_table.txt", &table, &mut written)?;
    write_text(
        out_dir,
        "compare.json",
        &pretty(&json!({ "runs": summary })),
        &mut written,
    )?;
    manifest.outputs(out_dir, &written)?;
    manifest.write(out_dir)?;
    print!("{table}");
    Ok(())
}

pub fn masks_validate(path: &Path, width: Option<usize>, height: Option<usize>) -> Result<()> {
    let masks = MaskSet::load(path)?;
    for (what, want, got) in [
        ("width", width, masks.width),
        ("height", height, masks.height),
    ] {
        if let Some(w) = want {
            if w != got {
                return Err(Error::Shape(format!(
                    "mask set {what} is {got}, expected {w}"
                )));
            }
        }
    }
    let covered = parcel_denoise::segments::masks_to_segment_map(&masks)?.segment_count();
    println!(
        "ok: {} masks over {}x{}, {} own at least one pixel",
        masks.masks.len(),
        masks.width,
        masks.height,
        covered
    );
    Ok(())
}
