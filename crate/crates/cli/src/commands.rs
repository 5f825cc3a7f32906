use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use serde_json::{json, Value};

use detbound::datamodel::{
    load_classifications, load_detections, load_ground_truth, validate as validate_dataset, ClassificationRecord,
    ClassificationSet, Dataset, DetectionSet, SegMask,
};
use detbound::diagnosis::{diagnose as run_diagnosis, DiagnosisConfig};
use detbound::evaluator::{evaluate, EvalConfig, Evaluation, IouKernel};
use detbound::geometry::{decode_mask, mask_to_box, segmentation_to_rle, SampleMode, SamplerSpec};
use detbound::transforms::{
    box_distribution_map, crop_pixels, diff_map, export_context_crops, transform_dataset, CropMode, CropSpec,
    DirSink, DirSource, ImageSink, ImageSource, MapScale, TransformSpec,
};
use detbound::upperbound::{
    accuracy_uap_correlation, build_uap_detections, sample_manifest, strategy2_aggregate, top1_accuracy,
    SampleManifest, Strategy2Mode,
};

use crate::output::{csv_text, fixed, sibling, to_fixed_json, write_json, write_text, RunManifest};

/// Writes the report (or prints it when there is no `--out`) and the run
/// manifest. Without `--out` the manifest goes to standard error.
fn emit(out: Option<&Path>, manifest: &RunManifest, text: impl FnOnce(&str) -> Result<String>) -> Result<()> {
    match out {
        Some(p) => {
            let digest = manifest.finish(p)?;
            write_text(p, &text(&digest)?)
        }
        None => {
            let digest = manifest.digest();
            print!("{}", text(&digest)?);
            eprint!("{}", manifest.render());
            Ok(())
        }
    }
}

fn json_report(mut report: Value, digest: &str) -> String {
    report["manifest_sha256"] = digest.into();
    to_fixed_json(&report)
}

#[derive(Args, Clone, Debug)]
pub struct EvalOptions {
    /// IOU thresholds replacing the 0.50:0.95 sweep (comma separated)
    #[arg(long, value_delimiter = ',')]
    iou: Option<Vec<f64>>,
    /// The three per-image detection caps (comma separated)
    #[arg(long, value_delimiter = ',')]
    max_dets: Option<Vec<usize>>,
    #[arg(long, value_enum, default_value = "box")]
    kernel: Kernel,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Kernel {
    Box,
    Mask,
}

impl EvalOptions {
    fn config(&self) -> Result<EvalConfig> {
        let mut cfg = EvalConfig::with_kernel(match self.kernel {
            Kernel::Box => IouKernel::Box,
            Kernel::Mask => IouKernel::Mask,
        });
        if let Some(t) = &self.iou {
            cfg.iou_thresholds = t.clone();
        }
        if let Some(m) = &self.max_dets {
            cfg.max_dets = m.clone();
        }
        cfg.check()?;
        Ok(cfg)
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum AreaName {
    All,
    Small,
    Medium,
    Large,
}

impl AreaName {
    fn name(self) -> &'static str {
        match self {
            AreaName::All => "all",
            AreaName::Small => "small",
            AreaName::Medium => "medium",
            AreaName::Large => "large",
        }
    }
}

fn per_class_csv(ev: &Evaluation) -> String {
    csv_text(
        &["category_id", "name", "ap", "ap50", "ap75", "ap_s", "ap_m", "ap_l"],
        ev.per_class().into_iter().map(|c| {
            vec![
                c.category_id.to_string(),
                c.name,
                fixed(c.ap),
                fixed(c.ap50),
                fixed(c.ap75),
                fixed(c.ap_small),
                fixed(c.ap_medium),
                fixed(c.ap_large),
            ]
        }),
    )
}

fn pr_csv(ev: &Evaluation) -> String {
    csv_text(
        &["threshold", "recall", "precision"],
        ev.pr_curve()
            .into_iter()
            .map(|p| vec![fixed(p.threshold), fixed(p.recall), fixed(p.precision)]),
    )
}

fn metrics_value(ev: &Evaluation, area: usize) -> Value {
    json!({
        "metrics": ev.metrics(),
        "ap_per_threshold": ev
            .config()
            .iou_thresholds
            .iter()
            .zip(ev.ap_per_threshold(area))
            .map(|(t, ap)| json!({"threshold": t, "ap": ap}))
            .collect::<Vec<_>>(),
        "per_class": ev.per_class(),
    })
}

#[derive(Args)]
pub struct EvalArgs {
    #[arg(long)]
    gt: PathBuf,
    #[arg(long)]
    dets: PathBuf,
    /// Report JSON; per-class and PR CSVs are written beside it
    #[arg(long)]
    out: Option<PathBuf>,
    /// Area range of the per-threshold AP list
    #[arg(long, value_enum, default_value = "all")]
    area_range: AreaName,
    #[command(flatten)]
    eval: EvalOptions,
}

pub fn eval(a: EvalArgs) -> Result<()> {
    let cfg = a.eval.config()?;
    let area = cfg.area_index(a.area_range.name()).context("area range missing from config")?;
    let mut manifest = RunManifest::new("eval", json!({"eval": cfg, "area_range": a.area_range.name()}), 0);
    manifest.input(&a.gt)?;
    manifest.input(&a.dets)?;
    let ds = load_ground_truth(&a.gt)?;
    let dets = load_detections(&a.dets, &ds)?;
    let ev = evaluate(&ds, &dets, &cfg)?;
    let mut report = metrics_value(&ev, area);
    report["detections"] = dets.len().into();
    emit(a.out.as_deref(), &manifest, |d| Ok(json_report(report, d)))?;
    if let Some(out) = &a.out {
        write_text(&sibling(out, "per_class.csv"), &per_class_csv(&ev))?;
        write_text(&sibling(out, "pr.csv"), &pr_csv(&ev))?;
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Aggregation {
    Confident,
    Frequent,
}

#[derive(Args)]
pub struct UpperboundArgs {
    #[arg(long)]
    gt: PathBuf,
    /// Classifier predictions (JSON Lines)
    #[arg(long)]
    cls: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2), default_value = "1")]
    strategy: u8,
    /// Sample manifest CSV (strategy 2)
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "confident")]
    mode: Aggregation,
    /// Replace every detection score by this constant
    #[arg(long)]
    confidence_override: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the upper-bound detections here
    #[arg(long)]
    dets_out: Option<PathBuf>,
    #[command(flatten)]
    eval: EvalOptions,
}

pub fn upperbound(a: UpperboundArgs) -> Result<()> {
    let cfg = a.eval.config()?;
    let mode = match a.mode {
        Aggregation::Confident => Strategy2Mode::MostConfidentBox,
        Aggregation::Frequent => Strategy2Mode::MostFrequentLabel,
    };
    let mut manifest = RunManifest::new(
        "upperbound",
        json!({"eval": cfg, "strategy": a.strategy, "mode": mode, "confidence_override": a.confidence_override}),
        0,
    );
    manifest.input(&a.gt)?;
    manifest.input(&a.cls)?;
    manifest.input_opt(a.manifest.as_deref())?;
    let ds = load_ground_truth(&a.gt)?;
    let cls = load_classifications(&a.cls, &ds)?;
    let (dets, labels) = if a.strategy == 1 {
        (build_uap_detections(&ds, &cls, a.confidence_override)?, cls)
    } else {
        let path = a.manifest.as_ref().context("--strategy 2 needs --manifest")?;
        let samples = SampleManifest::read(path)?;
        let mut dets = strategy2_aggregate(&ds, &samples, &cls, mode)?.into_vec();
        if let Some(c) = a.confidence_override {
            if !(0.0..=1.0).contains(&c) {
                bail!("--confidence-override must lie in [0, 1], got {c}");
            }
            dets.iter_mut().for_each(|d| d.score = c);
        }
        // aggregated labels, one per non-crowd annotation in id order
        let targets = ds.annotations().iter().filter(|x| !x.iscrowd);
        let labels = ClassificationSet::new(targets.zip(&dets).map(|(x, d)| ClassificationRecord {
            annotation_id: x.id,
            sample_index: None,
            label: d.category_id,
            score: d.score,
        }))?;
        (DetectionSet::new(dets), labels)
    };
    let ev = evaluate(&ds, &dets, &cfg)?;
    let accuracy = top1_accuracy(&labels, &ds);
    let uap: BTreeMap<u64, f64> = ev.per_class().iter().map(|c| (c.category_id, c.ap)).collect();
    let correlation = match accuracy_uap_correlation(&accuracy.per_class_accuracy(), &uap) {
        Ok(r) => serde_json::to_value(r)?,
        Err(e) => {
            log::warn!("no accuracy/UAP fit: {e}");
            Value::Null
        }
    };
    if let Some(p) = &a.dets_out {
        write_text(p, &dets.to_json())?;
    }
    let mut report = metrics_value(&ev, 0);
    report["accuracy"] = serde_json::to_value(&accuracy)?;
    report["correlation"] = correlation;
    emit(a.out.as_deref(), &manifest, |d| Ok(json_report(report, d)))?;
    if let Some(out) = &a.out {
        write_text(&sibling(out, "per_class.csv"), &per_class_csv(&ev))?;
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SampleModeArg {
    Boundary,
    Interior,
}

#[derive(Args)]
pub struct SampleArgs {
    #[arg(long)]
    gt: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    gamma: f64,
    #[arg(long, default_value_t = 4)]
    k: usize,
    /// Boundary boxes sit exactly at IOU gamma, interior ones anywhere above it
    #[arg(long, value_enum, default_value = "boundary")]
    sample_mode: SampleModeArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Sample manifest CSV
    #[arg(long)]
    out: Option<PathBuf>,
    /// Source images; with --crops-dir, one crop per sampled box is written
    #[arg(long, requires = "crops_dir")]
    images_dir: Option<PathBuf>,
    #[arg(long, requires = "images_dir")]
    crops_dir: Option<PathBuf>,
}

pub fn sample_boxes(a: SampleArgs) -> Result<()> {
    let mode = match a.sample_mode {
        SampleModeArg::Boundary => SampleMode::Boundary,
        SampleModeArg::Interior => SampleMode::Interior,
    };
    let spec = SamplerSpec::new(a.gamma, a.k, mode, a.seed)?;
    let mut manifest = RunManifest::new("sample-boxes", serde_json::to_value(spec)?, a.seed);
    manifest.input(&a.gt)?;
    let ds = load_ground_truth(&a.gt)?;
    let mut samples = sample_manifest(&ds, &spec)?;
    if let (Some(images), Some(crops)) = (&a.images_dir, &a.crops_dir) {
        write_sample_crops(&ds, &mut samples, &DirSource::new(images), &DirSink::new(crops))?;
    }
    emit(a.out.as_deref(), &manifest, |_| Ok(samples.to_csv()?))
}

fn write_sample_crops(
    ds: &Dataset,
    samples: &mut SampleManifest,
    source: &dyn ImageSource,
    sink: &dyn ImageSink,
) -> Result<()> {
    let mut current: Option<(u64, image::RgbImage)> = None;
    for row in &mut samples.rows {
        let ann = ds.annotation(row.annotation_id).context("sample refers to an unknown annotation")?;
        let img = ds.image(ann.image_id).context("annotation refers to an unknown image")?;
        if current.as_ref().map(|c| c.0) != Some(img.id) {
            current = Some((img.id, source.load(&img.file_name)?));
        }
        let pixels = &current.as_ref().expect("loaded above").1;
        match crop_pixels(pixels, &row.bbox()) {
            Some((crop, _, _)) => {
                let name = format!("{:012}_{}.png", row.annotation_id, row.sample_index);
                sink.store(&name, &crop)?;
                row.crop_path = name;
            }
            None => log::warn!(
                "sample {} of annotation {} lies outside its image",
                row.sample_index,
                row.annotation_id
            ),
        }
    }
    Ok(())
}

#[derive(Args)]
pub struct DiagnoseArgs {
    #[arg(long)]
    gt: PathBuf,
    #[arg(long)]
    dets: PathBuf,
    /// Stage CSV; a JSON with per-threshold detail is written beside it
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "all")]
    area_range: AreaName,
    /// Free-form model label copied into the report
    #[arg(long)]
    model: Option<String>,
    #[command(flatten)]
    eval: EvalOptions,
}

pub fn diagnose(a: DiagnoseArgs) -> Result<()> {
    let cfg = DiagnosisConfig {
        area_range: Some(a.area_range.name().to_string()),
        eval: a.eval.config()?,
        ..Default::default()
    };
    let mut manifest = RunManifest::new("diagnose", json!({"diagnosis": cfg, "model": a.model}), 0);
    manifest.input(&a.gt)?;
    manifest.input(&a.dets)?;
    let ds = load_ground_truth(&a.gt)?;
    let dets = load_detections(&a.dets, &ds)?;
    let report = run_diagnosis(&ds, &dets, &cfg)?;
    let percent = |v: f64| if v < 0.0 { fixed(v) } else { fixed(100.0 * v) };
    let csv = csv_text(
        &["stage", "map", "map50", "detections", "added", "removed", "moved"],
        report.stages.iter().map(|s| {
            vec![
                s.name.to_string(),
                percent(s.map),
                percent(s.map50),
                s.detections.to_string(),
                s.detections_added.to_string(),
                s.detections_removed.to_string(),
                s.detections_moved.to_string(),
            ]
        }),
    );
    emit(a.out.as_deref(), &manifest, |_| Ok(csv))?;
    if let Some(out) = &a.out {
        let detail = json!({
            "model": a.model,
            "area_range": a.area_range.name(),
            "stages": report.stages,
            "deltas": report.deltas(),
            "manifest_sha256": manifest.digest(),
        });
        write_json(&sibling(out, "stages.json"), &detail)?;
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, ValueEnum)]
#[value(rename_all = "snake_case")]
enum Kind {
    WhiteBg,
    NoiseBg,
    ObjectsOnly,
    Crop,
    CropResized,
    Blur,
    Vflip,
    Incongruent,
}

#[derive(Args)]
pub struct TransformArgs {
    #[arg(long)]
    gt: PathBuf,
    #[arg(long)]
    images_dir: PathBuf,
    /// Transform kind; `incongruent` needs --spec
    #[arg(long, value_enum, required_unless_present = "spec")]
    kind: Option<Kind>,
    /// Full transform spec as JSON (overrides --kind and its flags)
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Output directory: images plus annotations.json
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 300)]
    min_dim: u32,
    #[arg(long, default_value_t = 11)]
    blur_kernel: u32,
    #[arg(long)]
    blur_sigma: Option<f64>,
}

pub fn transform(a: TransformArgs) -> Result<()> {
    let spec: TransformSpec = match (&a.spec, a.kind) {
        (Some(p), _) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        (None, Some(k)) => match k {
            Kind::WhiteBg => TransformSpec::WhiteBg,
            Kind::NoiseBg => TransformSpec::NoiseBg { seed: a.seed },
            Kind::ObjectsOnly => TransformSpec::ObjectsOnly,
            Kind::Crop => TransformSpec::Crop,
            Kind::CropResized => TransformSpec::CropResized { min_dim: a.min_dim },
            Kind::Blur => TransformSpec::Blur { kernel: a.blur_kernel, sigma: a.blur_sigma },
            Kind::Vflip => TransformSpec::Vflip,
            Kind::Incongruent => bail!("--kind incongruent needs --spec with objects, backgrounds and placement"),
        },
        (None, None) => unreachable!("clap requires --kind or --spec"),
    };
    spec.check()?;
    let seed = match &spec {
        TransformSpec::NoiseBg { seed } => *seed,
        TransformSpec::Incongruent(p) => p.seed,
        _ => 0,
    };
    let mut manifest = RunManifest::new("transform", spec.metadata(), seed);
    manifest.input(&a.gt)?;
    manifest.input_opt(a.spec.as_deref())?;
    let ds = load_ground_truth(&a.gt)?;
    let out = transform_dataset(&ds, &DirSource::new(&a.images_dir), &DirSink::new(&a.out), &spec)?;
    for f in &out.failures {
        log::warn!("image {} ({}) skipped: {}", f.image_id, f.file_name, f.message);
    }
    let ann_path = a.out.join("annotations.json");
    let text = out.dataset.to_json();
    emit(Some(&ann_path), &manifest, |_| Ok(text))?;
    let summary = json!({
        "transform": out.metadata,
        "images": out.dataset.images().len(),
        "annotations": out.dataset.annotations().len(),
        "failures": out.failures,
        "bbox_fallback": out.bbox_fallback,
        "manifest_sha256": manifest.digest(),
    });
    write_json(&a.out.join("transform.json"), &summary)
}

fn parse_crop(s: &str) -> Result<CropSpec, String> {
    let (factor, mode) = s.split_once(':').ok_or("expected FACTOR:MODE, e.g. 2:object_context")?;
    let factor: f64 = factor.parse().map_err(|e| format!("bad factor {factor:?}: {e}"))?;
    let mode: CropMode =
        serde_json::from_value(Value::String(mode.to_string())).map_err(|_| format!("unknown crop mode {mode:?}"))?;
    CropSpec::new(factor, mode).map_err(|e| e.to_string())
}

fn parse_rgb(s: &str) -> Result<[u8; 3], String> {
    let v: Vec<u8> = s.split(',').map(|c| c.trim().parse::<u8>()).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    v.try_into().map_err(|_| "expected R,G,B".to_string())
}

#[derive(Args)]
pub struct ExportCropsArgs {
    #[arg(long)]
    gt: PathBuf,
    #[arg(long)]
    images_dir: PathBuf,
    /// Output directory; crops.csv lists every crop
    #[arg(long)]
    out: PathBuf,
    /// FACTOR:MODE with MODE one of object_only, object_context, context_only, whole_image
    #[arg(long = "crop", required = true, value_parser = parse_crop)]
    crops: Vec<CropSpec>,
    /// Fill colour of the object region for context_only, as R,G,B
    #[arg(long, value_parser = parse_rgb)]
    fill: Option<[u8; 3]>,
}

pub fn export_crops(mut a: ExportCropsArgs) -> Result<()> {
    if let Some(f) = &a.fill {
        a.crops.iter_mut().for_each(|c| c.fill = *f);
    }
    let mut manifest = RunManifest::new("export-crops", json!({"crops": a.crops}), 0);
    manifest.input(&a.gt)?;
    let ds = load_ground_truth(&a.gt)?;
    let export = export_context_crops(&ds, &DirSource::new(&a.images_dir), &a.crops, &DirSink::new(&a.out))?;
    for f in &export.failures {
        log::warn!("image {} ({}) skipped: {}", f.image_id, f.file_name, f.message);
    }
    if !export.skipped.is_empty() {
        log::warn!("{} crops empty after clamping", export.skipped.len());
    }
    let csv = export.manifest_csv()?;
    emit(Some(&a.out.join("crops.csv")), &manifest, |_| Ok(csv))
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ScaleArg {
    Linear,
    Log,
}

#[derive(Args)]
pub struct BoxmapArgs {
    #[arg(long)]
    gt: PathBuf,
    /// With detections the map is predicted minus ground truth
    #[arg(long)]
    dets: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    grid: usize,
    #[arg(long, value_enum, default_value = "linear")]
    scale: ScaleArg,
    /// Grid CSV
    #[arg(long)]
    out: Option<PathBuf>,
    /// Heatmap PNG
    #[arg(long)]
    png: Option<PathBuf>,
}

pub fn boxmap(a: BoxmapArgs) -> Result<()> {
    if a.grid == 0 {
        bail!("--grid must be at least 1");
    }
    let scale = match a.scale {
        ScaleArg::Linear => MapScale::Linear,
        ScaleArg::Log => MapScale::Log,
    };
    let mut manifest = RunManifest::new("boxmap", json!({"grid": a.grid, "scale": format!("{:?}", a.scale)}), 0);
    manifest.input(&a.gt)?;
    manifest.input_opt(a.dets.as_deref())?;
    let ds = load_ground_truth(&a.gt)?;
    let dims = |image_id: u64| {
        let img = ds.image(image_id).expect("records reference known images");
        (img.width, img.height)
    };
    let gt = box_distribution_map(
        ds.annotations().iter().map(|x| {
            let (w, h) = dims(x.image_id);
            (&x.bbox, w, h)
        }),
        a.grid,
    );
    let map = match &a.dets {
        Some(p) => {
            let dets = load_detections(p, &ds)?;
            let pred = box_distribution_map(
                dets.detections().iter().map(|d| {
                    let (w, h) = dims(d.image_id);
                    (&d.bbox, w, h)
                }),
                a.grid,
            );
            diff_map(&pred, &gt, scale)
        }
        None => gt.normalized().scaled(scale),
    };
    if let Some(p) = &a.png {
        if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent)?;
        }
        map.to_heatmap().save(p).with_context(|| format!("writing {}", p.display()))?;
    }
    emit(a.out.as_deref(), &manifest, |_| Ok(map.to_csv()))
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MaskTarget {
    Box,
    Rle,
}

#[derive(Args)]
pub struct MaskConvertArgs {
    #[arg(long)]
    gt: PathBuf,
    #[arg(long)]
    dets: PathBuf,
    /// box: replace each bbox by the mask's tight box; rle: re-encode masks as compressed RLE
    #[arg(long, value_enum)]
    to: MaskTarget,
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn mask_convert(a: MaskConvertArgs) -> Result<()> {
    let mut manifest = RunManifest::new("mask-convert", json!({"to": format!("{:?}", a.to).to_lowercase()}), 0);
    manifest.input(&a.gt)?;
    manifest.input(&a.dets)?;
    let ds = load_ground_truth(&a.gt)?;
    let mut dets = load_detections(&a.dets, &ds)?.into_vec();
    let mut no_mask = Vec::new();
    for (i, d) in dets.iter_mut().enumerate() {
        let img = ds.image(d.image_id).expect("validated on load");
        let Some(seg) = &d.segmentation else {
            no_mask.push(i as u64);
            continue;
        };
        match a.to {
            MaskTarget::Box => {
                d.bbox = mask_to_box(&decode_mask(seg, img.width, img.height)?)
                    .with_context(|| format!("detection {i}"))?
            }
            MaskTarget::Rle => d.segmentation = Some(SegMask::Rle(segmentation_to_rle(seg, img.width, img.height)?)),
        }
    }
    if !no_mask.is_empty() {
        return Err(detbound::Error::Validation {
            rule: "detection_without_segmentation".into(),
            ids: no_mask,
        }
        .into());
    }
    let text = DetectionSet::new(dets).to_json();
    emit(a.out.as_deref(), &manifest, |_| Ok(text))
}

#[derive(Args)]
pub struct ValidateArgs {
    #[arg(long)]
    gt: PathBuf,
    #[arg(long)]
    dets: Option<PathBuf>,
    #[arg(long)]
    cls: Option<PathBuf>,
}

pub fn validate(a: ValidateArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.gt).with_context(|| format!("reading {}", a.gt.display()))?;
    let ds = Dataset::parse(&text, &a.gt)?;
    let report = validate_dataset(&ds);
    let mut out = json!({
        "images": ds.images().len(),
        "categories": ds.categories().len(),
        "annotations": ds.annotations().len(),
        "crowd": ds.annotations().iter().filter(|x| x.iscrowd).count(),
        "report": report,
    });
    report.clone().into_result()?;
    if let Some(p) = &a.dets {
        out["detections"] = load_detections(p, &ds)?.len().into();
    }
    if let Some(p) = &a.cls {
        out["classifications"] = load_classifications(p, &ds)?.len().into();
    }
    print!("{}", to_fixed_json(&out));
    Ok(())
}

/// One-line JSON describing an error, with rule, ids and location when the
/// library supplies them.
pub fn error_json(e: &anyhow::Error) -> String {
    let mut v = json!({"error": format!("{e:#}")});
    if let Some(d) = e.chain().find_map(|c| c.downcast_ref::<detbound::Error>()) {
        match d {
            detbound::Error::Parse { path, offset, line, column, .. } => {
                v["kind"] = "parse".into();
                v["path"] = path.display().to_string().into();
                v["offset"] = (*offset).into();
                v["line"] = (*line).into();
                v["column"] = (*column).into();
            }
            detbound::Error::Validation { rule, ids } => {
                v["kind"] = "validation".into();
                v["rule"] = rule.clone().into();
                v["ids"] = ids.clone().into();
            }
            detbound::Error::Io { path, .. } => {
                v["kind"] = "io".into();
                v["path"] = path.display().to_string().into();
            }
            detbound::Error::Argument(_) => v["kind"] = "argument".into(),
            detbound::Error::Config(_) => v["kind"] = "config".into(),
            detbound::Error::Codec(_) => v["kind"] = "codec".into(),
            detbound::Error::Image { name, .. } => {
                v["kind"] = "image".into();
                v["path"] = name.clone().into();
            }
            detbound::Error::Csv(_) => v["kind"] = "csv".into(),
            detbound::Error::Json(_) => v["kind"] = "json".into(),
        }
    } else if e.chain().any(|c| c.is::<std::io::Error>()) {
        v["kind"] = "io".into();
    }
    v.to_string()
}
