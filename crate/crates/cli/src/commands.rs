use std::path::{Path, PathBuf};

use rayon::prelude::*;

use colorlearn::evaluation::{mean_error_curve, pixel_error_rate, threshold_grid, BASELINE_K};
use colorlearn::experiments::{ablation_ratio, random_weight_baseline, EvalItem};
use colorlearn::imagecore::{lab_to_rgb, load_rgb, rgb_to_lab, save_png, to_gray, LabImage};
use colorlearn::matching::Feature;
use colorlearn::pipeline::{assign_cluster, boundary_image, model_config, seed_image, PreparedPair};
use colorlearn::trainer::{load_model, save_model, train_model, ColorModel, TrainedModel, TrainingPair};
use colorlearn::Config;

use crate::error::{stage, CliError};
use crate::manifest::{self, Entry};

/// Upper end and step of the threshold axis of the error curve.
const CURVE_MAX: f64 = 30.0;
const CURVE_STEP: f64 = 0.5;

fn load_pair(e: &Entry) -> Result<TrainingPair, CliError> {
    let gt = load_rgb(&e.ground_truth).map_err(stage("image-load"))?;
    let reference = load_rgb(&e.reference).map_err(stage("image-load"))?;
    Ok(TrainingPair::from_rgb(&gt, &reference))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>, CliError> {
    csv::Writer::from_path(path).map_err(|e| CliError::input("output", format!("{}: {e}", path.display())))
}

fn csv_err(e: impl std::fmt::Display) -> CliError {
    CliError::runtime("output", e.to_string())
}

fn weight_header() -> Vec<&'static str> {
    Feature::ALL.iter().map(|f| f.name()).collect()
}

pub fn train(manifest_path: &Path, out: &Path, report: Option<&Path>, cfg: &Config) -> Result<TrainedModel, CliError> {
    let entries = manifest::read(manifest_path)?;
    let loaded: Vec<(usize, Result<TrainingPair, CliError>)> = entries.par_iter().map(|e| (e.line, load_pair(e))).collect();
    let mut pairs = Vec::new();
    for (line, r) in loaded {
        match r {
            Ok(p) => pairs.push(p),
            Err(e) => log::warn!("manifest line {line} skipped: {e}"),
        }
    }
    if pairs.is_empty() {
        return Err(CliError::input("manifest", "no readable training pairs"));
    }
    log::info!("training on {} pairs", pairs.len());
    let trained = train_model(&pairs, cfg).map_err(stage("training"))?;
    save_model(&trained.model, out).map_err(stage("model-save"))?;

    let table = training_table(&trained.model);
    print!("{table}");
    if let Some(path) = report {
        write_training_report(&trained.model, path)?;
    }
    Ok(trained)
}

/// One row per category: sample count, cluster center and learned weights.
pub fn training_table(model: &ColorModel) -> String {
    let mut s = format!(
        "{:>8} {:>7} | {:>7} {:>7} {:>7} {:>7} | {:>9} {:>7} {:>7} {:>7}\n",
        "category", "samples", "ASM", "CON", "CORRLN", "ENT", "intensity", "std", "surf", "gabor"
    );
    for (k, c) in model.clusters.iter().enumerate() {
        let g = c.center.to_array();
        let w = c.weights.as_array();
        s.push_str(&format!(
            "{:>8} {:>7} | {:>7.4} {:>7.4} {:>7.4} {:>7.4} | {:>9.4} {:>7.4} {:>7.4} {:>7.4}\n",
            k + 1,
            c.sample_count,
            g[0],
            g[1],
            g[2],
            g[3],
            w[0],
            w[1],
            w[2],
            w[3]
        ));
    }
    s
}

fn write_training_report(model: &ColorModel, path: &Path) -> Result<(), CliError> {
    let mut w = csv_writer(path)?;
    let mut header = vec!["category", "samples", "asm", "con", "corrln", "ent"];
    header.extend(weight_header());
    w.write_record(&header).map_err(csv_err)?;
    for (k, c) in model.clusters.iter().enumerate() {
        let mut row = vec![(k + 1).to_string(), c.sample_count.to_string()];
        row.extend(c.center.to_array().iter().map(|v| v.to_string()));
        row.extend(c.weights.as_array().iter().map(|v| v.to_string()));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)
}

fn load_model_checked(path: &Path) -> Result<ColorModel, CliError> {
    if !path.exists() {
        return Err(CliError::input("model-load", format!("{} does not exist", path.display())));
    }
    load_model(path).map_err(stage("model-load"))
}

/// Path next to `out` with `suffix` added to the file stem.
fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    out.with_file_name(format!("{stem}.{suffix}.png"))
}

pub struct ColorizeArgs<'a> {
    pub gray: &'a Path,
    pub reference: &'a Path,
    pub model: &'a Path,
    pub out: &'a Path,
}

pub fn colorize(args: &ColorizeArgs, cfg: &Config) -> Result<usize, CliError> {
    let model = load_model_checked(args.model)?;
    let gray = to_gray(&load_rgb(args.gray).map_err(stage("image-load"))?);
    let reference = rgb_to_lab(&load_rgb(args.reference).map_err(stage("image-load"))?);
    let cfg = model_config(&model, cfg);
    let cluster = assign_cluster(&gray, &model).map_err(stage("global-feature"))?;
    let w = model.clusters[cluster].weights;
    log::info!("cluster {cluster}, weights {:?}", w.as_array());
    let pair = PreparedPair::new(gray.clone(), reference, &cfg).map_err(stage("feature-extraction"))?;
    let out = pair.colorize(&w, &cfg).map_err(stage("colorization"))?;
    save_png(&lab_to_rgb(&out.image), args.out).map_err(stage("encode"))?;
    if cfg.dump_seeds {
        let img = seed_image(&gray, &pair.target.superpixels, &out.raw_seeds).map_err(stage("encode"))?;
        save_png(&lab_to_rgb(&img), sibling(args.out, "seeds")).map_err(stage("encode"))?;
    }
    if cfg.dump_superpixels {
        let img = boundary_image(&gray, &pair.target.superpixels).map_err(stage("encode"))?;
        save_png(&lab_to_rgb(&img), sibling(args.out, "superpixels")).map_err(stage("encode"))?;
    }
    Ok(cluster)
}

fn prepare_item(e: &Entry, model: &ColorModel, cfg: &Config) -> Result<EvalItem, CliError> {
    let p = load_pair(e)?;
    EvalItem::new(p.gray, p.ground_truth, p.reference, model, cfg).map_err(stage("feature-extraction"))
}

/// Prepared items in manifest order, with per-entry failures.
fn prepare_items(entries: &[Entry], model: &ColorModel, cfg: &Config) -> Vec<Result<EvalItem, CliError>> {
    entries.par_iter().map(|e| prepare_item(e, model, cfg)).collect()
}

struct PairResult {
    cluster: usize,
    mean_error: f64,
    error_rate: f64,
    pixel_error_rate: f64,
    image: LabImage,
}

fn evaluate_item(item: &EvalItem, cfg: &Config) -> Result<PairResult, CliError> {
    let m = item.seed_metrics(&item.weights, cfg.theta).map_err(stage("evaluation"))?;
    let out = item.pair.colorize(&item.weights, cfg).map_err(stage("colorization"))?;
    Ok(PairResult {
        cluster: item.cluster,
        mean_error: m.mean_error,
        error_rate: m.error_rate,
        pixel_error_rate: pixel_error_rate(&out.image, &item.ground_truth, cfg.jnd).map_err(stage("evaluation"))?,
        image: out.image,
    })
}

pub struct EvaluateSummary {
    pub evaluated: usize,
    pub failed: usize,
}

pub fn evaluate(manifest_path: &Path, model_path: &Path, out_dir: &Path, cfg: &Config) -> Result<EvaluateSummary, CliError> {
    let entries = manifest::read(manifest_path)?;
    let model = load_model_checked(model_path)?;
    let cfg = model_config(&model, cfg);
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::input("output", format!("{}: {e}", out_dir.display())))?;

    let items = prepare_items(&entries, &model, &cfg);
    let results: Vec<Result<PairResult, CliError>> = items
        .par_iter()
        .map(|it| it.as_ref().map_err(|e| CliError::runtime(e.stage, e.message.clone())).and_then(|it| evaluate_item(it, &cfg)))
        .collect();

    let mut w = csv_writer(&out_dir.join("matching_metrics.csv"))?;
    w.write_record(["line", "ground_truth", "cluster", "mean_error", "error_rate", "pixel_error_rate", "status"]).map_err(csv_err)?;
    for (e, r) in entries.iter().zip(&results) {
        let gt = e.ground_truth.display().to_string();
        match r {
            Ok(r) => w
                .write_record([
                    e.line.to_string(),
                    gt,
                    r.cluster.to_string(),
                    r.mean_error.to_string(),
                    r.error_rate.to_string(),
                    r.pixel_error_rate.to_string(),
                    "ok".into(),
                ])
                .map_err(csv_err)?,
            Err(err) => {
                log::warn!("manifest line {}: {err}", e.line);
                w.write_record([e.line.to_string(), gt, String::new(), String::new(), String::new(), String::new(), err.to_string()])
                    .map_err(csv_err)?
            }
        }
    }
    w.flush().map_err(csv_err)?;

    let good: Vec<(&EvalItem, &PairResult)> = items.iter().zip(&results).filter_map(|(i, r)| Some((i.as_ref().ok()?, r.as_ref().ok()?))).collect();
    let failed = entries.len() - good.len();
    if good.is_empty() {
        return Err(CliError::runtime("evaluation", "every pair failed"));
    }

    let thresholds = threshold_grid(CURVE_MAX, CURVE_STEP);
    let pairs: Vec<(&LabImage, &LabImage)> = good.iter().map(|(i, r)| (&r.image, &i.ground_truth)).collect();
    let curve = mean_error_curve(&pairs, &thresholds).map_err(stage("evaluation"))?;
    let mut w = csv_writer(&out_dir.join("mean_error_curve.csv"))?;
    w.write_record(["threshold", "mean_error_rate"]).map_err(csv_err)?;
    for (t, v) in thresholds.iter().zip(&curve) {
        w.write_record([t.to_string(), v.to_string()]).map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)?;

    let ok_items: Vec<EvalItem> = good.iter().map(|(i, _)| (*i).clone()).collect();
    let rows = random_weight_baseline(&ok_items, BASELINE_K, cfg.seed, cfg.theta).map_err(stage("evaluation"))?;
    let mut w = csv_writer(&out_dir.join("random_weight_baseline.csv"))?;
    let mut header = vec!["label"];
    header.extend(weight_header());
    header.extend(["avg_error", "avg_error_rate"]);
    w.write_record(&header).map_err(csv_err)?;
    for r in &rows {
        let mut row = vec![r.label.clone()];
        match r.weights {
            Some(wv) => row.extend(wv.as_array().iter().map(|v| v.to_string())),
            // per-cluster weights differ, so no single vector describes the row
            None => row.extend(std::iter::repeat_n(String::new(), 4)),
        }
        row.extend([r.metrics.avg_error.to_string(), r.metrics.avg_error_rate.to_string()]);
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)?;
    Ok(EvaluateSummary {
        evaluated: good.len(),
        failed,
    })
}

pub fn ablate(manifest_path: &Path, model_path: &Path, out: &Path, cfg: &Config) -> Result<usize, CliError> {
    let entries = manifest::read(manifest_path)?;
    let model = load_model_checked(model_path)?;
    let cfg = model_config(&model, cfg);
    let mut items = Vec::new();
    for (e, r) in entries.iter().zip(prepare_items(&entries, &model, &cfg)) {
        match r {
            Ok(it) => items.push(it),
            Err(err) => log::warn!("manifest line {} skipped: {err}", e.line),
        }
    }
    if items.is_empty() {
        return Err(CliError::runtime("ablation", "every pair failed"));
    }
    let points = ablation_ratio(&items, &cfg).map_err(stage("ablation"))?;
    let mut w = csv_writer(out)?;
    w.write_record(["feature", "weight", "ratio"]).map_err(csv_err)?;
    for p in &points {
        w.write_record([p.feature.to_string(), format!("{:.1}", p.weight), p.ratio.to_string()]).map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)?;
    Ok(items.len())
}
