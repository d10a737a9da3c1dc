//! Subcommand implementations. Each returns the text printed on success.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::manifest::OutputSet;
use super::{BenchArgs, CliError, DatasetArgs, EvalArgs, EvalFlags, GenGtArgs, SimulateArgs};
use crate::eval::{
    baseline_predict, dense_map_predictions, evaluate, evaluate_with_boxes, EvalConfig, GtBoxes,
    MetricsReport,
};
use crate::ingest::{
    parse_annotations, parse_dense_map, parse_kitti_tracking, parse_predictions, parse_scene,
    write_annotations, write_scene, IngestError, KittiConfig,
};
use crate::sim::{make_validation_suite, parse_scene_spec, simulate as run_sim, write_scene_spec, SceneSpec};
use crate::ttc::{annotate_sequence, GtMethod, Skip};
use crate::types::{DenseMiDMap, MiDAnnotation, PredictionRecord, TrackedSequence};

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e, false))
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool, CliError> {
    if jobs == 0 {
        return Err(CliError::usage("--jobs must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::new(super::ExitCode::Internal, "ThreadPool", e.to_string()))
}

fn sorted_files(dir: &Path, extension: &str) -> Result<Vec<PathBuf>, CliError> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::io(dir, e, false))?;
    let mut out = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| CliError::io(dir, e, false))?.path();
        if path.extension().is_some_and(|x| x == extension) {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Sequences of a KITTI tracking directory (`label_02/<seq>.txt` with a
/// matching `calib/<seq>.txt`), in sequence-name order, plus the number of
/// label records skipped.
pub fn load_kitti_dir(dir: &Path, kfps: f64) -> Result<(Vec<TrackedSequence>, Vec<PathBuf>, usize), CliError> {
    let labels = sorted_files(&dir.join("label_02"), "txt")?;
    let mut sequences = Vec::with_capacity(labels.len());
    let mut inputs = Vec::new();
    let mut skipped = 0;
    for label in labels {
        let id = stem(&label);
        let calib = dir.join("calib").join(format!("{id}.txt"));
        if !calib.is_file() {
            return Err(IngestError::MissingCalibration(format!(
                "no calibration file {} for sequence {id}",
                calib.display()
            ))
            .into());
        }
        let (seq, diag) = parse_kitti_tracking(
            &read_text(&label)?,
            &read_text(&calib)?,
            &KittiConfig::new(id, kfps),
        )
        .map_err(|e| with_file(e, &label))?;
        skipped += diag.skipped_records;
        sequences.push(seq);
        inputs.push(label);
        inputs.push(calib);
    }
    Ok((sequences, inputs, skipped))
}

fn with_file(e: IngestError, path: &Path) -> CliError {
    let mut err = CliError::from(e);
    err.message = format!("{}: {}", path.display(), err.message);
    err
}

pub fn load_scene_files(paths: &[PathBuf]) -> Result<Vec<TrackedSequence>, CliError> {
    paths
        .iter()
        .map(|p| parse_scene(&read_text(p)?).map_err(|e| with_file(e, p)))
        .collect()
}

/// Every `<frame>.omid` map in `dir`.
pub fn load_dense_map_dir(dir: &Path) -> Result<Vec<DenseMiDMap>, CliError> {
    sorted_files(dir, "omid")?
        .into_iter()
        .map(|path| {
            let frame: u32 = stem(&path).parse().map_err(|_| {
                CliError::new(
                    super::ExitCode::Parse,
                    "MalformedBinary",
                    format!("{}: file name is not <frame index>.omid", path.display()),
                )
            })?;
            let bytes = std::fs::read(&path).map_err(|e| CliError::io(&path, e, false))?;
            parse_dense_map(&bytes, frame).map_err(|e| with_file(e, &path))
        })
        .collect()
}

fn unique_ids<'a>(ids: impl IntoIterator<Item = &'a str>) -> Result<(), CliError> {
    let mut seen = HashSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(CliError::config(format!("sequence id {id:?} appears twice")));
        }
    }
    Ok(())
}

struct Dataset {
    sequences: Vec<TrackedSequence>,
    inputs: Vec<PathBuf>,
    skipped_records: usize,
}

fn load_dataset(d: &DatasetArgs, config: &mut BTreeMap<String, String>) -> Result<Dataset, CliError> {
    let ds = match (&d.kitti, d.scene.is_empty()) {
        (Some(_), false) => return Err(CliError::usage("use either --kitti or --scene, not both")),
        (None, true) => return Err(CliError::usage("no dataset: pass --kitti DIR or --scene FILE")),
        (Some(dir), true) => {
            let kfps = d
                .kfps
                .ok_or_else(|| CliError::usage("--kfps is required with --kitti"))?;
            if !(kfps > 0.0 && kfps.is_finite()) {
                return Err(CliError::config(format!("--kfps {kfps} must be > 0")));
            }
            config.insert("kfps".into(), kfps.to_string());
            let (sequences, inputs, skipped_records) = load_kitti_dir(dir, kfps)?;
            Dataset {
                sequences,
                inputs,
                skipped_records,
            }
        }
        (None, false) => {
            if d.kfps.is_some() {
                return Err(CliError::usage("--kfps applies to --kitti; scene files carry their own"));
            }
            Dataset {
                sequences: load_scene_files(&d.scene)?,
                inputs: d.scene.clone(),
                skipped_records: 0,
            }
        }
    };
    unique_ids(ds.sequences.iter().map(|s| s.sequence_id()))?;
    Ok(ds)
}

fn eval_config_entries(flags: &EvalFlags, cfg: &EvalConfig, config: &mut BTreeMap<String, String>) {
    config.insert(
        "categories".into(),
        cfg.categories.iter().cloned().collect::<Vec<_>>().join(","),
    );
    config.insert("risk_band".into(), flags.risk_band.to_string());
    config.insert("match_mode".into(), cfg.match_mode.to_string());
    config.insert("missing_policy".into(), cfg.missing_policy.as_str().into());
}

fn skip_summary(skips: &[(String, Skip)]) -> String {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for (_, s) in skips {
        *counts.entry(s.reason.tag()).or_default() += 1;
    }
    counts
        .iter()
        .map(|(tag, n)| format!("{tag} {n}"))
        .collect::<Vec<_>>()
        .join(", ")
}

pub(super) fn gen_gt(a: &GenGtArgs) -> Result<String, CliError> {
    let mut config = BTreeMap::new();
    config.insert("method".into(), a.method.to_string());
    config.insert("jobs".into(), a.jobs.to_string());
    let ds = load_dataset(&a.dataset, &mut config)?;
    let outcomes: Vec<_> = pool(a.jobs)?.install(|| {
        ds.sequences
            .par_iter()
            .map(|s| annotate_sequence(s, a.method))
            .collect()
    });
    let mut annotations = Vec::new();
    let mut skips = Vec::new();
    for (seq, outcome) in ds.sequences.iter().zip(outcomes) {
        annotations.extend(outcome.annotations);
        skips.extend(outcome.skipped.into_iter().map(|s| (seq.sequence_id().to_string(), s)));
    }
    let mut skip_text = String::from("# sequence\tframe\ttrack\treason\tdetail\n");
    for (seq, s) in &skips {
        let _ = writeln!(skip_text, "{seq}\t{}\t{}\t{}\t{}", s.frame_index, s.track_id, s.reason.tag(), s.reason);
    }
    let mut out = OutputSet::default();
    out.add("annotations.txt", write_annotations(&annotations));
    out.add("skipped.tsv", skip_text);
    let digest = out.write(&a.out, "gen-gt", &ds.inputs, config)?;

    let mut msg = format!(
        "gen-gt: {} annotations ({}) from {} sequence(s)\n",
        annotations.len(),
        a.method,
        ds.sequences.len()
    );
    if ds.skipped_records > 0 {
        let _ = writeln!(msg, "label records skipped while parsing: {}", ds.skipped_records);
    }
    if !skips.is_empty() {
        let _ = writeln!(msg, "objects skipped: {} ({})", skips.len(), skip_summary(&skips));
    }
    let _ = writeln!(msg, "output digest {digest}");
    Ok(msg)
}

pub(super) fn simulate(a: &SimulateArgs) -> Result<String, CliError> {
    let mut config = BTreeMap::new();
    config.insert("jobs".into(), a.jobs.to_string());
    let specs: Vec<SceneSpec> = match (a.suite, a.spec.is_empty()) {
        (Some(_), false) => return Err(CliError::usage("use either --spec or --suite, not both")),
        (None, true) => return Err(CliError::usage("nothing to simulate: pass --spec FILE or --suite SEED")),
        (Some(seed), true) => {
            config.insert("suite".into(), seed.to_string());
            let mut specs = make_validation_suite(seed);
            if let Some(f) = a.family {
                config.insert("family".into(), f.as_str().into());
                specs.retain(|s| s.family == f);
            }
            specs
        }
        (None, false) => {
            if a.family.is_some() {
                return Err(CliError::usage("--family applies to --suite"));
            }
            a.spec
                .iter()
                .map(|p| parse_scene_spec(&read_text(p)?).map_err(|e| with_file(e, p)))
                .collect::<Result<_, _>>()?
        }
    };
    unique_ids(specs.iter().map(|s| s.sequence_id.as_str()))?;
    let results: Vec<_> = pool(a.jobs)?.install(|| specs.par_iter().map(run_sim).collect());
    let mut out = OutputSet::default();
    let mut exact = Vec::new();
    for (spec, result) in specs.iter().zip(results) {
        let sim = result.map_err(|e| {
            let mut err = CliError::from(e);
            err.message = format!("{}: {}", spec.sequence_id, err.message);
            err
        })?;
        out.add(format!("scenes/{}.json", spec.sequence_id), write_scene(&sim.sequence));
        out.add(format!("specs/{}.json", spec.sequence_id), write_scene_spec(spec));
        exact.extend(sim.exact);
    }
    out.add("exact.txt", write_annotations(&exact));
    let digest = out.write(&a.out, "simulate", &a.spec, config)?;
    Ok(format!(
        "simulate: {} scene(s), {} exact annotations\noutput digest {digest}\n",
        specs.len(),
        exact.len()
    ))
}

fn single_method(annotations: Vec<MiDAnnotation>) -> Result<Vec<MiDAnnotation>, CliError> {
    let methods: BTreeSet<_> = annotations.iter().map(|a| a.method()).collect();
    if methods.len() > 1 {
        let names: Vec<_> = methods.iter().map(|m| m.as_str()).collect();
        return Err(CliError::config(format!(
            "annotations mix methods ({}); select one with --method",
            names.join(", ")
        )));
    }
    Ok(annotations)
}

pub(super) fn eval(a: &EvalArgs) -> Result<String, CliError> {
    let cfg = a.flags.config()?;
    let mut config = BTreeMap::new();
    eval_config_entries(&a.flags, &cfg, &mut config);
    let mut inputs = vec![a.annotations.clone()];
    let mut annotations =
        parse_annotations(&read_text(&a.annotations)?).map_err(|e| with_file(e, &a.annotations))?;
    if let Some(m) = a.method {
        config.insert("method".into(), m.to_string());
        annotations.retain(|x| x.method() == m);
    }
    let annotations = single_method(annotations)?;
    let predictions: Vec<PredictionRecord> = match (&a.predictions, &a.dense_maps) {
        (Some(p), None) => {
            inputs.push(p.clone());
            parse_predictions(&read_text(p)?).map_err(|e| with_file(e, p))?.0
        }
        (None, Some(dir)) => {
            inputs.push(dir.clone());
            config.insert("source".into(), "dense-maps".into());
            dense_map_predictions(&load_dense_map_dir(dir)?, &annotations)
        }
        _ => return Err(CliError::usage("pass exactly one of --predictions or --dense-maps")),
    };
    let report = match &a.gt_scene {
        Some(path) => {
            inputs.push(path.clone());
            let seq = parse_scene(&read_text(path)?).map_err(|e| with_file(e, path))?;
            evaluate_with_boxes(&predictions, &annotations, &GtBoxes::from_sequence(&seq), &cfg)?
        }
        None => evaluate(&predictions, &annotations, &cfg)?,
    };
    let table = report.to_table();
    let mut out = OutputSet::default();
    out.add("report.txt", report.to_record());
    out.add("table.txt", table.clone());
    let digest = out.write(&a.out, "eval", &inputs, config)?;
    Ok(format!("{table}output digest {digest}\n"))
}

/// A named method's merged report.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodReport {
    pub name: String,
    pub report: MetricsReport,
}

/// Best first: ascending oMiD, methods without matches last, then by name.
pub fn rank_reports(reports: &[MethodReport]) -> Vec<&MethodReport> {
    let mut ranked: Vec<&MethodReport> = reports.iter().collect();
    ranked.sort_by(|a, b| {
        let key = |r: &MethodReport| r.report.o_mid().unwrap_or(f64::INFINITY);
        key(a).total_cmp(&key(b)).then_with(|| a.name.cmp(&b.name))
    });
    ranked
}

fn ranking_table(reports: &[MethodReport]) -> String {
    let opt = |v: Option<f64>, p: usize| v.map_or_else(|| "-".to_string(), |x| format!("{x:.p$}"));
    let mut t = format!(
        "{:<5} {:<28} {:>8} {:>10} {:>10} {:>9} {:>8}\n",
        "rank", "method", "matched", "oMiD", "oMiD+", "risk_acc", "missing"
    );
    for (i, m) in rank_reports(reports).into_iter().enumerate() {
        let o = &m.report.overall;
        let _ = writeln!(
            t,
            "{:<5} {:<28} {:>8} {:>10} {:>10} {:>9} {:>8}",
            i + 1,
            m.name,
            o.n_matched,
            opt(o.o_mid(), 2),
            opt(o.o_mid_plus(), 2),
            opt(o.risk_accuracy(), 4),
            o.n_missing_pred
        );
    }
    t
}

enum Method {
    Baseline(crate::eval::BaselineKind),
    File(Vec<PredictionRecord>),
}

pub(super) fn bench(a: &BenchArgs) -> Result<String, CliError> {
    if a.baselines.is_empty() && a.predictions.is_empty() {
        return Err(CliError::usage("no methods: pass --baselines and/or --predictions"));
    }
    let cfg = a.flags.config()?;
    let mut config = BTreeMap::new();
    eval_config_entries(&a.flags, &cfg, &mut config);
    config.insert("jobs".into(), a.jobs.to_string());

    let have_files = a.dataset.kitti.is_some() || !a.dataset.scene.is_empty();
    let (sequences, mut inputs, exact): (Vec<TrackedSequence>, Vec<PathBuf>, Option<Vec<Vec<MiDAnnotation>>>) =
        match (a.suite, have_files) {
            (Some(_), true) => return Err(CliError::usage("use either --suite or a dataset, not both")),
            (Some(seed), false) => {
                if a.dataset.kfps.is_some() {
                    return Err(CliError::usage("--kfps applies to --kitti"));
                }
                config.insert("suite".into(), seed.to_string());
                let mut specs = make_validation_suite(seed);
                if let Some(f) = a.family {
                    config.insert("family".into(), f.as_str().into());
                    specs.retain(|s| s.family == f);
                }
                let sims: Vec<_> = pool(a.jobs)?.install(|| specs.par_iter().map(run_sim).collect());
                let mut seqs = Vec::with_capacity(sims.len());
                let mut gts = Vec::with_capacity(sims.len());
                for sim in sims {
                    let sim = sim?;
                    seqs.push(sim.sequence);
                    gts.push(sim.exact);
                }
                (seqs, Vec::new(), Some(gts))
            }
            (None, _) => {
                if a.family.is_some() {
                    return Err(CliError::usage("--family applies to --suite"));
                }
                let ds = load_dataset(&a.dataset, &mut config)?;
                (ds.sequences, ds.inputs, None)
            }
        };
    let gt_method = match (&exact, a.method) {
        (_, Some(m)) => Some(m),
        (Some(_), None) => None,
        (None, None) => Some(GtMethod::Tracks3D),
    };
    config.insert(
        "gt".into(),
        gt_method.map_or("simulator-exact".to_string(), |m| m.to_string()),
    );

    let mut methods: Vec<(String, Method)> = Vec::new();
    for &k in &a.baselines {
        methods.push((k.as_str().to_string(), Method::Baseline(k)));
    }
    if !a.predictions.is_empty() && sequences.len() != 1 {
        return Err(CliError::config(format!(
            "prediction files carry no sequence id; the dataset has {} sequences, expected 1",
            sequences.len()
        )));
    }
    for p in &a.predictions {
        inputs.push(p.clone());
        let records = parse_predictions(&read_text(p)?).map_err(|e| with_file(e, p))?.0;
        methods.push((stem(p), Method::File(records)));
    }
    let names: Vec<&str> = methods.iter().map(|(n, _)| n.as_str()).collect();
    config.insert("methods".into(), names.join(","));
    if names.iter().collect::<HashSet<_>>().len() != names.len() {
        return Err(CliError::usage(format!("method names repeat: {}", names.join(", "))));
    }

    let per_sequence: Vec<Result<(Vec<MiDAnnotation>, Vec<MetricsReport>), CliError>> = pool(a.jobs)?.install(|| {
        sequences
            .par_iter()
            .enumerate()
            .map(|(i, seq)| {
                let gt = match gt_method {
                    Some(m) => annotate_sequence(seq, m).annotations,
                    None => exact.as_ref().expect("suite ground truth")[i].clone(),
                };
                let boxes = GtBoxes::from_sequence(seq);
                let reports = methods
                    .iter()
                    .map(|(_, m)| {
                        let preds = match m {
                            Method::Baseline(k) => baseline_predict(seq, *k).predictions,
                            Method::File(r) => r.clone(),
                        };
                        evaluate_with_boxes(&preds, &gt, &boxes, &cfg).map_err(CliError::from)
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Ok((gt, reports))
            })
            .collect()
    });

    let mut merged: Vec<MethodReport> = methods
        .iter()
        .map(|(n, _)| MethodReport {
            name: n.clone(),
            report: MetricsReport::for_categories(&cfg.categories),
        })
        .collect();
    let mut all_gt = Vec::new();
    for result in per_sequence {
        let (gt, reports) = result?;
        all_gt.extend(gt);
        for (m, r) in merged.iter_mut().zip(&reports) {
            m.report.merge(r);
        }
    }
    let table = ranking_table(&merged);
    let mut out = OutputSet::default();
    for m in &merged {
        out.add(format!("reports/{}.txt", m.name), m.report.to_record());
    }
    out.add("ranking.txt", table.clone());
    out.add("gt.txt", write_annotations(&all_gt));
    let digest = out.write(&a.out, "bench", &inputs, config)?;
    Ok(format!(
        "bench: {} method(s) over {} sequence(s), {} ground-truth objects\n{table}output digest {digest}\n",
        merged.len(),
        sequences.len(),
        all_gt.len()
    ))
}
