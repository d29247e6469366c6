use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::Serialize;

use seizure_core::dsp::{BandSet, BAND_COUNT};
use seizure_core::eval::{
    feature_class_stats, histograms_to_csv, one_vs_rest, patient_specific_split, relabel_onset_window, EvalReport,
    ScoredSet,
};
use seizure_core::features::{normalize_patterns, FeatureFamily, PatternSet};
use seizure_core::ingest::{load_labels, parse_edf_with, write_edf, AnnotationSet, Interval, Recording, SeizureClass};
use seizure_core::nn::{input_sensitivity, load_model, save_model, SavedModel};
use seizure_core::pipeline::{
    cross_validate, extract_patterns, patterns_to_tensor, score_patterns, synthesize_cohort, train_detector,
};

use crate::config::PipelineConfig;
use crate::error::CliError;

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))?;
    info!("wrote {}", path.display());
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("report types serialize");
    text.push('\n');
    write_file(path, text)
}

fn read_patterns(path: &Path) -> Result<PatternSet, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    PatternSet::from_bytes(&bytes).map_err(|e| CliError::format(path, e))
}

fn read_model(path: &Path) -> Result<SavedModel, CliError> {
    if !path.exists() {
        return Err(CliError::io(path, std::io::ErrorKind::NotFound.into()));
    }
    load_model(path).map_err(|e| CliError::format(path, e))
}

/// Narrows `set` to `families` when it holds more.
fn with_families(set: PatternSet, families: &[FeatureFamily]) -> Result<PatternSet, CliError> {
    if set.families() == families {
        return Ok(set);
    }
    Ok(set.select_families(families)?)
}

fn seizure_labels(set: &PatternSet) -> Vec<bool> {
    set.metas().iter().map(|m| m.class.is_seizure()).collect()
}

fn scored(set: &PatternSet, scores: Vec<f64>, labels: Vec<bool>) -> Result<ScoredSet, CliError> {
    let ids = set.metas().iter().map(|m| m.patient_id.clone()).collect();
    Ok(ScoredSet::new(ids, scores, labels)?)
}

// synth ---------------------------------------------------------------------

pub fn synth(cfg: &PipelineConfig) -> Result<(), CliError> {
    let cohort = synthesize_cohort(&cfg.cohort())?;
    let dir = cfg.paths.recordings();
    let mut labels = AnnotationSet::new();
    let mut files = Vec::with_capacity(cohort.len());
    for (rec, ann) in &cohort {
        let id = rec.patient_id();
        let intervals = ann.intervals(id);
        if intervals.is_empty() {
            // a whole-recording background row marks the patient as labelled
            let all = Interval {
                start_s: 0.0,
                end_s: rec.duration_s(),
                class: SeizureClass::Background,
            };
            labels.insert(id, all).expect("fresh patient");
        }
        for iv in intervals {
            labels.insert(id, *iv).expect("generator intervals do not overlap");
        }
        let bytes = write_edf(rec).map_err(|e| CliError::Config(format!("cannot encode {id}: {e}")))?;
        files.push((dir.join(format!("{id}.edf")), bytes));
    }
    for (path, bytes) in &files {
        write_file(path, bytes)?;
    }
    write_file(&cfg.paths.labels(), labels.to_csv())?;
    let seizures: usize = cohort.iter().map(|(r, a)| a.intervals(r.patient_id()).len()).sum();
    println!(
        "synth: {} recordings ({} seizures) in {}, labels in {}",
        files.len(),
        seizures,
        dir.display(),
        cfg.paths.labels().display()
    );
    Ok(())
}

// extract -------------------------------------------------------------------

#[derive(Debug, Serialize)]
struct ExtractSummary {
    recordings: usize,
    patterns: usize,
    seizure_patterns: usize,
    rows: usize,
    cols: usize,
    families: Vec<FeatureFamily>,
    /// Recordings without a label entry.
    skipped: Vec<String>,
}

fn edf_files(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| CliError::io(dir, e))?.path();
        if path.extension().is_some_and(|x| x.eq_ignore_ascii_case("edf")) {
            files.push(path);
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(CliError::Config(format!("no .edf recordings in {}", dir.display())));
    }
    Ok(files)
}

pub fn extract(cfg: &PipelineConfig) -> Result<(), CliError> {
    let files = edf_files(&cfg.paths.recordings())?;
    let labels_path = cfg.paths.labels();
    let text = fs::read_to_string(&labels_path).map_err(|e| CliError::io(&labels_path, e))?;
    let labels = load_labels(&text).map_err(|e| CliError::format(&labels_path, e))?;

    let mut recordings: Vec<Recording> = Vec::with_capacity(files.len());
    for path in &files {
        let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
        recordings.push(parse_edf_with(&bytes, cfg.features.rate_mode()).map_err(|e| CliError::format(path, e))?);
    }

    let mut set: Option<PatternSet> = None;
    let mut skipped = Vec::new();
    for (path, rec) in files.iter().zip(&recordings) {
        if !labels.contains_patient(rec.patient_id()) {
            warn!("{}: no labels for patient {:?}; skipped", path.display(), rec.patient_id());
            skipped.push(rec.patient_id().to_string());
            continue;
        }
        let part = extract_patterns(rec, &labels, &cfg.features)?;
        info!("{}: {} patterns", path.display(), part.len());
        match &mut set {
            None => set = Some(part),
            Some(s) => s.extend_from(&part)?,
        }
    }
    let Some(set) = set else {
        return Err(CliError::Config("no recording has labels".into()));
    };

    let out = cfg.paths.patterns();
    write_file(&out, set.to_bytes())?;
    let summary = ExtractSummary {
        recordings: files.len() - skipped.len(),
        patterns: set.len(),
        seizure_patterns: seizure_labels(&set).iter().filter(|&&l| l).count(),
        rows: set.rows(),
        cols: set.cols(),
        families: set.families().to_vec(),
        skipped,
    };
    write_json(&cfg.paths.out.join("extract_summary.json"), &summary)?;
    println!(
        "extract: {} patterns of {}x{} from {} recordings ({} skipped) -> {}",
        summary.patterns,
        summary.rows,
        summary.cols,
        summary.recordings,
        summary.skipped.len(),
        out.display()
    );
    Ok(())
}

// train ---------------------------------------------------------------------

fn training_set(cfg: &PipelineConfig, path: &Path) -> Result<(PatternSet, Vec<bool>), CliError> {
    let set = with_families(read_patterns(path)?, &cfg.features.families)?;
    let labels = seizure_labels(&set);
    let positives = labels.iter().filter(|&&l| l).count();
    if positives == 0 || positives == labels.len() {
        return Err(CliError::Config(format!(
            "{}: training needs both classes, got {positives} seizure and {} background patterns",
            path.display(),
            labels.len() - positives
        )));
    }
    Ok((set, labels))
}

/// Where the one-vs-rest model for `class` sits next to the main model:
/// `model.json` -> `model.type3.json`.
pub fn type_model_path(model: &Path, class: SeizureClass) -> PathBuf {
    let stem = model.file_stem().and_then(|s| s.to_str()).unwrap_or("model");
    model.with_file_name(format!("{stem}.type{}.json", class.code()))
}

pub fn train(cfg: &PipelineConfig, cv: bool, per_type: bool) -> Result<(), CliError> {
    let detector = cfg.detector()?;
    let (set, labels) = training_set(cfg, &cfg.paths.patterns())?;
    if cv {
        let report = cross_validate(&set, &labels, cfg.eval.folds, &detector)?;
        for fold in &report.folds {
            match fold.auc {
                Some(a) => println!("fold {}: AUC {a:.4}", fold.fold),
                None => println!("fold {}: AUC n/a (held-out patients lack a class)", fold.fold),
            }
        }
        println!("mean AUC {:.4}", report.mean_auc);
        return write_json(&cfg.paths.out.join("cv_report.json"), &report);
    }
    let (model, history) = train_detector(&set, &labels, &detector)?;
    // one-vs-rest networks, trained before anything is written
    let mut type_models = Vec::new();
    if per_type {
        for class in seizure_types(&set) {
            let l = one_vs_rest(set.metas(), class)?;
            let (m, _) = train_detector(&set, &l, &detector)?;
            type_models.push((class, m));
        }
    }
    let mut csv = String::from("epoch,train_loss,validation_loss\n");
    for e in &history.epochs {
        let v = e.validation_loss.map(|v| v.to_string()).unwrap_or_default();
        let _ = writeln!(csv, "{},{},{}", e.epoch, e.train_loss, v);
    }
    let path = cfg.paths.model();
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    save_model(&model, &path).map_err(|e| CliError::format(&path, e))?;
    write_file(&cfg.paths.out.join("loss_history.csv"), csv)?;
    for (class, m) in &type_models {
        let p = type_model_path(&path, *class);
        save_model(m, &p).map_err(|e| CliError::format(&p, e))?;
        println!("train: {} vs rest -> {}", class.name(), p.display());
    }
    println!(
        "train: {} on {} patterns, {} epochs (best {}) -> {}",
        model.architecture,
        set.len(),
        history.epochs.len(),
        history.best_epoch,
        path.display()
    );
    Ok(())
}

// eval ----------------------------------------------------------------------

fn seizure_types(set: &PatternSet) -> Vec<SeizureClass> {
    let mut present: Vec<SeizureClass> = set.metas().iter().map(|m| m.class).filter(|c| c.is_seizure()).collect();
    present.sort();
    present.dedup();
    present
}

fn report(name: &str, set: &PatternSet, scores: &[f64], labels: Vec<bool>) -> Result<Option<EvalReport>, CliError> {
    match EvalReport::from_scores(name, &scored(set, scores.to_vec(), labels)?) {
        Ok((r, _)) => Ok(Some(r)),
        Err(e) => {
            warn!("{name}: {e}; report skipped");
            Ok(None)
        }
    }
}

pub fn eval(cfg: &PipelineConfig) -> Result<(), CliError> {
    let model_path = cfg.paths.model();
    let model = read_model(&model_path)?;
    let set = with_families(read_patterns(&cfg.paths.patterns())?, &model.feature_families)?;
    let train_set = match cfg.eval.patient_specific {
        Some(_) => {
            let Some(path) = &cfg.paths.train_patterns else {
                return Err(CliError::Config(
                    "the patient-specific subtask needs the training patterns (paths.train_patterns)".into(),
                ));
            };
            Some(training_set(cfg, path)?.0)
        }
        None => None,
    };

    let scores = score_patterns(&model, &set)?;
    let labels = seizure_labels(&set);
    let (mut overall, curve) = EvalReport::from_scores("all", &scored(&set, scores.clone(), labels.clone())?)?;

    if cfg.eval.per_type {
        for class in seizure_types(&set) {
            let l = one_vs_rest(set.metas(), class)?;
            let path = type_model_path(&model_path, class);
            let type_scores = if path.exists() {
                let m = read_model(&path)?;
                if m.feature_families != model.feature_families {
                    return Err(CliError::Config(format!(
                        "{} was trained on other feature families than {}",
                        path.display(),
                        model_path.display()
                    )));
                }
                score_patterns(&m, &set)?
            } else {
                warn!(
                    "{}: no {} model, scoring with the all-seizure detector",
                    class.name(),
                    path.display()
                );
                scores.clone()
            };
            overall.per_type.extend(report(class.name(), &set, &type_scores, l)?);
        }
    }
    if let Some(w) = cfg.eval.onset_window {
        let l = relabel_onset_window(set.metas(), &labels, w)?;
        overall.subtasks.extend(report(&format!("onset_window_{w}"), &set, &scores, l)?);
    }
    if let (Some(fraction), Some(train_set)) = (cfg.eval.patient_specific, train_set) {
        let (augment, rest) = patient_specific_split(set.metas(), fraction)?;
        let test = set.subset(&rest);
        let test_labels = seizure_labels(&test);
        let base_scores: Vec<f64> = rest.iter().map(|&i| scores[i]).collect();
        overall
            .subtasks
            .extend(report("patient_specific_baseline", &test, &base_scores, test_labels.clone())?);
        let mut augmented = train_set;
        augmented.extend_from(&set.subset(&augment))?;
        let (specific, _) = train_detector(&augmented, &seizure_labels(&augmented), &cfg.detector()?)?;
        let specific_scores = score_patterns(&specific, &test)?;
        overall
            .subtasks
            .extend(report("patient_specific", &test, &specific_scores, test_labels)?);
    }

    write_json(&cfg.paths.out.join("eval_report.json"), &overall)?;
    write_file(&cfg.paths.out.join("roc.csv"), curve.to_csv())?;
    println!(
        "eval: AUC {:.4}; at the optimal cutoff {:.4}: Se {:.4}, Sp {:.4}",
        overall.auc, overall.threshold, overall.sensitivity, overall.specificity
    );
    for r in overall.per_type.iter().chain(&overall.subtasks) {
        println!("  {}: AUC {:.4}, Se {:.4}, Sp {:.4}", r.name, r.auc, r.sensitivity, r.specificity);
    }
    Ok(())
}

// sensitivity ---------------------------------------------------------------

pub fn sensitivity(cfg: &PipelineConfig) -> Result<(), CliError> {
    let model = read_model(&cfg.paths.model())?;
    let set = with_families(read_patterns(&cfg.paths.patterns())?, &model.feature_families)?;
    if set.is_empty() {
        return Err(CliError::Config("evaluation set is empty".into()));
    }
    let [h, w, _] = model.network.input_shape();
    if (set.rows(), set.cols()) != (h, w) {
        return Err(CliError::Config(format!(
            "model expects {h}x{w} patterns, got {}x{}",
            set.rows(),
            set.cols()
        )));
    }
    let (normalized, _) = normalize_patterns(set.clone(), Some(&model.normalization))?;
    let x = patterns_to_tensor(&normalized)?;
    let y: Vec<usize> = seizure_labels(&set).into_iter().map(usize::from).collect();
    let map = input_sensitivity(&model.network, &x, &y)?;

    let n = set.n_channels();
    let mut csv = String::new();
    let _ = writeln!(csv, "# mean squared loss gradient per pattern entry, {} patterns", set.len());
    let _ = writeln!(csv, "# rows: {BAND_COUNT} band blocks of {n} channels, band-major");
    let row_names: Vec<String> = (0..set.rows()).map(|r| format!("{}:ch{}", BandSet::name(r / n).replace(' ', "_"), r % n)).collect();
    let _ = writeln!(csv, "# row labels: {}", row_names.join(","));
    let col_names: Vec<String> = (0..set.cols())
        .map(|c| format!("{}:ch{}", set.families()[c / n].name(), c % n))
        .collect();
    let _ = writeln!(csv, "# column labels: {}", col_names.join(","));
    for row in map.chunks(set.cols()) {
        let cells: Vec<String> = row.iter().map(f64::to_string).collect();
        let _ = writeln!(csv, "{}", cells.join(","));
    }
    let path = cfg.paths.out.join("sensitivity.csv");
    write_file(&path, csv)?;

    let total: f64 = map.iter().sum();
    println!("sensitivity: {}x{} map -> {}", set.rows(), set.cols(), path.display());
    for band in 0..BAND_COUNT {
        let mass: f64 = map[band * n * set.cols()..(band + 1) * n * set.cols()].iter().sum();
        let share = if total > 0.0 { mass / total } else { 0.0 };
        println!("  {:<10} {:>6.1}%", BandSet::name(band), 100.0 * share);
    }
    Ok(())
}

// stats ---------------------------------------------------------------------

#[derive(Debug, Serialize)]
struct FamilySummary {
    family: FeatureFamily,
    low: f64,
    high: f64,
    seizure_mean: f64,
    non_seizure_mean: f64,
}

pub fn stats(cfg: &PipelineConfig) -> Result<(), CliError> {
    let set = read_patterns(&cfg.paths.patterns())?;
    let hists = feature_class_stats(&set, &seizure_labels(&set))?;
    write_file(&cfg.paths.out.join("feature_stats.csv"), histograms_to_csv(&hists))?;
    let summary: Vec<FamilySummary> = hists
        .iter()
        .map(|h| FamilySummary {
            family: h.family,
            low: h.low,
            high: h.high,
            seizure_mean: h.seizure_mean,
            non_seizure_mean: h.non_seizure_mean,
        })
        .collect();
    write_json(&cfg.paths.out.join("feature_stats.json"), &summary)?;
    for s in &summary {
        println!(
            "{:<8} seizure mean {:.4}, non-seizure mean {:.4}",
            s.family.name(),
            s.seizure_mean,
            s.non_seizure_mean
        );
    }
    Ok(())
}
