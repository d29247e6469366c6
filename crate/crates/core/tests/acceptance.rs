//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`) so the lines are always
//! printed; the process exits non-zero if any criterion fails.

use std::f64::consts::TAU;
use std::fs;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use seizure_core::dsp::{BandSet, BAND_COUNT};
use seizure_core::eval::{auc, patient_specific_split, roc_curve, EvalReport, ScoredSet};
use seizure_core::features::{
    build_family_pattern, normalize_patterns, phase_entropy_rho, plv, stack_patterns, FamilySource, FeatureFamily, PatternSet,
};
use seizure_core::nn::{
    grad_check, input_sensitivity, save_model, ArchParams, Architecture, BackwardFault, Init, Network, Tensor,
};
use seizure_core::pipeline::{
    extract_patterns, patterns_to_tensor, score_patterns, synthesize_cohort, train_detector, CohortSpec,
    DetectorConfig, ExtractConfig, SeizurePlacement,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within(elapsed: Duration, limit_s: u64) -> bool {
    elapsed.as_secs_f64() < limit_s as f64
}

// 1 ------------------------------------------------------------------------

fn plv_oracle(series: &[f64]) -> f64 {
    let sum: Complex64 = series.iter().map(|&p| Complex64::from_polar(1.0, p)).sum();
    sum.norm() / series.len() as f64
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let len = rng.random_range(1..=500);
        let concentration = rng.random_range(0.0..1.0);
        let centre = rng.random_range(-3.0..3.0);
        let series: Vec<f64> = (0..len)
            .map(|_| centre + (1.0 - concentration) * rng.random_range(-std::f64::consts::PI..std::f64::consts::PI))
            .collect();
        worst = worst.max((plv(&series).unwrap() - plv_oracle(&series)).abs());
    }
    let constant = plv(&[0.7; 250]).unwrap();
    let roots: Vec<f64> = (0..250).map(|k| TAU * k as f64 / 250.0).collect();
    let uniform = plv(&roots).unwrap();
    let elapsed = start.elapsed();
    check(
        worst < 1e-12 && (constant - 1.0).abs() < 1e-12 && uniform.abs() < 1e-12 && within(elapsed, 1),
        format!(
            "PLV vs complex-sum oracle on 1000 series: max |diff| {worst:.2e}; constant {constant}, roots of unity {uniform:.2e}; {:.3} s",
            elapsed.as_secs_f64()
        ),
    )
}

// 2 ------------------------------------------------------------------------

fn criterion_2() -> Outcome {
    let one_bin = phase_entropy_rho(&[1.234; 250], 16).unwrap();
    let k = 16;
    let uniform: Vec<f64> = (0..k * 10).map(|i| std::f64::consts::TAU * (i % k) as f64 / k as f64).collect();
    let uniform_rho = phase_entropy_rho(&crate_wrap(&uniform), k).unwrap();
    let two: Vec<f64> = (0..200).map(|i| if i % 2 == 0 { 0.0 } else { std::f64::consts::PI }).collect();
    let two_rho = phase_entropy_rho(&two, 4).unwrap();
    check(
        (one_bin - 1.0).abs() < 1e-12 && uniform_rho.abs() < 1e-12 && (two_rho - 0.5).abs() < 1e-12,
        format!("rho: one bin {one_bin}, uniform over K=16 {uniform_rho:.2e}, two of K=4 bins {two_rho}"),
    )
}

fn crate_wrap(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| seizure_core::features::wrap_phase(v)).collect()
}

// 3 ------------------------------------------------------------------------

fn criterion_3() -> Outcome {
    let n = 10;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let phases: Vec<Vec<Vec<f64>>> = (0..BAND_COUNT)
        .map(|_| (0..n).map(|_| (0..250).map(|_| rng.random_range(-3.0..3.0)).collect()).collect())
        .collect();
    let bands = BandSet::default();
    let p = build_family_pattern(FamilySource::Phases(&phases), FeatureFamily::Plv, &bands, 16).unwrap();
    let r = build_family_pattern(FamilySource::Phases(&phases), FeatureFamily::Entropy, &bands, 16).unwrap();
    let pairs_per_band = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).count();
    let per_family = pairs_per_band * BAND_COUNT;
    // distinct off-diagonal values actually stored per family (symmetry)
    let mut stored = 0;
    for b in 0..BAND_COUNT {
        for i in 0..n {
            for j in (i + 1)..n {
                let v = p.entry(FeatureFamily::Plv, b, i, j).unwrap();
                assert_eq!(v, p.entry(FeatureFamily::Plv, b, j, i).unwrap());
                stored += 1;
            }
        }
    }
    let stacked = stack_patterns(&[p.clone(), r]).unwrap();
    check(
        pairs_per_band == 45 && per_family == 315 && stored == 315 && p.shape() == (70, 10) && stacked.shape() == (70, 20),
        format!(
            "n=10: {pairs_per_band} pairs/band, {per_family} values/family, single {:?}, two-family stack {:?}",
            p.shape(),
            stacked.shape()
        ),
    )
}

// 4 ------------------------------------------------------------------------

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let params = ArchParams {
        filters: 2,
        kernel: 5,
        dense_units: 20,
        classes: 2,
    };
    let net = Network::new(&Architecture::Cnn2.layers(&params), [14, 4, 1], 4, Init::RandomOutput).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    let x = Tensor::new(&[4, 14, 4, 1], (0..224).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
    let y = [0, 1, 1, 0];
    let good = grad_check(&net, &x, &y, 41).unwrap();
    let bad = grad_check(&net.clone().with_fault(BackwardFault::FlipConvSign), &x, &y, 41).unwrap();
    let elapsed = start.elapsed();
    check(
        good.max_relative_error < 1e-4 && bad.max_relative_error > 1e-1 && within(elapsed, 30),
        format!(
            "reduced CNN2 on 14x4: max rel err {:.2e} over {} entries ({} skipped at kinks); sign-flipped conv {:.2e}; {:.2} s",
            good.max_relative_error,
            good.checked,
            good.skipped_at_kinks,
            bad.max_relative_error,
            elapsed.as_secs_f64()
        ),
    )
}

// 5 ------------------------------------------------------------------------

fn pair_count_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for (i, &si) in scores.iter().enumerate() {
        if !labels[i] {
            continue;
        }
        for (j, &sj) in scores.iter().enumerate() {
            if labels[j] {
                continue;
            }
            pairs += 1.0;
            if si > sj {
                wins += 1.0;
            } else if si == sj {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    let mut sets = 0;
    while sets < 500 {
        let n = rng.random_range(2..=1000);
        // coarse quantization on some sets to exercise tied scores
        let levels = if rng.random_bool(0.5) { rng.random_range(2..20) } else { 0 };
        let shift = rng.random_range(-0.3..0.3);
        let mut scores = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let l = rng.random_bool(0.3);
            let mut s: f64 = (rng.random_range(0.0f64..1.0) + if l { shift } else { 0.0 }).clamp(0.0, 1.0);
            if levels > 0 {
                s = (s * levels as f64).round() / levels as f64;
            }
            scores.push(s);
            labels.push(l);
        }
        if labels.iter().all(|&l| l) || labels.iter().all(|&l| !l) {
            continue;
        }
        let set = ScoredSet::anonymous(scores.clone(), labels.clone()).unwrap();
        let a = auc(&roc_curve(&set).unwrap());
        worst = worst.max((a - pair_count_auc(&scores, &labels)).abs());
        sets += 1;
    }
    let elapsed = start.elapsed();
    check(
        worst < 1e-9 && within(elapsed, 10),
        format!(
            "trapezoidal AUC vs pair counting on 500 sets: max |diff| {worst:.2e}; {:.2} s",
            elapsed.as_secs_f64()
        ),
    )
}

// 6 and 9 ------------------------------------------------------------------

struct Separability {
    all_auc: f64,
    family_aucs: Vec<(FeatureFamily, f64)>,
    model_bytes: Vec<u8>,
    report_bytes: Vec<u8>,
}

fn evaluate(model: &seizure_core::nn::SavedModel, test: &PatternSet) -> EvalReport {
    let scores = score_patterns(model, test).unwrap();
    let labels: Vec<bool> = test.metas().iter().map(|m| m.class.is_seizure()).collect();
    let ids = test.metas().iter().map(|m| m.patient_id.clone()).collect();
    EvalReport::from_scores("all", &ScoredSet::new(ids, scores, labels).unwrap()).unwrap().0
}

fn cohort_patterns(spec: &CohortSpec, config: &ExtractConfig) -> PatternSet {
    let cohort = synthesize_cohort(spec).unwrap();
    let mut set = PatternSet::new(spec.n_channels, config.families.clone()).unwrap();
    for (rec, ann) in &cohort {
        set.extend_from(&extract_patterns(rec, ann, config).unwrap()).unwrap();
    }
    set
}

fn split_by_patient(set: &PatternSet, n_train: usize) -> (PatternSet, PatternSet) {
    let patients = set.patients();
    let train: Vec<usize> = (0..set.len())
        .filter(|&i| patients[..n_train].contains(&set.meta(i).patient_id))
        .collect();
    let test: Vec<usize> = (0..set.len()).filter(|i| !train.contains(i)).collect();
    (set.subset(&train), set.subset(&test))
}

fn labels_of(set: &PatternSet) -> Vec<bool> {
    set.metas().iter().map(|m| m.class.is_seizure()).collect()
}

fn separability_run() -> Separability {
    let spec = CohortSpec {
        patients: 30,
        seed: 6,
        ..Default::default()
    };
    let set = cohort_patterns(&spec, &ExtractConfig::default());
    let (train, test) = split_by_patient(&set, 20);
    let config = DetectorConfig::new(Architecture::Cnn2, 60);

    let (model, _) = train_detector(&train, &labels_of(&train), &config).unwrap();
    let report = evaluate(&model, &test);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    save_model(&model, &path).unwrap();
    let mut model_bytes = fs::read(&path).unwrap();
    model_bytes.extend(fs::read(dir.path().join("model.bin")).unwrap());
    let report_bytes = serde_json::to_vec(&report).unwrap();

    let mut family_aucs = Vec::new();
    for family in FeatureFamily::ALL {
        let tr = train.select_families(&[family]).unwrap();
        let te = test.select_families(&[family]).unwrap();
        let (m, _) = train_detector(&tr, &labels_of(&tr), &config).unwrap();
        family_aucs.push((family, evaluate(&m, &te).auc));
    }
    Separability {
        all_auc: report.auc,
        family_aucs,
        model_bytes,
        report_bytes,
    }
}

fn criterion_6(run: &Separability, elapsed: Duration) -> Outcome {
    let best_single = run.family_aucs.iter().map(|(_, a)| *a).fold(0.0, f64::max);
    let singles: Vec<String> = run.family_aucs.iter().map(|(f, a)| format!("{f} {a:.4}")).collect();
    check(
        run.all_auc >= 0.90 && run.all_auc >= best_single - 0.02 && within(elapsed, 900),
        format!(
            "30 synthetic patients (20/10), CNN2: all-families AUC {:.4}; single families {}; {:.0} s",
            run.all_auc,
            singles.join(", "),
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_9(first: &Separability, second: &Separability) -> Outcome {
    let same_model = first.model_bytes == second.model_bytes;
    let same_report = first.report_bytes == second.report_bytes;
    let same_family = first.family_aucs == second.family_aucs;
    check(
        same_model && same_report && same_family,
        format!(
            "repeat of criterion 6: model files identical {same_model} ({} bytes), reports identical {same_report}, single-family AUCs identical {same_family}",
            first.model_bytes.len()
        ),
    )
}

// 7 ------------------------------------------------------------------------

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let spec = CohortSpec {
        patients: 12,
        seed: 7,
        duration_s: 80.0,
        seizures: SeizurePlacement {
            per_patient: 2,
            min_duration_s: 10.0,
            max_duration_s: 16.0,
        },
        seizure_amplitude: seizure_core::ingest::BACKGROUND_AMPLITUDE,
        frequency_jitter: 0.1,
        signature_coupling: Some(0.9),
        ..Default::default()
    };
    let set = cohort_patterns(&spec, &ExtractConfig::default());
    let (train, test) = split_by_patient(&set, 8);
    let (augment, reduced) = patient_specific_split(test.metas(), 0.5).unwrap();
    let reduced_test = test.subset(&reduced);
    let config = DetectorConfig::new(Architecture::Cnn2, 70);

    let (baseline, _) = train_detector(&train, &labels_of(&train), &config).unwrap();
    let base = evaluate(&baseline, &reduced_test).auc;

    let mut augmented = train.clone();
    augmented.extend_from(&test.subset(&augment)).unwrap();
    let (specific, _) = train_detector(&augmented, &labels_of(&augmented), &config).unwrap();
    let ps = evaluate(&specific, &reduced_test).auc;
    let elapsed = start.elapsed();
    check(
        ps >= base,
        format!(
            "signature-band cohort (8 train / 4 test patients): baseline AUC {base:.4}, with first half of each test patient {ps:.4}; {:.0} s",
            elapsed.as_secs_f64()
        ),
    )
}

// 8 ------------------------------------------------------------------------

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let mut seizure_coupling = [0.1; BAND_COUNT];
    seizure_coupling[2] = 0.9;
    let spec = CohortSpec {
        patients: 12,
        seed: 8,
        seizure_coupling,
        seizure_amplitude: seizure_core::ingest::BACKGROUND_AMPLITUDE,
        ..Default::default()
    };
    let set = cohort_patterns(&spec, &ExtractConfig::default());
    let (train, test) = split_by_patient(&set, 8);
    let config = DetectorConfig::new(Architecture::Cnn2, 80);
    let (model, _) = train_detector(&train, &labels_of(&train), &config).unwrap();

    let (normalized, _) = normalize_patterns(test.clone(), Some(&model.normalization)).unwrap();
    let x = patterns_to_tensor(&normalized).unwrap();
    let y: Vec<usize> = labels_of(&test).iter().map(|&l| l as usize).collect();
    let map = input_sensitivity(&model.network, &x, &y).unwrap();
    let (n, cols) = (test.n_channels(), test.cols());
    let total: f64 = map.iter().sum();
    let alpha: f64 = map[2 * n * cols..3 * n * cols].iter().sum();
    let share = alpha / total;
    let auc = evaluate(&model, &test).auc;
    let elapsed = start.elapsed();
    check(
        share >= 0.6 && map.iter().all(|&v| v >= 0.0) && within(elapsed, 300),
        format!(
            "alpha-only coupling: {:.1}% of sensitivity mass in alpha rows (detector AUC {auc:.4}); {:.0} s",
            100.0 * share,
            elapsed.as_secs_f64()
        ),
    )
}

fn main() {
    let only: Option<Vec<u32>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    let wanted = |c: u32| only.as_ref().is_none_or(|o| o.contains(&c));
    let mut results: Vec<(u32, Outcome)> = Vec::new();
    let mut report = |c: u32, o: Outcome| {
        println!("criterion {c}: {} — {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((c, o));
    };
    let cheap: [(u32, fn() -> Outcome); 5] =
        [(1, criterion_1), (2, criterion_2), (3, criterion_3), (4, criterion_4), (5, criterion_5)];
    for (c, f) in cheap {
        if wanted(c) {
            report(c, f());
        }
    }
    let first = (wanted(6) || wanted(9)).then(|| {
        let start = Instant::now();
        let run = separability_run();
        (run, start.elapsed())
    });
    if let (true, Some((run, elapsed))) = (wanted(6), &first) {
        report(6, criterion_6(run, *elapsed));
    }
    if wanted(7) {
        report(7, criterion_7());
    }
    if wanted(8) {
        report(8, criterion_8());
    }
    if let (true, Some((run, _))) = (wanted(9), &first) {
        report(9, criterion_9(run, &separability_run()));
    }
    let failed: Vec<u32> = results.iter().filter(|(_, o)| !o.pass).map(|(c, _)| *c).collect();
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", results.len());
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
