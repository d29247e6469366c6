use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::dsp::BAND_COUNT;
use crate::ingest::{
    synthesize_recording, AnnotationSet, Interval, Recording, SeizureClass, StateProfile, SynthConfig,
    BACKGROUND_AMPLITUDE, SEIZURE_AMPLITUDE,
};

/// How many seizures each patient gets and how long they last. The
/// recording is cut into `per_patient` equal slots with one seizure placed
/// at random inside each, so a chronological half split sees seizures on
/// both sides when `per_patient >= 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeizurePlacement {
    pub per_patient: usize,
    pub min_duration_s: f64,
    pub max_duration_s: f64,
}

/// A population of synthetic patients sharing one generator setup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CohortSpec {
    pub patients: usize,
    pub id_prefix: String,
    pub seed: u64,
    pub n_channels: usize,
    pub duration_s: f64,
    pub seizures: SeizurePlacement,
    /// Seizure types, assigned round-robin over all seizures in the cohort.
    pub classes: Vec<u8>,
    pub background_coupling: [f64; BAND_COUNT],
    pub seizure_coupling: [f64; BAND_COUNT],
    pub background_amplitude: [f64; BAND_COUNT],
    pub seizure_amplitude: [f64; BAND_COUNT],
    pub noise_amplitude: f64,
    pub phase_noise: f64,
    /// Each patient's frequency scale is drawn from `1 ± frequency_jitter`.
    pub frequency_jitter: f64,
    /// When set, each patient gets its own seizure band (coupled at this
    /// level during seizures) and a different band that is coupled at this
    /// level all the time; `seizure_coupling` is then ignored.
    pub signature_coupling: Option<f64>,
}

impl Default for CohortSpec {
    fn default() -> Self {
        Self {
            patients: 10,
            id_prefix: "pat".into(),
            seed: 0,
            n_channels: 10,
            duration_s: 60.0,
            seizures: SeizurePlacement {
                per_patient: 1,
                min_duration_s: 10.0,
                max_duration_s: 20.0,
            },
            classes: vec![1],
            background_coupling: [0.1; BAND_COUNT],
            seizure_coupling: [0.9; BAND_COUNT],
            background_amplitude: BACKGROUND_AMPLITUDE,
            seizure_amplitude: SEIZURE_AMPLITUDE,
            noise_amplitude: 3.0,
            phase_noise: 3.0,
            frequency_jitter: 0.0,
            signature_coupling: None,
        }
    }
}

impl CohortSpec {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: &str| Err(PipelineError::Invalid(m.to_string()));
        if self.patients == 0 {
            return bad("cohort needs at least one patient");
        }
        let s = &self.seizures;
        if !(s.min_duration_s > 0.0 && s.min_duration_s <= s.max_duration_s) {
            return bad("seizure durations must satisfy 0 < min <= max");
        }
        if s.per_patient > 0 && self.duration_s / (s.per_patient as f64) < s.max_duration_s + 2.0 {
            return bad("recording too short for the requested seizures");
        }
        if self.classes.is_empty() || self.classes.iter().any(|&c| !matches!(SeizureClass::from_code(c), Some(k) if k.is_seizure())) {
            return bad("classes must be seizure type codes 1..=8");
        }
        if !(0.0..1.0).contains(&self.frequency_jitter) {
            return bad("frequency_jitter must lie in [0, 1)");
        }
        if matches!(self.signature_coupling, Some(c) if !(0.0..=1.0).contains(&c)) {
            return bad("signature_coupling must lie in [0, 1]");
        }
        Ok(())
    }
}

/// Per-patient generator settings; patient ids are `{prefix}{index:03}`.
pub fn cohort_configs(spec: &CohortSpec) -> Result<Vec<SynthConfig>, PipelineError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut class_cursor = 0;
    let mut out = Vec::with_capacity(spec.patients);
    for p in 0..spec.patients {
        let mut cfg = SynthConfig::new(format!("{}{p:03}", spec.id_prefix), rng.random());
        cfg.n_channels = spec.n_channels;
        cfg.duration_s = spec.duration_s;
        cfg.noise_amplitude = spec.noise_amplitude;
        cfg.phase_noise = spec.phase_noise;
        cfg.frequency_scale = 1.0 + spec.frequency_jitter * rng.random_range(-1.0..=1.0);
        cfg.background = StateProfile {
            coupling: spec.background_coupling,
            amplitude: spec.background_amplitude,
        };
        cfg.seizure = StateProfile {
            coupling: spec.seizure_coupling,
            amplitude: spec.seizure_amplitude,
        };
        if let Some(level) = spec.signature_coupling {
            let seizure_band = rng.random_range(0..BAND_COUNT);
            let locked_band = (seizure_band + rng.random_range(1..BAND_COUNT)) % BAND_COUNT;
            cfg.background.coupling[locked_band] = level;
            cfg.seizure.coupling = cfg.background.coupling;
            cfg.seizure.coupling[seizure_band] = level;
        }
        let slots = spec.seizures.per_patient;
        let slot = spec.duration_s / slots.max(1) as f64;
        for k in 0..slots {
            let len = rng.random_range(spec.seizures.min_duration_s..=spec.seizures.max_duration_s);
            // keep a 1 s margin from slot edges
            let start = k as f64 * slot + 1.0 + rng.random_range(0.0..=(slot - len - 2.0).max(0.0));
            let code = spec.classes[class_cursor % spec.classes.len()];
            class_cursor += 1;
            cfg.seizures.push(Interval {
                start_s: start.round(),
                end_s: (start + len).round(),
                class: SeizureClass::from_code(code).expect("validated"),
            });
        }
        out.push(cfg);
    }
    Ok(out)
}

/// Synthesizes every patient of the cohort (in parallel, deterministically).
pub fn synthesize_cohort(spec: &CohortSpec) -> Result<Vec<(Recording, AnnotationSet)>, PipelineError> {
    cohort_configs(spec)?
        .par_iter()
        .map(|cfg| synthesize_recording(cfg).map_err(PipelineError::from))
        .collect()
}
