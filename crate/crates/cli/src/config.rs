use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use seizure_core::nn::{ArchParams, Architecture, TrainConfig};
use seizure_core::pipeline::{cohort_configs, CohortSpec, DetectorConfig, ExtractConfig};

use crate::error::CliError;

/// Everything a run needs, read from one TOML file. Relative paths in the
/// file are resolved against the file's own directory.
///
/// The top-level `seed` drives both the synthetic cohort and training;
/// `synth.seed` and `train.seed` are overwritten by it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub paths: Paths,
    pub synth: CohortSpec,
    pub features: ExtractConfig,
    pub model: ModelSection,
    pub train: TrainConfig,
    pub eval: EvalOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub out: PathBuf,
    /// Directory of `.edf` files; defaults to `<out>/recordings`.
    pub recordings: Option<PathBuf>,
    /// Label CSV; defaults to `<out>/labels.csv`.
    pub labels: Option<PathBuf>,
    /// Pattern container; defaults to `<out>/patterns.szp`.
    pub patterns: Option<PathBuf>,
    /// Patterns the model was trained on, needed by the patient-specific
    /// subtask.
    pub train_patterns: Option<PathBuf>,
    /// Model envelope; defaults to `<out>/model.json`.
    pub model: Option<PathBuf>,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            out: PathBuf::from("out"),
            recordings: None,
            labels: None,
            patterns: None,
            train_patterns: None,
            model: None,
        }
    }
}

impl Paths {
    pub fn recordings(&self) -> PathBuf {
        self.recordings.clone().unwrap_or_else(|| self.out.join("recordings"))
    }

    pub fn labels(&self) -> PathBuf {
        self.labels.clone().unwrap_or_else(|| self.out.join("labels.csv"))
    }

    pub fn patterns(&self) -> PathBuf {
        self.patterns.clone().unwrap_or_else(|| self.out.join("patterns.szp"))
    }

    pub fn model(&self) -> PathBuf {
        self.model.clone().unwrap_or_else(|| self.out.join("model.json"))
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.out);
        for p in [
            &mut self.recordings,
            &mut self.labels,
            &mut self.patterns,
            &mut self.train_patterns,
            &mut self.model,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    /// `CNN1` .. `CNN4`.
    pub architecture: String,
    pub filters: usize,
    pub kernel: usize,
    pub dense_units: usize,
    /// Balance classes by discarding background epochs before training.
    pub undersample: bool,
}

impl Default for ModelSection {
    fn default() -> Self {
        let p = ArchParams::default();
        Self {
            architecture: "CNN2".into(),
            filters: p.filters,
            kernel: p.kernel,
            dense_units: p.dense_units,
            undersample: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalOptions {
    /// Folds for `train --cv`.
    pub folds: usize,
    /// One-vs-rest report per seizure type present.
    pub per_type: bool,
    /// Only the first this many seconds of each seizure count as positive.
    pub onset_window: Option<usize>,
    /// Share of each evaluation patient's epochs (chronologically first)
    /// added to training for the patient-specific subtask.
    pub patient_specific: Option<f64>,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            folds: 10,
            per_type: true,
            onset_window: None,
            patient_specific: None,
        }
    }
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            paths: Paths::default(),
            synth: CohortSpec::default(),
            features: ExtractConfig::default(),
            model: ModelSection::default(),
            train: TrainConfig::new(0),
            eval: EvalOptions::default(),
        }
    }
}

impl PipelineConfig {
    /// Defaults when `path` is `None`.
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg: Self = toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if let Some(dir) = path.parent() {
            cfg.paths.rebase(dir);
        }
        Ok(cfg)
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
    }

    /// Checks every section, whichever command runs.
    pub fn validate(&self) -> Result<(), CliError> {
        let mut synth = self.synth.clone();
        synth.seed = self.seed;
        for cfg in cohort_configs(&synth)? {
            cfg.validate().map_err(|e| CliError::Config(format!("synth: {e}")))?;
        }
        self.features.validate()?;
        self.detector()?;
        let e = &self.eval;
        if e.folds < 2 {
            return Err(CliError::Config("eval.folds must be >= 2".into()));
        }
        if e.onset_window == Some(0) {
            return Err(CliError::Config("eval.onset_window must be >= 1".into()));
        }
        if matches!(e.patient_specific, Some(f) if !(f > 0.0 && f < 1.0)) {
            return Err(CliError::Config("eval.patient_specific must lie in (0, 1)".into()));
        }
        Ok(())
    }

    pub fn cohort(&self) -> CohortSpec {
        CohortSpec {
            seed: self.seed,
            ..self.synth.clone()
        }
    }

    pub fn detector(&self) -> Result<DetectorConfig, CliError> {
        let architecture: Architecture = self.model.architecture.parse().map_err(|e| CliError::Config(format!("{e}")))?;
        let m = &self.model;
        if m.filters == 0 || m.dense_units == 0 || m.kernel == 0 || m.kernel.is_multiple_of(2) {
            return Err(CliError::Config(
                "model needs filters >= 1, dense_units >= 1 and an odd kernel".into(),
            ));
        }
        let train = TrainConfig {
            seed: self.seed,
            ..self.train.clone()
        };
        train.validate().map_err(|e| CliError::Config(format!("train: {e}")))?;
        Ok(DetectorConfig {
            architecture,
            arch: ArchParams {
                filters: m.filters,
                kernel: m.kernel,
                dense_units: m.dense_units,
                classes: 2,
            },
            train,
            undersample: m.undersample,
        })
    }
}
