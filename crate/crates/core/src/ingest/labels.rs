use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Background plus the eight clinical seizure types, in label-file order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum SeizureClass {
    Background = 0,
    FocalNonSpecific = 1,
    GeneralizedNonSpecific = 2,
    SimplePartial = 3,
    ComplexPartial = 4,
    Absence = 5,
    Tonic = 6,
    Clonic = 7,
    TonicClonic = 8,
}

impl SeizureClass {
    pub const ALL: [SeizureClass; 9] = [
        SeizureClass::Background,
        SeizureClass::FocalNonSpecific,
        SeizureClass::GeneralizedNonSpecific,
        SeizureClass::SimplePartial,
        SeizureClass::ComplexPartial,
        SeizureClass::Absence,
        SeizureClass::Tonic,
        SeizureClass::Clonic,
        SeizureClass::TonicClonic,
    ];

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn is_seizure(self) -> bool {
        self != SeizureClass::Background
    }

    pub fn name(self) -> &'static str {
        match self {
            SeizureClass::Background => "background",
            SeizureClass::FocalNonSpecific => "focal non-specific",
            SeizureClass::GeneralizedNonSpecific => "generalised non-specific",
            SeizureClass::SimplePartial => "simple partial",
            SeizureClass::ComplexPartial => "complex partial",
            SeizureClass::Absence => "absence",
            SeizureClass::Tonic => "tonic",
            SeizureClass::Clonic => "clonic",
            SeizureClass::TonicClonic => "tonic-clonic",
        }
    }
}

impl From<SeizureClass> for u8 {
    fn from(c: SeizureClass) -> u8 {
        c.code()
    }
}

impl TryFrom<u8> for SeizureClass {
    type Error = String;
    fn try_from(code: u8) -> Result<Self, String> {
        SeizureClass::from_code(code).ok_or_else(|| format!("unknown class code {code}"))
    }
}

impl fmt::Display for SeizureClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub start_s: f64,
    pub end_s: f64,
    pub class: SeizureClass,
}

impl Interval {
    /// Seconds of overlap with `[lo, hi)`.
    pub fn overlap(&self, lo: f64, hi: f64) -> f64 {
        (self.end_s.min(hi) - self.start_s.max(lo)).max(0.0)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum LabelError {
    #[error("patient {patient}: rows {first} and {second} overlap")]
    Overlap {
        patient: String,
        first: usize,
        second: usize,
    },
    #[error("row {row}: unknown class code {code:?}")]
    UnknownClass { row: usize, code: String },
    #[error("row {row}: start {start} must be before end {end}")]
    EmptyInterval { row: usize, start: f64, end: f64 },
    #[error("row {row}: {message}")]
    Malformed { row: usize, message: String },
}

/// Labelled intervals per patient. Time not covered by an interval is
/// background.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AnnotationSet {
    by_patient: BTreeMap<String, Vec<Interval>>,
}

impl AnnotationSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds an interval, rejecting overlap with the patient's existing ones.
    pub fn insert(&mut self, patient: &str, interval: Interval) -> Result<(), LabelError> {
        if !(interval.start_s < interval.end_s) {
            return Err(LabelError::EmptyInterval {
                row: 0,
                start: interval.start_s,
                end: interval.end_s,
            });
        }
        let list = self.by_patient.entry(patient.to_string()).or_default();
        if let Some(pos) = list
            .iter()
            .position(|o| o.start_s < interval.end_s && interval.start_s < o.end_s)
        {
            return Err(LabelError::Overlap {
                patient: patient.to_string(),
                first: pos + 1,
                second: list.len() + 1,
            });
        }
        list.push(interval);
        list.sort_by(|a, b| a.start_s.total_cmp(&b.start_s));
        Ok(())
    }

    pub fn intervals(&self, patient: &str) -> &[Interval] {
        self.by_patient.get(patient).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn patients(&self) -> impl Iterator<Item = &str> {
        self.by_patient.keys().map(String::as_str)
    }

    pub fn contains_patient(&self, patient: &str) -> bool {
        self.by_patient.contains_key(patient)
    }

    pub fn is_empty(&self) -> bool {
        self.by_patient.values().all(Vec::is_empty)
    }

    /// Marks a patient as labelled even if it has no seizure intervals.
    pub fn declare_patient(&mut self, patient: &str) {
        self.by_patient.entry(patient.to_string()).or_default();
    }

    /// Serializes back to the `patient_id,start_s,end_s,class` format.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("patient_id,start_s,end_s,class\n");
        for (patient, list) in &self.by_patient {
            for iv in list {
                out.push_str(&format!(
                    "{patient},{},{},{}\n",
                    iv.start_s,
                    iv.end_s,
                    iv.class.code()
                ));
            }
        }
        out
    }
}

#[derive(Deserialize)]
struct Row {
    patient_id: String,
    start_s: f64,
    end_s: f64,
    class: String,
}

/// Parses the label sidecar CSV (`patient_id,start_s,end_s,class`).
pub fn load_labels(csv_text: &str) -> Result<AnnotationSet, LabelError> {
    let mut set = AnnotationSet::new();
    if csv_text.trim().is_empty() {
        return Ok(set);
    }
    // row numbers are 1-based data rows, header excluded
    let mut rows: BTreeMap<String, Vec<(usize, Interval)>> = BTreeMap::new();
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(csv_text.as_bytes());
    for (i, rec) in reader.deserialize::<Row>().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| LabelError::Malformed {
            row,
            message: e.to_string(),
        })?;
        let class = rec
            .class
            .parse::<u8>()
            .ok()
            .and_then(SeizureClass::from_code)
            .ok_or_else(|| LabelError::UnknownClass {
                row,
                code: rec.class.clone(),
            })?;
        if !(rec.start_s < rec.end_s) {
            return Err(LabelError::EmptyInterval {
                row,
                start: rec.start_s,
                end: rec.end_s,
            });
        }
        let iv = Interval {
            start_s: rec.start_s,
            end_s: rec.end_s,
            class,
        };
        let list = rows.entry(rec.patient_id.clone()).or_default();
        if let Some((other, _)) = list
            .iter()
            .find(|(_, o)| o.start_s < iv.end_s && iv.start_s < o.end_s)
        {
            return Err(LabelError::Overlap {
                patient: rec.patient_id,
                first: *other,
                second: row,
            });
        }
        list.push((row, iv));
    }
    for (patient, list) in rows {
        set.declare_patient(&patient);
        for (_, iv) in list {
            set.insert(&patient, iv).expect("overlap already checked");
        }
    }
    Ok(set)
}
