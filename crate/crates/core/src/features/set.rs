//! Labelled pattern collections and their binary container.
//!
//! Container layout (all integers little-endian):
//!
//! | offset | size | field |
//! |---|---|---|
//! | 0 | 4 | magic `SZPT` |
//! | 4 | 4 | version (`u32`, currently 1) |
//! | 8 | 4 | channel count `n` |
//! | 12 | 4 | family count `f` |
//! | 16 | 4 | band count (7) |
//! | 20 | 8 | epoch count `E` (`u64`) |
//! | 28 | f | family codes, canonical order (0 PLV, 1 energy, 2 entropy) |
//!
//! followed by `E` row-major `f32` matrices of `(7n) x (nf)` values, `E`
//! label bytes (class code 0-8), a patient table (`u32` count, then per
//! patient a `u16` byte length and UTF-8 name) and finally `E` pairs of
//! `u32` (patient table index, epoch index in seconds).

use std::collections::BTreeMap;

use super::{check_family_order, FeatureError, FeatureFamily, PatternMatrix};
use crate::dsp::BAND_COUNT;
use crate::ingest::{EpochMeta, SeizureClass};

pub const CONTAINER_MAGIC: [u8; 4] = *b"SZPT";
pub const CONTAINER_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct PatternSet {
    n_channels: usize,
    families: Vec<FeatureFamily>,
    metas: Vec<EpochMeta>,
    values: Vec<f32>,
}

impl PatternSet {
    pub fn new(n_channels: usize, families: Vec<FeatureFamily>) -> Result<Self, FeatureError> {
        check_family_order(&families)?;
        if n_channels < 2 {
            return Err(FeatureError::TooFewChannels(n_channels));
        }
        Ok(Self {
            n_channels,
            families,
            metas: Vec::new(),
            values: Vec::new(),
        })
    }

    pub fn n_channels(&self) -> usize {
        self.n_channels
    }

    pub fn families(&self) -> &[FeatureFamily] {
        &self.families
    }

    pub fn rows(&self) -> usize {
        BAND_COUNT * self.n_channels
    }

    pub fn cols(&self) -> usize {
        self.n_channels * self.families.len()
    }

    pub fn pattern_len(&self) -> usize {
        self.rows() * self.cols()
    }

    pub fn len(&self) -> usize {
        self.metas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.metas.is_empty()
    }

    pub fn metas(&self) -> &[EpochMeta] {
        &self.metas
    }

    pub fn meta(&self, i: usize) -> &EpochMeta {
        &self.metas[i]
    }

    pub fn pattern(&self, i: usize) -> &[f32] {
        let len = self.pattern_len();
        &self.values[i * len..(i + 1) * len]
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn push(&mut self, meta: EpochMeta, pattern: &PatternMatrix) -> Result<(), FeatureError> {
        if pattern.n_channels() != self.n_channels || pattern.families() != self.families.as_slice() {
            return Err(FeatureError::ShapeMismatch(format!(
                "pattern {:?} {:?} does not match set {:?} {:?}",
                pattern.shape(),
                pattern.families(),
                (self.rows(), self.cols()),
                self.families
            )));
        }
        self.values.extend(pattern.data().iter().map(|&v| v as f32));
        self.metas.push(meta);
        Ok(())
    }

    pub fn push_raw(&mut self, meta: EpochMeta, values: &[f32]) -> Result<(), FeatureError> {
        if values.len() != self.pattern_len() {
            return Err(FeatureError::ShapeMismatch(format!(
                "{} values, expected {}",
                values.len(),
                self.pattern_len()
            )));
        }
        self.values.extend_from_slice(values);
        self.metas.push(meta);
        Ok(())
    }

    /// Appends every pattern of `other`, which must share the layout.
    pub fn extend_from(&mut self, other: &PatternSet) -> Result<(), FeatureError> {
        if other.n_channels != self.n_channels || other.families != self.families {
            return Err(FeatureError::ShapeMismatch("pattern sets differ in layout".into()));
        }
        self.values.extend_from_slice(&other.values);
        self.metas.extend(other.metas.iter().cloned());
        Ok(())
    }

    /// New set holding the given epochs, in the given order.
    pub fn subset(&self, indices: &[usize]) -> PatternSet {
        let mut out = PatternSet {
            n_channels: self.n_channels,
            families: self.families.clone(),
            metas: Vec::with_capacity(indices.len()),
            values: Vec::with_capacity(indices.len() * self.pattern_len()),
        };
        for &i in indices {
            out.values.extend_from_slice(self.pattern(i));
            out.metas.push(self.metas[i].clone());
        }
        out
    }

    /// Keeps only the listed families (which must be present), re-slicing
    /// each pattern's columns.
    pub fn select_families(&self, families: &[FeatureFamily]) -> Result<PatternSet, FeatureError> {
        check_family_order(families)?;
        let positions: Vec<usize> = families
            .iter()
            .map(|f| {
                self.families
                    .iter()
                    .position(|g| g == f)
                    .ok_or(FeatureError::MissingFamily(*f))
            })
            .collect::<Result<_, _>>()?;
        let n = self.n_channels;
        let mut out = PatternSet::new(n, families.to_vec())?;
        out.metas = self.metas.clone();
        out.values.reserve(self.len() * out.pattern_len());
        for i in 0..self.len() {
            let p = self.pattern(i);
            for r in 0..self.rows() {
                for &f in &positions {
                    let start = r * self.cols() + f * n;
                    out.values.extend_from_slice(&p[start..start + n]);
                }
            }
        }
        Ok(out)
    }

    pub fn matrix(&self, i: usize) -> PatternMatrix {
        PatternMatrix::from_parts(
            self.n_channels,
            self.families.clone(),
            self.pattern(i).iter().map(|&v| v as f64).collect(),
        )
        .expect("set layout is valid")
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f32] {
        &mut self.values
    }

    /// Distinct patient ids in first-appearance order.
    pub fn patients(&self) -> Vec<String> {
        let mut seen = BTreeMap::new();
        for m in &self.metas {
            let next = seen.len();
            seen.entry(m.patient_id.clone()).or_insert(next);
        }
        let mut v: Vec<(usize, String)> = seen.into_iter().map(|(k, i)| (i, k)).collect();
        v.sort();
        v.into_iter().map(|(_, k)| k).collect()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(32 + 4 * self.values.len() + 9 * self.len());
        out.extend_from_slice(&CONTAINER_MAGIC);
        out.extend_from_slice(&CONTAINER_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.n_channels as u32).to_le_bytes());
        out.extend_from_slice(&(self.families.len() as u32).to_le_bytes());
        out.extend_from_slice(&(BAND_COUNT as u32).to_le_bytes());
        out.extend_from_slice(&(self.len() as u64).to_le_bytes());
        out.extend(self.families.iter().map(|f| f.code()));
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend(self.metas.iter().map(|m| m.class.code()));
        let patients = self.patients();
        let index: BTreeMap<&str, u32> = patients
            .iter()
            .enumerate()
            .map(|(i, p)| (p.as_str(), i as u32))
            .collect();
        out.extend_from_slice(&(patients.len() as u32).to_le_bytes());
        for p in &patients {
            out.extend_from_slice(&(p.len() as u16).to_le_bytes());
            out.extend_from_slice(p.as_bytes());
        }
        for m in &self.metas {
            out.extend_from_slice(&index[m.patient_id.as_str()].to_le_bytes());
            out.extend_from_slice(&(m.index as u32).to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, FeatureError> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != CONTAINER_MAGIC {
            return Err(FeatureError::Container("bad magic".into()));
        }
        let version = r.u32()?;
        if version != CONTAINER_VERSION {
            return Err(FeatureError::Container(format!("unsupported version {version}")));
        }
        let n = r.u32()? as usize;
        let f = r.u32()? as usize;
        let bands = r.u32()? as usize;
        if bands != BAND_COUNT {
            return Err(FeatureError::Container(format!("{bands} bands, expected {BAND_COUNT}")));
        }
        let epochs = r.u64()? as usize;
        let families = r
            .take(f)?
            .iter()
            .map(|&c| FeatureFamily::from_code(c).ok_or(FeatureError::Container(format!("family code {c}"))))
            .collect::<Result<Vec<_>, _>>()?;
        let mut set = PatternSet::new(n, families)?;
        let count = epochs
            .checked_mul(set.pattern_len())
            .filter(|c| c.saturating_mul(4) <= bytes.len())
            .ok_or(FeatureError::Container("truncated pattern data".into()))?;
        let raw = r.take(4 * count)?;
        set.values = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        let classes = r
            .take(epochs)?
            .iter()
            .map(|&c| SeizureClass::from_code(c).ok_or(FeatureError::Container(format!("class code {c}"))))
            .collect::<Result<Vec<_>, _>>()?;
        let patient_count = r.u32()? as usize;
        let mut patients = Vec::with_capacity(patient_count.min(1 << 16));
        for _ in 0..patient_count {
            let len = r.u16()? as usize;
            let name = std::str::from_utf8(r.take(len)?)
                .map_err(|_| FeatureError::Container("patient id is not UTF-8".into()))?;
            patients.push(name.to_string());
        }
        for class in classes {
            let p = r.u32()? as usize;
            let index = r.u32()? as usize;
            let patient_id = patients
                .get(p)
                .ok_or(FeatureError::Container(format!("patient index {p}")))?
                .clone();
            set.metas.push(EpochMeta { patient_id, index, class });
        }
        if r.pos != bytes.len() {
            return Err(FeatureError::Container(format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        Ok(set)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], FeatureError> {
        let out = self
            .bytes
            .get(self.pos..self.pos + n)
            .ok_or_else(|| FeatureError::Container(format!("truncated at byte {}", self.pos)))?;
        self.pos += n;
        Ok(out)
    }

    fn u16(&mut self) -> Result<u16, FeatureError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, FeatureError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, FeatureError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}
