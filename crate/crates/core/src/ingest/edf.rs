//! Plain EDF reader and writer.
//!
//! Layout: a 256-byte fixed header, then `ns` blocks of per-signal fields
//! (each block holds the field for every signal back to back), then data
//! records. Each record stores, signal after signal, `samples_per_record`
//! little-endian `i16` values.

use super::{Recording, RecordingError};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EdfError {
    #[error("malformed EDF header field `{field}` at byte {offset}: {value:?}")]
    MalformedField {
        field: &'static str,
        offset: usize,
        value: String,
    },
    #[error("truncated EDF: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("signal {signal} has digital_min == digital_max ({value})")]
    DegenerateDigitalRange { signal: usize, value: i64 },
    #[error("signals have differing sample rates {rates:?}")]
    HeterogeneousRates { rates: Vec<f64> },
    #[error("cannot write EDF: {0}")]
    Unwritable(String),
    #[error(transparent)]
    Recording(#[from] RecordingError),
}

/// What to do when signals disagree on sample rate.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum RateMode {
    #[default]
    Reject,
    /// Linear interpolation of every signal onto this rate.
    Resample(f64),
}

const FIXED_HEADER: usize = 256;
const PER_SIGNAL: usize = 256;

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn field(&mut self, name: &'static str, width: usize) -> Result<(usize, &'a str), EdfError> {
        let offset = self.pos;
        let end = offset + width;
        let raw = self.bytes.get(offset..end).ok_or(EdfError::MalformedField {
            field: name,
            offset,
            value: format!("header ends at byte {}", self.bytes.len()),
        })?;
        let text = std::str::from_utf8(raw).map_err(|_| EdfError::MalformedField {
            field: name,
            offset,
            value: String::from_utf8_lossy(raw).into_owned(),
        })?;
        self.pos = end;
        Ok((offset, text))
    }

    fn number<T: std::str::FromStr>(&mut self, name: &'static str, width: usize) -> Result<T, EdfError> {
        let (offset, text) = self.field(name, width)?;
        text.trim().parse::<T>().map_err(|_| EdfError::MalformedField {
            field: name,
            offset,
            value: text.to_string(),
        })
    }

    fn per_signal_text(&mut self, name: &'static str, width: usize, ns: usize) -> Result<Vec<String>, EdfError> {
        (0..ns)
            .map(|_| self.field(name, width).map(|(_, t)| t.trim().to_string()))
            .collect()
    }

    fn per_signal_number<T: std::str::FromStr>(
        &mut self,
        name: &'static str,
        width: usize,
        ns: usize,
    ) -> Result<Vec<T>, EdfError> {
        (0..ns).map(|_| self.number(name, width)).collect()
    }
}

pub fn parse_edf(bytes: &[u8]) -> Result<Recording, EdfError> {
    parse_edf_with(bytes, RateMode::Reject)
}

pub fn parse_edf_with(bytes: &[u8], rate_mode: RateMode) -> Result<Recording, EdfError> {
    let mut cur = Cursor { bytes, pos: 0 };
    cur.field("version", 8)?;
    let (_, patient) = cur.field("patient", 80)?;
    cur.field("recording", 80)?;
    cur.field("start_date", 8)?;
    cur.field("start_time", 8)?;
    let header_offset = cur.pos;
    let header_bytes: usize = cur.number("header_bytes", 8)?;
    cur.field("reserved", 44)?;
    let record_count_offset = cur.pos;
    let record_count: i64 = cur.number("record_count", 8)?;
    let duration_offset = cur.pos;
    let record_duration: f64 = cur.number("record_duration", 8)?;
    let ns_offset = cur.pos;
    let ns: usize = cur.number("signal_count", 4)?;

    if ns == 0 {
        return Err(EdfError::MalformedField {
            field: "signal_count",
            offset: ns_offset,
            value: "0".into(),
        });
    }
    if header_bytes != FIXED_HEADER + PER_SIGNAL * ns {
        return Err(EdfError::MalformedField {
            field: "header_bytes",
            offset: header_offset,
            value: header_bytes.to_string(),
        });
    }
    if !(record_duration > 0.0) {
        return Err(EdfError::MalformedField {
            field: "record_duration",
            offset: duration_offset,
            value: record_duration.to_string(),
        });
    }

    let labels = cur.per_signal_text("label", 16, ns)?;
    cur.per_signal_text("transducer", 80, ns)?;
    cur.per_signal_text("physical_dimension", 8, ns)?;
    let phys_min: Vec<f64> = cur.per_signal_number("physical_min", 8, ns)?;
    let phys_max: Vec<f64> = cur.per_signal_number("physical_max", 8, ns)?;
    let dig_min: Vec<i64> = cur.per_signal_number("digital_min", 8, ns)?;
    let dig_max: Vec<i64> = cur.per_signal_number("digital_max", 8, ns)?;
    cur.per_signal_text("prefiltering", 80, ns)?;
    let spr_offset = cur.pos;
    let spr: Vec<usize> = cur.per_signal_number("samples_per_record", 8, ns)?;
    cur.per_signal_text("reserved_signal", 32, ns)?;

    if let Some(i) = spr.iter().position(|&s| s == 0) {
        return Err(EdfError::MalformedField {
            field: "samples_per_record",
            offset: spr_offset + 8 * i,
            value: "0".into(),
        });
    }
    for i in 0..ns {
        if dig_min[i] == dig_max[i] {
            return Err(EdfError::DegenerateDigitalRange {
                signal: i,
                value: dig_min[i],
            });
        }
    }

    let record_bytes: usize = spr.iter().map(|s| 2 * s).sum();
    let data = &bytes[header_bytes.min(bytes.len())..];
    let records = match record_count {
        -1 => {
            if !data.len().is_multiple_of(record_bytes) {
                log::warn!(
                    "EDF with unknown record count has {} trailing bytes; ignoring partial record",
                    data.len() % record_bytes
                );
            }
            data.len() / record_bytes
        }
        n if n >= 0 => {
            let n = n as usize;
            if data.len() < n * record_bytes {
                return Err(EdfError::Truncated {
                    expected: header_bytes + n * record_bytes,
                    found: bytes.len(),
                });
            }
            n
        }
        n => {
            return Err(EdfError::MalformedField {
                field: "record_count",
                offset: record_count_offset,
                value: n.to_string(),
            })
        }
    };

    let gains: Vec<f64> = (0..ns)
        .map(|i| (phys_max[i] - phys_min[i]) / (dig_max[i] - dig_min[i]) as f64)
        .collect();
    let mut samples: Vec<Vec<f64>> = spr.iter().map(|s| Vec::with_capacity(s * records)).collect();
    let mut pos = 0;
    for _ in 0..records {
        for (i, &count) in spr.iter().enumerate() {
            for k in 0..count {
                let at = pos + 2 * k;
                let d = i16::from_le_bytes([data[at], data[at + 1]]) as f64;
                samples[i].push((d - dig_min[i] as f64) * gains[i] + phys_min[i]);
            }
            pos += 2 * count;
        }
    }

    let rates: Vec<f64> = spr.iter().map(|&s| s as f64 / record_duration).collect();
    let homogeneous = rates.iter().all(|&r| r == rates[0]);
    let (rate, samples) = match rate_mode {
        RateMode::Reject if !homogeneous => return Err(EdfError::HeterogeneousRates { rates }),
        RateMode::Reject => (rates[0], samples),
        RateMode::Resample(target) if homogeneous && rates[0] == target => (target, samples),
        RateMode::Resample(target) => {
            let duration = records as f64 * record_duration;
            let len = (duration * target).round() as usize;
            let resampled = samples
                .iter()
                .zip(&rates)
                .map(|(s, &r)| resample_linear(s, r, target, len))
                .collect();
            (target, resampled)
        }
    };

    let patient_id = patient.trim();
    let patient_id = if patient_id.is_empty() { "unknown" } else { patient_id };
    Ok(Recording::new(patient_id, rate, labels, samples)?)
}

fn resample_linear(signal: &[f64], from_hz: f64, to_hz: f64, len: usize) -> Vec<f64> {
    if signal.is_empty() {
        return vec![0.0; len];
    }
    let last = signal.len() - 1;
    (0..len)
        .map(|n| {
            let t = n as f64 * from_hz / to_hz;
            let i = (t.floor() as usize).min(last);
            let frac = t - i as f64;
            if i == last {
                signal[last]
            } else {
                signal[i] * (1.0 - frac) + signal[i + 1] * frac
            }
        })
        .collect()
}

fn put(out: &mut Vec<u8>, text: &str, width: usize) -> Result<(), EdfError> {
    if text.len() > width || !text.is_ascii() {
        return Err(EdfError::Unwritable(format!(
            "{text:?} does not fit a {width}-byte ASCII field"
        )));
    }
    out.extend_from_slice(text.as_bytes());
    out.extend(std::iter::repeat_n(b' ', width - text.len()));
    Ok(())
}

/// Shortest decimal rendering of `x` in at most 8 characters, rounded
/// outward (down for a minimum, up for a maximum).
fn fmt_bound(x: f64, round_up: bool) -> Result<(String, f64), EdfError> {
    for decimals in (0..=6).rev() {
        let scale = 10f64.powi(decimals);
        let v = if round_up {
            (x * scale).ceil() / scale
        } else {
            (x * scale).floor() / scale
        };
        let text = format!("{v:.prec$}", prec = decimals as usize);
        if text.len() <= 8 {
            let parsed = text.parse().expect("formatted float parses");
            return Ok((text, parsed));
        }
    }
    Err(EdfError::Unwritable(format!("physical bound {x} too large for EDF")))
}

/// Writes a recording as EDF with 1-second records and full 16-bit
/// digital range. The sample rate must be integral and the length a whole
/// number of seconds.
pub fn write_edf(recording: &Recording) -> Result<Vec<u8>, EdfError> {
    let rate = recording.sample_rate_hz();
    let spr = rate.round() as usize;
    if (rate - spr as f64).abs() > 1e-9 || spr == 0 {
        return Err(EdfError::Unwritable(format!("non-integral sample rate {rate}")));
    }
    if !recording.len().is_multiple_of(spr) {
        return Err(EdfError::Unwritable(format!(
            "{} samples is not a whole number of {spr}-sample records",
            recording.len()
        )));
    }
    let ns = recording.channel_count();
    let records = recording.len() / spr;
    let (dmin, dmax) = (i16::MIN as i64, i16::MAX as i64);

    let mut bounds = Vec::with_capacity(ns);
    for s in recording.samples() {
        let lo = s.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (lo, hi) = if lo.is_finite() && hi > lo { (lo, hi) } else { (lo.min(0.0) - 1.0, hi.max(0.0) + 1.0) };
        bounds.push((fmt_bound(lo, false)?, fmt_bound(hi, true)?));
    }

    let mut out = Vec::with_capacity(FIXED_HEADER + PER_SIGNAL * ns + 2 * ns * recording.len());
    put(&mut out, "0", 8)?;
    put(&mut out, recording.patient_id(), 80)?;
    put(&mut out, "Startdate X X X X", 80)?;
    put(&mut out, "01.01.00", 8)?;
    put(&mut out, "00.00.00", 8)?;
    put(&mut out, &(FIXED_HEADER + PER_SIGNAL * ns).to_string(), 8)?;
    put(&mut out, "", 44)?;
    put(&mut out, &records.to_string(), 8)?;
    put(&mut out, "1", 8)?;
    put(&mut out, &ns.to_string(), 4)?;
    for label in recording.channels() {
        put(&mut out, label, 16)?;
    }
    for _ in 0..ns {
        put(&mut out, "", 80)?;
    }
    for _ in 0..ns {
        put(&mut out, "uV", 8)?;
    }
    for ((lo, _), _) in &bounds {
        put(&mut out, lo, 8)?;
    }
    for (_, (hi, _)) in &bounds {
        put(&mut out, hi, 8)?;
    }
    for _ in 0..ns {
        put(&mut out, &dmin.to_string(), 8)?;
    }
    for _ in 0..ns {
        put(&mut out, &dmax.to_string(), 8)?;
    }
    for _ in 0..ns {
        put(&mut out, "", 80)?;
    }
    for _ in 0..ns {
        put(&mut out, &spr.to_string(), 8)?;
    }
    for _ in 0..ns {
        put(&mut out, "", 32)?;
    }

    let steps = (dmax - dmin) as f64;
    for r in 0..records {
        for (s, ((_, lo), (_, hi))) in recording.samples().iter().zip(&bounds) {
            for &x in &s[r * spr..(r + 1) * spr] {
                let d = ((x - lo) / (hi - lo) * steps + dmin as f64).round();
                let d = d.clamp(dmin as f64, dmax as f64) as i16;
                out.extend_from_slice(&d.to_le_bytes());
            }
        }
    }
    Ok(out)
}
