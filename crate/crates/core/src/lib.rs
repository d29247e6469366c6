//! Epoch-level seizure detection from multichannel EEG.
//!
//! Recordings are cut into one-second epochs; each epoch becomes a pattern
//! image of pairwise phase synchrony (PLV, phase entropy) and band
//! log-power across seven clinical bands, which a small CNN scores.
//!
//! ```
//! use seizure_core::features::plv;
//! assert!((plv(&[0.5; 250]).unwrap() - 1.0).abs() < 1e-12);
//! ```

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dsp;
pub mod eval;
pub mod features;
pub mod ingest;
pub mod nn;
pub mod pipeline;
