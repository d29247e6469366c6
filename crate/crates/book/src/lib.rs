//! The guide's chapters as doc comments, so `cargo test` runs every Rust
//! snippet in `book/src/` and the README against the current library.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/recordings.md")]
pub mod recordings {}
#[doc = include_str!("../../../book/src/phase.md")]
pub mod phase {}
#[doc = include_str!("../../../book/src/patterns.md")]
pub mod patterns {}
#[doc = include_str!("../../../book/src/detector.md")]
pub mod detector {}
#[doc = include_str!("../../../book/src/evaluation.md")]
pub mod evaluation {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
#[doc = include_str!("../../../book/src/reproducibility.md")]
pub mod reproducibility {}
#[doc = include_str!("../../../README.md")]
pub mod readme {}
