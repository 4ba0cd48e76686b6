//! Runtime side of the MELT pipeline: corpus IO, file formats, parallel
//! stage drivers, the cached end-to-end run and the `melt` CLI.
//!
//! Algorithms live in `melt-core`; this crate reads and writes artifacts
//! and schedules work across threads.

pub mod config;
pub mod corpus;
pub mod embed;
pub mod emit;
pub mod error;
pub mod formats;
pub mod hash;
pub mod pipeline;
pub mod plan;
pub mod report;
pub mod semantic;
pub mod stages;

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

pub use error::{Error, Result};

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| Error::Input(e.to_string()))?;
    bytes.push(b'\n');
    formats::write_all(path, &bytes)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = formats::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path, e.line(), e.to_string()))
}
