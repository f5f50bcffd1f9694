//! Versioned JSON snapshots of learners and whole pipelines.
//!
//! ```json
//! {"version":1,"kind":"pipeline","state":{...}}
//! ```
//!
//! Floats are parsed with exact round-trip precision, so a loaded model
//! makes the same predictions as the one that was saved.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use har_core::{Learner, Pipeline};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("invalid snapshot: {0}")]
    Json(#[from] serde_json::Error),
    #[error("snapshot version {found} is not supported (expected {SNAPSHOT_VERSION})")]
    Version { found: u32 },
    #[error("snapshot holds a {found}, expected a {expected}")]
    Kind { found: String, expected: &'static str },
}

pub trait Snapshottable: Serialize + DeserializeOwned {
    const KIND: &'static str;
}

impl Snapshottable for Learner {
    const KIND: &'static str = "learner";
}

impl Snapshottable for Pipeline {
    const KIND: &'static str = "pipeline";
}

#[derive(Serialize)]
struct Out<'a, T> {
    version: u32,
    kind: &'static str,
    state: &'a T,
}

#[derive(Deserialize)]
struct Header {
    version: u32,
    kind: String,
}

#[derive(Deserialize)]
struct In<T> {
    state: T,
}

pub fn write_snapshot<T: Snapshottable, W: Write>(value: &T, mut w: W) -> Result<(), SnapshotError> {
    serde_json::to_writer(
        &mut w,
        &Out {
            version: SNAPSHOT_VERSION,
            kind: T::KIND,
            state: value,
        },
    )?;
    w.flush()?;
    Ok(())
}

pub fn read_snapshot<T: Snapshottable, R: Read>(mut r: R) -> Result<T, SnapshotError> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    let header: Header = serde_json::from_str(&text)?;
    if header.version != SNAPSHOT_VERSION {
        return Err(SnapshotError::Version { found: header.version });
    }
    if header.kind != T::KIND {
        return Err(SnapshotError::Kind {
            found: header.kind,
            expected: T::KIND,
        });
    }
    Ok(serde_json::from_str::<In<T>>(&text)?.state)
}

pub fn save<T: Snapshottable>(value: &T, path: impl AsRef<Path>) -> Result<(), SnapshotError> {
    write_snapshot(value, BufWriter::new(File::create(path)?))
}

pub fn load<T: Snapshottable>(path: impl AsRef<Path>) -> Result<T, SnapshotError> {
    read_snapshot(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use har_core::eval::NoClock;
    use har_core::synth::{generate, three_round_scenario, well_separated_profiles};
    use har_core::{Algorithm, OnlineClassifier, PipelineConfig};

    fn roundtrip<T: Snapshottable>(v: &T) -> T {
        let mut buf = Vec::new();
        write_snapshot(v, &mut buf).unwrap();
        read_snapshot(buf.as_slice()).unwrap()
    }

    #[test]
    fn every_learner_predicts_identically_after_reload() {
        let profiles = well_separated_profiles();
        let samples = generate(&profiles, &three_round_scenario(&profiles, 3, 2).unwrap()).unwrap();
        let (head, tail) = samples.split_at(samples.len() / 2);
        for alg in Algorithm::ALL {
            let mut a = Pipeline::new(PipelineConfig {
                algorithm: alg,
                seed: 11,
                ..PipelineConfig::default()
            });
            for s in head {
                a.push_sample(s.clone(), &NoClock).unwrap();
            }
            let mut b = roundtrip(&a);
            let learner: Learner = roundtrip(a.learner());
            for s in tail {
                let ra = a.push_sample(s.clone(), &NoClock).unwrap().prediction;
                let rb = b.push_sample(s.clone(), &NoClock).unwrap().prediction;
                assert_eq!(ra.map(|r| r.0), rb.map(|r| r.0), "{alg:?}");
            }
            let x = vec![0.25; har_core::FEATURE_DIM];
            let fresh: Learner = roundtrip(&learner);
            assert_eq!(learner.predict(&x).unwrap(), fresh.predict(&x).unwrap(), "{alg:?}");
        }
    }

    #[test]
    fn version_and_kind_are_checked() {
        let p = Pipeline::new(PipelineConfig::default());
        let mut buf = Vec::new();
        write_snapshot(&p, &mut buf).unwrap();
        assert!(matches!(read_snapshot::<Learner, _>(buf.as_slice()), Err(SnapshotError::Kind { .. })));
        let text = String::from_utf8(buf).unwrap().replacen("\"version\":1", "\"version\":9", 1);
        assert!(matches!(
            read_snapshot::<Pipeline, _>(text.as_bytes()),
            Err(SnapshotError::Version { found: 9 })
        ));
    }
}
