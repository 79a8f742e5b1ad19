//! JSON sequence manifests. Frame paths are relative to the manifest's
//! directory unless absolute.
//!
//! ```json
//! { "format_version": 1,
//!   "sequences": [ { "city_id": "a", "frames": ["a/0.ppm", "a/1.ppm"], "label": 1 } ] }
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::CitySequence;
use crate::error::{Error, Result};
use crate::raster;

pub const MANIFEST_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub city_id: String,
    pub frames: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamps: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair_labels: Option<Vec<u8>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceManifest {
    pub format_version: u32,
    pub sequences: Vec<ManifestEntry>,
}

impl SequenceManifest {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

pub fn parse_manifest(text: &str) -> Result<SequenceManifest> {
    let m: SequenceManifest = serde_json::from_str(text)?;
    if m.format_version != MANIFEST_FORMAT_VERSION {
        return Err(Error::data(format!("unsupported manifest format_version {}", m.format_version)));
    }
    Ok(m)
}

/// Reads a manifest and every frame it lists, validating each sequence.
pub fn load_manifest(path: &Path) -> Result<Vec<CitySequence>> {
    let manifest = parse_manifest(&fs::read_to_string(path)?)?;
    let base = path.parent().unwrap_or(Path::new("."));
    manifest
        .sequences
        .into_iter()
        .map(|e| {
            let frames = e
                .frames
                .iter()
                .map(|f| {
                    let p = base.join(f);
                    let bytes = fs::read(&p)
                        .map_err(|err| Error::data(format!("{}: cannot read {}: {err}", e.city_id, p.display())))?;
                    raster::load_pnm(&bytes)
                        .map_err(|err| Error::data(format!("{}: {}: {err}", e.city_id, p.display())))
                })
                .collect::<Result<Vec<_>>>()?;
            let seq = CitySequence {
                city_id: e.city_id,
                frames,
                timestamps: e.timestamps,
                label: e.label,
                pair_labels: e.pair_labels,
            };
            seq.validate()?;
            Ok(seq)
        })
        .collect()
}

/// Writes every frame as `frames/<city_id>/<k>.ppm` under `dir` and returns
/// the manifest describing them (paths relative to `dir`).
pub fn save_corpus(dir: &Path, sequences: &[CitySequence]) -> Result<SequenceManifest> {
    let mut entries = Vec::with_capacity(sequences.len());
    for seq in sequences {
        if seq.city_id.is_empty() || seq.city_id.contains(['/', '\\']) || seq.city_id.starts_with('.') {
            return Err(Error::arg(format!("city id {:?} is not usable as a directory name", seq.city_id)));
        }
        let rel = PathBuf::from("frames").join(&seq.city_id);
        fs::create_dir_all(dir.join(&rel))?;
        let mut frames = Vec::with_capacity(seq.frames.len());
        for (k, f) in seq.frames.iter().enumerate() {
            let name = rel.join(format!("{k}.ppm"));
            fs::write(dir.join(&name), raster::write_pnm(f))?;
            frames.push(name.to_string_lossy().replace('\\', "/"));
        }
        entries.push(ManifestEntry {
            city_id: seq.city_id.clone(),
            frames,
            timestamps: seq.timestamps.clone(),
            label: seq.label,
            pair_labels: seq.pair_labels.clone(),
        });
    }
    Ok(SequenceManifest { format_version: MANIFEST_FORMAT_VERSION, sequences: entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequence::{generate_synthetic_sequence, SynthConfig};

    #[test]
    fn round_trip_through_disk() {
        let dir = tempfile::tempdir().unwrap();
        let (seq, _) =
            generate_synthetic_sequence(&SynthConfig { size: 24, n_frames: 3, ..Default::default() }).unwrap();
        let manifest = save_corpus(dir.path(), std::slice::from_ref(&seq)).unwrap();
        let path = dir.path().join("corpus.json");
        fs::write(&path, manifest.to_json()).unwrap();
        assert_eq!(load_manifest(&path).unwrap(), vec![seq]);
    }

    #[test]
    fn rejects_bad_documents() {
        assert!(parse_manifest(r#"{"format_version": 2, "sequences": []}"#).is_err());
        assert!(
            parse_manifest(r#"{"format_version": 1, "sequences": [{"city_id": "a", "frames": [], "x": 1}]}"#).is_err()
        );
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        fs::write(
            &path,
            r#"{"format_version": 1, "sequences": [{"city_id": "a", "frames": ["nope.ppm", "nope.ppm"]}]}"#,
        )
        .unwrap();
        let err = load_manifest(&path).unwrap_err();
        assert!(matches!(err, Error::Data(_)), "{err}");
    }
}
