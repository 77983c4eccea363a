//! Dataset manifests.
//!
//! ```text
//! #dataset <name>
//! <path>\t<bonafide|morph>\t<identity>[,<identity2>]
//! ```
//!
//! Other lines starting with `#` are comments. Relative image paths resolve
//! against the directory holding the manifest.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use super::ProtocolError;
use crate::metrics::Label;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sample {
    /// Path exactly as written in the manifest; also the sample id in score
    /// files.
    pub path: String,
    pub label: Label,
    pub identities: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub name: String,
    pub samples: Vec<Sample>,
    /// Directory relative paths resolve against.
    pub base_dir: Option<PathBuf>,
}

impl DatasetManifest {
    /// Validates samples against the manifest invariants.
    pub fn new(name: impl Into<String>, samples: Vec<Sample>) -> Result<Self, ProtocolError> {
        let mut seen = HashSet::new();
        for (i, s) in samples.iter().enumerate() {
            validate_sample(s).map_err(|reason| ProtocolError::InvariantViolation {
                line: i + 1,
                reason,
            })?;
            if !seen.insert(s.path.as_str()) {
                return Err(ProtocolError::InvariantViolation {
                    line: i + 1,
                    reason: format!("duplicate path '{}'", s.path),
                });
            }
        }
        Ok(Self {
            name: name.into(),
            samples,
            base_dir: None,
        })
    }

    pub fn with_base_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.base_dir = Some(dir.into());
        self
    }

    pub fn resolve(&self, sample: &Sample) -> PathBuf {
        let p = Path::new(&sample.path);
        match &self.base_dir {
            Some(base) if p.is_relative() => base.join(p),
            _ => p.to_path_buf(),
        }
    }

    pub fn count(&self, label: Label) -> usize {
        self.samples.iter().filter(|s| s.label == label).count()
    }

    /// Sorted, de-duplicated identity ids referenced by any sample.
    pub fn identities(&self) -> Vec<String> {
        let mut ids: Vec<String> = self
            .samples
            .iter()
            .flat_map(|s| s.identities.iter().cloned())
            .collect();
        ids.sort();
        ids.dedup();
        ids
    }

    /// Same dataset restricted to the samples accepted by `keep`.
    pub fn filtered(&self, keep: impl Fn(&Sample) -> bool) -> DatasetManifest {
        DatasetManifest {
            name: self.name.clone(),
            samples: self.samples.iter().filter(|s| keep(s)).cloned().collect(),
            base_dir: self.base_dir.clone(),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("#dataset {}\n", self.name);
        for s in &self.samples {
            out.push_str(&format!(
                "{}\t{}\t{}\n",
                s.path,
                s.label,
                s.identities.join(",")
            ));
        }
        out
    }

    /// Parses manifest text; `default_name` is used when there is no
    /// `#dataset` header.
    pub fn from_text(text: &str, default_name: &str) -> Result<Self, ProtocolError> {
        let mut name = None;
        let mut samples = Vec::new();
        let mut seen = HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("#dataset") {
                let n = rest.trim();
                if n.is_empty() {
                    return Err(ProtocolError::ManifestParse {
                        line: line_no,
                        reason: "empty dataset name".into(),
                    });
                }
                name = Some(n.to_string());
                continue;
            }
            if line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let [path, label, ids] = fields[..] else {
                return Err(ProtocolError::ManifestParse {
                    line: line_no,
                    reason: format!("expected 3 tab-separated fields, found {}", fields.len()),
                });
            };
            let label: Label =
                label
                    .trim()
                    .parse()
                    .map_err(|reason| ProtocolError::ManifestParse {
                        line: line_no,
                        reason,
                    })?;
            let sample = Sample {
                path: path.to_string(),
                label,
                identities: ids.split(',').map(|s| s.trim().to_string()).collect(),
            };
            validate_sample(&sample).map_err(|reason| ProtocolError::InvariantViolation {
                line: line_no,
                reason,
            })?;
            if !seen.insert(sample.path.clone()) {
                return Err(ProtocolError::InvariantViolation {
                    line: line_no,
                    reason: format!("duplicate path '{}'", sample.path),
                });
            }
            samples.push(sample);
        }
        Ok(Self {
            name: name.unwrap_or_else(|| default_name.to_string()),
            samples,
            base_dir: None,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), ProtocolError> {
        fs::write(path, self.to_text()).map_err(|e| ProtocolError::io(path, e))
    }
}

/// Reads and validates a manifest file.
pub fn parse_manifest(path: &Path) -> Result<DatasetManifest, ProtocolError> {
    let text = fs::read_to_string(path).map_err(|e| ProtocolError::io(path, e))?;
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    let manifest = DatasetManifest::from_text(&text, &stem)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(manifest.with_base_dir(base))
}

fn validate_sample(s: &Sample) -> Result<(), String> {
    if s.path.is_empty() {
        return Err("empty path".into());
    }
    if s.identities.iter().any(|id| id.is_empty()) {
        return Err("empty identity id".into());
    }
    match s.label {
        Label::Bonafide if s.identities.len() != 1 => Err(format!(
            "bona fide sample needs exactly 1 identity, found {}",
            s.identities.len()
        )),
        Label::Morph if s.identities.len() != 2 => Err(format!(
            "morph sample needs exactly 2 identities, found {}",
            s.identities.len()
        )),
        Label::Morph if s.identities[0] == s.identities[1] => {
            Err("morph identities must be distinct".into())
        }
        _ => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_manifest_is_valid() {
        let m = DatasetManifest::from_text("#dataset empty\n", "x").unwrap();
        assert_eq!(m.name, "empty");
        assert!(m.samples.is_empty());
        let m = DatasetManifest::from_text("", "fallback").unwrap();
        assert_eq!(m.name, "fallback");
    }

    #[test]
    fn four_line_fixture() {
        let text = "#dataset tiny\n\
                    a.pgm\tbonafide\tid1\n\
                    b.pgm\tbonafide\tid2\n\
                    # a comment\n\
                    c.pgm\tmorph\tid1,id2\n\
                    d.pgm\tmorph\tid2,id3\n";
        let m = DatasetManifest::from_text(text, "x").unwrap();
        assert_eq!(m.count(Label::Bonafide), 2);
        assert_eq!(m.count(Label::Morph), 2);
        assert_eq!(m.identities(), vec!["id1", "id2", "id3"]);
        assert_eq!(DatasetManifest::from_text(&m.to_text(), "y").unwrap(), m);
    }

    #[test]
    fn invariant_violations_carry_line_numbers() {
        let err = DatasetManifest::from_text("#dataset d\nx.pgm\tmorph\tid1\n", "x").unwrap_err();
        assert!(matches!(
            err,
            ProtocolError::InvariantViolation { line: 2, .. }
        ));
        let err = DatasetManifest::from_text("x.pgm\tbonafide\ta,b\n", "x").unwrap_err();
        assert!(matches!(
            err,
            ProtocolError::InvariantViolation { line: 1, .. }
        ));
        let err = DatasetManifest::from_text("x.pgm\tmorph\ta,a\n", "x").unwrap_err();
        assert!(matches!(
            err,
            ProtocolError::InvariantViolation { line: 1, .. }
        ));
        let dup = "x.pgm\tbonafide\ta\n\nx.pgm\tbonafide\tb\n";
        let err = DatasetManifest::from_text(dup, "x").unwrap_err();
        assert!(matches!(
            err,
            ProtocolError::InvariantViolation { line: 3, .. }
        ));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = DatasetManifest::from_text("#x\nx.pgm\tbonafide\n", "x").unwrap_err();
        assert!(matches!(err, ProtocolError::ManifestParse { line: 2, .. }));
        let err = DatasetManifest::from_text("x.pgm\treal\ta\n", "x").unwrap_err();
        assert!(matches!(err, ProtocolError::ManifestParse { line: 1, .. }));
    }

    #[test]
    fn relative_paths_resolve_against_manifest_dir() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.tsv");
        fs::write(&path, "a/b.pgm\tbonafide\tid\n/abs/c.pgm\tbonafide\tid2\n").unwrap();
        let m = parse_manifest(&path).unwrap();
        assert_eq!(m.name, "m");
        assert_eq!(m.resolve(&m.samples[0]), dir.path().join("a/b.pgm"));
        assert_eq!(m.resolve(&m.samples[1]), PathBuf::from("/abs/c.pgm"));
    }
}
