//! Detection systems and feature extraction over manifests.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use super::manifest::{DatasetManifest, Sample};
use super::ProtocolError;
use crate::image::{canonicalize, load_image};
use crate::lbp::{enumerate_configs, lbp_histogram, LbpConfig};
use crate::linear::{lda_score, lda_train, LdaModel};
use crate::metrics::{Label, ScoreEntry, ScoreSet};
use crate::spectral::fourier_features;

/// A detector named on the command line: `fourier`, `lbp-<P>-<R>-<c|s>-<none|riu2>`,
/// or `external:<scorefile>` for scores produced elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub enum SystemSpec {
    Fourier,
    Lbp(LbpConfig),
    External(PathBuf),
}

impl SystemSpec {
    pub fn is_external(&self) -> bool {
        matches!(self, SystemSpec::External(_))
    }

    /// Column values for report tables: extractor name and specs.
    pub fn table_columns(&self) -> (String, String) {
        match self {
            SystemSpec::Fourier => ("Fourier".into(), String::new()),
            SystemSpec::Lbp(cfg) => ("LBP".into(), cfg.label()),
            SystemSpec::External(p) => ("External".into(), p.display().to_string()),
        }
    }

    /// Feature vector of one canonical-size image.
    fn features(&self, img: &crate::image::GrayImage) -> Result<Vec<f64>, ProtocolError> {
        match self {
            SystemSpec::Fourier => Ok(fourier_features(img)),
            SystemSpec::Lbp(cfg) => Ok(lbp_histogram(img, cfg)?),
            SystemSpec::External(_) => unreachable!("external systems have no features"),
        }
    }
}

impl fmt::Display for SystemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SystemSpec::Fourier => f.write_str("fourier"),
            SystemSpec::Lbp(cfg) => write!(f, "{cfg}"),
            SystemSpec::External(p) => write!(f, "external:{}", p.display()),
        }
    }
}

impl FromStr for SystemSpec {
    type Err = ProtocolError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "fourier" {
            return Ok(SystemSpec::Fourier);
        }
        if let Some(path) = s.strip_prefix("external:") {
            if path.is_empty() {
                return Err(ProtocolError::UnknownSystem(s.into()));
            }
            return Ok(SystemSpec::External(PathBuf::from(path)));
        }
        s.parse::<LbpConfig>()
            .map(SystemSpec::Lbp)
            .map_err(|_| ProtocolError::UnknownSystem(s.into()))
    }
}

/// Parses a comma-separated system list. `all-lbp` expands to the twelve
/// LBP configs and `all` to those plus `fourier`. Duplicates are dropped,
/// keeping the first occurrence.
pub fn parse_systems(list: &str) -> Result<Vec<SystemSpec>, ProtocolError> {
    let mut out: Vec<SystemSpec> = Vec::new();
    let mut push = |s: SystemSpec| {
        if !out.contains(&s) {
            out.push(s);
        }
    };
    for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        match item {
            "all-lbp" => enumerate_configs()
                .into_iter()
                .map(SystemSpec::Lbp)
                .for_each(&mut push),
            "all" => {
                enumerate_configs()
                    .into_iter()
                    .map(SystemSpec::Lbp)
                    .for_each(&mut push);
                push(SystemSpec::Fourier);
            }
            other => push(other.parse()?),
        }
    }
    if out.is_empty() {
        return Err(ProtocolError::UnknownSystem(list.into()));
    }
    Ok(out)
}

/// Feature vectors of one system for every sample of a manifest, in
/// manifest order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    pub system: String,
    pub samples: Vec<Sample>,
    pub features: Vec<Vec<f64>>,
}

impl FeatureSet {
    pub fn dimension(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    fn by_label(&self, label: Label) -> Vec<Vec<f64>> {
        self.samples
            .iter()
            .zip(&self.features)
            .filter(|(s, _)| s.label == label)
            .map(|(_, f)| f.clone())
            .collect()
    }

    /// Keeps only rows whose sample passes `keep`.
    pub fn filtered(&self, keep: impl Fn(&Sample) -> bool) -> FeatureSet {
        let (samples, features) = self
            .samples
            .iter()
            .zip(&self.features)
            .filter(|(s, _)| keep(s))
            .map(|(s, f)| (s.clone(), f.clone()))
            .unzip();
        FeatureSet {
            system: self.system.clone(),
            samples,
            features,
        }
    }

    /// ```text
    /// #features <system>
    /// #dimension <d>
    /// <path>\t<label>\t<identities>\t<v1> <v2> ...
    /// ```
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "#features {}\n#dimension {}\n",
            self.system,
            self.dimension()
        );
        for (s, f) in self.samples.iter().zip(&self.features) {
            let values: Vec<String> = f.iter().map(|v| format!("{v:.16e}")).collect();
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\n",
                s.path,
                s.label,
                s.identities.join(","),
                values.join(" ")
            ));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, ProtocolError> {
        let mut system = None;
        let mut dimension: Option<usize> = None;
        let mut samples = Vec::new();
        let mut features = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let err = |reason: String| ProtocolError::FeatureParse {
                line: line_no,
                reason,
            };
            if line.trim().is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("#features") {
                system = Some(rest.trim().to_string());
                continue;
            }
            if let Some(rest) = line.strip_prefix("#dimension") {
                dimension = Some(
                    rest.trim()
                        .parse()
                        .map_err(|_| err("invalid dimension".into()))?,
                );
                continue;
            }
            if line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let [path, label, ids, values] = fields[..] else {
                return Err(err(format!(
                    "expected 4 tab-separated fields, found {}",
                    fields.len()
                )));
            };
            let label: Label = label.parse().map_err(err)?;
            let values: Vec<f64> = values
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| err(format!("invalid number '{t}'"))))
                .collect::<Result<_, _>>()?;
            if let Some(d) = dimension {
                if values.len() != d {
                    return Err(err(format!("expected {d} values, found {}", values.len())));
                }
            }
            samples.push(Sample {
                path: path.to_string(),
                label,
                identities: ids.split(',').map(str::to_string).collect(),
            });
            features.push(values);
        }
        let system = system.ok_or(ProtocolError::FeatureParse {
            line: 1,
            reason: "missing '#features <system>' header".into(),
        })?;
        Ok(FeatureSet {
            system,
            samples,
            features,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), ProtocolError> {
        fs::write(path, self.to_text()).map_err(|e| ProtocolError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self, ProtocolError> {
        let text = fs::read_to_string(path).map_err(|e| ProtocolError::io(path, e))?;
        Self::from_text(&text)
    }
}

/// Loads every image of `m` once, resizes it to `size`×`size` and computes
/// the features of each non-external system. Images are processed in
/// parallel; output order follows the manifest and `systems`.
pub fn extract_features(
    m: &DatasetManifest,
    systems: &[SystemSpec],
    size: usize,
) -> Result<Vec<FeatureSet>, ProtocolError> {
    let internal: Vec<&SystemSpec> = systems.iter().filter(|s| !s.is_external()).collect();
    let per_image: Vec<Vec<Vec<f64>>> = m
        .samples
        .par_iter()
        .map(|sample| {
            let path = m.resolve(sample);
            let img = load_image(&path).map_err(ProtocolError::Image)?;
            let img = canonicalize(&img, size);
            internal.iter().map(|s| s.features(&img)).collect()
        })
        .collect::<Result<_, ProtocolError>>()?;
    Ok(internal
        .iter()
        .enumerate()
        .map(|(k, system)| FeatureSet {
            system: system.to_string(),
            samples: m.samples.clone(),
            features: per_image.iter().map(|f| f[k].clone()).collect(),
        })
        .collect())
}

/// Trains an LDA on a labeled feature set.
pub fn train_lda(set: &FeatureSet, shrinkage: f64) -> Result<LdaModel, ProtocolError> {
    let bona = set.by_label(Label::Bonafide);
    let morph = set.by_label(Label::Morph);
    Ok(lda_train(&bona, &morph, shrinkage, &set.system)?)
}

/// Scores every row of `set`; sample ids are the manifest paths.
pub fn score_features(model: &LdaModel, set: &FeatureSet) -> Result<ScoreSet, ProtocolError> {
    let entries = set
        .samples
        .iter()
        .zip(&set.features)
        .map(|(s, f)| {
            Ok(ScoreEntry {
                id: s.path.clone(),
                label: s.label,
                score: lda_score(model, f)?,
            })
        })
        .collect::<Result<Vec<_>, ProtocolError>>()?;
    Ok(ScoreSet::new(entries)?)
}

/// Picks the scores of `samples` out of an externally produced score file.
pub fn external_scores(path: &Path, samples: &[Sample]) -> Result<ScoreSet, ProtocolError> {
    let all = ScoreSet::load(path)?;
    let by_id: HashMap<&str, f64> = all
        .entries()
        .iter()
        .map(|e| (e.id.as_str(), e.score))
        .collect();
    let entries = samples
        .iter()
        .map(|s| {
            let score = *by_id
                .get(s.path.as_str())
                .ok_or_else(|| ProtocolError::MissingScore(s.path.clone()))?;
            Ok(ScoreEntry {
                id: s.path.clone(),
                label: s.label,
                score,
            })
        })
        .collect::<Result<Vec<_>, ProtocolError>>()?;
    Ok(ScoreSet::new(entries)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn system_strings() {
        assert_eq!(
            "fourier".parse::<SystemSpec>().unwrap(),
            SystemSpec::Fourier
        );
        let lbp: SystemSpec = "lbp-8-2-c-none".parse().unwrap();
        assert_eq!(lbp.to_string(), "lbp-8-2-c-none");
        assert_eq!(
            lbp.table_columns(),
            ("LBP".to_string(), "(8,2) ○".to_string())
        );
        let ext: SystemSpec = "external:cnn.tsv".parse().unwrap();
        assert_eq!(ext, SystemSpec::External("cnn.tsv".into()));
        assert_eq!(ext.to_string(), "external:cnn.tsv");
        assert!("external:".parse::<SystemSpec>().is_err());
        assert!("sift".parse::<SystemSpec>().is_err());
    }

    #[test]
    fn system_lists() {
        assert_eq!(parse_systems("all-lbp").unwrap().len(), 12);
        let all = parse_systems("all").unwrap();
        assert_eq!(all.len(), 13);
        assert_eq!(all[12], SystemSpec::Fourier);
        assert_eq!(parse_systems("all-lbp,fourier").unwrap(), all);
        assert_eq!(parse_systems("fourier, fourier").unwrap().len(), 1);
        assert!(parse_systems("").is_err());
        assert!(parse_systems("fourier,bogus").is_err());
    }

    #[test]
    fn feature_file_roundtrip() {
        let set = FeatureSet {
            system: "fourier".into(),
            samples: vec![
                Sample {
                    path: "a.pgm".into(),
                    label: Label::Bonafide,
                    identities: vec!["x".into()],
                },
                Sample {
                    path: "b.pgm".into(),
                    label: Label::Morph,
                    identities: vec!["x".into(), "y".into()],
                },
            ],
            features: vec![vec![0.1, 1.0 / 3.0], vec![0.0, 1e-300]],
        };
        assert_eq!(FeatureSet::from_text(&set.to_text()).unwrap(), set);
        let bad = set.to_text().replace("#dimension 2", "#dimension 3");
        assert!(matches!(
            FeatureSet::from_text(&bad),
            Err(ProtocolError::FeatureParse { line: 3, .. })
        ));
        assert!(FeatureSet::from_text("a\tmorph\tx,y\t1 2\n").is_err());
    }
}
