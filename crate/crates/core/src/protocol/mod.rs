//! Evaluation protocols: intra-dataset (identity-disjoint train/dev),
//! cross-dataset (train on one full dataset, test on others) and
//! score-level fusion of two systems.

mod manifest;
mod report;
mod split;
mod system;

use std::collections::{HashMap, HashSet};
use std::path::Path;

use thiserror::Error;

pub use manifest::{parse_manifest, DatasetManifest, Sample};
pub use report::{ExperimentReport, FusionReport, FusionRow, ReportRow};
pub use split::{split_identities, DEFAULT_TRAIN_FRACTION};
pub use system::{
    external_scores, extract_features, parse_systems, score_features, train_lda, FeatureSet,
    SystemSpec,
};

use crate::image::{ImageLoadError, CANONICAL_SIZE};
use crate::lbp::LbpError;
use crate::linear::{fuse_score, logreg_train, FusionModel, LinearError, DEFAULT_SHRINKAGE};
use crate::metrics::{auc, eer, Label, MetricsError, ScoreEntry, ScoreFileError, ScoreSet};

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("manifest line {line}: {reason}")]
    ManifestParse { line: usize, reason: String },
    #[error("manifest line {line}: {reason}")]
    InvariantViolation { line: usize, reason: String },
    #[error("feature file line {line}: {reason}")]
    FeatureParse { line: usize, reason: String },
    #[error(transparent)]
    Image(#[from] ImageLoadError),
    #[error(transparent)]
    Lbp(#[from] LbpError),
    #[error(transparent)]
    Linear(#[from] LinearError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    ScoreFile(#[from] ScoreFileError),
    #[error("unknown system '{0}'")]
    UnknownSystem(String),
    #[error("empty split: {0}")]
    EmptySplit(String),
    #[error("dataset '{0}' is used for both training and testing")]
    GridOverlap(String),
    #[error("score files are not aligned: {0}")]
    IdMismatch(String),
    #[error("no external score for sample '{0}'")]
    MissingScore(String),
}

impl ProtocolError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        ProtocolError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

/// Knobs shared by every experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Images are resized to `canonical_size`² before feature extraction.
    pub canonical_size: usize,
    pub shrinkage: f64,
    pub train_fraction: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            canonical_size: CANONICAL_SIZE,
            shrinkage: DEFAULT_SHRINKAGE,
            train_fraction: DEFAULT_TRAIN_FRACTION,
        }
    }
}

/// Feature sets of one manifest, one slot per system (`None` for external
/// systems).
struct Extracted {
    manifest: DatasetManifest,
    sets: Vec<Option<FeatureSet>>,
}

impl Extracted {
    fn new(
        manifest: DatasetManifest,
        systems: &[SystemSpec],
        cfg: &PipelineConfig,
    ) -> Result<Self, ProtocolError> {
        let mut internal = extract_features(&manifest, systems, cfg.canonical_size)?.into_iter();
        let sets = systems
            .iter()
            .map(|s| {
                if s.is_external() {
                    None
                } else {
                    internal.next()
                }
            })
            .collect();
        Ok(Self { manifest, sets })
    }
}

/// Scores `test` with system `k`, trained on `train` when it is feature-based.
fn evaluate(
    system: &SystemSpec,
    train: Option<&FeatureSet>,
    test: Option<&FeatureSet>,
    test_samples: &[Sample],
    shrinkage: f64,
) -> Result<(f64, f64), ProtocolError> {
    let scores = match (system, train, test) {
        (SystemSpec::External(path), _, _) => external_scores(path, test_samples)?,
        (_, Some(train), Some(test)) => score_features(&train_lda(train, shrinkage)?, test)?,
        _ => unreachable!("feature-based systems always have feature sets"),
    };
    Ok((auc(&scores)?, eer(&scores)?))
}

fn require_classes(m: &DatasetManifest, min: usize, what: &str) -> Result<(), ProtocolError> {
    let (b, mo) = (m.count(Label::Bonafide), m.count(Label::Morph));
    if b < min || mo < min {
        return Err(ProtocolError::EmptySplit(format!(
            "{what} of '{}' has {b} bona fide and {mo} morph samples, need {min} of each",
            m.name
        )));
    }
    Ok(())
}

/// Intra-dataset protocol: identity-disjoint split, LDA trained on the train
/// part, AUC/EER on the dev part. Rows are sorted by AUC, best first.
pub fn run_intra(
    m: &DatasetManifest,
    systems: &[SystemSpec],
    seed: u64,
    cfg: &PipelineConfig,
) -> Result<ExperimentReport, ProtocolError> {
    let (train, dev) = split_identities(m, cfg.train_fraction, seed);
    require_classes(&train, 2, "train split")?;
    require_classes(&dev, 1, "dev split")?;
    let train_paths: HashSet<&str> = train.samples.iter().map(|s| s.path.as_str()).collect();
    let dev_paths: HashSet<&str> = dev.samples.iter().map(|s| s.path.as_str()).collect();
    let kept = m
        .filtered(|s| train_paths.contains(s.path.as_str()) || dev_paths.contains(s.path.as_str()));
    let extracted = Extracted::new(kept, systems, cfg)?;

    let mut rows = Vec::with_capacity(systems.len());
    for (system, set) in systems.iter().zip(&extracted.sets) {
        let train_set = set
            .as_ref()
            .map(|s| s.filtered(|x| train_paths.contains(x.path.as_str())));
        let dev_set = set
            .as_ref()
            .map(|s| s.filtered(|x| dev_paths.contains(x.path.as_str())));
        let (auc, eer) = evaluate(
            system,
            train_set.as_ref(),
            dev_set.as_ref(),
            &dev.samples,
            cfg.shrinkage,
        )?;
        rows.push(ReportRow {
            train: m.name.clone(),
            test: m.name.clone(),
            system: system.clone(),
            auc,
            eer,
        });
    }
    rows.sort_by(|a, b| b.auc.total_cmp(&a.auc));
    Ok(ExperimentReport { rows })
}

/// Cross-dataset protocol: each system is trained on the full `train`
/// manifest and evaluated on each full test manifest. One row per
/// (test dataset, system), grouped by test dataset.
pub fn run_cross(
    train: &DatasetManifest,
    tests: &[DatasetManifest],
    systems: &[SystemSpec],
    cfg: &PipelineConfig,
) -> Result<ExperimentReport, ProtocolError> {
    if let Some(t) = tests.iter().find(|t| t.name == train.name) {
        return Err(ProtocolError::GridOverlap(t.name.clone()));
    }
    let train = Extracted::new(train.clone(), systems, cfg)?;
    let tests = tests
        .iter()
        .map(|t| Extracted::new(t.clone(), systems, cfg))
        .collect::<Result<Vec<_>, _>>()?;
    let tests: Vec<&Extracted> = tests.iter().collect();
    Ok(ExperimentReport {
        rows: cross_rows(&train, &tests, systems, cfg)?,
    })
}

/// Every ordered pair of distinct manifests, as in a full cross-dataset
/// grid: blocks follow the input order of the training dataset, then of the
/// test dataset.
pub fn run_grid(
    manifests: &[DatasetManifest],
    systems: &[SystemSpec],
    cfg: &PipelineConfig,
) -> Result<ExperimentReport, ProtocolError> {
    let mut names = HashSet::new();
    for m in manifests {
        if !names.insert(m.name.as_str()) {
            return Err(ProtocolError::GridOverlap(m.name.clone()));
        }
    }
    let extracted = manifests
        .iter()
        .map(|m| Extracted::new(m.clone(), systems, cfg))
        .collect::<Result<Vec<_>, _>>()?;
    let mut rows = Vec::new();
    for (i, train) in extracted.iter().enumerate() {
        let tests: Vec<&Extracted> = extracted
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, e)| e)
            .collect();
        rows.extend(cross_rows(train, &tests, systems, cfg)?);
    }
    Ok(ExperimentReport { rows })
}

fn cross_rows(
    train: &Extracted,
    tests: &[&Extracted],
    systems: &[SystemSpec],
    cfg: &PipelineConfig,
) -> Result<Vec<ReportRow>, ProtocolError> {
    require_classes(&train.manifest, 2, "training dataset")?;
    let mut rows = Vec::new();
    for test in tests {
        require_classes(&test.manifest, 1, "test dataset")?;
        for (k, system) in systems.iter().enumerate() {
            let (auc, eer) = evaluate(
                system,
                train.sets[k].as_ref(),
                test.sets[k].as_ref(),
                &test.manifest.samples,
                cfg.shrinkage,
            )?;
            rows.push(ReportRow {
                train: train.manifest.name.clone(),
                test: test.manifest.name.clone(),
                system: system.clone(),
                auc,
                eer,
            });
        }
    }
    Ok(rows)
}

/// Two systems' scores for the same samples, joined on sample id.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedScores {
    pub ids: Vec<String>,
    pub labels: Vec<Label>,
    pub pairs: Vec<(f64, f64)>,
}

impl AlignedScores {
    /// Joins on sample id, in the order of `sys0`. Fails unless both sets
    /// cover exactly the same ids with the same labels.
    pub fn align(sys0: &ScoreSet, sys1: &ScoreSet) -> Result<Self, ProtocolError> {
        let other: HashMap<&str, &ScoreEntry> =
            sys1.entries().iter().map(|e| (e.id.as_str(), e)).collect();
        if sys0.len() != sys1.len() {
            return Err(ProtocolError::IdMismatch(format!(
                "{} vs {} samples",
                sys0.len(),
                sys1.len()
            )));
        }
        let mut out = AlignedScores {
            ids: Vec::with_capacity(sys0.len()),
            labels: Vec::with_capacity(sys0.len()),
            pairs: Vec::with_capacity(sys0.len()),
        };
        for e in sys0.entries() {
            let o = other.get(e.id.as_str()).ok_or_else(|| {
                ProtocolError::IdMismatch(format!("sample '{}' missing from system 1", e.id))
            })?;
            if o.label != e.label {
                return Err(ProtocolError::IdMismatch(format!(
                    "sample '{}' is labeled {} by system 0 and {} by system 1",
                    e.id, e.label, o.label
                )));
            }
            out.ids.push(e.id.clone());
            out.labels.push(e.label);
            out.pairs.push((e.score, o.score));
        }
        Ok(out)
    }

    pub fn is_morph(&self) -> Vec<bool> {
        self.labels.iter().map(|l| l.is_morph()).collect()
    }

    fn system(&self, pick: impl Fn(&(f64, f64)) -> f64) -> ScoreSet {
        let entries = self
            .ids
            .iter()
            .zip(&self.labels)
            .zip(&self.pairs)
            .map(|((id, &label), p)| ScoreEntry {
                id: id.clone(),
                label,
                score: pick(p),
            })
            .collect();
        ScoreSet::new(entries).expect("ids are unique by construction")
    }
}

/// Fused scores of an aligned pair.
pub fn fuse_scores(model: &FusionModel, aligned: &AlignedScores) -> ScoreSet {
    aligned.system(|&(s0, s1)| fuse_score(model, s0, s1))
}

pub fn train_fusion(calibration: &AlignedScores) -> Result<FusionModel, ProtocolError> {
    Ok(logreg_train(&calibration.pairs, &calibration.is_morph())?)
}

/// Names printed in a fusion report row.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FusionLabels {
    pub calibration: String,
    pub test: String,
    pub specs: String,
}

/// Trains the fusion on the calibration pair and reports fused and
/// single-system EERs on the evaluation pair.
pub fn run_fusion(
    calibration: (&ScoreSet, &ScoreSet),
    evaluation: (&ScoreSet, &ScoreSet),
    labels: &FusionLabels,
) -> Result<(FusionModel, FusionReport), ProtocolError> {
    let calib = AlignedScores::align(calibration.0, calibration.1)?;
    let eval = AlignedScores::align(evaluation.0, evaluation.1)?;
    let model = train_fusion(&calib)?;
    let row = FusionRow {
        calibration: labels.calibration.clone(),
        test: labels.test.clone(),
        specs: labels.specs.clone(),
        fused_eer: eer(&fuse_scores(&model, &eval))?,
        sys0_eer: eer(evaluation.0)?,
        sys1_eer: eer(evaluation.1)?,
    };
    Ok((model, FusionReport { rows: vec![row] }))
}
