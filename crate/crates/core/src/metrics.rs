//! Score sets, score files, and the ROC summaries AUC and EER.
//!
//! A sample is classified as morph when its score is `>= threshold`. FAR is
//! the fraction of bona fide samples accepted as morphs, FRR the fraction of
//! morphs rejected.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Bonafide,
    Morph,
}

impl Label {
    pub fn is_morph(self) -> bool {
        self == Label::Morph
    }

    pub fn swapped(self) -> Label {
        match self {
            Label::Bonafide => Label::Morph,
            Label::Morph => Label::Bonafide,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Bonafide => "bonafide",
            Label::Morph => "morph",
        })
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bonafide" => Ok(Label::Bonafide),
            "morph" => Ok(Label::Morph),
            other => Err(format!(
                "unknown label '{other}', expected bonafide or morph"
            )),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("score set needs at least one bona fide and one morph sample")]
    MissingClass,
}

#[derive(Debug, Error)]
pub enum ScoreFileError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("score file line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("duplicate sample id '{0}'")]
    DuplicateId(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreEntry {
    pub id: String,
    pub label: Label,
    pub score: f64,
}

/// Scored samples with unique ids. Higher scores are more morph-like.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreSet {
    entries: Vec<ScoreEntry>,
}

impl ScoreSet {
    pub fn new(entries: Vec<ScoreEntry>) -> Result<Self, ScoreFileError> {
        let mut seen = HashSet::new();
        for e in &entries {
            if !seen.insert(e.id.as_str()) {
                return Err(ScoreFileError::DuplicateId(e.id.clone()));
            }
        }
        Ok(Self { entries })
    }

    /// Builds a set with generated ids `s0, s1, ...`.
    pub fn from_scores(bonafide: &[f64], morph: &[f64]) -> Self {
        let entries = bonafide
            .iter()
            .map(|&s| (Label::Bonafide, s))
            .chain(morph.iter().map(|&s| (Label::Morph, s)))
            .enumerate()
            .map(|(i, (label, score))| ScoreEntry {
                id: format!("s{i}"),
                label,
                score,
            })
            .collect();
        Self { entries }
    }

    pub fn entries(&self) -> &[ScoreEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn scores_of(&self, label: Label) -> Vec<f64> {
        self.entries
            .iter()
            .filter(|e| e.label == label)
            .map(|e| e.score)
            .collect()
    }

    pub fn map_scores(&self, f: impl Fn(f64) -> f64) -> ScoreSet {
        ScoreSet {
            entries: self
                .entries
                .iter()
                .map(|e| ScoreEntry {
                    score: f(e.score),
                    ..e.clone()
                })
                .collect(),
        }
    }

    pub fn swap_labels(&self) -> ScoreSet {
        ScoreSet {
            entries: self
                .entries
                .iter()
                .map(|e| ScoreEntry {
                    label: e.label.swapped(),
                    ..e.clone()
                })
                .collect(),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# sample-id\tlabel\tscore\n");
        for e in &self.entries {
            out.push_str(&format!("{}\t{}\t{:.16e}\n", e.id, e.label, e.score));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, ScoreFileError> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |reason: String| ScoreFileError::Parse {
                line: line_no,
                reason,
            };
            let fields: Vec<&str> = line.split('\t').collect();
            let [id, label, score] = fields[..] else {
                return Err(parse_err(format!(
                    "expected 3 tab-separated fields, found {}",
                    fields.len()
                )));
            };
            let label = label.trim().parse().map_err(parse_err)?;
            let score: f64 = score
                .trim()
                .parse()
                .map_err(|_| parse_err(format!("invalid score '{score}'")))?;
            if !score.is_finite() {
                return Err(parse_err(format!("non-finite score '{score}'")));
            }
            entries.push(ScoreEntry {
                id: id.to_string(),
                label,
                score,
            });
        }
        Self::new(entries)
    }

    pub fn load(path: &Path) -> Result<Self, ScoreFileError> {
        let text = fs::read_to_string(path).map_err(|source| ScoreFileError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_text(&text)
    }

    pub fn save(&self, path: &Path) -> Result<(), ScoreFileError> {
        fs::write(path, self.to_text()).map_err(|source| ScoreFileError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    fn split(&self) -> Result<(Vec<f64>, Vec<f64>), MetricsError> {
        let bona = self.scores_of(Label::Bonafide);
        let morph = self.scores_of(Label::Morph);
        if bona.is_empty() || morph.is_empty() {
            return Err(MetricsError::MissingClass);
        }
        Ok((bona, morph))
    }
}

/// Mann-Whitney AUC: probability that a random morph outscores a random
/// bona fide sample, ties counting one half.
pub fn auc(s: &ScoreSet) -> Result<f64, MetricsError> {
    let (mut bona, mut morph) = s.split()?;
    bona.sort_by(f64::total_cmp);
    morph.sort_by(f64::total_cmp);
    // Twice the concordant count plus ties, kept integral so the result is
    // exact for any set size that fits in u64.
    let mut doubled: u64 = 0;
    let (mut below, mut upto) = (0usize, 0usize);
    for &m in &morph {
        while below < bona.len() && bona[below] < m {
            below += 1;
        }
        upto = upto.max(below);
        while upto < bona.len() && bona[upto] <= m {
            upto += 1;
        }
        doubled += 2 * below as u64 + (upto - below) as u64;
    }
    Ok(doubled as f64 / (2 * bona.len() * morph.len()) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub far: f64,
    pub frr: f64,
    pub threshold: f64,
}

/// One operating point per distinct score (ascending), then a `+∞` sentinel
/// rejecting everything. The lowest score already accepts every sample, so
/// it stands for the `-∞` end of the curve.
pub fn roc_points(s: &ScoreSet) -> Result<Vec<RocPoint>, MetricsError> {
    let (mut bona, mut morph) = s.split()?;
    bona.sort_by(f64::total_cmp);
    morph.sort_by(f64::total_cmp);
    let mut thresholds: Vec<f64> = bona.iter().chain(&morph).cloned().collect();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();

    let (nb, nm) = (bona.len() as f64, morph.len() as f64);
    let (mut ib, mut im) = (0usize, 0usize);
    let mut points = Vec::with_capacity(thresholds.len() + 1);
    for &t in &thresholds {
        while ib < bona.len() && bona[ib] < t {
            ib += 1;
        }
        while im < morph.len() && morph[im] < t {
            im += 1;
        }
        points.push(RocPoint {
            far: (bona.len() - ib) as f64 / nb,
            frr: im as f64 / nm,
            threshold: t,
        });
    }
    points.push(RocPoint {
        far: 0.0,
        frr: 1.0,
        threshold: f64::INFINITY,
    });
    Ok(points)
}

/// Equal error rate in percent.
///
/// Walks the ROC points in threshold order; at the first point where
/// `FAR - FRR <= 0`, returns the common rate if it is exactly zero, else the
/// linear interpolation of FAR (equivalently FRR) at the sign change between
/// this point and the previous one.
pub fn eer(s: &ScoreSet) -> Result<f64, MetricsError> {
    let points = roc_points(s)?;
    Ok(100.0 * eer_from_points(&points))
}

fn eer_from_points(points: &[RocPoint]) -> f64 {
    let mut prev: Option<&RocPoint> = None;
    for p in points {
        let d = p.far - p.frr;
        if d <= 0.0 {
            return match prev {
                Some(q) if d < 0.0 => {
                    let dq = q.far - q.frr;
                    let alpha = dq / (dq - d);
                    q.far + alpha * (p.far - q.far)
                }
                _ => p.far,
            };
        }
        prev = Some(p);
    }
    unreachable!("the +inf sentinel always has FAR - FRR = -1")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auc_examples() {
        assert_eq!(
            auc(&ScoreSet::from_scores(&[0.1, 0.2], &[0.8, 0.9])).unwrap(),
            1.0
        );
        assert_eq!(
            auc(&ScoreSet::from_scores(&[0.8, 0.9], &[0.1, 0.2])).unwrap(),
            0.0
        );
        assert_eq!(
            auc(&ScoreSet::from_scores(&[0.1, 0.6], &[0.4, 0.9])).unwrap(),
            0.75
        );
        assert_eq!(
            auc(&ScoreSet::from_scores(&[0.5, 0.5], &[0.5])).unwrap(),
            0.5
        );
    }

    #[test]
    fn eer_examples() {
        assert_eq!(
            eer(&ScoreSet::from_scores(&[0.1, 0.2], &[0.8, 0.9])).unwrap(),
            0.0
        );
        assert_eq!(
            eer(&ScoreSet::from_scores(&[0.1, 0.6], &[0.4, 0.9])).unwrap(),
            50.0
        );
        let separated = ScoreSet::from_scores(&[0.1, 0.2], &[0.8, 0.9]);
        assert_eq!(eer(&separated.swap_labels()).unwrap(), 100.0);
    }

    #[test]
    fn eer_interpolates() {
        // bona {0,1,3}, morph {1,4}: (FAR, FRR) goes (2/3, 0) at t=1 to
        // (1/3, 1/2) at t=3, so alpha = 0.8 and both rates meet at 0.4.
        let s = ScoreSet::from_scores(&[0.0, 1.0, 3.0], &[1.0, 4.0]);
        let pts = roc_points(&s).unwrap();
        assert_eq!(pts.len(), 5);
        assert!((eer(&s).unwrap() - 40.0).abs() < 1e-12);
    }

    #[test]
    fn missing_class() {
        let s = ScoreSet::from_scores(&[0.1], &[]);
        assert_eq!(auc(&s), Err(MetricsError::MissingClass));
        assert_eq!(eer(&s), Err(MetricsError::MissingClass));
        assert_eq!(roc_points(&s), Err(MetricsError::MissingClass));
    }

    #[test]
    fn roc_separated_pair() {
        let pts = roc_points(&ScoreSet::from_scores(&[0.1], &[0.9])).unwrap();
        assert_eq!(pts.len(), 3);
        assert!(pts.iter().any(|p| p.far == 0.0 && p.frr == 0.0));
        assert_eq!(pts[0].far, 1.0);
        assert_eq!(pts.last().unwrap().frr, 1.0);
    }

    #[test]
    fn roc_all_equal() {
        let pts = roc_points(&ScoreSet::from_scores(&[0.3; 4], &[0.3; 3])).unwrap();
        for p in &pts {
            assert_eq!(p.far + p.frr, 1.0);
        }
    }

    #[test]
    fn score_file_parsing() {
        let text = "# header\nid1\tbonafide\t0.25\n\nid2\tmorph\t-1.5e2\n";
        let s = ScoreSet::from_text(text).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.entries()[1].score, -150.0);
        assert_eq!(ScoreSet::from_text(&s.to_text()).unwrap(), s);

        assert!(matches!(
            ScoreSet::from_text("a\tbonafide\n"),
            Err(ScoreFileError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            ScoreSet::from_text("#\na\tgenuine\t1\n"),
            Err(ScoreFileError::Parse { line: 2, .. })
        ));
        assert!(matches!(
            ScoreSet::from_text("a\tmorph\tx\n"),
            Err(ScoreFileError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            ScoreSet::from_text("a\tmorph\t1\na\tbonafide\t0\n"),
            Err(ScoreFileError::DuplicateId(_))
        ));
    }
}
