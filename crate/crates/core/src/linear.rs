//! Two-class shrinkage LDA and two-input logistic regression fusion, plus
//! the plain-text model file format shared by both.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Default shrinkage of the pooled covariance toward a scaled identity.
pub const DEFAULT_SHRINKAGE: f64 = 1e-3;
/// L2 penalty on the fusion weights.
pub const FUSION_L2: f64 = 1e-6;
pub const FUSION_GRAD_TOL: f64 = 1e-8;
pub const FUSION_MAX_ITER: usize = 1000;

const MODEL_FORMAT_VERSION: u32 = 1;
const MODEL_MAGIC: &str = "# deepmad model";

#[derive(Debug, Error, PartialEq)]
pub enum LinearError {
    #[error("feature dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("need at least 2 samples per class, got {bonafide} bona fide and {morph} morph")]
    TooFewSamples { bonafide: usize, morph: usize },
    #[error("classes are degenerate: {0}")]
    DegenerateClasses(String),
    #[error("shrinkage must be in [0, 1], got {0}")]
    InvalidShrinkage(f64),
    #[error("fusion training needs both labels and equal-length inputs")]
    InvalidFusionInput,
}

#[derive(Debug, Error)]
pub enum ModelFileError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("model file line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("expected a {expected} model, found {found}")]
    WrongKind { expected: String, found: String },
}

/// Trained linear discriminant. Scores are `weights · x + bias`, oriented so
/// that morphs score higher than bona fide samples.
#[derive(Debug, Clone, PartialEq)]
pub struct LdaModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub config: String,
    pub meta: LdaMeta,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LdaMeta {
    pub bonafide_count: usize,
    pub morph_count: usize,
    pub shrinkage: f64,
    /// Set when the class means coincide and the weights are all zero.
    pub degenerate: bool,
}

/// Trains a two-class LDA.
///
/// With `S_w` the pooled within-class covariance and `d` the feature
/// dimension, solves `((1 - s) S_w + s tr(S_w)/d I) w = μ_morph - μ_bona`
/// and puts the bias at the midpoint of the projected class means. All sums
/// run in sample order within each class, bona fide first.
pub fn lda_train(
    bonafide: &[Vec<f64>],
    morph: &[Vec<f64>],
    shrinkage: f64,
    config: &str,
) -> Result<LdaModel, LinearError> {
    if !(0.0..=1.0).contains(&shrinkage) {
        return Err(LinearError::InvalidShrinkage(shrinkage));
    }
    if bonafide.len() < 2 || morph.len() < 2 {
        return Err(LinearError::TooFewSamples {
            bonafide: bonafide.len(),
            morph: morph.len(),
        });
    }
    let dim = bonafide[0].len();
    for v in bonafide.iter().chain(morph) {
        if v.len() != dim {
            return Err(LinearError::DimensionMismatch {
                expected: dim,
                actual: v.len(),
            });
        }
    }

    let mean_b = mean(bonafide, dim);
    let mean_m = mean(morph, dim);
    let diff = &mean_m - &mean_b;

    let mut scatter = DMatrix::<f64>::zeros(dim, dim);
    for (samples, mu) in [(bonafide, &mean_b), (morph, &mean_m)] {
        for s in samples {
            let c = DVector::from_column_slice(s) - mu;
            scatter.ger(1.0, &c, &c, 1.0);
        }
    }
    let dof = (bonafide.len() + morph.len() - 2) as f64;
    let pooled = scatter / dof;

    let meta = LdaMeta {
        bonafide_count: bonafide.len(),
        morph_count: morph.len(),
        shrinkage,
        degenerate: false,
    };

    if diff.iter().all(|&v| v == 0.0) {
        if shrinkage == 0.0 && !pooled.clone().lu().is_invertible() {
            return Err(LinearError::DegenerateClasses(
                "identical class means with singular within-class covariance".into(),
            ));
        }
        return Ok(LdaModel {
            weights: vec![0.0; dim],
            bias: 0.0,
            config: config.to_string(),
            meta: LdaMeta {
                degenerate: true,
                ..meta
            },
        });
    }

    let trace = pooled.trace();
    let mut system = pooled * (1.0 - shrinkage);
    // A zero trace means every class is a single repeated point; fall back to
    // the identity so the direction reduces to the mean difference.
    let ridge = if trace > 0.0 {
        shrinkage * trace / dim as f64
    } else {
        1.0
    };
    for i in 0..dim {
        system[(i, i)] += ridge;
    }

    let weights = match system.clone().cholesky() {
        Some(chol) => chol.solve(&diff),
        None => system.lu().solve(&diff).ok_or_else(|| {
            LinearError::DegenerateClasses("within-class covariance is singular".into())
        })?,
    };

    let mut weights = weights;
    if weights.dot(&diff) < 0.0 {
        weights = -weights;
    }
    let midpoint = (&mean_m + &mean_b) * 0.5;
    let bias = -weights.dot(&midpoint);

    Ok(LdaModel {
        weights: weights.iter().cloned().collect(),
        bias,
        config: config.to_string(),
        meta,
    })
}

fn mean(samples: &[Vec<f64>], dim: usize) -> DVector<f64> {
    let mut acc = DVector::<f64>::zeros(dim);
    for s in samples {
        for (a, &v) in acc.iter_mut().zip(s) {
            *a += v;
        }
    }
    acc / samples.len() as f64
}

/// `weights · x + bias`; higher is more morph-like.
pub fn lda_score(model: &LdaModel, x: &[f64]) -> Result<f64, LinearError> {
    if x.len() != model.weights.len() {
        return Err(LinearError::DimensionMismatch {
            expected: model.weights.len(),
            actual: x.len(),
        });
    }
    Ok(model.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + model.bias)
}

/// Logistic-regression combiner of two system scores.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionModel {
    pub w0: f64,
    pub w1: f64,
    pub bias: f64,
    pub meta: FusionMeta,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusionMeta {
    pub bonafide_count: usize,
    pub morph_count: usize,
    pub iterations: usize,
    pub converged: bool,
}

/// `w0 s0 + w1 s1 + bias`, the logit of the fused morph probability.
pub fn fuse_score(model: &FusionModel, s0: f64, s1: f64) -> f64 {
    model.w0 * s0 + model.w1 * s1 + model.bias
}

/// Mean negative log-likelihood of the morph label plus `λ/2 (w0² + w1²)`,
/// with its gradient and Hessian over `(w0, w1, bias)`.
pub fn fusion_objective(
    params: [f64; 3],
    scores: &[(f64, f64)],
    is_morph: &[bool],
) -> (f64, [f64; 3], [[f64; 3]; 3]) {
    let n = scores.len() as f64;
    let mut loss = 0.0;
    let mut grad = [0.0; 3];
    let mut hess = [[0.0; 3]; 3];
    for (&(s0, s1), &y) in scores.iter().zip(is_morph) {
        let x = [s0, s1, 1.0];
        let z = params[0] * s0 + params[1] * s1 + params[2];
        let y = if y { 1.0 } else { 0.0 };
        // log(1 + e^z) - y z, computed without overflow
        loss += softplus(z) - y * z;
        let p = sigmoid(z);
        let r = p - y;
        let curv = p * (1.0 - p);
        for i in 0..3 {
            grad[i] += r * x[i];
            for j in 0..3 {
                hess[i][j] += curv * x[i] * x[j];
            }
        }
    }
    loss /= n;
    for (g, row) in grad.iter_mut().zip(hess.iter_mut()) {
        *g /= n;
        for h in row.iter_mut() {
            *h /= n;
        }
    }
    loss += 0.5 * FUSION_L2 * (params[0] * params[0] + params[1] * params[1]);
    for i in 0..2 {
        grad[i] += FUSION_L2 * params[i];
        hess[i][i] += FUSION_L2;
    }
    (loss, grad, hess)
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Result of [`logreg_train`]; `model.meta.converged` is false when the
/// iteration cap was hit, in which case the best iterate is returned.
pub fn logreg_train(scores: &[(f64, f64)], is_morph: &[bool]) -> Result<FusionModel, LinearError> {
    if scores.len() != is_morph.len() || scores.is_empty() {
        return Err(LinearError::InvalidFusionInput);
    }
    let morph_count = is_morph.iter().filter(|&&m| m).count();
    let bonafide_count = is_morph.len() - morph_count;
    if morph_count == 0 || bonafide_count == 0 {
        return Err(LinearError::InvalidFusionInput);
    }

    let mut params = [0.0; 3];
    let (mut loss, mut grad, mut hess) = fusion_objective(params, scores, is_morph);
    let mut iterations = 0;
    let mut converged = inf_norm(&grad) < FUSION_GRAD_TOL;
    while !converged && iterations < FUSION_MAX_ITER {
        iterations += 1;
        let step = newton_step(&hess, &grad);
        // Backtracking (Armijo) line search on the damped Newton direction.
        let slope: f64 = (0..3).map(|i| grad[i] * step[i]).sum();
        let mut t = 1.0;
        let mut accepted = None;
        while t > 1e-12 {
            let trial = [
                params[0] + t * step[0],
                params[1] + t * step[1],
                params[2] + t * step[2],
            ];
            let out = fusion_objective(trial, scores, is_morph);
            if out.0 <= loss + 1e-4 * t * slope {
                accepted = Some((trial, out));
                break;
            }
            t *= 0.5;
        }
        let Some((trial, out)) = accepted else {
            break;
        };
        params = trial;
        (loss, grad, hess) = out;
        converged = inf_norm(&grad) < FUSION_GRAD_TOL;
    }

    Ok(FusionModel {
        w0: params[0],
        w1: params[1],
        bias: params[2],
        meta: FusionMeta {
            bonafide_count,
            morph_count,
            iterations,
            converged,
        },
    })
}

fn inf_norm(v: &[f64; 3]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

// Solves H d = -g; falls back to gradient descent if H is not positive
// definite numerically.
fn newton_step(hess: &[[f64; 3]; 3], grad: &[f64; 3]) -> [f64; 3] {
    let h = DMatrix::from_fn(3, 3, |i, j| hess[i][j]);
    let g = DVector::from_column_slice(grad);
    match h.cholesky() {
        Some(chol) => {
            let d = chol.solve(&(-&g));
            [d[0], d[1], d[2]]
        }
        None => [-grad[0], -grad[1], -grad[2]],
    }
}

fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

impl LdaModel {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{MODEL_MAGIC}").unwrap();
        writeln!(out, "format-version\t{MODEL_FORMAT_VERSION}").unwrap();
        writeln!(out, "kind\tlda").unwrap();
        writeln!(out, "config\t{}", self.config).unwrap();
        writeln!(out, "dimension\t{}", self.weights.len()).unwrap();
        let weights: Vec<String> = self.weights.iter().map(|&w| fmt_real(w)).collect();
        writeln!(out, "weights\t{}", weights.join(" ")).unwrap();
        writeln!(out, "bias\t{}", fmt_real(self.bias)).unwrap();
        writeln!(out, "bonafide-count\t{}", self.meta.bonafide_count).unwrap();
        writeln!(out, "morph-count\t{}", self.meta.morph_count).unwrap();
        writeln!(out, "shrinkage\t{}", fmt_real(self.meta.shrinkage)).unwrap();
        writeln!(out, "converged\ttrue").unwrap();
        writeln!(out, "degenerate\t{}", self.meta.degenerate).unwrap();
        out
    }

    pub fn from_text(text: &str) -> Result<Self, ModelFileError> {
        let doc = ModelDoc::read(text, "lda")?;
        let dim: usize = doc.parse("dimension")?;
        let weights = doc.reals("weights")?;
        if weights.len() != dim {
            return Err(doc.error(
                "weights",
                format!("expected {dim} weights, found {}", weights.len()),
            ));
        }
        Ok(LdaModel {
            weights,
            bias: doc.parse("bias")?,
            config: doc.get("config")?.to_string(),
            meta: LdaMeta {
                bonafide_count: doc.parse("bonafide-count")?,
                morph_count: doc.parse("morph-count")?,
                shrinkage: doc.parse("shrinkage")?,
                degenerate: doc.parse("degenerate")?,
            },
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelFileError> {
        write_file(path, &self.to_text())
    }

    pub fn load(path: &Path) -> Result<Self, ModelFileError> {
        Self::from_text(&read_file(path)?)
    }
}

impl FusionModel {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{MODEL_MAGIC}").unwrap();
        writeln!(out, "format-version\t{MODEL_FORMAT_VERSION}").unwrap();
        writeln!(out, "kind\tfusion").unwrap();
        writeln!(out, "config\tfusion-2").unwrap();
        writeln!(out, "dimension\t2").unwrap();
        writeln!(out, "weights\t{} {}", fmt_real(self.w0), fmt_real(self.w1)).unwrap();
        writeln!(out, "bias\t{}", fmt_real(self.bias)).unwrap();
        writeln!(out, "bonafide-count\t{}", self.meta.bonafide_count).unwrap();
        writeln!(out, "morph-count\t{}", self.meta.morph_count).unwrap();
        writeln!(out, "iterations\t{}", self.meta.iterations).unwrap();
        writeln!(out, "converged\t{}", self.meta.converged).unwrap();
        out
    }

    pub fn from_text(text: &str) -> Result<Self, ModelFileError> {
        let doc = ModelDoc::read(text, "fusion")?;
        let weights = doc.reals("weights")?;
        let [w0, w1] = weights[..] else {
            return Err(doc.error("weights", "expected exactly 2 weights".into()));
        };
        Ok(FusionModel {
            w0,
            w1,
            bias: doc.parse("bias")?,
            meta: FusionMeta {
                bonafide_count: doc.parse("bonafide-count")?,
                morph_count: doc.parse("morph-count")?,
                iterations: doc.parse("iterations")?,
                converged: doc.parse("converged")?,
            },
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelFileError> {
        write_file(path, &self.to_text())
    }

    pub fn load(path: &Path) -> Result<Self, ModelFileError> {
        Self::from_text(&read_file(path)?)
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), ModelFileError> {
    fs::write(path, text).map_err(|source| ModelFileError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn read_file(path: &Path) -> Result<String, ModelFileError> {
    fs::read_to_string(path).map_err(|source| ModelFileError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Key/value lines of a model file, with their line numbers.
struct ModelDoc<'a> {
    entries: Vec<(usize, &'a str, &'a str)>,
}

impl<'a> ModelDoc<'a> {
    fn read(text: &'a str, expected_kind: &str) -> Result<Self, ModelFileError> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('\t').ok_or_else(|| ModelFileError::Parse {
                line: i + 1,
                reason: "expected <key><TAB><value>".into(),
            })?;
            entries.push((i + 1, key, value));
        }
        let doc = ModelDoc { entries };
        let version: u32 = doc.parse("format-version")?;
        if version != MODEL_FORMAT_VERSION {
            return Err(doc.error(
                "format-version",
                format!("unsupported format version {version}"),
            ));
        }
        let kind = doc.get("kind")?;
        if kind != expected_kind {
            return Err(ModelFileError::WrongKind {
                expected: expected_kind.into(),
                found: kind.into(),
            });
        }
        Ok(doc)
    }

    fn line_of(&self, key: &str) -> usize {
        self.entries
            .iter()
            .find(|e| e.1 == key)
            .map(|e| e.0)
            .unwrap_or(0)
    }

    fn error(&self, key: &str, reason: String) -> ModelFileError {
        ModelFileError::Parse {
            line: self.line_of(key),
            reason,
        }
    }

    fn get(&self, key: &str) -> Result<&'a str, ModelFileError> {
        self.entries
            .iter()
            .find(|e| e.1 == key)
            .map(|e| e.2)
            .ok_or_else(|| ModelFileError::Parse {
                line: 0,
                reason: format!("missing key '{key}'"),
            })
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T, ModelFileError> {
        let raw = self.get(key)?;
        raw.trim()
            .parse()
            .map_err(|_| self.error(key, format!("invalid value '{raw}' for '{key}'")))
    }

    fn reals(&self, key: &str) -> Result<Vec<f64>, ModelFileError> {
        self.get(key)?
            .split_whitespace()
            .map(|t| {
                t.parse()
                    .map_err(|_| self.error(key, format!("invalid number '{t}'")))
            })
            .collect()
    }
}
