//! `deepmad` command-line front end.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on data or validation
//! errors. Diagnostics go to stderr.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use deepmad_core::image::CANONICAL_SIZE;
use deepmad_core::linear::{FusionModel, LdaModel, DEFAULT_SHRINKAGE};
use deepmad_core::metrics::{auc, eer, ScoreSet};
use deepmad_core::protocol::{
    self, extract_features, parse_manifest, parse_systems, run_cross, run_grid, run_intra,
    score_features, split_identities, train_lda, AlignedScores, DatasetManifest, FeatureSet,
    FusionLabels, FusionReport, FusionRow, PipelineConfig, SystemSpec, DEFAULT_TRAIN_FRACTION,
};
use deepmad_core::synthfix::{
    generate_dataset, DatasetOptions, FixtureFamily, DEFAULT_SMOOTHING_RADIUS,
};

const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Parser)]
#[command(
    name = "deepmad",
    version,
    about = "Deep morph detection with LBP and Fourier features"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic bona fide + morph dataset (PGM images and manifest.tsv)
    Synth(SynthArgs),
    /// Extract one system's features for a manifest
    Extract(ExtractArgs),
    /// Train an LDA model from a feature file or a manifest
    Train(TrainArgs),
    /// Score a feature file or manifest with an LDA model
    Score(ScoreArgs),
    /// Print AUC and EER of a score file
    Eval(EvalArgs),
    /// Train a two-system logistic fusion from calibration score files
    FuseTrain(FuseTrainArgs),
    /// Apply a fusion model to two score files
    FuseApply(FuseApplyArgs),
    /// Intra-dataset protocol on an identity-disjoint train/dev split
    Intra(IntraArgs),
    /// Cross-dataset protocol
    Cross(CrossArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, ValueEnum)]
enum SplitPart {
    All,
    Train,
    Dev,
}

#[derive(Debug, Args)]
struct SplitArgs {
    /// Restrict to one part of the identity-disjoint split
    #[arg(long, value_enum, default_value = "all")]
    split: SplitPart,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_TRAIN_FRACTION)]
    train_fraction: f64,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Output directory
    #[arg(long)]
    out: PathBuf,
    /// Dataset name written in the manifest header (defaults to the family)
    #[arg(long)]
    name: Option<String>,
    /// Fixture family: alpha, beta or gamma
    #[arg(long, default_value = "alpha")]
    family: String,
    #[arg(long, default_value_t = 200)]
    bonafide: usize,
    #[arg(long, default_value_t = 200)]
    morphs: usize,
    #[arg(long, default_value_t = CANONICAL_SIZE)]
    size: usize,
    /// Gaussian blur sigma applied to morphs, in pixels
    #[arg(long, default_value_t = DEFAULT_SMOOTHING_RADIUS)]
    radius: f64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Debug, Args)]
struct ExtractArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// System spec, e.g. fourier or lbp-8-2-c-none
    #[arg(long)]
    system: String,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    split: SplitArgs,
    #[arg(long, default_value_t = CANONICAL_SIZE)]
    canonical_size: usize,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Feature file produced by `extract`
    #[arg(long, conflicts_with_all = ["manifest", "system"])]
    features: Option<PathBuf>,
    #[arg(long, requires = "system")]
    manifest: Option<PathBuf>,
    #[arg(long)]
    system: Option<String>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SHRINKAGE)]
    shrinkage: f64,
    #[command(flatten)]
    split: SplitArgs,
    #[arg(long, default_value_t = CANONICAL_SIZE)]
    canonical_size: usize,
}

#[derive(Debug, Args)]
struct ScoreArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, conflicts_with = "manifest")]
    features: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Score file to write
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    split: SplitArgs,
    #[arg(long, default_value_t = CANONICAL_SIZE)]
    canonical_size: usize,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    scores: PathBuf,
}

#[derive(Debug, Args)]
struct FuseTrainArgs {
    /// System 0 calibration scores
    #[arg(long)]
    calib0: PathBuf,
    /// System 1 calibration scores
    #[arg(long)]
    calib1: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct FuseApplyArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    scores0: PathBuf,
    #[arg(long)]
    scores1: PathBuf,
    /// Fused score file to write
    #[arg(long)]
    out: PathBuf,
    /// Calibration set name for the report row
    #[arg(long, default_value = "")]
    calib_name: String,
    /// Evaluation set name for the report row
    #[arg(long, default_value = "")]
    test_name: String,
    #[arg(long, default_value = "sys0+sys1")]
    specs: String,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
}

#[derive(Debug, Args)]
struct IntraArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Comma-separated systems; `all-lbp` and `all` expand
    #[arg(long, default_value = "all")]
    systems: String,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_TRAIN_FRACTION)]
    train_fraction: f64,
    #[arg(long, default_value_t = DEFAULT_SHRINKAGE)]
    shrinkage: f64,
    #[arg(long, default_value_t = CANONICAL_SIZE)]
    canonical_size: usize,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
    /// Write the report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CrossArgs {
    /// Training manifest
    #[arg(long, required_unless_present = "grid", conflicts_with = "grid")]
    train: Option<PathBuf>,
    /// Test manifest (repeatable)
    #[arg(long, requires = "train")]
    test: Vec<PathBuf>,
    /// Full grid: every listed manifest is trained on and tested on all others (repeatable)
    #[arg(long, num_args = 1)]
    grid: Vec<PathBuf>,
    #[arg(long, default_value = "all")]
    systems: String,
    #[arg(long, default_value_t = DEFAULT_SHRINKAGE)]
    shrinkage: f64,
    #[arg(long, default_value_t = CANONICAL_SIZE)]
    canonical_size: usize,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failures after argument parsing succeeded.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(String),
}

impl<E: std::error::Error> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Data(e.to_string())
    }
}

type CmdResult = Result<(), Failure>;

/// Runs the CLI with `args` (including the program name) and returns the
/// process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let rendered = e.render().to_string();
            let _ = if code == 0 {
                write!(stdout, "{rendered}")
            } else {
                write!(stderr, "{rendered}")
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Synth(a) => synth(a, stdout),
        Command::Extract(a) => extract(a),
        Command::Train(a) => train(a),
        Command::Score(a) => score(a),
        Command::Eval(a) => eval(a, stdout),
        Command::FuseTrain(a) => fuse_train(a),
        Command::FuseApply(a) => fuse_apply(a, stdout),
        Command::Intra(a) => intra(a, stdout),
        Command::Cross(a) => cross(a, stdout),
    };
    match result {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            1
        }
        Err(Failure::Data(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            2
        }
    }
}

fn check_fraction(f: f64) -> CmdResult {
    if f > 0.0 && f < 1.0 {
        Ok(())
    } else {
        Err(Failure::Usage(format!(
            "--train-fraction must be in (0, 1), got {f}"
        )))
    }
}

fn check_size(size: usize) -> CmdResult {
    if size >= 5 {
        Ok(())
    } else {
        Err(Failure::Usage(format!(
            "--canonical-size must be at least 5, got {size}"
        )))
    }
}

fn single_system(spec: &str) -> Result<SystemSpec, Failure> {
    let system: SystemSpec = spec
        .parse()
        .map_err(|e: protocol::ProtocolError| Failure::Usage(e.to_string()))?;
    if system.is_external() {
        return Err(Failure::Usage(
            "external systems have no features to extract".into(),
        ));
    }
    Ok(system)
}

fn systems_list(list: &str) -> Result<Vec<SystemSpec>, Failure> {
    parse_systems(list).map_err(|e| Failure::Usage(e.to_string()))
}

fn select(manifest: DatasetManifest, split: &SplitArgs) -> Result<DatasetManifest, Failure> {
    check_fraction(split.train_fraction)?;
    Ok(match split.split {
        SplitPart::All => manifest,
        SplitPart::Train => split_identities(&manifest, split.train_fraction, split.seed).0,
        SplitPart::Dev => split_identities(&manifest, split.train_fraction, split.seed).1,
    })
}

fn features_for(
    manifest: &Path,
    system: &SystemSpec,
    split: &SplitArgs,
    size: usize,
) -> Result<FeatureSet, Failure> {
    check_size(size)?;
    let m = select(parse_manifest(manifest)?, split)?;
    let mut sets = extract_features(&m, std::slice::from_ref(system), size)?;
    Ok(sets.remove(0))
}

fn emit(text: &str, out: Option<&Path>, stdout: &mut dyn Write) -> CmdResult {
    match out {
        Some(path) => {
            fs::write(path, text).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
        }
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Data(e.to_string())),
    }
}

fn synth(a: SynthArgs, stdout: &mut dyn Write) -> CmdResult {
    let family = FixtureFamily::preset(&a.family).ok_or_else(|| {
        Failure::Usage(format!(
            "unknown family '{}', expected alpha, beta or gamma",
            a.family
        ))
    })?;
    if a.size < 5 {
        return Err(Failure::Usage("--size must be at least 5".into()));
    }
    if a.radius <= 0.0 {
        return Err(Failure::Usage("--radius must be positive".into()));
    }
    if a.bonafide < 2 {
        return Err(Failure::Usage("--bonafide must be at least 2".into()));
    }
    let name = a.name.clone().unwrap_or_else(|| a.family.clone());
    let mut opts = DatasetOptions::new(&name, family, a.seed, a.bonafide, a.morphs);
    opts.size = a.size;
    opts.smoothing_radius = a.radius;
    let dataset = generate_dataset(&opts);
    dataset.write(&a.out)?;
    writeln!(
        stdout,
        "wrote {} images and {}",
        dataset.images.len(),
        a.out.join("manifest.tsv").display()
    )?;
    Ok(())
}

fn extract(a: ExtractArgs) -> CmdResult {
    let system = single_system(&a.system)?;
    let set = features_for(&a.manifest, &system, &a.split, a.canonical_size)?;
    set.save(&a.out)?;
    Ok(())
}

fn train(a: TrainArgs) -> CmdResult {
    let set = match (&a.features, &a.manifest, &a.system) {
        (Some(path), _, _) => FeatureSet::load(path)?,
        (None, Some(manifest), Some(system)) => features_for(
            manifest,
            &single_system(system)?,
            &a.split,
            a.canonical_size,
        )?,
        _ => {
            return Err(Failure::Usage(
                "give --features, or --manifest with --system".into(),
            ))
        }
    };
    if !(0.0..=1.0).contains(&a.shrinkage) {
        return Err(Failure::Usage("--shrinkage must be in [0, 1]".into()));
    }
    train_lda(&set, a.shrinkage)?.save(&a.out)?;
    Ok(())
}

fn score(a: ScoreArgs) -> CmdResult {
    let model = LdaModel::load(&a.model)?;
    let set = match (&a.features, &a.manifest) {
        (Some(path), _) => FeatureSet::load(path)?,
        (None, Some(manifest)) => {
            let system = single_system(&model.config)?;
            features_for(manifest, &system, &a.split, a.canonical_size)?
        }
        _ => return Err(Failure::Usage("give --features or --manifest".into())),
    };
    if set.system != model.config {
        return Err(Failure::Data(format!(
            "model was trained on '{}' features, got '{}'",
            model.config, set.system
        )));
    }
    score_features(&model, &set)?.save(&a.out)?;
    Ok(())
}

fn eval(a: EvalArgs, stdout: &mut dyn Write) -> CmdResult {
    let scores = ScoreSet::load(&a.scores)?;
    writeln!(stdout, "auc={:.6} eer={:.2}", auc(&scores)?, eer(&scores)?)?;
    Ok(())
}

fn fuse_train(a: FuseTrainArgs) -> CmdResult {
    let aligned = AlignedScores::align(&ScoreSet::load(&a.calib0)?, &ScoreSet::load(&a.calib1)?)?;
    protocol::train_fusion(&aligned)?.save(&a.out)?;
    Ok(())
}

fn fuse_apply(a: FuseApplyArgs, stdout: &mut dyn Write) -> CmdResult {
    let model = FusionModel::load(&a.model)?;
    let s0 = ScoreSet::load(&a.scores0)?;
    let s1 = ScoreSet::load(&a.scores1)?;
    let aligned = AlignedScores::align(&s0, &s1)?;
    let fused = protocol::fuse_scores(&model, &aligned);
    fused.save(&a.out)?;
    let labels = FusionLabels {
        calibration: a.calib_name,
        test: a.test_name,
        specs: a.specs,
    };
    let report = FusionReport {
        rows: vec![FusionRow {
            calibration: labels.calibration,
            test: labels.test,
            specs: labels.specs,
            fused_eer: eer(&fused)?,
            sys0_eer: eer(&s0)?,
            sys1_eer: eer(&s1)?,
        }],
    };
    let text = match a.format {
        Format::Csv => report.to_csv(),
        Format::Table => report.to_table(),
    };
    emit(&text, None, stdout)
}

fn intra(a: IntraArgs, stdout: &mut dyn Write) -> CmdResult {
    check_fraction(a.train_fraction)?;
    check_size(a.canonical_size)?;
    let systems = systems_list(&a.systems)?;
    let cfg = PipelineConfig {
        canonical_size: a.canonical_size,
        shrinkage: a.shrinkage,
        train_fraction: a.train_fraction,
    };
    let report = run_intra(&parse_manifest(&a.manifest)?, &systems, a.seed, &cfg)?;
    let text = match a.format {
        Format::Csv => report.to_csv(),
        Format::Table => report.to_table(),
    };
    emit(&text, a.out.as_deref(), stdout)
}

fn cross(a: CrossArgs, stdout: &mut dyn Write) -> CmdResult {
    check_size(a.canonical_size)?;
    let systems = systems_list(&a.systems)?;
    let cfg = PipelineConfig {
        canonical_size: a.canonical_size,
        shrinkage: a.shrinkage,
        ..PipelineConfig::default()
    };
    let report = if let Some(train) = &a.train {
        if a.test.is_empty() {
            return Err(Failure::Usage("--train needs at least one --test".into()));
        }
        let tests = a
            .test
            .iter()
            .map(|p| parse_manifest(p))
            .collect::<Result<Vec<_>, _>>()?;
        run_cross(&parse_manifest(train)?, &tests, &systems, &cfg)?
    } else {
        if a.grid.len() < 2 {
            return Err(Failure::Usage("--grid needs at least two manifests".into()));
        }
        let manifests = a
            .grid
            .iter()
            .map(|p| parse_manifest(p))
            .collect::<Result<Vec<_>, _>>()?;
        run_grid(&manifests, &systems, &cfg)?
    };
    let text = match a.format {
        Format::Csv => report.to_csv(),
        Format::Table => report.to_table(),
    };
    emit(&text, a.out.as_deref(), stdout)
}
