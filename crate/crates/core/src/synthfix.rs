//! Deterministic synthetic datasets standing in for bona fide and deep-morph
//! face images.
//!
//! Each identity owns a smooth base pattern (a few low-frequency 2-D
//! cosines). A bona fide image is its identity's pattern plus per-pixel
//! Gaussian noise. A morph averages the patterns of two identities, adds
//! noise the same way, then applies a Gaussian blur, which removes most of
//! the high-frequency texture.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use rand::{Rng, RngCore, SeedableRng};
use rand_distr::{Distribution, Normal};
use rand_xoshiro::SplitMix64;

use crate::image::{GrayImage, ImageLoadError};
use crate::metrics::Label;
use crate::protocol::{DatasetManifest, ProtocolError, Sample};

pub const DEFAULT_SMOOTHING_RADIUS: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FixtureKind {
    /// Base pattern plus noise; bona fide images.
    Textured,
    /// Textured construction followed by a blur; morphs.
    Smoothed,
}

/// Statistics of the base patterns and noise; the presets differ enough to
/// act as separate datasets in a cross-dataset grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FixtureFamily {
    pub name: String,
    /// Number of cosine components per identity pattern.
    pub components: usize,
    /// Highest spatial frequency of a component, in cycles per image side.
    pub max_cycles: f64,
    /// Peak-to-mean amplitude of the base pattern.
    pub contrast: f64,
    /// Standard deviation of the per-pixel noise.
    pub noise_sigma: f64,
}

impl FixtureFamily {
    /// Presets `alpha`, `beta` and `gamma`.
    pub fn preset(name: &str) -> Option<FixtureFamily> {
        let (components, max_cycles, contrast, noise_sigma) = match name {
            "alpha" => (4, 6.0, 0.25, 0.05),
            "beta" => (8, 12.0, 0.20, 0.03),
            "gamma" => (3, 4.0, 0.30, 0.08),
            _ => return None,
        };
        Some(FixtureFamily {
            name: name.to_string(),
            components,
            max_cycles,
            contrast,
            noise_sigma,
        })
    }

    pub fn presets() -> Vec<FixtureFamily> {
        ["alpha", "beta", "gamma"]
            .iter()
            .map(|n| Self::preset(n).unwrap())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixtureSpec {
    pub seed: u64,
    pub count: usize,
    pub kind: FixtureKind,
    /// Gaussian blur sigma in pixels; used by [`FixtureKind::Smoothed`] only.
    pub smoothing_radius: f64,
    /// Side length of the square images.
    pub size: usize,
    /// Size of the identity pool shared by both kinds for a given seed.
    pub identities: usize,
    pub family: FixtureFamily,
}

/// One generated image and its manifest entry.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub sample: Sample,
    pub image: GrayImage,
}

// Stream tags keep the random streams of different purposes independent.
const TAG_IDENTITY: u64 = 1;
const TAG_BONAFIDE: u64 = 2;
const TAG_MORPH: u64 = 3;

fn stream(seed: u64, tag: u64, index: u64) -> SplitMix64 {
    let mut mixer = SplitMix64::seed_from_u64(seed ^ tag.wrapping_mul(0xA076_1D64_78BD_642F));
    let base = mixer.next_u64();
    SplitMix64::seed_from_u64(base ^ index.wrapping_mul(0xE703_7ED1_A0B4_28DB))
}

fn identity_name(i: usize) -> String {
    format!("id{i:04}")
}

struct Cosine {
    fx: f64,
    fy: f64,
    phase: f64,
    amplitude: f64,
}

fn identity_pattern(spec: &FixtureSpec, identity: usize) -> Vec<Cosine> {
    let fam = &spec.family;
    let mut rng = stream(spec.seed, TAG_IDENTITY, identity as u64);
    let raw: Vec<(f64, f64, f64, f64)> = (0..fam.components)
        .map(|_| {
            let radius = rng.random_range(1.0..=fam.max_cycles);
            let angle = rng.random_range(0.0..PI);
            (
                radius * angle.cos(),
                radius * angle.sin(),
                rng.random_range(0.0..2.0 * PI),
                rng.random_range(0.5..1.0),
            )
        })
        .collect();
    let total: f64 = raw.iter().map(|c| c.3).sum();
    raw.into_iter()
        .map(|(fx, fy, phase, a)| Cosine {
            fx,
            fy,
            phase,
            amplitude: fam.contrast * a / total,
        })
        .collect()
}

fn render(size: usize, patterns: &[&[Cosine]], noise_sigma: f64, rng: &mut SplitMix64) -> Vec<f64> {
    let noise = Normal::new(0.0, noise_sigma).expect("noise sigma is finite and non-negative");
    let weight = 1.0 / patterns.len() as f64;
    let mut pixels = Vec::with_capacity(size * size);
    for y in 0..size {
        for x in 0..size {
            let (u, v) = (x as f64 / size as f64, y as f64 / size as f64);
            let base: f64 = patterns
                .iter()
                .flat_map(|p| p.iter())
                .map(|c| c.amplitude * (2.0 * PI * (c.fx * u + c.fy * v) + c.phase).cos())
                .sum::<f64>()
                * weight;
            pixels.push(0.5 + base + noise.sample(rng));
        }
    }
    pixels
}

fn clamp_image(size: usize, pixels: Vec<f64>) -> GrayImage {
    let pixels = pixels.into_iter().map(|v| v.clamp(0.0, 1.0)).collect();
    GrayImage::new(size, size, pixels).expect("size and range are valid by construction")
}

/// Separable Gaussian blur with reflected borders; the kernel spans ±3σ.
pub fn gaussian_blur(pixels: &[f64], width: usize, height: usize, sigma: f64) -> Vec<f64> {
    let half = (3.0 * sigma).ceil() as isize;
    let kernel: Vec<f64> = (-half..=half)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let norm: f64 = kernel.iter().sum();
    let kernel: Vec<f64> = kernel.into_iter().map(|k| k / norm).collect();
    let reflect = |i: isize, n: usize| -> usize {
        let n = n as isize;
        let mut i = i;
        while i < 0 || i >= n {
            i = if i < 0 { -i - 1 } else { 2 * n - i - 1 };
        }
        i as usize
    };
    let mut tmp = vec![0.0; pixels.len()];
    for y in 0..height {
        for x in 0..width {
            tmp[y * width + x] = kernel
                .iter()
                .enumerate()
                .map(|(k, w)| {
                    w * pixels[y * width + reflect(x as isize + k as isize - half, width)]
                })
                .sum();
        }
    }
    let mut out = vec![0.0; pixels.len()];
    for y in 0..height {
        for x in 0..width {
            out[y * width + x] = kernel
                .iter()
                .enumerate()
                .map(|(k, w)| w * tmp[reflect(y as isize + k as isize - half, height) * width + x])
                .sum();
        }
    }
    out
}

/// Generates `spec.count` images of one kind, with manifest entries named
/// `bona_NNNN.pgm` or `morph_NNNN.pgm`.
///
/// Textured image `i` belongs to identity `i mod identities`. Smoothed
/// images draw two distinct identities from the same pool.
///
/// # Panics
///
/// Panics if the pool has fewer than 2 identities, or if a smoothed spec has
/// a non-positive smoothing radius.
pub fn generate(spec: &FixtureSpec) -> Vec<Fixture> {
    assert!(
        spec.identities >= 2,
        "identity pool needs at least 2 identities"
    );
    if spec.kind == FixtureKind::Smoothed {
        assert!(
            spec.smoothing_radius > 0.0,
            "smoothing radius must be positive"
        );
    }
    let patterns: Vec<Vec<Cosine>> = (0..spec.identities)
        .map(|i| identity_pattern(spec, i))
        .collect();
    (0..spec.count)
        .map(|i| match spec.kind {
            FixtureKind::Textured => {
                let id = i % spec.identities;
                let mut rng = stream(spec.seed, TAG_BONAFIDE, i as u64);
                let pixels = render(
                    spec.size,
                    &[&patterns[id]],
                    spec.family.noise_sigma,
                    &mut rng,
                );
                Fixture {
                    sample: Sample {
                        path: format!("bona_{i:04}.pgm"),
                        label: Label::Bonafide,
                        identities: vec![identity_name(id)],
                    },
                    image: clamp_image(spec.size, pixels),
                }
            }
            FixtureKind::Smoothed => {
                let mut rng = stream(spec.seed, TAG_MORPH, i as u64);
                let a = rng.random_range(0..spec.identities);
                let b = (a + rng.random_range(1..spec.identities)) % spec.identities;
                let pixels = render(
                    spec.size,
                    &[&patterns[a], &patterns[b]],
                    spec.family.noise_sigma,
                    &mut rng,
                );
                let blurred = gaussian_blur(&pixels, spec.size, spec.size, spec.smoothing_radius);
                Fixture {
                    sample: Sample {
                        path: format!("morph_{i:04}.pgm"),
                        label: Label::Morph,
                        identities: vec![identity_name(a), identity_name(b)],
                    },
                    image: clamp_image(spec.size, blurred),
                }
            }
        })
        .collect()
}

/// A bona fide + morph dataset held in memory.
#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub manifest: DatasetManifest,
    pub images: Vec<GrayImage>,
}

/// Options for [`generate_dataset`].
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetOptions {
    pub name: String,
    pub family: FixtureFamily,
    pub seed: u64,
    pub bonafide: usize,
    pub morphs: usize,
    pub size: usize,
    pub smoothing_radius: f64,
}

impl DatasetOptions {
    pub fn new(
        name: &str,
        family: FixtureFamily,
        seed: u64,
        bonafide: usize,
        morphs: usize,
    ) -> Self {
        Self {
            name: name.to_string(),
            family,
            seed,
            bonafide,
            morphs,
            size: crate::image::CANONICAL_SIZE,
            smoothing_radius: DEFAULT_SMOOTHING_RADIUS,
        }
    }

    /// Identity pool size: one identity per four bona fide images, at
    /// least 4.
    pub fn identities(&self) -> usize {
        (self.bonafide / 4).max(4)
    }
}

pub fn generate_dataset(opts: &DatasetOptions) -> SyntheticDataset {
    let spec = |kind, count| FixtureSpec {
        seed: opts.seed,
        count,
        kind,
        smoothing_radius: opts.smoothing_radius,
        size: opts.size,
        identities: opts.identities(),
        family: opts.family.clone(),
    };
    let fixtures: Vec<Fixture> = generate(&spec(FixtureKind::Textured, opts.bonafide))
        .into_iter()
        .chain(generate(&spec(FixtureKind::Smoothed, opts.morphs)))
        .collect();
    let (samples, images): (Vec<Sample>, Vec<GrayImage>) =
        fixtures.into_iter().map(|f| (f.sample, f.image)).unzip();
    let manifest = DatasetManifest::new(opts.name.clone(), samples)
        .expect("generated samples satisfy the manifest invariants");
    SyntheticDataset { manifest, images }
}

impl SyntheticDataset {
    /// Writes every image as PGM next to `manifest.tsv` in `dir`, and
    /// returns the on-disk manifest.
    pub fn write(&self, dir: &Path) -> Result<DatasetManifest, ProtocolError> {
        fs::create_dir_all(dir).map_err(|e| ProtocolError::io(dir, e))?;
        for (sample, image) in self.manifest.samples.iter().zip(&self.images) {
            image
                .write_pgm(&dir.join(&sample.path))
                .map_err(|e: ImageLoadError| ProtocolError::Image(e))?;
        }
        self.manifest.save(&dir.join("manifest.tsv"))?;
        Ok(self.manifest.clone().with_base_dir(dir))
    }
}
