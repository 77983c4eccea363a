//! Fourier-domain features: centered magnitude spectrum of the
//! mean-subtracted image, averaged over integer-radius frequency bands.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use thiserror::Error;

use crate::image::GrayImage;

#[derive(Debug, Error, PartialEq)]
pub enum SpectralError {
    #[error("requested {requested} bands but at most {max} fit the spectrum")]
    BandCountTooLarge { requested: usize, max: usize },
}

/// Real 2-D array with the zero frequency at `(width / 2, height / 2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Spectrum {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), width * height, "spectrum size mismatch");
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn center(&self) -> (usize, usize) {
        (self.width / 2, self.height / 2)
    }

    pub fn transposed(&self) -> Spectrum {
        let mut data = Vec::with_capacity(self.data.len());
        for x in 0..self.width {
            for y in 0..self.height {
                data.push(self.get(x, y));
            }
        }
        Spectrum::new(self.height, self.width, data)
    }

    /// Largest band count [`radial_profile`] accepts for this spectrum.
    pub fn max_bands(&self) -> usize {
        self.width.min(self.height) / 2
    }
}

/// Azimuthally averaged band energies; band 0 is DC.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialSpectrum {
    pub bands: Vec<f64>,
}

/// Centered magnitude of the 2-D DFT of the mean-subtracted image.
pub fn magnitude_spectrum(img: &GrayImage) -> Spectrum {
    let (w, h) = (img.width(), img.height());
    let mean = img.pixels().iter().sum::<f64>() / (w * h) as f64;
    let mut buf: Vec<Complex64> = img
        .pixels()
        .iter()
        .map(|&v| Complex64::new(v - mean, 0.0))
        .collect();

    let mut planner = FftPlanner::<f64>::new();
    let row_fft = planner.plan_fft_forward(w);
    row_fft.process(&mut buf);

    let col_fft = planner.plan_fft_forward(h);
    let mut column = vec![Complex64::default(); h];
    for x in 0..w {
        for y in 0..h {
            column[y] = buf[y * w + x];
        }
        col_fft.process(&mut column);
        for y in 0..h {
            buf[y * w + x] = column[y];
        }
    }

    // fftshift: frequency (u, v) moves to ((u + w/2) mod w, (v + h/2) mod h).
    let mut data = vec![0.0; w * h];
    for v in 0..h {
        let sy = (v + h / 2) % h;
        for u in 0..w {
            let sx = (u + w / 2) % w;
            data[sy * w + sx] = buf[v * w + u].norm();
        }
    }
    Spectrum::new(w, h, data)
}

/// Mean magnitude over coefficients whose rounded distance to the center
/// equals each band index, for bands `0..bands`.
pub fn radial_profile(spectrum: &Spectrum, bands: usize) -> Result<RadialSpectrum, SpectralError> {
    let max = spectrum.max_bands();
    if bands > max {
        return Err(SpectralError::BandCountTooLarge {
            requested: bands,
            max,
        });
    }
    let (cx, cy) = spectrum.center();
    let mut sums = vec![0.0; bands];
    let mut counts = vec![0usize; bands];
    for y in 0..spectrum.height() {
        let dy = y as f64 - cy as f64;
        for x in 0..spectrum.width() {
            let dx = x as f64 - cx as f64;
            let band = (dx * dx + dy * dy).sqrt().round() as usize;
            if band < bands {
                sums[band] += spectrum.get(x, y);
                counts[band] += 1;
            }
        }
    }
    let bands = sums
        .into_iter()
        .zip(counts)
        .map(|(s, n)| if n == 0 { 0.0 } else { s / n as f64 })
        .collect();
    Ok(RadialSpectrum { bands })
}

/// Profiles whose maximum is below this are round-off from a constant image.
const ZERO_PROFILE: f64 = 1e-9;

/// Radial profile with `min(width, height) / 2` bands, divided by its
/// maximum. An all-zero profile maps to the zero vector.
pub fn fourier_features(img: &GrayImage) -> Vec<f64> {
    let spectrum = magnitude_spectrum(img);
    let profile = radial_profile(&spectrum, spectrum.max_bands())
        .expect("max_bands always fits")
        .bands;
    let max = profile.iter().cloned().fold(0.0, f64::max);
    if max > ZERO_PROFILE {
        profile.into_iter().map(|v| v / max).collect()
    } else {
        vec![0.0; profile.len()]
    }
}
