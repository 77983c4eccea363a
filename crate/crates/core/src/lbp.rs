//! Local Binary Pattern histograms.
//!
//! Twelve configurations are supported: neighborhoods `(P, R)` of `(4, 1)`,
//! `(8, 1)` and `(8, 2)`, a circular or square sampling ring, and optional
//! rotation-invariant uniform (riu2) regrouping of the codes.
//!
//! Conventions:
//! - neighbor `k` sits at angle `2πk/P`, starting to the right of the center
//!   and going counter-clockwise (with image rows pointing down, that is
//!   `dx = R cos θ`, `dy = -R sin θ`);
//! - bit `k` of the code is set iff `neighbor[k] >= center`, bit 0 least
//!   significant;
//! - pixels closer than `R` to any border are skipped.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::image::{lerp, GrayImage};

#[derive(Debug, Error, PartialEq)]
pub enum LbpError {
    #[error("pixel ({x}, {y}) is within {radius} pixels of the border")]
    OutOfBounds { x: usize, y: usize, radius: usize },
    #[error("image {width}x{height} is too small for radius {radius}")]
    ImageTooSmall {
        width: usize,
        height: usize,
        radius: usize,
    },
    #[error("invalid LBP config '{0}', expected lbp-<4|8>-<1|2>-<c|s>-<none|riu2>")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Shape {
    Circular,
    Square,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regroup {
    None,
    Riu2,
}

/// One LBP variant. Only the three neighborhoods `(4,1)`, `(8,1)`, `(8,2)`
/// can be constructed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LbpConfig {
    neighbors: usize,
    radius: usize,
    shape: Shape,
    regroup: Regroup,
}

const NEIGHBORHOODS: [(usize, usize); 3] = [(4, 1), (8, 1), (8, 2)];

impl LbpConfig {
    pub fn new(
        neighbors: usize,
        radius: usize,
        shape: Shape,
        regroup: Regroup,
    ) -> Result<Self, LbpError> {
        if !NEIGHBORHOODS.contains(&(neighbors, radius)) {
            return Err(LbpError::InvalidConfig(format!("lbp-{neighbors}-{radius}")));
        }
        Ok(Self {
            neighbors,
            radius,
            shape,
            regroup,
        })
    }

    pub fn neighbors(&self) -> usize {
        self.neighbors
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn regroup(&self) -> Regroup {
        self.regroup
    }

    pub fn histogram_len(&self) -> usize {
        match self.regroup {
            Regroup::None => 1 << self.neighbors,
            Regroup::Riu2 => self.neighbors + 2,
        }
    }

    /// Table-style label, e.g. `(8,2) ○` or `RIU2 (8,1) □`.
    pub fn label(&self) -> String {
        let glyph = match self.shape {
            Shape::Circular => '○',
            Shape::Square => '□',
        };
        let prefix = match self.regroup {
            Regroup::None => "",
            Regroup::Riu2 => "RIU2 ",
        };
        format!("{prefix}({},{}) {glyph}", self.neighbors, self.radius)
    }

    /// Sub-pixel offsets `(dx, dy)` of the `P` neighbors relative to the center.
    pub fn offsets(&self) -> Vec<(f64, f64)> {
        let r = self.radius as f64;
        (0..self.neighbors)
            .map(|k| {
                let theta = 2.0 * std::f64::consts::PI * k as f64 / self.neighbors as f64;
                let (sin, cos) = theta.sin_cos();
                match self.shape {
                    Shape::Circular => (snap(r * cos), snap(-r * sin)),
                    Shape::Square => {
                        // Corners and edge midpoints of the Chebyshev ring.
                        let dx = (cos * std::f64::consts::SQRT_2).round();
                        let dy = (-sin * std::f64::consts::SQRT_2).round();
                        (dx * r, dy * r)
                    }
                }
            })
            .collect()
    }
}

// Removes trig round-off so axis-aligned samples land exactly on pixels.
fn snap(v: f64) -> f64 {
    let r = v.round();
    if (v - r).abs() < 1e-9 {
        r
    } else {
        v
    }
}

impl fmt::Display for LbpConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let shape = match self.shape {
            Shape::Circular => 'c',
            Shape::Square => 's',
        };
        let regroup = match self.regroup {
            Regroup::None => "none",
            Regroup::Riu2 => "riu2",
        };
        write!(
            f,
            "lbp-{}-{}-{shape}-{regroup}",
            self.neighbors, self.radius
        )
    }
}

impl FromStr for LbpConfig {
    type Err = LbpError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let invalid = || LbpError::InvalidConfig(s.to_string());
        let parts: Vec<&str> = s.split('-').collect();
        let [prefix, p, r, shape, regroup] = parts.as_slice() else {
            return Err(invalid());
        };
        if *prefix != "lbp" {
            return Err(invalid());
        }
        let p: usize = p.parse().map_err(|_| invalid())?;
        let r: usize = r.parse().map_err(|_| invalid())?;
        let shape = match *shape {
            "c" => Shape::Circular,
            "s" => Shape::Square,
            _ => return Err(invalid()),
        };
        let regroup = match *regroup {
            "none" => Regroup::None,
            "riu2" => Regroup::Riu2,
            _ => return Err(invalid()),
        };
        LbpConfig::new(p, r, shape, regroup).map_err(|_| invalid())
    }
}

/// All twelve configurations, ordered by neighborhood `(4,1)`, `(8,1)`,
/// `(8,2)`, then shape (circular, square), then regrouping (none, riu2).
pub fn enumerate_configs() -> Vec<LbpConfig> {
    let mut out = Vec::with_capacity(12);
    for (p, r) in NEIGHBORHOODS {
        for shape in [Shape::Circular, Shape::Square] {
            for regroup in [Regroup::None, Regroup::Riu2] {
                out.push(LbpConfig {
                    neighbors: p,
                    radius: r,
                    shape,
                    regroup,
                });
            }
        }
    }
    out
}

/// Reads the `P` neighbor values around `(cx, cy)` in declared order.
pub fn sample_neighbors(
    img: &GrayImage,
    cx: usize,
    cy: usize,
    cfg: &LbpConfig,
) -> Result<Vec<f64>, LbpError> {
    let r = cfg.radius;
    if cx < r || cy < r || cx + r >= img.width() || cy + r >= img.height() {
        return Err(LbpError::OutOfBounds {
            x: cx,
            y: cy,
            radius: r,
        });
    }
    Ok(Sampler::new(cfg)
        .points
        .iter()
        .map(|pt| pt.sample(img, cx, cy))
        .collect())
}

/// Code with bit `k` set iff `neighbors[k] >= center`.
pub fn lbp_code(center: f64, neighbors: &[f64]) -> u32 {
    neighbors
        .iter()
        .enumerate()
        .filter(|(_, &v)| v >= center)
        .fold(0, |code, (k, _)| code | (1 << k))
}

/// Rotation-invariant uniform bin of a `P`-bit code: the number of set bits
/// for codes with at most two circular 0/1 transitions, `P + 1` otherwise.
pub fn riu2_map(code: u32, neighbors: usize) -> usize {
    let mask = (1u32 << neighbors) - 1;
    let code = code & mask;
    let rotated = ((code >> 1) | ((code & 1) << (neighbors - 1))) & mask;
    let transitions = (code ^ rotated).count_ones();
    if transitions <= 2 {
        code.count_ones() as usize
    } else {
        neighbors + 1
    }
}

/// L1-normalized histogram of LBP codes over the image interior.
pub fn lbp_histogram(img: &GrayImage, cfg: &LbpConfig) -> Result<Vec<f64>, LbpError> {
    let r = cfg.radius;
    if img.width() <= 2 * r || img.height() <= 2 * r {
        return Err(LbpError::ImageTooSmall {
            width: img.width(),
            height: img.height(),
            radius: r,
        });
    }
    let sampler = Sampler::new(cfg);
    let riu2: Option<Vec<usize>> = match cfg.regroup {
        Regroup::None => None,
        Regroup::Riu2 => Some(
            (0..1u32 << cfg.neighbors)
                .map(|c| riu2_map(c, cfg.neighbors))
                .collect(),
        ),
    };
    let mut counts = vec![0u64; cfg.histogram_len()];
    for cy in r..img.height() - r {
        for cx in r..img.width() - r {
            let center = img.get(cx, cy);
            let mut code = 0u32;
            for (k, pt) in sampler.points.iter().enumerate() {
                if pt.sample_relative(img, cx, cy, center) >= 0.0 {
                    code |= 1 << k;
                }
            }
            let bin = match &riu2 {
                Some(table) => table[code as usize],
                None => code as usize,
            };
            counts[bin] += 1;
        }
    }
    let total = ((img.width() - 2 * r) * (img.height() - 2 * r)) as f64;
    Ok(counts.into_iter().map(|c| c as f64 / total).collect())
}

/// Precomputed integer base offsets and fractional weights for one config.
struct Sampler {
    points: Vec<SamplePoint>,
}

struct SamplePoint {
    dx: isize,
    dy: isize,
    fx: f64,
    fy: f64,
}

impl Sampler {
    fn new(cfg: &LbpConfig) -> Self {
        let points = cfg
            .offsets()
            .into_iter()
            .map(|(ox, oy)| {
                let (bx, by) = (ox.floor(), oy.floor());
                SamplePoint {
                    dx: bx as isize,
                    dy: by as isize,
                    fx: ox - bx,
                    fy: oy - by,
                }
            })
            .collect();
        Self { points }
    }
}

impl SamplePoint {
    #[inline]
    fn sample(&self, img: &GrayImage, cx: usize, cy: usize) -> f64 {
        self.sample_relative(img, cx, cy, 0.0)
    }

    /// Interpolates `pixel - reference` rather than raw pixels. With
    /// irrational weights an interpolated neighbor can equal the center in
    /// exact arithmetic; differencing first makes the rounding of that tie
    /// independent of the image's brightness offset.
    #[inline]
    fn sample_relative(&self, img: &GrayImage, cx: usize, cy: usize, reference: f64) -> f64 {
        let x0 = (cx as isize + self.dx) as usize;
        let y0 = (cy as isize + self.dy) as usize;
        let at = |x, y| img.get(x, y) - reference;
        if self.fx == 0.0 && self.fy == 0.0 {
            return at(x0, y0);
        }
        // A non-zero fraction never occurs on the outermost ring pixel, so
        // x0 + 1 / y0 + 1 stay in bounds.
        let x1 = if self.fx == 0.0 { x0 } else { x0 + 1 };
        let y1 = if self.fy == 0.0 { y0 } else { y0 + 1 };
        let top = lerp(at(x0, y0), at(x1, y0), self.fx);
        let bottom = lerp(at(x0, y1), at(x1, y1), self.fx);
        lerp(top, bottom, self.fy)
    }
}
