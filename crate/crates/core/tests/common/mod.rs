//! Independent reference implementations used as test oracles. Nothing here
//! calls into the library code paths it checks.

#![allow(dead_code)]

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

pub fn rng(seed: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

/// Row-major random image with values uniform in [0, 1).
pub fn random_pixels(w: usize, h: usize, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    (0..w * h).map(|_| r.random::<f64>()).collect()
}

/// riu2 bin by literally walking the circular bit string.
pub fn riu2_oracle(code: u32, p: usize) -> usize {
    let bits: Vec<u32> = (0..p).map(|k| (code >> k) & 1).collect();
    let transitions = (0..p).filter(|&k| bits[k] != bits[(k + 1) % p]).count();
    let ones = bits.iter().filter(|&&b| b == 1).count();
    if transitions <= 2 {
        ones
    } else {
        p + 1
    }
}

fn square_ring(p: usize, r: i64) -> Vec<(f64, f64)> {
    let unit: &[(i64, i64)] = match p {
        4 => &[(1, 0), (0, -1), (-1, 0), (0, 1)],
        8 => &[
            (1, 0),
            (1, -1),
            (0, -1),
            (-1, -1),
            (-1, 0),
            (-1, 1),
            (0, 1),
            (1, 1),
        ],
        _ => panic!("unsupported P"),
    };
    unit.iter()
        .map(|&(x, y)| ((x * r) as f64, (y * r) as f64))
        .collect()
}

fn circle(p: usize, r: f64) -> Vec<(f64, f64)> {
    (0..p)
        .map(|k| {
            let t = 2.0 * PI * k as f64 / p as f64;
            let clean = |v: f64| {
                if (v - v.round()).abs() < 1e-9 {
                    v.round()
                } else {
                    v
                }
            };
            (clean(r * t.cos()), clean(-r * t.sin()))
        })
        .collect()
}

/// Nested-loop LBP histogram straight from the definition.
pub fn lbp_histogram_oracle(
    pixels: &[f64],
    w: usize,
    h: usize,
    p: usize,
    r: usize,
    circular: bool,
    riu2: bool,
) -> Vec<f64> {
    let at = |x: usize, y: usize| pixels[y * w + x];
    let offsets = if circular {
        circle(p, r as f64)
    } else {
        square_ring(p, r as i64)
    };
    let bins = if riu2 { p + 2 } else { 1 << p };
    let mut counts = vec![0u64; bins];
    for cy in r..h - r {
        for cx in r..w - r {
            let center = at(cx, cy);
            let mut code = 0u32;
            for (k, &(ox, oy)) in offsets.iter().enumerate() {
                let (bx, by) = (ox.floor(), oy.floor());
                let (fx, fy) = (ox - bx, oy - by);
                let x0 = (cx as i64 + bx as i64) as usize;
                let y0 = (cy as i64 + by as i64) as usize;
                let x1 = if fx > 0.0 { x0 + 1 } else { x0 };
                let y1 = if fy > 0.0 { y0 + 1 } else { y0 };
                let top = at(x0, y0) + fx * (at(x1, y0) - at(x0, y0));
                let bottom = at(x0, y1) + fx * (at(x1, y1) - at(x0, y1));
                let v = top + fy * (bottom - top);
                if v >= center {
                    code |= 1 << k;
                }
            }
            let bin = if riu2 {
                riu2_oracle(code, p)
            } else {
                code as usize
            };
            counts[bin] += 1;
        }
    }
    let total = ((w - 2 * r) * (h - 2 * r)) as f64;
    counts.into_iter().map(|c| c as f64 / total).collect()
}

/// O(N⁴) DFT magnitude of the mean-subtracted image, shifted so that the
/// zero frequency sits at (w/2, h/2).
pub fn naive_dft_magnitude(pixels: &[f64], w: usize, h: usize) -> Vec<f64> {
    let mean = pixels.iter().sum::<f64>() / (w * h) as f64;
    let mut out = vec![0.0; w * h];
    for v in 0..h {
        for u in 0..w {
            let (mut re, mut im) = (0.0, 0.0);
            for y in 0..h {
                for x in 0..w {
                    let angle = -2.0 * PI * ((u * x) as f64 / w as f64 + (v * y) as f64 / h as f64);
                    let val = pixels[y * w + x] - mean;
                    re += val * angle.cos();
                    im += val * angle.sin();
                }
            }
            let sx = (u + w / 2) % w;
            let sy = (v + h / 2) % h;
            out[sy * w + sx] = (re * re + im * im).sqrt();
        }
    }
    out
}

/// Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        let pivot_row = a[col].clone();
        for row in col + 1..n {
            let f = a[row][col] / pivot_row[col];
            for (x, p) in a[row][col..].iter_mut().zip(&pivot_row[col..]) {
                *x -= f * p;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// Pooled within-class covariance, unshrunk.
pub fn pooled_covariance(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = a[0].len();
    let mean = |s: &[Vec<f64>]| -> Vec<f64> {
        (0..d)
            .map(|j| s.iter().map(|v| v[j]).sum::<f64>() / s.len() as f64)
            .collect()
    };
    let (ma, mb) = (mean(a), mean(b));
    let mut cov = vec![vec![0.0; d]; d];
    for (set, m) in [(a, &ma), (b, &mb)] {
        for v in set {
            for i in 0..d {
                for j in 0..d {
                    cov[i][j] += (v[i] - m[i]) * (v[j] - m[j]);
                }
            }
        }
    }
    let dof = (a.len() + b.len() - 2) as f64;
    cov.iter()
        .map(|r| r.iter().map(|c| c / dof).collect())
        .collect()
}

pub fn angle_degrees(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    (dot / (na * nb)).clamp(-1.0, 1.0).acos().to_degrees()
}

/// AUC by counting all (morph, bona fide) pairs.
pub fn auc_pairs(bona: &[f64], morph: &[f64]) -> f64 {
    let mut s = 0.0;
    for &m in morph {
        for &b in bona {
            if m > b {
                s += 1.0;
            } else if m == b {
                s += 0.5;
            }
        }
    }
    s / (bona.len() * morph.len()) as f64
}

/// EER (percent) by brute-force threshold enumeration: FAR/FRR recounted
/// from scratch at every distinct score and at +inf, then linear
/// interpolation at the first sign change of FAR - FRR.
pub fn eer_sweep(bona: &[f64], morph: &[f64]) -> f64 {
    let mut thresholds: Vec<f64> = bona.iter().chain(morph).cloned().collect();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    thresholds.push(f64::INFINITY);
    let rates: Vec<(f64, f64)> = thresholds
        .iter()
        .map(|&t| {
            let far = bona.iter().filter(|&&b| b >= t).count() as f64 / bona.len() as f64;
            let frr = morph.iter().filter(|&&m| m < t).count() as f64 / morph.len() as f64;
            (far, frr)
        })
        .collect();
    for i in 0..rates.len() {
        let (far, frr) = rates[i];
        if far - frr <= 0.0 {
            if far == frr || i == 0 {
                return 100.0 * far;
            }
            let (pfar, pfrr) = rates[i - 1];
            let (d0, d1) = (pfar - pfrr, far - frr);
            let t = d0 / (d0 - d1);
            return 100.0 * (pfar + t * (far - pfar));
        }
    }
    unreachable!()
}
