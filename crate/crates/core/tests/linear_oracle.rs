mod common;

use deepmad_core::linear::{fuse_score, lda_score, lda_train, logreg_train, FUSION_L2};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

fn gaussian_cloud(n: usize, mean: [f64; 2], seed: u64) -> Vec<Vec<f64>> {
    // Correlated covariance [[2, 0.8], [0.8, 1]] via its Cholesky factor.
    let mut r = common::rng(seed);
    (0..n)
        .map(|_| {
            let a: f64 = StandardNormal.sample(&mut r);
            let b: f64 = StandardNormal.sample(&mut r);
            let l11 = 2f64.sqrt();
            let l21 = 0.8 / l11;
            let l22 = (1.0 - l21 * l21).sqrt();
            vec![mean[0] + l11 * a, mean[1] + l21 * a + l22 * b]
        })
        .collect()
}

fn class_mean(s: &[Vec<f64>]) -> Vec<f64> {
    (0..s[0].len())
        .map(|j| s.iter().map(|v| v[j]).sum::<f64>() / s.len() as f64)
        .collect()
}

/// Mean logistic loss plus the weight penalty, written out directly.
fn objective(p: [f64; 3], scores: &[(f64, f64)], y: &[bool]) -> f64 {
    let n = scores.len() as f64;
    let nll: f64 = scores
        .iter()
        .zip(y)
        .map(|(&(a, b), &m)| {
            let z = p[0] * a + p[1] * b + p[2];
            let prob = 1.0 / (1.0 + (-z).exp());
            if m {
                -prob.ln()
            } else {
                -(1.0 - prob).ln()
            }
        })
        .sum();
    nll / n + 0.5 * FUSION_L2 * (p[0] * p[0] + p[1] * p[1])
}

fn overlapping_scores(seed: u64, n: usize) -> (Vec<(f64, f64)>, Vec<bool>) {
    let mut r = common::rng(seed);
    let mut scores = Vec::new();
    let mut labels = Vec::new();
    for i in 0..n {
        let m = i % 2 == 0;
        let shift = if m { 1.0 } else { -1.0 };
        let a: f64 = StandardNormal.sample(&mut r);
        let b: f64 = StandardNormal.sample(&mut r);
        scores.push((shift + a, 0.5 * shift + 2.0 * b));
        labels.push(m);
    }
    (scores, labels)
}

#[test]
fn lda_direction_matches_closed_form() {
    let bona = gaussian_cloud(200, [0.0, 0.0], 1);
    let morph = gaussian_cloud(200, [1.5, -0.5], 2);
    let model = lda_train(&bona, &morph, 1e-3, "test").unwrap();

    let cov = common::pooled_covariance(&bona, &morph);
    let (mb, mm) = (class_mean(&bona), class_mean(&morph));
    let diff: Vec<f64> = mm.iter().zip(&mb).map(|(a, b)| a - b).collect();
    let reference = common::gauss_solve(cov, diff);
    let angle = common::angle_degrees(&model.weights, &reference);
    assert!(angle < 2.0, "angle {angle}");

    // Midpoint of projected means sits at score 0.
    let mid: Vec<f64> = mm.iter().zip(&mb).map(|(a, b)| 0.5 * (a + b)).collect();
    assert!(lda_score(&model, &mid).unwrap().abs() < 1e-9);
}

#[test]
fn lda_score_is_a_dot_product() {
    let bona = gaussian_cloud(50, [0.0, 0.0], 3);
    let morph = gaussian_cloud(50, [1.0, 1.0], 4);
    let model = lda_train(&bona, &morph, 0.1, "test").unwrap();
    let mut r = common::rng(5);
    for _ in 0..20 {
        let x = vec![r.random::<f64>() * 4.0 - 2.0, r.random::<f64>() * 4.0 - 2.0];
        let expected = model.weights[0] * x[0] + model.weights[1] * x[1] + model.bias;
        assert_eq!(lda_score(&model, &x).unwrap(), expected);
    }
}

#[test]
fn logreg_gradient_vanishes_at_optimum() {
    let (scores, labels) = overlapping_scores(11, 300);
    let model = logreg_train(&scores, &labels).unwrap();
    assert!(model.meta.converged);
    let p = [model.w0, model.w1, model.bias];
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for i in 0..3 {
        let (mut up, mut down) = (p, p);
        up[i] += h;
        down[i] -= h;
        let g = (objective(up, &scores, &labels) - objective(down, &scores, &labels)) / (2.0 * h);
        worst = worst.max(g.abs());
    }
    assert!(worst < 1e-6, "finite-difference gradient {worst}");
}

#[test]
fn fused_duplicate_system_keeps_ranking() {
    let (scores, labels) = overlapping_scores(12, 200);
    let dup: Vec<(f64, f64)> = scores.iter().map(|&(a, _)| (a, a)).collect();
    let model = logreg_train(&dup, &labels).unwrap();
    assert!(model.w0 + model.w1 > 0.0);
    let mut by_raw: Vec<usize> = (0..dup.len()).collect();
    let mut by_fused = by_raw.clone();
    by_raw.sort_by(|&i, &j| dup[i].0.total_cmp(&dup[j].0));
    by_fused.sort_by(|&i, &j| {
        fuse_score(&model, dup[i].0, dup[i].1).total_cmp(&fuse_score(&model, dup[j].0, dup[j].1))
    });
    assert_eq!(by_raw, by_fused);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn lda_ignores_sample_order(seed in any::<u64>(), rot in 1usize..30) {
        let bona = gaussian_cloud(30, [0.0, 0.0], seed);
        let morph = gaussian_cloud(30, [1.0, 0.5], seed ^ 0xabc);
        let a = lda_train(&bona, &morph, 1e-3, "x").unwrap();
        let mut bona2 = bona.clone();
        let mut morph2 = morph.clone();
        bona2.rotate_left(rot);
        morph2.reverse();
        let b = lda_train(&bona2, &morph2, 1e-3, "x").unwrap();
        for (x, y) in a.weights.iter().zip(&b.weights) {
            prop_assert!((x - y).abs() < 1e-9 * x.abs().max(1.0));
        }
        prop_assert!((a.bias - b.bias).abs() < 1e-9 * a.bias.abs().max(1.0));
    }

    #[test]
    fn lda_ranking_survives_feature_scaling(seed in any::<u64>(), sx in 0.1f64..10.0, sy in 0.1f64..10.0) {
        // Unshrunk LDA is equivariant under per-feature scaling.
        let bona = gaussian_cloud(40, [0.0, 0.0], seed);
        let morph = gaussian_cloud(40, [1.0, -1.0], seed ^ 0x55);
        let scale = |s: &[Vec<f64>]| -> Vec<Vec<f64>> { s.iter().map(|v| vec![v[0] * sx, v[1] * sy]).collect() };
        let a = lda_train(&bona, &morph, 0.0, "x").unwrap();
        let b = lda_train(&scale(&bona), &scale(&morph), 0.0, "x").unwrap();
        let all: Vec<Vec<f64>> = bona.iter().chain(&morph).cloned().collect();
        let scaled = scale(&all);
        for (x, y) in all.iter().zip(&scaled) {
            let (p, q) = (lda_score(&a, x).unwrap(), lda_score(&b, y).unwrap());
            prop_assert!((p - q).abs() < 1e-8 * p.abs().max(1.0));
        }
    }
}
