//! Convergence orders of the finite-difference paths on maps without the
//! symmetries of the identity quadric.

use grassnorm::connection::covariant_derivative_estimate;
use grassnorm::cross_ratio::cr_log_distance;
use grassnorm::normalization::{
    displaced_subspace, estimate_fundamental_tensor, symmetrize_metric, FundamentalTensor, NormalizingMap,
    TangentDirection,
};
use grassnorm::polar::{block_metrics, polar_conjugate, Quadric};
use grassnorm::projective::{adapted_frame, Subspace};
use grassnorm::sampling::Sampler;
use nalgebra::DMatrix;

fn max_diff(a: &FundamentalTensor, b: &FundamentalTensor) -> f64 {
    a.array().iter().zip(b.array().iter()).fold(0.0_f64, |acc, (x, y)| acc.max((x - y).abs()))
}

/// ν(p) = polar of p for `g0 + t(p)·k`, with t(p) an entry of the orthogonal
/// projector onto p.
fn drifting_map(seed: u64) -> NormalizingMap {
    let mut s = Sampler::new(seed);
    let g0 = s.symmetric(4, Some(1));
    let k = s.symmetric(4, None) * 0.3;
    NormalizingMap::custom("drifting", 1, 3, move |p: &Subspace| {
        let x = p.unit_columns();
        let proj = &x * (x.transpose() * &x).try_inverse().expect("full rank") * x.transpose();
        let q = Quadric::new(&g0 + &k * proj[(0, 3)])?;
        polar_conjugate(p, &q)
    })
    .expect("valid shape")
}

/// `|f(2h) − f(h)| / |f(h) − f(h/2)|`, which tends to 2^order.
fn successive_ratio(f: impl Fn(f64) -> FundamentalTensor, h: f64) -> f64 {
    let (a, b, c) = (f(2.0 * h), f(h), f(0.5 * h));
    max_diff(&a, &b) / max_diff(&b, &c)
}

/// Errors of `cr_log_distance − g·ε²` along `p(ε) = span{A_β + ε(d + ε·e) A_j}`.
fn log_distance_errors(seed: u64, curved: bool) -> Vec<f64> {
    let mut s = Sampler::new(seed);
    let q = s.quadric(3);
    let nu = NormalizingMap::polar(q.clone(), 1).unwrap();
    let pair = nu.pair_at(&s.subspace(3, 1)).unwrap();
    let frame = adapted_frame(&pair);
    let d = s.matrix(2, 2);
    let e = if curved { s.matrix(2, 2) } else { DMatrix::zeros(2, 2) };
    let g = symmetrize_metric(&grassnorm::polar::polar_lambda(&block_metrics(&frame, &q, 1).unwrap()))
        .quadratic_form(&TangentDirection::new(1, 3, d.clone()).unwrap());
    [1e-2, 5e-3, 2.5e-3]
        .iter()
        .map(|&eps| {
            let dir = TangentDirection::new(1, 3, &d + &e * eps).unwrap();
            let moved = nu.pair_at(&displaced_subspace(&frame, &dir, eps).unwrap()).unwrap();
            (cr_log_distance(&pair, &moved).unwrap() - g * eps * eps).abs()
        })
        .collect()
}

#[test]
fn log_distance_error_is_fourth_order_along_frame_lines() {
    for seed in [71, 81, 91] {
        let errs = log_distance_errors(seed, false);
        for w in errs.windows(2) {
            assert!((w[0] / w[1] - 16.0).abs() <= 1.0, "{errs:?}");
        }
    }
}

#[test]
fn log_distance_error_is_third_order_along_curved_paths() {
    for seed in [72, 82, 92] {
        let errs = log_distance_errors(seed, true);
        for w in errs.windows(2) {
            assert!((w[0] / w[1] - 8.0).abs() <= 1.0, "{errs:?}");
        }
    }
}

#[test]
fn log_distance_error_is_even_for_the_identity_quadric() {
    // The reflection x₂ ↦ −x₂ fixes the identity quadric and the base pair and
    // reverses the displacement, so the error has no odd terms.
    let q = Quadric::new(DMatrix::identity(4, 4)).unwrap();
    let nu = NormalizingMap::polar(q, 1).unwrap();
    let pair = nu.pair_at(&Subspace::coordinate(3, &[0, 1]).unwrap()).unwrap();
    let frame = adapted_frame(&pair);
    let dir = TangentDirection::basis(1, 3, 0, 0).unwrap();
    let err = |eps: f64| {
        let moved = nu.pair_at(&displaced_subspace(&frame, &dir, eps).unwrap()).unwrap();
        cr_log_distance(&pair, &moved).unwrap() + eps * eps
    };
    for eps in [1e-2, 5e-3] {
        assert!((err(eps) - err(-eps)).abs() <= 1e-15);
        assert!((err(eps) / err(0.5 * eps) - 16.0).abs() <= 0.1);
    }
}

#[test]
fn polar_lambda_estimate_has_no_truncation_error() {
    let mut s = Sampler::new(72);
    let q = s.quadric(3);
    let nu = NormalizingMap::polar(q.clone(), 1).unwrap();
    let pair = nu.pair_at(&s.subspace(3, 1)).unwrap();
    let exact = grassnorm::polar::polar_lambda(&block_metrics(&adapted_frame(&pair), &q, 1).unwrap());
    // Even a wide step is exact to rounding.
    let est = estimate_fundamental_tensor(&nu, &pair, 0.1).unwrap();
    assert!(max_diff(&est, &exact) <= 1e-12 * exact.max_abs().max(1.0));
}

#[test]
fn lambda_estimate_is_second_order_on_a_drifting_map() {
    let nu = drifting_map(73);
    let pair = nu.pair_at(&Sampler::new(74).subspace(3, 1)).unwrap();
    let r = successive_ratio(|h| estimate_fundamental_tensor(&nu, &pair, h).unwrap(), 1e-2);
    assert!((r - 4.0).abs() <= 0.5, "{r}");
}

#[test]
fn covariant_derivative_is_second_order_on_a_drifting_map() {
    let nu = drifting_map(75);
    let mut s = Sampler::new(76);
    let pair = nu.pair_at(&s.subspace(3, 1)).unwrap();
    let dir = s.direction(1, 3);
    let r = successive_ratio(|h| covariant_derivative_estimate(&nu, &pair, &dir, h).unwrap(), 1e-2);
    assert!((r - 4.0).abs() <= 0.5, "{r}");
}

#[test]
fn polar_covariant_derivative_decays_quadratically() {
    let mut s = Sampler::new(77);
    let q = s.quadric(4);
    let nu = NormalizingMap::polar(q, 2).unwrap();
    let pair = nu.pair_at(&s.subspace(4, 2)).unwrap();
    let dir = s.direction(2, 4);
    let at = |eps: f64| covariant_derivative_estimate(&nu, &pair, &dir, eps).unwrap().max_abs();
    let r = at(1e-2) / at(5e-3);
    assert!((r - 4.0).abs() <= 0.5, "{r}");
}
