//! The torsion-free affine connection induced by a normalization.
//!
//! Its connection forms `ω_{αj}^{iβ} = δ_α^β ω_j^i − δ_j^i ω_α^β` are built from
//! Kronecker deltas and the fiber forms alone, so torsion-freeness holds by
//! construction and needs no runtime check. The curvature tensor is linear in
//! the fundamental tensor:
//!
//! ```text
//! R_{αjkl}^{iβγε} = ½(δ_α^β δ_k^i λ_{jl}^{γε} + δ_α^γ δ_j^i λ_{kl}^{βε}
//!                   − δ_α^β δ_l^i λ_{jk}^{εγ} − δ_α^ε δ_j^i λ_{lk}^{βγ})
//! ```
//!
//! and contracting `i` with `l` and `α` with `ε` gives the Ricci tensor
//! `R_{jk}^{βγ} = ½(λ_{jk}^{γβ} + λ_{kj}^{βγ} − (n+1) λ_{jk}^{βγ})`.

use ndarray::{Array4, ArrayD, IxDyn};

use crate::error::{GeomError, Result};
use nalgebra::DMatrix;

use crate::normalization::{estimate_in_frame, FundamentalTensor, NormalizingMap, TangentDirection};
use crate::projective::{adapted_frame, concat_columns, maurer_cartan_estimate, MPair, ProjectiveFrame, Subspace};

/// `R_{αjkl}^{iβγε}` stored `[i][β][γ][ε][α][j][k][l]` (Latin offsets from 0).
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureTensor {
    m: usize,
    n: usize,
    r: ArrayD<f64>,
}

impl CurvatureTensor {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn array(&self) -> &ArrayD<f64> {
        &self.r
    }

    pub fn max_abs(&self) -> f64 {
        self.r.iter().fold(0.0_f64, |a, v| a.max(v.abs()))
    }

    /// `max |R_{αjkl}^{iβγε} + R_{αjlk}^{iβεγ}|`; zero for every curvature
    /// produced by [`curvature_tensor`].
    pub fn antisymmetry_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for (idx, &v) in self.r.indexed_iter() {
            let swapped = [idx[0], idx[1], idx[3], idx[2], idx[4], idx[5], idx[7], idx[6]];
            worst = worst.max((v + self.r[swapped.as_slice()]).abs());
        }
        worst
    }
}

/// `R_{jk}^{βγ}` stored `[β][γ][j][k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RicciTensor {
    m: usize,
    n: usize,
    ric: Array4<f64>,
}

impl RicciTensor {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn array(&self) -> &Array4<f64> {
        &self.ric
    }

    pub fn max_abs(&self) -> f64 {
        self.ric.iter().fold(0.0_f64, |a, v| a.max(v.abs()))
    }

    /// `max |R_{jk}^{βγ} − R_{kj}^{γβ}|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0_f64;
        for ((be, ga, j, k), &v) in self.ric.indexed_iter() {
            worst = worst.max((v - self.ric[[ga, be, k, j]]).abs());
        }
        worst
    }

    /// Symmetric when the asymmetry is at most `tol · max|Ric|`.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.asymmetry() <= tol * self.max_abs()
    }
}

/// Curvature tensor of the induced connection.
pub fn curvature_tensor(lam: &FundamentalTensor) -> CurvatureTensor {
    let (a, b) = (lam.m() + 1, lam.n() - lam.m());
    let l = lam.array();
    let mut r = ArrayD::zeros(IxDyn(&[b, a, a, a, a, b, b, b]));
    // Each delta pair pins one upper index to a lower one; loop over the rest.
    for al in 0..a {
        for x in 0..a {
            for y in 0..a {
                for p in 0..b {
                    for q in 0..b {
                        for s in 0..b {
                            // δ_α^β δ_k^i λ_{jl}^{γε}: β = α, i = k = s, (γ, ε) = (x, y), (j, l) = (p, q).
                            r[[s, al, x, y, al, p, s, q].as_slice()] += 0.5 * l[[x, y, p, q]];
                            // δ_α^γ δ_j^i λ_{kl}^{βε}: γ = α, i = j = s, (β, ε) = (x, y), (k, l) = (p, q).
                            r[[s, x, al, y, al, s, p, q].as_slice()] += 0.5 * l[[x, y, p, q]];
                            // δ_α^β δ_l^i λ_{jk}^{εγ}: β = α, i = l = s, (γ, ε) = (x, y), (j, k) = (p, q).
                            r[[s, al, x, y, al, p, q, s].as_slice()] -= 0.5 * l[[y, x, p, q]];
                            // δ_α^ε δ_j^i λ_{lk}^{βγ}: ε = α, i = j = s, (β, γ) = (x, y), (k, l) = (p, q).
                            r[[s, x, y, al, al, s, p, q].as_slice()] -= 0.5 * l[[x, y, q, p]];
                        }
                    }
                }
            }
        }
    }
    CurvatureTensor { m: lam.m(), n: lam.n(), r }
}

/// Ricci tensor in closed form.
pub fn ricci_tensor(lam: &FundamentalTensor) -> RicciTensor {
    let (a, b) = (lam.m() + 1, lam.n() - lam.m());
    let l = lam.array();
    let np1 = (lam.n() + 1) as f64;
    let ric = Array4::from_shape_fn((a, a, b, b), |(be, ga, j, k)| {
        0.5 * (l[[ga, be, j, k]] + l[[be, ga, k, j]] - np1 * l[[be, ga, j, k]])
    });
    RicciTensor { m: lam.m(), n: lam.n(), ric }
}

/// Ricci tensor by contracting the curvature tensor over `i = l` and `α = ε`.
pub fn ricci_by_contraction(curv: &CurvatureTensor) -> RicciTensor {
    let (a, b) = (curv.m + 1, curv.n - curv.m);
    let ric = Array4::from_shape_fn((a, a, b, b), |(be, ga, j, k)| {
        let mut acc = 0.0;
        for i in 0..b {
            for al in 0..a {
                acc += curv.r[[i, be, ga, al, al, j, k, i].as_slice()];
            }
        }
        acc
    });
    RicciTensor { m: curv.m, n: curv.n, ric }
}

/// Max-abs over all index tuples of the eight-term quadratic expression in λ
/// whose vanishing is the algebraic condition for a homogeneous
/// normalization.
pub fn homogeneity_residual(lam: &FundamentalTensor) -> f64 {
    let (a, b) = (lam.m() + 1, lam.n() - lam.m());
    let l = lam.array();
    let mut worst = 0.0_f64;
    for al in 0..a {
        for be in 0..a {
            for ga in 0..a {
                for ep in 0..a {
                    for i in 0..b {
                        for j in 0..b {
                            for k in 0..b {
                                for ll in 0..b {
                                    let v = l[[al, be, i, k]] * l[[ga, ep, j, ll]]
                                        + l[[al, be, k, j]] * l[[ga, ep, i, ll]]
                                        + l[[al, ga, i, j]] * l[[be, ep, k, ll]]
                                        + l[[ga, be, i, j]] * l[[al, ep, k, ll]]
                                        - l[[al, be, i, ll]] * l[[ep, ga, j, k]]
                                        - l[[al, be, ll, j]] * l[[ep, ga, i, k]]
                                        - l[[al, ep, i, j]] * l[[be, ga, ll, k]]
                                        - l[[ep, be, i, j]] * l[[al, ga, ll, k]];
                                    worst = worst.max(v.abs());
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    worst
}

/// Finite-difference estimate of the covariant differential of λ evaluated
/// on the tangent direction `dir` at `pair = (p, ν(p))`.
///
/// Along the path `p(t)` spanned by `A_β + t ω_β^j A_j` (frame adapted to
/// `pair`), the frame field `F(t)` projects the columns of `F(0)` orthogonally
/// onto p(t) and ν(p(t)); it is smooth in t, unlike the canonical adapted
/// frame, whose echelon pivots can jump. `dλ` comes from central differences
/// of [`estimate_fundamental_tensor`](crate::normalization::estimate_fundamental_tensor)
/// in `F(±eps)`, and the fiber forms from `F(0)⁻¹ (F(eps) − F(−eps)) / 2eps`.
/// The result
///
/// `∇λ_{ij}^{αβ} = dλ_{ij}^{αβ} − λ_{ik}^{αβ} ω_j^k − λ_{kj}^{αβ} ω_i^k + λ_{ij}^{αγ} ω_γ^β + λ_{ij}^{γβ} ω_γ^α`
///
/// uses the layout of [`FundamentalTensor`] and carries O(eps²) truncation
/// error. The inner tensor estimates use step `h = √eps` and the Richardson
/// combination `(4λ(h/2) − λ(h))/3`, whose O(h⁴) = O(eps²) error matches the
/// outer difference while keeping rounding near `u/(h·eps)` instead of
/// `u/eps²`.
pub fn covariant_derivative_estimate(
    nu: &NormalizingMap,
    pair: &MPair,
    dir: &TangentDirection,
    eps: f64,
) -> Result<FundamentalTensor> {
    let (m, n) = (pair.m(), pair.n());
    if (dir.m(), dir.n()) != (m, n) {
        return Err(GeomError::DimensionMismatch("direction and pair disagree".into()));
    }
    let (a, b) = (m + 1, n - m);
    let frame0 = adapted_frame(pair);
    let lam0 = inner_estimate(nu, &frame0, m, n, eps)?;

    let mut lams = Vec::with_capacity(2);
    let mut forms = Vec::with_capacity(2);
    for t in [eps, -eps] {
        let p_t = crate::normalization::displaced_subspace(&frame0, dir, t)
            .map_err(|e| GeomError::MapUndefined(e.to_string()))?;
        let pair_t = nu.pair_at(&p_t).map_err(|e| match e {
            GeomError::InvalidPair => GeomError::MapUndefined("displaced pair is not complementary".into()),
            other => other,
        })?;
        let frame_t = transported_frame(&frame0, &pair_t, a)?;
        lams.push(inner_estimate(nu, &frame_t, m, n, eps)?);
        forms.push(maurer_cartan_estimate(&frame0, &frame_t)?.omega);
    }
    let dlam = (lams[0].array() - lams[1].array()) / (2.0 * eps);
    let omega = (&forms[0] - &forms[1]) / (2.0 * eps);
    // ω_ξ^η = omega[(η, ξ)]; Latin offsets shift by a.
    let w_greek = |xi: usize, eta: usize| omega[(eta, xi)];
    let w_latin = |xi: usize, eta: usize| omega[(a + eta, a + xi)];

    let l = lam0.array();
    let nabla = Array4::from_shape_fn((a, a, b, b), |(al, be, i, j)| {
        let mut v = dlam[[al, be, i, j]];
        for k in 0..b {
            v -= l[[al, be, i, k]] * w_latin(j, k);
            v -= l[[al, be, k, j]] * w_latin(i, k);
        }
        for ga in 0..a {
            v += l[[al, ga, i, j]] * w_greek(ga, be);
            v += l[[ga, be, i, j]] * w_greek(ga, al);
        }
        v
    });
    FundamentalTensor::from_array(m, n, nabla)
}

fn inner_estimate(
    nu: &NormalizingMap,
    frame: &ProjectiveFrame,
    m: usize,
    n: usize,
    eps: f64,
) -> Result<FundamentalTensor> {
    let h = eps.sqrt();
    let coarse = estimate_in_frame(nu, frame, m, n, h)?;
    let fine = estimate_in_frame(nu, frame, m, n, 0.5 * h)?;
    Ok(fine.combine(&coarse, 4.0 / 3.0, -1.0 / 3.0))
}

fn orthogonal_projector(s: &Subspace) -> DMatrix<f64> {
    let x = s.coords();
    let gram = (x.transpose() * x).try_inverse().expect("subspace bases have full column rank");
    x * gram * x.transpose()
}

/// Columns of `base` projected onto p and p* of `pair`.
fn transported_frame(base: &ProjectiveFrame, pair: &MPair, a: usize) -> Result<ProjectiveFrame> {
    let f = base.matrix();
    let b = f.ncols() - a;
    let greek = orthogonal_projector(pair.p()) * f.columns(0, a);
    let latin = orthogonal_projector(pair.p_star()) * f.columns(a, b);
    ProjectiveFrame::new(concat_columns(&greek, &latin))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::normalization::{estimate_fundamental_tensor, is_harmonic};
    use crate::polar::{polar_lambda, Quadric};
    use crate::projective::Subspace;
    use crate::sampling::Sampler;
    use nalgebra::DMatrix;

    #[test]
    fn zero_lambda_is_flat() {
        let c = curvature_tensor(&FundamentalTensor::zeros(1, 3).unwrap());
        assert_eq!(c.max_abs(), 0.0);
        assert_eq!(ricci_tensor(&FundamentalTensor::zeros(2, 5).unwrap()).max_abs(), 0.0);
    }

    #[test]
    fn curvature_antisymmetry_and_linearity() {
        let mut s = Sampler::new(31);
        for (m, n) in [(1, 3), (0, 3), (2, 4)] {
            let l1 = s.lambda(m, n);
            let l2 = s.lambda(m, n);
            let c1 = curvature_tensor(&l1);
            let c2 = curvature_tensor(&l2);
            assert!(c1.antisymmetry_defect() <= 1e-15);
            let (x, y) = (1.7, -0.3);
            let combined = curvature_tensor(&l1.combine(&l2, x, y));
            let lin = c1.array() * x + c2.array() * y;
            let err = (combined.array() - &lin).iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
            assert!(err < 1e-14);
        }
    }

    #[test]
    fn contraction_matches_closed_form() {
        let mut s = Sampler::new(32);
        for (m, n) in [(1, 3), (2, 4), (0, 2), (1, 5)] {
            let lam = s.lambda(m, n);
            let a = ricci_tensor(&lam);
            let b = ricci_by_contraction(&curvature_tensor(&lam));
            let err = (a.array() - b.array()).iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
            assert!(err <= 1e-13, "err {err}");
        }
    }

    #[test]
    fn polar_ricci_is_proportional_to_metric() {
        let id = crate::polar::BlockMetrics::new(DMatrix::identity(2, 2), DMatrix::identity(2, 2)).unwrap();
        let ric = ricci_tensor(&polar_lambda(&id));
        for ((be, ga, j, k), &v) in ric.array().indexed_iter() {
            let expected = if be == ga && j == k { 1.0 } else { 0.0 };
            assert_eq!(v, expected);
        }
    }

    #[test]
    fn harmonic_lambda_has_symmetric_ricci() {
        let lam = Sampler::new(33).harmonic_lambda(1, 4);
        assert!(is_harmonic(&lam, 0.0));
        assert_eq!(ricci_tensor(&lam).asymmetry(), 0.0);
    }

    #[test]
    fn ricci_asymmetry_tracks_harmonic_defect() {
        let n = 3;
        let id = crate::polar::BlockMetrics::new(DMatrix::identity(2, 2), DMatrix::identity(2, 2)).unwrap();
        let mut arr = polar_lambda(&id).array().clone();
        // λ_{jk}^{βγ} with β=0, γ=1, j=0, k=1, bumped by δ.
        let delta = 0.25;
        arr[[0, 1, 0, 1]] += delta;
        let lam = FundamentalTensor::from_array(1, n, arr).unwrap();
        let ric = ricci_tensor(&lam);
        let expected = 0.5 * (n as f64 + 1.0) * delta;
        assert!((ric.asymmetry() - expected).abs() < 1e-15);
        assert!(!ric.is_symmetric(1e-12));
    }

    #[test]
    fn homogeneity_of_zero_and_random() {
        assert_eq!(homogeneity_residual(&FundamentalTensor::zeros(1, 3).unwrap()), 0.0);
        let lam = Sampler::new(34).lambda(1, 3);
        assert!(homogeneity_residual(&lam) > 0.01 * lam.max_abs().powi(2));
    }

    #[test]
    fn polar_map_is_covariantly_constant() {
        let mut s = Sampler::new(35);
        let q = s.quadric(3);
        let nu = NormalizingMap::polar(q, 1).unwrap();
        let p = s.subspace(3, 1);
        let pair = nu.pair_at(&p).unwrap();
        let dir = s.direction(1, 3);
        let eps = 1e-3;
        let nabla = covariant_derivative_estimate(&nu, &pair, &dir, eps).unwrap();
        let lam = estimate_fundamental_tensor(&nu, &pair, eps).unwrap();
        assert!(nabla.max_abs() <= 100.0 * eps * eps * lam.max_abs(), "{}", nabla.max_abs());
    }

    #[test]
    fn covariant_derivative_survives_echelon_pivot_changes() {
        // Displacing the coordinate pair moves the echelon pivots of ν(p(t)),
        // which flips the canonical frame between t and −t.
        let nu = NormalizingMap::polar(Quadric::new(DMatrix::identity(4, 4)).unwrap(), 1).unwrap();
        let pair = nu.pair_at(&Subspace::coordinate(3, &[0, 1]).unwrap()).unwrap();
        let dir = TangentDirection::new(1, 3, DMatrix::from_row_slice(2, 2, &[0.5, -1.0, 0.25, 0.75])).unwrap();
        let nabla = covariant_derivative_estimate(&nu, &pair, &dir, 1e-4).unwrap();
        assert!(nabla.max_abs() <= 1e-6, "{}", nabla.max_abs());
    }

    #[test]
    fn constant_map_has_zero_covariant_derivative() {
        let mut s = Sampler::new(36);
        let pair = s.pair(1, 3);
        let nu = NormalizingMap::constant(pair.p_star().clone()).unwrap();
        let nabla = covariant_derivative_estimate(&nu, &pair, &s.direction(1, 3), 1e-4).unwrap();
        assert!(nabla.max_abs() < 1e-6);
    }

    #[test]
    fn varying_quadric_is_not_covariantly_constant() {
        // ν(p) = polar of p with respect to G + t(p)·K where t(p) is an entry
        // of the orthogonal projector onto p.
        let mut s = Sampler::new(37);
        let g0 = s.symmetric(4, Some(1));
        let k = s.symmetric(4, None) * 0.3;
        let nu = NormalizingMap::custom("drifting", 1, 3, move |p: &Subspace| {
            let x = p.unit_columns();
            let proj = &x * (x.transpose() * &x).try_inverse().unwrap() * x.transpose();
            let q = Quadric::new(&g0 + &k * proj[(0, 3)])?;
            crate::polar::polar_conjugate(p, &q)
        })
        .unwrap();
        let pair = nu.pair_at(&s.subspace(3, 1)).unwrap();
        let nabla = covariant_derivative_estimate(&nu, &pair, &s.direction(1, 3), 1e-3).unwrap();
        assert!(nabla.max_abs() > 1e-2, "{}", nabla.max_abs());
    }
}
