//! Polar normalization of G(m, n) by a nondegenerate hyperquadric.
//!
//! For a subspace p not tangent to the quadric Q, the normalizing subspace is
//! its polar p* = {y : xᵀ G y = 0 for all x ∈ p}. In a frame adapted to
//! (p, p*) the Gram matrix of Q is block diagonal with blocks `g_{αβ}` and
//! `g_{ij}`, and the fundamental tensor is `λ_{ij}^{αβ} = −g^{αβ} g_{ij}`.
//! That tensor is harmonic, nondegenerate and covariantly constant, so the
//! induced connection is the Levi-Civita connection of
//! `g = −g^{αβ} g_{ij} ω_α^i ω_β^j`, and its Ricci tensor is
//! `½(n−1) g^{βγ} g_{jk}`: the normalized domain is an Einstein space.
//!
//! Definite matrices stand in for imaginary quadrics; every subspace is then
//! non-tangent.

use nalgebra::DMatrix;
use ndarray::{Array4, ArrayD, IxDyn};

use crate::connection::{ricci_tensor, CurvatureTensor, RicciTensor};
use crate::error::{GeomError, Result};
use crate::linalg::{self, RANK_RTOL};
use crate::normalization::FundamentalTensor;
use crate::projective::{ProjectiveFrame, Subspace};

/// Relative tolerance for symmetry of a quadric and for the vanishing of the
/// cross block in a polar-adapted frame.
pub const POLAR_TOL: f64 = 1e-9;

/// A nondegenerate quadric `xᵀ G x = 0` of Pⁿ.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadric {
    g: DMatrix<f64>,
}

impl Quadric {
    /// Validates symmetry and nondegeneracy; the stored matrix is the exact
    /// symmetric part of `g`.
    pub fn new(g: DMatrix<f64>) -> Result<Self> {
        if !g.is_square() || g.nrows() < 2 {
            return Err(GeomError::DimensionMismatch(format!("quadric matrix is {:?}", g.shape())));
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(GeomError::NonFinite);
        }
        let asym = linalg::max_abs(&(&g - g.transpose()));
        if asym > POLAR_TOL * linalg::max_abs(&g) {
            return Err(GeomError::NonSymmetricQuadric(asym));
        }
        if !linalg::is_invertible(&g, RANK_RTOL) {
            return Err(GeomError::DegenerateQuadric);
        }
        let g = (&g + g.transpose()) * 0.5;
        Ok(Self { g })
    }

    pub fn n(&self) -> usize {
        self.g.nrows() - 1
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.g
    }

    /// The same quadric with matrix `c·G`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(&self.g * c)
    }
}

/// The polar-conjugate subspace of `p`: the right nullspace of `Xᵀ G`.
pub fn polar_conjugate(p: &Subspace, q: &Quadric) -> Result<Subspace> {
    if p.ambient_n() != q.n() {
        return Err(GeomError::DimensionMismatch(format!(
            "subspace in P^{} but quadric in P^{}",
            p.ambient_n(),
            q.n()
        )));
    }
    let x = p.unit_columns();
    let xg = x.transpose() * q.matrix();
    let restricted = &xg * &x;
    if !linalg::is_invertible(&restricted, RANK_RTOL) {
        return Err(GeomError::TangentSubspace);
    }
    Subspace::from_matrix(linalg::nullspace(&xg, RANK_RTOL))
}

/// Signature `(positive, negative)` of a symmetric matrix; eigenvalues within
/// `RANK_RTOL` of zero relative to the spectral radius are not counted.
pub fn signature(m: &DMatrix<f64>) -> (usize, usize) {
    let eig = m.clone().symmetric_eigen().eigenvalues;
    let top = eig.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let pos = eig.iter().filter(|&&v| v > RANK_RTOL * top).count();
    let neg = eig.iter().filter(|&&v| v < -RANK_RTOL * top).count();
    (pos, neg)
}

/// The diagonal blocks of the quadric's Gram matrix in a polar-adapted frame.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMetrics {
    g_ab: DMatrix<f64>,
    g_ij: DMatrix<f64>,
    g_ab_inv: DMatrix<f64>,
}

impl BlockMetrics {
    pub fn new(g_ab: DMatrix<f64>, g_ij: DMatrix<f64>) -> Result<Self> {
        for (blk, name) in [(&g_ab, "greek"), (&g_ij, "latin")] {
            if !blk.is_square() || blk.nrows() == 0 {
                return Err(GeomError::DimensionMismatch(format!("{name} block is {:?}", blk.shape())));
            }
            if blk.iter().any(|v| !v.is_finite()) {
                return Err(GeomError::NonFinite);
            }
            if linalg::max_abs(&(blk - blk.transpose())) > POLAR_TOL * linalg::max_abs(blk) {
                return Err(GeomError::DimensionMismatch(format!("{name} block is not symmetric")));
            }
            if !linalg::is_invertible(blk, RANK_RTOL) {
                return Err(GeomError::DegenerateBlock(name));
            }
        }
        let g_ab = (&g_ab + g_ab.transpose()) * 0.5;
        let g_ij = (&g_ij + g_ij.transpose()) * 0.5;
        let inv = g_ab.clone().try_inverse().ok_or(GeomError::DegenerateBlock("greek"))?;
        let g_ab_inv = (&inv + inv.transpose()) * 0.5;
        Ok(Self { g_ab, g_ij, g_ab_inv })
    }

    pub fn m(&self) -> usize {
        self.g_ab.nrows() - 1
    }

    pub fn n(&self) -> usize {
        self.g_ab.nrows() + self.g_ij.nrows() - 1
    }

    /// `g_{αβ}`.
    pub fn g_ab(&self) -> &DMatrix<f64> {
        &self.g_ab
    }

    /// `g_{ij}`.
    pub fn g_ij(&self) -> &DMatrix<f64> {
        &self.g_ij
    }

    /// `g^{αβ}`.
    pub fn g_ab_inv(&self) -> &DMatrix<f64> {
        &self.g_ab_inv
    }
}

/// Reads `g_{αβ} = (A_α, A_β)` and `g_{ij} = (A_i, A_j)` off a frame whose
/// first `m+1` columns span p and whose remaining columns span its polar.
pub fn block_metrics(frame: &ProjectiveFrame, q: &Quadric, m: usize) -> Result<BlockMetrics> {
    let f = frame.matrix();
    if f.nrows() != q.matrix().nrows() || m + 1 >= f.ncols() {
        return Err(GeomError::DimensionMismatch("frame, quadric and m disagree".into()));
    }
    let gram = f.transpose() * q.matrix() * f;
    let (a, b) = (m + 1, f.ncols() - m - 1);
    let cross = linalg::max_abs(&gram.view((a, 0), (b, a)).into_owned());
    if cross > POLAR_TOL * linalg::max_abs(&gram) {
        return Err(GeomError::NotPolarAdapted(cross));
    }
    BlockMetrics::new(gram.view((0, 0), (a, a)).into_owned(), gram.view((a, a), (b, b)).into_owned())
}

/// `λ_{ij}^{αβ} = −g^{αβ} g_{ij}`.
pub fn polar_lambda(bm: &BlockMetrics) -> FundamentalTensor {
    let (a, b) = (bm.g_ab.nrows(), bm.g_ij.nrows());
    let lam = Array4::from_shape_fn((a, a, b, b), |(al, be, i, j)| -bm.g_ab_inv[(al, be)] * bm.g_ij[(i, j)]);
    FundamentalTensor::from_array(bm.m(), bm.n(), lam).expect("block shapes are consistent")
}

/// Curvature with all Greek indices up and all Latin indices down, stored
/// `[α][β][γ][ε][i][j][k][l]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovariantCurvature {
    m: usize,
    n: usize,
    rc: ArrayD<f64>,
}

impl CovariantCurvature {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn array(&self) -> &ArrayD<f64> {
        &self.rc
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.rc.iter().zip(other.rc.iter()).fold(0.0_f64, |acc, (x, y)| acc.max((x - y).abs()))
    }
}

/// The closed-form curvature of a polar normalization,
/// `½(g^{αβ} g^{γε}(g_{il} g_{jk} − g_{ik} g_{jl}) + (g^{αε} g^{βγ} − g^{αγ} g^{βε}) g_{ij} g_{kl})`.
pub fn covariant_curvature(bm: &BlockMetrics) -> CovariantCurvature {
    let (a, b) = (bm.g_ab.nrows(), bm.g_ij.nrows());
    let up = &bm.g_ab_inv;
    let lo = &bm.g_ij;
    let mut rc = ArrayD::zeros(IxDyn(&[a, a, a, a, b, b, b, b]));
    for (idx, v) in rc.indexed_iter_mut() {
        let (al, be, ga, ep) = (idx[0], idx[1], idx[2], idx[3]);
        let (i, j, k, l) = (idx[4], idx[5], idx[6], idx[7]);
        *v = 0.5
            * (up[(al, be)] * up[(ga, ep)] * (lo[(i, l)] * lo[(j, k)] - lo[(i, k)] * lo[(j, l)])
                + (up[(al, ep)] * up[(be, ga)] - up[(al, ga)] * up[(be, ep)]) * lo[(i, j)] * lo[(k, l)]);
    }
    CovariantCurvature { m: bm.m(), n: bm.n(), rc }
}

/// Moves the upper Latin index of `R_{αjkl}^{iβγε}` down with `g_{ij}` and
/// the lower Greek index up with `g^{αβ}`, giving `R_{ijkl}^{αβγε}`.
pub fn lower_raise(curv: &CurvatureTensor, bm: &BlockMetrics) -> Result<CovariantCurvature> {
    let (a, b) = (bm.g_ab.nrows(), bm.g_ij.nrows());
    if (curv.m(), curv.n()) != (bm.m(), bm.n()) {
        return Err(GeomError::DimensionMismatch("curvature and block metrics disagree".into()));
    }
    let r = curv.array();
    let mut rc = ArrayD::zeros(IxDyn(&[a, a, a, a, b, b, b, b]));
    for (idx, v) in rc.indexed_iter_mut() {
        let (al, be, ga, ep) = (idx[0], idx[1], idx[2], idx[3]);
        let (i, j, k, l) = (idx[4], idx[5], idx[6], idx[7]);
        let mut acc = 0.0;
        for i2 in 0..b {
            for al2 in 0..a {
                acc += bm.g_ij[(i, i2)] * bm.g_ab_inv[(al, al2)] * r[[i2, be, ga, ep, al2, j, k, l].as_slice()];
            }
        }
        *v = acc;
    }
    Ok(CovariantCurvature { m: bm.m(), n: bm.n(), rc })
}

/// Outcome of fitting `Ric_{jk}^{βγ} = c · g^{βγ} g_{jk}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EinsteinReport {
    pub is_einstein: bool,
    /// Least-squares constant.
    pub constant: f64,
    /// `max |Ric − c·g^{βγ}g_{jk}|`.
    pub residual: f64,
}

/// Least-squares fit of `ric` against `g^{βγ} g_{jk}`; Einstein when the
/// residual is at most `tol · max|Ric|`.
pub fn einstein_fit(ric: &RicciTensor, bm: &BlockMetrics, tol: f64) -> Result<EinsteinReport> {
    let (a, b) = (bm.g_ab.nrows(), bm.g_ij.nrows());
    if (ric.m(), ric.n()) != (bm.m(), bm.n()) {
        return Err(GeomError::DimensionMismatch("Ricci tensor and block metrics disagree".into()));
    }
    let template = Array4::from_shape_fn((a, a, b, b), |(be, ga, j, k)| bm.g_ab_inv[(be, ga)] * bm.g_ij[(j, k)]);
    let r = ric.array();
    let dot: f64 = r.iter().zip(template.iter()).map(|(x, y)| x * y).sum();
    let norm2: f64 = template.iter().map(|y| y * y).sum();
    let constant = dot / norm2;
    let residual = r
        .iter()
        .zip(template.iter())
        .fold(0.0_f64, |acc, (x, y)| acc.max((x - constant * y).abs()));
    let scale = r.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
    Ok(EinsteinReport { is_einstein: residual <= tol * scale, constant, residual })
}

/// Einstein test of the polar normalization with blocks `bm`; for valid
/// inputs the constant is ½(n−1).
pub fn einstein_check(bm: &BlockMetrics, tol: f64) -> EinsteinReport {
    einstein_fit(&ricci_tensor(&polar_lambda(bm)), bm, tol).expect("shapes agree by construction")
}
