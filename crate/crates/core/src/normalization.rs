//! Fundamental tensors of normalizations and the invariants built from them.
//!
//! Index conventions: Greek indices α, β run over `0..=m` (the points of p),
//! Latin indices i, j over `m+1..=n` (the points of p*) and are stored with
//! offset 0 standing for `m+1`. A fundamental tensor is stored as
//! `lam[[α, β, i, j]] = λ_{ij}^{αβ}`, relating the displacement of p* to that
//! of p by `ω_i^α = λ_{ij}^{αβ} ω_β^j`.
//!
//! Components are always relative to [`adapted_frame`] of the pair, the
//! canonical frame of this crate.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use ndarray::Array4;

use crate::error::{GeomError, Result};
use crate::linalg::{self, RANK_RTOL};
use crate::polar::{polar_conjugate, Quadric};
use crate::projective::{adapted_frame, pair_is_valid, MPair, ProjectiveFrame, Subspace};

/// Default finite-difference step of [`estimate_fundamental_tensor`].
pub const DEFAULT_EPS: f64 = 1e-5;

fn check_dims(m: usize, n: usize) -> Result<()> {
    if m >= n {
        return Err(GeomError::DimensionMismatch(format!("need m < n, got m = {m}, n = {n}")));
    }
    Ok(())
}

fn check_shape(arr: &Array4<f64>, m: usize, n: usize) -> Result<()> {
    check_dims(m, n)?;
    let (a, b) = (m + 1, n - m);
    if arr.shape() != [a, a, b, b] {
        return Err(GeomError::DimensionMismatch(format!(
            "tensor shape {:?} does not match [{a}, {a}, {b}, {b}]",
            arr.shape()
        )));
    }
    if arr.iter().any(|v| !v.is_finite()) {
        return Err(GeomError::NonFinite);
    }
    Ok(())
}

/// `λ_{ij}^{αβ}`, stored `[α][β][i][j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FundamentalTensor {
    m: usize,
    n: usize,
    lam: Array4<f64>,
}

impl FundamentalTensor {
    pub fn zeros(m: usize, n: usize) -> Result<Self> {
        check_dims(m, n)?;
        Ok(Self { m, n, lam: Array4::zeros((m + 1, m + 1, n - m, n - m)) })
    }

    pub fn from_array(m: usize, n: usize, lam: Array4<f64>) -> Result<Self> {
        check_shape(&lam, m, n)?;
        Ok(Self { m, n, lam })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Dimension ρ = (m+1)(n−m) of G(m, n).
    pub fn rho(&self) -> usize {
        (self.m + 1) * (self.n - self.m)
    }

    pub fn array(&self) -> &Array4<f64> {
        &self.lam
    }

    pub fn get(&self, alpha: usize, beta: usize, i: usize, j: usize) -> f64 {
        self.lam[[alpha, beta, i, j]]
    }

    pub fn max_abs(&self) -> f64 {
        self.lam.iter().fold(0.0_f64, |a, v| a.max(v.abs()))
    }

    /// ρ×ρ matrix with row `(α, i)` and column `(β, j)`.
    pub fn flatten(&self) -> DMatrix<f64> {
        flatten(&self.lam)
    }

    /// `λ_{ji}^{βα}` in the slot of `λ_{ij}^{αβ}`.
    pub fn pair_swapped(&self) -> Self {
        let swapped = self.lam.clone().permuted_axes([1, 0, 3, 2]).as_standard_layout().into_owned();
        Self { m: self.m, n: self.n, lam: swapped }
    }

    /// `a·self + b·other`.
    pub fn combine(&self, other: &Self, a: f64, b: f64) -> Self {
        assert_eq!((self.m, self.n), (other.m, other.n), "tensors live on different Grassmannians");
        Self { m: self.m, n: self.n, lam: &self.lam * a + &other.lam * b }
    }

    /// Components after the frame change `A_α ↦ A_β P^β_α`, `A_i ↦ A_j S^j_i`:
    /// upper Greek indices transform with `P⁻¹`, lower Latin ones with `S`.
    pub fn change_frame(&self, p: &DMatrix<f64>, s: &DMatrix<f64>) -> Result<Self> {
        let (a, b) = (self.m + 1, self.n - self.m);
        if p.shape() != (a, a) || s.shape() != (b, b) {
            return Err(GeomError::DimensionMismatch("frame change blocks have wrong size".into()));
        }
        let pinv = p.clone().try_inverse().ok_or(GeomError::SingularFrame)?;
        let mut out = Array4::zeros((a, a, b, b));
        for al in 0..a {
            for be in 0..a {
                for i in 0..b {
                    for j in 0..b {
                        let mut acc = 0.0;
                        for al2 in 0..a {
                            for be2 in 0..a {
                                let greek = pinv[(al, al2)] * pinv[(be, be2)];
                                for i2 in 0..b {
                                    for j2 in 0..b {
                                        acc += greek * s[(i2, i)] * s[(j2, j)] * self.lam[[al2, be2, i2, j2]];
                                    }
                                }
                            }
                        }
                        out[[al, be, i, j]] = acc;
                    }
                }
            }
        }
        Self::from_array(self.m, self.n, out)
    }
}

fn flatten(t: &Array4<f64>) -> DMatrix<f64> {
    let [a, _, b, _] = [t.shape()[0], t.shape()[1], t.shape()[2], t.shape()[3]];
    DMatrix::from_fn(a * b, a * b, |r, c| t[[r / b, c / b, r % b, c % b]])
}

/// `g_{ij}^{αβ}`, stored `[α][β][i][j]`, symmetric under the pair swap.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricTensor {
    m: usize,
    n: usize,
    g: Array4<f64>,
}

impl MetricTensor {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rho(&self) -> usize {
        (self.m + 1) * (self.n - self.m)
    }

    pub fn array(&self) -> &Array4<f64> {
        &self.g
    }

    pub fn flatten(&self) -> DMatrix<f64> {
        flatten(&self.g)
    }

    /// `g(d, d) = g_{ij}^{αβ} ω_α^i ω_β^j` for the direction `d`.
    pub fn quadratic_form(&self, d: &TangentDirection) -> f64 {
        let (a, b) = (self.m + 1, self.n - self.m);
        let mut acc = 0.0;
        for al in 0..a {
            for be in 0..a {
                for i in 0..b {
                    for j in 0..b {
                        acc += self.g[[al, be, i, j]] * d.d[(i, al)] * d.d[(j, be)];
                    }
                }
            }
        }
        acc
    }
}

/// The components `ω_α^i` of a tangent direction to G(m, n), stored as an
/// `(n−m) × (m+1)` matrix with entry `(i, α)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentDirection {
    m: usize,
    n: usize,
    d: DMatrix<f64>,
}

impl TangentDirection {
    pub fn new(m: usize, n: usize, d: DMatrix<f64>) -> Result<Self> {
        check_dims(m, n)?;
        if d.shape() != (n - m, m + 1) {
            return Err(GeomError::DimensionMismatch(format!(
                "direction is {:?}, expected ({}, {})",
                d.shape(),
                n - m,
                m + 1
            )));
        }
        if d.iter().any(|v| !v.is_finite()) {
            return Err(GeomError::NonFinite);
        }
        Ok(Self { m, n, d })
    }

    /// Unit direction `ω_β^j = δ_β^{beta} δ^j_{j}`.
    pub fn basis(m: usize, n: usize, beta: usize, j: usize) -> Result<Self> {
        check_dims(m, n)?;
        let mut d = DMatrix::zeros(n - m, m + 1);
        d[(j, beta)] = 1.0;
        Self::new(m, n, d)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.d
    }
}

/// The subspace spanned by `A_β + t ω_β^j A_j`, with `A` the columns of
/// `frame` and `ω` the components of `dir`.
pub fn displaced_subspace(frame: &ProjectiveFrame, dir: &TangentDirection, t: f64) -> Result<Subspace> {
    let (a, b) = (dir.m + 1, dir.n - dir.m);
    let f = frame.matrix();
    if f.nrows() != a + b {
        return Err(GeomError::DimensionMismatch("frame and direction disagree on n".into()));
    }
    let mut x = f.columns(0, a).into_owned();
    x += f.columns(a, b) * (&dir.d * t);
    Subspace::from_matrix(x)
}

/// Which normalizing map a [`NormalizingMap`] realizes.
#[derive(Debug, Clone)]
pub enum MapKind {
    Polar(Quadric),
    Constant(Subspace),
    Custom(String),
}

type MapFn = dyn Fn(&Subspace) -> Result<Subspace> + Send + Sync;

/// A normalizing mapping ν: G(m, n) → G(n−m−1, n).
#[derive(Clone)]
pub struct NormalizingMap {
    m: usize,
    n: usize,
    kind: MapKind,
    f: Arc<MapFn>,
}

impl fmt::Debug for NormalizingMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NormalizingMap")
            .field("m", &self.m)
            .field("n", &self.n)
            .field("kind", &self.kind)
            .finish()
    }
}

impl NormalizingMap {
    /// p ↦ the polar-conjugate subspace of p with respect to `q`.
    pub fn polar(q: Quadric, m: usize) -> Result<Self> {
        let n = q.n();
        check_dims(m, n)?;
        let quadric = q.clone();
        Ok(Self { m, n, kind: MapKind::Polar(q), f: Arc::new(move |p| polar_conjugate(p, &quadric)) })
    }

    /// The rank-zero map p ↦ `p_star`.
    pub fn constant(p_star: Subspace) -> Result<Self> {
        let n = p_star.ambient_n();
        let m = n - p_star.dim() - 1;
        let fixed = p_star.clone();
        Ok(Self { m, n, kind: MapKind::Constant(p_star), f: Arc::new(move |_| Ok(fixed.clone())) })
    }

    pub fn custom<F>(name: impl Into<String>, m: usize, n: usize, f: F) -> Result<Self>
    where
        F: Fn(&Subspace) -> Result<Subspace> + Send + Sync + 'static,
    {
        check_dims(m, n)?;
        Ok(Self { m, n, kind: MapKind::Custom(name.into()), f: Arc::new(f) })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> &MapKind {
        &self.kind
    }

    pub fn tag(&self) -> String {
        match &self.kind {
            MapKind::Polar(_) => "polar".into(),
            MapKind::Constant(_) => "constant".into(),
            MapKind::Custom(name) => format!("custom:{name}"),
        }
    }

    /// ν(p). Any failure, including an output that meets p, is reported as
    /// [`GeomError::MapUndefined`].
    pub fn apply(&self, p: &Subspace) -> Result<Subspace> {
        if p.ambient_n() != self.n || p.dim() != self.m {
            return Err(GeomError::DimensionMismatch(format!(
                "map acts on G({}, {}), got a {}-subspace of P^{}",
                self.m,
                self.n,
                p.dim(),
                p.ambient_n()
            )));
        }
        let out = (self.f)(p).map_err(|e| GeomError::MapUndefined(e.to_string()))?;
        match pair_is_valid(p, &out) {
            Ok(true) => Ok(out),
            Ok(false) => Err(GeomError::MapUndefined("normalizing subspace meets p".into())),
            Err(e) => Err(GeomError::MapUndefined(e.to_string())),
        }
    }

    /// The m-pair (p, ν(p)).
    pub fn pair_at(&self, p: &Subspace) -> Result<MPair> {
        let p_star = self.apply(p)?;
        MPair::new(p.clone(), p_star)
    }
}

/// `g_{ij}^{αβ} = ½(λ_{ij}^{αβ} + λ_{ji}^{βα})`.
pub fn symmetrize_metric(lam: &FundamentalTensor) -> MetricTensor {
    let swapped = lam.pair_swapped();
    let g = (&lam.lam + &swapped.lam) * 0.5;
    MetricTensor { m: lam.m, n: lam.n, g }
}

/// How singular values are cut off in rank decisions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RankThreshold {
    /// Relative to the largest singular value.
    Relative(f64),
    /// Absolute cutoff.
    Absolute(f64),
}

impl Default for RankThreshold {
    fn default() -> Self {
        RankThreshold::Relative(RANK_RTOL)
    }
}

fn rank_with(m: &DMatrix<f64>, th: RankThreshold) -> usize {
    match th {
        RankThreshold::Relative(r) => linalg::rank(m, r),
        RankThreshold::Absolute(a) => linalg::rank_abs(m, a),
    }
}

/// Rank r of the normalizing map: the rank of the ρ×ρ flattening of λ.
pub fn lambda_rank(lam: &FundamentalTensor) -> usize {
    lambda_rank_with(lam, RankThreshold::default())
}

pub fn lambda_rank_with(lam: &FundamentalTensor, th: RankThreshold) -> usize {
    rank_with(&lam.flatten(), th)
}

/// Rank r̃ of the quadratic form g.
pub fn metric_rank(g: &MetricTensor) -> usize {
    rank_with(&g.flatten(), RankThreshold::default())
}

/// Dimension ρ − r̃ of the isotropic distribution of g.
pub fn isotropic_dimension(g: &MetricTensor) -> usize {
    g.rho() - metric_rank(g)
}

/// `max |λ_{ij}^{αβ} − λ_{ji}^{βα}|`.
pub fn harmonic_defect(lam: &FundamentalTensor) -> f64 {
    let swapped = lam.pair_swapped();
    lam.lam
        .iter()
        .zip(swapped.lam.iter())
        .fold(0.0_f64, |acc, (x, y)| acc.max((x - y).abs()))
}

/// True iff `λ_{ij}^{αβ} = λ_{ji}^{βα}` up to `tol · max|λ|`.
pub fn is_harmonic(lam: &FundamentalTensor, tol: f64) -> bool {
    harmonic_defect(lam) <= tol * lam.max_abs()
}

/// Largest 2×2 minor of the direction matrix.
pub fn max_minor(d: &TangentDirection) -> f64 {
    let m = &d.d;
    let (r, c) = m.shape();
    let mut worst = 0.0_f64;
    for i in 0..r {
        for j in i + 1..r {
            for a in 0..c {
                for b in a + 1..c {
                    let minor = m[(i, a)] * m[(j, b)] - m[(j, a)] * m[(i, b)];
                    worst = worst.max(minor.abs());
                }
            }
        }
    }
    worst
}

/// True iff every 2×2 minor `ω_α^i ω_β^j − ω_α^j ω_β^i` vanishes, i.e. the
/// direction has rank at most one and lies on the Segre cone. The zero
/// direction (the cone vertex) counts as asymptotic.
pub fn is_asymptotic_direction(d: &TangentDirection, tol: f64) -> bool {
    max_minor(d) <= tol * d.d.norm_squared()
}

/// Finite-difference estimate of the fundamental tensor of `nu` at `pair`.
///
/// For each basis direction (β₀, j₀) the subspace p is pushed to
/// `span{A_β + s·ε δ_β^{β₀} A_{j₀}}` for `s = ±1`, the image ν(p′) is written
/// in the adapted frame of `pair` as columns `(C; I)`, and
/// `λ[α][β₀][i][j₀] = (C₊[α][i] − C₋[α][i]) / 2ε`.
pub fn estimate_fundamental_tensor(nu: &NormalizingMap, pair: &MPair, eps: f64) -> Result<FundamentalTensor> {
    let (m, n) = (pair.m(), pair.n());
    if (m, n) != (nu.m, nu.n) {
        return Err(GeomError::DimensionMismatch("map and pair live on different Grassmannians".into()));
    }
    estimate_in_frame(nu, &adapted_frame(pair), m, n, eps)
}

/// [`estimate_fundamental_tensor`] in an arbitrary frame adapted to the pair.
pub(crate) fn estimate_in_frame(
    nu: &NormalizingMap,
    frame: &ProjectiveFrame,
    m: usize,
    n: usize,
    eps: f64,
) -> Result<FundamentalTensor> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(GeomError::DimensionMismatch(format!("eps must be positive, got {eps}")));
    }
    let (a, b) = (m + 1, n - m);
    let mut lam = Array4::zeros((a, a, b, b));
    for beta0 in 0..a {
        for j0 in 0..b {
            let dir = TangentDirection::basis(m, n, beta0, j0)?;
            let plus = normalizer_offset(nu, frame, &dir, eps)?;
            let minus = normalizer_offset(nu, frame, &dir, -eps)?;
            for al in 0..a {
                for i in 0..b {
                    lam[[al, beta0, i, j0]] = (plus[(al, i)] - minus[(al, i)]) / (2.0 * eps);
                }
            }
        }
    }
    FundamentalTensor::from_array(m, n, lam)
}

/// The block `C` with ν(p(t)) spanned by `(C; I)` in `frame`, where
/// `p(t) = displaced_subspace(frame, dir, t)`.
pub(crate) fn normalizer_offset(
    nu: &NormalizingMap,
    frame: &ProjectiveFrame,
    dir: &TangentDirection,
    t: f64,
) -> Result<DMatrix<f64>> {
    let a = dir.m + 1;
    let b = dir.n - dir.m;
    let p = displaced_subspace(frame, dir, t).map_err(|e| GeomError::MapUndefined(e.to_string()))?;
    let p_star = nu.apply(&p)?;
    let z = frame.components(p_star.coords())?;
    let top = z.rows(0, a).into_owned();
    let bottom = z.rows(a, b).into_owned();
    if !linalg::is_invertible(&bottom, RANK_RTOL) {
        return Err(GeomError::FramingFailure);
    }
    let bottom_inv = bottom.try_inverse().ok_or(GeomError::FramingFailure)?;
    Ok(top * bottom_inv)
}
