//! Rank-zero normalization: a single fixed normalizing subspace p*.
//!
//! Every p missing p* gets λ = 0, so the metric form vanishes and the induced
//! connection is flat. The domain is then an affine space of dimension
//! ρ = (m+1)(n−m) whose points are the chart matrices B of
//! [`stereographic_projection`]; the asymptotic directions at each point form
//! the cone of rank-one matrices, the same cone everywhere in the chart.

use nalgebra::DMatrix;

use crate::connection::curvature_tensor;
use crate::error::{GeomError, Result};
use crate::linalg::{self, RANK_RTOL};
use crate::normalization::{lambda_rank, metric_rank, symmetrize_metric, FundamentalTensor};
use crate::projective::{concat_columns, pair_is_valid, ProjectiveFrame, Subspace};

/// Affine coordinates `B` of a subspace in the chart of a fixed p*, an
/// `(n−m) × (m+1)` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineChartPoint {
    m: usize,
    n: usize,
    b: DMatrix<f64>,
}

impl AffineChartPoint {
    pub fn new(m: usize, n: usize, b: DMatrix<f64>) -> Result<Self> {
        if m >= n || b.shape() != (n - m, m + 1) {
            return Err(GeomError::DimensionMismatch(format!(
                "chart point {:?} does not fit G({m}, {n})",
                b.shape()
            )));
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(GeomError::NonFinite);
        }
        Ok(Self { m, n, b })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.b
    }
}

/// Frame of the chart: the coordinate points off the pivot rows of p* span
/// the origin p₀ of the chart; the unit canonical columns of p* follow.
pub fn chart_frame(p_star: &Subspace) -> ProjectiveFrame {
    let n = p_star.ambient_n();
    let pivots = p_star.pivot_rows();
    let free: Vec<usize> = (0..=n).filter(|r| !pivots.contains(r)).collect();
    let mut origin = DMatrix::zeros(n + 1, free.len());
    for (c, &r) in free.iter().enumerate() {
        origin[(r, c)] = 1.0;
    }
    ProjectiveFrame::new(concat_columns(&origin, &p_star.unit_columns()))
        .expect("coordinate complement of an echelon basis is complementary")
}

fn check_normalizer(p_star: &Subspace, m: usize) -> Result<usize> {
    let n = p_star.ambient_n();
    if m >= n || p_star.dim() + m + 1 != n {
        return Err(GeomError::DimensionMismatch(format!(
            "normalizer of dimension {} does not match m = {m} in P^{n}",
            p_star.dim()
        )));
    }
    Ok(n)
}

/// Chart coordinates of p: with p's coordinates `(T; B′)` in the chart frame,
/// `B = B′ T⁻¹`.
pub fn stereographic_projection(p: &Subspace, p_star: &Subspace) -> Result<AffineChartPoint> {
    let m = p.dim();
    let n = check_normalizer(p_star, m)?;
    if p.ambient_n() != n {
        return Err(GeomError::DimensionMismatch("subspace and normalizer in different spaces".into()));
    }
    if !pair_is_valid(p, p_star)? {
        return Err(GeomError::NotComplementary);
    }
    let comps = chart_frame(p_star).components(p.coords())?;
    let t = comps.rows(0, m + 1).into_owned();
    if !linalg::is_invertible(&t, RANK_RTOL) {
        return Err(GeomError::NotComplementary);
    }
    let bp = comps.rows(m + 1, n - m).into_owned();
    let tinv = t.try_inverse().ok_or(GeomError::NotComplementary)?;
    AffineChartPoint::new(m, n, bp * tinv)
}

/// The subspace with chart coordinates `b`: the span of `F (I; B)`.
pub fn inverse_projection(b: &AffineChartPoint, p_star: &Subspace) -> Result<Subspace> {
    let n = check_normalizer(p_star, b.m)?;
    if n != b.n {
        return Err(GeomError::DimensionMismatch("chart point and normalizer disagree on n".into()));
    }
    let a = b.m + 1;
    let mut comps = DMatrix::zeros(n + 1, a);
    comps.view_mut((0, 0), (a, a)).fill_with_identity();
    comps.rows_mut(a, n + 1 - a).copy_from(&b.b);
    Subspace::from_matrix(chart_frame(p_star).matrix() * comps)
}

/// Invariants of the zero fundamental tensor on G(m, n).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlatnessReport {
    pub lambda_rank: usize,
    pub curvature_max_abs: f64,
    pub metric_rank: usize,
    pub rho: usize,
}

pub fn flatness_report(m: usize, n: usize) -> Result<FlatnessReport> {
    let lam = FundamentalTensor::zeros(m, n)?;
    Ok(FlatnessReport {
        lambda_rank: lambda_rank(&lam),
        curvature_max_abs: curvature_tensor(&lam).max_abs(),
        metric_rank: metric_rank(&symmetrize_metric(&lam)),
        rho: lam.rho(),
    })
}
