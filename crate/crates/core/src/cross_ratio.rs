//! The matrix cross-ratio of two m-pairs,
//! `W = X (UX)⁻¹ (UY) (VY)⁻¹ V`, where X, Y are matrix coordinates of p, p′
//! and U, V tangential coordinates of p*, p*′.
//!
//! For infinitesimally close pairs `tr W = m + 1 + ω_i^α ω_α^i` to second
//! order, so `(m+1)·ln(tr W / (m+1))` has the invariant quadratic form
//! `g = ω_i^α ω_α^i` as its principal part. [`cr_log_distance`] returns the
//! full logarithm; it is not truncated.

use nalgebra::DMatrix;

use crate::error::{GeomError, Result};
use crate::linalg::{self, RANK_RTOL};
use crate::projective::{tangential_coordinates, MPair};

#[derive(Debug, Clone, PartialEq)]
pub struct CrossRatioMatrix {
    n: usize,
    w: DMatrix<f64>,
}

impl CrossRatioMatrix {
    pub fn ambient_n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn trace(&self) -> f64 {
        self.w.trace()
    }
}

/// `X (UX)⁻¹ (UY) (VY)⁻¹ V` for arbitrary representatives.
pub fn cross_ratio_from_coords(
    x: &DMatrix<f64>,
    u: &DMatrix<f64>,
    y: &DMatrix<f64>,
    v: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let k = x.ncols();
    if y.ncols() != k || u.nrows() != k || v.nrows() != k {
        return Err(GeomError::DimensionMismatch("pairs have different m".into()));
    }
    let rows = x.nrows();
    if y.nrows() != rows || u.ncols() != rows || v.ncols() != rows {
        return Err(GeomError::DimensionMismatch("pairs live in different spaces".into()));
    }
    let ux = u * x;
    let vy = v * y;
    if !linalg::is_invertible(&ux, RANK_RTOL) {
        return Err(GeomError::NotInGeneralPosition("UX"));
    }
    if !linalg::is_invertible(&vy, RANK_RTOL) {
        return Err(GeomError::NotInGeneralPosition("VY"));
    }
    let left = ux.lu().solve(&(u * y)).ok_or(GeomError::NotInGeneralPosition("UX"))?;
    let right = vy.lu().solve(v).ok_or(GeomError::NotInGeneralPosition("VY"))?;
    Ok(x * left * right)
}

/// Cross-ratio of `pair_a = (p, p*)` and `pair_b = (p′, p*′)`.
pub fn cross_ratio(pair_a: &MPair, pair_b: &MPair) -> Result<CrossRatioMatrix> {
    if pair_a.n() != pair_b.n() || pair_a.m() != pair_b.m() {
        return Err(GeomError::DimensionMismatch(format!(
            "pairs on G({}, {}) and G({}, {})",
            pair_a.m(),
            pair_a.n(),
            pair_b.m(),
            pair_b.n()
        )));
    }
    let u = tangential_coordinates(pair_a.p_star());
    let v = tangential_coordinates(pair_b.p_star());
    let w = cross_ratio_from_coords(pair_a.p().coords(), u.eq_matrix(), pair_b.p().coords(), v.eq_matrix())?;
    Ok(CrossRatioMatrix { n: pair_a.n(), w })
}

/// `(m+1)·ln(tr W / (m+1))`; exactly zero for identical pairs.
pub fn cr_log_distance(pair_a: &MPair, pair_b: &MPair) -> Result<f64> {
    let w = cross_ratio(pair_a, pair_b)?;
    if pair_a == pair_b {
        return Ok(0.0);
    }
    log_distance_of_trace(w.trace(), pair_a.m())
}

pub(crate) fn log_distance_of_trace(trace: f64, m: usize) -> Result<f64> {
    if trace.is_nan() || trace <= 0.0 {
        return Err(GeomError::NonPositiveTrace(trace));
    }
    let k = (m + 1) as f64;
    Ok(k * (trace / k).ln())
}
