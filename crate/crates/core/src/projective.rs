//! Homogeneous-coordinate linear algebra on the real projective space Pⁿ.
//!
//! A [`Subspace`] is stored by its matrix coordinates, an `(n+1) × (k+1)`
//! matrix whose columns span it. The representative is always the
//! column-reduced echelon form, so two subspaces are equal exactly when their
//! stored matrices agree.

use nalgebra::{DMatrix, DVector};

use crate::error::{GeomError, Result};
use crate::linalg::{self, RANK_RTOL};

/// Pivot threshold used while reducing to echelon form.
const ECHELON_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct HomogeneousPoint(DVector<f64>);

impl HomogeneousPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(GeomError::NonFinite);
        }
        let v = DVector::from_vec(coords);
        if v.norm() <= f64::EPSILON {
            return Err(GeomError::DependentPoints { rank: 0, expected: 1 });
        }
        Ok(Self(v))
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.0
    }
}

/// An m′-dimensional projective subspace of Pⁿ.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    n: usize,
    coords: DMatrix<f64>,
    pivots: Vec<usize>,
}

impl Subspace {
    /// Builds the span of the given points of Pⁿ.
    pub fn from_points(points: &[HomogeneousPoint], n: usize) -> Result<Self> {
        if points.is_empty() {
            return Err(GeomError::DimensionMismatch("no points given".into()));
        }
        if let Some(bad) = points.iter().find(|p| p.0.len() != n + 1) {
            return Err(GeomError::DimensionMismatch(format!(
                "point has {} coordinates, expected {}",
                bad.0.len(),
                n + 1
            )));
        }
        let cols: Vec<_> = points.iter().map(|p| p.0.clone()).collect();
        Self::from_matrix(DMatrix::from_columns(&cols))
    }

    /// Builds the subspace spanned by the columns of `m`; the ambient
    /// dimension is `m.nrows() - 1`.
    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        let (rows, cols) = m.shape();
        if rows < 2 || cols == 0 || cols >= rows {
            return Err(GeomError::DimensionMismatch(format!(
                "a {rows}x{cols} coordinate matrix does not describe a proper subspace"
            )));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(GeomError::NonFinite);
        }
        let r = linalg::rank(&m, RANK_RTOL);
        if r < cols {
            return Err(GeomError::DependentPoints { rank: r, expected: cols });
        }
        let (coords, pivots) = linalg::column_echelon(&m, ECHELON_TOL);
        if pivots.len() != cols {
            return Err(GeomError::DependentPoints { rank: pivots.len(), expected: cols });
        }
        Ok(Self { n: rows - 1, coords, pivots })
    }

    /// Span of the coordinate points `e_k` for the given indices.
    pub fn coordinate(n: usize, indices: &[usize]) -> Result<Self> {
        let mut m = DMatrix::zeros(n + 1, indices.len());
        for (c, &k) in indices.iter().enumerate() {
            if k > n {
                return Err(GeomError::DimensionMismatch(format!("index {k} exceeds n = {n}")));
            }
            m[(k, c)] = 1.0;
        }
        Self::from_matrix(m)
    }

    pub fn ambient_n(&self) -> usize {
        self.n
    }

    /// Projective dimension.
    pub fn dim(&self) -> usize {
        self.coords.ncols() - 1
    }

    /// Canonical matrix coordinates (column-reduced echelon form).
    pub fn coords(&self) -> &DMatrix<f64> {
        &self.coords
    }

    /// Rows holding the unit pivots of the canonical representative.
    pub fn pivot_rows(&self) -> &[usize] {
        &self.pivots
    }

    /// Max-abs distance between canonical representatives.
    pub fn distance(&self, other: &Subspace) -> f64 {
        if self.coords.shape() != other.coords.shape() || self.pivots != other.pivots {
            return f64::INFINITY;
        }
        linalg::max_abs(&(&self.coords - &other.coords))
    }

    pub fn approx_eq(&self, other: &Subspace, tol: f64) -> bool {
        self.distance(other) <= tol
    }

    /// Canonical columns scaled to unit length.
    pub fn unit_columns(&self) -> DMatrix<f64> {
        let mut m = self.coords.clone();
        for mut c in m.column_iter_mut() {
            let norm = c.norm();
            c /= norm;
        }
        m
    }
}

/// Rows are linear equations cutting out a subspace.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentialCoords {
    n: usize,
    eq: DMatrix<f64>,
}

impl TangentialCoords {
    pub fn ambient_n(&self) -> usize {
        self.n
    }

    pub fn eq_matrix(&self) -> &DMatrix<f64> {
        &self.eq
    }
}

/// Equations of `p_star`: the left nullspace of its matrix coordinates, in
/// row-reduced echelon form.
pub fn tangential_coordinates(p_star: &Subspace) -> TangentialCoords {
    let z = p_star.coords();
    let null = linalg::nullspace(&z.transpose(), RANK_RTOL);
    let (eq, piv) = linalg::rref(&null.transpose(), ECHELON_TOL);
    let eq = eq.rows(0, piv.len()).into_owned();
    TangentialCoords { n: p_star.ambient_n(), eq }
}

/// A subspace `p` of dimension m with a complementary normalizing subspace
/// `p_star` of dimension n − m − 1.
#[derive(Debug, Clone, PartialEq)]
pub struct MPair {
    p: Subspace,
    p_star: Subspace,
}

/// True iff `p` and `p_star` together span Pⁿ.
pub fn pair_is_valid(p: &Subspace, p_star: &Subspace) -> Result<bool> {
    let n = p.ambient_n();
    if p_star.ambient_n() != n {
        return Err(GeomError::DimensionMismatch(format!(
            "ambient dimensions differ: {n} vs {}",
            p_star.ambient_n()
        )));
    }
    if p.dim() + p_star.dim() + 1 != n {
        return Err(GeomError::DimensionMismatch(format!(
            "dim p = {} and dim p* = {} are not complementary in P^{n}",
            p.dim(),
            p_star.dim()
        )));
    }
    let joined = concat_columns(&p.unit_columns(), &p_star.unit_columns());
    Ok(linalg::is_invertible(&joined, RANK_RTOL))
}

impl MPair {
    pub fn new(p: Subspace, p_star: Subspace) -> Result<Self> {
        if !pair_is_valid(&p, &p_star)? {
            return Err(GeomError::InvalidPair);
        }
        Ok(Self { p, p_star })
    }

    pub fn p(&self) -> &Subspace {
        &self.p
    }

    pub fn p_star(&self) -> &Subspace {
        &self.p_star
    }

    pub fn m(&self) -> usize {
        self.p.dim()
    }

    pub fn n(&self) -> usize {
        self.p.ambient_n()
    }
}

/// A point frame `{A_0, …, A_n}` stored column-wise.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectiveFrame {
    matrix: DMatrix<f64>,
}

impl ProjectiveFrame {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if !linalg::is_invertible(&matrix, RANK_RTOL) {
            return Err(GeomError::SingularFrame);
        }
        Ok(Self { matrix })
    }

    pub fn ambient_n(&self) -> usize {
        self.matrix.nrows() - 1
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Components of `m` (columns are points) relative to this frame.
    pub fn components(&self, m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.matrix.clone().lu().solve(m).ok_or(GeomError::SingularFrame)
    }
}

/// The canonical frame adapted to `pair`: the first m+1 columns are the unit
/// canonical spanning points of p, the remaining n−m those of p*.
pub fn adapted_frame(pair: &MPair) -> ProjectiveFrame {
    let matrix = concat_columns(&pair.p.unit_columns(), &pair.p_star.unit_columns());
    ProjectiveFrame { matrix }
}

/// Components of an infinitesimal frame displacement: with frame columns
/// `A_ξ`, `dA_ξ = ω_ξ^η A_η`. The matrix is stored as `omega[(η, ξ)] = ω_ξ^η`,
/// i.e. `F⁻¹ dF`.
#[derive(Debug, Clone, PartialEq)]
pub struct MaurerCartanForms {
    pub omega: DMatrix<f64>,
}

impl MaurerCartanForms {
    /// `ω_ξ^η`.
    pub fn component(&self, xi: usize, eta: usize) -> f64 {
        self.omega[(eta, xi)]
    }
}

/// First-order displacement components `F_a⁻¹ (F_b − F_a)`.
pub fn maurer_cartan_estimate(
    frame_a: &ProjectiveFrame,
    frame_b: &ProjectiveFrame,
) -> Result<MaurerCartanForms> {
    if frame_a.ambient_n() != frame_b.ambient_n() {
        return Err(GeomError::DimensionMismatch("frames in different ambient spaces".into()));
    }
    let diff = &frame_b.matrix - &frame_a.matrix;
    let omega = frame_a.components(&diff)?;
    Ok(MaurerCartanForms { omega })
}

pub(crate) fn concat_columns(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.columns_mut(0, a.ncols()).copy_from(a);
    out.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    out
}
