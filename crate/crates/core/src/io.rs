//! JSON file formats.
//!
//! Index order is fixed everywhere: Greek indices before Latin, upper before
//! lower within each family, Latin indices stored from offset 0 (index m+1).
//!
//! | object      | layout                                                  |
//! |-------------|---------------------------------------------------------|
//! | subspace    | `{"n", "points": [[n+1 reals], ...]}`                    |
//! | pair        | `{"p": subspace, "p_star": subspace}`                    |
//! | λ           | `{"m", "n", "lambda": [α][β][i][j]}`                     |
//! | quadric     | `{"n", "matrix": [[...]]}`                               |
//! | direction   | `{"m", "n", "direction": [i][α]}`                        |
//! | chart point | `{"m", "n", "B": [i][α]}`                                |

use nalgebra::DMatrix;
use ndarray::{Array4, ArrayD};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::GeomError;
use crate::normalization::{FundamentalTensor, TangentDirection};
use crate::polar::Quadric;
use crate::projective::{HomogeneousPoint, MPair, Subspace};
use crate::segre_affine::AffineChartPoint;

#[derive(Debug, thiserror::Error)]
pub enum InputError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Geometry(#[from] GeomError),
    #[error("{0}")]
    Shape(String),
}

pub type InputResult<T> = std::result::Result<T, InputError>;

#[derive(Debug, Serialize, Deserialize)]
pub struct SubspaceFile {
    pub n: usize,
    pub points: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PairFile {
    pub p: SubspaceFile,
    pub p_star: SubspaceFile,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct LambdaFile {
    pub m: usize,
    pub n: usize,
    pub lambda: Vec<Vec<Vec<Vec<f64>>>>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct QuadricFile {
    pub n: usize,
    pub matrix: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DirectionFile {
    pub m: usize,
    pub n: usize,
    pub direction: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ChartFile {
    pub m: usize,
    pub n: usize,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
}

fn rows_to_matrix(rows: &[Vec<f64>], shape: (usize, usize), what: &str) -> InputResult<DMatrix<f64>> {
    if rows.len() != shape.0 || rows.iter().any(|r| r.len() != shape.1) {
        return Err(InputError::Shape(format!("{what} must be {}x{}", shape.0, shape.1)));
    }
    Ok(DMatrix::from_fn(shape.0, shape.1, |r, c| rows[r][c]))
}

pub fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

impl SubspaceFile {
    pub fn into_subspace(self) -> InputResult<Subspace> {
        let pts = self
            .points
            .into_iter()
            .map(HomogeneousPoint::new)
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Subspace::from_points(&pts, self.n)?)
    }

    pub fn from_subspace(s: &Subspace) -> Self {
        let points = s.coords().column_iter().map(|c| c.iter().copied().collect()).collect();
        Self { n: s.ambient_n(), points }
    }
}

impl PairFile {
    pub fn into_pair(self) -> InputResult<MPair> {
        let (p, p_star) = (self.p.into_subspace()?, self.p_star.into_subspace()?);
        Ok(MPair::new(p, p_star)?)
    }
}

impl LambdaFile {
    pub fn into_tensor(self) -> InputResult<FundamentalTensor> {
        let (m, n) = (self.m, self.n);
        if m >= n {
            return Err(InputError::Shape(format!("need m < n, got m = {m}, n = {n}")));
        }
        let (a, b) = (m + 1, n - m);
        let l = &self.lambda;
        let ok = l.len() == a
            && l.iter().all(|x| {
                x.len() == a && x.iter().all(|y| y.len() == b && y.iter().all(|z| z.len() == b))
            });
        if !ok {
            return Err(InputError::Shape(format!("lambda must have shape [{a}][{a}][{b}][{b}]")));
        }
        let arr = Array4::from_shape_fn((a, a, b, b), |(al, be, i, j)| l[al][be][i][j]);
        if arr.iter().any(|v| !v.is_finite()) {
            return Err(GeomError::NonFinite.into());
        }
        Ok(FundamentalTensor::from_array(m, n, arr)?)
    }

    pub fn from_tensor(lam: &FundamentalTensor) -> Self {
        let arr = lam.array();
        let (a, _, b, _) = arr.dim();
        let lambda = (0..a)
            .map(|al| (0..a).map(|be| (0..b).map(|i| (0..b).map(|j| arr[[al, be, i, j]]).collect()).collect()).collect())
            .collect();
        Self { m: lam.m(), n: lam.n(), lambda }
    }
}

impl QuadricFile {
    pub fn into_quadric(self) -> InputResult<Quadric> {
        let g = rows_to_matrix(&self.matrix, (self.n + 1, self.n + 1), "quadric matrix")?;
        Ok(Quadric::new(g)?)
    }
}

impl DirectionFile {
    pub fn into_direction(self) -> InputResult<TangentDirection> {
        if self.m >= self.n {
            return Err(InputError::Shape("need m < n".into()));
        }
        let d = rows_to_matrix(&self.direction, (self.n - self.m, self.m + 1), "direction")?;
        Ok(TangentDirection::new(self.m, self.n, d)?)
    }
}

impl ChartFile {
    pub fn into_chart(self) -> InputResult<AffineChartPoint> {
        if self.m >= self.n {
            return Err(InputError::Shape("need m < n".into()));
        }
        let b = rows_to_matrix(&self.b, (self.n - self.m, self.m + 1), "chart matrix B")?;
        Ok(AffineChartPoint::new(self.m, self.n, b)?)
    }

    pub fn from_chart(b: &AffineChartPoint) -> Self {
        Self { m: b.m(), n: b.n(), b: matrix_rows(b.matrix()) }
    }
}

pub fn parse<T: for<'de> Deserialize<'de>>(text: &str) -> InputResult<T> {
    Ok(serde_json::from_str(text)?)
}

/// Row-major nested JSON array of a matrix.
pub fn matrix_value(m: &DMatrix<f64>) -> Value {
    serde_json::to_value(matrix_rows(m)).expect("matrix rows serialize")
}

/// Nested JSON array of an n-dimensional array, outermost index first.
pub fn array_value(a: &ArrayD<f64>) -> Value {
    fn nest(view: ndarray::ArrayViewD<'_, f64>) -> Value {
        if view.ndim() == 0 {
            return Value::from(view[[]]);
        }
        Value::Array(view.outer_iter().map(nest).collect())
    }
    nest(a.view())
}

pub fn array4_value(a: &Array4<f64>) -> Value {
    array_value(&a.clone().into_dyn())
}
