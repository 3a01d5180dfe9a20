//! Small dense linear-algebra helpers: numerical rank, nullspaces and
//! echelon canonical forms.
//!
//! Rank decisions compare singular values against a threshold relative to
//! the largest singular value ([`RANK_RTOL`] unless the caller overrides it).

use nalgebra::DMatrix;

/// Default relative singular-value threshold for rank decisions.
pub const RANK_RTOL: f64 = 1e-9;

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut sv: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Rank with singular values `<= rtol * sigma_max` counted as zero.
pub fn rank(m: &DMatrix<f64>, rtol: f64) -> usize {
    let sv = singular_values(m);
    let Some(&top) = sv.first() else { return 0 };
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rtol * top).count()
}

/// Rank with singular values `<= atol` counted as zero.
pub fn rank_abs(m: &DMatrix<f64>, atol: f64) -> usize {
    singular_values(m).iter().filter(|&&s| s > atol).count()
}

/// True when the square matrix `m` has full rank at relative tolerance `rtol`.
pub fn is_invertible(m: &DMatrix<f64>, rtol: f64) -> bool {
    m.is_square() && m.nrows() > 0 && rank(m, rtol) == m.nrows()
}

/// Orthonormal basis (as columns) of the right nullspace `{x : m x = 0}`.
///
/// Wide inputs are padded with zero rows so the SVD returns a complete
/// right singular basis.
pub fn nullspace(m: &DMatrix<f64>, rtol: f64) -> DMatrix<f64> {
    let (r, c) = m.shape();
    let padded = if r < c {
        let mut p = DMatrix::zeros(c, c);
        p.rows_mut(0, r).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested v_t");
    let sv = &svd.singular_values;
    let top = sv.iter().fold(0.0_f64, |a, &s| a.max(s));
    let null_rows: Vec<usize> = (0..sv.len())
        .filter(|&k| top == 0.0 || sv[k] <= rtol * top)
        .collect();
    let mut out = DMatrix::zeros(c, null_rows.len());
    for (col, &k) in null_rows.iter().enumerate() {
        for x in 0..c {
            out[(x, col)] = v_t[(k, x)];
        }
    }
    out
}

/// Reduced row echelon form with unit pivots. Columns whose best remaining
/// pivot is below `tol * max_abs(m)` are treated as non-pivot columns.
///
/// Returns the reduced matrix and the list of pivot columns.
pub fn rref(m: &DMatrix<f64>, tol: f64) -> (DMatrix<f64>, Vec<usize>) {
    let mut a = m.clone();
    let (rows, cols) = a.shape();
    let scale = max_abs(&a);
    let mut pivots = Vec::new();
    if scale == 0.0 {
        return (a, pivots);
    }
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let (best, best_val) = (r..rows)
            .map(|k| (k, a[(k, c)].abs()))
            .fold((r, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best_val <= tol * scale {
            for k in r..rows {
                a[(k, c)] = 0.0;
            }
            continue;
        }
        a.swap_rows(r, best);
        let piv = a[(r, c)];
        for x in 0..cols {
            a[(r, x)] /= piv;
        }
        a[(r, c)] = 1.0;
        for k in 0..rows {
            if k != r {
                let f = a[(k, c)];
                if f != 0.0 {
                    for x in 0..cols {
                        a[(k, x)] -= f * a[(r, x)];
                    }
                    a[(k, c)] = 0.0;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    for k in r..rows {
        for x in 0..cols {
            a[(k, x)] = 0.0;
        }
    }
    (a, pivots)
}

/// Column-reduced echelon form: the transpose of the RREF of `m^T`.
/// Each column has a unit pivot, zeros above it, and zeros in the pivot rows
/// of every other column. Also returns the pivot rows.
pub fn column_echelon(m: &DMatrix<f64>, tol: f64) -> (DMatrix<f64>, Vec<usize>) {
    let (r, piv) = rref(&m.transpose(), tol);
    (r.rows(0, piv.len()).transpose(), piv)
}
