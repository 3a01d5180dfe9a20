//! Seeded random generators for well-conditioned test inputs.
//!
//! Used by the sampled checks of the command-line front end and by the test
//! suites. All draws come from a ChaCha stream, so a seed fixes every sample.

use nalgebra::DMatrix;
use ndarray::Array4;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg;
use crate::normalization::{FundamentalTensor, TangentDirection};
use crate::polar::{BlockMetrics, Quadric};
use crate::projective::{MPair, Subspace};

pub struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.random_range(lo..hi)
    }

    pub fn sign(&mut self) -> f64 {
        if self.rng.random::<bool>() { 1.0 } else { -1.0 }
    }

    /// Entries uniform in [-1, 1).
    pub fn matrix(&mut self, rows: usize, cols: usize) -> DMatrix<f64> {
        DMatrix::from_fn(rows, cols, |_, _| self.rng.random_range(-1.0..1.0))
    }

    /// Random orthogonal matrix (Q factor of a random square matrix).
    pub fn orthogonal(&mut self, k: usize) -> DMatrix<f64> {
        self.matrix(k, k).qr().q()
    }

    /// Square matrix with singular values in [0.5, 2].
    pub fn invertible(&mut self, k: usize) -> DMatrix<f64> {
        let u = self.orthogonal(k);
        let v = self.orthogonal(k);
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(k, |_, _| self.rng.random_range(0.5..2.0)));
        u * d * v.transpose()
    }

    /// Symmetric matrix with eigenvalues `±[0.5, 2]`; `negatives` of them
    /// negative (random count when `None`).
    pub fn symmetric(&mut self, k: usize, negatives: Option<usize>) -> DMatrix<f64> {
        let neg = negatives.unwrap_or_else(|| self.rng.random_range(0..=k));
        let q = self.orthogonal(k);
        let d = nalgebra::DVector::from_fn(k, |i, _| {
            let mag = self.rng.random_range(0.5..2.0);
            if i < neg { -mag } else { mag }
        });
        let m = &q * DMatrix::from_diagonal(&d) * q.transpose();
        (&m + m.transpose()) * 0.5
    }

    pub fn quadric(&mut self, n: usize) -> Quadric {
        Quadric::new(self.symmetric(n + 1, None)).expect("sampled quadric is valid")
    }

    pub fn subspace(&mut self, n: usize, dim: usize) -> Subspace {
        loop {
            let x = self.matrix(n + 1, dim + 1);
            // Keep the leading block well away from singular so canonical
            // forms stay well conditioned.
            let lead = x.rows(0, dim + 1).into_owned();
            let sv = linalg::singular_values(&lead);
            if sv.last().copied().unwrap_or(0.0) > 0.2 {
                return Subspace::from_matrix(x).expect("full rank sample");
            }
        }
    }

    /// A pair built from the column blocks of a random invertible frame.
    pub fn pair(&mut self, m: usize, n: usize) -> MPair {
        loop {
            let p = self.subspace(n, m);
            let q = self.subspace(n, n - m - 1);
            let joined = crate::projective::concat_columns(&p.unit_columns(), &q.unit_columns());
            let sv = linalg::singular_values(&joined);
            if sv.last().copied().unwrap_or(0.0) > 0.1 * sv[0] {
                return MPair::new(p, q).expect("complementary sample");
            }
        }
    }

    /// Entries uniform in [-1, 1).
    pub fn lambda(&mut self, m: usize, n: usize) -> FundamentalTensor {
        let (a, b) = (m + 1, n - m);
        let arr = Array4::from_shape_fn((a, a, b, b), |_| self.rng.random_range(-1.0..1.0));
        FundamentalTensor::from_array(m, n, arr).expect("shape matches")
    }

    /// A random λ symmetrized under the simultaneous pair swap.
    pub fn harmonic_lambda(&mut self, m: usize, n: usize) -> FundamentalTensor {
        let lam = self.lambda(m, n);
        let swapped = lam.pair_swapped();
        lam.combine(&swapped, 0.5, 0.5)
    }

    pub fn block_metrics(&mut self, m: usize, n: usize) -> BlockMetrics {
        let g_ab = self.symmetric(m + 1, None);
        let g_ij = self.symmetric(n - m, None);
        BlockMetrics::new(g_ab, g_ij).expect("sampled blocks are nondegenerate")
    }

    pub fn direction(&mut self, m: usize, n: usize) -> TangentDirection {
        TangentDirection::new(m, n, self.matrix(n - m, m + 1)).expect("shape matches")
    }
}
