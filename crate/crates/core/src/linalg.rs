//! Dense complex matrix helpers: Hermitian eigendecomposition, spectral
//! functions and the norms used throughout the crate.

use faer::complex_native::c64;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn new(m: &CMatrix) -> Result<Self> {
        // Symmetrize so round-off asymmetry never leaks into the spectrum.
        let sym = (m + m.adjoint()).scale(0.5);
        let n = sym.nrows();
        if sym.iter().any(|z| !z.is_finite()) {
            return Err(Error::Eigen);
        }
        // nalgebra's complex Hermitian solver loses accuracy on degenerate
        // spectra; faer's divide and conquer does not.
        let fm = faer::Mat::<c64>::from_fn(n, n, |r, c| c64::new(sym[(r, c)].re, sym[(r, c)].im));
        let eig = fm.selfadjoint_eigendecomposition(faer::Side::Lower);
        let (s, u) = (eig.s(), eig.u());
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| s.column_vector().read(a).re.total_cmp(&s.column_vector().read(b).re));
        let values = order.iter().map(|&k| s.column_vector().read(k).re).collect();
        let vectors = CMatrix::from_fn(n, n, |r, c| {
            let z = u.read(r, order[c]);
            Complex64::new(z.re, z.im)
        });
        Ok(Self { values, vectors })
    }

    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// `V f(Λ) V†`.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let diag: Vec<Complex64> = self.values.iter().map(|&x| Complex64::new(f(x), 0.0)).collect();
        let d = DVector::from_vec(diag);
        let mut scaled = self.vectors.clone();
        for (c, mut col) in scaled.column_iter_mut().enumerate() {
            col *= d[c];
        }
        scaled * self.vectors.adjoint()
    }

    /// Diagonal of `V† M V`, i.e. the weights of `M` on each eigenvector.
    pub fn diagonal_weights(&self, m: &CMatrix) -> Vec<Complex64> {
        let t = self.vectors.adjoint() * m * &self.vectors;
        (0..t.nrows()).map(|k| t[(k, k)]).collect()
    }
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

/// `Tr(A B)` without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    let n = a.nrows();
    let mut acc = ZERO;
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

pub fn hermiticity_residual(m: &CMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn anticommutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b + b * a
}

pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    m.clone().svd(false, false).singular_values.iter().copied().collect()
}

/// Sum of singular values.
pub fn trace_norm(m: &CMatrix) -> f64 {
    singular_values(m).iter().sum()
}

/// Largest singular value.
pub fn operator_norm(m: &CMatrix) -> f64 {
    singular_values(m).into_iter().fold(0.0, f64::max)
}

pub fn expm_hermitian(h: &CMatrix, scale: f64) -> Result<CMatrix> {
    Ok(HermitianEigen::new(h)?.apply(|x| (scale * x).exp()))
}

/// Hermitian matrix with i.i.d. Gaussian entries (GUE-like).
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CMatrix {
    let g = CMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    (&g + g.adjoint()).scale(0.5)
}

pub fn random_matrix<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CMatrix {
    CMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// Full-rank density matrix `G G† / Tr(G G†)`.
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CMatrix {
    let g = random_matrix(rng, dim);
    let p = &g * g.adjoint();
    let tr = trace(&p).re;
    p.unscale(tr)
}

/// Haar-random unit vector.
pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DVector<Complex64> {
    let v = DVector::from_fn(dim, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let n = v.norm();
    v.unscale(n)
}

pub fn projector(v: &DVector<Complex64>) -> CMatrix {
    v * v.adjoint()
}
