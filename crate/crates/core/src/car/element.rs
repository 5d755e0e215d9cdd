use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};

use super::region::Region;
use super::{conditional_expectation_matrix, SUPPORT_TOL};

/// Dense `2^L × 2^L` operator tagged with the region it lives in.
///
/// Supports are verified on construction: the conditional expectation onto
/// the claimed region must reproduce the matrix.
#[derive(Clone, Debug)]
pub struct AlgebraElement {
    matrix: CMatrix,
    support: Region,
}

impl AlgebraElement {
    pub fn new(matrix: CMatrix, support: Region) -> Result<Self> {
        let dim = 1usize << support.lattice_size();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::Dimension { expected: dim, found: matrix.nrows() });
        }
        if !support.is_full() {
            let residual = support_residual(&matrix, &support);
            if residual > SUPPORT_TOL * linalg::max_abs(&matrix).max(f64::MIN_POSITIVE) {
                return Err(Error::SupportMismatch { residual });
            }
        }
        Ok(Self { matrix, support })
    }

    /// Element of the full algebra.
    pub fn global(matrix: CMatrix, lattice_size: usize) -> Result<Self> {
        Self::new(matrix, Region::full(lattice_size))
    }

    /// Caller guarantees `matrix ∈ A_support`.
    pub(crate) fn trusted(matrix: CMatrix, support: Region) -> Self {
        Self { matrix, support }
    }

    pub fn identity(lattice_size: usize) -> Self {
        Self::scalar(Complex64::new(1.0, 0.0), lattice_size)
    }

    pub fn zero(lattice_size: usize) -> Self {
        Self::scalar(Complex64::new(0.0, 0.0), lattice_size)
    }

    pub fn scalar(c: Complex64, lattice_size: usize) -> Self {
        let dim = 1usize << lattice_size;
        Self { matrix: CMatrix::identity(dim, dim) * c, support: Region::empty(lattice_size) }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn support(&self) -> Region {
        self.support
    }

    pub fn lattice_size(&self) -> usize {
        self.support.lattice_size()
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn adjoint(&self) -> Self {
        Self { matrix: self.matrix.adjoint(), support: self.support }
    }

    pub fn scale(&self, c: f64) -> Self {
        Self { matrix: self.matrix.scale(c), support: self.support }
    }

    pub fn scale_complex(&self, c: Complex64) -> Self {
        Self { matrix: &self.matrix * c, support: self.support }
    }

    /// Re-tags the element with a larger (or verified smaller) support.
    pub fn with_support(&self, support: Region) -> Result<Self> {
        if self.support.is_subset(&support) {
            Ok(Self { matrix: self.matrix.clone(), support })
        } else {
            Self::new(self.matrix.clone(), support)
        }
    }

    pub fn commutator(&self, other: &Self) -> Self {
        Self {
            matrix: linalg::commutator(&self.matrix, &other.matrix),
            support: self.support.union(&other.support),
        }
    }

    pub fn anticommutator(&self, other: &Self) -> Self {
        Self {
            matrix: linalg::anticommutator(&self.matrix, &other.matrix),
            support: self.support.union(&other.support),
        }
    }

    pub fn hermiticity_residual(&self) -> f64 {
        linalg::hermiticity_residual(&self.matrix)
    }

    pub fn max_abs(&self) -> f64 {
        linalg::max_abs(&self.matrix)
    }

    pub fn operator_norm(&self) -> f64 {
        linalg::operator_norm(&self.matrix)
    }

    /// Normalized trace `τ(A) = Tr(A)/2^L`.
    pub fn tau(&self) -> Complex64 {
        linalg::trace(&self.matrix) / self.dim() as f64
    }

    pub fn distance(&self, other: &Self) -> f64 {
        linalg::max_abs(&(&self.matrix - &other.matrix))
    }
}

/// `max |A − E_R(A)|`.
pub fn support_residual(matrix: &CMatrix, region: &Region) -> f64 {
    linalg::max_abs(&(matrix - conditional_expectation_matrix(matrix, region)))
}

impl Add for &AlgebraElement {
    type Output = AlgebraElement;
    fn add(self, rhs: &AlgebraElement) -> AlgebraElement {
        AlgebraElement { matrix: &self.matrix + &rhs.matrix, support: self.support.union(&rhs.support) }
    }
}

impl Sub for &AlgebraElement {
    type Output = AlgebraElement;
    fn sub(self, rhs: &AlgebraElement) -> AlgebraElement {
        AlgebraElement { matrix: &self.matrix - &rhs.matrix, support: self.support.union(&rhs.support) }
    }
}

impl Mul for &AlgebraElement {
    type Output = AlgebraElement;
    fn mul(self, rhs: &AlgebraElement) -> AlgebraElement {
        AlgebraElement { matrix: &self.matrix * &rhs.matrix, support: self.support.union(&rhs.support) }
    }
}

impl Neg for &AlgebraElement {
    type Output = AlgebraElement;
    fn neg(self) -> AlgebraElement {
        AlgebraElement { matrix: -&self.matrix, support: self.support }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for AlgebraElement {
            type Output = AlgebraElement;
            fn $m(self, rhs: AlgebraElement) -> AlgebraElement {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
