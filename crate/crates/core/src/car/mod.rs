//! Exact CAR algebra on a finite chain via the Jordan-Wigner map.
//!
//! Site 0 is the least significant bit of the occupation basis index and
//! the Jordan-Wigner string runs over lower-indexed sites:
//! `a_i = (∏_{k<i} (−1)^{n_k}) σ⁻_i`.
//!
//! Local subalgebras `A_R` are spanned by the normal-ordered monomials of
//! [`MonomialBasis`]; every projection onto a subalgebra is the orthogonal
//! projection for the normalized-trace inner product `τ(X†Y)`.

mod element;
mod monomial;
mod region;

pub use element::{support_residual, AlgebraElement};
pub use monomial::{combination_residual, LocalFactor, Monomial, MonomialBasis, SparseOp};
pub use region::Region;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, ZERO};

pub(crate) use monomial::grading_sign;
pub(crate) use region::check_lattice;

/// Dense matrices above this size are not practical.
pub const MAX_SITES: usize = 12;

/// Relative tolerance for support verification.
pub const SUPPORT_TOL: f64 = 1e-12;

pub fn dim(lattice_size: usize) -> usize {
    1usize << lattice_size
}

fn single_site(site: usize, lattice_size: usize, factor: LocalFactor) -> Result<AlgebraElement> {
    check_lattice(lattice_size)?;
    if site >= lattice_size {
        return Err(Error::SiteOutOfBounds { site, lattice_size });
    }
    let m = Monomial::new(lattice_size, &[(site, factor)]);
    Ok(AlgebraElement::trusted(m.to_dense(), Region::from_mask(1 << site, lattice_size)))
}

/// Annihilation operator `a_i`.
pub fn annihilator(site: usize, lattice_size: usize) -> Result<AlgebraElement> {
    single_site(site, lattice_size, LocalFactor::Annihilate)
}

/// Creation operator `a_i†`.
pub fn creator(site: usize, lattice_size: usize) -> Result<AlgebraElement> {
    single_site(site, lattice_size, LocalFactor::Create)
}

/// Number operator `n_i = a_i†a_i`.
pub fn number(site: usize, lattice_size: usize) -> Result<AlgebraElement> {
    let a = annihilator(site, lattice_size)?;
    Ok(&a.adjoint() * &a)
}

/// Majorana-type odd self-adjoint unitary `a_i + a_i†`.
pub fn majorana(site: usize, lattice_size: usize) -> Result<AlgebraElement> {
    let a = annihilator(site, lattice_size)?;
    Ok(&a + &a.adjoint())
}

#[inline]
pub(crate) fn parity_sign(state: usize) -> f64 {
    if state.count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn theta_matrix(m: &CMatrix) -> CMatrix {
    CMatrix::from_fn(m.nrows(), m.ncols(), |r, c| m[(r, c)] * (parity_sign(r) * parity_sign(c)))
}

/// Fermion grading automorphism `Θ(A) = v_Λ A v_Λ`.
pub fn theta(a: &AlgebraElement) -> AlgebraElement {
    AlgebraElement::trusted(theta_matrix(a.matrix()), a.support())
}

pub(crate) fn theta_dense(m: &CMatrix) -> CMatrix {
    theta_matrix(m)
}

/// Even and odd parts of an element.
#[derive(Clone, Debug)]
pub struct GradedSplit {
    pub even: AlgebraElement,
    pub odd: AlgebraElement,
}

pub fn even_odd_split(a: &AlgebraElement) -> GradedSplit {
    let t = theta(a);
    GradedSplit { even: (a + &t).scale(0.5), odd: (a - &t).scale(0.5) }
}

/// `max |A − Θ(A)|`; zero iff `A` is even.
pub fn oddness_residual(a: &CMatrix) -> f64 {
    crate::linalg::max_abs(&(a - theta_matrix(a)))
}

/// `max |A + Θ(A)|`; zero iff `A` is odd.
pub fn evenness_residual(a: &CMatrix) -> f64 {
    crate::linalg::max_abs(&(a + theta_matrix(a)))
}

/// Grading unitary `v_R = ∏_{i∈R}(a_i†a_i − a_i a_i†)`.
pub fn grading_unitary(region: &Region) -> Result<AlgebraElement> {
    if region.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let d = dim(region.lattice_size());
    let mut m = CMatrix::zeros(d, d);
    for j in 0..d {
        m[(j, j)] = Complex64::new(grading_sign(region.mask(), j), 0.0);
    }
    Ok(AlgebraElement::trusted(m, *region))
}

/// Orthogonal projection of a dense matrix onto the span of `basis`.
pub(crate) fn project_onto<'a>(
    m: &CMatrix,
    basis: impl IntoIterator<Item = &'a Monomial>,
) -> CMatrix {
    let d = m.nrows();
    let mut out = CMatrix::zeros(d, d);
    for b in basis {
        let c = b.overlap(m);
        if c != ZERO {
            b.add_scaled_to(&mut out, c / b.norm_sq());
        }
    }
    out
}

pub(crate) fn conditional_expectation_matrix(m: &CMatrix, region: &Region) -> CMatrix {
    if region.is_full() {
        return m.clone();
    }
    project_onto(m, MonomialBasis::new(*region).elements.iter())
}

/// τ-preserving conditional expectation `E_R` onto `A_R`.
pub fn conditional_expectation(a: &AlgebraElement, region: &Region) -> AlgebraElement {
    let support = a.support().intersection(region);
    AlgebraElement::trusted(conditional_expectation_matrix(a.matrix(), region), support)
}

/// Coordinates of `E_R(m)` in the compact picture `A_R ≅ M_{2^|R|}`: the
/// sites of `R` are relabelled `0..|R|` and each monomial is sent to its
/// relabelled copy. The map is a *-isomorphism and `Tr = 2^{L−|R|} tr`.
pub fn compress(m: &CMatrix, region: &Region) -> CMatrix {
    let sites = region.sites();
    let k = sites.len();
    if k == 0 {
        return CMatrix::from_element(1, 1, linalg::trace(m) / dim(region.lattice_size()) as f64);
    }
    let small = 1usize << k;
    let mut out = CMatrix::zeros(small, small);
    for mono in MonomialBasis::new(*region).elements {
        let c = mono.overlap(m);
        if c == ZERO {
            continue;
        }
        let relabelled: Vec<(usize, LocalFactor)> = mono
            .factors()
            .iter()
            .map(|&(s, f)| (sites.binary_search(&s).expect("factor inside region"), f))
            .collect();
        Monomial::new(k, &relabelled).add_scaled_to(&mut out, c / mono.norm_sq());
    }
    out
}

/// Inverse of [`compress`]: the element of `A_R` with compact matrix `x`.
pub fn expand(x: &CMatrix, region: &Region) -> Result<AlgebraElement> {
    let sites = region.sites();
    let k = sites.len();
    let small = 1usize << k;
    if x.nrows() != small || x.ncols() != small {
        return Err(Error::Dimension { expected: small, found: x.nrows() });
    }
    let l = region.lattice_size();
    if k == 0 {
        return Ok(AlgebraElement::scalar(x[(0, 0)], l));
    }
    let mut out = CMatrix::zeros(dim(l), dim(l));
    for mono in MonomialBasis::new(Region::full(k)).elements {
        let c = mono.overlap(x) / mono.norm_sq();
        if c == ZERO {
            continue;
        }
        let lifted: Vec<(usize, LocalFactor)> = mono.factors().iter().map(|&(j, f)| (sites[j], f)).collect();
        Monomial::new(l, &lifted).add_scaled_to(&mut out, c);
    }
    Ok(AlgebraElement::trusted(out, *region))
}

/// Spanning set of the commutant `A_R′ = A_{R^c}^e + v_R A_{R^c}^o`.
///
/// The returned monomials are τ-orthogonal, so they also serve as an
/// orthogonal basis for projecting onto `A_R′`.
pub fn commutant_basis(region: &Region) -> Result<Vec<Monomial>> {
    if region.is_empty() || region.is_full() {
        return Err(Error::DegenerateRegion);
    }
    let outside = MonomialBasis::new(region.complement());
    Ok(outside
        .elements
        .into_iter()
        .map(|m| if m.is_odd() { m.with_grading_prefix(*region) } else { m })
        .collect())
}

/// Subalgebra playing the role of the fixed outside system for a region.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subalgebra {
    /// `A_R`
    Local(Region),
    /// `A_R′`
    Commutant(Region),
}

impl Subalgebra {
    pub fn basis(&self) -> Result<Vec<Monomial>> {
        match self {
            Subalgebra::Local(r) => Ok(MonomialBasis::new(*r).elements),
            Subalgebra::Commutant(r) => commutant_basis(r),
        }
    }

    pub fn project(&self, m: &CMatrix) -> Result<CMatrix> {
        match self {
            Subalgebra::Local(r) => Ok(conditional_expectation_matrix(m, r)),
            Subalgebra::Commutant(_) => Ok(project_onto(m, self.basis()?.iter())),
        }
    }
}
