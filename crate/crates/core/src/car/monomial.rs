//! Normal-ordered fermion monomials and their sparse action on the
//! occupation basis.
//!
//! Every monomial maps each occupation basis vector to at most one basis
//! vector with coefficient ±1, so products, traces and expectations can be
//! evaluated column by column in `O(2^L)` without dense matrices.

use std::fmt;

use num_complex::Complex64;

use crate::linalg::{CMatrix, ZERO};

use super::region::Region;

/// Single-site factor of a monomial.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum LocalFactor {
    Identity,
    /// `a_i`
    Annihilate,
    /// `a_i†`
    Create,
    /// `a_i†a_i − a_i a_i†`
    Parity,
}

impl LocalFactor {
    pub const ALL: [LocalFactor; 4] =
        [LocalFactor::Identity, LocalFactor::Annihilate, LocalFactor::Create, LocalFactor::Parity];

    pub fn is_odd(self) -> bool {
        matches!(self, LocalFactor::Annihilate | LocalFactor::Create)
    }

    fn adjoint(self) -> Self {
        match self {
            LocalFactor::Annihilate => LocalFactor::Create,
            LocalFactor::Create => LocalFactor::Annihilate,
            f => f,
        }
    }

    /// Acts on basis state `state` at `site`; returns the image and sign.
    #[inline]
    fn act(self, site: usize, state: usize) -> Option<(usize, f64)> {
        let bit = 1usize << site;
        let string = || if (state & (bit - 1)).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        match self {
            LocalFactor::Identity => Some((state, 1.0)),
            LocalFactor::Annihilate => (state & bit != 0).then(|| (state ^ bit, string())),
            LocalFactor::Create => (state & bit == 0).then(|| (state ^ bit, string())),
            LocalFactor::Parity => Some((state, if state & bit != 0 { 1.0 } else { -1.0 })),
        }
    }
}

/// Site-ordered product `F_{s1} F_{s2} ⋯` with `s1 < s2 < ⋯`, optionally
/// left-multiplied by the grading unitary `v_R` of some region.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial {
    lattice_size: usize,
    factors: Vec<(usize, LocalFactor)>,
    grading_prefix: Option<Region>,
}

impl Monomial {
    pub fn identity(lattice_size: usize) -> Self {
        Self { lattice_size, factors: Vec::new(), grading_prefix: None }
    }

    /// Builds a monomial from `(site, factor)` pairs; identity factors are
    /// dropped and sites must be distinct.
    pub fn new(lattice_size: usize, factors: &[(usize, LocalFactor)]) -> Self {
        let mut fs: Vec<(usize, LocalFactor)> =
            factors.iter().copied().filter(|(_, f)| *f != LocalFactor::Identity).collect();
        fs.sort_by_key(|(s, _)| *s);
        assert!(fs.windows(2).all(|w| w[0].0 != w[1].0), "duplicate site in monomial");
        assert!(fs.iter().all(|(s, _)| *s < lattice_size), "site out of range");
        Self { lattice_size, factors: fs, grading_prefix: None }
    }

    pub fn with_grading_prefix(mut self, region: Region) -> Self {
        self.grading_prefix = Some(region);
        self
    }

    pub fn lattice_size(&self) -> usize {
        self.lattice_size
    }

    pub fn factors(&self) -> &[(usize, LocalFactor)] {
        &self.factors
    }

    pub fn grading_prefix(&self) -> Option<Region> {
        self.grading_prefix
    }

    /// Sites touched by local factors (the grading prefix is not included).
    pub fn support(&self) -> Region {
        let mask = self.factors.iter().fold(0u32, |m, (s, _)| m | (1 << s));
        Region::from_mask(mask, self.lattice_size)
    }

    pub fn odd_degree(&self) -> usize {
        self.factors.iter().filter(|(_, f)| f.is_odd()).count()
    }

    pub fn is_odd(&self) -> bool {
        self.odd_degree() % 2 == 1
    }

    pub fn is_identity(&self) -> bool {
        self.factors.is_empty() && self.grading_prefix.is_none()
    }

    /// `τ(M†M)`.
    pub fn norm_sq(&self) -> f64 {
        0.5_f64.powi(self.odd_degree() as i32)
    }

    /// Image of basis vector `state`, or `None` if annihilated.
    #[inline]
    pub fn apply(&self, state: usize) -> Option<(usize, f64)> {
        let mut s = state;
        let mut c = 1.0;
        for &(site, f) in self.factors.iter().rev() {
            let (ns, sign) = f.act(site, s)?;
            s = ns;
            c *= sign;
        }
        if let Some(r) = self.grading_prefix {
            c *= grading_sign(r.mask(), s);
        }
        Some((s, c))
    }

    pub fn to_sparse(&self) -> SparseOp {
        let dim = 1usize << self.lattice_size;
        let mut rows = vec![0u32; dim];
        let mut coeffs = vec![0.0; dim];
        for j in 0..dim {
            if let Some((r, c)) = self.apply(j) {
                rows[j] = r as u32;
                coeffs[j] = c;
            }
        }
        SparseOp { rows, coeffs }
    }

    pub fn to_dense(&self) -> CMatrix {
        let dim = 1usize << self.lattice_size;
        let mut m = CMatrix::zeros(dim, dim);
        for j in 0..dim {
            if let Some((r, c)) = self.apply(j) {
                m[(r, j)] = Complex64::new(c, 0.0);
            }
        }
        m
    }

    /// `M† = sign · M'` with `M'` normal ordered.
    pub fn adjoint(&self) -> (f64, Monomial) {
        // Reversing m odd factors costs (-1)^{m(m-1)/2}; even factors commute
        // with everything at other sites.
        let m = self.odd_degree();
        let mut sign = if (m * (m.saturating_sub(1)) / 2) % 2 == 0 { 1.0 } else { -1.0 };
        // v_R is even and diagonal; moving it back to the left past the
        // monomial picks up (-1) once per odd factor inside R.
        if let Some(r) = self.grading_prefix {
            let inside = self.factors.iter().filter(|(s, f)| f.is_odd() && r.contains(*s)).count();
            if inside % 2 == 1 {
                sign = -sign;
            }
        }
        let factors = self.factors.iter().map(|&(s, f)| (s, f.adjoint())).collect();
        (sign, Monomial { lattice_size: self.lattice_size, factors, grading_prefix: self.grading_prefix })
    }

    /// `τ(M† A)` for a dense matrix `A`.
    pub fn overlap(&self, a: &CMatrix) -> Complex64 {
        let dim = 1usize << self.lattice_size;
        let mut acc = ZERO;
        for j in 0..dim {
            if let Some((r, c)) = self.apply(j) {
                acc += a[(r, j)] * c;
            }
        }
        acc / dim as f64
    }

    /// `Tr(D M)`.
    pub fn expectation(&self, density: &CMatrix) -> Complex64 {
        let dim = 1usize << self.lattice_size;
        let mut acc = ZERO;
        for j in 0..dim {
            if let Some((r, c)) = self.apply(j) {
                acc += density[(j, r)] * c;
            }
        }
        acc
    }

    /// `target += coeff · M`.
    pub fn add_scaled_to(&self, target: &mut CMatrix, coeff: Complex64) {
        let dim = 1usize << self.lattice_size;
        for j in 0..dim {
            if let Some((r, c)) = self.apply(j) {
                target[(r, j)] += coeff * c;
            }
        }
    }

    pub fn label(&self) -> String {
        let mut parts: Vec<String> = Vec::new();
        if let Some(r) = self.grading_prefix {
            parts.push(format!("v{}", r));
        }
        for &(s, f) in &self.factors {
            parts.push(match f {
                LocalFactor::Identity => continue,
                LocalFactor::Annihilate => format!("a{s}"),
                LocalFactor::Create => format!("a{s}+"),
                LocalFactor::Parity => format!("p{s}"),
            });
        }
        if parts.is_empty() {
            "1".to_string()
        } else {
            parts.join(" ")
        }
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Monomial({})", self.label())
    }
}

/// Diagonal value of `v_R = ∏_{i∈R}(2n_i − 1)` on basis state `state`.
#[inline]
pub(crate) fn grading_sign(mask: u32, state: usize) -> f64 {
    let zeros = (mask & !(state as u32)).count_ones();
    if zeros % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Column map of an operator with at most one nonzero (real) entry per column.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseOp {
    rows: Vec<u32>,
    coeffs: Vec<f64>,
}

impl SparseOp {
    pub fn identity(dim: usize) -> Self {
        Self { rows: (0..dim as u32).collect(), coeffs: vec![1.0; dim] }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    #[inline]
    pub fn column(&self, j: usize) -> Option<(usize, f64)> {
        let c = self.coeffs[j];
        (c != 0.0).then(|| (self.rows[j] as usize, c))
    }

    /// `self · rhs`.
    pub fn mul(&self, rhs: &SparseOp) -> SparseOp {
        let dim = self.dim();
        let mut rows = vec![0u32; dim];
        let mut coeffs = vec![0.0; dim];
        for j in 0..dim {
            if let Some((mid, c1)) = rhs.column(j) {
                if let Some((r, c2)) = self.column(mid) {
                    rows[j] = r as u32;
                    coeffs[j] = c1 * c2;
                }
            }
        }
        SparseOp { rows, coeffs }
    }

    pub fn scale(&self, s: f64) -> SparseOp {
        SparseOp { rows: self.rows.clone(), coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    pub fn to_dense(&self) -> CMatrix {
        let dim = self.dim();
        let mut m = CMatrix::zeros(dim, dim);
        for j in 0..dim {
            if let Some((r, c)) = self.column(j) {
                m[(r, j)] += Complex64::new(c, 0.0);
            }
        }
        m
    }
}

/// Max-entry residual of `Σ_k c_k · T_k` (each `T_k` sparse).
///
/// Every column of the combination has at most `terms.len()` nonzeros, so
/// the check is `O(terms · 2^L)`.
pub fn combination_residual(terms: &[(f64, &SparseOp)]) -> f64 {
    let dim = terms.first().map_or(0, |(_, t)| t.dim());
    let mut worst = 0.0_f64;
    let mut acc: Vec<(usize, f64)> = Vec::with_capacity(terms.len());
    for j in 0..dim {
        acc.clear();
        for (c, t) in terms {
            if let Some((r, v)) = t.column(j) {
                match acc.iter_mut().find(|(row, _)| *row == r) {
                    Some(slot) => slot.1 += c * v,
                    None => acc.push((r, c * v)),
                }
            }
        }
        for (_, v) in &acc {
            worst = worst.max(v.abs());
        }
    }
    worst
}

/// Ordered, τ-orthogonal basis of a subalgebra made of monomials.
#[derive(Clone, Debug)]
pub struct MonomialBasis {
    pub elements: Vec<Monomial>,
    pub region: Region,
}

impl MonomialBasis {
    /// All `4^|R|` normal-ordered monomials over `R`, in mixed-radix order.
    pub fn new(region: Region) -> Self {
        let l = region.lattice_size();
        let sites = region.sites();
        let count = 1usize << (2 * sites.len());
        let elements = (0..count)
            .map(|code| {
                let factors: Vec<(usize, LocalFactor)> = sites
                    .iter()
                    .enumerate()
                    .map(|(k, &s)| (s, LocalFactor::ALL[(code >> (2 * k)) & 3]))
                    .collect();
                Monomial::new(l, &factors)
            })
            .collect();
        Self { elements, region }
    }

    pub fn even(&self) -> impl Iterator<Item = &Monomial> {
        self.elements.iter().filter(|m| !m.is_odd())
    }

    pub fn odd(&self) -> impl Iterator<Item = &Monomial> {
        self.elements.iter().filter(|m| m.is_odd())
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;

    #[test]
    fn adjoint_matches_dense() {
        let m = Monomial::new(
            4,
            &[(0, LocalFactor::Create), (1, LocalFactor::Annihilate), (3, LocalFactor::Create)],
        );
        let (sign, adj) = m.adjoint();
        let lhs = m.to_dense().adjoint();
        let rhs = adj.to_dense() * Complex64::new(sign, 0.0);
        assert!(max_abs(&(lhs - rhs)) < 1e-15);

        let region = Region::new(&[0, 2], 4).unwrap();
        let p = Monomial::new(4, &[(1, LocalFactor::Annihilate), (3, LocalFactor::Create)])
            .with_grading_prefix(region);
        let (sign, adj) = p.adjoint();
        assert!(max_abs(&(p.to_dense().adjoint() - adj.to_dense() * Complex64::new(sign, 0.0))) < 1e-15);
    }

    #[test]
    fn basis_is_orthogonal_with_expected_norms() {
        let r = Region::new(&[0, 2], 3).unwrap();
        let basis = MonomialBasis::new(r);
        assert_eq!(basis.len(), 16);
        let dense: Vec<CMatrix> = basis.elements.iter().map(|m| m.to_dense()).collect();
        for (i, x) in dense.iter().enumerate() {
            for (j, y) in dense.iter().enumerate() {
                let ip = crate::linalg::trace(&(x.adjoint() * y)) / 8.0;
                let expected = if i == j { basis.elements[i].norm_sq() } else { 0.0 };
                assert!((ip.re - expected).abs() < 1e-15 && ip.im.abs() < 1e-15, "{i} {j}");
            }
        }
    }

    #[test]
    fn sparse_product_matches_dense() {
        let a = Monomial::new(3, &[(1, LocalFactor::Annihilate)]);
        let b = Monomial::new(3, &[(0, LocalFactor::Create), (2, LocalFactor::Parity)]);
        let prod = a.to_sparse().mul(&b.to_sparse());
        assert!(max_abs(&(prod.to_dense() - a.to_dense() * b.to_dense())) < 1e-15);
    }

    #[test]
    fn labels() {
        let m = Monomial::new(3, &[(2, LocalFactor::Parity), (0, LocalFactor::Create)]);
        assert_eq!(m.label(), "a0+ p2");
        assert_eq!(Monomial::identity(2).label(), "1");
    }
}
