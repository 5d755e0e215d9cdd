//! Standard potentials and the local Hamiltonians they generate.

pub mod models;

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::Serialize;

use crate::car::{self, conditional_expectation, AlgebraElement, Region};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;

/// Tolerance for the potential conditions.
pub const CONDITION_TOL: f64 = 1e-12;

/// Region-indexed interaction terms `Φ(I)`.
///
/// Potentials built through [`standardize`] satisfy the standardness
/// conditions; [`Potential::from_terms_unchecked`] keeps raw terms as given
/// so that [`validate_potential`] can report on them.
#[derive(Clone, Debug)]
pub struct Potential {
    lattice_size: usize,
    terms: BTreeMap<Region, AlgebraElement>,
}

impl Potential {
    pub fn zero(lattice_size: usize) -> Self {
        Self { lattice_size, terms: BTreeMap::new() }
    }

    pub fn from_terms_unchecked(lattice_size: usize, terms: BTreeMap<Region, AlgebraElement>) -> Self {
        Self { lattice_size, terms }
    }

    pub fn lattice_size(&self) -> usize {
        self.lattice_size
    }

    pub fn terms(&self) -> &BTreeMap<Region, AlgebraElement> {
        &self.terms
    }

    pub fn term(&self, region: &Region) -> Option<&AlgebraElement> {
        self.terms.get(region)
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// `H(Λ) = Σ_K Φ(K)`.
    pub fn total_hamiltonian(&self) -> AlgebraElement {
        sum_terms(self.lattice_size, self.terms.values(), Region::full(self.lattice_size))
    }
}

fn sum_terms<'a>(
    lattice_size: usize,
    terms: impl Iterator<Item = &'a AlgebraElement>,
    support: Region,
) -> AlgebraElement {
    let d = car::dim(lattice_size);
    let mut m = CMatrix::zeros(d, d);
    for t in terms {
        m += t.matrix();
    }
    AlgebraElement::trusted(m, support)
}

/// Local Hamiltonian `H(I) = Σ{Φ(K) : K ∩ I ≠ ∅}`.
#[derive(Clone, Debug)]
pub struct LocalHamiltonian {
    pub region: Region,
    pub matrix: AlgebraElement,
}

fn check_raw_term(region: &Region, h: &AlgebraElement) -> Result<()> {
    let herm = h.hermiticity_residual();
    if herm > CONDITION_TOL * h.max_abs().max(1.0) {
        return Err(Error::NotSelfAdjoint(herm));
    }
    let odd = car::oddness_residual(h.matrix());
    if odd > CONDITION_TOL * h.max_abs().max(1.0) {
        return Err(Error::NotEven(odd));
    }
    let supp = car::support_residual(h.matrix(), region);
    if supp > CONDITION_TOL * h.max_abs().max(1.0) {
        return Err(Error::SupportMismatch { residual: supp });
    }
    Ok(())
}

/// Turns raw self-adjoint even terms into a standard potential by
/// inclusion–exclusion over subregions:
/// `Φ(K) += Σ_{J⊆K} (−1)^{|K∖J|} E_J(h_I)` for every `K ⊆ I`.
///
/// The scalar (`K = ∅`) parts are dropped, so the total Hamiltonian is
/// reproduced up to an additive constant.
pub fn standardize(lattice_size: usize, raw: &BTreeMap<Region, AlgebraElement>) -> Result<Potential> {
    car::check_lattice(lattice_size)?;
    let d = car::dim(lattice_size);
    let mut acc: BTreeMap<Region, CMatrix> = BTreeMap::new();
    for (region, h) in raw {
        if region.lattice_size() != lattice_size || h.lattice_size() != lattice_size {
            return Err(Error::LatticeMismatch { expected: lattice_size, found: h.lattice_size() });
        }
        check_raw_term(region, h).map_err(|e| Error::InvalidPotential(format!("term on {region}: {e}")))?;
        let expectations: BTreeMap<Region, CMatrix> = region
            .subregions()
            .map(|j| (j, car::conditional_expectation_matrix(h.matrix(), &j)))
            .collect();
        for k in region.subregions().filter(|k| !k.is_empty()) {
            let mut phi = CMatrix::zeros(d, d);
            for j in k.subregions() {
                let sign = if (k.len() - j.len()) % 2 == 0 { 1.0 } else { -1.0 };
                phi += expectations[&j].scale(sign);
            }
            *acc.entry(k).or_insert_with(|| CMatrix::zeros(d, d)) += phi;
        }
    }
    let terms = acc
        .into_iter()
        .filter(|(_, m)| crate::linalg::max_abs(m) > 0.0)
        .map(|(k, m)| {
            // Exact hermitization; the projections preserve it up to round-off.
            let m = (&m + m.adjoint()).scale(0.5);
            (k, AlgebraElement::trusted(m, k))
        })
        .collect();
    Ok(Potential { lattice_size, terms })
}

pub fn local_hamiltonian(potential: &Potential, region: &Region) -> Result<LocalHamiltonian> {
    if region.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let touching = potential.terms.iter().filter(|(k, _)| k.intersects(region)).map(|(_, t)| t);
    let support = potential
        .terms
        .keys()
        .filter(|k| k.intersects(region))
        .fold(*region, |acc, k| acc.union(k));
    let matrix = sum_terms(potential.lattice_size, touching, support);
    Ok(LocalHamiltonian { region: *region, matrix })
}

/// Removes every term touching `region`.
pub fn prune(potential: &Potential, region: &Region) -> Potential {
    let terms = potential
        .terms
        .iter()
        .filter(|(k, _)| !k.intersects(region))
        .map(|(k, t)| (*k, t.clone()))
        .collect();
    Potential { lattice_size: potential.lattice_size, terms }
}

/// `δ(A) = i[H(I), A]` for `A ∈ A_I`.
pub fn derivation_apply(potential: &Potential, a: &AlgebraElement, region: &Region) -> Result<AlgebraElement> {
    if !region.is_full() {
        let residual = car::support_residual(a.matrix(), region);
        if residual > car::SUPPORT_TOL * a.max_abs().max(f64::MIN_POSITIVE) {
            return Err(Error::SupportMismatch { residual });
        }
    }
    if region.is_empty() {
        return Ok(AlgebraElement::zero(potential.lattice_size));
    }
    let h = local_hamiltonian(potential, region)?;
    Ok(h.matrix.commutator(a).scale_complex(Complex64::new(0.0, 1.0)))
}

#[derive(Clone, Debug, Serialize)]
pub struct ConditionResidual {
    pub condition: &'static str,
    pub residual: f64,
    pub pass: bool,
}

/// Per-condition residuals of the potential conditions.
#[derive(Clone, Debug, Serialize)]
pub struct PotentialReport {
    pub conditions: Vec<ConditionResidual>,
}

impl PotentialReport {
    pub fn pass(&self) -> bool {
        self.conditions.iter().all(|c| c.pass)
    }

    pub fn residual(&self, condition: &str) -> Option<f64> {
        self.conditions.iter().find(|c| c.condition == condition).map(|c| c.residual)
    }
}

/// Checks support (π-a), self-adjointness (π-b), evenness (π-c),
/// standardness (π-d) and the local-Hamiltonian net (π-e).
pub fn validate_potential(potential: &Potential) -> PotentialReport {
    let mut support = 0.0_f64;
    let mut adjoint = 0.0_f64;
    let mut even = 0.0_f64;
    let mut standard = 0.0_f64;
    for (region, t) in &potential.terms {
        if region.is_empty() {
            support = support.max(t.max_abs());
            continue;
        }
        support = support.max(car::support_residual(t.matrix(), region));
        adjoint = adjoint.max(t.hermiticity_residual());
        even = even.max(car::oddness_residual(t.matrix()));
        for j in region.proper_subregions() {
            standard = standard.max(conditional_expectation(t, &j).max_abs());
        }
    }
    let mut net = 0.0_f64;
    let l = potential.lattice_size;
    for site in 0..l {
        let r = Region::from_mask(1 << site, l);
        if let Ok(h) = local_hamiltonian(potential, &r) {
            net = net.max(h.matrix.hermiticity_residual()).max(car::oddness_residual(h.matrix.matrix()));
        }
    }
    let total = potential.total_hamiltonian();
    if let Ok(h) = local_hamiltonian(potential, &Region::full(l)) {
        net = net.max(h.matrix.distance(&total));
    }
    let mk = |condition, residual: f64| ConditionResidual { condition, residual, pass: residual <= CONDITION_TOL };
    PotentialReport {
        conditions: vec![
            mk("pi-a", support),
            mk("pi-b", adjoint),
            mk("pi-c", even),
            mk("pi-d", standard),
            mk("pi-e", net),
        ],
    }
}
