//! Model presets and the structured-text potential format.
//!
//! A potential file is a JSON list of `{sites, coefficient, term}` records:
//!
//! ```json
//! [{"sites": [0, 1], "coefficient": -1.0, "term": "hopping"},
//!  {"sites": [0], "coefficient": -0.5, "term": "density"}]
//! ```

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::car::{self, AlgebraElement, MonomialBasis, Region};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;

use super::{standardize, Potential};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TermKind {
    /// `n_i − ½` on `{i}`
    Density,
    /// `a_i†a_j + a_j†a_i` on `{i, j}`
    Hopping,
    /// `(n_i − ½)(n_j − ½)` on `{i, j}`
    DensityDensity,
    /// `a_i a_j + a_j†a_i†` on `{i, j}`
    Pairing,
    /// bare `n_i`; not standard, kept for validation demos
    RawDensity,
}

impl TermKind {
    fn arity(self) -> usize {
        match self {
            TermKind::Density | TermKind::RawDensity => 1,
            _ => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermRecord {
    pub sites: Vec<usize>,
    pub coefficient: f64,
    pub term: TermKind,
}

fn half(l: usize) -> AlgebraElement {
    AlgebraElement::scalar(Complex64::new(0.5, 0.0), l)
}

fn build_term(l: usize, rec: &TermRecord) -> Result<(Region, AlgebraElement)> {
    if rec.sites.len() != rec.term.arity() {
        return Err(Error::InvalidPotential(format!(
            "term {:?} needs {} sites, got {:?}",
            rec.term,
            rec.term.arity(),
            rec.sites
        )));
    }
    if rec.sites.len() == 2 && rec.sites[0] == rec.sites[1] {
        return Err(Error::InvalidPotential(format!("repeated site in {:?}", rec.sites)));
    }
    let region = Region::new(&rec.sites, l)?;
    let op = match rec.term {
        TermKind::Density => &car::number(rec.sites[0], l)? - &half(l),
        TermKind::RawDensity => car::number(rec.sites[0], l)?,
        TermKind::Hopping => {
            let h = &car::creator(rec.sites[0], l)? * &car::annihilator(rec.sites[1], l)?;
            &h + &h.adjoint()
        }
        TermKind::DensityDensity => {
            &(&car::number(rec.sites[0], l)? - &half(l)) * &(&car::number(rec.sites[1], l)? - &half(l))
        }
        TermKind::Pairing => {
            let p = &car::annihilator(rec.sites[0], l)? * &car::annihilator(rec.sites[1], l)?;
            &p + &p.adjoint()
        }
    };
    Ok((region, op.scale(rec.coefficient).with_support(region)?))
}

/// Builds a potential from records. Standard kinds go through
/// [`standardize`]; any `raw_density` record keeps the whole potential raw.
pub fn from_records(lattice_size: usize, records: &[TermRecord]) -> Result<Potential> {
    car::check_lattice(lattice_size)?;
    let mut raw: BTreeMap<Region, AlgebraElement> = BTreeMap::new();
    for rec in records {
        let (region, op) = build_term(lattice_size, rec)?;
        match raw.get_mut(&region) {
            Some(existing) => *existing = &*existing + &op,
            None => {
                raw.insert(region, op);
            }
        }
    }
    if records.iter().any(|r| r.term == TermKind::RawDensity) {
        Ok(Potential::from_terms_unchecked(lattice_size, raw))
    } else {
        standardize(lattice_size, &raw)
    }
}

pub fn parse_records(text: &str) -> Result<Vec<TermRecord>> {
    Ok(serde_json::from_str(text)?)
}

pub fn records_to_string(records: &[TermRecord]) -> Result<String> {
    Ok(serde_json::to_string_pretty(records)?)
}

/// `−t Σ (a_i†a_{i+1} + h.c.) − μ Σ (n_i − ½)`, open chain.
pub fn hopping_records(l: usize, t: f64, mu: f64) -> Vec<TermRecord> {
    let mut recs = Vec::new();
    for i in 0..l {
        if mu != 0.0 {
            recs.push(TermRecord { sites: vec![i], coefficient: -mu, term: TermKind::Density });
        }
        if i + 1 < l && t != 0.0 {
            recs.push(TermRecord { sites: vec![i, i + 1], coefficient: -t, term: TermKind::Hopping });
        }
    }
    recs
}

/// Hopping model plus `U Σ (n_i − ½)(n_{i+1} − ½)`.
pub fn interacting_records(l: usize, t: f64, mu: f64, u: f64) -> Vec<TermRecord> {
    let mut recs = hopping_records(l, t, mu);
    if u != 0.0 {
        for i in 0..l.saturating_sub(1) {
            recs.push(TermRecord { sites: vec![i, i + 1], coefficient: u, term: TermKind::DensityDensity });
        }
    }
    recs
}

pub fn free_hopping(l: usize, t: f64, mu: f64) -> Result<Potential> {
    from_records(l, &hopping_records(l, t, mu))
}

pub fn interacting(l: usize, t: f64, mu: f64, u: f64) -> Result<Potential> {
    from_records(l, &interacting_records(l, t, mu, u))
}

/// Non-standard potential `Σ μ n_i`.
pub fn raw_density(l: usize, mu: f64) -> Result<Potential> {
    let recs: Vec<TermRecord> =
        (0..l).map(|i| TermRecord { sites: vec![i], coefficient: mu, term: TermKind::RawDensity }).collect();
    from_records(l, &recs)
}

/// Random even self-adjoint element of `A_R` with Gaussian coefficients on
/// the even monomials.
pub fn random_even_hermitian<R: Rng + ?Sized>(rng: &mut R, region: &Region) -> AlgebraElement {
    let l = region.lattice_size();
    let d = car::dim(l);
    let mut m = CMatrix::zeros(d, d);
    for mono in MonomialBasis::new(*region).even() {
        let c = Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
        mono.add_scaled_to(&mut m, c);
    }
    let m = (&m + m.adjoint()).scale(0.5);
    AlgebraElement::new(m, *region).expect("monomials of A_R stay in A_R")
}

/// Random standard even potential with terms on every site and on every
/// block of up to `range` consecutive sites.
pub fn random_standard<R: Rng + ?Sized>(rng: &mut R, l: usize, range: usize) -> Result<Potential> {
    let mut raw = BTreeMap::new();
    for start in 0..l {
        for len in 1..=range.max(1) {
            if start + len > l {
                break;
            }
            let region = Region::interval(start, start + len, l)?;
            raw.insert(region, random_even_hermitian(rng, &region).scale(0.5));
        }
    }
    standardize(l, &raw)
}
