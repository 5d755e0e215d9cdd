//! Relative entropy, conditional entropy and conditional free energy.
//!
//! Conventions: natural logarithms, and `S(ω₁, ω₂) = ω₂(log D₂ − log D₁)`
//! (the second argument is the state being compared against the first).

use serde::Serialize;

use crate::car::{Region, Subalgebra};
use crate::error::{Error, Result};
use crate::interaction::{local_hamiltonian, validate_potential, Potential};
use crate::linalg::{CMatrix, HermitianEigen};
use crate::state::DensityState;

/// Eigenvalues below this fraction of the largest one count as kernel.
pub const RANK_CUTOFF: f64 = 1e-12;

/// Weight of the second state on the kernel of the first above which the
/// relative entropy is infinite.
pub const KERNEL_WEIGHT_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EntropyValue {
    /// Nats; `f64::INFINITY` when the kernel condition fails.
    pub value: f64,
    pub kernel_ok: bool,
}

impl EntropyValue {
    pub fn is_finite(&self) -> bool {
        self.kernel_ok
    }

    pub fn infinite() -> Self {
        Self { value: f64::INFINITY, kernel_ok: false }
    }
}

fn xlogx_sum(values: &[f64], cutoff: f64) -> f64 {
    values.iter().filter(|&&x| x > cutoff).map(|&x| x * x.ln()).sum()
}

/// `Tr D₂ (log D₂ − log D₁)`, evaluated on the support of `D₁`.
pub fn relative_entropy_matrices(d1: &CMatrix, d2: &CMatrix) -> Result<EntropyValue> {
    let e1 = HermitianEigen::new(d1)?;
    let e2 = HermitianEigen::new(d2)?;
    let cut1 = RANK_CUTOFF * e1.max().max(f64::MIN_POSITIVE);
    let cut2 = RANK_CUTOFF * e2.max().max(f64::MIN_POSITIVE);
    let weights = e1.diagonal_weights(d2);
    let mut kernel_weight = 0.0;
    let mut cross = 0.0;
    for (lambda, w) in e1.values.iter().zip(&weights) {
        if *lambda > cut1 {
            cross += w.re * lambda.ln();
        } else {
            kernel_weight += w.re;
        }
    }
    if kernel_weight > KERNEL_WEIGHT_TOL {
        return Ok(EntropyValue::infinite());
    }
    let value = xlogx_sum(&e2.values, cut2) - cross;
    debug_assert!(value > -1e-9, "relative entropy {value} significantly negative");
    Ok(EntropyValue { value: value.max(0.0), kernel_ok: true })
}

/// `S(ω₁, ω₂)`.
pub fn relative_entropy(omega1: &DensityState, omega2: &DensityState) -> Result<EntropyValue> {
    check_same_lattice(omega1, omega2)?;
    relative_entropy_matrices(omega1.density(), omega2.density())
}

/// Relative entropy of the restrictions of two states to `A_R`.
pub fn restricted_relative_entropy(
    omega1: &DensityState,
    omega2: &DensityState,
    region: &Region,
) -> Result<EntropyValue> {
    check_same_lattice(omega1, omega2)?;
    // Both restricted densities live in A_R; the τ-product padding adds the
    // same constant to both logarithms and cancels.
    let d1 = crate::car::conditional_expectation_matrix(omega1.density(), region);
    let d2 = crate::car::conditional_expectation_matrix(omega2.density(), region);
    relative_entropy_matrices(&d1, &d2)
}

fn check_same_lattice(a: &DensityState, b: &DensityState) -> Result<()> {
    if a.lattice_size() != b.lattice_size() {
        return Err(Error::LatticeMismatch { expected: a.lattice_size(), found: b.lattice_size() });
    }
    Ok(())
}

/// `−S(ω∘P, ω)` where `P` is the τ-conditional expectation onto `outside`.
pub fn conditional_entropy_in(omega: &DensityState, outside: &Subalgebra) -> Result<f64> {
    let reference = outside.project(omega.density())?;
    let s = relative_entropy_matrices(&reference, omega.density())?;
    if !s.kernel_ok {
        // ω∘P dominates ω, so this cannot happen for a genuine state.
        return Err(Error::InvalidDensity("conditional expectation lost support".into()));
    }
    Ok(-s.value)
}

/// `Sc_I(ω) = −S(ω∘E_{I^c}, ω) ≤ 0`.
pub fn conditional_entropy(omega: &DensityState, region: &Region) -> Result<f64> {
    conditional_entropy_in(omega, &Subalgebra::Local(region.complement()))
}

/// `F(ω) = Sc_I(ω) − β ω(H(I))`.
pub fn conditional_free_energy(omega: &DensityState, potential: &Potential, region: &Region, beta: f64) -> Result<f64> {
    let report = validate_potential(potential);
    if !report.pass() {
        let failed: Vec<&str> = report.conditions.iter().filter(|c| !c.pass).map(|c| c.condition).collect();
        return Err(Error::InvalidPotential(format!("failed conditions: {}", failed.join(", "))));
    }
    let h = local_hamiltonian(potential, region)?;
    Ok(conditional_entropy(omega, region)? - beta * omega.expectation(&h.matrix).re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::car::{self, Region};
    use crate::interaction::models;
    use crate::linalg::{self, random_density};
    use crate::state::{gibbs_state, DensityState};
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn diag_state(values: &[f64]) -> DensityState {
        let d = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            values.len(),
            values.iter().map(|&v| Complex64::new(v, 0.0)),
        ));
        DensityState::new(d, "diag").unwrap()
    }

    #[test]
    fn self_entropy_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let w = DensityState::new(random_density(&mut rng, 8), "w").unwrap();
        assert!(relative_entropy(&w, &w).unwrap().value.abs() < 1e-12);
    }

    #[test]
    fn tracial_versus_vacuum() {
        let tau = diag_state(&[0.5, 0.5]);
        let vac = diag_state(&[1.0, 0.0]);
        let s = relative_entropy(&tau, &vac).unwrap();
        assert!(s.kernel_ok);
        assert!((s.value - std::f64::consts::LN_2).abs() < 1e-14);
        let s = relative_entropy(&vac, &tau).unwrap();
        assert!(!s.kernel_ok && s.value.is_infinite());
    }

    #[test]
    fn two_site_vacuum_conditional_entropy() {
        let vac = diag_state(&[1.0, 0.0, 0.0, 0.0]);
        let i = Region::singleton(0, 2).unwrap();
        let sc = conditional_entropy(&vac, &i).unwrap();
        assert!((sc + std::f64::consts::LN_2).abs() < 1e-14);
    }

    #[test]
    fn conditional_entropy_vanishes_on_tracial_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let l = 3;
        let i = Region::singleton(1, l).unwrap();
        let d = random_density(&mut rng, 8);
        let prod = car::conditional_expectation_matrix(&d, &i.complement());
        let w = DensityState::new(prod, "prod").unwrap();
        assert!(conditional_entropy(&w, &i).unwrap().abs() < 1e-12);
        let w = DensityState::new(d, "generic").unwrap();
        let sc = conditional_entropy(&w, &i).unwrap();
        assert!(sc < 0.0);
        assert!((conditional_entropy(&w.theta(), &i).unwrap() - sc).abs() < 1e-12);
    }

    #[test]
    fn free_energy_examples() {
        let l = 3;
        let phi = models::interacting(l, 1.0, 0.3, 0.5).unwrap();
        let i = Region::singleton(1, l).unwrap();
        let pruned = crate::interaction::prune(&phi, &i);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w = DensityState::new(random_density(&mut rng, 8), "w").unwrap();
        let sc = conditional_entropy(&w, &i).unwrap();
        assert!((conditional_free_energy(&w, &pruned, &i, 1.3).unwrap() - sc).abs() < 1e-14);
        assert!((conditional_free_energy(&w, &phi, &i, 0.0).unwrap() - sc).abs() < 1e-14);
        let raw = models::raw_density(l, 1.0).unwrap();
        assert!(matches!(conditional_free_energy(&w, &raw, &i, 1.0), Err(Error::InvalidPotential(_))));
    }

    #[test]
    fn strict_positivity_and_convexity() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let a = DensityState::new(random_density(&mut rng, 8), "a").unwrap();
            let b = DensityState::new(random_density(&mut rng, 8), "b").unwrap();
            assert!(linalg::max_abs(&(a.density() - b.density())) > 1e-8);
            let s_ab = relative_entropy(&a, &b).unwrap().value;
            assert!(s_ab > 0.0);
            let c = DensityState::new(random_density(&mut rng, 8), "c").unwrap();
            let e = DensityState::new(random_density(&mut rng, 8), "e").unwrap();
            let p: f64 = rng.gen();
            let mix = |x: &DensityState, y: &DensityState| {
                DensityState::new(x.density().scale(p) + y.density().scale(1.0 - p), "mix").unwrap()
            };
            let lhs = relative_entropy(&mix(&a, &c), &mix(&b, &e)).unwrap().value;
            let rhs = p * s_ab + (1.0 - p) * relative_entropy(&c, &e).unwrap().value;
            assert!(lhs <= rhs + 1e-10);
        }
    }

    #[test]
    fn kernel_regularization_limit() {
        // D1 singular, D2 supported inside supp D1.
        let d1 = diag_state(&[0.6, 0.4, 0.0, 0.0]);
        let d2 = diag_state(&[0.3, 0.7, 0.0, 0.0]);
        let exact = relative_entropy(&d1, &d2).unwrap().value;
        let mut prev = f64::INFINITY;
        for eps in [1e-6, 1e-9] {
            let reg = d1.density().scale(1.0 - eps) + linalg::identity(4).scale(eps / 4.0);
            let s = relative_entropy_matrices(&reg, d2.density()).unwrap().value;
            let err = (s - exact).abs();
            assert!(err < 10.0 * eps && err < prev);
            prev = err;
        }
    }

    #[test]
    fn gibbs_monotonicity_under_restriction() {
        let l = 3;
        let phi = models::interacting(l, 1.0, 0.2, 1.0).unwrap();
        let h = phi.total_hamiltonian();
        let a = gibbs_state(&h, 0.7).unwrap();
        let b = gibbs_state(&h, 1.9).unwrap();
        let full = relative_entropy(&a, &b).unwrap().value;
        for r in Region::full(l).subregions() {
            assert!(restricted_relative_entropy(&a, &b, &r).unwrap().value <= full + 1e-10);
        }
    }
}
