//! Density-matrix states of the full chain algebra: Gibbs and perturbed
//! states, restrictions to local subalgebras, product checks, noneven
//! perturbations and the odd-unitary vector-state construction.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::car::{self, AlgebraElement, Monomial, MonomialBasis, Region, SparseOp};
use crate::entropy::{self, EntropyValue};
use crate::error::{Error, Result};
use crate::interaction::{local_hamiltonian, validate_potential, Potential};
use crate::linalg::{self, CMatrix, HermitianEigen, ZERO};

/// Tolerance on hermiticity, negativity and trace of a density matrix.
pub const DENSITY_TOL: f64 = 1e-12;

/// Eigenvalues below `FULL_RANK_FLOOR · λ_max` make a state singular.
pub const FULL_RANK_FLOOR: f64 = 1e-12;

/// Positive unit-trace matrix on `C^{2^L}` with a provenance label.
#[derive(Clone, Debug)]
pub struct DensityState {
    density: CMatrix,
    label: String,
    lattice_size: usize,
}

impl DensityState {
    pub fn new(density: CMatrix, label: impl Into<String>) -> Result<Self> {
        let n = density.nrows();
        if n != density.ncols() || !n.is_power_of_two() || n < 2 {
            return Err(Error::InvalidDensity(format!("{}x{} is not 2^L square", n, density.ncols())));
        }
        let lattice_size = n.trailing_zeros() as usize;
        car::check_lattice(lattice_size)?;
        let herm = linalg::hermiticity_residual(&density);
        if herm > DENSITY_TOL {
            return Err(Error::InvalidDensity(format!("hermiticity residual {herm:e}")));
        }
        let tr = linalg::trace(&density);
        if (tr.re - 1.0).abs() > DENSITY_TOL || tr.im.abs() > DENSITY_TOL {
            return Err(Error::InvalidDensity(format!("trace {tr}")));
        }
        let min = HermitianEigen::new(&density)?.min();
        if min < -DENSITY_TOL {
            return Err(Error::InvalidDensity(format!("negative eigenvalue {min:e}")));
        }
        let density = (&density + density.adjoint()).scale(0.5);
        Ok(Self { density, label: label.into(), lattice_size })
    }

    /// Tracial state `τ = 1/2^L`.
    pub fn tracial(lattice_size: usize) -> Result<Self> {
        car::check_lattice(lattice_size)?;
        let d = car::dim(lattice_size);
        Ok(Self { density: linalg::identity(d).unscale(d as f64), label: "tracial".into(), lattice_size })
    }

    pub fn density(&self) -> &CMatrix {
        &self.density
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn relabel(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn lattice_size(&self) -> usize {
        self.lattice_size
    }

    /// `ω(A) = Tr(D A)`.
    pub fn expectation(&self, a: &AlgebraElement) -> Complex64 {
        linalg::trace_product(&self.density, a.matrix())
    }

    pub fn expectation_matrix(&self, a: &CMatrix) -> Complex64 {
        linalg::trace_product(&self.density, a)
    }

    pub fn monomial_expectation(&self, m: &Monomial) -> Complex64 {
        m.expectation(&self.density)
    }

    pub fn eigen(&self) -> Result<HermitianEigen> {
        HermitianEigen::new(&self.density)
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(self.eigen()?.values)
    }

    /// Errors with [`Error::SingularState`] unless all eigenvalues exceed
    /// `FULL_RANK_FLOOR · λ_max`; returns the smallest eigenvalue.
    pub fn require_full_rank(&self) -> Result<f64> {
        let eig = self.eigen()?;
        let (min, max) = (eig.min(), eig.max());
        if min <= FULL_RANK_FLOOR * max {
            return Err(Error::SingularState { min, max });
        }
        Ok(min)
    }

    /// `ω∘Θ`.
    pub fn theta(&self) -> Self {
        Self {
            density: car::theta_dense(&self.density),
            label: format!("{}∘Θ", self.label),
            lattice_size: self.lattice_size,
        }
    }

    /// `max |ω(A)|` over odd monomials.
    pub fn odd_part(&self) -> f64 {
        MonomialBasis::new(Region::full(self.lattice_size))
            .odd()
            .map(|m| self.monomial_expectation(m).norm())
            .fold(0.0, f64::max)
    }

    pub fn distance(&self, other: &DensityState) -> f64 {
        linalg::max_abs(&(&self.density - &other.density))
    }

    pub fn snapshot(&self, regions: &[Region]) -> Result<StateSnapshot> {
        Ok(StateSnapshot {
            label: self.label.clone(),
            eigenvalues: self.eigenvalues()?,
            restrictions: regions.iter().map(|r| restrict(self, r).table()).collect(),
        })
    }
}

/// `e^{−βH}/Tr e^{−βH}` by eigendecomposition.
pub fn gibbs_state(h: &AlgebraElement, beta: f64) -> Result<DensityState> {
    let herm = h.hermiticity_residual();
    if herm > DENSITY_TOL * h.max_abs().max(1.0) {
        return Err(Error::NotSelfAdjoint(herm));
    }
    if !beta.is_finite() {
        return Err(Error::InvalidArgument(format!("beta must be finite, got {beta}")));
    }
    let eig = HermitianEigen::new(h.matrix())?;
    // Shift by the ground (or top) energy so the exponent stays ≤ 0.
    let shift = if beta >= 0.0 { eig.min() } else { eig.max() };
    let unnormalized = eig.apply(|e| (-beta * (e - shift)).exp());
    let z = linalg::trace(&unnormalized).re;
    DensityState::new(unnormalized.unscale(z), format!("gibbs(beta={beta})"))
}

/// `|ω(A e^{−βH} B e^{βH}) − ω(BA)|`.
pub fn kms_residual(
    omega: &DensityState,
    h: &AlgebraElement,
    beta: f64,
    a: &AlgebraElement,
    b: &AlgebraElement,
) -> Result<f64> {
    omega.require_full_rank()?;
    let eig = HermitianEigen::new(h.matrix())?;
    // The conjugation is invariant under constant shifts of H.
    let mid = 0.5 * (eig.min() + eig.max());
    let forward = eig.apply(|e| (-beta * (e - mid)).exp());
    let backward = eig.apply(|e| (beta * (e - mid)).exp());
    let evolved = &forward * b.matrix() * &backward;
    let lhs = omega.expectation_matrix(&(a.matrix() * evolved));
    let rhs = omega.expectation_matrix(&(b.matrix() * a.matrix()));
    Ok((lhs - rhs).norm())
}

fn require_valid_potential(potential: &Potential) -> Result<()> {
    let report = validate_potential(potential);
    if report.pass() {
        Ok(())
    } else {
        let failed: Vec<String> = report
            .conditions
            .iter()
            .filter(|c| !c.pass)
            .map(|c| format!("{} ({:e})", c.condition, c.residual))
            .collect();
        Err(Error::InvalidPotential(failed.join(", ")))
    }
}

/// `H(Λ) − H(I)`: every term not touching `I`.
pub fn perturbed_hamiltonian(potential: &Potential, region: &Region) -> Result<AlgebraElement> {
    let h_total = potential.total_hamiltonian();
    let h_local = local_hamiltonian(potential, region)?;
    Ok(AlgebraElement::trusted(h_total.matrix() - h_local.matrix.matrix(), region.complement()))
}

/// Gibbs state of `H(Λ) − H(I)`, the state perturbed by removing all
/// interactions touching `I`.
pub fn perturbed_state(potential: &Potential, beta: f64, region: &Region) -> Result<DensityState> {
    if region.is_empty() {
        return Err(Error::EmptyRegion);
    }
    require_valid_potential(potential)?;
    let h = perturbed_hamiltonian(potential, region)?;
    Ok(gibbs_state(&h, beta)?.relabel(format!("perturbed(beta={beta}, I={region})")))
}

/// `max_A ‖[H(Λ) − H(I), A]‖` over the monomial basis of `A_I`: the
/// perturbed dynamics leaves `A_I` pointwise fixed.
pub fn gibbs2_residual(potential: &Potential, region: &Region) -> Result<f64> {
    let h = perturbed_hamiltonian(potential, region)?;
    let mut worst = 0.0_f64;
    for m in MonomialBasis::new(*region).elements {
        let a = m.to_dense();
        worst = worst.max(linalg::operator_norm(&linalg::commutator(h.matrix(), &a)));
    }
    Ok(worst)
}

/// Largest [`kms_residual`] over `pairs` random operator pairs with unit
/// operator norm, pair `k` drawn from its own ChaCha stream.
pub fn kms_panel(omega: &DensityState, h: &AlgebraElement, beta: f64, pairs: usize, seed: u64) -> Result<f64> {
    let l = omega.lattice_size();
    let d = car::dim(l);
    let mut worst = 0.0_f64;
    for k in 0..pairs {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k as u64);
        let mut draw = || {
            let m = linalg::random_matrix(&mut rng, d);
            let n = linalg::operator_norm(&m);
            AlgebraElement::global(m.unscale(n), l)
        };
        let (a, b) = (draw()?, draw()?);
        worst = worst.max(kms_residual(omega, h, beta, &a, &b)?);
    }
    Ok(worst)
}

/// Relative entropies between a Gibbs state and its perturbation, globally
/// and on `A_{I^c}`, together with the bound `2‖βH(I)‖`.
#[derive(Clone, Debug, Serialize)]
pub struct PerturbationEntropy {
    pub forward: f64,
    pub backward: f64,
    pub forward_outside: f64,
    pub backward_outside: f64,
    pub bound: f64,
}

impl PerturbationEntropy {
    /// Smallest gap to the bound; nonnegative when all four hold.
    pub fn slack(&self) -> f64 {
        [self.forward, self.backward, self.forward_outside, self.backward_outside]
            .iter()
            .map(|s| self.bound - s)
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn perturbation_entropy(potential: &Potential, beta: f64, region: &Region) -> Result<PerturbationEntropy> {
    let phi = gibbs_state(&potential.total_hamiltonian(), beta)?;
    let pert = perturbed_state(potential, beta, region)?;
    let h_i = local_hamiltonian(potential, region)?;
    let outside = region.complement();
    let finite = |s: EntropyValue| if s.kernel_ok { s.value } else { f64::INFINITY };
    Ok(PerturbationEntropy {
        forward: finite(entropy::relative_entropy(&phi, &pert)?),
        backward: finite(entropy::relative_entropy(&pert, &phi)?),
        forward_outside: finite(entropy::restricted_relative_entropy(&phi, &pert, &outside)?),
        backward_outside: finite(entropy::restricted_relative_entropy(&pert, &phi, &outside)?),
        bound: 2.0 * beta.abs() * h_i.matrix.operator_norm(),
    })
}

/// A state's values on the monomial basis of `A_R`.
#[derive(Clone, Debug)]
pub struct RestrictedState {
    pub region: Region,
    pub values: Vec<(Monomial, Complex64)>,
}

pub fn restrict(omega: &DensityState, region: &Region) -> RestrictedState {
    let values = MonomialBasis::new(*region)
        .elements
        .into_iter()
        .map(|m| {
            let v = omega.monomial_expectation(&m);
            (m, v)
        })
        .collect();
    RestrictedState { region: *region, values }
}

impl RestrictedState {
    pub fn lattice_size(&self) -> usize {
        self.region.lattice_size()
    }

    /// The unique density in `A_R` reproducing the recorded values, i.e.
    /// the density of the τ-product extension `τ_{R^c} ⊗ ω|_R`.
    pub fn reconstruct(&self) -> CMatrix {
        let d = car::dim(self.lattice_size());
        let mut out = CMatrix::zeros(d, d);
        for (m, v) in &self.values {
            if *v == ZERO {
                continue;
            }
            // Tr(M'† M) = 2^L τ(M†M) δ, so D = Σ ω(M) M† / (2^L τ(M†M)).
            let (sign, adj) = m.adjoint();
            adj.add_scaled_to(&mut out, v * (sign / (d as f64 * m.norm_sq())));
        }
        out
    }

    pub fn reconstructed_state(&self) -> Result<DensityState> {
        DensityState::new(self.reconstruct(), format!("product-extension(R={})", self.region))
    }

    /// Smallest eigenvalue of the reconstruction (≥ −1e−10 for genuine states).
    pub fn positivity_margin(&self) -> Result<f64> {
        Ok(HermitianEigen::new(&self.reconstruct())?.min())
    }

    /// `ω(B)` for `B ∈ A_R`, through the reconstruction.
    pub fn evaluate(&self, b: &AlgebraElement) -> Complex64 {
        linalg::trace_product(&self.reconstruct(), b.matrix())
    }

    pub fn is_even(&self, tol: f64) -> bool {
        self.values.iter().filter(|(m, _)| m.is_odd()).all(|(_, v)| v.norm() <= tol)
    }

    /// Max difference from another restriction over the same region.
    pub fn distance(&self, other: &RestrictedState) -> f64 {
        self.values.iter().zip(&other.values).map(|((_, a), (_, b))| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn table(&self) -> RestrictionTable {
        RestrictionTable {
            sites: self.region.sites(),
            entries: self
                .values
                .iter()
                .map(|(m, v)| RestrictionEntry { monomial: m.label(), re: v.re, im: v.im })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RestrictionEntry {
    pub monomial: String,
    pub re: f64,
    pub im: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RestrictionTable {
    pub sites: Vec<usize>,
    pub entries: Vec<RestrictionEntry>,
}

/// Serializable summary of a state.
#[derive(Clone, Debug, Serialize)]
pub struct StateSnapshot {
    pub label: String,
    pub eigenvalues: Vec<f64>,
    pub restrictions: Vec<RestrictionTable>,
}

/// `max |ω(AB) − τ(A)ω(B)|` over monomials `A ∈ A_I`, `B ∈ A_{I^c}`.
pub fn product_check(omega: &DensityState, region: &Region) -> f64 {
    let inside: Vec<(Complex64, SparseOp)> = MonomialBasis::new(*region)
        .elements
        .iter()
        .map(|m| {
            let tau = if m.is_identity() { Complex64::new(1.0, 0.0) } else { ZERO };
            (tau, m.to_sparse())
        })
        .collect();
    let outside: Vec<(Complex64, SparseOp)> = MonomialBasis::new(region.complement())
        .elements
        .iter()
        .map(|m| (omega.monomial_expectation(m), m.to_sparse()))
        .collect();
    let d = omega.density();
    let mut worst = 0.0_f64;
    for (tau_a, a) in &inside {
        for (omega_b, b) in &outside {
            let ab = a.mul(b);
            let mut val = ZERO;
            for j in 0..ab.dim() {
                if let Some((r, c)) = ab.column(j) {
                    val += d[(j, r)] * c;
                }
            }
            worst = worst.max((val - tau_a * omega_b).norm());
        }
    }
    worst
}

/// Default odd perturbation `a_{i0} + a_{i0}†` for the least `i0 ∈ I`.
pub fn default_odd_perturbation(region: &Region) -> Result<AlgebraElement> {
    let i0 = *region.sites().first().ok_or(Error::EmptyRegion)?;
    car::majorana(i0, region.lattice_size())
}

/// `½ λ_min(D) / ‖X‖`, the largest admissible perturbation scale.
pub fn noneven_scale_bound(base: &DensityState, x: &AlgebraElement) -> Result<f64> {
    let min = base.require_full_rank()?;
    Ok(0.5 * min / x.operator_norm())
}

/// Noneven state with density `D + λX`.
///
/// `X` is odd, self-adjoint and τ-orthogonal to `A_{I^c}`, so the result
/// agrees with the base state on `A_{I^c}` and averages back to it under
/// the grading.
pub fn noneven_perturbation(
    base: &DensityState,
    region: &Region,
    x: Option<&AlgebraElement>,
    lambda: Option<f64>,
) -> Result<DensityState> {
    let default;
    let x = match x {
        Some(x) => x,
        None => {
            default = default_odd_perturbation(region)?;
            &default
        }
    };
    let scale = x.max_abs().max(1.0);
    let even_part = car::oddness_residual(x.matrix());
    let odd_check = car::evenness_residual(x.matrix());
    if odd_check > DENSITY_TOL * scale || even_part == 0.0 {
        return Err(Error::NotOdd(odd_check));
    }
    let herm = x.hermiticity_residual();
    if herm > DENSITY_TOL * scale {
        return Err(Error::NotSelfAdjoint(herm));
    }
    let leak = linalg::max_abs(&car::conditional_expectation_matrix(x.matrix(), &region.complement()));
    if leak > DENSITY_TOL * scale {
        return Err(Error::NotOrthogonal(leak));
    }
    let bound = noneven_scale_bound(base, x)?;
    let lambda = lambda.unwrap_or(bound);
    if !(lambda > 0.0) || lambda > bound * (1.0 + 1e-12) {
        return Err(Error::ScaleTooLarge { lambda, bound });
    }
    let density = base.density() + x.matrix().scale(lambda);
    DensityState::new(density, format!("noneven({}, lambda={lambda:e})", base.label()))
}

/// Outcome of the odd-unitary vector-state construction.
#[derive(Clone, Debug)]
pub struct VectorStateConstruction {
    /// τ on site 0 times the outer state.
    pub product_state: DensityState,
    /// Square-root purification `Ω ↔ √D̃` in the `H ⊗ H ≅ matrices` picture.
    pub purification: CMatrix,
    /// `ξ = (Ω + uΩ)/‖Ω + uΩ‖`.
    pub xi: CMatrix,
    pub vector_state: DensityState,
    /// `max_B |φ_ξ(B) − ½(ψ + ψΘ)(B)|` over monomials of `A_{0^c}`.
    pub restriction_residual: f64,
    pub u_expectation: Complex64,
}

/// Builds the vector state `φ_ξ` from a (noneven) state on `A_{0^c}` and an
/// odd self-adjoint unitary `u ∈ A_{0}` (default `a_0 + a_0†`).
pub fn remark2_construct(outer: &DensityState, u: Option<&AlgebraElement>) -> Result<VectorStateConstruction> {
    let l = outer.lattice_size();
    if l < 2 {
        return Err(Error::InvalidArgument("need at least two sites".into()));
    }
    let site0 = Region::singleton(0, l)?;
    let default;
    let u = match u {
        Some(u) => u,
        None => {
            default = car::majorana(0, l)?;
            &default
        }
    };
    let supp = car::support_residual(u.matrix(), &site0);
    if supp > car::SUPPORT_TOL {
        return Err(Error::SupportMismatch { residual: supp });
    }
    let odd = car::evenness_residual(u.matrix());
    if odd > DENSITY_TOL {
        return Err(Error::NotOdd(odd));
    }
    let herm = u.hermiticity_residual();
    if herm > DENSITY_TOL {
        return Err(Error::NotSelfAdjoint(herm));
    }
    let unitarity = linalg::max_abs(&(u.matrix() * u.matrix().adjoint() - linalg::identity(car::dim(l))));
    if unitarity > DENSITY_TOL {
        return Err(Error::NotUnitary(unitarity));
    }

    let outside = site0.complement();
    let tilde = car::conditional_expectation_matrix(outer.density(), &outside);
    let product_state = DensityState::new(tilde, format!("tau_0 x {}", outer.label()))?;
    let omega = product_state.eigen()?.apply(|x| x.max(0.0).sqrt());
    let raw_xi = &omega + u.matrix() * &omega;
    let norm = raw_xi.norm();
    let xi = raw_xi.unscale(norm);
    let vector_state = DensityState::new(&xi * xi.adjoint(), "vector-state(xi)")?;

    let averaged = (outer.density() + car::theta_dense(outer.density())).scale(0.5);
    let restriction_residual = MonomialBasis::new(outside)
        .elements
        .iter()
        .map(|m| (m.expectation(vector_state.density()) - m.expectation(&averaged)).norm())
        .fold(0.0, f64::max);
    let u_expectation = vector_state.expectation(u);
    Ok(VectorStateConstruction { product_state, purification: omega, xi, vector_state, restriction_residual, u_expectation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interaction::models;
    use crate::linalg::{random_density, random_hermitian};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn beta_zero_is_tracial() {
        let phi = models::interacting(3, 1.0, 0.4, 0.9).unwrap();
        let g = gibbs_state(&phi.total_hamiltonian(), 0.0).unwrap();
        assert!(g.distance(&DensityState::tracial(3).unwrap()) < 1e-15);
    }

    #[test]
    fn single_site_occupation() {
        let (beta, mu) = (1.7, 0.8);
        let phi = models::free_hopping(1, 0.0, mu).unwrap();
        let g = gibbs_state(&phi.total_hamiltonian(), beta).unwrap();
        let n = car::number(0, 1).unwrap();
        let expected = 1.0 / (1.0 + (-beta * mu).exp());
        assert!((g.expectation(&n).re - expected).abs() < 1e-14);
    }

    #[test]
    fn even_hamiltonian_gives_even_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let phi = models::random_standard(&mut rng, 4, 2).unwrap();
        let g = gibbs_state(&phi.total_hamiltonian(), 1.1).unwrap();
        assert!(g.odd_part() <= 1e-12);
    }

    #[test]
    fn gibbs_rejects_non_hermitian() {
        let a = car::annihilator(0, 2).unwrap();
        assert!(matches!(gibbs_state(&a, 1.0), Err(Error::NotSelfAdjoint(_))));
    }

    #[test]
    fn kms_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let l = 3;
        let h = AlgebraElement::global(random_hermitian(&mut rng, 8), l).unwrap();
        let beta = 0.8;
        let g = gibbs_state(&h, beta).unwrap();
        let a = AlgebraElement::global(linalg::random_matrix(&mut rng, 8), l).unwrap();
        let b = AlgebraElement::global(linalg::random_matrix(&mut rng, 8), l).unwrap();
        assert!(kms_residual(&g, &h, beta, &a, &b).unwrap() <= 1e-10);
        let tau = DensityState::tracial(l).unwrap();
        assert!(kms_residual(&tau, &h, beta, &a, &b).unwrap() > 1e-3);
        let one = AlgebraElement::identity(l);
        let w = DensityState::new(random_density(&mut rng, 8), "w").unwrap();
        // B = 1 is trivial for any state; A = 1 needs a time-invariant state.
        assert!(kms_residual(&w, &h, beta, &a, &one).unwrap() < 1e-12);
        assert!(kms_residual(&tau, &h, beta, &one, &b).unwrap() < 1e-12);
        assert!(kms_residual(&w, &h, beta, &one, &b).unwrap() > 1e-6);
        assert!(kms_panel(&g, &h, beta, 25, 3).unwrap() <= 1e-10);
        assert!(kms_panel(&w, &h, beta, 25, 3).unwrap() > 1e-6);
        let pure = DensityState::new(linalg::projector(&linalg::random_unit_vector(&mut rng, 8)), "p").unwrap();
        assert!(matches!(kms_residual(&pure, &h, beta, &a, &b), Err(Error::SingularState { .. })));
    }

    #[test]
    fn perturbed_state_properties() {
        let l = 4;
        let phi = models::interacting(l, 1.0, 0.3, 0.7).unwrap();
        let i = Region::new(&[1, 2], l).unwrap();
        let p = perturbed_state(&phi, 1.0, &i).unwrap();
        assert!(product_check(&p, &i) <= 1e-12);
        assert!(gibbs2_residual(&phi, &i).unwrap() <= 1e-12);
        // the full Hamiltonian does move A_I
        let h = phi.total_hamiltonian();
        let moved = MonomialBasis::new(i)
            .elements
            .iter()
            .map(|m| linalg::max_abs(&linalg::commutator(h.matrix(), &m.to_dense())))
            .fold(0.0, f64::max);
        assert!(moved > 0.1);
        let zero = perturbed_state(&Potential::zero(l), 1.0, &i).unwrap();
        assert!(zero.distance(&DensityState::tracial(l).unwrap()) < 1e-15);
        assert!(perturbed_state(&models::raw_density(l, 1.0).unwrap(), 1.0, &i).is_err());
        assert!(matches!(perturbed_state(&phi, 1.0, &Region::empty(l)), Err(Error::EmptyRegion)));
    }

    #[test]
    fn gibbs_of_coupled_chain_is_not_a_product() {
        let l = 4;
        let phi = models::interacting(l, 1.0, 0.3, 0.7).unwrap();
        let g = gibbs_state(&phi.total_hamiltonian(), 1.0).unwrap();
        assert!(product_check(&g, &Region::singleton(1, l).unwrap()) > 1e-3);
        assert!(product_check(&DensityState::tracial(l).unwrap(), &Region::singleton(1, l).unwrap()) == 0.0);
    }

    #[test]
    fn restriction_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let l = 3;
        let w = DensityState::new(random_density(&mut rng, 8), "w").unwrap();
        let r = Region::new(&[0, 2], l).unwrap();
        let res = restrict(&w, &r);
        assert!(res.positivity_margin().unwrap() > -1e-10);
        for _ in 0..20 {
            let mut b = CMatrix::zeros(8, 8);
            for m in MonomialBasis::new(r).elements {
                m.add_scaled_to(&mut b, Complex64::new(rand::Rng::gen(&mut rng), rand::Rng::gen(&mut rng)));
            }
            let b = AlgebraElement::new(b, r).unwrap();
            assert!((res.evaluate(&b) - w.expectation(&b)).norm() <= 1e-12);
        }
        let tau = restrict(&DensityState::tracial(l).unwrap(), &r);
        assert!(tau.values.iter().all(|(m, v)| if m.is_identity() { (v.re - 1.0).abs() < 1e-15 } else { v.norm() < 1e-15 }));
    }

    #[test]
    fn noneven_perturbation_contract() {
        let l = 4;
        let phi = models::free_hopping(l, 1.0, 0.2).unwrap();
        let i = Region::new(&[1, 2], l).unwrap();
        let base = perturbed_state(&phi, 1.0, &i).unwrap();
        let x = default_odd_perturbation(&i).unwrap();
        let lambda = 0.5 * noneven_scale_bound(&base, &x).unwrap();
        let psi = noneven_perturbation(&base, &i, None, Some(lambda)).unwrap();
        let tr_x2 = linalg::trace(&(x.matrix() * x.matrix())).re;
        assert!((psi.expectation(&x).re - lambda * tr_x2).abs() < 1e-14);
        assert!(base.expectation(&x).norm() < 1e-15);
        assert!(restrict(&psi, &i.complement()).distance(&restrict(&base, &i.complement())) <= 1e-12);
        let avg = (psi.density() + psi.theta().density()).scale(0.5);
        assert!(linalg::max_abs(&(avg - base.density())) <= 1e-12);

        let even = car::number(1, l).unwrap();
        assert!(matches!(noneven_perturbation(&base, &i, Some(&even), None), Err(Error::NotOdd(_))));
        let outside = car::majorana(0, l).unwrap();
        assert!(matches!(noneven_perturbation(&base, &i, Some(&outside), None), Err(Error::NotOrthogonal(_))));
        assert!(matches!(
            noneven_perturbation(&base, &i, None, Some(10.0 * lambda)),
            Err(Error::ScaleTooLarge { .. })
        ));
    }

    #[test]
    fn remark2_with_even_outer_state() {
        let l = 3;
        let phi = models::free_hopping(l, 1.0, 0.4).unwrap();
        let outer = perturbed_state(&phi, 1.0, &Region::singleton(0, l).unwrap()).unwrap();
        let c = remark2_construct(&outer, None).unwrap();
        assert!(c.restriction_residual <= 1e-10);
        assert!((c.u_expectation.re - 1.0).abs() <= 1e-10);
        let res = restrict(&c.vector_state, &Region::singleton(0, l).unwrap().complement());
        assert!(res.distance(&restrict(&outer, &Region::singleton(0, l).unwrap().complement())) <= 1e-10);
        let bad = car::annihilator(0, l).unwrap();
        assert!(remark2_construct(&outer, Some(&bad)).is_err());
        let half = car::majorana(0, l).unwrap().scale(std::f64::consts::FRAC_1_SQRT_2);
        assert!(matches!(remark2_construct(&outer, Some(&half)), Err(Error::NotUnitary(_))));
    }

    #[test]
    fn snapshot_serializes() {
        let tau = DensityState::tracial(2).unwrap();
        let snap = tau.snapshot(&[Region::singleton(1, 2).unwrap()]).unwrap();
        let json = serde_json::to_string(&snap).unwrap();
        assert!(json.starts_with(r#"{"label":"tracial","eigenvalues":[0.25"#));
        assert_eq!(snap.restrictions[0].entries.len(), 4);
    }
}
