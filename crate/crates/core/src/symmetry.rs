//! Probes for fermion-grading symmetry breaking: cluster coefficients,
//! grading asymmetry of restricted states, and the fact that products of
//! disjoint odd self-adjoint elements have purely imaginary expectations.
//!
//! Functional norms on `A_R` are trace norms of `E_R` of the functional's
//! density representative: `A_R` sits in the full matrix algebra as a full
//! matrix algebra with uniform multiplicity, so `sup_{‖B‖≤1, B∈A_R} |Tr(XB)|`
//! equals `‖E_R(X)‖₁`.

use nalgebra::SVD;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::car::{self, AlgebraElement, MonomialBasis, Region};
use crate::error::{Error, Result};
use crate::interaction::models;
use crate::linalg::{self, CMatrix, HermitianEigen};
use crate::state::{gibbs_state, DensityState};

/// Tolerance for the oddness and self-adjointness preconditions.
pub const PRECONDITION_TOL: f64 = 1e-12;

/// Default constant of the triple-condition scan.
pub const DEFAULT_THRESHOLD: f64 = 0.999;

#[derive(Clone, Debug)]
pub struct ProbeResult {
    pub quantity: f64,
    /// Element of `A_R` attaining the supremum, when one is extracted.
    pub witness: Option<AlgebraElement>,
    pub region: Region,
}

/// `sup_{B ∈ A_R, ‖B‖ ≤ 1} |ω(AB) − ω(A)ω(B)|` for `A` supported away from `R`.
pub fn cluster_coefficient(omega: &DensityState, a: &AlgebraElement, region: &Region) -> Result<ProbeResult> {
    check_lattice(omega, a)?;
    if a.support().intersects(region) {
        return Err(Error::OverlappingSupports(a.support(), *region));
    }
    let d = omega.density();
    let wa = omega.expectation(a);
    // ω(AB) − ω(A)ω(B) = Tr((DA − ω(A)D) B)
    let g = d * a.matrix() - d.map(|x| x * wa);
    let (quantity, polar) = trace_norm_with_phase(&car::compress(&g, region), region);
    let witness = car::expand(&polar, region).ok();
    Ok(ProbeResult { quantity, witness, region: *region })
}

/// Full-trace norm of the element with compact matrix `x`, and the
/// contraction `W` with `Tr(XW) = ‖X‖₁`.
fn trace_norm_with_phase(x: &CMatrix, region: &Region) -> (f64, CMatrix) {
    let multiplicity = (1u64 << (region.lattice_size() - region.len())) as f64;
    let svd = SVD::new(x.clone(), true, true);
    let quantity = multiplicity * svd.singular_values.sum();
    let (u, v_t) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
    (quantity, v_t.adjoint() * u.adjoint())
}

/// `½‖(ω − ωΘ)|_{A_R}‖`, with an odd self-adjoint witness `S`, `‖S‖ ≤ 1`,
/// `ω(S) = quantity`.
pub fn grading_asymmetry(omega: &DensityState, region: &Region) -> Result<ProbeResult> {
    let d = omega.density();
    let delta = car::compress(&(d - car::theta_dense(d)), region);
    let eig = HermitianEigen::new(&delta)?;
    let multiplicity = (1u64 << (region.lattice_size() - region.len())) as f64;
    let quantity = 0.5 * multiplicity * eig.values.iter().map(|v| v.abs()).sum::<f64>();
    // sign(Δ) is odd because Δ is; zero modes map to zero
    let cut = 1e-14 * eig.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let sign = eig.apply(|v| if v > cut { 1.0 } else if v < -cut { -1.0 } else { 0.0 });
    let witness = car::expand(&sign, region).ok();
    Ok(ProbeResult { quantity, witness, region: *region })
}

/// `|Re ω(AB)|` for odd self-adjoint `A`, `B` with disjoint supports.
/// `(AB)* = BA = −AB`, so this vanishes for every state.
pub fn purely_imaginary_check(a: &AlgebraElement, b: &AlgebraElement, omega: &DensityState) -> Result<f64> {
    check_lattice(omega, a)?;
    check_lattice(omega, b)?;
    for x in [a, b] {
        let scale = x.max_abs().max(1.0);
        let even_part = car::evenness_residual(x.matrix());
        if even_part > PRECONDITION_TOL * scale {
            return Err(Error::NotOdd(even_part));
        }
        let herm = x.hermiticity_residual();
        if herm > PRECONDITION_TOL * scale {
            return Err(Error::NotSelfAdjoint(herm));
        }
    }
    if a.support().intersects(&b.support()) {
        return Err(Error::OverlappingSupports(a.support(), b.support()));
    }
    Ok(omega.expectation_matrix(&(a.matrix() * b.matrix())).re.abs())
}

fn check_lattice(omega: &DensityState, a: &AlgebraElement) -> Result<()> {
    if omega.lattice_size() != a.lattice_size() {
        return Err(Error::LatticeMismatch { expected: omega.lattice_size(), found: a.lattice_size() });
    }
    Ok(())
}

/// Random odd self-adjoint element of `A_R` with operator norm 1.
pub fn random_odd_hermitian<R: Rng + ?Sized>(rng: &mut R, region: &Region) -> Result<AlgebraElement> {
    if region.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let d = car::dim(region.lattice_size());
    let mut m = CMatrix::zeros(d, d);
    for mono in MonomialBasis::new(*region).odd() {
        let c = Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
        mono.add_scaled_to(&mut m, c);
    }
    let m = (&m + m.adjoint()).scale(0.5);
    let norm = linalg::operator_norm(&m);
    AlgebraElement::new(m.unscale(norm), *region)
}

/// One evaluated triple of the contradiction scan.
#[derive(Clone, Debug, Serialize)]
pub struct TriplePoint {
    pub omega_a: f64,
    pub omega_b: f64,
    pub re_ab: f64,
    pub im_ab: f64,
    pub cluster: f64,
}

impl TriplePoint {
    pub fn evaluate(omega: &DensityState, a: &AlgebraElement, b: &AlgebraElement) -> Result<Self> {
        let re_ab = purely_imaginary_check(a, b, omega)?;
        let ab = omega.expectation_matrix(&(a.matrix() * b.matrix()));
        Ok(Self {
            omega_a: omega.expectation(a).re,
            omega_b: omega.expectation(b).re,
            re_ab,
            im_ab: ab.im,
            cluster: cluster_coefficient(omega, a, &b.support())?.quantity,
        })
    }

    fn aligned(&self, c: f64) -> bool {
        let bar = c / std::f64::consts::SQRT_2;
        self.omega_a > bar && self.omega_b > bar
    }

    /// All three conditions at once: both expectations above `c/√2` and
    /// `Re ω(AB) > c²/2 − ε`. Never satisfiable for `ε < c²/2`.
    pub fn violates(&self, c: f64, epsilon: f64) -> bool {
        self.aligned(c) && self.re_ab > 0.5 * c * c - epsilon
    }

    /// Large aligned expectations are only compatible with a large cluster
    /// coefficient, `≥ ω(A)ω(B) > c²/2`.
    pub fn cluster_consistent(&self, c: f64) -> bool {
        !self.aligned(c) || self.cluster >= 0.5 * c * c
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TripleScan {
    pub samples: usize,
    pub threshold: f64,
    pub epsilon: f64,
    pub max_re: f64,
    /// Triples in which both expectations exceed `c/√2`.
    pub aligned: usize,
    pub violations: usize,
    pub cluster_inconsistencies: usize,
}

/// Randomized scan over states and disjoint odd self-adjoint pairs with
/// `A ∈ A_{{0}}`, `B ∈ A_{{L−1}}`. States cycle through random pure states,
/// random mixed states, even Gibbs states, and states nearly aligned with
/// `(A + B)/√2`, which push both expectations toward `1/√2`.
pub fn triple_scan(l: usize, samples: usize, threshold: f64, epsilon: f64, seed: u64) -> Result<TripleScan> {
    if l < 2 {
        return Err(Error::InvalidArgument("need at least two sites".into()));
    }
    let gamma = Region::singleton(0, l)?;
    let zeta = Region::singleton(l - 1, l)?;
    let d = car::dim(l);
    let mut scan = TripleScan {
        samples,
        threshold,
        epsilon,
        max_re: 0.0,
        aligned: 0,
        violations: 0,
        cluster_inconsistencies: 0,
    };
    for k in 0..samples {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k as u64);
        let a = random_odd_hermitian(&mut rng, &gamma)?;
        let b = random_odd_hermitian(&mut rng, &zeta)?;
        let omega = match k % 4 {
            0 => DensityState::new(linalg::projector(&linalg::random_unit_vector(&mut rng, d)), "pure")?,
            1 => DensityState::new(linalg::random_density(&mut rng, d), "mixed")?,
            2 => {
                let phi = models::random_standard(&mut rng, l, 2)?;
                gibbs_state(&phi.total_hamiltonian(), rng.gen_range(0.1..3.0))?
            }
            _ => {
                let sum = (a.matrix() + b.matrix()).unscale(std::f64::consts::SQRT_2);
                let eig = HermitianEigen::new(&sum)?;
                let top = eig.vectors.column(d - 1).into_owned();
                let noise: f64 = rng.gen_range(0.0..0.01);
                let mixed = linalg::projector(&top).scale(1.0 - noise) + linalg::random_density(&mut rng, d).scale(noise);
                DensityState::new(mixed, "aligned")?
            }
        };
        let point = TriplePoint::evaluate(&omega, &a, &b)?;
        scan.max_re = scan.max_re.max(point.re_ab);
        scan.aligned += usize::from(point.aligned(threshold));
        scan.violations += usize::from(point.violates(threshold, epsilon));
        scan.cluster_inconsistencies += usize::from(!point.cluster_consistent(threshold));
    }
    Ok(scan)
}
