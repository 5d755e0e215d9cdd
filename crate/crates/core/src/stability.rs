//! Local thermal stability: feasible-set sampling, the conditional free
//! energy maximizer, and the noneven-state violation pipeline.
//!
//! For a region `I` the variational problem fixes a state on an outside
//! algebra (`A_{I^c}` for LTS, the commutant `A_I′` for LTS′) and compares
//! conditional free energies `F(ω) = Sc_I(ω) − β ω(H(I))` across all
//! states with the same outside restriction.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::car::{self, Monomial, Region, Subalgebra};
use crate::entropy::{self, relative_entropy};
use crate::error::{Error, Result};
use crate::interaction::{local_hamiltonian, prune, validate_potential, Potential};
use crate::linalg::{self, CMatrix, HermitianEigen};
use crate::report::{Check, Comparison};
use crate::state::{self, gibbs_state, noneven_perturbation, perturbed_state, DensityState, RestrictedState};

/// Margin below which a state fails the stability inequality.
pub const LTS_TOL: f64 = 1e-9;

/// Allowed mismatch between a candidate and the base on the outside algebra.
pub const FEASIBILITY_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ConstraintMode {
    /// outside system `A_{I^c}`
    Lts,
    /// outside system `A_I′`
    LtsPrime,
}

impl ConstraintMode {
    pub fn outside(&self, region: &Region) -> Subalgebra {
        match self {
            ConstraintMode::Lts => Subalgebra::Local(region.complement()),
            ConstraintMode::LtsPrime => Subalgebra::Commutant(*region),
        }
    }
}

/// Grading parity allowed for sampled perturbations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PerturbationParity {
    Any,
    Even,
    Odd,
}

#[derive(Clone, Debug)]
pub struct FeasibleFamily {
    pub base: DensityState,
    pub region: Region,
    pub mode: ConstraintMode,
    /// `samples[0]` is the base state itself.
    pub samples: Vec<DensityState>,
}

/// Real dimension of the Hermitian perturbations orthogonal to the outside
/// algebra: `4^L − 4^{L−|I|}` in both modes.
pub fn perturbation_dimension(region: &Region, _mode: ConstraintMode) -> usize {
    let l = region.lattice_size();
    (1usize << (2 * l)) - (1usize << (2 * (l - region.len())))
}

fn check_region(region: &Region) -> Result<()> {
    if region.is_empty() || region.is_full() {
        Err(Error::DegenerateRegion)
    } else {
        Ok(())
    }
}

/// `n` states `D + Y` with `Y` Hermitian, orthogonal to the outside algebra
/// and `‖Y‖ ≤ ½ λ_min(D)`. Sample `k` draws from its own ChaCha stream.
pub fn feasible_sampler(
    base: &DensityState,
    region: &Region,
    mode: ConstraintMode,
    n: usize,
    seed: u64,
) -> Result<FeasibleFamily> {
    feasible_sampler_with_parity(base, region, mode, n, seed, PerturbationParity::Any)
}

pub fn feasible_sampler_with_parity(
    base: &DensityState,
    region: &Region,
    mode: ConstraintMode,
    n: usize,
    seed: u64,
    parity: PerturbationParity,
) -> Result<FeasibleFamily> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample count must be positive".into()));
    }
    check_region(region)?;
    let lambda_min = base.require_full_rank()?;
    let outside = mode.outside(region);
    let basis = outside.basis()?;
    let dim = car::dim(base.lattice_size());
    let mut samples = Vec::with_capacity(n);
    samples.push(base.clone().relabel(format!("{}#0", base.label())));
    for k in 1..n {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k as u64);
        let mut y = linalg::random_hermitian(&mut rng, dim);
        y = match parity {
            PerturbationParity::Any => y,
            PerturbationParity::Even => (&y + car::theta_dense(&y)).scale(0.5),
            PerturbationParity::Odd => (&y - car::theta_dense(&y)).scale(0.5),
        };
        y -= car::project_onto(&y, basis.iter());
        let norm = linalg::operator_norm(&y);
        if norm == 0.0 {
            samples.push(base.clone());
            continue;
        }
        let amplitude: f64 = rng.gen_range(0.05..=1.0);
        let scaled = y.scale(amplitude * 0.5 * lambda_min / norm);
        let density = base.density() + scaled;
        samples.push(DensityState::new(density, format!("{}#{k}", base.label()))?);
    }
    Ok(FeasibleFamily { base: base.clone(), region: *region, mode, samples })
}

/// `max |ω(M) − φ(M)|` over a basis of the outside algebra.
pub fn feasibility_residual(base: &DensityState, candidate: &DensityState, basis: &[Monomial]) -> f64 {
    basis
        .iter()
        .map(|m| (m.expectation(candidate.density()) - m.expectation(base.density())).norm())
        .fold(0.0, f64::max)
}

/// `F(ω) = −S(ω∘P, ω) − β ω(H(I))` with `P` the projection onto the
/// outside algebra of the chosen mode.
#[derive(Clone, Debug)]
pub struct FreeEnergyFunctional {
    pub region: Region,
    pub beta: f64,
    pub mode: ConstraintMode,
    local_h: CMatrix,
}

impl FreeEnergyFunctional {
    pub fn new(potential: &Potential, region: &Region, beta: f64, mode: ConstraintMode) -> Result<Self> {
        check_region(region)?;
        let report = validate_potential(potential);
        if !report.pass() {
            let failed: Vec<&str> = report.conditions.iter().filter(|c| !c.pass).map(|c| c.condition).collect();
            return Err(Error::InvalidPotential(format!("failed conditions: {}", failed.join(", "))));
        }
        let local_h = local_hamiltonian(potential, region)?.matrix.into_matrix();
        Ok(Self { region: *region, beta, mode, local_h })
    }

    pub fn evaluate(&self, omega: &DensityState) -> Result<f64> {
        let sc = entropy::conditional_entropy_in(omega, &self.mode.outside(&self.region))?;
        Ok(sc - self.beta * omega.expectation_matrix(&self.local_h).re)
    }

    pub fn local_hamiltonian(&self) -> &CMatrix {
        &self.local_h
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Clone, Debug, Serialize)]
pub struct StabilityReport {
    pub free_energies: BTreeMap<String, f64>,
    pub margin: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
    pub residuals: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
}

impl StabilityReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.check == name)
    }
}

/// `min_ω F(φ) − F(ω)` over the given feasible candidates.
pub fn lts_check(
    phi: &DensityState,
    potential: &Potential,
    region: &Region,
    beta: f64,
    mode: ConstraintMode,
    candidates: &[DensityState],
) -> Result<StabilityReport> {
    let functional = FreeEnergyFunctional::new(potential, region, beta, mode)?;
    let basis = mode.outside(region).basis()?;
    let f_phi = functional.evaluate(phi)?;
    let mut free_energies = BTreeMap::new();
    free_energies.insert("phi".to_string(), f_phi);
    let mut margin = f64::INFINITY;
    let mut feasibility = 0.0_f64;
    for (k, omega) in candidates.iter().enumerate() {
        let residual = feasibility_residual(phi, omega, &basis);
        if residual > FEASIBILITY_TOL {
            return Err(Error::InvalidArgument(format!(
                "candidate {k} ({}) leaves the feasible set (residual {residual:e})",
                omega.label()
            )));
        }
        feasibility = feasibility.max(residual);
        let f = functional.evaluate(omega)?;
        free_energies.insert(format!("{k:04}:{}", omega.label()), f);
        margin = margin.min(f_phi - f);
    }
    let mut residuals = BTreeMap::new();
    residuals.insert("feasibility".to_string(), feasibility);
    let label = match mode {
        ConstraintMode::Lts => "LTS",
        ConstraintMode::LtsPrime => "LTSprime",
    };
    let checks = vec![
        Check::at_most(format!("{label}_feasibility"), feasibility, FEASIBILITY_TOL),
        Check::at_least(format!("{label}_margin"), margin, -LTS_TOL),
    ];
    Ok(StabilityReport {
        free_energies,
        margin,
        tolerance: LTS_TOL,
        verdict: if margin >= -LTS_TOL { Verdict::Pass } else { Verdict::Fail },
        residuals,
        checks,
        notes: Vec::new(),
    })
}

/// Relative size of an `F` increment indistinguishable from round-off.
const PRECISION_FLOOR: f64 = 1e-15;

/// Settings for the projected ascent.
#[derive(Clone, Copy, Debug)]
pub struct AscentOptions {
    pub max_iterations: usize,
    /// Stop once the projected gradient's Frobenius norm falls below this,
    /// or once `F` stops improving beyond round-off for a full window.
    pub gradient_tol: f64,
    /// Required bound on `|ΔF|` over the final iterations.
    pub certificate_tol: f64,
    pub certificate_window: usize,
    /// Eigenvalue floor relative to 1 that iterates may not cross.
    pub eigenvalue_floor: f64,
}

impl Default for AscentOptions {
    fn default() -> Self {
        Self {
            max_iterations: 50_000,
            gradient_tol: 1e-10,
            certificate_tol: 1e-8,
            certificate_window: 10,
            eigenvalue_floor: 1e-14,
        }
    }
}

#[derive(Clone, Debug)]
pub struct MaximizerOutcome {
    pub state: DensityState,
    pub free_energy: f64,
    pub iterations: usize,
    pub gradient_norm: f64,
    /// `max |ΔF|` over the final window (0 if converged immediately).
    pub certificate: f64,
    /// Mismatch with the constraint on the outside algebra.
    pub feasibility: f64,
}

/// Maximizes `F` over states whose restriction to `A_{I^c}` is `constraint`.
pub fn lts_maximizer(
    constraint: &RestrictedState,
    potential: &Potential,
    region: &Region,
    beta: f64,
) -> Result<MaximizerOutcome> {
    if constraint.region != region.complement() {
        return Err(Error::InvalidArgument(format!(
            "constraint lives on {} but the complement of {} is {}",
            constraint.region,
            region,
            region.complement()
        )));
    }
    let start = constraint.reconstructed_state()?;
    maximize(&start, potential, region, beta, ConstraintMode::Lts, AscentOptions::default())
}

/// Maximizes `F` over states agreeing with `base` on the outside algebra of `mode`.
pub fn lts_maximizer_for(
    base: &DensityState,
    potential: &Potential,
    region: &Region,
    beta: f64,
    mode: ConstraintMode,
) -> Result<MaximizerOutcome> {
    let start = DensityState::new(mode.outside(region).project(base.density())?, "outside-projection")?;
    maximize(&start, potential, region, beta, mode, AscentOptions::default())
}

/// Projected gradient ascent from the τ-product point `C = P(D)`.
///
/// On the feasible slice `P(D) = C`, so
/// `F(D) = −Tr D log D + Tr D (log C − β H(I))`. The gradient is projected
/// onto the orthogonal complement of the outside algebra, which keeps every
/// iterate on the slice; steps are Barzilai–Borwein sized and halved until
/// the iterate stays above the eigenvalue floor and `F` does not decrease.
pub fn maximize(
    start: &DensityState,
    potential: &Potential,
    region: &Region,
    beta: f64,
    mode: ConstraintMode,
    options: AscentOptions,
) -> Result<MaximizerOutcome> {
    let functional = FreeEnergyFunctional::new(potential, region, beta, mode)?;
    let outside = mode.outside(region);
    let basis = outside.basis()?;
    let c = outside.project(start.density())?;
    let c_eig = HermitianEigen::new(&c)?;
    if c_eig.min() <= options.eigenvalue_floor {
        return Err(Error::SingularState { min: c_eig.min(), max: c_eig.max() });
    }
    let k = c_eig.apply(f64::ln) - functional.local_hamiltonian().scale(beta);

    let objective = |eig: &HermitianEigen, d: &CMatrix| -> f64 {
        let entropy: f64 = eig.values.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.ln()).sum();
        entropy + linalg::trace_product(d, &k).re
    };
    let projected_gradient = |eig: &HermitianEigen| -> CMatrix {
        let g = &k - eig.apply(f64::ln);
        let pg = &g - car::project_onto(&g, basis.iter());
        (&pg + pg.adjoint()).scale(0.5)
    };

    let mut d = c.clone();
    let mut eig = c_eig;
    let mut f = objective(&eig, &d);
    let mut grad = projected_gradient(&eig);
    let mut step = 1.0;
    let mut prev: Option<(CMatrix, CMatrix)> = None;
    let mut changes: Vec<f64> = Vec::new();
    let mut iterations = 0;
    let mut gnorm = grad.norm();
    let mut stalled = 0;

    while gnorm > options.gradient_tol && stalled < options.certificate_window {
        if iterations >= options.max_iterations {
            return Err(Error::NoConvergence { iterations, last_change: changes.last().copied().unwrap_or(f64::NAN) });
        }
        iterations += 1;
        if let Some((d_prev, g_prev)) = &prev {
            let s = &d - d_prev;
            let y = &grad - g_prev;
            let sy = linalg::trace_product(&s.adjoint(), &y).re;
            if sy < 0.0 {
                step = s.norm_squared() / -sy;
            }
        }
        let mut accepted = None;
        while step > 1e-300 {
            let trial = &d + grad.scale(step);
            let trial_eig = HermitianEigen::new(&trial)?;
            if trial_eig.min() > options.eigenvalue_floor {
                let f_trial = objective(&trial_eig, &trial);
                if f_trial >= f {
                    accepted = Some((trial, trial_eig, f_trial));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((trial, trial_eig, f_trial)) = accepted else {
            // No ascent direction left at working precision.
            break;
        };
        let change = f_trial - f;
        // F is only resolved to a few ulps; count iterations that gain nothing.
        if change <= PRECISION_FLOOR * f.abs().max(1.0) {
            stalled += 1;
        } else {
            stalled = 0;
        }
        changes.push(change.abs());
        prev = Some((std::mem::replace(&mut d, trial), grad));
        eig = trial_eig;
        f = f_trial;
        grad = projected_gradient(&eig);
        gnorm = grad.norm();
    }

    let window = &changes[changes.len().saturating_sub(options.certificate_window)..];
    let certificate = window.iter().copied().fold(0.0, f64::max);
    if certificate > options.certificate_tol {
        return Err(Error::NoConvergence { iterations, last_change: certificate });
    }
    // Remove round-off drift off the slice.
    let d = &d - outside.project(&d)? + &c;
    let d = d.unscale(linalg::trace(&d).re);
    let state = DensityState::new(d, "lts-maximizer")?;
    let free_energy = functional.evaluate(&state)?;
    let feasibility = feasibility_residual(start, &state, &basis);
    Ok(MaximizerOutcome { state, free_energy, iterations, gradient_norm: gnorm, certificate, feasibility })
}

/// Sampled and maximizer-based stability report for `φ`.
pub fn lts_certify(
    phi: &DensityState,
    potential: &Potential,
    region: &Region,
    beta: f64,
    mode: ConstraintMode,
    samples: usize,
    seed: u64,
) -> Result<StabilityReport> {
    let family = feasible_sampler(phi, region, mode, samples, seed)?;
    let mut report = lts_check(phi, potential, region, beta, mode, &family.samples)?;
    let sampled_margin = report.margin;
    let best = lts_maximizer_for(phi, potential, region, beta, mode)?;
    let with_max = lts_check(phi, potential, region, beta, mode, std::slice::from_ref(&best.state))?;
    let label = match mode {
        ConstraintMode::Lts => "LTS",
        ConstraintMode::LtsPrime => "LTSprime",
    };
    report.free_energies.insert("maximizer".into(), best.free_energy);
    report.residuals.insert("margin_samples".into(), sampled_margin);
    report.residuals.insert("margin_maximizer".into(), with_max.margin);
    report.residuals.insert("maximizer_certificate".into(), best.certificate);
    report.residuals.insert("maximizer_iterations".into(), best.iterations as f64);
    report.margin = sampled_margin.min(with_max.margin);
    report.verdict = if report.margin >= -LTS_TOL { Verdict::Pass } else { Verdict::Fail };
    report.checks = vec![
        Check::at_most(format!("{label}_feasibility"), report.residuals["feasibility"].max(best.feasibility), FEASIBILITY_TOL),
        Check::at_least(format!("{label}_margin_samples"), sampled_margin, -LTS_TOL),
        Check::at_least(format!("{label}_margin_maximizer"), with_max.margin, -LTS_TOL),
        Check::at_most(format!("{label}_maximizer_certificate"), best.certificate, AscentOptions::default().certificate_tol),
    ];
    Ok(report)
}

/// Tolerances of the violation chain.
pub const RESTRICTION_TOL: f64 = 1e-12;
pub const ENTROPY_IDENTITY_TOL: f64 = 1e-10;
pub const STRICT_GAP_TOL: f64 = 1e-6;

/// States built by the violation pipeline.
#[derive(Clone, Debug)]
pub struct Prop4States {
    pub gibbs: DensityState,
    pub perturbed: DensityState,
    pub psi: DensityState,
    pub psi_theta: DensityState,
    pub pruned: Potential,
}

pub fn prop4_states(potential: &Potential, beta: f64, region: &Region, lambda: Option<f64>) -> Result<Prop4States> {
    let gibbs = gibbs_state(&potential.total_hamiltonian(), beta)?;
    let perturbed = perturbed_state(potential, beta, region)?;
    let psi = noneven_perturbation(&perturbed, region, None, lambda)?.relabel("psi");
    let psi_theta = psi.theta().relabel("psi_theta");
    Ok(Prop4States { gibbs, perturbed, psi, psi_theta, pruned: prune(potential, region) })
}

/// Builds `φ`, the perturbed state, a restriction-matched noneven `ψ` and
/// `ψΘ`, then verifies the free-energy chain under the pruned potential:
/// equal outside restrictions, vanishing local energy, `Sc_I = 0` at the
/// perturbed state, `Sc_I(ψ) = −S(φ^{βH(I)}, ψ)`, grading invariance of
/// `Sc_I`, and the strict gap `F(φ^{βH(I)}) − F(ψ) = S(φ^{βH(I)}, ψ) > 0`.
pub fn prop4_pipeline(
    potential: &Potential,
    beta: f64,
    region: &Region,
    lambda: Option<f64>,
    seed: u64,
) -> Result<StabilityReport> {
    if !(beta > 0.0) {
        return Err(Error::InvalidArgument(format!("beta must be positive, got {beta}")));
    }
    check_region(region)?;
    let states = prop4_states(potential, beta, region, lambda)?;
    let Prop4States { gibbs, perturbed, psi, psi_theta, pruned } = &states;
    let outside = region.complement();

    let r_pert = state::restrict(perturbed, &outside);
    let restic = state::restrict(psi, &outside)
        .distance(&r_pert)
        .max(state::restrict(psi_theta, &outside).distance(&r_pert));

    let pruned_h = local_hamiltonian(pruned, region)?.matrix;
    let hizero = [perturbed, psi, psi_theta]
        .iter()
        .map(|w| w.expectation(&pruned_h).norm())
        .fold(pruned_h.max_abs(), f64::max);

    let sc_pert = entropy::conditional_entropy(perturbed, region)?;
    let sc_psi = entropy::conditional_entropy(psi, region)?;
    let sc_psi_theta = entropy::conditional_entropy(psi_theta, region)?;
    let s_rel = relative_entropy(perturbed, psi)?;
    if !s_rel.kernel_ok {
        return Err(Error::InvalidDensity("perturbed state does not dominate psi".into()));
    }
    let f = FreeEnergyFunctional::new(pruned, region, beta, ConstraintMode::Lts)?;
    let f_pert = f.evaluate(perturbed)?;
    let f_psi = f.evaluate(psi)?;
    let f_psi_theta = f.evaluate(psi_theta)?;
    let gap = f_pert - f_psi;

    let mut family = feasible_sampler(psi, region, ConstraintMode::Lts, 8, seed)?.samples;
    family.push(perturbed.clone());
    let lts = lts_check(psi, pruned, region, beta, ConstraintMode::Lts, &family)?;

    let kms_distance = psi.distance(perturbed);
    let checks = vec![
        Check::at_most("RESTIc", restic, RESTRICTION_TOL),
        Check::at_most("HIzero", hizero, RESTRICTION_TOL),
        Check::at_most("ScIvpHI", sc_pert.abs(), ENTROPY_IDENTITY_TOL),
        Check::at_most("ScIpsi", (sc_psi + s_rel.value).abs(), ENTROPY_IDENTITY_TOL),
        Check::at_most("ScImin", (sc_psi_theta - sc_psi).abs(), ENTROPY_IDENTITY_TOL),
        Check::at_most("violate_equal", (f_psi - f_psi_theta).abs(), ENTROPY_IDENTITY_TOL),
        Check::at_most("violate_identity", (gap - s_rel.value).abs(), ENTROPY_IDENTITY_TOL),
        Check::greater_than("violate", gap, STRICT_GAP_TOL),
        Check::at_most("LTS_violation_margin", lts.margin, -STRICT_GAP_TOL),
        Check::greater_than("noneven_kms_unrealizable", kms_distance, 0.0),
    ];
    let comparisons = [
        Comparison::AtMost,
        Comparison::AtMost,
        Comparison::AtMost,
        Comparison::AtMost,
        Comparison::AtMost,
        Comparison::AtMost,
        Comparison::AtMost,
        Comparison::GreaterThan,
        Comparison::AtMost,
        Comparison::GreaterThan,
    ];
    let margin = checks.iter().zip(comparisons).map(|(c, cmp)| c.slack(cmp)).fold(f64::INFINITY, f64::min);
    let all_pass = checks.iter().all(|c| c.pass);

    let mut free_energies = BTreeMap::new();
    free_energies.insert("perturbed".to_string(), f_pert);
    free_energies.insert("psi".to_string(), f_psi);
    free_energies.insert("psi_theta".to_string(), f_psi_theta);
    free_energies.insert("gibbs".to_string(), f.evaluate(gibbs)?);
    let mut residuals = BTreeMap::new();
    residuals.insert("gap".to_string(), gap);
    residuals.insert("relative_entropy".to_string(), s_rel.value);
    residuals.insert("Sc_perturbed".to_string(), sc_pert);
    residuals.insert("Sc_psi".to_string(), sc_psi);
    residuals.insert("Sc_psi_theta".to_string(), sc_psi_theta);
    residuals.insert("lts_margin_psi".to_string(), lts.margin);
    residuals.insert("psi_odd_part".to_string(), psi.odd_part());

    let notes = vec![
        "A noneven KMS state built from a nontrivial odd central element cannot exist at finite \
         dimension: the KMS state of the pruned dynamics is unique (the perturbed Gibbs state) and even. \
         The chain is verified for a noneven state psi that matches it on the outside algebra; \
         noneven_kms_unrealizable records the distance of psi from that unique KMS state."
            .to_string(),
    ];
    Ok(StabilityReport {
        free_energies,
        margin,
        tolerance: 0.0,
        verdict: if all_pass { Verdict::Pass } else { Verdict::Fail },
        residuals,
        checks,
        notes,
    })
}
