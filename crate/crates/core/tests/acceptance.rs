//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Runs with its own harness so the summary lines are always printed.

use std::process::Command;
use std::time::{Duration, Instant};

use graded_lts::car::{self, combination_residual, AlgebraElement, LocalFactor, Monomial, MonomialBasis, Region, SparseOp};
use graded_lts::entropy::{relative_entropy, restricted_relative_entropy};
use graded_lts::interaction::{models, prune};
use graded_lts::linalg;
use graded_lts::stability::{self, ConstraintMode};
use graded_lts::state::{self, gibbs_state, DensityState};
use graded_lts::symmetry;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn within(elapsed: Duration, limit_s: f64) -> bool {
    elapsed.as_secs_f64() < limit_s
}

fn single(site: usize, f: LocalFactor, l: usize) -> SparseOp {
    Monomial::new(l, &[(site, f)]).to_sparse()
}

fn parity(state: usize) -> f64 {
    if state.count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn random_monomial(rng: &mut ChaCha8Rng, region: &Region) -> Monomial {
    let factors: Vec<(usize, LocalFactor)> =
        region.sites().into_iter().map(|s| (s, LocalFactor::ALL[rng.gen_range(0..4)])).collect();
    Monomial::new(region.lattice_size(), &factors)
}

/// Anticommutation relations, graded commutation across a split, Θ on
/// monomials (sparse, up to L = 10) and even/odd splits (dense, L ≤ 6).
fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0_f64;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for l in 1..=10 {
        let id = SparseOp::identity(car::dim(l));
        let ann: Vec<SparseOp> = (0..l).map(|i| single(i, LocalFactor::Annihilate, l)).collect();
        let cre: Vec<SparseOp> = (0..l).map(|i| single(i, LocalFactor::Create, l)).collect();
        for i in 0..l {
            for j in 0..l {
                let delta = if i == j { 1.0 } else { 0.0 };
                worst = worst.max(combination_residual(&[
                    (1.0, &ann[i].mul(&cre[j])),
                    (1.0, &cre[j].mul(&ann[i])),
                    (-delta, &id),
                ]));
                worst = worst.max(combination_residual(&[(1.0, &ann[i].mul(&ann[j])), (1.0, &ann[j].mul(&ann[i]))]));
            }
        }
        if l >= 2 {
            let left = Region::interval(0, l / 2, l).unwrap();
            let right = left.complement();
            for _ in 0..100 {
                let a = random_monomial(&mut rng, &left);
                let b = random_monomial(&mut rng, &right);
                let sign = if a.is_odd() && b.is_odd() { 1.0 } else { -1.0 };
                let (sa, sb) = (a.to_sparse(), b.to_sparse());
                worst = worst.max(combination_residual(&[(1.0, &sa.mul(&sb)), (sign, &sb.mul(&sa))]));
                // Θ(M) = ±M according to the degree, and Θ² = id
                let deg_sign = if a.is_odd() { -1.0 } else { 1.0 };
                for j in 0..sa.dim() {
                    if let Some((r, c)) = sa.column(j) {
                        let theta = c * parity(r) * parity(j);
                        worst = worst.max((theta - deg_sign * c).abs());
                        worst = worst.max((theta * parity(r) * parity(j) - c).abs());
                    }
                }
            }
        }
    }
    for l in 1..=6 {
        let d = car::dim(l);
        let a = AlgebraElement::global(linalg::random_matrix(&mut rng, d), l).unwrap();
        let split = car::even_odd_split(&a);
        worst = worst.max((&split.even + &split.odd).distance(&a));
        worst = worst.max(car::theta(&split.even).distance(&split.even));
        worst = worst.max(car::theta(&split.odd).distance(&split.odd.scale(-1.0)));
        worst = worst.max(car::theta(&car::theta(&a)).distance(&a));
    }
    let elapsed = start.elapsed();
    outcome(worst <= 1e-12 && within(elapsed, 10.0), format!("max residual {worst:.2e}, {:.2} s (< 10 s)", elapsed.as_secs_f64()))
}

/// Product property of the perturbed state for random standard potentials.
fn criterion_2() -> Outcome {
    let start = Instant::now();
    let l = 6;
    let mut worst = 0.0_f64;
    let mut runs = 0;
    for p in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(200 + p);
        let phi = models::random_standard(&mut rng, l, 2).unwrap();
        for beta in [0.5, 1.0, 2.0] {
            for size in [1, 2] {
                let first = rng.gen_range(1..=(l - 1 - size));
                let i = Region::interval(first, first + size, l).unwrap();
                let pert = state::perturbed_state(&phi, beta, &i).unwrap();
                worst = worst.max(state::product_check(&pert, &i));
                runs += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= 1e-9 && within(elapsed, 60.0),
        format!("{runs} runs, max product residual {worst:.2e}, {:.2} s (< 60 s)", elapsed.as_secs_f64()),
    )
}

/// Entropy bounds between Gibbs and perturbed states, and monotonicity of
/// relative entropy under restriction.
fn criterion_3() -> Outcome {
    let mut slack = f64::INFINITY;
    for p in 0..5u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(300 + p);
        let l = 6;
        let phi = models::random_standard(&mut rng, l, 2).unwrap();
        for beta in [0.5, 1.0, 2.0] {
            for sites in [vec![2], vec![2, 3]] {
                let i = Region::new(&sites, l).unwrap();
                slack = slack.min(state::perturbation_entropy(&phi, beta, &i).unwrap().slack());
            }
        }
    }
    let l = 5;
    let d = car::dim(l);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut violation = f64::NEG_INFINITY;
    for _ in 0..100 {
        let a = DensityState::new(linalg::random_density(&mut rng, d), "a").unwrap();
        let b = DensityState::new(linalg::random_density(&mut rng, d), "b").unwrap();
        let full = relative_entropy(&a, &b).unwrap().value;
        let mask: u32 = rng.gen_range(0..(1 << l));
        let sites: Vec<usize> = (0..l).filter(|s| mask & (1 << s) != 0).collect();
        let r = Region::new(&sites, l).unwrap();
        let part = restricted_relative_entropy(&a, &b, &r).unwrap().value;
        violation = violation.max(part - full);
        if !sites.is_empty() {
            let smaller = Region::new(&sites[1..], l).unwrap();
            violation = violation.max(restricted_relative_entropy(&a, &b, &smaller).unwrap().value - part);
        }
    }
    outcome(
        slack >= 0.0 && violation <= 1e-10,
        format!("min bound slack {slack:.3e}, max monotonicity violation {violation:.2e} (tol 1e-10)"),
    )
}

/// The free-energy violation chain for a noneven state.
fn criterion_4() -> Outcome {
    let start = Instant::now();
    let l = 6;
    let phi = models::free_hopping(l, 1.0, 0.2).unwrap();
    let i = Region::new(&[2, 3], l).unwrap();
    let rep = stability::prop4_pipeline(&phi, 1.0, &i, None, 0).unwrap();
    let elapsed = start.elapsed();
    let get = |name: &str| rep.check(name).map(|c| (c.value, c.pass)).unwrap_or((f64::NAN, false));
    let names = ["RESTIc", "ScIvpHI", "ScIpsi", "ScImin", "violate_identity", "violate"];
    let all = names.iter().all(|n| get(n).1);
    let noted = rep.notes.iter().any(|n| n.contains("cannot exist at finite dimension"));
    outcome(
        all && noted && rep.passed() && within(elapsed, 30.0),
        format!(
            "RESTIc {:.1e}, ScIvpHI {:.1e}, ScIpsi {:.1e}, ScImin {:.1e}, gap {:.4e}, note {}, {:.2} s (< 30 s)",
            get("RESTIc").0,
            get("ScIvpHI").0,
            get("ScIpsi").0,
            get("ScImin").0,
            get("violate").0,
            if noted { "present" } else { "missing" },
            elapsed.as_secs_f64()
        ),
    )
}

/// Expectations of products of disjoint odd self-adjoint elements.
fn criterion_5() -> Outcome {
    let scan = symmetry::triple_scan(5, 1000, symmetry::DEFAULT_THRESHOLD, 1e-3, 5).unwrap();
    outcome(
        scan.max_re <= 1e-12 && scan.violations == 0 && scan.cluster_inconsistencies == 0,
        format!(
            "{} triples, max |Re w(AB)| {:.2e}, {} aligned, {} triple-condition violations",
            scan.samples, scan.max_re, scan.aligned, scan.violations
        ),
    )
}

/// KMS identity of the Gibbs state and invariance of A_I under the
/// perturbed dynamics.
fn criterion_6() -> Outcome {
    let l = 5;
    let phi = models::interacting(l, 1.0, 0.3, 0.8).unwrap();
    let h = phi.total_hamiltonian();
    let beta = 1.0;
    let g = gibbs_state(&h, beta).unwrap();
    let kms = state::kms_panel(&g, &h, beta, 100, 6).unwrap();
    let mut gibbs2 = 0.0_f64;
    for sites in [vec![2], vec![1, 2], vec![0], vec![3, 4]] {
        gibbs2 = gibbs2.max(state::gibbs2_residual(&phi, &Region::new(&sites, l).unwrap()).unwrap());
    }
    outcome(kms <= 1e-10 && gibbs2 <= 1e-12, format!("KMS panel max {kms:.2e} (tol 1e-10), commutation max {gibbs2:.2e} (tol 1e-12)"))
}

/// Local thermal stability of the Gibbs state in both modes.
fn criterion_7() -> Outcome {
    let start = Instant::now();
    let l = 5;
    let phi = models::interacting(l, 1.0, 0.3, 0.8).unwrap();
    let beta = 1.0;
    let i = Region::new(&[2], l).unwrap();
    let g = gibbs_state(&phi.total_hamiltonian(), beta).unwrap();
    let mut margin = f64::INFINITY;
    let mut all = true;
    for mode in [ConstraintMode::Lts, ConstraintMode::LtsPrime] {
        let rep = stability::lts_certify(&g, &phi, &i, beta, mode, 500, 7).unwrap();
        margin = margin.min(rep.margin);
        all &= rep.passed();
    }
    let pruned = prune(&phi, &i);
    let best = stability::lts_maximizer(&state::restrict(&g, &i.complement()), &pruned, &i, beta).unwrap();
    let elapsed = start.elapsed();
    outcome(
        all && margin >= -1e-9 && best.free_energy.abs() <= 1e-6,
        format!(
            "min margin {margin:.2e} over 2x500 samples and maximizers (tol -1e-9), pruned maximum F {:.2e}, {:.2} s",
            best.free_energy,
            elapsed.as_secs_f64()
        ),
    )
}

/// Vector state from an odd self-adjoint unitary on site 0.
fn criterion_8() -> Outcome {
    let l = 4;
    let phi = models::interacting(l, 1.0, 0.2, 0.5).unwrap();
    let i = Region::new(&[1, 2], l).unwrap();
    let pert = state::perturbed_state(&phi, 1.0, &i).unwrap();
    let outer = state::noneven_perturbation(&pert, &i, None, None).unwrap();
    let odd_outside = MonomialBasis::new(Region::singleton(0, l).unwrap().complement())
        .odd()
        .map(|m| m.expectation(outer.density()).norm())
        .fold(0.0, f64::max);
    let v = state::remark2_construct(&outer, None).unwrap();
    let u_err = (v.u_expectation - linalg::ONE).norm();
    outcome(
        v.restriction_residual <= 1e-10 && u_err <= 1e-10 && odd_outside > 1e-6,
        format!(
            "restriction residual {:.2e}, |phi(u) - 1| {u_err:.2e}, outer odd part {odd_outside:.2e}",
            v.restriction_residual
        ),
    )
}

/// Identical CLI runs produce identical bytes.
fn criterion_9() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_graded-lts");
    let dir = std::env::temp_dir().join(format!("graded-lts-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let verbs = ["validate", "gibbs", "perturb", "entropy", "lts", "prop4", "ssb-probe", "remark2"];
    let mut identical = 0;
    let mut failures = Vec::new();
    for verb in verbs {
        let mut outputs = Vec::new();
        for k in 0..2 {
            let path = dir.join(format!("{verb}-{k}.jsonl"));
            let status = Command::new(bin)
                .args([verb, "--length", "5", "--region", "2,3", "--seed", "42", "--model", "random", "--out"])
                .arg(&path)
                .status()
                .unwrap();
            if status.code() != Some(0) {
                failures.push(format!("{verb} exit {:?}", status.code()));
            }
            outputs.push(std::fs::read(&path).unwrap());
        }
        if outputs[0] == outputs[1] && !outputs[0].is_empty() {
            identical += 1;
        }
    }
    let _ = std::fs::remove_dir_all(&dir);
    outcome(
        identical == verbs.len() && failures.is_empty(),
        format!("{identical}/{} verbs byte-identical across reruns{}", verbs.len(), if failures.is_empty() { String::new() } else { format!(", {}", failures.join(", ")) }),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("CAR and grading axioms", criterion_1),
        ("product property of the perturbed state", criterion_2),
        ("entropy bounds and monotonicity", criterion_3),
        ("noneven violation chain", criterion_4),
        ("purely imaginary products", criterion_5),
        ("KMS and perturbed-dynamics invariance", criterion_6),
        ("local thermal stability", criterion_7),
        ("odd-unitary vector state", criterion_8),
        ("CLI determinism", criterion_9),
    ];
    let mut failed = 0;
    println!("\nacceptance");
    for (k, (name, f)) in criteria.iter().enumerate() {
        let o = f();
        failed += usize::from(!o.pass);
        println!("criterion {} {}: {} ({})", k + 1, if o.pass { "PASS" } else { "FAIL" }, name, o.detail);
    }
    println!("acceptance: {} passed, {} failed\n", criteria.len() - failed, failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
