//! Command-line front end: a TOML run configuration, flag overrides, one verb
//! per process, and a JSON-lines report.
//!
//! ```toml
//! command = "prop4"
//! lattice_size = 6
//! beta = 1.0
//! region = [2, 3]
//! seed = 0
//! output_path = "prop4.jsonl"
//!
//! [model]
//! name = "hopping"
//! t = 1.0
//! mu = 0.2
//! ```

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::str::FromStr;

use clap::Parser;
use serde::{Deserialize, Serialize};

use crate::car::{self, MonomialBasis, Region, MAX_SITES};
use crate::entropy;
use crate::error::Error;
use crate::interaction::{models, validate_potential, Potential, CONDITION_TOL};
use crate::linalg;
use crate::report::{write_json_lines, Check, ReportRecord};
use crate::stability::{self, ConstraintMode};
use crate::state::{self, gibbs_state};
use crate::symmetry;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verb {
    Validate,
    Gibbs,
    Perturb,
    Entropy,
    Lts,
    Prop4,
    SsbProbe,
    Remark2,
}

impl FromStr for Verb {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "validate" => Verb::Validate,
            "gibbs" => Verb::Gibbs,
            "perturb" => Verb::Perturb,
            "entropy" => Verb::Entropy,
            "lts" => Verb::Lts,
            "prop4" => Verb::Prop4,
            "ssb-probe" => Verb::SsbProbe,
            "remark2" => Verb::Remark2,
            other => {
                return Err(format!(
                    "unknown command '{other}' (expected one of: validate, gibbs, perturb, entropy, lts, prop4, ssb-probe, remark2)"
                ))
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// `hopping`, `interacting`, `raw_density`, `random` or `file`
    pub name: String,
    pub t: f64,
    pub mu: f64,
    pub u: f64,
    /// block range of the `random` model
    pub range: usize,
    /// JSON term records for the `file` model
    pub path: Option<PathBuf>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { name: "hopping".into(), t: 1.0, mu: 0.2, u: 0.5, range: 2, path: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<String>,
    pub lattice_size: usize,
    pub beta: f64,
    pub region: Vec<usize>,
    pub seed: u64,
    pub output_path: Option<PathBuf>,
    /// feasible samples for `lts`, operator pairs for `gibbs`, triples for `ssb-probe`
    pub samples: usize,
    pub model: ModelConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: None,
            lattice_size: 6,
            beta: 1.0,
            region: vec![2, 3],
            seed: 0,
            output_path: None,
            samples: 100,
            model: ModelConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| format!("bad config: {e}"))
    }

    fn verb(&self) -> Result<Verb, String> {
        self.command.as_deref().ok_or_else(|| "no command given".to_string())?.parse()
    }

    fn region(&self) -> Result<Region, String> {
        let l = self.lattice_size;
        if l == 0 || l > MAX_SITES {
            return Err(format!("lattice size {l} outside 1..={MAX_SITES}"));
        }
        if self.region.is_empty() {
            return Err("region must be nonempty".into());
        }
        Region::new(&self.region, l).map_err(|e| format!("invalid region {:?}: {e}", self.region))
    }

    fn potential(&self) -> Result<Potential, String> {
        let l = self.lattice_size;
        let m = &self.model;
        let built = match m.name.as_str() {
            "hopping" => models::free_hopping(l, m.t, m.mu),
            "interacting" => models::interacting(l, m.t, m.mu, m.u),
            "raw_density" => models::raw_density(l, m.mu),
            "random" => {
                let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(self.seed);
                models::random_standard(&mut rng, l, m.range)
            }
            "file" => {
                let path = m.path.as_ref().ok_or("model 'file' needs model.path")?;
                let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
                models::parse_records(&text).and_then(|recs| models::from_records(l, &recs))
            }
            other => return Err(format!("unknown model '{other}'")),
        };
        built.map_err(|e| format!("cannot build model '{}': {e}", m.name))
    }
}

#[derive(Parser, Debug)]
#[command(name = "graded-lts", about = "Graded lattice fermion workbench", version)]
struct Args {
    /// validate | gibbs | perturb | entropy | lts | prop4 | ssb-probe | remark2
    command: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, allow_negative_numbers = true)]
    beta: Option<f64>,
    /// comma-separated site list, e.g. "2,3"
    #[arg(long)]
    region: Option<String>,
    #[arg(long)]
    length: Option<usize>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_sites(text: &str) -> Result<Vec<usize>, String> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<usize>().map_err(|_| format!("bad site '{s}' in region '{text}'")))
        .collect()
}

/// Builds the effective configuration from a file plus flag overrides.
fn resolve(args: Args) -> Result<RunConfig, String> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            RunConfig::from_toml(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(c) = args.command {
        cfg.command = Some(c);
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(b) = args.beta {
        cfg.beta = b;
    }
    if let Some(r) = args.region {
        cfg.region = parse_sites(&r)?;
    }
    if let Some(l) = args.length {
        cfg.lattice_size = l;
    }
    if let Some(m) = args.model {
        cfg.model.name = m;
    }
    if let Some(o) = args.out {
        cfg.output_path = Some(o);
    }
    if !cfg.beta.is_finite() {
        return Err(format!("beta must be finite, got {}", cfg.beta));
    }
    Ok(cfg)
}

/// Parses `argv`, runs one verb and writes its report. Returns the exit code.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { stderr.write_all(text.as_bytes()) } else { stdout.write_all(text.as_bytes()) };
            return code;
        }
    };
    let cfg = match resolve(args) {
        Ok(c) => c,
        Err(msg) => return usage(stderr, &msg),
    };
    run_config(&cfg, stdout, stderr)
}

fn usage(stderr: &mut dyn Write, msg: &str) -> i32 {
    let _ = writeln!(stderr, "error: {msg}");
    EXIT_USAGE
}

/// Runs an already resolved configuration.
pub fn run_config(cfg: &RunConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let prepared = cfg.verb().and_then(|verb| Ok((verb, cfg.region()?, cfg.potential()?)));
    let (verb, region, potential) = match prepared {
        Ok(p) => p,
        Err(msg) => return usage(stderr, &msg),
    };
    // Open the sink before computing so that a bad path is a usage error.
    let mut file_sink;
    let sink: &mut dyn Write = match &cfg.output_path {
        Some(path) => match File::create(path) {
            Ok(f) => {
                file_sink = BufWriter::new(f);
                &mut file_sink
            }
            Err(e) => return usage(stderr, &format!("cannot write {}: {e}", path.display())),
        },
        None => stdout,
    };
    let records = match execute(verb, cfg, &region, &potential) {
        Ok(checks) => checks.iter().map(|c| ReportRecord::from_check(c, &region, cfg.beta, cfg.seed)).collect(),
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            vec![ReportRecord::from_check(&Check::at_most("error", f64::NAN, 0.0), &region, cfg.beta, cfg.seed)]
        }
    };
    if let Err(e) = write_json_lines(sink, &records) {
        let _ = writeln!(stderr, "error: cannot write report: {e}");
        return EXIT_USAGE;
    }
    exit_status(&records)
}

/// 0 when every record passes, 1 otherwise.
pub fn exit_status(records: &[ReportRecord]) -> i32 {
    if records.iter().all(|r| r.pass) {
        EXIT_PASS
    } else {
        EXIT_FAIL
    }
}

type Checks = Result<Vec<Check>, Error>;

fn execute(verb: Verb, cfg: &RunConfig, region: &Region, potential: &Potential) -> Checks {
    match verb {
        Verb::Validate => Ok(validate(potential)),
        Verb::Gibbs => gibbs(cfg, potential),
        Verb::Perturb => perturb(cfg, region, potential),
        Verb::Entropy => entropies(cfg, region, potential),
        Verb::Lts => lts(cfg, region, potential),
        Verb::Prop4 => Ok(stability::prop4_pipeline(potential, cfg.beta, region, None, cfg.seed)?.checks),
        Verb::SsbProbe => ssb_probe(cfg, region, potential),
        Verb::Remark2 => remark2(cfg, region, potential),
    }
}

fn validate(potential: &Potential) -> Vec<Check> {
    validate_potential(potential)
        .conditions
        .iter()
        .map(|c| Check::at_most(c.condition, c.residual, CONDITION_TOL))
        .collect()
}

fn gibbs(cfg: &RunConfig, potential: &Potential) -> Checks {
    let h = potential.total_hamiltonian();
    let g = gibbs_state(&h, cfg.beta)?;
    let eig = g.eigenvalues()?;
    Ok(vec![
        Check::at_most("gibbs_trace", (linalg::trace(g.density()).re - 1.0).abs(), state::DENSITY_TOL),
        Check::greater_than("gibbs_min_eigenvalue", eig[0], 0.0),
        Check::at_most("gibbs_even", g.odd_part(), 1e-12),
        Check::at_most("kms", state::kms_panel(&g, &h, cfg.beta, cfg.samples, cfg.seed)?, 1e-10),
    ])
}

fn perturb(cfg: &RunConfig, region: &Region, potential: &Potential) -> Checks {
    let pert = state::perturbed_state(potential, cfg.beta, region)?;
    let bounds = state::perturbation_entropy(potential, cfg.beta, region)?;
    Ok(vec![
        Check::at_most("vpHIprod", state::product_check(&pert, region), 1e-9),
        Check::at_most("Gibbs2", state::gibbs2_residual(potential, region)?, 1e-12),
        Check::at_least("RELZENTAI", bounds.slack(), 0.0),
    ])
}

fn entropies(cfg: &RunConfig, region: &Region, potential: &Potential) -> Checks {
    let g = gibbs_state(&potential.total_hamiltonian(), cfg.beta)?;
    let pert = state::perturbed_state(potential, cfg.beta, region)?;
    let sc_g = entropy::conditional_entropy(&g, region)?;
    let sc_p = entropy::conditional_entropy(&pert, region)?;
    let mut worst = f64::NEG_INFINITY;
    for r in Region::full(cfg.lattice_size).subregions().filter(|r| !r.is_full()) {
        let part = entropy::restricted_relative_entropy(&g, &pert, &r)?.value;
        worst = worst.max(part);
    }
    let full = entropy::relative_entropy(&g, &pert)?.value;
    Ok(vec![
        Check::at_most("Sc_gibbs_nonpositive", sc_g, 0.0),
        Check::at_most("Sc_perturbed_zero", sc_p.abs(), 1e-10),
        Check::at_most("restriction_monotone", worst - full, 1e-10),
        Check::at_least("RELZENTAI", state::perturbation_entropy(potential, cfg.beta, region)?.slack(), 0.0),
    ])
}

fn lts(cfg: &RunConfig, region: &Region, potential: &Potential) -> Checks {
    let g = gibbs_state(&potential.total_hamiltonian(), cfg.beta)?;
    let mut checks = Vec::new();
    for mode in [ConstraintMode::Lts, ConstraintMode::LtsPrime] {
        checks.extend(stability::lts_certify(&g, potential, region, cfg.beta, mode, cfg.samples.max(1), cfg.seed)?.checks);
    }
    Ok(checks)
}

fn ssb_probe(cfg: &RunConfig, region: &Region, potential: &Potential) -> Checks {
    let l = cfg.lattice_size;
    let g = gibbs_state(&potential.total_hamiltonian(), cfg.beta)?;
    let pert = state::perturbed_state(potential, cfg.beta, region)?;
    let psi = state::noneven_perturbation(&pert, region, None, None)?;
    let mut checks = vec![
        Check::at_most("asymmetry_gibbs", symmetry::grading_asymmetry(&g, &Region::full(l))?.quantity, 1e-12),
        Check::at_most("asymmetry_psi_outside", symmetry::grading_asymmetry(&psi, &region.complement())?.quantity, 1e-12),
        Check::greater_than("asymmetry_psi_inside", symmetry::grading_asymmetry(&psi, region)?.quantity, 0.0),
    ];
    if l >= 2 {
        let a = car::number(0, l)?;
        let far = Region::singleton(l - 1, l)?;
        let c = symmetry::cluster_coefficient(&g, &a, &far)?;
        checks.push(Check::at_most("CLUS", c.quantity, 2.0 * a.operator_norm()));
        let scan = symmetry::triple_scan(l, cfg.samples, symmetry::DEFAULT_THRESHOLD, 1e-3, cfg.seed)?;
        checks.push(Check::at_most("purely_imaginary", scan.max_re, 1e-12));
        checks.push(Check::at_most("yabure", scan.violations as f64, 0.0));
        checks.push(Check::at_most("yabure_cluster", scan.cluster_inconsistencies as f64, 0.0));
    }
    Ok(checks)
}

fn remark2(cfg: &RunConfig, region: &Region, potential: &Potential) -> Checks {
    let pert = state::perturbed_state(potential, cfg.beta, region)?;
    let outer = state::noneven_perturbation(&pert, region, None, None)?;
    let v = state::remark2_construct(&outer, None)?;
    let site0 = Region::singleton(0, cfg.lattice_size)?;
    let odd_outside = MonomialBasis::new(site0.complement())
        .odd()
        .map(|m| m.expectation(outer.density()).norm())
        .fold(0.0, f64::max);
    Ok(vec![
        Check::at_most("remark2_restriction", v.restriction_residual, 1e-10),
        Check::at_most("remark2_u", (v.u_expectation - linalg::ONE).norm(), 1e-10),
        // the construction needs an outer state that is noneven on A_{0^c}
        Check::greater_than("remark2_outer_noneven", odd_outside, 0.0),
    ])
}
