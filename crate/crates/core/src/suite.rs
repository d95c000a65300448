//! The property suite: every invariant run across the catalog and seeded
//! random ensembles.
//!
//! Each battery evaluates its draws in parallel and folds the outcomes in
//! draw order, so the report does not depend on scheduling. Draw `i` of
//! battery stream `s` is seeded with the `i`-th `u64` of
//! `ChaCha8Rng::seed_from_u64(seed)` on stream `s`.

use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::catalog::{build, gaussian_matrix, standard_catalog, CatalogSpec, Family};
use crate::dichotomy::{
    check_dichotomy, persistence_margin, semigroup_difference_bound, yosida_distance,
    yosida_vs_anorm, DichotomyVerdict,
};
use crate::error::{LabError, Result};
use crate::expm::expm;
use crate::grid::ScalarGrid;
use crate::hille_yosida::{
    certify_growth_envelope_with, default_lambda_grid, sup_renorm_bounds,
    verify_resolvent_powers_with,
};
use crate::operator::{norm2, resolvent, resolvent_real, shift_generator, LinearOperator, Mat, Vector};
use crate::perturbation::{
    a_norm, certify_perturbed_growth_with, default_mu_grid, factorization_residual,
    perturbed_resolvent, relative_bound_k, resolvent_identity_residual, ResolventMode,
};
use crate::report::AnalysisReport;
use crate::tol::Tolerances;
use crate::verdict::{Status, Verdict};

pub const DEFAULT_SEED: u64 = 20240601;
pub const DEFAULT_DIMS: [usize; 4] = [2, 4, 8, 16];
pub const DEFAULT_DRAWS: usize = 100;
/// Dimension of the random ensembles.
pub const DRAW_DIM: usize = 8;
/// Dimension of the random dichotomy ensembles.
pub const DICHOTOMY_DIM: usize = 6;
pub const DIFFERENCE_PAIRS: usize = 50;
pub const PERSISTENCE_SEEDS: usize = 20;
pub const PERSISTENCE_STEPS: usize = 21;

#[derive(Debug, Clone, Serialize)]
pub struct SuiteConfig {
    pub seed: u64,
    pub dims: Vec<usize>,
    pub draws: usize,
    pub tolerances: Tolerances,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            seed: DEFAULT_SEED,
            dims: DEFAULT_DIMS.to_vec(),
            draws: DEFAULT_DRAWS,
            tolerances: Tolerances::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Battery {
    pub name: String,
    pub status: Status,
    pub checked: usize,
    pub failures: usize,
    pub skipped: usize,
    /// Smallest slack seen (positive = satisfied).
    pub min_slack: f64,
    /// First failing case.
    pub witness: Option<String>,
    /// Battery-specific counters.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<(String, f64)>,
}

impl Battery {
    pub fn verdict(&self) -> Verdict {
        let v = Verdict::new(self.name.clone(), self.status, self.min_slack);
        match &self.witness {
            Some(w) => v.with_witness(w.clone()),
            None => v,
        }
    }

    pub fn note(&self, key: &str) -> Option<f64> {
        self.notes.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }
}

/// One evaluated inequality.
#[derive(Debug, Clone)]
pub struct Check {
    pub status: Status,
    pub slack: f64,
    pub witness: String,
}

impl Check {
    pub fn at_most(lhs: f64, rhs: f64, witness: impl Into<String>) -> Check {
        let status = if lhs <= rhs { Status::Pass } else { Status::Fail };
        Check { status, slack: rhs - lhs, witness: witness.into() }
    }

    pub fn ratio(ratio: f64, tol: f64, witness: impl Into<String>) -> Check {
        Check {
            status: Status::from_ratio(ratio, tol),
            slack: 1.0 + tol - ratio,
            witness: witness.into(),
        }
    }

    pub fn holds(ok: bool, witness: impl Into<String>) -> Check {
        let status = if ok { Status::Pass } else { Status::Fail };
        Check { status, slack: if ok { 1.0 } else { -1.0 }, witness: witness.into() }
    }

    fn error(e: &LabError, witness: &str) -> Check {
        Check { status: Status::Fail, slack: f64::NEG_INFINITY, witness: format!("{witness}: {e}") }
    }
}

/// Outcome of one draw: its checks, or `None` when it does not apply.
type DrawOutcome = Option<Vec<Check>>;

fn fold(name: &str, outcomes: Vec<Result<DrawOutcome>>, labels: &[String]) -> Battery {
    let mut battery = Battery {
        name: name.to_string(),
        status: Status::Pass,
        checked: 0,
        failures: 0,
        skipped: 0,
        min_slack: f64::INFINITY,
        witness: None,
        notes: Vec::new(),
    };
    for (outcome, label) in outcomes.into_iter().zip(labels) {
        let checks = match outcome {
            Ok(Some(checks)) => checks,
            Ok(None) => {
                battery.skipped += 1;
                continue;
            }
            Err(e) => vec![Check::error(&e, label)],
        };
        for c in checks {
            battery.checked += 1;
            if c.slack < battery.min_slack || c.slack.is_nan() {
                battery.min_slack = c.slack;
            }
            if c.status == Status::Fail {
                battery.failures += 1;
                if battery.witness.is_none() {
                    battery.witness = Some(format!("{label}: {}", c.witness));
                }
            }
        }
    }
    if battery.failures > 0 {
        battery.status = Status::Fail;
    }
    battery
}

fn run_draws<F>(name: &str, count: usize, label: impl Fn(usize) -> String, f: F) -> Battery
where
    F: Fn(usize) -> Result<DrawOutcome> + Sync,
{
    let outcomes: Vec<Result<DrawOutcome>> = (0..count).into_par_iter().map(&f).collect();
    let labels: Vec<String> = (0..count).map(label).collect();
    fold(name, outcomes, &labels)
}

fn run_catalog<F>(name: &str, specs: &[CatalogSpec], f: F) -> Battery
where
    F: Fn(&CatalogSpec, &LinearOperator) -> Result<DrawOutcome> + Sync,
{
    let outcomes: Vec<Result<DrawOutcome>> = specs
        .par_iter()
        .map(|s| f(s, &build(s)?))
        .collect();
    let labels: Vec<String> = specs.iter().map(|s| s.to_uri()).collect();
    fold(name, outcomes, &labels)
}

/// The `index`-th `u64` of stream `stream` under `seed`.
pub fn draw_seed(seed: u64, stream: u64, index: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.set_word_pos(2 * index as u128);
    rng.next_u64()
}

pub fn draw_rng(seed: u64, stream: u64, index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(draw_seed(seed, stream, index))
}

pub fn random_matrix(rng: &mut ChaCha8Rng, dim: usize) -> LinearOperator {
    LinearOperator::new(gaussian_matrix(dim, rng.next_u64())).expect("finite gaussian entries")
}

pub fn random_stable(rng: &mut ChaCha8Rng, dim: usize) -> Result<LinearOperator> {
    build(&CatalogSpec::new(Family::RandomStable, dim, vec![0.5], rng.next_u64()))
}

/// Gaussian direction rescaled to operator norm `norm`.
pub fn random_with_norm(rng: &mut ChaCha8Rng, dim: usize, norm: f64) -> LinearOperator {
    let g = random_matrix(rng, dim);
    let n = g.norm();
    g.scale_real(norm / n)
}

pub fn random_vector(rng: &mut ChaCha8Rng, dim: usize) -> Vector {
    let m = gaussian_matrix(dim, rng.next_u64());
    Vector::from_iterator(dim, m.column(0).iter().cloned())
}

/// A seeded `(A, C, ω)`: stable random `A`, `‖C‖ ∈ [0.1, 1]`,
/// `ω = s(A) + [0.05, 1]`.
#[derive(Debug, Clone)]
pub struct Instance {
    pub a: LinearOperator,
    pub c: LinearOperator,
    pub omega: f64,
}

pub fn perturbation_instance(seed: u64, stream: u64, index: usize, dim: usize) -> Result<Instance> {
    let mut rng = draw_rng(seed, stream, index);
    let a = random_stable(&mut rng, dim)?;
    let norm = rng.random_range(0.1..1.0);
    let c = random_with_norm(&mut rng, dim, norm);
    let omega = a.spectrum()?.spectral_abscissa + rng.random_range(0.05..1.0);
    Ok(Instance { a, c, omega })
}

/// Catalog ω: a little above the spectral abscissa.
pub fn catalog_omega(a: &LinearOperator) -> Result<f64> {
    Ok(a.spectrum()?.spectral_abscissa + 0.1)
}

// Stream tags, one per battery.
const S_RESOLVENT: u64 = 1;
const S_IDENTITY: u64 = 2;
const S_LAURENT: u64 = 3;
const S_SEMIGROUP: u64 = 4;
const S_ENVELOPE: u64 = 5;
const S_SHIFT: u64 = 6;
const S_RENORM: u64 = 7;
const S_FACTOR: u64 = 8;
const S_CERT: u64 = 9;
const S_ANORM: u64 = 10;
const S_MODES: u64 = 11;
const S_YOSIDA: u64 = 12;
const S_YOSIDA_METRIC: u64 = 13;
const S_YOSIDA_THM: u64 = 14;
const S_PROJECTION: u64 = 15;
const S_DIFFERENCE: u64 = 16;
const S_PERSIST: u64 = 17;

fn draw_label(stream: &'static str) -> impl Fn(usize) -> String {
    move |i| format!("{stream} draw {i}")
}

pub fn core_resolvent_residual(cfg: &SuiteConfig) -> Battery {
    run_draws("core.resolvent_residual", cfg.draws, draw_label("resolvent"), |i| {
        let mut rng = draw_rng(cfg.seed, S_RESOLVENT, i);
        let a = random_matrix(&mut rng, DRAW_DIM);
        let re = a.spectrum()?.spectral_abscissa + rng.random_range(0.1..2.0);
        let lambda = Complex64::new(re, rng.random_range(-2.0..2.0));
        let r = crate::operator::resolvent_with_residual(&a, lambda)?;
        let scale = (a.norm() + lambda.norm()).max(1.0) * r.operator.norm().max(1.0);
        Ok(Some(vec![Check::at_most(
            r.residual,
            1e-10 * scale,
            format!("λ = {lambda}, residual {:.3e}", r.residual),
        )]))
    })
}

pub fn core_first_resolvent_identity(cfg: &SuiteConfig) -> Battery {
    run_draws("core.first_resolvent_identity", cfg.draws, draw_label("identity"), |i| {
        let mut rng = draw_rng(cfg.seed, S_IDENTITY, i);
        let a = random_matrix(&mut rng, DRAW_DIM);
        let s = a.spectrum()?.spectral_abscissa;
        let l = Complex64::new(s + rng.random_range(0.1..2.0), rng.random_range(-2.0..2.0));
        let m = Complex64::new(s + rng.random_range(0.1..2.0), rng.random_range(-2.0..2.0));
        let rl = resolvent(&a, l)?;
        let rm = resolvent(&a, m)?;
        let rhs = (rl.matrix() * rm.matrix()) * (m - l);
        let residual = norm2(&(rl.matrix() - rm.matrix() - rhs));
        let scale = (1.0 + rl.norm()) * (1.0 + rm.norm()) * (1.0 + (m - l).norm()) * (1.0 + a.norm());
        Ok(Some(vec![Check::at_most(
            residual,
            1e-10 * scale,
            format!("λ = {l}, μ = {m}, residual {residual:.3e}"),
        )]))
    })
}

pub fn core_laurent_tail(cfg: &SuiteConfig) -> Battery {
    run_draws("core.laurent_tail", cfg.draws, draw_label("laurent"), |i| {
        let mut rng = draw_rng(cfg.seed, S_LAURENT, i);
        let a = random_matrix(&mut rng, DRAW_DIM);
        let norm = a.norm();
        let n = a.dim();
        let mut checks = Vec::new();
        for k in 0..5 {
            let lambda = 4.0 * norm.max(1.0) * 2f64.powi(k);
            let r = resolvent_real(&a, lambda)?;
            let tail = r.matrix() * Complex64::new(lambda, 0.0)
                - Mat::identity(n, n)
                - a.matrix() / Complex64::new(lambda, 0.0);
            let q = norm / lambda;
            let bound = q * q / (1.0 - q);
            checks.push(Check::at_most(
                norm2(&tail),
                bound * (1.0 + 1e-8) + 1e-13,
                format!("λ = {lambda}"),
            ));
        }
        Ok(Some(checks))
    })
}

pub fn core_semigroup_law(cfg: &SuiteConfig) -> Battery {
    run_draws("core.semigroup_law", cfg.draws, draw_label("semigroup"), |i| {
        let mut rng = draw_rng(cfg.seed, S_SEMIGROUP, i);
        let a = random_matrix(&mut rng, DRAW_DIM);
        let s = rng.random_range(0.0..3.0);
        let t = rng.random_range(0.0..3.0);
        let es = expm(a.matrix(), s)?;
        let et = expm(a.matrix(), t)?;
        let est = expm(a.matrix(), s + t)?;
        let (ns, nt, nst) = (norm2(&es), norm2(&et), norm2(&est));
        let law = norm2(&(&est - es * et));
        Ok(Some(vec![
            Check::at_most(law, 1e-10 * (ns * nt).max(1.0), format!("s = {s}, t = {t}, law {law:.3e}")),
            Check::at_most(nst, ns * nt * (1.0 + 1e-12), format!("s = {s}, t = {t}, submultiplicativity")),
        ]))
    })
}

pub fn catalog_specs(cfg: &SuiteConfig) -> Vec<CatalogSpec> {
    standard_catalog(&cfg.dims, cfg.seed)
}

pub fn catalog_determinism(cfg: &SuiteConfig) -> Battery {
    let specs = catalog_specs(cfg);
    run_catalog("catalog.determinism", &specs, |s, a| {
        let again = build(s)?;
        let mut checks = vec![Check::holds(again.matrix() == a.matrix(), "rebuild differs")];
        match s.family {
            Family::HeatLaplacian => {
                let symmetric = a.matrix() == &a.matrix().adjoint();
                let abscissa = a.spectrum()?.spectral_abscissa;
                checks.push(Check::holds(symmetric && abscissa < 0.0, format!("abscissa {abscissa}")));
            }
            Family::TransportShift => {
                let abscissa = a.spectrum()?.spectral_abscissa;
                checks.push(Check::at_most(abscissa, 1e-10 * a.norm(), format!("abscissa {abscissa}")));
            }
            _ => {}
        }
        Ok(Some(checks))
    })
}

/// Resolvent powers `n = 1..20` on a 32-point grid for each catalog member
/// whose envelope certifies at `ω = s(A) + 0.1`, plus `A = 0` at `ω = 0`.
pub fn hy_resolvent_powers(cfg: &SuiteConfig) -> Battery {
    let specs = catalog_specs(cfg);
    let tols = cfg.tolerances;
    let mut battery = run_catalog("hille_yosida.resolvent_powers", &specs, |s, a| {
        let omega = catalog_omega(a)?;
        let env = match certify_growth_envelope_with(a, omega, tols.env_tol) {
            Ok(env) => env,
            Err(LabError::Certification { .. }) => return Ok(None),
            Err(e) => return Err(e),
        };
        let grid = default_lambda_grid(a, omega, 32)?;
        let r = verify_resolvent_powers_with(a, &env, &grid, 20, tols.power_tol)?;
        let mut check = Check::ratio(
            r.worst_ratio,
            tols.power_tol,
            format!("ratio {} at λ = {}, n = {}", r.worst_ratio, r.worst_lambda, r.worst_n),
        );
        if s.family == Family::Zero {
            let zero_env = certify_growth_envelope_with(a, 0.0, tols.env_tol)?;
            let grid = default_lambda_grid(a, 0.0, 32)?;
            let z = verify_resolvent_powers_with(a, &zero_env, &grid, 20, tols.power_tol)?;
            let tight = z.status == Status::Tight && (z.worst_ratio - 1.0).abs() <= 1e-12;
            if !tight {
                check = Check::holds(false, format!("A = 0 not tight: ratio {}", z.worst_ratio));
            }
        }
        Ok(Some(vec![check]))
    });
    battery.notes.push(("certified".into(), (battery.checked) as f64));
    battery
}

/// `‖exp(tA)‖ ≤ Me^{ωt}` on a dense grid over `[0, 2t_star]`.
pub fn hy_envelope_soundness(cfg: &SuiteConfig) -> Battery {
    let check_env = |a: &LinearOperator, omega: f64| -> Result<DrawOutcome> {
        let env = match certify_growth_envelope_with(a, omega, cfg.tolerances.env_tol) {
            Ok(env) => env,
            Err(LabError::Certification { .. }) => return Ok(None),
            Err(e) => return Err(e),
        };
        let grid = ScalarGrid::linear(0.0, 2.0 * env.t_star, 129)?;
        let b = shift_generator(a, omega);
        let worst = grid
            .points()
            .iter()
            .map(|&t| Ok(norm2(&expm(b.matrix(), t)?) / env.m))
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        Ok(Some(vec![Check::at_most(worst, 1.0 + 1e-10, format!("max ‖S(t)‖/M = {worst}"))]))
    };
    let specs = catalog_specs(cfg);
    let mut catalog = run_catalog("hille_yosida.envelope_soundness", &specs, |_, a| {
        check_env(a, catalog_omega(a)?)
    });
    let draws = run_draws("", cfg.draws.min(20), draw_label("envelope"), |i| {
        let inst = perturbation_instance(cfg.seed, S_ENVELOPE, i, DRAW_DIM)?;
        check_env(&inst.a, inst.omega)
    });
    merge(&mut catalog, draws);
    catalog
}

fn merge(into: &mut Battery, other: Battery) {
    into.checked += other.checked;
    into.failures += other.failures;
    into.skipped += other.skipped;
    if other.min_slack < into.min_slack {
        into.min_slack = other.min_slack;
    }
    if into.witness.is_none() {
        into.witness = other.witness;
    }
    if into.failures > 0 {
        into.status = Status::Fail;
    }
}

pub fn hy_shift_covariance(cfg: &SuiteConfig) -> Battery {
    let env_tol = cfg.tolerances.env_tol;
    run_draws("hille_yosida.shift_covariance", cfg.draws.min(20), draw_label("shift"), |i| {
        let inst = perturbation_instance(cfg.seed, S_SHIFT, i, 4)?;
        let mut rng = draw_rng(cfg.seed, S_SHIFT + 100, i);
        let c = rng.random_range(-1.0..1.0);
        let shifted = shift_generator(&inst.a, -c);
        let e1 = certify_growth_envelope_with(&inst.a, inst.omega, env_tol)?;
        let e2 = certify_growth_envelope_with(&shifted, inst.omega + c, env_tol)?;
        let gap = (e1.m - e2.m).abs();
        Ok(Some(vec![Check::at_most(
            gap,
            env_tol * e1.m.max(e2.m),
            format!("M = {} vs {} after shift {c}", e1.m, e2.m),
        )]))
    })
}

pub fn hy_renorm_sandwich(cfg: &SuiteConfig) -> Battery {
    let env_tol = cfg.tolerances.env_tol;
    run_draws("hille_yosida.renorm_sandwich", cfg.draws.min(20), draw_label("renorm"), |i| {
        let inst = perturbation_instance(cfg.seed, S_RENORM, i, 4)?;
        let b = shift_generator(&inst.a, inst.omega);
        let env = certify_growth_envelope_with(&b, 0.0, env_tol)?;
        let mut rng = draw_rng(cfg.seed, S_RENORM + 100, i);
        let x = random_vector(&mut rng, 4);
        let (value, _) = sup_renorm_bounds(&b, &env, &x)?;
        let nx = x.norm();
        Ok(Some(vec![
            Check::at_most(nx * (1.0 - env_tol), value, "‖x‖ ≤ |x|"),
            Check::at_most(value, env.m * nx * (1.0 + env_tol), "|x| ≤ M‖x‖"),
        ]))
    })
}

/// Factorization and resolvent-identity residuals at `μ` one unit right of
/// both spectra.
pub fn perturbation_residuals(cfg: &SuiteConfig) -> Battery {
    run_draws("perturbation.residuals", cfg.draws, draw_label("residuals"), |i| {
        let inst = perturbation_instance(cfg.seed, S_FACTOR, i, DRAW_DIM)?;
        let sum = &inst.a + &inst.c;
        let mu = inst.a.spectrum()?.spectral_abscissa.max(sum.spectrum()?.spectral_abscissa) + 1.0;
        let ra = resolvent_real(&inst.a, mu)?.norm();
        let rs = resolvent_real(&sum, mu)?.norm();
        let scale = (1.0 + ra) * (1.0 + rs) * (1.0 + inst.a.norm() + inst.c.norm() + mu);
        let f = factorization_residual(&inst.a, &inst.c, mu)?;
        let r = resolvent_identity_residual(&inst.a, &inst.c, mu)?;
        Ok(Some(vec![
            Check::at_most(f, 1e-10 * scale, format!("factorization residual {f:.3e} at μ = {mu}")),
            Check::at_most(r, 1e-10 * scale, format!("identity residual {r:.3e} at μ = {mu}")),
        ]))
    })
}

pub fn perturbation_generation(cfg: &SuiteConfig) -> Battery {
    let env_tol = cfg.tolerances.env_tol;
    let mut battery = run_draws("perturbation.generation_certificate", cfg.draws, draw_label("certificate"), |i| {
        let inst = perturbation_instance(cfg.seed, S_CERT, i, DRAW_DIM)?;
        let env = certify_growth_envelope_with(&inst.a, inst.omega, env_tol)?;
        let mu = default_mu_grid(&inst.a, inst.omega, 64)?;
        let t = ScalarGrid::linear(0.0, 10.0, 64)?;
        let cert = certify_perturbed_growth_with(&inst.a, &inst.c, &env, &mu, &t, true, env_tol)?;
        let claim = &cert.perturbed_env;
        Ok(Some(vec![Check {
            status: if cert.falsified { Status::Fail } else { claim.status },
            slack: claim.verified_margin,
            witness: format!("FALSIFIED at t = {} (ratio {})", claim.witness_t, claim.worst_ratio),
        }]))
    });
    battery.notes.push(("falsifications".into(), battery.failures as f64));
    battery
}

pub fn perturbation_a_norm_laws(cfg: &SuiteConfig) -> Battery {
    let tols = cfg.tolerances;
    run_draws("perturbation.a_norm_laws", cfg.draws, draw_label("a_norm"), |i| {
        let inst = perturbation_instance(cfg.seed, S_ANORM, i, DRAW_DIM)?;
        let env = certify_growth_envelope_with(&inst.a, inst.omega, tols.env_tol)?;
        let grid = default_mu_grid(&inst.a, inst.omega, 64)?;
        let mut rng = draw_rng(cfg.seed, S_ANORM + 100, i);
        let c2 = {
            let norm = rng.random_range(0.1..1.0);
            random_with_norm(&mut rng, DRAW_DIM, norm)
        };
        let alpha = rng.random_range(-3.0..3.0);
        let an = |c: &LinearOperator| a_norm(&inst.a, c, &env, &grid).map(|v| v.value);
        let (n1, n2) = (an(&inst.c)?, an(&c2)?);
        let scaled = an(&inst.c.scale_real(alpha))?;
        let sum = an(&(&inst.c + &c2))?;
        let c_norm = inst.c.norm();
        Ok(Some(vec![
            Check::at_most((scaled - alpha.abs() * n1).abs(), 1e-9 * (alpha.abs() * n1).max(1e-300), format!("homogeneity α = {alpha}")),
            Check::at_most(sum, (n1 + n2) * (1.0 + 1e-9), "triangle inequality"),
            Check::ratio(n1 / c_norm, tols.power_tol, format!("domination ‖C‖_A = {n1}, ‖C‖ = {c_norm}")),
            Check::at_most(c_norm / env.m, n1 * (1.0 + 1e-8), format!("‖C‖/M = {} > ‖C‖_A = {n1}", c_norm / env.m)),
        ]))
    })
}

pub fn perturbation_mode_agreement(cfg: &SuiteConfig) -> Battery {
    let env_tol = cfg.tolerances.env_tol;
    run_draws("perturbation.mode_agreement", cfg.draws.min(20), draw_label("modes"), |i| {
        let inst = perturbation_instance(cfg.seed, S_MODES, i, DRAW_DIM)?;
        let env = certify_growth_envelope_with(&inst.a, inst.omega, env_tol)?;
        let grid = default_mu_grid(&inst.a, inst.omega, 64)?;
        let report = relative_bound_k(&inst.a, &inst.c, &env, &grid)?;
        let Some(&(mu, _)) = report
            .profile
            .iter()
            .find(|(mu, v)| v / (mu - inst.omega) <= 0.9)
        else {
            return Ok(None);
        };
        let direct = perturbed_resolvent(&inst.a, &inst.c, mu, ResolventMode::Direct)?;
        let fact = perturbed_resolvent(&inst.a, &inst.c, mu, ResolventMode::Factorized)?;
        let neu = perturbed_resolvent(&inst.a, &inst.c, mu, ResolventMode::Neumann)?;
        let scale = direct.operator.norm();
        let tail = neu.truncation_bound * resolvent_real(&inst.a, mu)?.norm();
        let d1 = norm2(&(fact.operator.matrix() - direct.operator.matrix()));
        let d2 = norm2(&(neu.operator.matrix() - direct.operator.matrix()));
        Ok(Some(vec![
            Check::at_most(d1, 1e-8 * scale, format!("factorized vs direct {d1:.3e} at μ = {mu}")),
            Check::at_most(d2, 1e-8 * scale + tail, format!("neumann vs direct {d2:.3e} at μ = {mu}")),
        ]))
    })
}

pub fn dichotomy_yosida_oracle(cfg: &SuiteConfig) -> Battery {
    let outcomes: Vec<Result<(bool, f64, f64)>> = (0..cfg.draws)
        .into_par_iter()
        .map(|i| {
            let mut rng = draw_rng(cfg.seed, S_YOSIDA, i);
            let a = random_matrix(&mut rng, DRAW_DIM);
            let b = random_matrix(&mut rng, DRAW_DIM);
            let est = yosida_distance(&a, &b)?;
            Ok((est.convergence_flag, est.value, est.oracle))
        })
        .collect();
    let mut unconverged = 0usize;
    let wrapped: Vec<Result<DrawOutcome>> = outcomes
        .into_iter()
        .map(|o| {
            let (converged, value, oracle) = o?;
            if !converged {
                unconverged += 1;
                return Ok(None);
            }
            Ok(Some(vec![Check::at_most(
                (value - oracle).abs(),
                1e-6 * oracle,
                format!("d_Y = {value}, ‖A − B‖ = {oracle}"),
            )]))
        })
        .collect();
    let labels: Vec<String> = (0..cfg.draws).map(draw_label("yosida")).collect();
    let mut battery = fold("dichotomy.yosida_oracle", wrapped, &labels);
    // At most 1% of draws may fail to converge.
    if unconverged * 100 > cfg.draws {
        battery.status = Status::Fail;
        battery.witness.get_or_insert(format!("{unconverged} of {} draws did not converge", cfg.draws));
    }
    battery.notes.push(("unconverged".into(), unconverged as f64));
    battery
}

pub fn dichotomy_yosida_metric(cfg: &SuiteConfig) -> Battery {
    run_draws("dichotomy.yosida_metric", cfg.draws.min(20), draw_label("metric"), |i| {
        let mut rng = draw_rng(cfg.seed, S_YOSIDA_METRIC, i);
        let a = random_matrix(&mut rng, DRAW_DIM);
        let b = random_matrix(&mut rng, DRAW_DIM);
        let c = random_matrix(&mut rng, DRAW_DIM);
        let scale = 1.0 + a.norm() + b.norm() + c.norm();
        let ab = yosida_distance(&a, &b)?.value;
        let ba = yosida_distance(&b, &a)?.value;
        let bc = yosida_distance(&b, &c)?.value;
        let ac = yosida_distance(&a, &c)?.value;
        let aa = yosida_distance(&a, &a)?.value;
        Ok(Some(vec![
            Check::at_most((ab - ba).abs(), 1e-8 * scale, "symmetry"),
            Check::at_most(ac, ab + bc + 1e-8 * scale, "triangle inequality"),
            Check::holds(aa == 0.0, "d_Y(A, A) ≠ 0"),
        ]))
    })
}

/// `d_Y(A+C₁, A+C₂) ≤ ‖C₁ − C₂‖_A` as stated, and the `M`-scaled form.
pub fn dichotomy_yosida_theorem(cfg: &SuiteConfig) -> (Battery, Battery) {
    let tols = cfg.tolerances;
    let results: Vec<Result<(f64, f64, f64, Status, Status)>> = (0..cfg.draws)
        .into_par_iter()
        .map(|i| {
            let inst = perturbation_instance(cfg.seed, S_YOSIDA_THM, i, DRAW_DIM)?;
            let env = certify_growth_envelope_with(&inst.a, inst.omega, tols.env_tol)?;
            let grid = default_mu_grid(&inst.a, inst.omega, 64)?;
            let mut rng = draw_rng(cfg.seed, S_YOSIDA_THM + 100, i);
            let norm = rng.random_range(0.1..1.0);
            let c2 = random_with_norm(&mut rng, DRAW_DIM, norm);
            let r = yosida_vs_anorm(&inst.a, &inst.c, &c2, &env, &grid, tols.power_tol)?;
            Ok((r.d, r.bound, env.m, r.status, r.scaled_status))
        })
        .collect();
    let labels: Vec<String> = (0..cfg.draws).map(draw_label("yosida_theorem")).collect();
    let stated = results
        .iter()
        .map(|r| match r {
            Ok((d, bound, m, status, _)) => Ok(Some(vec![Check {
                status: *status,
                slack: bound - d,
                witness: format!("d_Y = {d} > ‖C₁ − C₂‖_A = {bound} (M = {m})"),
            }])),
            Err(e) => Err(e.clone()),
        })
        .collect();
    let scaled = results
        .iter()
        .map(|r| match r {
            Ok((d, bound, m, _, status)) => Ok(Some(vec![Check {
                status: *status,
                slack: m * bound - d,
                witness: format!("d_Y = {d} > M‖C₁ − C₂‖_A = {}", m * bound),
            }])),
            Err(e) => Err(e.clone()),
        })
        .collect();
    let mut stated = fold("dichotomy.yosida_theorem", stated, &labels);
    let with_m: usize = results.iter().filter(|r| matches!(r, Ok((_, _, m, _, _)) if *m > 1.0)).count();
    stated.notes.push(("draws_with_m_above_one".into(), with_m as f64));
    (stated, fold("dichotomy.yosida_theorem_scaled", scaled, &labels))
}

/// Random generator with an exponential dichotomy (shifted until it has one).
pub fn dichotomous_matrix(rng: &mut ChaCha8Rng, dim: usize) -> Result<LinearOperator> {
    let g = random_matrix(rng, dim);
    for k in 0..8 {
        let candidate = shift_generator(&g, -0.1 * k as f64);
        let d = crate::dichotomy::detect_dichotomy(&candidate, crate::tol::GAP_TOL)?.0;
        if d.has_dichotomy == DichotomyVerdict::Yes && d.circle_gap > 1e-3 {
            return Ok(candidate);
        }
    }
    Err(LabError::Computation("no dichotomous shift found".into()))
}

pub fn dichotomy_projection_laws(cfg: &SuiteConfig) -> Battery {
    run_draws("dichotomy.projection_laws", cfg.draws.min(20), draw_label("projection"), |i| {
        let mut rng = draw_rng(cfg.seed, S_PROJECTION, i);
        let a = dichotomous_matrix(&mut rng, DICHOTOMY_DIM)?;
        let d = check_dichotomy(&a)?;
        let p = d.projection.as_ref().expect("dichotomy has a projection").matrix().clone();
        let (n_const, alpha) = (d.n.unwrap(), d.alpha.unwrap());
        let kappa = norm2(&p);
        let q = Mat::identity(DICHOTOMY_DIM, DICHOTOMY_DIM) - &p;
        let mut checks = vec![Check::at_most(
            norm2(&(&p * &p - &p)),
            1e-9 * (1.0 + kappa * kappa),
            "P² ≠ P",
        )];
        for _ in 0..4 {
            let t = rng.random_range(0.1..4.0);
            let e = expm(a.matrix(), t)?;
            let back = expm(a.matrix(), -t)?;
            let comm = norm2(&(&e * &p - &p * &e));
            checks.push(Check::at_most(comm, 1e-9 * (norm2(&e) * kappa).max(1.0), format!("T(t)P ≠ PT(t) at t = {t}")));
            let decay = n_const * (-alpha * t).exp();
            for _ in 0..25 {
                let x = random_vector(&mut rng, DICHOTOMY_DIM);
                let px = &p * &x;
                let qx = &q * &x;
                let fwd = (&e * &px).norm();
                let bwd = (&back * &qx).norm();
                checks.push(Check::at_most(fwd, decay * px.norm() * (1.0 + 1e-9) + 1e-12, format!("forward decay at t = {t}")));
                checks.push(Check::at_most(bwd, decay * qx.norm() * (1.0 + 1e-9) + 1e-12, format!("backward decay at t = {t}")));
            }
        }
        Ok(Some(checks))
    })
}

/// `stable_dim` equals the number of eigenvalues with negative real part
/// when none sits on the imaginary axis; otherwise the verdict is not yes.
pub fn dichotomy_stable_dim(cfg: &SuiteConfig) -> Battery {
    let specs = catalog_specs(cfg);
    run_catalog("dichotomy.stable_dim", &specs, |_, a| {
        let eigs = a.spectrum()?.eigenvalues;
        let axis_tol = 1e-8 * a.norm().max(1.0);
        let on_axis = eigs.iter().any(|z| z.re.abs() <= axis_tol);
        let d = crate::dichotomy::detect_dichotomy(a, crate::tol::GAP_TOL)?.0;
        if on_axis {
            return Ok(Some(vec![Check::holds(
                d.has_dichotomy != DichotomyVerdict::Yes,
                "imaginary-axis eigenvalue but dichotomy = yes",
            )]));
        }
        let negative = eigs.iter().filter(|z| z.re < 0.0).count();
        Ok(Some(vec![Check::holds(
            d.has_dichotomy == DichotomyVerdict::Yes && d.stable_dim == negative,
            format!("stable_dim {} vs {negative} eigenvalues in Re < 0 ({:?})", d.stable_dim, d.has_dichotomy),
        )]))
    })
}

/// The difference bound on `t ∈ (0, 5]` for seeded pairs `C₂ = C₁ + r·E`.
pub fn dichotomy_difference_bound(cfg: &SuiteConfig) -> Battery {
    let env_tol = cfg.tolerances.env_tol;
    let pairs = cfg.draws.min(DIFFERENCE_PAIRS);
    let results: Vec<Result<(Status, f64, Option<f64>, usize)>> = (0..pairs)
        .into_par_iter()
        .map(|i| {
            let inst = perturbation_instance(cfg.seed, S_DIFFERENCE, i, DRAW_DIM)?;
            let env = certify_growth_envelope_with(&inst.a, inst.omega, env_tol)?;
            let mut rng = draw_rng(cfg.seed, S_DIFFERENCE + 100, i);
            let r = rng.random_range(1e-3..0.3);
            let c2 = &inst.c + &random_with_norm(&mut rng, DRAW_DIM, r);
            let eps0 = 2.0 * (&inst.c - &c2).norm();
            let t = ScalarGrid::linear(0.1, 5.0, 50)?;
            let b = semigroup_difference_bound(&inst.a, &inst.c, &c2, &env, eps0, &t)?;
            Ok((b.status, b.min_slack, b.witness_t, b.literal_violations))
        })
        .collect();
    let mut literal = 0usize;
    let outcomes = results
        .into_iter()
        .map(|r| {
            let (status, slack, witness_t, lit) = r?;
            literal += (lit > 0) as usize;
            Ok(Some(vec![Check {
                status,
                slack,
                witness: format!("violated at t = {witness_t:?}"),
            }]))
        })
        .collect();
    let labels: Vec<String> = (0..pairs).map(draw_label("difference")).collect();
    let mut battery = fold("dichotomy.difference_bound", outcomes, &labels);
    battery.notes.push(("pairs_violating_literal_exponent".into(), literal as f64));
    battery
}

/// Sweep `C₂ = s·E`, `s ∈ {0} ∪ [10⁻⁴, 1]`, from a dichotomous `A + C₁`; a
/// certified `s` must survive the a-posteriori spectrum check.
pub fn dichotomy_persistence(cfg: &SuiteConfig) -> Battery {
    let seeds = cfg.draws.min(PERSISTENCE_SEEDS);
    let env_tol = cfg.tolerances.env_tol;
    let results: Vec<Result<(Vec<Check>, usize)>> = (0..seeds)
        .into_par_iter()
        .map(|i| {
            let mut rng = draw_rng(cfg.seed, S_PERSIST, i);
            let a = dichotomous_matrix(&mut rng, DICHOTOMY_DIM)?;
            let e = random_with_norm(&mut rng, DICHOTOMY_DIM, 1.0);
            let omega = catalog_omega(&a)?;
            let env = certify_growth_envelope_with(&a, omega, env_tol)?;
            let grid = default_mu_grid(&a, omega, 32)?;
            let c1 = LinearOperator::zeros(DICHOTOMY_DIM);
            let mut checks = Vec::new();
            let mut certified = 0;
            for k in 0..PERSISTENCE_STEPS {
                // s = 0, then geometric from 10⁻⁴ to 1.
                let s = if k == 0 {
                    0.0
                } else {
                    1e-4 * 1e4f64.powf((k - 1) as f64 / (PERSISTENCE_STEPS - 2) as f64)
                };
                let r = persistence_margin(&a, &c1, &e.scale_real(s), &env, &grid)?;
                certified += r.certified as usize;
                checks.push(Check::holds(
                    r.consistent,
                    format!("certified but {:?} at s = {s}", r.a_posteriori),
                ));
            }
            Ok((checks, certified))
        })
        .collect();
    let mut certified_total = 0;
    let outcomes = results
        .into_iter()
        .map(|r| {
            let (checks, certified) = r?;
            certified_total += certified;
            Ok(Some(checks))
        })
        .collect();
    let labels: Vec<String> = (0..seeds).map(draw_label("persistence")).collect();
    let mut battery = fold("dichotomy.persistence", outcomes, &labels);
    battery.notes.push(("certified_steps".into(), certified_total as f64));
    battery
}

pub fn run_batteries(cfg: &SuiteConfig) -> Vec<Battery> {
    let mut out = vec![
        catalog_determinism(cfg),
        core_resolvent_residual(cfg),
        core_first_resolvent_identity(cfg),
        core_laurent_tail(cfg),
        core_semigroup_law(cfg),
        hy_resolvent_powers(cfg),
        hy_envelope_soundness(cfg),
        hy_shift_covariance(cfg),
        hy_renorm_sandwich(cfg),
        perturbation_residuals(cfg),
        perturbation_generation(cfg),
        perturbation_a_norm_laws(cfg),
        perturbation_mode_agreement(cfg),
        dichotomy_yosida_oracle(cfg),
        dichotomy_yosida_metric(cfg),
    ];
    let (stated, scaled) = dichotomy_yosida_theorem(cfg);
    out.push(stated);
    out.push(scaled);
    out.push(dichotomy_projection_laws(cfg));
    out.push(dichotomy_stable_dim(cfg));
    out.push(dichotomy_difference_bound(cfg));
    out.push(dichotomy_persistence(cfg));
    out
}

/// Runs every battery and assembles the report.
pub fn run_suite(cfg: &SuiteConfig) -> AnalysisReport {
    let mut report = AnalysisReport::new("suite", cfg.tolerances);
    report.set_input("seed", cfg.seed);
    report.set_input("dims", &cfg.dims);
    report.set_input("draws", cfg.draws);
    report.set_input("draw_dim", DRAW_DIM);
    report.set_input("catalog", catalog_specs(cfg).iter().map(|s| s.to_uri()).collect::<Vec<_>>());
    let batteries = run_batteries(cfg);
    for b in &batteries {
        report.push(b.verdict());
    }
    report.set_result("batteries", &batteries);
    report
}
