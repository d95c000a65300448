//! Command-line front end.
//!
//! Exit codes: 0 all checks pass (tight and marginal included), 1 some
//! check failed, 2 input or certification error, 3 internal error. A
//! report is produced in every case; with `--out` it is written next to
//! its sidecar CSVs, otherwise printed to stdout.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::catalog::resolve_source;
use crate::dichotomy::{
    check_dichotomy, exp_stability_check, persistence_margin, semigroup_difference_bound,
    yosida_distance, yosida_vs_anorm, DichotomyVerdict, StabilityVerdict,
};
use crate::error::{LabError, Result};
use crate::expm::matrix_exponential;
use crate::grid::ScalarGrid;
use crate::hille_yosida::{
    certify_growth_envelope_with, default_lambda_grid, verify_resolvent_powers_with,
    GrowthEnvelope, TAIL_JUSTIFICATION,
};
use crate::matrix_io::{save_matrix, MatrixFormat};
use crate::operator::LinearOperator;
use crate::perturbation::{
    certify_perturbed_growth_with, default_mu_grid, perturbed_resolvent_bound_report,
    relative_bound_k,
};
use crate::report::{AnalysisReport, Curve};
use crate::suite::{run_suite, SuiteConfig, DEFAULT_DRAWS, DEFAULT_SEED};
use crate::tol::Tolerances;
use crate::verdict::{Status, Verdict};

pub const THREADS_ENV: &str = "SEMIGROUP_LAB_THREADS";

#[derive(Debug, Parser)]
#[command(name = "semigroup-lab", version, about = "Perturbation checks for matrix semigroups")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Growth envelope and resolvent power bounds of a generator.
    Analyze {
        source: String,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        omega: OmegaArg,
        /// Points of the geometric λ-grid.
        #[arg(long, default_value_t = 32)]
        lambda_points: usize,
        /// Highest resolvent power checked.
        #[arg(long, default_value_t = 20)]
        n_max: usize,
        #[command(flatten)]
        t: TimeGrid,
    },
    /// Relative bound K, A-norm and the perturbed generation certificate.
    Perturb {
        a: String,
        c: String,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        omega: OmegaArg,
        #[command(flatten)]
        mu: MuGrid,
        #[command(flatten)]
        t: TimeGrid,
    },
    /// Yosida distance between two generators, or between A+C₁ and A+C₂.
    Distance {
        a: String,
        /// Second generator (two-operator mode).
        b: Option<String>,
        #[arg(long, requires = "c2", conflicts_with = "b")]
        c1: Option<String>,
        #[arg(long, requires = "c1")]
        c2: Option<String>,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        omega: OmegaArg,
        #[command(flatten)]
        mu: MuGrid,
    },
    /// Dichotomy data, stability and (with C₁, C₂) persistence.
    Dichotomy {
        a: String,
        #[arg(long, requires = "c2")]
        c1: Option<String>,
        #[arg(long, requires = "c1")]
        c2: Option<String>,
        /// ε₀ for the difference bound; defaults to 2‖C₁ − C₂‖.
        #[arg(long)]
        eps0: Option<f64>,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        omega: OmegaArg,
        #[command(flatten)]
        mu: MuGrid,
        #[command(flatten)]
        t: TimeGrid,
    },
    /// Every property battery across the catalog and random ensembles.
    Suite {
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Catalog dimensions, comma-separated.
        #[arg(long, value_delimiter = ',', default_values_t = vec![2usize, 4, 8, 16])]
        dims: Vec<usize>,
        #[arg(long, default_value_t = DEFAULT_DRAWS)]
        draws: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Writes an operator source to a matrix file.
    Export {
        source: String,
        path: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Args, Clone)]
pub struct Common {
    /// Overrides the resolvent power tolerance.
    #[arg(long, allow_negative_numbers = true)]
    pub tol: Option<f64>,
    /// Matrix file format (mm or csv); inferred from the extension if absent.
    #[arg(long)]
    pub format: Option<MatrixFormat>,
    /// Report path; sidecar CSVs are written next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Record per-stage wall-clock times (makes reports non-reproducible).
    #[arg(long)]
    pub timings: bool,
}

#[derive(Debug, Args, Clone)]
pub struct OmegaArg {
    /// Growth rate ω; defaults to the spectral abscissa plus 0.1.
    #[arg(long, allow_negative_numbers = true)]
    pub omega: Option<f64>,
}

#[derive(Debug, Args, Clone)]
pub struct MuGrid {
    /// Smallest μ (absolute, must exceed ω).
    #[arg(long, allow_negative_numbers = true)]
    pub mu_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub mu_max: Option<f64>,
    #[arg(long, default_value_t = 64)]
    pub mu_points: usize,
}

#[derive(Debug, Args, Clone)]
pub struct TimeGrid {
    #[arg(long, default_value_t = 10.0)]
    pub t_max: f64,
    #[arg(long, default_value_t = 64)]
    pub t_points: usize,
}

impl Common {
    fn tolerances(&self) -> Tolerances {
        match self.tol {
            Some(t) => Tolerances::default().with_power_tol(t),
            None => Tolerances::default(),
        }
    }
}

impl MuGrid {
    fn grid(&self, a: &LinearOperator, omega: f64) -> Result<ScalarGrid> {
        let default = default_mu_grid(a, omega, self.mu_points)?;
        let lo = self.mu_min.unwrap_or(default.min());
        let hi = self.mu_max.unwrap_or(default.max());
        if !(lo > omega) {
            return Err(LabError::Input(format!("--mu-min {lo} must exceed ω = {omega}")));
        }
        ScalarGrid::geometric_offset(omega, lo - omega, hi - omega, self.mu_points)
    }

    fn echo(&self) -> serde_json::Value {
        json!({ "mu_min": self.mu_min, "mu_max": self.mu_max, "mu_points": self.mu_points })
    }
}

impl TimeGrid {
    fn grid(&self) -> Result<ScalarGrid> {
        if !(self.t_max > 0.0) {
            return Err(LabError::Input(format!("--t-max {} must be positive", self.t_max)));
        }
        ScalarGrid::linear(0.0, self.t_max, self.t_points)
    }

    fn echo(&self) -> serde_json::Value {
        json!({ "t_max": self.t_max, "t_points": self.t_points })
    }
}

/// Maps an error to its exit code.
pub fn exit_code_for(err: &LabError) -> i32 {
    match err {
        LabError::Computation(_) => 3,
        _ => 2,
    }
}

fn error_kind(err: &LabError) -> &'static str {
    match err {
        LabError::Input(_) => "input",
        LabError::Shape(_) => "shape",
        LabError::Singular { .. } => "singular",
        LabError::Computation(_) => "internal",
        LabError::Range(_) => "range",
        LabError::Certification { .. } => "certification failure",
        LabError::Precondition { .. } => "precondition",
        LabError::Parse { .. } => "parse",
        LabError::Io(_) => "io",
    }
}

/// Times stages when `--timings` is on.
struct Stopwatch {
    start: Instant,
}

impl Stopwatch {
    fn start() -> Self {
        Stopwatch { start: Instant::now() }
    }

    fn lap(&mut self, report: &mut AnalysisReport, stage: &str) {
        report.record_timing(stage, self.start.elapsed().as_secs_f64() * 1e3);
        self.start = Instant::now();
    }
}

fn new_report(command: &str, common: &Common) -> AnalysisReport {
    let mut report = AnalysisReport::new(command, common.tolerances());
    if common.timings {
        report.timings = Some(BTreeMap::new());
    }
    report
}

fn load(source: &str, common: &Common) -> Result<LinearOperator> {
    resolve_source(source, common.format)
}

fn resolve_omega(a: &LinearOperator, omega: &OmegaArg) -> Result<f64> {
    match omega.omega {
        Some(w) if w.is_finite() => Ok(w),
        Some(w) => Err(LabError::Input(format!("--omega {w} is not finite"))),
        None => Ok(a.spectrum()?.spectral_abscissa + 0.1),
    }
}

fn operator_summary(a: &LinearOperator) -> Result<serde_json::Value> {
    Ok(json!({
        "label": a.label(),
        "dim": a.dim(),
        "norm": a.norm(),
        "spectrum": a.spectrum()?,
    }))
}

/// `(t, ‖T(t)‖, Me^{ωt})` on a linear grid.
fn envelope_curve(a: &LinearOperator, env: &GrowthEnvelope, t: &ScalarGrid) -> Result<Curve> {
    let rows = t
        .points()
        .iter()
        .map(|&t| Ok(vec![t, matrix_exponential(a, t)?.norm(), env.bound_at(t)]))
        .collect::<Result<_>>()?;
    Ok(Curve::new("envelope", &["t", "norm", "bound"], rows))
}

fn analyze(
    report: &mut AnalysisReport,
    clock: &mut Stopwatch,
    source: &str,
    common: &Common,
    omega: &OmegaArg,
    lambda_points: usize,
    n_max: usize,
    t: &TimeGrid,
) -> Result<()> {
    report.set_input("source", source);
    report.set_input("omega", omega.omega);
    report.set_input("lambda_points", lambda_points);
    report.set_input("n_max", n_max);
    report.set_input("t_grid", t.echo());
    let a = load(source, common)?;
    let w = resolve_omega(&a, omega)?;
    report.set_input("omega_used", w);
    report.set_result("operator", operator_summary(&a)?);
    let tols = report.tolerances;
    let env = certify_growth_envelope_with(&a, w, tols.env_tol)?;
    clock.lap(report, "envelope");
    report.set_result("envelope", &env);
    report.set_result("tail_justification", TAIL_JUSTIFICATION);
    report.push(Verdict::new(
        "envelope",
        if env.converged { Status::Pass } else { Status::Marginal },
        env.margin,
    ));
    let grid = default_lambda_grid(&a, w, lambda_points)?;
    let powers = verify_resolvent_powers_with(&a, &env, &grid, n_max, tols.power_tol)?;
    clock.lap(report, "resolvent_powers");
    report.push(Verdict::new("resolvent_powers", powers.status, 1.0 + tols.power_tol - powers.worst_ratio));
    report.set_result("resolvent_powers", &powers);
    report.curves.push(envelope_curve(&a, &env, &t.grid()?)?);
    clock.lap(report, "envelope_curve");
    Ok(())
}

fn perturb(
    report: &mut AnalysisReport,
    clock: &mut Stopwatch,
    a_src: &str,
    c_src: &str,
    common: &Common,
    omega: &OmegaArg,
    mu: &MuGrid,
    t: &TimeGrid,
) -> Result<()> {
    report.set_input("a", a_src);
    report.set_input("c", c_src);
    report.set_input("omega", omega.omega);
    report.set_input("mu_grid", mu.echo());
    report.set_input("t_grid", t.echo());
    let a = load(a_src, common)?;
    let c = load(c_src, common)?;
    a.check_same_dim(&c)?;
    let w = resolve_omega(&a, omega)?;
    report.set_input("omega_used", w);
    let tols = report.tolerances;
    let env = certify_growth_envelope_with(&a, w, tols.env_tol)?;
    clock.lap(report, "envelope");
    report.set_result("envelope", &env);
    let mu_grid = mu.grid(&a, w)?;
    let kreport = relative_bound_k(&a, &c, &env, &mu_grid)?;
    report.set_result("k", kreport.k);
    report.set_result("a_norm", kreport.k / env.m);
    report.curves.push(Curve::new(
        "profile",
        &["mu", "value"],
        kreport.profile.iter().map(|&(m, v)| vec![m, v]).collect(),
    ));
    report.set_result("relative_bound", &kreport);
    clock.lap(report, "relative_bound");
    let cert = certify_perturbed_growth_with(&a, &c, &env, &mu_grid, &t.grid()?, true, tols.env_tol)?;
    clock.lap(report, "certificate");
    let claim = &cert.perturbed_env;
    let mut v = Verdict::new("generation_certificate", claim.status, claim.verified_margin);
    if cert.falsified {
        v = v.with_witness(format!("FALSIFIED at t = {}", claim.witness_t));
    }
    report.push(v);
    if let Some(b) = &cert.bounded_variant {
        report.push(Verdict::new("bounded_certificate", b.status, b.verified_margin));
    }
    report.curves.push(Curve::new(
        "certificate",
        &["t", "norm", "bound"],
        cert.samples.iter().map(|&(t, n, b)| vec![t, n, b]).collect(),
    ));
    report.set_result("certificate", &cert);
    if env.m == 1.0 {
        let floor = env.omega + kreport.k;
        let grid = ScalarGrid::geometric_offset(floor, mu_grid.min() - env.omega, mu_grid.max() - env.omega, mu.mu_points)?;
        let r = perturbed_resolvent_bound_report(&a, &c, &env, kreport.k, &grid, tols.power_tol)?;
        report.push(Verdict::new("perturbed_resolvent_bound", r.status, 1.0 + tols.power_tol - r.worst_ratio));
        report.set_result("perturbed_resolvent_bound", &r);
    }
    Ok(())
}

fn distance(
    report: &mut AnalysisReport,
    clock: &mut Stopwatch,
    a_src: &str,
    b_src: Option<&str>,
    c1_src: Option<&str>,
    c2_src: Option<&str>,
    common: &Common,
    omega: &OmegaArg,
    mu: &MuGrid,
) -> Result<()> {
    report.set_input("a", a_src);
    report.set_input("b", b_src);
    report.set_input("c1", c1_src);
    report.set_input("c2", c2_src);
    let a = load(a_src, common)?;
    let tols = report.tolerances;
    let estimate_verdicts = |report: &mut AnalysisReport, est: &crate::dichotomy::YosidaDistanceEstimate| {
        report.push(Verdict::new(
            "yosida_convergence",
            if est.convergence_flag { Status::Pass } else { Status::Marginal },
            0.0,
        ));
        let gap = (est.value - est.oracle).abs();
        let allowed = tols.yosida_conv_tol * (1.0 + est.oracle);
        report.push(Verdict::new(
            "yosida_oracle",
            if gap <= allowed { Status::Pass } else { Status::Fail },
            allowed - gap,
        ));
    };
    match (b_src, c1_src, c2_src) {
        (Some(b_src), None, None) => {
            let b = load(b_src, common)?;
            let est = yosida_distance(&a, &b)?;
            clock.lap(report, "yosida_distance");
            estimate_verdicts(report, &est);
            report.curves.push(yosida_curve(&est));
            report.set_result("yosida", &est);
        }
        (None, Some(c1), Some(c2)) => {
            report.set_input("omega", omega.omega);
            report.set_input("mu_grid", mu.echo());
            let c1 = load(c1, common)?;
            let c2 = load(c2, common)?;
            let w = resolve_omega(&a, omega)?;
            report.set_input("omega_used", w);
            let env = certify_growth_envelope_with(&a, w, tols.env_tol)?;
            clock.lap(report, "envelope");
            let grid = mu.grid(&a, w)?;
            let cmp = yosida_vs_anorm(&a, &c1, &c2, &env, &grid, tols.power_tol)?;
            clock.lap(report, "yosida_vs_anorm");
            estimate_verdicts(report, &cmp.estimate);
            report.push(Verdict::new("yosida_theorem", cmp.status, cmp.bound - cmp.d));
            report.push(Verdict::new("yosida_theorem_scaled", cmp.scaled_status, cmp.scaled_bound - cmp.d));
            report.set_result(
                "denominator_note",
                "the proof's denominator constant differs between displays; both vanish in the λ → ∞ limit",
            );
            report.curves.push(yosida_curve(&cmp.estimate));
            report.set_result("envelope", &env);
            report.set_result("comparison", &cmp);
        }
        _ => {
            return Err(LabError::Input(
                "distance needs either B or both --c1 and --c2".into(),
            ))
        }
    }
    Ok(())
}

fn yosida_curve(est: &crate::dichotomy::YosidaDistanceEstimate) -> Curve {
    Curve::new(
        "yosida",
        &["lambda", "value"],
        est.lambda_sequence
            .iter()
            .zip(&est.raw_values)
            .map(|(&l, &v)| vec![l, v])
            .collect(),
    )
}

#[allow(clippy::too_many_arguments)]
fn dichotomy(
    report: &mut AnalysisReport,
    clock: &mut Stopwatch,
    a_src: &str,
    c1_src: Option<&str>,
    c2_src: Option<&str>,
    eps0: Option<f64>,
    common: &Common,
    omega: &OmegaArg,
    mu: &MuGrid,
    t: &TimeGrid,
) -> Result<()> {
    report.set_input("a", a_src);
    report.set_input("c1", c1_src);
    report.set_input("c2", c2_src);
    report.set_input("eps0", eps0);
    let a = load(a_src, common)?;
    let data = check_dichotomy(&a)?;
    clock.lap(report, "dichotomy");
    if let (Some(pr), Some(cr)) = (data.projection_residual, data.commutation_residual) {
        report.push(Verdict::new(
            "projection_laws",
            if pr <= 1e-9 && cr <= 1e-9 { Status::Pass } else { Status::Fail },
            1e-9 - pr.max(cr),
        ));
    }
    if data.has_dichotomy == DichotomyVerdict::Marginal {
        report.push(Verdict::new("dichotomy", Status::Marginal, data.circle_gap));
    }
    report.set_result("projection", data.projection_rows());
    report.set_result("dichotomy", &data);
    let stability = exp_stability_check(&a)?;
    if stability.verdict == StabilityVerdict::Marginal {
        report.push(Verdict::new("exp_stability", Status::Marginal, 1.0 - stability.spectral_radius));
    }
    report.set_result("exp_stability", &stability);

    let (Some(c1_src), Some(c2_src)) = (c1_src, c2_src) else {
        return Ok(());
    };
    report.set_input("omega", omega.omega);
    report.set_input("mu_grid", mu.echo());
    report.set_input("t_grid", t.echo());
    let c1 = load(c1_src, common)?;
    let c2 = load(c2_src, common)?;
    let w = resolve_omega(&a, omega)?;
    report.set_input("omega_used", w);
    let env = certify_growth_envelope_with(&a, w, report.tolerances.env_tol)?;
    clock.lap(report, "envelope");
    report.set_result("envelope", &env);
    let grid = mu.grid(&a, w)?;
    let persistence = persistence_margin(&a, &c1, &c2, &env, &grid)?;
    clock.lap(report, "persistence");
    report.push(Verdict::new(
        "persistence",
        if persistence.consistent { Status::Pass } else { Status::Fail },
        persistence.safety_radius - persistence.sound_bound,
    ));
    report.set_result("persistence", &persistence);

    let diff = (&c1 - &c2).norm();
    let eps0 = eps0.unwrap_or(if diff > 0.0 { 2.0 * diff } else { 1e-12 });
    let t_grid = t.grid()?;
    let bound = semigroup_difference_bound(&a, &c1, &c2, &env, eps0, &t_grid)?;
    clock.lap(report, "difference_bound");
    let mut v = Verdict::new("difference_bound", bound.status, bound.min_slack);
    if let Some(t) = bound.witness_t {
        v = v.with_witness(format!("violated at t = {t}"));
    }
    report.push(v);
    report.curves.push(Curve::new(
        "difference",
        &["t", "lhs", "bound", "literal_bound"],
        bound.samples.iter().map(|s| vec![s.t, s.lhs, s.bound, s.literal_bound]).collect(),
    ));
    report.set_result("difference_bound", &bound);
    Ok(())
}

fn export(report: &mut AnalysisReport, source: &str, path: &PathBuf, common: &Common) -> Result<()> {
    report.set_input("source", source);
    report.set_input("path", path.display().to_string());
    let a = load(source, common)?;
    let format = match common.format {
        Some(f) => f,
        None => MatrixFormat::from_path(path)?,
    };
    save_matrix(&a, path, format)?;
    report.set_result("format", format);
    report.set_result("dim", a.dim());
    Ok(())
}

fn common_of(cmd: &Command) -> &Common {
    match cmd {
        Command::Analyze { common, .. }
        | Command::Perturb { common, .. }
        | Command::Distance { common, .. }
        | Command::Dichotomy { common, .. }
        | Command::Suite { common, .. }
        | Command::Export { common, .. } => common,
    }
}

fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Analyze { .. } => "analyze",
        Command::Perturb { .. } => "perturb",
        Command::Distance { .. } => "distance",
        Command::Dichotomy { .. } => "dichotomy",
        Command::Suite { .. } => "suite",
        Command::Export { .. } => "export",
    }
}

/// Runs a parsed command; returns the report and the exit code.
pub fn execute(cli: &Cli) -> (AnalysisReport, i32) {
    let common = common_of(&cli.command);
    let mut report = new_report(command_name(&cli.command), common);
    let mut clock = Stopwatch::start();
    let outcome = match &cli.command {
        Command::Analyze { source, omega, lambda_points, n_max, t, .. } => {
            analyze(&mut report, &mut clock, source, common, omega, *lambda_points, *n_max, t)
        }
        Command::Perturb { a, c, omega, mu, t, .. } => {
            perturb(&mut report, &mut clock, a, c, common, omega, mu, t)
        }
        Command::Distance { a, b, c1, c2, omega, mu, .. } => distance(
            &mut report,
            &mut clock,
            a,
            b.as_deref(),
            c1.as_deref(),
            c2.as_deref(),
            common,
            omega,
            mu,
        ),
        Command::Dichotomy { a, c1, c2, eps0, omega, mu, t, .. } => dichotomy(
            &mut report,
            &mut clock,
            a,
            c1.as_deref(),
            c2.as_deref(),
            *eps0,
            common,
            omega,
            mu,
            t,
        ),
        Command::Suite { seed, dims, draws, .. } => {
            let cfg = SuiteConfig {
                seed: *seed,
                dims: dims.clone(),
                draws: *draws,
                tolerances: common.tolerances(),
            };
            let timings = report.timings.take();
            report = run_suite(&cfg);
            report.timings = timings;
            clock.lap(&mut report, "suite");
            Ok(())
        }
        Command::Export { source, path, .. } => export(&mut report, source, path, common),
    };
    let code = match outcome {
        Ok(()) => {
            if report.any_fail() {
                1
            } else {
                0
            }
        }
        Err(e) => {
            let curve = match &e {
                LabError::Certification { curve, .. } => curve.clone(),
                _ => Vec::new(),
            };
            report.set_result(
                "error",
                json!({ "kind": error_kind(&e), "message": e.to_string(), "curve": curve }),
            );
            exit_code_for(&e)
        }
    };
    (report, code)
}

/// Caps the global rayon pool from `SEMIGROUP_LAB_THREADS` (0 = auto).
pub fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| LabError::Input(format!("{THREADS_ENV}={raw} is not a thread count")))?;
    if n > 0 {
        // Fails only if a pool already exists, in which case it is kept.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Parses `args`, runs the command, emits the report; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return 2;
    }
    let (report, code) = execute(&cli);
    if let Some(err) = report.results.get("error") {
        eprintln!("error: {}", err["message"].as_str().unwrap_or("unknown"));
    }
    match &common_of(&cli.command).out {
        Some(path) => {
            if let Err(e) = report.write_to(path) {
                eprintln!("error: {e}");
                return 2;
            }
        }
        None => println!("{}", report.to_json()),
    }
    code
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exec(args: &[&str]) -> (AnalysisReport, i32) {
        let mut full = vec!["semigroup-lab"];
        full.extend_from_slice(args);
        execute(&Cli::try_parse_from(full).unwrap())
    }

    #[test]
    fn analyze_zero_is_tight() {
        let (r, code) = exec(&["analyze", "catalog:zero:2", "--omega", "0"]);
        assert_eq!(code, 0);
        assert_eq!(r.results["envelope"]["m"], 1.0);
        assert_eq!(r.results["resolvent_powers"]["status"], "tight");
    }

    #[test]
    fn analyze_below_abscissa_is_certification_failure() {
        let (r, code) = exec(&["analyze", "catalog:jordan:2:-1", "--omega", "-2"]);
        assert_eq!(code, 2);
        assert_eq!(r.results["error"]["kind"], "certification failure");
    }

    #[test]
    fn perturb_scalar_example() {
        let (r, code) = exec(&[
            "perturb",
            "catalog:diagonal:1:-1",
            "catalog:diagonal:1:0.5",
            "--omega",
            "-1",
        ]);
        assert_eq!(code, 0);
        let k = r.results["k"].as_f64().unwrap();
        assert!((k - 0.5).abs() < 1e-12);
        let w = r.results["certificate"]["perturbed_env"]["omega"].as_f64().unwrap();
        assert!((w + 0.5).abs() < 1e-12);
    }

    #[test]
    fn distance_modes() {
        let (r, code) = exec(&["distance", "catalog:jordan:3:-1", "catalog:jordan:3:-1"]);
        assert_eq!(code, 0);
        assert_eq!(r.results["yosida"]["value"], 0.0);
        let (r, code) = exec(&[
            "distance",
            "catalog:zero:2",
            "--c1",
            "catalog:jordan:2:1",
            "--c2",
            "catalog:jordan:2:1",
            "--omega",
            "0",
        ]);
        assert_eq!(code, 0);
        assert_eq!(r.results["comparison"]["d"], 0.0);
    }

    #[test]
    fn dichotomy_examples() {
        let (r, code) = exec(&["dichotomy", "catalog:diagonal:2:-1,1"]);
        assert_eq!(code, 0);
        assert_eq!(r.results["dichotomy"]["has_dichotomy"], "yes");
        let (r, _) = exec(&["dichotomy", "catalog:rotation:2:3.141592653589793"]);
        assert_eq!(r.results["dichotomy"]["has_dichotomy"], "no");
        let (r, code) = exec(&[
            "dichotomy",
            "catalog:diagonal:2:-1,1",
            "--c1",
            "catalog:zero:2",
            "--c2",
            "catalog:diagonal:2:0.001,0.001",
            "--omega",
            "1",
        ]);
        assert_eq!(code, 0, "{}", r.to_json());
        assert_eq!(r.results["persistence"]["certified"], true);
    }

    #[test]
    fn bad_source_is_input_error() {
        let (_, code) = exec(&["analyze", "catalog:jordan:2"]);
        assert_eq!(code, 2);
        let (_, code) = exec(&["analyze", "/nonexistent/matrix.csv"]);
        assert_eq!(code, 2);
    }

    #[test]
    fn tiny_suite_and_injected_failure() {
        let (r, code) = exec(&["suite", "--draws", "0", "--dims", "2"]);
        assert_eq!(code, 0, "{}", r.to_json());
        let (r, code) = exec(&["suite", "--draws", "0", "--dims", "2", "--tol", "-1"]);
        assert_eq!(code, 1);
        let failed = r.verdicts.iter().find(|v| v.status == Status::Fail).unwrap();
        assert!(failed.witness.is_some());
    }
}
