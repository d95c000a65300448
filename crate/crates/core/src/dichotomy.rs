//! Yosida distance, exponential dichotomy and its persistence.
//!
//! A dichotomy is read off `σ(T(1))`: no eigenvalue on the unit circle.
//! The projection `P` is the Riesz projection of `T(1)` onto the
//! eigenvalues inside the disc, built from a reordered Schur form. `N` and
//! `α` come from certifying growth envelopes of `A` compressed to `Im P`
//! and of `−A` compressed to `ker P` (both subspaces are invariant, so the
//! compressions are similar to the restrictions in the Euclidean norm).
//!
//! Persistence is certified against a safety radius for `T_{A+C₁}(1)`: the
//! smaller of `circle_gap/(2‖P‖)` and a sampled lower bound on
//! `min_{|z|=1} σ_min(z − T_{A+C₁}(1))`. The second term alone is already
//! sufficient by the pseudospectral inclusion; the first keeps the radius
//! conservative when `P` is ill-conditioned.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::expm::{expm, matrix_exponential};
use crate::grid::ScalarGrid;
use crate::hille_yosida::{certify_growth_envelope, GrowthEnvelope};
use crate::operator::{min_singular_value, norm2, resolvent_real, LinearOperator, Mat};
use crate::perturbation::a_norm;
use crate::report::serialize_complex_vec;
use crate::schur::{complex_schur, spectral_split, SpectralSplit};
use crate::tol;
use crate::verdict::Status;

/// Doublings in the λ-sequence (13 points).
const LAMBDA_DOUBLINGS: i32 = 12;
/// Relative decay-rate reductions tried when certifying block envelopes.
const RATE_BACKOFF: [f64; 4] = [0.0, 1e-2, 0.1, 0.5];
/// Unit-circle samples for the pseudospectral radius.
const CIRCLE_SAMPLES: usize = 1024;
/// A gap below this many ulps (relative) is treated as an exact hit.
const EXACT_HIT: f64 = 16.0 * f64::EPSILON;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct YosidaDistanceEstimate {
    pub value: f64,
    pub lambda_sequence: Vec<f64>,
    /// `λ²‖R(λ,A) − R(λ,B)‖`.
    pub raw_values: Vec<f64>,
    /// First-order Richardson extrapolants `2v(2λ) − v(λ)`.
    pub extrapolants: Vec<f64>,
    pub extrapolation_order: u32,
    pub convergence_flag: bool,
    /// `‖A − B‖`, the exact limit for matrices.
    pub oracle: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct YosidaComparison {
    pub d: f64,
    /// `‖C₁ − C₂‖_A`.
    pub bound: f64,
    pub ok: bool,
    pub status: Status,
    /// `M·‖C₁ − C₂‖_A`, which always dominates `‖C₁ − C₂‖`.
    pub scaled_bound: f64,
    pub scaled_status: Status,
    pub m: f64,
    pub estimate: YosidaDistanceEstimate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DichotomyVerdict {
    Yes,
    No,
    Marginal,
}

#[derive(Debug, Clone, Serialize)]
pub struct DichotomyData {
    pub has_dichotomy: DichotomyVerdict,
    #[serde(skip)]
    pub projection: Option<LinearOperator>,
    pub n: Option<f64>,
    pub alpha: Option<f64>,
    /// `min over σ(T(1)) of ||z| − 1|`.
    pub circle_gap: f64,
    pub stable_dim: usize,
    #[serde(serialize_with = "serialize_complex_vec")]
    pub t1_spectrum: Vec<Complex64>,
    /// `‖P‖`, the condition of the splitting.
    pub kappa: Option<f64>,
    /// `‖P² − P‖ / (1 + ‖P‖²)`.
    pub projection_residual: Option<f64>,
    /// `‖T(1)P − PT(1)‖ / max(1, ‖T(1)‖‖P‖)`.
    pub commutation_residual: Option<f64>,
    pub forward_env: Option<GrowthEnvelope>,
    pub backward_env: Option<GrowthEnvelope>,
}

impl DichotomyData {
    pub fn projection_rows(&self) -> Option<Vec<Vec<[f64; 2]>>> {
        self.projection.as_ref().map(|p| p.to_rows())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StabilityVerdict {
    Stable,
    Unstable,
    Marginal,
}

impl StabilityVerdict {
    /// `None` for marginal.
    pub fn as_bool(self) -> Option<bool> {
        match self {
            StabilityVerdict::Stable => Some(true),
            StabilityVerdict::Unstable => Some(false),
            StabilityVerdict::Marginal => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityCheck {
    pub verdict: StabilityVerdict,
    /// `r_σ(T(1))`.
    pub spectral_radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DifferenceSample {
    pub t: f64,
    /// `‖T_{A+C₁}(t) − T_{A+C₂}(t)‖`.
    pub lhs: f64,
    pub bound: f64,
    /// `tM²e^{4ω₀t}d_Y` taken literally.
    pub literal_bound: f64,
    pub abs_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DifferenceBound {
    pub omega0: f64,
    pub eps0: f64,
    /// `M²`.
    pub coefficient: f64,
    /// `‖C₁‖` is the operator (spectral) norm.
    pub c1_norm: f64,
    pub c1_norm_kind: &'static str,
    pub d_y: f64,
    /// Exponent rate actually used: `4ω₀` when `ω₀ ≥ 0`, else `ω₀`.
    pub exponent_rate: f64,
    pub samples: Vec<DifferenceSample>,
    /// `min_t (bound + abs_tol − lhs)`.
    pub min_slack: f64,
    pub status: Status,
    pub witness_t: Option<f64>,
    pub literal_status: Status,
    pub literal_violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityPersistence {
    pub n0: u32,
    pub norm_c1: f64,
    pub norm_c2: f64,
    pub persists: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PersistenceReport {
    pub circle_gap: f64,
    pub kappa: f64,
    pub heuristic_radius: f64,
    pub pseudospectral_radius: f64,
    pub safety_radius: f64,
    /// `‖C₁ − C₂‖_A`.
    pub a_norm_diff: f64,
    pub operator_norm_diff: f64,
    pub eps0: f64,
    pub omega0: f64,
    /// `M²e^{4ω₀}‖C₁ − C₂‖_A`.
    pub a_norm_bound: f64,
    /// `M²e^{rate}‖C₁ − C₂‖`, a proven bound on `‖T₁(1) − T₂(1)‖`.
    pub sound_bound: f64,
    pub certified: bool,
    /// `‖T_{A+C₁}(1) − T_{A+C₂}(1)‖`.
    pub actual_difference: f64,
    pub a_posteriori: DichotomyVerdict,
    pub a_posteriori_gap: f64,
    pub stable_dim_c1: usize,
    pub stable_dim_c2: usize,
    /// False only for certified-but-false outcomes.
    pub consistent: bool,
    pub stability: Option<StabilityPersistence>,
}

/// `λ²‖R(λ,A) − R(λ,B)‖`, evaluated as `λ²‖R(λ,A)(A−B)R(λ,B)‖`.
fn scaled_resolvent_gap(a: &LinearOperator, b: &LinearOperator, diff: &Mat, lambda: f64) -> Result<f64> {
    let ra = resolvent_real(a, lambda)?;
    let rb = resolvent_real(b, lambda)?;
    Ok(lambda * lambda * norm2(&(ra.matrix() * diff * rb.matrix())))
}

/// `limsup_{λ→∞} λ²‖R(λ,A) − R(λ,B)‖` by Richardson extrapolation.
pub fn yosida_distance(a: &LinearOperator, b: &LinearOperator) -> Result<YosidaDistanceEstimate> {
    yosida_distance_with(a, b, tol::YOSIDA_CONV_TOL)
}

pub fn yosida_distance_with(
    a: &LinearOperator,
    b: &LinearOperator,
    conv_tol: f64,
) -> Result<YosidaDistanceEstimate> {
    a.check_same_dim(b)?;
    let diff = a.matrix() - b.matrix();
    let oracle = norm2(&diff);
    let lambda0 = 8.0 * 1f64.max(a.norm()).max(b.norm());
    let lambda_sequence: Vec<f64> = (0..=LAMBDA_DOUBLINGS)
        .map(|k| lambda0 * 2f64.powi(k))
        .collect();
    let raw_values = lambda_sequence
        .iter()
        .map(|&l| scaled_resolvent_gap(a, b, &diff, l))
        .collect::<Result<Vec<_>>>()?;
    let extrapolants: Vec<f64> = raw_values.windows(2).map(|w| 2.0 * w[1] - w[0]).collect();
    let last = extrapolants[extrapolants.len() - 1];
    let prev = extrapolants[extrapolants.len() - 2];
    let convergence_flag = (last - prev).abs() <= conv_tol * last.abs().max(f64::MIN_POSITIVE);
    Ok(YosidaDistanceEstimate {
        value: last.max(0.0),
        lambda_sequence,
        raw_values,
        extrapolants,
        extrapolation_order: 1,
        convergence_flag,
        oracle,
    })
}

/// Compares `d_Y(A+C₁, A+C₂)` with `‖C₁ − C₂‖_A`.
pub fn yosida_vs_anorm(
    a: &LinearOperator,
    c1: &LinearOperator,
    c2: &LinearOperator,
    env: &GrowthEnvelope,
    mu_grid: &ScalarGrid,
    power_tol: f64,
) -> Result<YosidaComparison> {
    a.check_same_dim(c1)?;
    a.check_same_dim(c2)?;
    let estimate = yosida_distance(&(a + c1), &(a + c2))?;
    let d = estimate.value;
    let bound = a_norm(a, &(c1 - c2), env, mu_grid)?.value;
    let status = ratio_status(d, bound, power_tol);
    let scaled_bound = env.m * bound;
    Ok(YosidaComparison {
        d,
        bound,
        ok: d <= bound * (1.0 + power_tol),
        status,
        scaled_bound,
        scaled_status: ratio_status(d, scaled_bound, power_tol),
        m: env.m,
        estimate,
    })
}

/// `d ≤ bound` as a ratio check, with `0 ≤ 0` tight.
fn ratio_status(d: f64, bound: f64, tol: f64) -> Status {
    if bound == 0.0 {
        if d == 0.0 { Status::Tight } else { Status::Fail }
    } else {
        Status::from_ratio(d / bound, tol)
    }
}

fn circle_distance(z: Complex64) -> f64 {
    (z.norm() - 1.0).abs()
}

fn classify_gap(spectrum: &[Complex64], gap_tol: f64) -> (DichotomyVerdict, f64) {
    let mut verdict = DichotomyVerdict::Yes;
    let mut gap = f64::INFINITY;
    for &z in spectrum {
        let g = circle_distance(z);
        gap = gap.min(g);
        let scale = z.norm().max(1.0);
        if g <= EXACT_HIT * scale {
            verdict = DichotomyVerdict::No;
        } else if g <= gap_tol * scale && verdict == DichotomyVerdict::Yes {
            verdict = DichotomyVerdict::Marginal;
        }
    }
    (verdict, gap)
}

/// Growth envelope with negative ω for a block whose spectrum lies in
/// the open left half-plane, backing off the rate until certified.
fn decay_envelope(block: &LinearOperator) -> Result<GrowthEnvelope> {
    let abscissa = block.spectrum()?.spectral_abscissa;
    if abscissa >= 0.0 {
        return Err(LabError::Computation(format!(
            "block abscissa {abscissa} is not negative"
        )));
    }
    let mut last_err = None;
    for eta in RATE_BACKOFF {
        match certify_growth_envelope(block, abscissa * (1.0 - eta)) {
            Ok(env) => return Ok(env),
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.expect("backoff list is nonempty"))
}

fn compress(a: &Mat, basis: &Mat) -> Result<LinearOperator> {
    LinearOperator::new(basis.adjoint() * a * basis)
}

/// Dichotomy detection from `σ(T(1))`, with `(P, N, α)` when it exists.
pub fn check_dichotomy(a: &LinearOperator) -> Result<DichotomyData> {
    check_dichotomy_with(a, tol::GAP_TOL)
}

pub fn check_dichotomy_with(a: &LinearOperator, gap_tol: f64) -> Result<DichotomyData> {
    let (mut data, split) = detect_dichotomy(a, gap_tol)?;
    let Some(split) = split else {
        return Ok(data);
    };
    let mut n_const: f64 = 1.0;
    let mut alpha = f64::INFINITY;
    if split.rank > 0 {
        let env = decay_envelope(&compress(a.matrix(), &split.range_basis)?)?;
        n_const = n_const.max(env.m);
        alpha = alpha.min(-env.omega);
        data.forward_env = Some(env);
    }
    if split.rank < a.dim() {
        let backward = compress(&(-a.matrix()), &split.kernel_basis)?;
        let env = decay_envelope(&backward)?;
        n_const = n_const.max(env.m);
        alpha = alpha.min(-env.omega);
        data.backward_env = Some(env);
    }
    data.n = Some(n_const);
    data.alpha = Some(alpha);
    Ok(data)
}

/// The spectral part of [`check_dichotomy`]: verdict, gap and `P`, but
/// no `(N, α)`.
pub fn detect_dichotomy(
    a: &LinearOperator,
    gap_tol: f64,
) -> Result<(DichotomyData, Option<SpectralSplit>)> {
    let v = expm(a.matrix(), 1.0)?;
    let t1_spectrum = complex_schur(&v)?.eigenvalues();
    let (verdict, circle_gap) = classify_gap(&t1_spectrum, gap_tol);
    let stable_dim = t1_spectrum
        .iter()
        .filter(|z| z.norm() < 1.0 && circle_distance(**z) > gap_tol * z.norm().max(1.0))
        .count();
    let mut data = DichotomyData {
        has_dichotomy: verdict,
        projection: None,
        n: None,
        alpha: None,
        circle_gap,
        stable_dim,
        t1_spectrum,
        kappa: None,
        projection_residual: None,
        commutation_residual: None,
        forward_env: None,
        backward_env: None,
    };
    if verdict != DichotomyVerdict::Yes {
        return Ok((data, None));
    }
    let split = spectral_split(&v, |z| z.norm() < 1.0)?;
    let p = &split.projection;
    let kappa = norm2(p);
    data.projection_residual = Some(norm2(&(p * p - p)) / (1.0 + kappa * kappa));
    data.commutation_residual =
        Some(norm2(&(&v * p - p * &v)) / (norm2(&v) * kappa).max(1.0));
    data.kappa = Some(kappa);
    data.stable_dim = split.rank;
    data.projection = Some(LinearOperator::new(split.projection.clone())?);
    Ok((data, Some(split)))
}

/// `r_σ(T(1)) < 1` with a marginal band of `gap_tol`.
pub fn exp_stability_check(a: &LinearOperator) -> Result<StabilityCheck> {
    exp_stability_check_with(a, tol::GAP_TOL)
}

pub fn exp_stability_check_with(a: &LinearOperator, gap_tol: f64) -> Result<StabilityCheck> {
    let v = matrix_exponential(a, 1.0)?;
    let r = v.spectrum()?.spectral_radius;
    let verdict = if (r - 1.0).abs() <= gap_tol {
        StabilityVerdict::Marginal
    } else if r < 1.0 {
        StabilityVerdict::Stable
    } else {
        StabilityVerdict::Unstable
    };
    Ok(StabilityCheck { verdict, spectral_radius: r })
}

/// Smallest integer `n₀ ≤ horizon` with `‖T(n₀)‖ < 1`.
pub fn decay_time(a: &LinearOperator, horizon: u32) -> Result<Option<(u32, f64)>> {
    let v = expm(a.matrix(), 1.0)?;
    let mut power = v.clone();
    for n0 in 1..=horizon {
        let norm = norm2(&power);
        if norm < 1.0 {
            return Ok(Some((n0, norm)));
        }
        if !norm.is_finite() {
            break;
        }
        power = &power * &v;
    }
    Ok(None)
}

fn difference_rate(omega0: f64) -> f64 {
    if omega0 >= 0.0 { 4.0 * omega0 } else { omega0 }
}

/// Samples `‖T_{A+C₁}(t) − T_{A+C₂}(t)‖ ≤ tM²e^{rate·t}d_Y` on `t_grid`.
pub fn semigroup_difference_bound(
    a: &LinearOperator,
    c1: &LinearOperator,
    c2: &LinearOperator,
    env: &GrowthEnvelope,
    eps0: f64,
    t_grid: &ScalarGrid,
) -> Result<DifferenceBound> {
    a.check_same_dim(c1)?;
    a.check_same_dim(c2)?;
    let diff_norm = (c1 - c2).norm();
    if !(eps0 > 0.0) || diff_norm >= eps0 {
        return Err(LabError::Input(format!(
            "need ‖C₁ − C₂‖ = {diff_norm} < ε₀ = {eps0}"
        )));
    }
    if let Some(&t) = t_grid.points().iter().find(|&&t| t < 0.0) {
        return Err(LabError::Input(format!("t-grid point {t} is negative")));
    }
    let c1_norm = c1.norm();
    let coefficient = env.m * env.m;
    let omega0 = env.omega + coefficient * (c1_norm + eps0);
    let exponent_rate = difference_rate(omega0);
    let s1 = a + c1;
    let s2 = a + c2;
    let d_y = yosida_distance(&s1, &s2)?.value;
    let samples = t_grid
        .points()
        .par_iter()
        .map(|&t| {
            let e1 = expm(s1.matrix(), t)?;
            let e2 = expm(s2.matrix(), t)?;
            let abs_tol = 1e-8 * norm2(&e1).max(norm2(&e2)).max(1.0);
            Ok(DifferenceSample {
                t,
                lhs: norm2(&(e1 - e2)),
                bound: t * coefficient * (exponent_rate * t).exp() * d_y,
                literal_bound: t * coefficient * (4.0 * omega0 * t).exp() * d_y,
                abs_tol,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut min_slack = f64::INFINITY;
    let mut status = Status::Pass;
    let mut witness_t = None;
    let mut literal_violations = 0;
    for s in &samples {
        let slack = s.bound + s.abs_tol - s.lhs;
        if slack < min_slack {
            min_slack = slack;
            witness_t = Some(s.t);
        }
        if s.lhs > s.literal_bound + s.abs_tol {
            literal_violations += 1;
        }
        if s.t == 0.0 {
            continue;
        }
        match Status::from_slack(s.lhs, s.bound, s.abs_tol) {
            Status::Fail => status = Status::Fail,
            Status::Tight if status == Status::Pass => status = Status::Tight,
            _ => {}
        }
    }
    let literal_status = if literal_violations > 0 { Status::Fail } else { Status::Pass };
    Ok(DifferenceBound {
        omega0,
        eps0,
        coefficient,
        c1_norm,
        c1_norm_kind: "operator",
        d_y,
        exponent_rate,
        samples,
        min_slack,
        status,
        witness_t: if status == Status::Fail { witness_t } else { None },
        literal_status,
        literal_violations,
    })
}

/// Sound lower bound on `min_{|z|=1} σ_min(z − V)`.
///
/// `σ_min(z − V)` is 1-Lipschitz in `z` and every point of the circle lies
/// within `π/CIRCLE_SAMPLES` of a sample.
pub fn pseudospectral_radius(v: &Mat) -> f64 {
    let n = v.nrows();
    let smallest = (0..CIRCLE_SAMPLES)
        .into_par_iter()
        .map(|k| {
            let z = Complex64::from_polar(1.0, 2.0 * PI * k as f64 / CIRCLE_SAMPLES as f64);
            let mut shifted = -v.clone();
            for i in 0..n {
                shifted[(i, i)] += z;
            }
            min_singular_value(&shifted)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    (smallest - PI / CIRCLE_SAMPLES as f64).max(0.0)
}

/// Certifies that `A + C₂` keeps the dichotomy of `A + C₁`.
pub fn persistence_margin(
    a: &LinearOperator,
    c1: &LinearOperator,
    c2: &LinearOperator,
    env: &GrowthEnvelope,
    mu_grid: &ScalarGrid,
) -> Result<PersistenceReport> {
    a.check_same_dim(c1)?;
    a.check_same_dim(c2)?;
    let s1 = a + c1;
    let s2 = a + c2;
    let base = detect_dichotomy(&s1, tol::GAP_TOL)?.0;
    if base.has_dichotomy != DichotomyVerdict::Yes {
        return Err(LabError::Precondition {
            reason: "A + C₁ has no exponential dichotomy".into(),
            value: base.circle_gap,
        });
    }
    let kappa = base.kappa.expect("set for a dichotomy");
    let v1 = expm(s1.matrix(), 1.0)?;
    let v2 = expm(s2.matrix(), 1.0)?;
    let heuristic_radius = base.circle_gap / (2.0 * kappa);
    let pseudospectral_radius = pseudospectral_radius(&v1);
    let safety_radius = heuristic_radius.min(pseudospectral_radius);

    let diff = c1 - c2;
    let operator_norm_diff = diff.norm();
    let a_norm_diff = a_norm(a, &diff, env, mu_grid)?.value;
    let eps0 = operator_norm_diff + 1e-12 * c1.norm().max(1.0);
    let coefficient = env.m * env.m;
    let omega0 = env.omega + coefficient * (c1.norm() + eps0);
    let a_norm_bound = coefficient * (4.0 * omega0).exp() * a_norm_diff;
    let sound_bound = coefficient * difference_rate(omega0).exp() * operator_norm_diff;
    let certified = a_norm_bound.max(sound_bound) < safety_radius;

    let after = detect_dichotomy(&s2, tol::GAP_TOL)?.0;
    let consistent = !certified
        || (after.has_dichotomy == DichotomyVerdict::Yes && after.stable_dim == base.stable_dim);

    let stability = match decay_time(&s1, tol::STABILITY_HORIZON)? {
        Some((n0, norm_c1)) => {
            let norm_c2 = norm2(&expm(s2.matrix(), n0 as f64)?);
            Some(StabilityPersistence { n0, norm_c1, norm_c2, persists: norm_c2 < 1.0 })
        }
        None => None,
    };

    Ok(PersistenceReport {
        circle_gap: base.circle_gap,
        kappa,
        heuristic_radius,
        pseudospectral_radius,
        safety_radius,
        a_norm_diff,
        operator_norm_diff,
        eps0,
        omega0,
        a_norm_bound,
        sound_bound,
        certified,
        actual_difference: norm2(&(v1 - v2)),
        a_posteriori: after.has_dichotomy,
        a_posteriori_gap: after.circle_gap,
        stable_dim_c1: base.stable_dim,
        stable_dim_c2: after.stable_dim,
        consistent,
        stability,
    })
}
