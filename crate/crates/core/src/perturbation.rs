//! The generator/perturbation pair `(A, C)`.
//!
//! `K` is the relative bound `sup_{μ>ω} (μ−ω)‖CR(μ,A)‖`, evaluated on a
//! μ-grid and joined with its μ→∞ limit `‖C‖` (in finite dimensions
//! `(μ−ω)R(μ,A) → I`). The grid value is a lower estimate of the true
//! supremum, which is why the generation certificate re-checks its
//! envelope against sampled exponentials instead of trusting it.

use num_complex::Complex64;
use serde::{Serialize, Serializer};

use crate::error::{LabError, Result};
use crate::expm::matrix_exponential;
use crate::grid::ScalarGrid;
use crate::hille_yosida::GrowthEnvelope;
use crate::operator::{norm2, resolvent, resolvent_real, LinearOperator, Mat};
use crate::tol;
use crate::verdict::Status;

/// Where the supremum defining `K` is attained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ArgSup {
    At(f64),
    /// The μ→∞ limit dominates every grid value.
    Asymptotic,
}

impl Serialize for ArgSup {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ArgSup::At(mu) => s.serialize_f64(*mu),
            ArgSup::Asymptotic => s.serialize_str("asymptotic"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelativeBoundReport {
    pub k: f64,
    pub omega: f64,
    pub mu_grid: ScalarGrid,
    pub argsup_mu: ArgSup,
    /// `lim_{μ→∞} (μ−ω)‖CR(μ,A)‖ = ‖C‖`.
    pub limit_value: f64,
    /// `(μ, (μ−ω)‖CR(μ,A)‖)` pairs.
    pub profile: Vec<(f64, f64)>,
    /// Always true: `k` is a grid estimate of a supremum.
    pub grid_estimate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ANormValue {
    pub value: f64,
    pub m_used: f64,
    pub omega_used: f64,
    pub report: RelativeBoundReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ResolventMode {
    Factorized,
    Neumann,
    Direct,
}

#[derive(Debug, Clone)]
pub struct PerturbedResolvent {
    pub operator: LinearOperator,
    pub mode: ResolventMode,
    /// `‖CR(μ,A)‖`; not computed in direct mode.
    pub contraction: Option<f64>,
    /// Number of Neumann terms summed.
    pub terms: usize,
    /// A-priori tail bound `q^{k+1}/(1−q)` of the truncated series.
    pub truncation_bound: f64,
}

/// `(M, ω')` asserted for `A + C`, with its sampled verification.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeClaim {
    pub m: f64,
    pub omega: f64,
    pub status: Status,
    /// `min_t ((1+env_tol)·Me^{ω't} − ‖T_{A+C}(t)‖) / Me^{ω't}`.
    pub verified_margin: f64,
    /// Time of the largest `‖T_{A+C}(t)‖ / Me^{ω't}`.
    pub witness_t: f64,
    pub worst_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerationCertificate {
    pub base_env: GrowthEnvelope,
    pub k: f64,
    pub relative_bound: RelativeBoundReport,
    /// `(M, ω + M·K)`.
    pub perturbed_env: EnvelopeClaim,
    /// `(M, ω + M·‖C‖)`, for bounded `C`.
    pub bounded_variant: Option<EnvelopeClaim>,
    pub verified_margin: f64,
    pub falsified: bool,
    /// `(t, ‖T_{A+C}(t)‖, Me^{(ω+MK)t})` samples.
    pub samples: Vec<(f64, f64, f64)>,
}

/// Geometric μ-grid `ω + [10⁻³, 10⁶]·max(1, ‖A‖)`.
pub fn default_mu_grid(a: &LinearOperator, omega: f64, points: usize) -> Result<ScalarGrid> {
    let s = a.norm().max(1.0);
    ScalarGrid::geometric_offset(omega, 1e-3 * s, 1e6 * s, points)
}

fn check_grid_above(grid: &ScalarGrid, floor: f64) -> Result<()> {
    if let Some(&bad) = grid.points().iter().find(|&&mu| mu <= floor) {
        return Err(LabError::Input(format!(
            "grid point {bad} is not above {floor}"
        )));
    }
    Ok(())
}

/// `K = max(max_μ (μ−ω)‖CR(μ,A)‖, ‖C‖)` over the grid.
pub fn relative_bound_k(
    a: &LinearOperator,
    c: &LinearOperator,
    env: &GrowthEnvelope,
    mu_grid: &ScalarGrid,
) -> Result<RelativeBoundReport> {
    a.check_same_dim(c)?;
    check_grid_above(mu_grid, env.omega)?;
    let limit_value = c.norm();
    let profile: Vec<(f64, f64)> = if c.is_zero() {
        mu_grid.points().iter().map(|&mu| (mu, 0.0)).collect()
    } else {
        mu_grid
            .points()
            .iter()
            .map(|&mu| {
                let r = resolvent_real(a, mu)?;
                Ok((mu, (mu - env.omega) * norm2(&(c.matrix() * r.matrix()))))
            })
            .collect::<Result<_>>()?
    };
    let (best_mu, best) = profile
        .iter()
        .cloned()
        .fold((f64::NAN, f64::NEG_INFINITY), |acc, p| if p.1 > acc.1 { p } else { acc });
    // Rounding-level excess over the limit still counts as asymptotic.
    let argsup_mu = if best <= limit_value * (1.0 + 1e-12) {
        ArgSup::Asymptotic
    } else {
        ArgSup::At(best_mu)
    };
    Ok(RelativeBoundReport {
        k: best.max(limit_value),
        omega: env.omega,
        mu_grid: mu_grid.clone(),
        argsup_mu,
        limit_value,
        profile,
        grid_estimate: true,
    })
}

/// `‖C‖_A = K / M`.
pub fn a_norm(
    a: &LinearOperator,
    c: &LinearOperator,
    env: &GrowthEnvelope,
    mu_grid: &ScalarGrid,
) -> Result<ANormValue> {
    let report = relative_bound_k(a, c, env, mu_grid)?;
    Ok(ANormValue {
        value: report.k / env.m,
        m_used: env.m,
        omega_used: env.omega,
        report,
    })
}

/// `R(μ, A+C)` by one of three routes.
pub fn perturbed_resolvent(
    a: &LinearOperator,
    c: &LinearOperator,
    mu: f64,
    mode: ResolventMode,
) -> Result<PerturbedResolvent> {
    perturbed_resolvent_with(a, c, mu, mode, tol::SERIES_TOL)
}

pub fn perturbed_resolvent_with(
    a: &LinearOperator,
    c: &LinearOperator,
    mu: f64,
    mode: ResolventMode,
    series_tol: f64,
) -> Result<PerturbedResolvent> {
    a.check_same_dim(c)?;
    let n = a.dim();
    if mode == ResolventMode::Direct {
        let sum = a + c;
        return Ok(PerturbedResolvent {
            operator: resolvent_real(&sum, mu)?,
            mode,
            contraction: None,
            terms: 0,
            truncation_bound: 0.0,
        });
    }
    let r = resolvent_real(a, mu)?;
    let x = c.matrix() * r.matrix();
    let q = norm2(&x);
    if q >= 1.0 {
        return Err(LabError::Precondition {
            reason: format!("‖CR(μ,A)‖ must be below 1 at μ = {mu}"),
            value: q,
        });
    }
    let ident = Mat::identity(n, n);
    match mode {
        ResolventMode::Factorized => {
            // Z(I − X) = R  ⇔  (I − X)ᵀZᵀ = Rᵀ
            let lhs = (&ident - &x).transpose();
            let zt = lhs
                .lu()
                .solve(&r.matrix().transpose())
                .ok_or_else(|| LabError::Computation("I − CR(μ,A) is singular".into()))?;
            Ok(PerturbedResolvent {
                operator: LinearOperator::from_matrix(zt.transpose()),
                mode,
                contraction: Some(q),
                terms: 0,
                truncation_bound: 0.0,
            })
        }
        ResolventMode::Neumann => {
            let mut terms = 1;
            let mut tail = q / (1.0 - q);
            while tail > series_tol && terms < tol::NEUMANN_MAX_TERMS {
                terms += 1;
                tail *= q;
            }
            let mut sum = ident.clone();
            let mut power = ident;
            for _ in 1..terms {
                power = &power * &x;
                sum += &power;
            }
            Ok(PerturbedResolvent {
                operator: LinearOperator::from_matrix(r.matrix() * sum),
                mode,
                contraction: Some(q),
                terms,
                truncation_bound: tail,
            })
        }
        ResolventMode::Direct => unreachable!("handled above"),
    }
}

/// `‖R(μ,A+C) − R(μ,A) − R(μ,A+C)·C·R(μ,A)‖`.
pub fn resolvent_identity_residual(a: &LinearOperator, c: &LinearOperator, mu: f64) -> Result<f64> {
    a.check_same_dim(c)?;
    let lambda = Complex64::new(mu, 0.0);
    let ra = resolvent(a, lambda)?;
    let rac = resolvent(&(a + c), lambda)?;
    let rhs = rac.matrix() * c.matrix() * ra.matrix();
    Ok(norm2(&(rac.matrix() - ra.matrix() - rhs)))
}

/// `‖(μ − (A+C))·R(μ,A) − (I − C·R(μ,A))‖`.
pub fn factorization_residual(a: &LinearOperator, c: &LinearOperator, mu: f64) -> Result<f64> {
    a.check_same_dim(c)?;
    let n = a.dim();
    let r = resolvent_real(a, mu)?;
    let mut shifted = -(a.matrix() + c.matrix());
    for i in 0..n {
        shifted[(i, i)] += Complex64::new(mu, 0.0);
    }
    let cr = c.matrix() * r.matrix();
    let lhs = shifted * r.matrix();
    Ok(norm2(&(lhs - (Mat::identity(n, n) - cr))))
}

fn verify_claim(
    sum: &LinearOperator,
    m: f64,
    omega: f64,
    t_grid: &ScalarGrid,
    env_tol: f64,
) -> Result<(EnvelopeClaim, Vec<(f64, f64, f64)>)> {
    let mut samples = Vec::with_capacity(t_grid.len());
    let mut worst = (f64::NEG_INFINITY, f64::NAN);
    let mut margin = f64::INFINITY;
    for &t in t_grid.points() {
        let actual = matrix_exponential(sum, t)?.norm();
        let bound = m * (omega * t).exp();
        let ratio = actual / bound;
        margin = margin.min((1.0 + env_tol) - ratio);
        if ratio > worst.0 {
            worst = (ratio, t);
        }
        samples.push((t, actual, bound));
    }
    let status = Status::from_ratio(worst.0, env_tol);
    Ok((
        EnvelopeClaim {
            m,
            omega,
            status,
            verified_margin: margin,
            witness_t: worst.1,
            worst_ratio: worst.0,
        },
        samples,
    ))
}

/// Emits `(M, ω + MK)` for `A + C` and checks it against sampled
/// exponentials; optionally also the bounded-perturbation claim
/// `(M, ω + M‖C‖)`.
pub fn certify_perturbed_growth(
    a: &LinearOperator,
    c: &LinearOperator,
    env: &GrowthEnvelope,
    mu_grid: &ScalarGrid,
    t_grid: &ScalarGrid,
    bounded_variant: bool,
) -> Result<GenerationCertificate> {
    certify_perturbed_growth_with(a, c, env, mu_grid, t_grid, bounded_variant, tol::ENV_TOL)
}

pub fn certify_perturbed_growth_with(
    a: &LinearOperator,
    c: &LinearOperator,
    env: &GrowthEnvelope,
    mu_grid: &ScalarGrid,
    t_grid: &ScalarGrid,
    bounded_variant: bool,
    env_tol: f64,
) -> Result<GenerationCertificate> {
    if let Some(&t) = t_grid.points().iter().find(|&&t| t < 0.0) {
        return Err(LabError::Input(format!("t-grid point {t} is negative")));
    }
    let report = relative_bound_k(a, c, env, mu_grid)?;
    let k = report.k;
    let sum = a + c;
    let (claim, samples) = verify_claim(&sum, env.m, env.omega + env.m * k, t_grid, env_tol)?;
    let bounded = if bounded_variant {
        let omega = env.omega + env.m * c.norm();
        Some(verify_claim(&sum, env.m, omega, t_grid, env_tol)?.0)
    } else {
        None
    };
    let falsified = claim.status == Status::Fail
        || bounded.as_ref().is_some_and(|b| b.status == Status::Fail);
    Ok(GenerationCertificate {
        base_env: env.clone(),
        k,
        relative_bound: report,
        verified_margin: claim.verified_margin,
        perturbed_env: claim,
        bounded_variant: bounded,
        falsified,
        samples,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturbedResolventBound {
    pub worst_ratio: f64,
    pub worst_mu: f64,
    pub status: Status,
    pub verdict: bool,
}

/// `‖R(μ,A+C)‖ ≤ 1/(μ − (ω+K))` on the grid, for contraction envelopes.
pub fn verify_perturbed_resolvent_bound(
    a: &LinearOperator,
    c: &LinearOperator,
    env: &GrowthEnvelope,
    k: f64,
    mu_grid: &ScalarGrid,
) -> Result<bool> {
    Ok(perturbed_resolvent_bound_report(a, c, env, k, mu_grid, tol::POWER_TOL)?.verdict)
}

pub fn perturbed_resolvent_bound_report(
    a: &LinearOperator,
    c: &LinearOperator,
    env: &GrowthEnvelope,
    k: f64,
    mu_grid: &ScalarGrid,
    power_tol: f64,
) -> Result<PerturbedResolventBound> {
    a.check_same_dim(c)?;
    if env.m != 1.0 {
        return Err(LabError::Input(format!(
            "the perturbed resolvent bound needs M = 1 (got {}); renorm first",
            env.m
        )));
    }
    let floor = env.omega + k;
    check_grid_above(mu_grid, floor)?;
    let sum = a + c;
    let mut worst = (f64::NEG_INFINITY, f64::NAN);
    for &mu in mu_grid.points() {
        let ratio = resolvent_real(&sum, mu)?.norm() * (mu - floor);
        if ratio > worst.0 {
            worst = (ratio, mu);
        }
    }
    let status = Status::from_ratio(worst.0, power_tol);
    Ok(PerturbedResolventBound {
        worst_ratio: worst.0,
        worst_mu: worst.1,
        status,
        verdict: status.is_ok(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Spacing;
    use crate::hille_yosida::certify_growth_envelope;

    fn op(n: usize, rows: &[f64]) -> LinearOperator {
        LinearOperator::from_real_rows(n, rows).unwrap()
    }

    fn minus_identity() -> LinearOperator {
        LinearOperator::identity(2).scale_real(-1.0)
    }

    fn half_identity() -> LinearOperator {
        LinearOperator::identity(2).scale_real(0.5)
    }

    #[test]
    fn k_for_zero_generator_equals_norm() {
        let a = LinearOperator::zeros(2);
        let c = op(2, &[1.0, 2.0, -0.5, 0.3]);
        let env = GrowthEnvelope::assumed(1.0, 0.0).unwrap();
        let grid = default_mu_grid(&a, 0.0, 64).unwrap();
        let r = relative_bound_k(&a, &c, &env, &grid).unwrap();
        assert!((r.k - c.norm()).abs() <= 1e-14 * c.norm());
        for &(_, v) in &r.profile {
            assert!((v - c.norm()).abs() <= 1e-14 * c.norm());
        }
        let an = a_norm(&a, &c, &env, &grid).unwrap();
        assert!((an.value - c.norm()).abs() <= 1e-14 * c.norm());
    }

    #[test]
    fn k_is_asymptotic_for_dissipative_diagonal() {
        // μ/(μ+1) < 1 on μ = 10^k, k = −3..6: the sup is the limit.
        let a = LinearOperator::diagonal(&[-1.0, -2.0]);
        let grid = ScalarGrid::new((-3..=6).map(|k| 10f64.powi(k)).collect(), Spacing::Geometric)
            .unwrap();
        let env = GrowthEnvelope::assumed(1.0, 0.0).unwrap();
        let r = relative_bound_k(&a, &LinearOperator::identity(2), &env, &grid).unwrap();
        assert_eq!(r.argsup_mu, ArgSup::Asymptotic);
        assert_eq!(r.k, 1.0);
        let oracle: Vec<f64> = (-3..=6).map(|k| 10f64.powi(k) / (10f64.powi(k) + 1.0)).collect();
        for ((_, v), o) in r.profile.iter().zip(oracle) {
            assert!((v - o).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_perturbation() {
        let a = op(2, &[-1.0, 10.0, 0.0, -1.0]);
        let env = certify_growth_envelope(&a, 0.0).unwrap();
        let grid = default_mu_grid(&a, 0.0, 16).unwrap();
        let zero = LinearOperator::zeros(2);
        assert_eq!(relative_bound_k(&a, &zero, &env, &grid).unwrap().k, 0.0);
        assert_eq!(a_norm(&a, &zero, &env, &grid).unwrap().value, 0.0);
    }

    #[test]
    fn a_norm_sandwich_for_jordan_example() {
        let a = op(2, &[-1.0, 10.0, 0.0, -1.0]);
        let env = certify_growth_envelope(&a, 0.0).unwrap();
        let c = op(2, &[0.0, 1.0, 0.0, 0.0]);
        let grid = default_mu_grid(&a, 0.0, 64).unwrap();
        let an = a_norm(&a, &c, &env, &grid).unwrap();
        // Brute-force μ oracle on a much denser grid.
        let dense = default_mu_grid(&a, 0.0, 2000).unwrap();
        let oracle = dense
            .points()
            .iter()
            .map(|&mu| mu * norm2(&(c.matrix() * resolvent_real(&a, mu).unwrap().matrix())))
            .fold(c.norm(), f64::max)
            / env.m;
        assert!((an.value - oracle).abs() <= 1e-3 * oracle, "{} vs {oracle}", an.value);
        assert!(c.norm() / env.m <= an.value + tol::POWER_TOL);
        assert!(an.value <= c.norm() * (1.0 + tol::POWER_TOL));
    }

    #[test]
    fn grid_must_exceed_omega() {
        let a = LinearOperator::zeros(2);
        let env = GrowthEnvelope::assumed(1.0, 0.0).unwrap();
        let grid = ScalarGrid::new(vec![0.0, 1.0], Spacing::Linear).unwrap();
        assert!(relative_bound_k(&a, &a, &env, &grid).is_err());
    }

    #[test]
    fn resolvent_modes_on_examples() {
        let a = op(2, &[-1.0, 10.0, 0.0, -1.0]);
        let zero = LinearOperator::zeros(2);
        let base = resolvent_real(&a, 3.0).unwrap();
        for mode in [ResolventMode::Factorized, ResolventMode::Neumann, ResolventMode::Direct] {
            let r = perturbed_resolvent(&a, &zero, 3.0, mode).unwrap();
            assert!(norm2(&(r.operator.matrix() - base.matrix())) < 1e-15);
        }
        let expected = LinearOperator::identity(2).scale_real(2.0 / 3.0);
        for mode in [ResolventMode::Factorized, ResolventMode::Neumann, ResolventMode::Direct] {
            let r = perturbed_resolvent(&minus_identity(), &half_identity(), 1.0, mode).unwrap();
            assert!(norm2(&(r.operator.matrix() - expected.matrix())) < 1e-12, "{mode:?}");
        }
    }

    #[test]
    fn neumann_refuses_large_perturbation() {
        let err = perturbed_resolvent(
            &minus_identity(),
            &LinearOperator::identity(2).scale_real(3.0),
            1.0,
            ResolventMode::Neumann,
        )
        .unwrap_err();
        match err {
            LabError::Precondition { value, .. } => assert!((value - 1.5).abs() < 1e-14),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn scalar_identity_residual() {
        let a = op(1, &[-1.0]);
        let c = op(1, &[0.5]);
        assert!(resolvent_identity_residual(&a, &c, 1.0).unwrap() < 1e-16);
        assert_eq!(resolvent_identity_residual(&a, &LinearOperator::zeros(1), 1.0).unwrap(), 0.0);
        assert!(factorization_residual(&a, &c, 1.0).unwrap() < 1e-16);
    }

    #[test]
    fn scalar_generation_certificate_is_tight() {
        let a = minus_identity();
        let env = certify_growth_envelope(&a, -1.0).unwrap();
        assert_eq!(env.m, 1.0);
        let mu = default_mu_grid(&a, -1.0, 64).unwrap();
        let t = ScalarGrid::linear(0.0, 10.0, 64).unwrap();
        let cert = certify_perturbed_growth(&a, &half_identity(), &env, &mu, &t, true).unwrap();
        assert!((cert.k - 0.5).abs() < 1e-12);
        assert!((cert.perturbed_env.omega + 0.5).abs() < 1e-12);
        for &(t, actual, bound) in &cert.samples {
            assert!((bound - (-t / 2.0).exp()).abs() < 1e-9);
            assert!((actual - bound).abs() < 1e-9);
        }
        assert_eq!(cert.perturbed_env.status, Status::Tight);
        assert!(!cert.falsified);
        let bounded = cert.bounded_variant.unwrap();
        assert!((bounded.omega + 0.5).abs() < 1e-12);
    }

    #[test]
    fn zero_perturbation_certificate_matches_base() {
        let a = op(2, &[-1.0, 10.0, 0.0, -1.0]);
        let env = certify_growth_envelope(&a, 0.0).unwrap();
        let mu = default_mu_grid(&a, 0.0, 32).unwrap();
        let t = ScalarGrid::linear(0.0, 10.0, 64).unwrap();
        let cert =
            certify_perturbed_growth(&a, &LinearOperator::zeros(2), &env, &mu, &t, false).unwrap();
        assert_eq!(cert.k, 0.0);
        assert_eq!(cert.perturbed_env.m, env.m);
        assert_eq!(cert.perturbed_env.omega, env.omega);
        assert!(!cert.falsified);
    }

    #[test]
    fn perturbed_resolvent_bound_examples() {
        let a = op(1, &[-1.0]);
        let c = op(1, &[0.5]);
        let env = GrowthEnvelope::assumed(1.0, -1.0).unwrap();
        let grid = ScalarGrid::new(vec![1.0], Spacing::Linear).unwrap();
        let r = perturbed_resolvent_bound_report(&a, &c, &env, 0.5, &grid, tol::POWER_TOL).unwrap();
        assert_eq!(r.status, Status::Tight);

        let a = LinearOperator::diagonal(&[-1.0, -2.0]);
        let env = certify_growth_envelope(&a, -1.0).unwrap();
        let c = LinearOperator::identity(2).scale_real(0.3);
        let grid = ScalarGrid::geometric_offset(-1.0 + 0.3, 1e-3, 1e6, 32).unwrap();
        assert!(verify_perturbed_resolvent_bound(&a, &c, &env, 0.3, &grid).unwrap());

        let bad_env = GrowthEnvelope::assumed(2.0, 0.0).unwrap();
        assert!(matches!(
            verify_perturbed_resolvent_bound(&a, &c, &bad_env, 0.3, &grid),
            Err(LabError::Input(_))
        ));
    }
}
