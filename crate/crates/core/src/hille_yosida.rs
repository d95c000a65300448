//! Growth envelopes `‖T(t)‖ ≤ Me^{ωt}` and the resolvent-power family that
//! characterizes them.
//!
//! An envelope is certified on a finite horizon. With `S(t) = e^{−ωt}T(t)`
//! and `t_star` the first doubling time at which `‖S(t_star)‖ ≤ 1`, every
//! `t = k·t_star + r` satisfies `‖S(t)‖ ≤ ‖S(t_star)‖^k ‖S(r)‖ ≤ ‖S(r)‖`, so
//! the supremum over `[0, t_star]` is the global one. That supremum is
//! bounded from above by an adaptive search: on `[a, a + h]`,
//! `‖S(a + r)‖ ≤ e^{rν}‖S(a)‖` where `ν` is the (positive part of the)
//! logarithmic norm of `B = A − ωI`, tightened by the second-order bound
//! `max(‖S(a)‖, ‖(I + hB)S(a)‖) + h²/2·‖B²‖e^{hν}‖S(a)‖`. Intervals are
//! split until the largest bound is within `env_tol/2` of the best sample,
//! and the reported `M` is that largest bound.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::expm::expm;
use crate::grid::{ScalarGrid, Spacing};
use crate::operator::{norm2, resolvent_with_residual, shift_generator, LinearOperator, Mat, Vector};
use crate::tol;
use crate::verdict::Status;

pub const TAIL_JUSTIFICATION: &str = "t = k*t_star + r gives |S(t)| <= |S(t_star)|^k |S(r)| <= max over [0, t_star]; \
     interval bounds use |S(a+r)| <= exp(r*nu)|S(a)| (nu = logarithmic norm of A - omega*I) and its second-order Taylor refinement";

/// Allowance for rounding when testing `‖S(t_star)‖ ≤ 1`.
const TAIL_ROUNDING: f64 = 1e-13;
const INITIAL_INTERVALS: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthEnvelope {
    pub m: f64,
    pub omega: f64,
    pub t_star: f64,
    /// Serialized as a summary; adaptive grids can hold thousands of points.
    #[serde(serialize_with = "ScalarGrid::serialize_summary")]
    pub grid: ScalarGrid,
    /// `min over grid of Me^{ωt} − ‖T(t)‖`.
    pub margin: f64,
    /// Largest sampled `‖S(t)‖` before inflation.
    pub sampled_max: f64,
    /// Logarithmic-norm rate used for the interval bounds.
    pub lipschitz_rate: f64,
    /// False when the evaluation budget ran out before `env_tol` was met;
    /// `m` is still a sound upper bound in that case.
    pub converged: bool,
    /// False for envelopes supplied by a caller rather than certified here.
    pub certified: bool,
}

impl GrowthEnvelope {
    /// A caller-asserted `(M, ω)` pair, taken on trust.
    pub fn assumed(m: f64, omega: f64) -> Result<Self> {
        if !(m >= 1.0) || !m.is_finite() || !omega.is_finite() {
            return Err(LabError::Input(format!(
                "envelope needs finite M >= 1 and finite ω (got M={m}, ω={omega})"
            )));
        }
        Ok(GrowthEnvelope {
            m,
            omega,
            t_star: 1.0,
            grid: ScalarGrid::new(vec![0.0], Spacing::Linear)?,
            margin: m - 1.0,
            sampled_max: 1.0,
            lipschitz_rate: 0.0,
            converged: true,
            certified: false,
        })
    }

    /// `Me^{ωt}`.
    pub fn bound_at(&self, t: f64) -> f64 {
        self.m * (self.omega * t).exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerBoundReport {
    pub lambda_grid: ScalarGrid,
    pub n_max: usize,
    /// `max ‖R(λ,A)ⁿ‖(λ−ω)ⁿ/M` over the grid and `n = 1..n_max`.
    pub worst_ratio: f64,
    pub worst_lambda: f64,
    pub worst_n: usize,
    pub verdict: bool,
    pub status: Status,
    /// Largest resolvent residual seen; powers inherit roughly `n_max` times this.
    pub max_residual: f64,
    pub error_growth_bound: f64,
}

/// Positive part of the largest eigenvalue of the Hermitian part of `b`.
pub(crate) fn log_norm_rate(b: &Mat) -> f64 {
    let herm = (b + b.adjoint()) * Complex64::new(0.5, 0.0);
    let eigs = herm.symmetric_eigenvalues();
    eigs.iter().cloned().fold(f64::NEG_INFINITY, f64::max).max(0.0)
}

#[derive(Debug, Clone, Copy)]
struct Interval {
    start: f64,
    end: f64,
    value_at_start: f64,
    upper: f64,
}

impl PartialEq for Interval {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Interval {}
impl PartialOrd for Interval {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Interval {
    fn cmp(&self, other: &Self) -> Ordering {
        self.upper
            .total_cmp(&other.upper)
            .then_with(|| other.start.total_cmp(&self.start))
    }
}

#[derive(Debug, Clone)]
pub(crate) struct SupSearch {
    pub lower: f64,
    pub upper: f64,
    pub samples: Vec<(f64, f64)>,
    pub converged: bool,
}

fn state_norm(y: &Mat) -> f64 {
    if y.ncols() == 1 {
        y.norm()
    } else {
        norm2(y)
    }
}

/// Bounds for `t ↦ ‖exp(tB)·X₀‖`.
struct Trajectory<'a> {
    generator: &'a Mat,
    start: &'a Mat,
    rate: f64,
    generator_sq_norm: f64,
}

impl Trajectory<'_> {
    fn state(&self, t: f64) -> Result<Mat> {
        Ok(expm(self.generator, t)? * self.start)
    }

    /// Upper bound of `‖exp(rB)Y‖` over `r ∈ [0, h]`: the smaller of
    /// `e^{hν}‖Y‖` and `max(‖Y‖, ‖(I + hB)Y‖) + h²/2·‖B²‖e^{hν}‖Y‖`
    /// (the linear part is convex in `r`; the remainder is the Taylor
    /// integral term).
    fn interval_bound(&self, y: &Mat, value: f64, h: f64) -> f64 {
        let growth = (h * self.rate).exp();
        let first_order = value * growth;
        let linear = y + self.generator * y * Complex64::new(h, 0.0);
        let second_order =
            value.max(state_norm(&linear)) + 0.5 * h * h * self.generator_sq_norm * growth * value;
        first_order.min(second_order)
    }
}

/// Certified supremum of `‖exp(tB)·X₀‖` over `[0, t_end]`.
pub(crate) fn adaptive_sup(
    generator: &Mat,
    start: &Mat,
    t_end: f64,
    rel_tol: f64,
    budget: usize,
) -> Result<SupSearch> {
    let traj = Trajectory {
        generator,
        start,
        rate: log_norm_rate(generator),
        generator_sq_norm: norm2(&(generator * generator)),
    };
    let step = t_end / INITIAL_INTERVALS as f64;
    let mut samples: Vec<(f64, f64)> = Vec::with_capacity(INITIAL_INTERVALS + 1);
    let mut states = Vec::with_capacity(INITIAL_INTERVALS + 1);
    for i in 0..=INITIAL_INTERVALS {
        let t = if i == INITIAL_INTERVALS { t_end } else { step * i as f64 };
        let y = traj.state(t)?;
        samples.push((t, state_norm(&y)));
        states.push(y);
    }
    let mut heap = BinaryHeap::new();
    for i in 0..INITIAL_INTERVALS {
        let (a, fa) = samples[i];
        let b = samples[i + 1].0;
        heap.push(Interval {
            start: a,
            end: b,
            value_at_start: fa,
            upper: traj.interval_bound(&states[i], fa, b - a),
        });
    }
    drop(states);
    let mut lower = samples.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);

    let mut converged = false;
    let mut evaluations = samples.len();
    let mut upper = lower;
    while let Some(top) = heap.peek().copied() {
        upper = top.upper.max(lower);
        if top.upper <= lower * (1.0 + rel_tol) {
            converged = true;
            break;
        }
        if evaluations >= budget {
            break;
        }
        let top = heap.pop().expect("peeked");
        let mid = 0.5 * (top.start + top.end);
        if !(mid > top.start && mid < top.end) {
            // Below float resolution the bound cannot tighten further.
            heap.push(Interval { upper: top.value_at_start, ..top });
            continue;
        }
        let y_start = traj.state(top.start)?;
        let y_mid = traj.state(mid)?;
        let fm = state_norm(&y_mid);
        evaluations += 2;
        samples.push((mid, fm));
        lower = lower.max(fm);
        heap.push(Interval {
            start: top.start,
            end: mid,
            value_at_start: top.value_at_start,
            upper: traj.interval_bound(&y_start, top.value_at_start, mid - top.start),
        });
        heap.push(Interval {
            start: mid,
            end: top.end,
            value_at_start: fm,
            upper: traj.interval_bound(&y_mid, fm, top.end - mid),
        });
    }
    if heap.is_empty() {
        converged = true;
        upper = lower;
    }
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(SupSearch {
        lower,
        upper,
        samples,
        converged,
    })
}

/// First doubling time `t ∈ {1, 2, 4, …, 2^20}` with `‖exp(tB)‖ ≤ 1`.
pub(crate) fn tail_horizon(b: &Mat) -> Result<(f64, Vec<(f64, f64)>)> {
    let mut curve = Vec::new();
    let mut t = 1.0;
    while t <= tol::HORIZON_CAP {
        let value = match expm(b, t) {
            Ok(e) => norm2(&e),
            Err(_) => f64::INFINITY,
        };
        curve.push((t, value));
        if !value.is_finite() {
            return Err(LabError::Certification {
                reason: format!("‖S(t)‖ overflowed at t = {t}"),
                curve,
            });
        }
        if value <= 1.0 + TAIL_ROUNDING {
            return Ok((t, curve));
        }
        t *= 2.0;
    }
    Err(LabError::Certification {
        reason: format!(
            "‖S(t)‖ stayed above 1 up to the horizon cap {}",
            tol::HORIZON_CAP
        ),
        curve,
    })
}

/// Certifies `‖exp(tA)‖ ≤ Me^{ωt}` for all `t ≥ 0`.
pub fn certify_growth_envelope(a: &LinearOperator, omega: f64) -> Result<GrowthEnvelope> {
    certify_growth_envelope_with(a, omega, tol::ENV_TOL)
}

pub fn certify_growth_envelope_with(
    a: &LinearOperator,
    omega: f64,
    env_tol: f64,
) -> Result<GrowthEnvelope> {
    if !omega.is_finite() {
        return Err(LabError::Input(format!("ω = {omega} is not finite")));
    }
    let abscissa = a.spectrum()?.spectral_abscissa;
    if omega < abscissa - 1e-12 * a.norm().max(1.0) {
        let b = shift_generator(a, omega);
        let curve = [1.0, 2.0, 4.0]
            .iter()
            .map(|&t| (t, expm(b.matrix(), t).map(|e| norm2(&e)).unwrap_or(f64::INFINITY)))
            .collect();
        return Err(LabError::Certification {
            reason: format!("ω = {omega} is below the spectral abscissa {abscissa}"),
            curve,
        });
    }
    let b = shift_generator(a, omega);
    let (t_star, _) = tail_horizon(b.matrix())?;
    let rate = log_norm_rate(b.matrix());
    let ident = Mat::identity(a.dim(), a.dim());
    let search = adaptive_sup(b.matrix(), &ident, t_star, env_tol / 2.0, tol::SUP_BUDGET)?;
    let m = search.upper.max(1.0);
    let margin = search
        .samples
        .iter()
        .map(|&(t, s)| (omega * t).exp() * (m - s))
        .fold(f64::INFINITY, f64::min);
    let points: Vec<f64> = search.samples.iter().map(|s| s.0).collect();
    Ok(GrowthEnvelope {
        m,
        omega,
        t_star,
        grid: ScalarGrid::new(points, Spacing::Adaptive)?,
        margin,
        sampled_max: search.lower,
        lipschitz_rate: rate,
        converged: search.converged,
        certified: true,
    })
}

/// Checks `‖R(λ,A)ⁿ‖ ≤ M/(λ−ω)ⁿ` on the grid for `n = 1..n_max`.
pub fn verify_resolvent_powers(
    a: &LinearOperator,
    env: &GrowthEnvelope,
    lambda_grid: &ScalarGrid,
    n_max: usize,
) -> Result<PowerBoundReport> {
    verify_resolvent_powers_with(a, env, lambda_grid, n_max, tol::POWER_TOL)
}

pub fn verify_resolvent_powers_with(
    a: &LinearOperator,
    env: &GrowthEnvelope,
    lambda_grid: &ScalarGrid,
    n_max: usize,
    power_tol: f64,
) -> Result<PowerBoundReport> {
    if n_max == 0 {
        return Err(LabError::Input("n_max must be at least 1".into()));
    }
    if let Some(&bad) = lambda_grid.points().iter().find(|&&l| l <= env.omega) {
        return Err(LabError::Input(format!(
            "grid point {bad} is not above ω = {}",
            env.omega
        )));
    }
    let mut worst = (f64::NEG_INFINITY, f64::NAN, 0usize);
    let mut max_residual: f64 = 0.0;
    let mut max_cond: f64 = 0.0;
    for &lambda in lambda_grid.points() {
        let res = resolvent_with_residual(a, Complex64::new(lambda, 0.0))?;
        max_residual = max_residual.max(res.residual);
        let dist = lambda - env.omega;
        // (λ−ω)R(λ,A), raised to n, keeps every power O(M) in magnitude.
        let scaled = res.operator.matrix() * Complex64::new(dist, 0.0);
        max_cond = max_cond.max((lambda.abs() + a.norm()) * res.operator.norm());
        let mut power = scaled.clone();
        for n in 1..=n_max {
            let ratio = norm2(&power) / env.m;
            if ratio > worst.0 {
                worst = (ratio, lambda, n);
            }
            if n < n_max {
                power = &power * &scaled;
            }
        }
    }
    let status = Status::from_ratio(worst.0, power_tol);
    Ok(PowerBoundReport {
        lambda_grid: lambda_grid.clone(),
        n_max,
        worst_ratio: worst.0,
        worst_lambda: worst.1,
        worst_n: worst.2,
        verdict: status.is_ok(),
        status,
        max_residual,
        error_growth_bound: n_max as f64 * max_cond * f64::EPSILON,
    })
}

/// `‖R(λ,A)‖(λ−ω) ≤ 1` on the grid, i.e. the `M = 1` resolvent bound.
pub fn contraction_check(a: &LinearOperator, omega: f64, lambda_grid: &ScalarGrid) -> Result<bool> {
    let env = GrowthEnvelope::assumed(1.0, omega)?;
    Ok(verify_resolvent_powers(a, &env, lambda_grid, 1)?.verdict)
}

/// The 32-point geometric λ-grid used by the consistency checks:
/// `ω + [10⁻³, 10⁶]·max(1, ‖A‖)`.
pub fn default_lambda_grid(a: &LinearOperator, omega: f64, points: usize) -> Result<ScalarGrid> {
    let s = a.norm().max(1.0);
    ScalarGrid::geometric_offset(omega, 1e-3 * s, 1e6 * s, points)
}

/// `|x| = sup_{t≥0} ‖T_A(t)x‖` for an envelope with `ω = 0`.
pub fn sup_renorm(a: &LinearOperator, env: &GrowthEnvelope, x: &Vector) -> Result<f64> {
    Ok(sup_renorm_bounds(a, env, x)?.0)
}

/// `(sampled max, certified upper bound)` of the renorm.
pub fn sup_renorm_bounds(a: &LinearOperator, env: &GrowthEnvelope, x: &Vector) -> Result<(f64, f64)> {
    if env.omega != 0.0 {
        return Err(LabError::Input(format!(
            "sup_renorm needs an envelope with ω = 0 (got {}); shift the generator first",
            env.omega
        )));
    }
    if x.len() != a.dim() {
        return Err(LabError::Shape(format!(
            "vector of length {} for operator of dim {}",
            x.len(),
            a.dim()
        )));
    }
    if x.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(LabError::Input("vector has non-finite entries".into()));
    }
    let norm_x = x.norm();
    if norm_x == 0.0 {
        return Ok((0.0, 0.0));
    }
    // A caller-supplied envelope carries no horizon; find one.
    let t_star = if env.certified {
        env.t_star
    } else {
        tail_horizon(a.matrix())?.0
    };
    let start = Mat::from_column_slice(x.len(), 1, x.as_slice());
    let search = adaptive_sup(a.matrix(), &start, t_star, tol::ENV_TOL / 2.0, tol::SUP_BUDGET)?;
    let value = search.lower;
    let slack = tol::ENV_TOL * env.m * norm_x;
    if value < norm_x * (1.0 - tol::ENV_TOL) || value > env.m * norm_x + slack {
        return Err(LabError::Computation(format!(
            "renorm sandwich violated: ‖x‖ = {norm_x}, |x| = {value}, M‖x‖ = {}",
            env.m * norm_x
        )));
    }
    Ok((value, search.upper))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn jordan_example() -> LinearOperator {
        LinearOperator::from_real_rows(2, &[-1.0, 10.0, 0.0, -1.0]).unwrap()
    }

    fn vec2(a: f64, b: f64) -> Vector {
        Vector::from_vec(vec![Complex64::new(a, 0.0), Complex64::new(b, 0.0)])
    }

    /// Brute-force oracle: `max_t e^{−t}‖[[1,10t],[0,1]]‖` on a 10⁻⁴ grid,
    /// using the closed-form norm `(a + √(a²+4))/2` of `[[1,a],[0,1]]`.
    fn jordan_m_oracle() -> f64 {
        (0..=200_000)
            .map(|k| {
                let t = k as f64 * 1e-4;
                let a = 10.0 * t;
                (-t).exp() * (a + (a * a + 4.0).sqrt()) / 2.0
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn trivial_envelopes() {
        let env = certify_growth_envelope(&LinearOperator::identity(2).scale_real(-2.0), -2.0).unwrap();
        assert_eq!(env.m, 1.0);
        assert_eq!(env.t_star, 1.0);
        let env = certify_growth_envelope(&LinearOperator::zeros(3), 0.0).unwrap();
        assert_eq!(env.m, 1.0);
        assert!(env.margin >= 0.0);
    }

    #[test]
    fn jordan_envelope_matches_brute_force() {
        let oracle = jordan_m_oracle();
        // Frozen from an independent numpy run of the same grid.
        assert!((oracle - 3.715_955_228).abs() < 1e-8, "oracle {oracle}");
        let env = certify_growth_envelope(&jordan_example(), 0.0).unwrap();
        assert!(env.converged);
        assert!(env.m >= oracle * (1.0 - 1e-9), "M {} below oracle {oracle}", env.m);
        assert!((env.m - oracle) / oracle <= tol::ENV_TOL, "M {} vs {oracle}", env.m);
        assert!(env.margin >= 0.0);
    }

    #[test]
    fn below_abscissa_fails() {
        let err = certify_growth_envelope(&jordan_example(), -1.5).unwrap_err();
        assert!(matches!(err, LabError::Certification { .. }));
    }

    #[test]
    fn power_examples() {
        let env = GrowthEnvelope::assumed(1.0, 0.0).unwrap();
        let grid = ScalarGrid::new(vec![2.0], Spacing::Linear).unwrap();
        let r = verify_resolvent_powers(&LinearOperator::zeros(2), &env, &grid, 5).unwrap();
        assert!((r.worst_ratio - 1.0).abs() < 1e-15);
        assert_eq!(r.status, Status::Tight);

        let env = GrowthEnvelope::assumed(1.0, -1.0).unwrap();
        let grid = ScalarGrid::new(vec![0.0], Spacing::Linear).unwrap();
        let r = verify_resolvent_powers(&LinearOperator::diagonal(&[-1.0, -3.0]), &env, &grid, 3)
            .unwrap();
        assert!((r.worst_ratio - 1.0).abs() < 1e-15);
        assert!(r.verdict);
    }

    #[test]
    fn jordan_powers_pass() {
        let a = jordan_example();
        let env = certify_growth_envelope(&a, 0.0).unwrap();
        let grid = ScalarGrid::geometric(1e-3, 1e3, 48).unwrap();
        let r = verify_resolvent_powers(&a, &env, &grid, 20).unwrap();
        assert!(r.verdict, "worst ratio {}", r.worst_ratio);
        // Direct cross-check at the worst point with independent solves.
        let lambda = r.worst_lambda;
        let mut direct = Mat::identity(2, 2);
        for _ in 0..r.worst_n {
            let inv = crate::operator::resolvent_real(&a, lambda).unwrap();
            direct = direct * inv.matrix();
        }
        let ratio = norm2(&direct) * lambda.powi(r.worst_n as i32) / env.m;
        assert!((ratio - r.worst_ratio).abs() < 1e-9 * ratio.max(1.0));
    }

    #[test]
    fn grid_point_at_omega_rejected() {
        let env = GrowthEnvelope::assumed(1.0, 0.0).unwrap();
        let grid = ScalarGrid::new(vec![0.0, 1.0], Spacing::Linear).unwrap();
        assert!(matches!(
            verify_resolvent_powers(&LinearOperator::zeros(2), &env, &grid, 1),
            Err(LabError::Input(_))
        ));
    }

    #[test]
    fn contraction_examples() {
        let zero_grid = ScalarGrid::new(vec![0.0], Spacing::Linear).unwrap();
        assert!(contraction_check(&LinearOperator::identity(2).scale_real(-1.0), -1.0, &zero_grid).unwrap());
        let n = LinearOperator::from_real_rows(2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        let one = ScalarGrid::new(vec![1.0], Spacing::Linear).unwrap();
        assert!(!contraction_check(&n, 0.0, &one).unwrap());
        // golden-ratio oracle: ‖[[1,1],[0,1]]‖ = (1+√5)/2 by direct SVD
        let env = GrowthEnvelope::assumed(1.0, 0.0).unwrap();
        let r = verify_resolvent_powers(&n, &env, &one, 1).unwrap();
        assert!((r.worst_ratio - (1.0 + 5f64.sqrt()) / 2.0).abs() < 1e-14);
        assert!(matches!(
            contraction_check(&LinearOperator::zeros(2), -1.0, &zero_grid),
            Err(LabError::Singular { .. })
        ));
    }

    #[test]
    fn renorm_examples() {
        let a = LinearOperator::identity(2).scale_real(-1.0);
        let env = certify_growth_envelope(&a, 0.0).unwrap();
        assert_eq!(sup_renorm(&a, &env, &vec2(1.0, 0.0)).unwrap(), 1.0);

        let a = LinearOperator::diagonal(&[0.0, -1.0]);
        let env = certify_growth_envelope(&a, 0.0).unwrap();
        let v = sup_renorm(&a, &env, &vec2(1.0, 1.0)).unwrap();
        assert!((v - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn jordan_renorm_matches_brute_force() {
        // e^{tA}(0,1) = e^{−t}(10t, 1); oracle on a 10⁻⁴ grid
        let oracle = (0..=200_000)
            .map(|k| {
                let t = k as f64 * 1e-4;
                (-t).exp() * (100.0 * t * t + 1.0).sqrt()
            })
            .fold(0.0, f64::max);
        let a = jordan_example();
        let env = certify_growth_envelope(&a, 0.0).unwrap();
        let (v, upper) = sup_renorm_bounds(&a, &env, &vec2(0.0, 1.0)).unwrap();
        assert!((v - oracle).abs() / oracle < tol::ENV_TOL, "{v} vs {oracle}");
        assert!(upper >= oracle * (1.0 - 1e-12));
        assert!(v <= env.m);
    }

    #[test]
    fn renorm_requires_zero_omega() {
        let a = LinearOperator::identity(2).scale_real(-1.0);
        let env = certify_growth_envelope(&a, -0.5).unwrap();
        assert!(matches!(sup_renorm(&a, &env, &vec2(1.0, 0.0)), Err(LabError::Input(_))));
    }
}
