//! Matrix exponential by scaling and squaring with diagonal Padé
//! approximants of degree 3, 5, 7, 9 or 13.
//!
//! Degree and scaling are chosen from the 1-norm of `tA` against the
//! thresholds θ_m for which the backward error of the order-m approximant
//! stays below the unit roundoff of binary64 (Higham, 2005).

use num_complex::Complex64;

use crate::error::{LabError, Result};
use crate::operator::{LinearOperator, Mat};

const THETA: [(usize, f64); 4] = [
    (3, 1.495_585_217_958_292e-2),
    (5, 2.539_398_330_063_230e-1),
    (7, 9.504_178_996_162_932e-1),
    (9, 2.097_847_961_257_068e0),
];
const THETA_13: f64 = 5.371_920_351_148_152e0;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [
    17_297_280.0,
    8_648_640.0,
    1_995_840.0,
    277_200.0,
    25_200.0,
    1_512.0,
    56.0,
    1.0,
];
const B9: [f64; 10] = [
    17_643_225_600.0,
    8_821_612_800.0,
    2_075_673_600.0,
    302_702_400.0,
    30_270_240.0,
    2_162_160.0,
    110_880.0,
    3_960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

/// Squarings beyond this are treated as overflow of `‖tA‖`.
const MAX_SQUARINGS: i32 = 1000;

fn norm1(m: &Mat) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// `exp(tA)`.
pub fn matrix_exponential(a: &LinearOperator, t: f64) -> Result<LinearOperator> {
    if !t.is_finite() {
        return Err(LabError::Input(format!("time {t} is not finite")));
    }
    Ok(LinearOperator::from_matrix(expm(a.matrix(), t)?))
}

/// `exp(tM)` for a raw matrix.
pub fn expm(m: &Mat, t: f64) -> Result<Mat> {
    let n = m.nrows();
    let ident = Mat::identity(n, n);
    if t == 0.0 {
        return Ok(ident);
    }
    let a = m * c(t);
    let norm = norm1(&a);
    if !norm.is_finite() {
        return Err(LabError::Range(format!("‖tA‖ = {norm} is not representable")));
    }
    if n == 1 {
        let z = a[(0, 0)].exp();
        return finite_or_range(Mat::from_element(1, 1, z));
    }

    for &(degree, theta) in &THETA {
        if norm <= theta {
            return finite_or_range(pade_low(&a, degree, &ident)?);
        }
    }

    let s = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil() as i32
    } else {
        0
    };
    if s > MAX_SQUARINGS {
        return Err(LabError::Range(format!(
            "‖tA‖₁ = {norm:e} needs {s} squarings"
        )));
    }
    let scaled = &a * c(0.5f64.powi(s));
    let mut r = pade13(&scaled, &ident)?;
    for _ in 0..s {
        r = &r * &r;
        if r.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(LabError::Range("exponential overflowed while squaring".into()));
        }
    }
    finite_or_range(r)
}

fn finite_or_range(m: Mat) -> Result<Mat> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(m)
    } else {
        Err(LabError::Range("exponential is not representable".into()))
    }
}

fn solve_pade(u: &Mat, v: &Mat) -> Result<Mat> {
    let num = v + u;
    let den = v - u;
    den.lu()
        .solve(&num)
        .ok_or_else(|| LabError::Computation("Padé denominator is singular".into()))
}

fn pade_low(a: &Mat, degree: usize, ident: &Mat) -> Result<Mat> {
    let b: &[f64] = match degree {
        3 => &B3,
        5 => &B5,
        7 => &B7,
        _ => &B9,
    };
    let a2 = a * a;
    // Even powers A^0, A^2, ..., A^{degree-1}.
    let mut powers = vec![ident.clone(), a2.clone()];
    while powers.len() < degree.div_ceil(2) {
        let next = powers.last().expect("nonempty") * &a2;
        powers.push(next);
    }
    let mut odd = Mat::zeros(a.nrows(), a.ncols());
    let mut even = Mat::zeros(a.nrows(), a.ncols());
    for (k, p) in powers.iter().enumerate() {
        odd += p * c(b[2 * k + 1]);
        even += p * c(b[2 * k]);
    }
    let u = a * odd;
    solve_pade(&u, &even)
}

fn pade13(a: &Mat, ident: &Mat) -> Result<Mat> {
    let b = &B13;
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let inner_u = &a6 * c(b[13]) + &a4 * c(b[11]) + &a2 * c(b[9]);
    let u = a * (&a6 * inner_u + &a6 * c(b[7]) + &a4 * c(b[5]) + &a2 * c(b[3]) + ident * c(b[1]));
    let inner_v = &a6 * c(b[12]) + &a4 * c(b[10]) + &a2 * c(b[8]);
    let v = &a6 * inner_v + &a6 * c(b[6]) + &a4 * c(b[4]) + &a2 * c(b[2]) + ident * c(b[0]);
    solve_pade(&u, &v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{norm2, shift_generator};

    /// Truncated Taylor series with many terms, for small-norm oracles.
    fn taylor(m: &Mat, t: f64, terms: usize) -> Mat {
        let n = m.nrows();
        let mut sum = Mat::identity(n, n);
        let mut term = Mat::identity(n, n);
        for k in 1..terms {
            term = &term * m * c(t / k as f64);
            sum += &term;
        }
        sum
    }

    #[test]
    fn exponential_examples() {
        let a = LinearOperator::from_real_rows(2, &[3.0, -1.0, 2.0, 7.0]).unwrap();
        assert_eq!(matrix_exponential(&a, 0.0).unwrap(), LinearOperator::identity(2));

        let n = LinearOperator::from_real_rows(2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        let e = matrix_exponential(&n, 3.0).unwrap();
        let expected = LinearOperator::from_real_rows(2, &[1.0, 3.0, 0.0, 1.0]).unwrap();
        assert!(norm2(&(e.matrix() - expected.matrix())) < 1e-14);

        let d = LinearOperator::diagonal(&[-1.0, 2.0]);
        let e = matrix_exponential(&d, 1.0).unwrap();
        assert!((e.get(0, 0).re - (-1.0f64).exp()).abs() < 1e-15);
        assert!((e.get(1, 1).re - 2.0f64.exp()).abs() < 1e-13);
        assert!(e.get(0, 1).norm() < 1e-15);
    }

    #[test]
    fn matches_taylor_for_every_degree() {
        let base = [0.3, -0.2, 0.5, 0.1, -0.4, 0.25, 0.05, 0.6, -0.35];
        // scales land in each Padé branch and in the scaled branch
        for scale in [1e-3, 5e-2, 0.5, 1.5, 3.0, 12.0] {
            let rows: Vec<f64> = base.iter().map(|x| x * scale).collect();
            let a = LinearOperator::from_real_rows(3, &rows).unwrap();
            let got = matrix_exponential(&a, 1.0).unwrap();
            // exp(M) = exp(M/2^k)^{2^k} with Taylor on the small piece
            let k = 6;
            let mut oracle = taylor(a.matrix(), 1.0 / 64.0, 30);
            for _ in 0..k {
                oracle = &oracle * &oracle;
            }
            let rel = norm2(&(got.matrix() - &oracle)) / norm2(&oracle);
            assert!(rel < 1e-12, "scale {scale}: relative error {rel:e}");
        }
    }

    #[test]
    fn negative_time_inverts() {
        let a = LinearOperator::from_real_rows(2, &[-1.0, 10.0, 0.0, -1.0]).unwrap();
        let fwd = matrix_exponential(&a, 1.7).unwrap();
        let bwd = matrix_exponential(&a, -1.7).unwrap();
        let prod = &fwd * &bwd;
        assert!(norm2(&(prod.matrix() - Mat::identity(2, 2))) < 1e-12);
    }

    #[test]
    fn shift_identity() {
        let a = LinearOperator::from_real_rows(2, &[0.5, 3.0, -1.0, -0.2]).unwrap();
        for &(omega, t) in &[(1.0, 0.7), (-2.0, 1.3), (0.3, 4.0)] {
            let lhs = matrix_exponential(&shift_generator(&a, omega), t).unwrap();
            let rhs = matrix_exponential(&a, t).unwrap().scale_real((-omega * t).exp());
            let rel = norm2(&(lhs.matrix() - rhs.matrix())) / norm2(rhs.matrix());
            assert!(rel < 1e-12);
        }
    }

    #[test]
    fn overflow_is_a_range_error() {
        let a = LinearOperator::diagonal(&[1.0, 2.0]);
        assert!(matches!(matrix_exponential(&a, 1e6), Err(LabError::Range(_))));
        assert!(matches!(matrix_exponential(&a, f64::INFINITY), Err(LabError::Input(_))));
    }

    #[test]
    fn scalar_path() {
        let a = LinearOperator::from_complex_rows(1, &[Complex64::new(-0.5, 2.0)]).unwrap();
        let e = matrix_exponential(&a, 2.0).unwrap();
        assert!((e.get(0, 0) - Complex64::new(-1.0, 4.0).exp()).norm() < 1e-15);
    }
}
