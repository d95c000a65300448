//! Dense complex operators and the basic spectral quantities every other
//! module is built on: the spectral norm, eigenvalues, and resolvents.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::tol;

pub type Mat = DMatrix<Complex64>;
pub type Vector = DVector<Complex64>;

/// Square complex matrix standing in for a generator or a perturbation.
#[derive(Clone)]
pub struct LinearOperator {
    entries: Mat,
    label: Option<String>,
    cache: Arc<Cache>,
}

#[derive(Default)]
struct Cache {
    norm: OnceLock<f64>,
    spectrum: OnceLock<SpectralData>,
}

impl fmt::Debug for LinearOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LinearOperator")
            .field("dim", &self.dim())
            .field("label", &self.label)
            .field("entries", &self.entries)
            .finish()
    }
}

impl PartialEq for LinearOperator {
    fn eq(&self, other: &Self) -> bool {
        self.entries == other.entries
    }
}

impl LinearOperator {
    pub fn new(entries: Mat) -> Result<Self> {
        if entries.nrows() == 0 {
            return Err(LabError::Shape("operator must have dim >= 1".into()));
        }
        if entries.nrows() != entries.ncols() {
            return Err(LabError::Shape(format!(
                "operator must be square, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if let Some((idx, _)) = entries
            .iter()
            .enumerate()
            .find(|(_, z)| !(z.re.is_finite() && z.im.is_finite()))
        {
            let n = entries.nrows();
            // nalgebra storage is column-major
            return Err(LabError::Input(format!(
                "non-finite entry at ({}, {})",
                idx % n,
                idx / n
            )));
        }
        Ok(Self::from_matrix(entries))
    }

    pub(crate) fn from_matrix(entries: Mat) -> Self {
        LinearOperator {
            entries,
            label: None,
            cache: Arc::new(Cache::default()),
        }
    }

    /// Builds from row-major real entries.
    pub fn from_real_rows(dim: usize, rows: &[f64]) -> Result<Self> {
        if rows.len() != dim * dim {
            return Err(LabError::Shape(format!(
                "expected {} entries for dim {dim}, got {}",
                dim * dim,
                rows.len()
            )));
        }
        Self::new(DMatrix::from_row_iterator(
            dim,
            dim,
            rows.iter().map(|&x| Complex64::new(x, 0.0)),
        ))
    }

    pub fn from_complex_rows(dim: usize, rows: &[Complex64]) -> Result<Self> {
        if rows.len() != dim * dim {
            return Err(LabError::Shape(format!(
                "expected {} entries for dim {dim}, got {}",
                dim * dim,
                rows.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(dim, dim, rows))
    }

    pub fn zeros(dim: usize) -> Self {
        Self::from_matrix(Mat::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_matrix(Mat::identity(dim, dim))
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Mat::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = Complex64::new(v, 0.0);
        }
        Self::from_matrix(m)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &Mat {
        &self.entries
    }

    pub fn into_matrix(self) -> Mat {
        self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[(row, col)]
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self::from_matrix(&self.entries * factor)
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.scale(Complex64::new(factor, 0.0))
    }

    pub fn adjoint(&self) -> Self {
        Self::from_matrix(self.entries.adjoint())
    }

    pub fn apply(&self, x: &Vector) -> Vector {
        &self.entries * x
    }

    pub fn check_same_dim(&self, other: &LinearOperator) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(LabError::Shape(format!(
                "dimension mismatch: {} vs {}",
                self.dim(),
                other.dim()
            )));
        }
        Ok(())
    }

    /// Largest singular value (cached).
    pub fn norm(&self) -> f64 {
        *self.cache.norm.get_or_init(|| norm2(&self.entries))
    }

    /// Eigenvalues, spectral abscissa and radius (cached).
    pub fn spectrum(&self) -> Result<SpectralData> {
        if let Some(s) = self.cache.spectrum.get() {
            return Ok(s.clone());
        }
        let s = SpectralData::from_eigenvalues(eigenvalues(&self.entries)?);
        let _ = self.cache.spectrum.set(s.clone());
        Ok(s)
    }

    /// Row-major `[re, im]` pairs, used when echoing inputs in reports.
    pub fn to_rows(&self) -> Vec<Vec<[f64; 2]>> {
        (0..self.dim())
            .map(|i| {
                (0..self.dim())
                    .map(|j| {
                        let z = self.entries[(i, j)];
                        [z.re, z.im]
                    })
                    .collect()
            })
            .collect()
    }
}

impl Add for &LinearOperator {
    type Output = LinearOperator;
    fn add(self, rhs: &LinearOperator) -> LinearOperator {
        LinearOperator::from_matrix(&self.entries + &rhs.entries)
    }
}

impl Sub for &LinearOperator {
    type Output = LinearOperator;
    fn sub(self, rhs: &LinearOperator) -> LinearOperator {
        LinearOperator::from_matrix(&self.entries - &rhs.entries)
    }
}

impl Mul for &LinearOperator {
    type Output = LinearOperator;
    fn mul(self, rhs: &LinearOperator) -> LinearOperator {
        LinearOperator::from_matrix(&self.entries * &rhs.entries)
    }
}

impl Neg for &LinearOperator {
    type Output = LinearOperator;
    fn neg(self) -> LinearOperator {
        LinearOperator::from_matrix(-&self.entries)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralData {
    #[serde(serialize_with = "crate::report::serialize_complex_vec")]
    pub eigenvalues: Vec<Complex64>,
    pub spectral_abscissa: f64,
    pub spectral_radius: f64,
}

impl SpectralData {
    pub fn from_eigenvalues(eigenvalues: Vec<Complex64>) -> Self {
        let spectral_abscissa = eigenvalues
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max);
        let spectral_radius = eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max);
        SpectralData {
            eigenvalues,
            spectral_abscissa,
            spectral_radius,
        }
    }

    /// Eigenvalue nearest to `z` and its distance.
    pub fn nearest(&self, z: Complex64) -> (Complex64, f64) {
        self.eigenvalues
            .iter()
            .map(|&e| (e, (e - z).norm()))
            .fold((Complex64::new(f64::NAN, f64::NAN), f64::INFINITY), |acc, x| {
                if x.1 < acc.1 {
                    x
                } else {
                    acc
                }
            })
    }
}

/// Spectral norm of a dense complex matrix.
pub fn norm2(m: &Mat) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    if m.nrows() == 1 && m.ncols() == 1 {
        return m[(0, 0)].norm();
    }
    if m.iter().all(|z| z.re == 0.0 && z.im == 0.0) {
        return 0.0;
    }
    match nalgebra::SVD::try_new(m.clone(), false, false, f64::EPSILON, 10_000) {
        Some(svd) => svd.singular_values.max(),
        None => {
            // Fall back to the Hermitian eigenproblem for ‖M‖² = λ_max(M*M).
            let gram = m.adjoint() * m;
            let eig = gram.symmetric_eigenvalues();
            eig.max().max(0.0).sqrt()
        }
    }
}

/// Smallest singular value of a square matrix.
pub fn min_singular_value(m: &Mat) -> f64 {
    if m.nrows() == 1 {
        return m[(0, 0)].norm();
    }
    match nalgebra::SVD::try_new(m.clone(), false, false, f64::EPSILON, 10_000) {
        Some(svd) => svd.singular_values.min(),
        None => {
            let gram = m.adjoint() * m;
            gram.symmetric_eigenvalues().min().max(0.0).sqrt()
        }
    }
}

pub(crate) fn eigenvalues(m: &Mat) -> Result<Vec<Complex64>> {
    if m.nrows() == 1 {
        return Ok(vec![m[(0, 0)]]);
    }
    Ok(crate::schur::complex_schur(m)?.eigenvalues())
}

/// Largest singular value of `a`.
pub fn op_norm(a: &LinearOperator) -> f64 {
    a.norm()
}

pub fn spectrum(a: &LinearOperator) -> Result<SpectralData> {
    a.spectrum()
}

/// `A − ωI`, the generator of `e^{−ωt}T_A(t)`.
pub fn shift_generator(a: &LinearOperator, omega: f64) -> LinearOperator {
    let mut m = a.entries.clone();
    for i in 0..a.dim() {
        m[(i, i)] -= Complex64::new(omega, 0.0);
    }
    LinearOperator::from_matrix(m)
}

/// A resolvent together with its residual `‖(λI − A)X − I‖`.
#[derive(Debug, Clone)]
pub struct Resolvent {
    pub operator: LinearOperator,
    pub residual: f64,
}

/// Refuses when `λ` is within `SPEC_GUARD · max(1, ‖A‖)` of `σ(A)`.
pub fn check_resolvent_point(a: &LinearOperator, lambda: Complex64) -> Result<()> {
    let spec = a.spectrum()?;
    let guard = tol::SPEC_GUARD * a.norm().max(1.0);
    let (eig, dist) = spec.nearest(lambda);
    if dist < guard {
        return Err(LabError::Singular {
            point: lambda,
            eigenvalue: eig,
            guard,
        });
    }
    Ok(())
}

pub(crate) fn shifted(a: &Mat, lambda: Complex64) -> Mat {
    let mut m = -a;
    for i in 0..m.nrows() {
        m[(i, i)] += lambda;
    }
    m
}

/// `R(λ, A) = (λI − A)⁻¹`.
pub fn resolvent(a: &LinearOperator, lambda: Complex64) -> Result<LinearOperator> {
    Ok(resolvent_with_residual(a, lambda)?.operator)
}

pub fn resolvent_with_residual(a: &LinearOperator, lambda: Complex64) -> Result<Resolvent> {
    check_resolvent_point(a, lambda)?;
    let shifted = shifted(&a.entries, lambda);
    let inv = shifted
        .clone()
        .lu()
        .try_inverse()
        .ok_or_else(|| LabError::Computation(format!("λI − A is singular at λ = {lambda}")))?;
    let residual = norm2(&(&shifted * &inv - Mat::identity(a.dim(), a.dim())));
    Ok(Resolvent {
        operator: LinearOperator::from_matrix(inv),
        residual,
    })
}

/// Real-argument convenience wrapper.
pub fn resolvent_real(a: &LinearOperator, lambda: f64) -> Result<LinearOperator> {
    resolvent(a, Complex64::new(lambda, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn close(a: &LinearOperator, b: &LinearOperator, tol: f64) -> bool {
        norm2(&(a.matrix() - b.matrix())) <= tol
    }

    #[test]
    fn norm_examples() {
        assert_eq!(op_norm(&LinearOperator::zeros(2)), 0.0);
        for n in 1..6 {
            assert!((op_norm(&LinearOperator::identity(n)) - 1.0).abs() < 1e-14);
        }
        assert!((op_norm(&LinearOperator::diagonal(&[3.0, -4.0])) - 4.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_invalid_entries() {
        assert!(LinearOperator::from_real_rows(2, &[0.0, f64::NAN, 0.0, 0.0]).is_err());
        assert!(LinearOperator::from_real_rows(2, &[0.0, 1.0, 0.0]).is_err());
        assert!(LinearOperator::new(Mat::zeros(2, 3)).is_err());
        assert!(LinearOperator::new(Mat::zeros(0, 0)).is_err());
    }

    #[test]
    fn resolvent_examples() {
        let r = resolvent_real(&LinearOperator::zeros(2), 2.0).unwrap();
        assert!(close(&r, &LinearOperator::identity(2).scale_real(0.5), 1e-15));

        let a = LinearOperator::diagonal(&[-1.0, -3.0]);
        let r = resolvent_real(&a, 1.0).unwrap();
        assert!(close(&r, &LinearOperator::diagonal(&[0.5, 0.25]), 1e-15));

        let n = LinearOperator::from_real_rows(2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        let r = resolvent_real(&n, 1.0).unwrap();
        let expected = LinearOperator::from_real_rows(2, &[1.0, 1.0, 0.0, 1.0]).unwrap();
        assert!(close(&r, &expected, 1e-15));
    }

    #[test]
    fn resolvent_refuses_spectrum() {
        let a = LinearOperator::diagonal(&[-1.0, 2.0]);
        match resolvent_real(&a, 2.0) {
            Err(LabError::Singular { eigenvalue, .. }) => {
                assert!((eigenvalue - c(2.0)).norm() < 1e-12)
            }
            other => panic!("expected singularity error, got {other:?}"),
        }
        // Just outside the guard zone is accepted.
        assert!(resolvent_real(&a, 2.0 + 1e-6).is_ok());
    }

    #[test]
    fn spectrum_examples() {
        let s = spectrum(&LinearOperator::diagonal(&[-1.0, 1.0])).unwrap();
        assert_eq!(s.spectral_abscissa, 1.0);
        assert_eq!(s.spectral_radius, 1.0);

        let rot = LinearOperator::from_real_rows(2, &[0.0, -PI, PI, 0.0]).unwrap();
        let s = spectrum(&rot).unwrap();
        assert!(s.spectral_abscissa.abs() < 1e-14);
        assert!((s.spectral_radius - PI).abs() < 1e-14);
        let mut ims: Vec<f64> = s.eigenvalues.iter().map(|z| z.im).collect();
        ims.sort_by(f64::total_cmp);
        assert!((ims[0] + PI).abs() < 1e-14 && (ims[1] - PI).abs() < 1e-14);

        let jordan = LinearOperator::from_real_rows(2, &[2.0, 1.0, 0.0, 2.0]).unwrap();
        let s = spectrum(&jordan).unwrap();
        assert_eq!(s.eigenvalues.len(), 2);
        assert!((s.spectral_abscissa - 2.0).abs() < 1e-14);
        assert!((s.spectral_radius - 2.0).abs() < 1e-14);
    }

    #[test]
    fn scalar_operator() {
        let a = LinearOperator::from_real_rows(1, &[-2.5]).unwrap();
        assert_eq!(op_norm(&a), 2.5);
        assert_eq!(spectrum(&a).unwrap().eigenvalues, vec![c(-2.5)]);
        let r = resolvent_real(&a, 1.5).unwrap();
        assert!((r.get(0, 0) - c(0.25)).norm() < 1e-16);
    }

    #[test]
    fn shift_examples() {
        let s = shift_generator(&LinearOperator::zeros(3), 1.0);
        assert_eq!(s, LinearOperator::identity(3).scale_real(-1.0));
        let s = shift_generator(&LinearOperator::diagonal(&[2.0, 3.0]), 2.0);
        assert_eq!(s, LinearOperator::diagonal(&[0.0, 1.0]));
        let a = LinearOperator::from_real_rows(2, &[1.0, 5.0, 0.0, 1.0]).unwrap();
        let shifted = spectrum(&shift_generator(&a, 1.0)).unwrap();
        assert!(shifted.spectral_abscissa.abs() < 1e-12);
    }
}
