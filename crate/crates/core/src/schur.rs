//! Complex Schur decomposition `A = QTQ*`, reordering of its diagonal, and
//! spectral (Riesz) projections onto a leading cluster of eigenvalues.
//!
//! The decomposition is Householder reduction to Hessenberg form followed by
//! single-shift QR sweeps with Wilkinson shifts. Reordering swaps adjacent
//! diagonal entries with unitary 2×2 rotations. For `T = [[T11, T12], [0, T22]]`
//! the projection onto the leading invariant subspace along the trailing one
//! is `Q [[I, −Y], [0, 0]] Q*` where `T11·Y − Y·T22 = −T12`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{LabError, Result};
use crate::operator::{norm2, Mat};

const MAX_SWEEPS_PER_EIGENVALUE: usize = 60;

#[derive(Debug, Clone)]
pub struct SchurForm {
    pub q: Mat,
    pub t: Mat,
}

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

fn frobenius(m: &Mat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Rotation `[[c, s], [−s̄, c]]` with real `c` mapping `(x, y)` to `(r, 0)`.
fn givens(x: Complex64, y: Complex64) -> (f64, Complex64) {
    let ax = x.norm();
    let ay = y.norm();
    if ay == 0.0 {
        return (1.0, zero());
    }
    if ax == 0.0 {
        return (0.0, y.conj() / ay);
    }
    let rho = ax.hypot(ay);
    (ax / rho, (x / ax) * y.conj() / rho)
}

/// Rows `k, k+1` ← G·rows for columns in `cols`.
fn rotate_rows(m: &mut Mat, k: usize, c: f64, s: Complex64, cols: std::ops::Range<usize>) {
    for j in cols {
        let h1 = m[(k, j)];
        let h2 = m[(k + 1, j)];
        m[(k, j)] = h1 * c + s * h2;
        m[(k + 1, j)] = -s.conj() * h1 + h2 * c;
    }
}

/// Columns `k, k+1` ← columns·G* for rows in `rows`.
fn rotate_cols(m: &mut Mat, k: usize, c: f64, s: Complex64, rows: std::ops::Range<usize>) {
    for i in rows {
        let h1 = m[(i, k)];
        let h2 = m[(i, k + 1)];
        m[(i, k)] = h1 * c + s.conj() * h2;
        m[(i, k + 1)] = -s * h1 + h2 * c;
    }
}

fn hessenberg(h: &mut Mat, q: &mut Mat) {
    let n = h.nrows();
    for k in 0..n.saturating_sub(2) {
        let x: Vec<Complex64> = (k + 1..n).map(|i| h[(i, k)]).collect();
        let xnorm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if xnorm == 0.0 {
            continue;
        }
        let phase = if x[0].norm() == 0.0 { one() } else { x[0] / x[0].norm() };
        let alpha = -phase * xnorm;
        let mut v = x.clone();
        v[0] -= alpha;
        let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            continue;
        }
        for z in v.iter_mut() {
            *z /= vnorm;
        }
        // H ← (I − 2vv*) H on rows k+1..n
        for j in 0..n {
            let dot: Complex64 = (0..v.len()).map(|i| v[i].conj() * h[(k + 1 + i, j)]).sum();
            for i in 0..v.len() {
                h[(k + 1 + i, j)] -= v[i] * dot * 2.0;
            }
        }
        // H ← H (I − 2vv*) and Q ← Q (I − 2vv*) on columns k+1..n
        for m in [&mut *h, &mut *q] {
            for i in 0..n {
                let dot: Complex64 = (0..v.len()).map(|j| m[(i, k + 1 + j)] * v[j]).sum();
                for j in 0..v.len() {
                    m[(i, k + 1 + j)] -= dot * v[j].conj() * 2.0;
                }
            }
        }
        for i in k + 2..n {
            h[(i, k)] = zero();
        }
    }
}

/// Eigenvalue of `[[a, b], [c, d]]` closest to `d`.
fn wilkinson_shift(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let half_tr = (a + d) * 0.5;
    let det = a * d - b * c;
    let disc = (half_tr * half_tr - det).sqrt();
    let l1 = half_tr + disc;
    let l2 = half_tr - disc;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// `A = QTQ*` with `Q` unitary and `T` upper triangular.
pub fn complex_schur(a: &Mat) -> Result<SchurForm> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(LabError::Shape("Schur decomposition needs a square matrix".into()));
    }
    let mut h = a.clone();
    let mut q = Mat::identity(n, n);
    if n <= 1 {
        return Ok(SchurForm { q, t: h });
    }
    hessenberg(&mut h, &mut q);
    let scale = frobenius(&h);
    if scale == 0.0 {
        return Ok(SchurForm { q, t: h });
    }
    let eps = f64::EPSILON;
    let mut hi = n - 1;
    let mut sweeps = 0usize;
    let mut total = 0usize;
    while hi > 0 {
        // Deflate negligible subdiagonals in the active block.
        let mut lo = hi;
        while lo > 0 {
            let sub = h[(lo, lo - 1)].norm();
            let mut diag = h[(lo - 1, lo - 1)].norm() + h[(lo, lo)].norm();
            if diag == 0.0 {
                diag = scale;
            }
            if sub <= eps * diag || sub < f64::MIN_POSITIVE {
                h[(lo, lo - 1)] = zero();
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            hi -= 1;
            sweeps = 0;
            continue;
        }
        sweeps += 1;
        total += 1;
        if sweeps > MAX_SWEEPS_PER_EIGENVALUE || total > MAX_SWEEPS_PER_EIGENVALUE * n {
            return Err(LabError::Computation(format!(
                "Schur iteration did not converge (active block {lo}..={hi})"
            )));
        }
        let shift = if sweeps % 11 == 0 {
            // Exceptional shift to break cycles.
            h[(hi, hi)] + Complex64::new(0.75 * h[(hi, hi - 1)].norm(), 0.0)
        } else {
            wilkinson_shift(
                h[(hi - 1, hi - 1)],
                h[(hi - 1, hi)],
                h[(hi, hi - 1)],
                h[(hi, hi)],
            )
        };
        for k in lo..hi {
            let (x, y) = if k == lo {
                (h[(lo, lo)] - shift, h[(lo + 1, lo)])
            } else {
                (h[(k, k - 1)], h[(k + 1, k - 1)])
            };
            let (c, s) = givens(x, y);
            let first_col = if k == lo { lo } else { k - 1 };
            rotate_rows(&mut h, k, c, s, first_col..n);
            let last_row = (k + 2).min(hi);
            rotate_cols(&mut h, k, c, s, 0..last_row + 1);
            rotate_cols(&mut q, k, c, s, 0..n);
            if k > lo {
                h[(k + 1, k - 1)] = zero();
            }
        }
    }
    for j in 0..n {
        for i in j + 1..n {
            h[(i, j)] = zero();
        }
    }
    Ok(SchurForm { q, t: h })
}

impl SchurForm {
    pub fn eigenvalues(&self) -> Vec<Complex64> {
        (0..self.t.nrows()).map(|i| self.t[(i, i)]).collect()
    }

    pub fn reconstruct(&self) -> Mat {
        &self.q * &self.t * self.q.adjoint()
    }

    /// Exchanges diagonal entries `k` and `k+1`.
    pub fn swap_adjacent(&mut self, k: usize) {
        let n = self.t.nrows();
        let a = self.t[(k, k)];
        let b = self.t[(k, k + 1)];
        let c = self.t[(k + 1, k + 1)];
        // Eigenvector of the 2×2 block for eigenvalue c is (b, c − a).
        let v1 = b;
        let v2 = c - a;
        let norm = v1.norm().hypot(v2.norm());
        if norm == 0.0 {
            return;
        }
        let (v1, v2) = (v1 / norm, v2 / norm);
        // G = [[v1, −v̄2], [v2, v̄1]] is unitary with first column v.
        // T ← G* T G on rows/cols k, k+1; Q ← Q G.
        for j in 0..n {
            let t1 = self.t[(k, j)];
            let t2 = self.t[(k + 1, j)];
            self.t[(k, j)] = v1.conj() * t1 + v2.conj() * t2;
            self.t[(k + 1, j)] = -v2 * t1 + v1 * t2;
        }
        for m in [&mut self.t, &mut self.q] {
            for i in 0..n {
                let t1 = m[(i, k)];
                let t2 = m[(i, k + 1)];
                m[(i, k)] = t1 * v1 + t2 * v2;
                m[(i, k + 1)] = -t1 * v2.conj() + t2 * v1.conj();
            }
        }
        self.t[(k + 1, k)] = zero();
        self.t[(k, k)] = c;
        self.t[(k + 1, k + 1)] = a;
    }

    /// Moves every diagonal entry with `select(z)` to the front, preserving
    /// relative order within each group. Returns the cluster size.
    pub fn reorder<F: Fn(Complex64) -> bool>(&mut self, select: F) -> usize {
        let n = self.t.nrows();
        let mut next = 0;
        for i in 0..n {
            if select(self.t[(i, i)]) {
                let mut pos = i;
                while pos > next {
                    self.swap_adjacent(pos - 1);
                    pos -= 1;
                }
                next += 1;
            }
        }
        next
    }
}

/// Solves `T11·Y − Y·T22 = rhs` for upper-triangular `T11`, `T22`.
pub fn solve_triangular_sylvester(t11: &Mat, t22: &Mat, rhs: &Mat) -> Result<Mat> {
    let k = t11.nrows();
    let m = t22.nrows();
    let mut y = Mat::zeros(k, m);
    let scale = norm2(t11).max(norm2(t22)).max(1.0);
    for j in 0..m {
        // (T11 − t22[j,j] I) y_j = rhs_j + Σ_{l<j} y_l t22[l,j]
        let mut col: Vec<Complex64> = (0..k).map(|i| rhs[(i, j)]).collect();
        for l in 0..j {
            let coef = t22[(l, j)];
            for i in 0..k {
                col[i] += y[(i, l)] * coef;
            }
        }
        let shift = t22[(j, j)];
        for i in (0..k).rev() {
            let mut acc = col[i];
            for p in i + 1..k {
                acc -= t11[(i, p)] * y[(p, j)];
            }
            let pivot = t11[(i, i)] - shift;
            if pivot.norm() <= f64::EPSILON * scale {
                return Err(LabError::Computation(
                    "clusters share an eigenvalue; Sylvester equation is singular".into(),
                ));
            }
            y[(i, j)] = acc / pivot;
        }
    }
    Ok(y)
}

/// Riesz projection onto the eigenvalues picked by `select`, with bases of
/// its range and kernel.
#[derive(Debug, Clone)]
pub struct SpectralSplit {
    pub projection: Mat,
    /// Orthonormal basis of the range (first `rank` Schur vectors).
    pub range_basis: Mat,
    /// Orthonormal basis of the kernel.
    pub kernel_basis: Mat,
    pub rank: usize,
    pub schur: SchurForm,
}

pub fn spectral_split<F: Fn(Complex64) -> bool>(a: &Mat, select: F) -> Result<SpectralSplit> {
    let n = a.nrows();
    let mut schur = complex_schur(a)?;
    let k = schur.reorder(select);
    let q = &schur.q;
    let t = &schur.t;
    let mut p_schur = Mat::zeros(n, n);
    for i in 0..k {
        p_schur[(i, i)] = one();
    }
    let kernel_basis;
    if k > 0 && k < n {
        let t11 = t.view((0, 0), (k, k)).into_owned();
        let t12 = t.view((0, k), (k, n - k)).into_owned();
        let t22 = t.view((k, k), (n - k, n - k)).into_owned();
        let y = solve_triangular_sylvester(&t11, &t22, &(-t12))?;
        for i in 0..k {
            for j in 0..n - k {
                p_schur[(i, k + j)] = -y[(i, j)];
            }
        }
        // ker P = Q [Y; I]
        let mut stacked = Mat::zeros(n, n - k);
        stacked.view_mut((0, 0), (k, n - k)).copy_from(&y);
        for j in 0..n - k {
            stacked[(k + j, j)] = one();
        }
        let spanning = q * stacked;
        kernel_basis = nalgebra::linalg::QR::new(spanning).q();
    } else if k == 0 {
        kernel_basis = q.clone();
    } else {
        kernel_basis = DMatrix::zeros(n, 0);
    }
    let projection = q * p_schur * q.adjoint();
    let range_basis = q.columns(0, k).into_owned();
    Ok(SpectralSplit {
        projection,
        range_basis,
        kernel_basis,
        rank: k,
        schur,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, seed: u64) -> Mat {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Mat::from_fn(n, n, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    fn real(rows: &[f64], n: usize) -> Mat {
        Mat::from_row_iterator(n, n, rows.iter().map(|&x| Complex64::new(x, 0.0)))
    }

    fn check_form(a: &Mat, s: &SchurForm) {
        let n = a.nrows();
        let scale = norm2(a).max(1.0);
        assert!(norm2(&(s.reconstruct() - a)) <= 1e-13 * scale * n as f64);
        assert!(norm2(&(s.q.adjoint() * &s.q - Mat::identity(n, n))) <= 1e-13 * n as f64);
        for j in 0..n {
            for i in j + 1..n {
                assert_eq!(s.t[(i, j)], zero());
            }
        }
    }

    #[test]
    fn degenerate_inputs() {
        for a in [Mat::zeros(3, 3), Mat::identity(4, 4), real(&[2.0, 1.0, 0.0, 2.0], 2)] {
            let s = complex_schur(&a).unwrap();
            check_form(&a, &s);
        }
        let s = complex_schur(&real(&[5.0], 1)).unwrap();
        assert_eq!(s.eigenvalues(), vec![Complex64::new(5.0, 0.0)]);
    }

    #[test]
    fn random_matrices_decompose() {
        for (n, seed) in [(2, 1), (5, 2), (8, 3), (16, 4), (33, 5)] {
            let a = random(n, seed);
            check_form(&a, &complex_schur(&a).unwrap());
        }
    }

    #[test]
    fn real_rotation_spectrum() {
        let a = real(&[0.0, -3.0, 3.0, 0.0], 2);
        let mut ev = complex_schur(&a).unwrap().eigenvalues();
        ev.sort_by(|x, y| x.im.total_cmp(&y.im));
        assert!((ev[0] - Complex64::new(0.0, -3.0)).norm() < 1e-14);
        assert!((ev[1] - Complex64::new(0.0, 3.0)).norm() < 1e-14);
    }

    #[test]
    fn reorder_moves_cluster_forward() {
        let a = random(10, 11);
        let mut s = complex_schur(&a).unwrap();
        let before = s.eigenvalues();
        let k = s.reorder(|z| z.re < 0.0);
        check_form(&a, &s);
        let after = s.eigenvalues();
        assert_eq!(k, before.iter().filter(|z| z.re < 0.0).count());
        assert!(after[..k].iter().all(|z| z.re < 0.0));
        assert!(after[k..].iter().all(|z| z.re >= 0.0));
        // eigenvalues are permuted, not changed
        for z in &before {
            assert!(after.iter().any(|w| (w - z).norm() < 1e-12));
        }
    }

    #[test]
    fn sylvester_residual() {
        let a = random(6, 21);
        let s = complex_schur(&a).unwrap();
        let t11 = s.t.view((0, 0), (3, 3)).into_owned();
        let t22 = s.t.view((3, 3), (3, 3)).into_owned();
        let rhs = random(6, 22).view((0, 0), (3, 3)).into_owned();
        let y = solve_triangular_sylvester(&t11, &t22, &rhs).unwrap();
        assert!(norm2(&(&t11 * &y - &y * &t22 - rhs)) < 1e-12);
    }

    #[test]
    fn projection_laws() {
        for seed in 30..36 {
            let a = random(9, seed);
            let split = spectral_split(&a, |z| z.re < 0.0).unwrap();
            let p = &split.projection;
            let pn = norm2(p);
            assert!(norm2(&(p * p - p)) <= 1e-9 * (1.0 + pn * pn));
            assert!(norm2(&(&a * p - p * &a)) <= 1e-9 * norm2(&a) * (1.0 + pn));
            // range and kernel bases are annihilated correctly
            assert!(norm2(&(p * &split.range_basis - &split.range_basis)) < 1e-9 * (1.0 + pn));
            assert!(norm2(&(p * &split.kernel_basis)) < 1e-9 * (1.0 + pn));
            assert_eq!(split.range_basis.ncols() + split.kernel_basis.ncols(), 9);
        }
    }

    #[test]
    fn diagonal_projection() {
        let a = real(&[1.0, 0.0, 0.0, -1.0], 2);
        let split = spectral_split(&a, |z| z.re < 0.0).unwrap();
        let expected = real(&[0.0, 0.0, 0.0, 1.0], 2);
        assert!(norm2(&(split.projection - expected)) < 1e-14);
        assert_eq!(split.rank, 1);
    }
}
