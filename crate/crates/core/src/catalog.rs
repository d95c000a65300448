//! Reproducible generator families and operator sources.
//!
//! A source is either a catalog URI `catalog:family:dim:params:seed`
//! (params comma-separated, possibly empty) or a path to a matrix file.
//! The `catalog:` prefix is checked first, so a file literally named
//! `catalog:...` cannot be loaded.
//!
//! Random families draw from `ChaCha8Rng::seed_from_u64(seed)`, one
//! standard normal per entry in row-major order, scaled by `1/√dim`.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::matrix_io::{load_matrix, MatrixFormat};
use crate::operator::{LinearOperator, Mat};

/// Stability margin for `random_stable` when no parameter is given.
pub const DEFAULT_DELTA: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Zero,
    Diagonal,
    Jordan,
    Rotation,
    RandomStable,
    TransportShift,
    HeatLaplacian,
}

impl Family {
    pub const ALL: [Family; 7] = [
        Family::Zero,
        Family::Diagonal,
        Family::Jordan,
        Family::Rotation,
        Family::RandomStable,
        Family::TransportShift,
        Family::HeatLaplacian,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Zero => "zero",
            Family::Diagonal => "diagonal",
            Family::Jordan => "jordan",
            Family::Rotation => "rotation",
            Family::RandomStable => "random_stable",
            Family::TransportShift => "transport_shift",
            Family::HeatLaplacian => "heat_laplacian",
        }
    }
}

impl FromStr for Family {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| LabError::Input(format!("unknown catalog family '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CatalogSpec {
    pub family: Family,
    pub dim: usize,
    pub params: Vec<f64>,
    pub seed: u64,
}

impl CatalogSpec {
    pub fn new(family: Family, dim: usize, params: Vec<f64>, seed: u64) -> Self {
        CatalogSpec { family, dim, params, seed }
    }

    pub fn to_uri(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for CatalogSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let params: Vec<String> = self.params.iter().map(|p| p.to_string()).collect();
        write!(
            f,
            "catalog:{}:{}:{}:{}",
            self.family.name(),
            self.dim,
            params.join(","),
            self.seed
        )
    }
}

impl FromStr for CatalogSpec {
    type Err = LabError;

    fn from_str(uri: &str) -> Result<Self> {
        let rest = uri
            .strip_prefix("catalog:")
            .ok_or_else(|| LabError::Input(format!("'{uri}' is not a catalog URI")))?;
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() < 2 || parts.len() > 4 {
            return Err(LabError::Input(format!(
                "catalog URI '{uri}' must be catalog:family:dim[:params[:seed]]"
            )));
        }
        let family = parts[0].parse()?;
        let dim = parts[1]
            .parse()
            .map_err(|_| LabError::Input(format!("bad catalog dimension '{}'", parts[1])))?;
        let params = match parts.get(2) {
            Some(p) if !p.is_empty() => p
                .split(',')
                .map(|x| {
                    x.trim()
                        .parse::<f64>()
                        .map_err(|_| LabError::Input(format!("bad catalog parameter '{x}'")))
                })
                .collect::<Result<_>>()?,
            _ => Vec::new(),
        };
        let seed = match parts.get(3) {
            Some(s) if !s.is_empty() => s
                .parse()
                .map_err(|_| LabError::Input(format!("bad catalog seed '{s}'")))?,
            _ => 0,
        };
        Ok(CatalogSpec { family, dim, params, seed })
    }
}

fn require_param(spec: &CatalogSpec, what: &str) -> Result<f64> {
    match spec.params.first() {
        Some(&p) if p.is_finite() => Ok(p),
        _ => Err(LabError::Input(format!(
            "{} needs a finite {what} parameter",
            spec.family.name()
        ))),
    }
}

fn real_matrix(n: usize, f: impl Fn(usize, usize) -> f64) -> Mat {
    Mat::from_fn(n, n, |i, j| Complex64::new(f(i, j), 0.0))
}

/// Standard normal entries from a seeded ChaCha8 stream, row-major.
pub fn gaussian_matrix(dim: usize, seed: u64) -> Mat {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = 1.0 / (dim as f64).sqrt();
    let mut m = Mat::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            let x: f64 = StandardNormal.sample(&mut rng);
            m[(i, j)] = Complex64::new(scale * x, 0.0);
        }
    }
    m
}

pub fn build(spec: &CatalogSpec) -> Result<LinearOperator> {
    let n = spec.dim;
    if n == 0 {
        return Err(LabError::Input("catalog dimension must be at least 1".into()));
    }
    let m = match spec.family {
        Family::Zero => Mat::zeros(n, n),
        Family::Diagonal => {
            if spec.params.len() != n {
                return Err(LabError::Input(format!(
                    "diagonal needs {n} eigenvalues, got {}",
                    spec.params.len()
                )));
            }
            real_matrix(n, |i, j| if i == j { spec.params[i] } else { 0.0 })
        }
        Family::Jordan => {
            let lambda = require_param(spec, "λ")?;
            real_matrix(n, |i, j| {
                if i == j {
                    lambda
                } else if j == i + 1 {
                    1.0
                } else {
                    0.0
                }
            })
        }
        Family::Rotation => {
            let theta = require_param(spec, "θ")?;
            let mut m = Mat::zeros(n, n);
            for b in 0..n / 2 {
                let k = 2 * b;
                m[(k, k + 1)] = Complex64::new(-theta, 0.0);
                m[(k + 1, k)] = Complex64::new(theta, 0.0);
            }
            m
        }
        Family::RandomStable => {
            let delta = spec.params.first().copied().unwrap_or(DEFAULT_DELTA);
            if !(delta.is_finite() && delta > 0.0) {
                return Err(LabError::Input(format!("random_stable needs δ > 0, got {delta}")));
            }
            let g = gaussian_matrix(n, spec.seed);
            let abscissa = LinearOperator::new(g.clone())?.spectrum()?.spectral_abscissa;
            let mut m = g;
            for i in 0..n {
                m[(i, i)] -= Complex64::new(abscissa + delta, 0.0);
            }
            m
        }
        Family::TransportShift => {
            // (u_{i−1} − u_i)·n with u_{−1} = u_{n−1}
            let h = n as f64;
            let mut m = real_matrix(n, |i, j| if i == j { -h } else { 0.0 });
            if n > 1 {
                for i in 0..n {
                    m[(i, (i + n - 1) % n)] += Complex64::new(h, 0.0);
                }
            }
            m
        }
        Family::HeatLaplacian => {
            let s = (n * n) as f64;
            real_matrix(n, |i, j| {
                if i == j {
                    -2.0 * s
                } else if i.abs_diff(j) == 1 {
                    s
                } else {
                    0.0
                }
            })
        }
    };
    Ok(LinearOperator::new(m)?.with_label(spec.to_uri()))
}

/// Resolves a catalog URI or a matrix file path.
pub fn resolve_source(source: &str, format: Option<MatrixFormat>) -> Result<LinearOperator> {
    if source.starts_with("catalog:") {
        return build(&source.parse()?);
    }
    let path = Path::new(source);
    let format = match format {
        Some(f) => f,
        None => MatrixFormat::from_path(path)?,
    };
    Ok(load_matrix(path, format)?.with_label(source))
}

/// The default test universe: every family at each dimension.
pub fn standard_catalog(dims: &[usize], seed: u64) -> Vec<CatalogSpec> {
    let mut specs = Vec::new();
    for &n in dims {
        let diag: Vec<f64> = (0..n)
            .map(|i| {
                let k = (i / 2 + 1) as f64;
                if i % 2 == 0 { -k } else { 0.5 * k }
            })
            .collect();
        specs.push(CatalogSpec::new(Family::Zero, n, vec![], 0));
        specs.push(CatalogSpec::new(Family::Diagonal, n, diag, 0));
        specs.push(CatalogSpec::new(Family::Jordan, n, vec![-1.0], 0));
        specs.push(CatalogSpec::new(Family::Rotation, n, vec![1.0], 0));
        specs.push(CatalogSpec::new(Family::RandomStable, n, vec![DEFAULT_DELTA], seed));
        specs.push(CatalogSpec::new(Family::TransportShift, n, vec![], 0));
        specs.push(CatalogSpec::new(Family::HeatLaplacian, n, vec![], 0));
    }
    specs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::norm2;
    use std::f64::consts::PI;

    fn spec(uri: &str) -> LinearOperator {
        build(&uri.parse().unwrap()).unwrap()
    }

    #[test]
    fn zero_and_jordan() {
        let z = spec("catalog:zero:3");
        assert_eq!(z.dim(), 3);
        assert!(z.is_zero());
        let j = spec("catalog:jordan:2:-1");
        let expected = LinearOperator::from_real_rows(2, &[-1.0, 1.0, 0.0, -1.0]).unwrap();
        assert_eq!(j.matrix(), expected.matrix());
    }

    #[test]
    fn heat_laplacian_spectrum() {
        let h = spec("catalog:heat_laplacian:4");
        assert_eq!(h.get(0, 0).re, -32.0);
        assert_eq!(h.get(0, 1).re, 16.0);
        let abscissa = h.spectrum().unwrap().spectral_abscissa;
        let oracle = 16.0 * (-2.0 + 2.0 * (PI / 5.0).cos());
        assert!((abscissa - oracle).abs() < 1e-12, "{abscissa} vs {oracle}");
    }

    #[test]
    fn heat_laplacian_is_negative_definite() {
        for n in 1..=12 {
            let h = spec(&format!("catalog:heat_laplacian:{n}"));
            assert_eq!(h.matrix(), &h.matrix().adjoint());
            assert!(h.spectrum().unwrap().spectral_abscissa < 0.0);
        }
    }

    #[test]
    fn transport_shift_is_neutral() {
        for n in 1..=9 {
            let t = spec(&format!("catalog:transport_shift:{n}"));
            let abscissa = t.spectrum().unwrap().spectral_abscissa;
            assert!(abscissa <= 1e-12 * n as f64, "n={n} abscissa={abscissa}");
        }
    }

    #[test]
    fn rotation_blocks() {
        let r = spec("catalog:rotation:3:0.5");
        assert_eq!(r.get(0, 1).re, -0.5);
        assert_eq!(r.get(1, 0).re, 0.5);
        assert_eq!(r.get(2, 2).re, 0.0);
    }

    #[test]
    fn random_stable_is_deterministic_and_stable() {
        let a = spec("catalog:random_stable:8:0.5:42");
        let b = spec("catalog:random_stable:8:0.5:42");
        assert_eq!(a.matrix(), b.matrix());
        let c = spec("catalog:random_stable:8:0.5:43");
        assert!(norm2(&(a.matrix() - c.matrix())) > 0.1);
        let abscissa = a.spectrum().unwrap().spectral_abscissa;
        assert!((abscissa + 0.5).abs() < 1e-10, "{abscissa}");
    }

    #[test]
    fn gaussian_stream_is_frozen() {
        // First draws of ChaCha8 seed 7, scaled by 1/√2; pins the stream.
        let g = gaussian_matrix(2, 7);
        let again = gaussian_matrix(2, 7);
        assert_eq!(g, again);
        let first = g[(0, 0)].re;
        let direct: f64 = StandardNormal.sample(&mut ChaCha8Rng::seed_from_u64(7));
        assert_eq!(first, direct / 2f64.sqrt());
    }

    #[test]
    fn invalid_specs() {
        assert!(build(&"catalog:jordan:2".parse().unwrap()).is_err());
        assert!(build(&"catalog:diagonal:3:1,2".parse().unwrap()).is_err());
        assert!(build(&"catalog:zero:0".parse().unwrap()).is_err());
        assert!("catalog:nope:2".parse::<CatalogSpec>().is_err());
        assert!("catalog:zero:x".parse::<CatalogSpec>().is_err());
        assert!(build(&"catalog:random_stable:3:-1:0".parse().unwrap()).is_err());
    }

    #[test]
    fn uri_round_trip() {
        let s = CatalogSpec::new(Family::Diagonal, 2, vec![-1.0, 0.25], 9);
        assert_eq!(s.to_uri(), "catalog:diagonal:2:-1,0.25:9");
        assert_eq!(s.to_uri().parse::<CatalogSpec>().unwrap(), s);
    }

    #[test]
    fn standard_catalog_builds() {
        for s in standard_catalog(&[1, 2, 5], 3) {
            let op = build(&s).unwrap();
            assert_eq!(op.dim(), s.dim);
        }
    }
}
