//! Matrix Market and CSV exchange.
//!
//! Matrix Market: `coordinate` or `array`, field `real`, `integer` or
//! `complex`, symmetry `general` only. CSV: one line per row; a token is a
//! real number or `a+bi`. A CSV with `2n` columns on each of `n` lines is
//! read as interleaved real/imaginary pairs.
//!
//! Writers use 17 significant digits, so a save/load round trip is exact.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::operator::{LinearOperator, Mat};
use crate::report::format_f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixFormat {
    MatrixMarket,
    Csv,
}

impl MatrixFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("mtx") | Some("mm") => Ok(MatrixFormat::MatrixMarket),
            Some("csv") => Ok(MatrixFormat::Csv),
            _ => Err(LabError::Input(format!(
                "cannot infer matrix format of '{}'; pass --format",
                path.display()
            ))),
        }
    }
}

impl FromStr for MatrixFormat {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mm" | "mtx" | "matrix_market" => Ok(MatrixFormat::MatrixMarket),
            "csv" => Ok(MatrixFormat::Csv),
            other => Err(LabError::Input(format!("unknown matrix format '{other}'"))),
        }
    }
}

pub fn load_matrix(path: &Path, format: MatrixFormat) -> Result<LinearOperator> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| LabError::Io(format!("{}: {e}", path.display())))?;
    parse_matrix(&text, format)
}

pub fn parse_matrix(text: &str, format: MatrixFormat) -> Result<LinearOperator> {
    let m = match format {
        MatrixFormat::MatrixMarket => parse_matrix_market(text)?,
        MatrixFormat::Csv => parse_csv(text)?,
    };
    if m.nrows() != m.ncols() {
        return Err(LabError::Shape(format!(
            "matrix is {}×{}, expected square",
            m.nrows(),
            m.ncols()
        )));
    }
    LinearOperator::new(m)
}

pub fn save_matrix(a: &LinearOperator, path: &Path, format: MatrixFormat) -> Result<()> {
    std::fs::write(path, render_matrix(a, format))
        .map_err(|e| LabError::Io(format!("{}: {e}", path.display())))
}

pub fn render_matrix(a: &LinearOperator, format: MatrixFormat) -> String {
    match format {
        MatrixFormat::MatrixMarket => render_matrix_market(a.matrix()),
        MatrixFormat::Csv => render_csv(a.matrix()),
    }
}

fn parse_error(line: usize, message: impl Into<String>) -> LabError {
    LabError::Parse { line, message: message.into() }
}

fn parse_real(token: &str, line: usize) -> Result<f64> {
    token
        .parse::<f64>()
        .map_err(|_| parse_error(line, format!("'{token}' is not a number")))
}

#[derive(Clone, Copy, PartialEq)]
enum Field {
    Real,
    Complex,
}

fn parse_matrix_market(text: &str) -> Result<Mat> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| parse_error(1, "empty file"))?;
    let words: Vec<String> = header.split_whitespace().map(|w| w.to_ascii_lowercase()).collect();
    if words.len() != 5 || words[0] != "%%matrixmarket" || words[1] != "matrix" {
        return Err(parse_error(1, "expected '%%MatrixMarket matrix <layout> <field> <symmetry>'"));
    }
    let coordinate = match words[2].as_str() {
        "coordinate" => true,
        "array" => false,
        other => return Err(parse_error(1, format!("unsupported layout '{other}'"))),
    };
    let field = match words[3].as_str() {
        "real" | "integer" | "double" => Field::Real,
        "complex" => Field::Complex,
        other => return Err(parse_error(1, format!("unsupported field '{other}'"))),
    };
    if words[4] != "general" {
        return Err(parse_error(1, format!("unsupported symmetry '{}'", words[4])));
    }
    let mut data = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });
    let (size_line, size) = data.next().ok_or_else(|| parse_error(2, "missing size line"))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| parse_error(size_line, format!("bad size '{t}'"))))
        .collect::<Result<_>>()?;
    let expected_dims = if coordinate { 3 } else { 2 };
    if dims.len() != expected_dims {
        return Err(parse_error(size_line, "wrong number of size fields"));
    }
    let (rows, cols) = (dims[0], dims[1]);
    let mut m = Mat::zeros(rows, cols);
    let value_tokens = if field == Field::Complex { 2 } else { 1 };
    let read_value = |tokens: &[&str], line: usize| -> Result<Complex64> {
        let re = parse_real(tokens[0], line)?;
        let im = if field == Field::Complex { parse_real(tokens[1], line)? } else { 0.0 };
        Ok(Complex64::new(re, im))
    };
    if coordinate {
        let nnz = dims[2];
        let mut seen = 0;
        for (line, l) in data {
            let tokens: Vec<&str> = l.split_whitespace().collect();
            if tokens.len() != 2 + value_tokens {
                return Err(parse_error(line, format!("expected {} fields", 2 + value_tokens)));
            }
            let i: usize = tokens[0].parse().map_err(|_| parse_error(line, "bad row index"))?;
            let j: usize = tokens[1].parse().map_err(|_| parse_error(line, "bad column index"))?;
            if i == 0 || j == 0 || i > rows || j > cols {
                return Err(parse_error(line, format!("index ({i}, {j}) out of range")));
            }
            m[(i - 1, j - 1)] += read_value(&tokens[2..], line)?;
            seen += 1;
        }
        if seen != nnz {
            return Err(parse_error(size_line, format!("declared {nnz} entries, found {seen}")));
        }
    } else {
        let mut k = 0;
        for (line, l) in data {
            let tokens: Vec<&str> = l.split_whitespace().collect();
            if tokens.len() != value_tokens {
                return Err(parse_error(line, format!("expected {value_tokens} fields")));
            }
            if k >= rows * cols {
                return Err(parse_error(line, "more entries than declared"));
            }
            // column-major
            m[(k % rows, k / rows)] = read_value(&tokens, line)?;
            k += 1;
        }
        if k != rows * cols {
            return Err(parse_error(size_line, format!("declared {} entries, found {k}", rows * cols)));
        }
    }
    Ok(m)
}

fn parse_csv(text: &str) -> Result<Mat> {
    let mut rows: Vec<(usize, Vec<Complex64>)> = Vec::new();
    let mut all_real = true;
    for (i, l) in text.lines().enumerate() {
        let line = i + 1;
        let t = l.trim();
        if t.is_empty() {
            continue;
        }
        let row = t
            .split(',')
            .map(|tok| {
                let tok = tok.trim();
                if let Ok(x) = tok.parse::<f64>() {
                    return Ok(Complex64::new(x, 0.0));
                }
                all_real = false;
                Complex64::from_str(tok)
                    .map_err(|_| parse_error(line, format!("'{tok}' is not a real or complex number")))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push((line, row));
    }
    if rows.is_empty() {
        return Err(parse_error(1, "no rows"));
    }
    let n = rows.len();
    let width = rows[0].1.len();
    if let Some((line, r)) = rows.iter().find(|(_, r)| r.len() != width) {
        return Err(parse_error(*line, format!("row has {} columns, expected {width}", r.len())));
    }
    let paired = all_real && width == 2 * n;
    let cols = if paired { n } else { width };
    let mut m = Mat::zeros(n, cols);
    for (i, (_, row)) in rows.iter().enumerate() {
        for j in 0..cols {
            m[(i, j)] = if paired {
                Complex64::new(row[2 * j].re, row[2 * j + 1].re)
            } else {
                row[j]
            };
        }
    }
    Ok(m)
}

fn is_real(m: &Mat) -> bool {
    m.iter().all(|z| z.im == 0.0)
}

fn format_complex(z: Complex64) -> String {
    let im = format_f64(z.im);
    let sign = if im.starts_with('-') { "" } else { "+" };
    format!("{}{sign}{im}i", format_f64(z.re))
}

fn render_matrix_market(m: &Mat) -> String {
    let real = is_real(m);
    let mut out = format!(
        "%%MatrixMarket matrix array {} general\n{} {}\n",
        if real { "real" } else { "complex" },
        m.nrows(),
        m.ncols()
    );
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let z = m[(i, j)];
            if real {
                let _ = writeln!(out, "{}", format_f64(z.re));
            } else {
                let _ = writeln!(out, "{} {}", format_f64(z.re), format_f64(z.im));
            }
        }
    }
    out
}

fn render_csv(m: &Mat) -> String {
    let real = is_real(m);
    let mut out = String::new();
    for i in 0..m.nrows() {
        let cells: Vec<String> = (0..m.ncols())
            .map(|j| {
                let z = m[(i, j)];
                if real { format_f64(z.re) } else { format_complex(z) }
            })
            .collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coordinate_identity() {
        let text = "%%MatrixMarket matrix coordinate real general\n% comment\n2 2 2\n1 1 1.0\n2 2 1.0\n";
        let a = parse_matrix(text, MatrixFormat::MatrixMarket).unwrap();
        assert_eq!(a.matrix(), LinearOperator::identity(2).matrix());
    }

    #[test]
    fn csv_nilpotent() {
        let a = parse_matrix("0,1\n0,0", MatrixFormat::Csv).unwrap();
        let expected = LinearOperator::from_real_rows(2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!(a.matrix(), expected.matrix());
    }

    #[test]
    fn complex_inputs() {
        let mm = "%%MatrixMarket matrix array complex general\n1 1\n1.5 -2\n";
        let a = parse_matrix(mm, MatrixFormat::MatrixMarket).unwrap();
        assert_eq!(a.get(0, 0), Complex64::new(1.5, -2.0));
        let tokens = parse_matrix("1+2i,0\n0,-i", MatrixFormat::Csv).unwrap();
        assert_eq!(tokens.get(0, 0), Complex64::new(1.0, 2.0));
        assert_eq!(tokens.get(1, 1), Complex64::new(0.0, -1.0));
        let paired = parse_matrix("1,2,0,0\n0,0,0,-1", MatrixFormat::Csv).unwrap();
        assert_eq!(paired.matrix(), tokens.matrix());
    }

    #[test]
    fn parse_errors_carry_lines() {
        let err = parse_matrix("1,2\n3,x\n", MatrixFormat::Csv).unwrap_err();
        assert!(matches!(err, LabError::Parse { line: 2, .. }), "{err:?}");
        let mm = "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n";
        let err = parse_matrix(mm, MatrixFormat::MatrixMarket).unwrap_err();
        assert!(matches!(err, LabError::Parse { line: 3, .. }), "{err:?}");
        let err = parse_matrix("1,2\n3\n", MatrixFormat::Csv).unwrap_err();
        assert!(matches!(err, LabError::Parse { line: 2, .. }), "{err:?}");
    }

    #[test]
    fn non_square_is_shape_error() {
        let err = parse_matrix("1,2,3\n4,5,6\n", MatrixFormat::Csv).unwrap_err();
        assert!(matches!(err, LabError::Shape(_)), "{err:?}");
    }

    #[test]
    fn round_trips_are_exact() {
        let rows = [0.1, -1.0 / 3.0, 2.0f64.sqrt(), 1e-300, 6.02214076e23, -0.0, 5e-324, 1.0];
        let real = LinearOperator::from_real_rows(2, &rows[..4]).unwrap();
        let cplx = LinearOperator::from_complex_rows(
            2,
            &[
                Complex64::new(rows[0], rows[1]),
                Complex64::new(rows[2], rows[3]),
                Complex64::new(rows[4], rows[5]),
                Complex64::new(rows[6], rows[7]),
            ],
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        for a in [&real, &cplx] {
            for (fmt, name) in [(MatrixFormat::MatrixMarket, "a.mtx"), (MatrixFormat::Csv, "a.csv")] {
                let path = dir.path().join(name);
                save_matrix(a, &path, fmt).unwrap();
                let back = load_matrix(&path, MatrixFormat::from_path(&path).unwrap()).unwrap();
                assert_eq!(back.matrix(), a.matrix(), "{fmt:?}");
            }
        }
    }

    #[test]
    fn fixed_serializations() {
        let id = LinearOperator::identity(2);
        assert_eq!(
            render_matrix(&id, MatrixFormat::Csv),
            "1.0000000000000000e0,0.0000000000000000e0\n0.0000000000000000e0,1.0000000000000000e0\n"
        );
        assert_eq!(
            render_matrix(&LinearOperator::zeros(1), MatrixFormat::MatrixMarket),
            "%%MatrixMarket matrix array real general\n1 1\n0.0000000000000000e0\n"
        );
    }
}
