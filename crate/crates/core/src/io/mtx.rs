use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;

use super::fmt_g17;
use crate::error::{Error, Result};
use crate::linalg::SysMatrix;
use crate::scalar::Real;

#[derive(Clone, Copy, PartialEq)]
enum Symmetry {
    General,
    Symmetric,
    Skew,
}

fn perr(origin: &str, line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Parse(format!("{origin}:{line}: {msg}"))
}

/// Parses Matrix Market text: `coordinate` (real, integer or pattern) or
/// `array` (real or integer), `general`, `symmetric` or
/// `skew-symmetric`. `origin` only labels diagnostics.
pub fn parse_matrix_market<T: Real>(text: &str, origin: &str) -> Result<SysMatrix<T>> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (hl, header) = lines.next().ok_or_else(|| perr(origin, 1, "empty file"))?;
    let words: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if words.len() != 5 || words[0] != "%%matrixmarket" || words[1] != "matrix" {
        return Err(perr(origin, hl, "expected `%%MatrixMarket matrix <format> <field> <symmetry>`"));
    }
    let coordinate = match words[2].as_str() {
        "coordinate" => true,
        "array" => false,
        f => return Err(perr(origin, hl, format!("unsupported format `{f}`"))),
    };
    let pattern = match words[3].as_str() {
        "real" | "integer" | "double" => false,
        "pattern" if coordinate => true,
        f => return Err(perr(origin, hl, format!("unsupported field `{f}`"))),
    };
    let sym = match words[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::Skew,
        s => return Err(perr(origin, hl, format!("unsupported symmetry `{s}`"))),
    };
    let mut body = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });
    let (sl, size) = body.next().ok_or_else(|| perr(origin, hl, "missing size line"))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|w| w.parse().map_err(|_| perr(origin, sl, format!("bad size entry `{w}`"))))
        .collect::<Result<_>>()?;
    let num = |w: &str, line: usize| -> Result<T> {
        let v: f64 = w.parse().map_err(|_| perr(origin, line, format!("bad number `{w}`")))?;
        if !v.is_finite() {
            return Err(perr(origin, line, "non-finite entry"));
        }
        Ok(T::of(v))
    };
    if coordinate {
        let [rows, cols, nnz] = dims[..] else {
            return Err(perr(origin, sl, "coordinate size line needs `rows cols nnz`"));
        };
        let mut trip = Vec::with_capacity(nnz * if sym == Symmetry::General { 1 } else { 2 });
        let mut seen = 0;
        for (line, l) in body {
            let w: Vec<&str> = l.split_whitespace().collect();
            let want = if pattern { 2 } else { 3 };
            if w.len() != want {
                return Err(perr(origin, line, format!("expected {want} fields, found {}", w.len())));
            }
            let idx = |s: &str, lim: usize| -> Result<usize> {
                match s.parse::<usize>() {
                    Ok(i) if i >= 1 && i <= lim => Ok(i - 1),
                    _ => Err(perr(origin, line, format!("index `{s}` out of range 1..={lim}"))),
                }
            };
            let (i, j) = (idx(w[0], rows)?, idx(w[1], cols)?);
            let v = if pattern { T::one() } else { num(w[2], line)? };
            trip.push((i, j, v));
            if i != j {
                match sym {
                    Symmetry::General => {}
                    Symmetry::Symmetric => trip.push((j, i, v)),
                    Symmetry::Skew => trip.push((j, i, -v)),
                }
            }
            seen += 1;
        }
        if seen != nnz {
            return Err(perr(origin, sl, format!("declared {nnz} entries, found {seen}")));
        }
        Ok(SysMatrix::from_triplets(rows, cols, &trip))
    } else {
        let [rows, cols] = dims[..] else {
            return Err(perr(origin, sl, "array size line needs `rows cols`"));
        };
        let mut vals = Vec::new();
        let mut last = sl;
        for (line, l) in body {
            for w in l.split_whitespace() {
                vals.push(num(w, line)?);
            }
            last = line;
        }
        let mut m = DMatrix::zeros(rows, cols);
        let mut it = vals.into_iter();
        // column-major, lower triangle only when symmetric
        for j in 0..cols {
            let start = if sym == Symmetry::General { 0 } else { j + usize::from(sym == Symmetry::Skew) };
            for i in start..rows {
                let v = it.next().ok_or_else(|| perr(origin, last, "too few entries"))?;
                m[(i, j)] = v;
                if i != j {
                    match sym {
                        Symmetry::General => {}
                        Symmetry::Symmetric => m[(j, i)] = v,
                        Symmetry::Skew => m[(j, i)] = -v,
                    }
                }
            }
        }
        if it.next().is_some() {
            return Err(perr(origin, last, "too many entries"));
        }
        Ok(SysMatrix::auto_dense(m))
    }
}

pub fn read_matrix_market<T: Real>(path: &Path) -> Result<SysMatrix<T>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.display().to_string(), source })?;
    parse_matrix_market(&text, &path.display().to_string())
}

/// Coordinate real general format, row-major entry order, `%.17g` values.
pub fn write_matrix_market<T: Real>(m: &SysMatrix<T>) -> String {
    let trip: Vec<(usize, usize, T)> = match m {
        SysMatrix::Sparse(s) => s.triplets().collect(),
        SysMatrix::Dense(d) => {
            let mut t = Vec::new();
            for i in 0..d.nrows() {
                for j in 0..d.ncols() {
                    if d[(i, j)] != T::zero() {
                        t.push((i, j, d[(i, j)]));
                    }
                }
            }
            t
        }
    };
    let mut out = String::from("%%MatrixMarket matrix coordinate real general\n");
    let _ = writeln!(out, "{} {} {}", m.nrows(), m.ncols(), trip.len());
    for (i, j, v) in trip {
        let _ = writeln!(out, "{} {} {}", i + 1, j + 1, fmt_g17(v.to_f64_lossy()));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coordinate_round_trip() {
        let trip = [(0, 0, 1.5), (2, 1, -0.1), (1, 2, 1.0 / 3.0)];
        let m = SysMatrix::<f64>::from_triplets(3, 3, &trip);
        let text = write_matrix_market(&m);
        let back: SysMatrix<f64> = parse_matrix_market(&text, "mem").unwrap();
        assert_eq!(back.to_dense(), m.to_dense());
    }

    #[test]
    fn symmetric_and_array() {
        let sym = "%%MatrixMarket matrix coordinate real symmetric\n% c\n2 2 2\n1 1 4\n2 1 -1\n";
        let m: SysMatrix<f64> = parse_matrix_market(sym, "s").unwrap();
        assert_eq!(m.get(0, 1), -1.0);
        let arr = "%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n4\n";
        let a: SysMatrix<f64> = parse_matrix_market(arr, "a").unwrap();
        assert_eq!(a.get(1, 0), 2.0);
        assert_eq!(a.get(0, 1), 3.0);
    }

    #[test]
    fn diagnostics_name_the_line() {
        let bad = "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n";
        let e = parse_matrix_market::<f64>(bad, "f.mtx").unwrap_err().to_string();
        assert!(e.starts_with("f.mtx:3:"), "{e}");
    }
}
