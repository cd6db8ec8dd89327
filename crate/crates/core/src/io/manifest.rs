//! TOML system manifests:
//!
//! ```toml
//! n = 1
//! m = 1
//! delays = [1.0]
//! A0 = [[0.5]]
//! A1 = "a1.mtx"        # Matrix Market file, relative to the manifest
//! B = [1.0]            # flat arrays are row-major
//! C = 1.0
//! ```

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use toml::{Table, Value};

use super::{fmt_g17, read_matrix_market, write_matrix_market};
use crate::error::{Error, Result};
use crate::linalg::SysMatrix;
use crate::model::{DelaySystem, SystemParts};
use crate::scalar::Real;

struct Ctx<'a> {
    text: &'a str,
    origin: &'a str,
    base: &'a Path,
}

impl Ctx<'_> {
    /// First line that assigns `key`, for diagnostics.
    fn line_of(&self, key: &str) -> usize {
        self.text
            .lines()
            .position(|l| {
                let t = l.trim_start();
                t.strip_prefix(key).is_some_and(|rest| rest.trim_start().starts_with('='))
            })
            .map_or(1, |i| i + 1)
    }

    fn err(&self, key: &str, msg: impl std::fmt::Display) -> Error {
        Error::Parse(format!("{}:{}: `{key}`: {msg}", self.origin, self.line_of(key)))
    }

    fn number(&self, key: &str, v: &Value) -> Result<f64> {
        let x = match v {
            Value::Float(f) => *f,
            Value::Integer(i) => *i as f64,
            other => return Err(self.err(key, format!("expected a number, found {}", other.type_str()))),
        };
        if !x.is_finite() {
            return Err(self.err(key, "entries must be finite"));
        }
        Ok(x)
    }

    fn count(&self, table: &Table, key: &str) -> Result<usize> {
        match table.get(key) {
            Some(Value::Integer(i)) if *i >= 0 => Ok(*i as usize),
            Some(_) => Err(self.err(key, "expected a nonnegative integer")),
            None => Err(Error::Parse(format!("{}: missing key `{key}`", self.origin))),
        }
    }

    /// `rows` or `cols` fixes the shape of flat arrays and scalars.
    fn matrix<T: Real>(&self, table: &Table, key: &str, rows: Option<usize>, cols: Option<usize>) -> Result<SysMatrix<T>> {
        let v = table.get(key).ok_or_else(|| Error::Parse(format!("{}: missing key `{key}`", self.origin)))?;
        let m = match v {
            Value::String(rel) => {
                let path = self.base.join(rel);
                read_matrix_market(&path).map_err(|e| match e {
                    Error::Io { source, .. } => self.err(key, format!("cannot read {}: {source}", path.display())),
                    other => other,
                })?
            }
            Value::Float(_) | Value::Integer(_) => {
                SysMatrix::Dense(DMatrix::from_element(1, 1, T::of(self.number(key, v)?)))
            }
            Value::Array(items) if items.iter().all(|x| x.is_array()) => {
                let mut data = Vec::new();
                let mut width = None;
                for (r, row) in items.iter().enumerate() {
                    let row = row.as_array().expect("checked");
                    if *width.get_or_insert(row.len()) != row.len() {
                        return Err(self.err(key, format!("row {} has {} entries, expected {}", r + 1, row.len(), width.unwrap())));
                    }
                    for x in row {
                        data.push(T::of(self.number(key, x)?));
                    }
                }
                SysMatrix::auto_dense(DMatrix::from_row_slice(items.len(), width.unwrap_or(0), &data))
            }
            Value::Array(items) => {
                let data: Vec<T> = items.iter().map(|x| self.number(key, x).map(T::of)).collect::<Result<_>>()?;
                let len = data.len();
                let (r, c) = match (rows, cols) {
                    (Some(r), _) if r > 0 && len.is_multiple_of(r) => (r, len / r),
                    (_, Some(c)) if c > 0 && len.is_multiple_of(c) => (len / c, c),
                    _ => return Err(self.err(key, format!("cannot shape {len} entries"))),
                };
                SysMatrix::auto_dense(DMatrix::from_row_slice(r, c, &data))
            }
            other => return Err(self.err(key, format!("expected a matrix, found {}", other.type_str()))),
        };
        if rows.is_some_and(|r| r != m.nrows()) || cols.is_some_and(|c| c != m.ncols()) {
            return Err(self.err(
                key,
                format!(
                    "shape {}x{} does not match the expected {}x{}",
                    m.nrows(),
                    m.ncols(),
                    rows.map_or("*".into(), |r| r.to_string()),
                    cols.map_or("*".into(), |c| c.to_string())
                ),
            ));
        }
        Ok(m)
    }
}

/// Parses manifest text; relative matrix paths resolve against `base`.
pub fn parse_manifest<T: Real>(text: &str, origin: &str, base: &Path) -> Result<DelaySystem<T>> {
    let table: Table = text.parse().map_err(|e: toml::de::Error| {
        let line = e.span().map_or(1, |s| text[..s.start.min(text.len())].matches('\n').count() + 1);
        Error::Parse(format!("{origin}:{line}: {}", e.message().trim()))
    })?;
    let cx = Ctx { text, origin, base };
    let n = cx.count(&table, "n")?;
    let m = cx.count(&table, "m")?;
    let known = |k: &str| {
        matches!(k, "n" | "m" | "delays" | "B" | "C")
            || k.strip_prefix('A').and_then(|i| i.parse::<usize>().ok()).is_some_and(|i| i <= m)
    };
    if let Some(k) = table.keys().find(|k| !known(k)) {
        return Err(cx.err(k, "unknown key"));
    }
    let delays = match table.get("delays") {
        Some(Value::Array(a)) => a.iter().map(|v| cx.number("delays", v).map(T::of)).collect::<Result<Vec<T>>>()?,
        Some(_) => return Err(cx.err("delays", "expected an array of numbers")),
        None => return Err(Error::Parse(format!("{origin}: missing key `delays`"))),
    };
    if delays.len() != m {
        return Err(cx.err("delays", format!("{} delays given but m = {m}", delays.len())));
    }
    let a = (0..=m)
        .map(|i| cx.matrix(&table, &format!("A{i}"), Some(n), Some(n)))
        .collect::<Result<Vec<_>>>()?;
    let b = cx.matrix::<T>(&table, "B", Some(n), None)?.to_dense();
    let c = cx.matrix::<T>(&table, "C", None, Some(n))?.to_dense();
    DelaySystem::new(SystemParts { a, taus: delays, b, c })
}

pub fn load_manifest<T: Real>(path: &Path) -> Result<DelaySystem<T>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.display().to_string(), source })?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_manifest(&text, &path.display().to_string(), base)
}

fn inline_rows<T: Real>(m: &DMatrix<T>) -> String {
    let rows: Vec<String> = m
        .row_iter()
        .map(|r| {
            let cells: Vec<String> = r.iter().map(|v| fmt_g17(v.to_f64_lossy())).collect();
            format!("[{}]", cells.join(", "))
        })
        .collect();
    format!("[{}]", rows.join(", "))
}

/// Writes `system` to `path`. Sparse coefficient matrices go to Matrix
/// Market files next to it, named `<stem>.<key>.mtx`. Returns every path
/// written, the manifest first.
pub fn write_manifest<T: Real>(system: &DelaySystem<T>, path: &Path) -> Result<Vec<PathBuf>> {
    let io = |p: &Path| {
        let p = p.display().to_string();
        move |source| Error::Io { path: p, source }
    };
    let dir = path.parent().unwrap_or(Path::new("."));
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("system");
    let mut written = vec![path.to_path_buf()];
    let mut text = String::new();
    let _ = writeln!(text, "n = {}", system.n());
    let _ = writeln!(text, "m = {}", system.m());
    let delays: Vec<String> = system.taus().iter().map(|t| fmt_g17(t.to_f64_lossy())).collect();
    let _ = writeln!(text, "delays = [{}]", delays.join(", "));
    let mut sidecars = Vec::new();
    for (i, a) in system.a().iter().enumerate() {
        let key = format!("A{i}");
        match a {
            SysMatrix::Dense(d) => {
                let _ = writeln!(text, "{key} = {}", inline_rows(d));
            }
            SysMatrix::Sparse(_) => {
                let file = format!("{stem}.{key}.mtx");
                let _ = writeln!(text, "{key} = \"{file}\"");
                sidecars.push((dir.join(file), write_matrix_market(a)));
            }
        }
    }
    let _ = writeln!(text, "B = {}", inline_rows(system.b()));
    let _ = writeln!(text, "C = {}", inline_rows(system.c()));
    std::fs::write(path, text).map_err(io(path))?;
    for (p, body) in sidecars {
        std::fs::write(&p, body).map_err(io(&p))?;
        written.push(p);
    }
    Ok(written)
}
