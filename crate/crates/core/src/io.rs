//! Plain-text input formats.
//!
//! * Matrix: first line `n`, then `n` rows of `n` whitespace-separated
//!   decimals. Loaded matrices are symmetrized.
//! * Dense vectors: first line `n` (or `n m`), then `n` rows of `m`
//!   decimals. Column `j` is the vector of ground element `j`.
//! * Edge list: one `u v [weight]` per line, 0-indexed vertices.
//!
//! Blank lines and lines starting with `#` are ignored everywhere.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graphs::WeightedGraph;
use crate::symmat::SymMatrix;

/// Asymmetry above which loading a matrix logs a warning.
pub const ASYMMETRY_WARN: f64 = 1e-8;

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        line: 0,
        message: e.to_string(),
    })
}

struct Lines<'a> {
    origin: &'a str,
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(origin: &'a str, text: &'a str) -> Self {
        Lines {
            origin,
            inner: text.lines().enumerate(),
            last: 0,
        }
    }

    fn err(&self, line: usize, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.origin.to_string(),
            line,
            message: message.into(),
        }
    }

    /// Next non-blank, non-comment line as `(line number, fields)`.
    fn next_fields(&mut self) -> Option<(usize, Vec<&'a str>)> {
        for (i, raw) in self.inner.by_ref() {
            let t = raw.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            self.last = i + 1;
            return Some((i + 1, t.split_whitespace().collect()));
        }
        None
    }

    fn expect_fields(&mut self, what: &str) -> Result<(usize, Vec<&'a str>)> {
        let last = self.last;
        self.next_fields()
            .ok_or_else(|| self.err(last + 1, format!("unexpected end of input, expected {what}")))
    }

    fn number<T: std::str::FromStr>(&self, line: usize, s: &str) -> Result<T> {
        s.parse()
            .map_err(|_| self.err(line, format!("cannot parse `{s}` as a number")))
    }

    fn reals(&self, line: usize, fields: &[&str]) -> Result<Vec<f64>> {
        fields
            .iter()
            .map(|s| {
                let v: f64 = self.number(line, s)?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(self.err(line, format!("non-finite value `{s}`")))
                }
            })
            .collect()
    }

    fn finish(&mut self) -> Result<()> {
        match self.next_fields() {
            Some((line, _)) => Err(self.err(line, "trailing content")),
            None => Ok(()),
        }
    }
}

/// Parses the dense format; returns the rows.
fn parse_dense(origin: &str, text: &str, square: bool) -> Result<Vec<Vec<f64>>> {
    let mut lines = Lines::new(origin, text);
    let (hl, header) = lines.expect_fields("a size header")?;
    let (n, mut m): (usize, Option<usize>) = match header.as_slice() {
        [n] => (lines.number(hl, n)?, None),
        [n, m] if !square => (lines.number(hl, n)?, Some(lines.number(hl, m)?)),
        _ => return Err(lines.err(hl, "size header must be a single integer")),
    };
    if square {
        m = Some(n);
    }
    let mut rows = Vec::with_capacity(n);
    for r in 0..n {
        let (line, fields) = lines.expect_fields(&format!("row {}", r + 1))?;
        let row = lines.reals(line, &fields)?;
        let want = *m.get_or_insert(row.len());
        if row.len() != want {
            return Err(lines.err(line, format!("expected {want} values, found {}", row.len())));
        }
        rows.push(row);
    }
    lines.finish()?;
    Ok(rows)
}

/// Parses a matrix from text; `origin` names the source in errors.
pub fn parse_matrix(origin: &str, text: &str) -> Result<SymMatrix> {
    let rows = parse_dense(origin, text, true)?;
    let (mat, asym) = SymMatrix::from_rows_reporting(&rows)?;
    if asym > ASYMMETRY_WARN {
        log::warn!("{origin}: matrix asymmetric by {asym:e}; symmetrized");
    }
    Ok(mat)
}

pub fn read_matrix(path: &Path) -> Result<SymMatrix> {
    parse_matrix(&path.display().to_string(), &read(path)?)
}

/// Parses a dense vector file into one vector per column.
pub fn parse_vectors(origin: &str, text: &str) -> Result<Vec<Vec<f64>>> {
    let rows = parse_dense(origin, text, false)?;
    let m = rows.first().map_or(0, Vec::len);
    Ok((0..m).map(|j| rows.iter().map(|r| r[j]).collect()).collect())
}

pub fn read_vectors(path: &Path) -> Result<Vec<Vec<f64>>> {
    parse_vectors(&path.display().to_string(), &read(path)?)
}

/// Parses an edge list. The vertex count is one more than the largest
/// index seen; missing weights default to 1.
pub fn parse_edge_list(origin: &str, text: &str) -> Result<WeightedGraph> {
    let mut lines = Lines::new(origin, text);
    let mut edges = Vec::new();
    let mut n = 0;
    while let Some((line, fields)) = lines.next_fields() {
        let (u, v, w): (usize, usize, f64) = match fields.as_slice() {
            [u, v] => (lines.number(line, u)?, lines.number(line, v)?, 1.0),
            [u, v, w] => (
                lines.number(line, u)?,
                lines.number(line, v)?,
                lines.reals(line, &[w])?[0],
            ),
            _ => return Err(lines.err(line, "expected `u v [weight]`")),
        };
        if u == v {
            return Err(lines.err(line, format!("self-loop at vertex {u}")));
        }
        if w <= 0.0 {
            return Err(lines.err(line, format!("weight {w} must be positive")));
        }
        n = n.max(u.max(v) + 1);
        edges.push((u, v, w));
    }
    WeightedGraph::new(n, edges)
}

pub fn read_edge_list(path: &Path) -> Result<WeightedGraph> {
    parse_edge_list(&path.display().to_string(), &read(path)?)
}

/// Writes `u v weight` lines; weights use the shortest round-trip form.
pub fn write_edge_list(g: &WeightedGraph) -> String {
    let mut s = String::new();
    for &(u, v, w) in g.edges() {
        let _ = writeln!(s, "{u} {v} {w}");
    }
    s
}

/// Writes the matrix format.
pub fn write_matrix(a: &SymMatrix) -> String {
    let mut s = format!("{}\n", a.dim());
    for i in 0..a.dim() {
        let row: Vec<String> = a.row(i).iter().map(|v| format!("{v:?}")).collect();
        s.push_str(&row.join(" "));
        s.push('\n');
    }
    s
}

/// Writes vectors (as columns) in the dense format.
pub fn write_vectors(cols: &[Vec<f64>]) -> String {
    let n = cols.first().map_or(0, Vec::len);
    let mut s = format!("{n} {}\n", cols.len());
    for i in 0..n {
        let row: Vec<String> = cols.iter().map(|c| format!("{:?}", c[i])).collect();
        s.push_str(&row.join(" "));
        s.push('\n');
    }
    s
}
