//! Matrix Market reading and writing.
//!
//! Indices are 1-based on disk and 0-based in memory.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};

use super::SparseSymMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
enum Symmetry {
    Symmetric,
    General,
}

struct Lines<R> {
    inner: std::io::Lines<BufReader<R>>,
    number: usize,
}

impl<R: Read> Lines<R> {
    fn new(reader: R) -> Self {
        Lines {
            inner: BufReader::new(reader).lines(),
            number: 0,
        }
    }

    /// Next line that is neither blank nor a `%` comment.
    fn next_data(&mut self) -> Result<Option<(usize, String)>> {
        for line in self.inner.by_ref() {
            let line = line?;
            self.number += 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('%') {
                continue;
            }
            return Ok(Some((self.number, trimmed.to_string())));
        }
        Ok(None)
    }

    fn next_raw(&mut self) -> Result<Option<(usize, String)>> {
        match self.inner.next() {
            Some(line) => {
                self.number += 1;
                Ok(Some((self.number, line?)))
            }
            None => Ok(None),
        }
    }
}

fn parse_header(line: &str, lineno: usize, want: &str) -> Result<Vec<String>> {
    let tokens: Vec<String> = line.split_whitespace().map(|t| t.to_ascii_lowercase()).collect();
    if tokens.first().map(String::as_str) != Some("%%matrixmarket") {
        return Err(Error::parse(lineno, "header must start with %%MatrixMarket"));
    }
    if tokens.len() != 5 {
        return Err(Error::parse(
            lineno,
            "header must have the form `%%MatrixMarket matrix <format> <field> <symmetry>`",
        ));
    }
    if tokens[1] != "matrix" {
        return Err(Error::parse(lineno, format!("unsupported object `{}`", tokens[1])));
    }
    if tokens[2] != want {
        return Err(Error::parse(
            lineno,
            format!("expected `{want}` format, found `{}`", tokens[2]),
        ));
    }
    if tokens[3] != "real" && tokens[3] != "integer" {
        return Err(Error::parse(lineno, format!("unsupported field `{}`", tokens[3])));
    }
    Ok(tokens)
}

fn parse_value(tok: Option<&str>, lineno: usize) -> Result<f64> {
    let tok = tok.ok_or_else(|| Error::parse(lineno, "missing value"))?;
    let v: f64 = tok
        .parse()
        .map_err(|_| Error::parse(lineno, format!("invalid number `{tok}`")))?;
    if !v.is_finite() {
        return Err(Error::NonFinite(format!("line {lineno}: {tok}")));
    }
    Ok(v)
}

fn parse_index(tok: Option<&str>, lineno: usize, n: usize) -> Result<usize> {
    let tok = tok.ok_or_else(|| Error::parse(lineno, "missing index"))?;
    let i: usize = tok
        .parse()
        .map_err(|_| Error::parse(lineno, format!("invalid index `{tok}`")))?;
    if i == 0 || i > n {
        return Err(Error::parse(lineno, format!("index {i} out of range 1..={n}")));
    }
    Ok(i - 1)
}

/// Parses a `matrix coordinate real` file with `symmetric` or `general`
/// symmetry. Duplicate coordinates are summed. `general` input must be exactly
/// symmetric after summation.
pub fn load_matrix_market<R: Read>(reader: R) -> Result<SparseSymMatrix> {
    let mut lines = Lines::new(reader);
    let (lineno, header) = lines.next_raw()?.ok_or_else(|| Error::parse(1, "empty input"))?;
    let tokens = parse_header(&header, lineno, "coordinate")?;
    let symmetry = match tokens[4].as_str() {
        "symmetric" => Symmetry::Symmetric,
        "general" => Symmetry::General,
        other => return Err(Error::parse(lineno, format!("unsupported symmetry `{other}`"))),
    };

    let (lineno, size) = lines
        .next_data()?
        .ok_or_else(|| Error::parse(lines.number, "missing size line"))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| {
            t.parse()
                .map_err(|_| Error::parse(lineno, format!("invalid size token `{t}`")))
        })
        .collect::<Result<_>>()?;
    let [rows, cols, count] = dims[..] else {
        return Err(Error::parse(lineno, "size line must contain `rows cols entries`"));
    };
    if rows != cols {
        return Err(Error::parse(
            lineno,
            format!("matrix must be square, got {rows}x{cols}"),
        ));
    }
    let n = rows;

    let mut full: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut seen = 0usize;
    while let Some((lineno, line)) = lines.next_data()? {
        if seen == count {
            return Err(Error::parse(lineno, format!("more than the declared {count} entries")));
        }
        let mut it = line.split_whitespace();
        let i = parse_index(it.next(), lineno, n)?;
        let j = parse_index(it.next(), lineno, n)?;
        let v = parse_value(it.next(), lineno)?;
        if it.next().is_some() {
            return Err(Error::parse(lineno, "trailing tokens after entry"));
        }
        let key = match symmetry {
            Symmetry::Symmetric => (i.min(j), i.max(j)),
            Symmetry::General => (i, j),
        };
        *full.entry(key).or_insert(0.0) += v;
        seen += 1;
    }
    if seen != count {
        return Err(Error::parse(
            lines.number,
            format!("expected {count} entries, found {seen}"),
        ));
    }

    if symmetry == Symmetry::General {
        for (&(i, j), &v) in &full {
            let mirror = full.get(&(j, i)).copied().unwrap_or(0.0);
            if v != mirror {
                return Err(Error::NotSymmetric {
                    row: i,
                    col: j,
                    value: v,
                    mirror,
                });
            }
        }
        full.retain(|&(i, j), _| i <= j);
    }
    SparseSymMatrix::from_triplets(n, full.into_iter().map(|((i, j), v)| (i, j, v)))
}

/// Writes the matrix in `coordinate real symmetric` form (lower triangle).
pub fn write_matrix_market<W: Write>(m: &SparseSymMatrix, mut w: W) -> Result<()> {
    writeln!(w, "%%MatrixMarket matrix coordinate real symmetric")?;
    writeln!(w, "{} {} {}", m.dim(), m.dim(), m.stored_entries())?;
    for (i, j, v) in m.upper_entries() {
        writeln!(w, "{} {} {}", j + 1, i + 1, v)?;
    }
    Ok(())
}

/// Reads a dense vector, either a Matrix Market `array` file or plain text
/// with one value per line (blank lines and `%`/`#` comments are skipped).
pub fn load_vector<R: Read>(reader: R) -> Result<Vec<f64>> {
    let mut lines = Lines::new(reader);
    let mut values = Vec::new();
    let mut first = true;
    while let Some((lineno, line)) = lines.next_raw()? {
        let trimmed = line.trim();
        if first && trimmed.to_ascii_lowercase().starts_with("%%matrixmarket") {
            return load_array_body(&mut lines, trimmed, lineno);
        }
        if trimmed.is_empty() || trimmed.starts_with('%') || trimmed.starts_with('#') {
            continue;
        }
        first = false;
        let mut it = trimmed.split_whitespace();
        values.push(parse_value(it.next(), lineno)?);
        if it.next().is_some() {
            return Err(Error::parse(lineno, "expected one value per line"));
        }
    }
    Ok(values)
}

fn load_array_body<R: Read>(lines: &mut Lines<R>, header: &str, header_line: usize) -> Result<Vec<f64>> {
    let tokens = parse_header(header, header_line, "array")?;
    if tokens[4] != "general" {
        return Err(Error::parse(header_line, "vector arrays must be `general`"));
    }
    let (lineno, size) = lines
        .next_data()?
        .ok_or_else(|| Error::parse(lines.number, "missing size line"))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| {
            t.parse()
                .map_err(|_| Error::parse(lineno, format!("invalid size token `{t}`")))
        })
        .collect::<Result<_>>()?;
    let len = match dims[..] {
        [r, 1] | [1, r] => r,
        _ => return Err(Error::parse(lineno, "array must be a single row or column")),
    };
    let mut values = Vec::with_capacity(len);
    while let Some((lineno, line)) = lines.next_data()? {
        for tok in line.split_whitespace() {
            if values.len() == len {
                return Err(Error::parse(lineno, format!("more than the declared {len} values")));
            }
            values.push(parse_value(Some(tok), lineno)?);
        }
    }
    if values.len() != len {
        return Err(Error::parse(
            lines.number,
            format!("expected {len} values, found {}", values.len()),
        ));
    }
    Ok(values)
}

/// Writes one value per line.
pub fn write_vector<W: Write>(v: &[f64], mut w: W) -> Result<()> {
    for x in v {
        writeln!(w, "{x}")?;
    }
    Ok(())
}
