use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use super::IoError;
use crate::sparse::CsrMatrix;

/// Upper bounds applied while reading untrusted input, so a header cannot
/// request arbitrarily large allocations.
#[derive(Debug, Clone, Copy)]
pub struct ReadLimits {
    pub max_dim: usize,
    pub max_entries: usize,
}

impl Default for ReadLimits {
    fn default() -> Self {
        Self {
            max_dim: 1 << 31,
            max_entries: 1 << 34,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Field {
    Real,
    Integer,
    Pattern,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
    SkewSymmetric,
}

fn parse_err(line: usize, msg: impl Into<String>) -> IoError {
    IoError::Parse {
        line,
        msg: msg.into(),
    }
}

/// Reads a Matrix Market coordinate file.
pub fn load_matrix_market(path: impl AsRef<Path>) -> Result<CsrMatrix, IoError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| IoError::Open {
        path: path.display().to_string(),
        source: e,
    })?;
    read_matrix_market(BufReader::new(file), ReadLimits::default())
}

/// Parses Matrix Market coordinate data (`real`, `integer` or `pattern`;
/// `general`, `symmetric` or `skew-symmetric`).
///
/// Symmetric storage is expanded, duplicates are summed and pattern
/// entries take the value 1.0. Stored zeros stay structural.
pub fn read_matrix_market<R: BufRead>(reader: R, limits: ReadLimits) -> Result<CsrMatrix, IoError> {
    let mut lines = reader.lines().enumerate().map(|(k, l)| (k + 1, l));

    let (lno, header) = match lines.next() {
        Some((k, l)) => (k, l?),
        None => return Err(parse_err(1, "empty input")),
    };
    let tokens: Vec<String> = header
        .split_whitespace()
        .map(|t| t.to_ascii_lowercase())
        .collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" {
        return Err(parse_err(
            lno,
            "expected '%%MatrixMarket matrix coordinate <field> <symmetry>'",
        ));
    }
    if tokens[1] != "matrix" {
        return Err(parse_err(
            lno,
            format!("unsupported object '{}'", tokens[1]),
        ));
    }
    if tokens[2] != "coordinate" {
        return Err(parse_err(
            lno,
            format!("unsupported format '{}'", tokens[2]),
        ));
    }
    let field = match tokens[3].as_str() {
        "real" | "double" => Field::Real,
        "integer" => Field::Integer,
        "pattern" => Field::Pattern,
        other => return Err(parse_err(lno, format!("unsupported field '{other}'"))),
    };
    let symmetry = match tokens[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::SkewSymmetric,
        other => return Err(parse_err(lno, format!("unsupported symmetry '{other}'"))),
    };

    let mut size_line = None;
    for (k, l) in lines.by_ref() {
        let l = l?;
        let t = l.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        size_line = Some((k, l));
        break;
    }
    let (lno, size_line) = size_line.ok_or_else(|| parse_err(lno + 1, "missing size line"))?;
    let dims: Vec<&str> = size_line.split_whitespace().collect();
    if dims.len() != 3 {
        return Err(parse_err(lno, "size line must hold 'rows cols entries'"));
    }
    let parse_count = |s: &str, what: &str| {
        s.parse::<usize>()
            .map_err(|_| parse_err(lno, format!("invalid {what} '{s}'")))
    };
    let n_rows = parse_count(dims[0], "row count")?;
    let n_cols = parse_count(dims[1], "column count")?;
    let declared = parse_count(dims[2], "entry count")?;
    if n_rows > limits.max_dim || n_cols > limits.max_dim {
        return Err(parse_err(
            lno,
            format!("dimension {n_rows}x{n_cols} exceeds limit"),
        ));
    }
    if declared > limits.max_entries {
        return Err(parse_err(lno, format!("{declared} entries exceeds limit")));
    }
    if symmetry != Symmetry::General && n_rows != n_cols {
        return Err(parse_err(lno, "symmetric storage requires a square matrix"));
    }

    let mut triplets = Vec::with_capacity(declared.min(1 << 20));
    let mut read = 0usize;
    for (k, l) in lines {
        let l = l?;
        let t = l.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        if read == declared {
            return Err(parse_err(
                k,
                format!("more than the declared {declared} entries"),
            ));
        }
        let mut it = t.split_whitespace();
        let mut index = |what: &str, bound: usize| -> Result<usize, IoError> {
            let s = it
                .next()
                .ok_or_else(|| parse_err(k, format!("missing {what} index")))?;
            let v: usize = s
                .parse()
                .map_err(|_| parse_err(k, format!("invalid {what} index '{s}'")))?;
            if v == 0 || v > bound {
                return Err(parse_err(
                    k,
                    format!("{what} index {v} outside 1..={bound}"),
                ));
            }
            Ok(v - 1)
        };
        let i = index("row", n_rows)?;
        let j = index("column", n_cols)?;
        let v = match field {
            Field::Pattern => 1.0,
            Field::Real | Field::Integer => {
                let s = it.next().ok_or_else(|| parse_err(k, "missing value"))?;
                let v: f64 = s
                    .parse()
                    .map_err(|_| parse_err(k, format!("invalid value '{s}'")))?;
                if field == Field::Integer && v.fract() != 0.0 {
                    return Err(parse_err(k, format!("non-integer value '{s}'")));
                }
                v
            }
        };
        if it.next().is_some() {
            return Err(parse_err(k, "trailing data after entry"));
        }
        triplets.push((i, j, v));
        match symmetry {
            Symmetry::General => {}
            Symmetry::Symmetric if i != j => triplets.push((j, i, v)),
            Symmetry::SkewSymmetric if i != j => triplets.push((j, i, -v)),
            Symmetry::Symmetric => {}
            Symmetry::SkewSymmetric => {
                return Err(parse_err(
                    k,
                    "skew-symmetric storage cannot hold a diagonal entry",
                ))
            }
        }
        read += 1;
    }
    if read != declared {
        return Err(parse_err(
            0,
            format!("expected {declared} entries, found {read}"),
        ));
    }
    CsrMatrix::from_triplets(n_rows, n_cols, &triplets).map_err(|e| parse_err(0, e.to_string()))
}

/// Writes `a` in `coordinate real general` form with 17 significant digits.
pub fn write_matrix_market<W: Write>(a: &CsrMatrix, mut w: W) -> std::io::Result<()> {
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(w, "{} {} {}", a.n_rows(), a.n_cols(), a.nnz())?;
    for i in 0..a.n_rows() {
        let (cols, vals) = a.row(i);
        for (&c, &v) in cols.iter().zip(vals) {
            writeln!(w, "{} {} {:.17e}", i + 1, c + 1, v)?;
        }
    }
    Ok(())
}

pub fn save_matrix_market(a: &CsrMatrix, path: impl AsRef<Path>) -> Result<(), IoError> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| IoError::Open {
        path: path.display().to_string(),
        source: e,
    })?;
    let mut w = std::io::BufWriter::new(file);
    write_matrix_market(a, &mut w)?;
    w.flush()?;
    Ok(())
}
