//! Matrix Market coordinate I/O (real, symmetric, 1-based).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::SparseSymmetricMatrix;
use crate::error::{DosError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Field {
    Real,
    Integer,
    Pattern,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Symmetry {
    Symmetric,
    General,
}

pub fn load_matrix_market(path: impl AsRef<Path>) -> Result<SparseSymmetricMatrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| DosError::io(path, e))?;
    read_matrix_market(BufReader::new(file))
}

pub fn read_matrix_market<R: Read>(reader: R) -> Result<SparseSymmetricMatrix> {
    let mut lines = BufReader::new(reader).lines().enumerate();

    let parse_err = |line: usize, message: &str| DosError::Parse {
        line: line + 1,
        message: message.to_string(),
    };

    let (lineno, header) = match lines.next() {
        Some((no, line)) => (no, line.map_err(|e| DosError::io("<matrix market>", e))?),
        None => return Err(parse_err(0, "empty input")),
    };
    let tokens: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if tokens.len() < 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(parse_err(lineno, "missing %%MatrixMarket matrix header"));
    }
    if tokens[2] != "coordinate" {
        return Err(DosError::Unsupported(format!("format '{}'", tokens[2])));
    }
    let field = match tokens[3].as_str() {
        "real" | "double" => Field::Real,
        "integer" => Field::Integer,
        "pattern" => Field::Pattern,
        other => return Err(DosError::Unsupported(format!("field '{other}'"))),
    };
    let symmetry = match tokens[4].as_str() {
        "symmetric" => Symmetry::Symmetric,
        "general" => Symmetry::General,
        other => return Err(DosError::Unsupported(format!("symmetry '{other}'"))),
    };

    let mut size: Option<(usize, usize, usize)> = None;
    let mut entries = Vec::new();
    for (no, line) in lines {
        let line = line.map_err(|e| DosError::io("<matrix market>", e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let mut parts = trimmed.split_whitespace();
        match size {
            None => {
                let mut next = || -> Result<usize> {
                    parts
                        .next()
                        .ok_or_else(|| parse_err(no, "size line needs rows, cols and nnz"))?
                        .parse::<usize>()
                        .map_err(|_| parse_err(no, "invalid size value"))
                };
                let (rows, cols, nnz) = (next()?, next()?, next()?);
                if rows != cols {
                    return Err(DosError::Unsupported(format!(
                        "non-square matrix {rows}x{cols}"
                    )));
                }
                size = Some((rows, cols, nnz));
                entries.reserve(nnz);
            }
            Some((rows, _, _)) => {
                let mut index = || -> Result<usize> {
                    parts
                        .next()
                        .ok_or_else(|| parse_err(no, "entry needs row and column"))?
                        .parse::<usize>()
                        .map_err(|_| parse_err(no, "invalid index"))
                };
                let (i, j) = (index()?, index()?);
                let value = match field {
                    Field::Pattern => 1.0,
                    Field::Real | Field::Integer => parts
                        .next()
                        .ok_or_else(|| parse_err(no, "entry needs a value"))?
                        .parse::<f64>()
                        .map_err(|_| parse_err(no, "invalid value"))?,
                };
                if i == 0 || j == 0 || i > rows || j > rows {
                    return Err(DosError::IndexOutOfRange {
                        row: i,
                        col: j,
                        dim: rows,
                    });
                }
                entries.push((i - 1, j - 1, value));
            }
        }
    }

    let (n, _, nnz) = size.ok_or_else(|| parse_err(0, "missing size line"))?;
    if entries.len() != nnz {
        return Err(parse_err(
            0,
            &format!("expected {nnz} entries, found {}", entries.len()),
        ));
    }
    SparseSymmetricMatrix::from_triplets(n, &entries, symmetry == Symmetry::Symmetric)
}

/// Writes the lower triangle in `coordinate real symmetric` form.
pub fn write_matrix_market(matrix: &SparseSymmetricMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| DosError::io(path, e))?;
    let mut out = BufWriter::new(file);
    let lower: Vec<_> = matrix.entries().filter(|(i, j, _)| i >= j).collect();
    let write = |out: &mut BufWriter<File>| -> std::io::Result<()> {
        writeln!(out, "%%MatrixMarket matrix coordinate real symmetric")?;
        writeln!(out, "{} {} {}", matrix.dim(), matrix.dim(), lower.len())?;
        for (i, j, v) in &lower {
            writeln!(out, "{} {} {:e}", i + 1, j + 1, v)?;
        }
        out.flush()
    };
    write(&mut out).map_err(|e| DosError::io(path, e))
}
