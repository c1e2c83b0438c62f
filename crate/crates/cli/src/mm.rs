//! Matrix Market 1.0 readers and writers.
//!
//! Dense matrices use the `array` format (column-major value list) and
//! sparse matrices the `coordinate` format (1-based triplets). Values are
//! written with 17 significant digits so that a write/read round trip
//! reproduces every `f64` bit-exactly. Read errors carry the file path and
//! line number of the offending token.

use anyhow::{bail, Context, Result};
use gcca_core::model::ViewMatrix;
use gcca_core::SparseMatrix;
use ndarray::{Array2, ArrayView2};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

/// Writes a dense matrix in `array` format.
pub fn write_dense(path: &Path, a: ArrayView2<'_, f64>) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "%%MatrixMarket matrix array real general")?;
    writeln!(w, "{} {}", a.nrows(), a.ncols())?;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            writeln!(w, "{:.16e}", a[(i, j)])?;
        }
    }
    w.flush().with_context(|| format!("writing {}", path.display()))
}

/// Writes a sparse matrix in `coordinate` format with 1-based indices.
pub fn write_sparse(path: &Path, m: &SparseMatrix) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(w, "{} {} {}", m.nrows(), m.ncols(), m.nnz())?;
    for (i, j, v) in m.iter() {
        writeln!(w, "{} {} {:.16e}", i + 1, j + 1, v)?;
    }
    w.flush().with_context(|| format!("writing {}", path.display()))
}

/// Writes either representation, preserving sparsity.
pub fn write_view(path: &Path, v: &ViewMatrix) -> Result<()> {
    match v {
        ViewMatrix::Dense(a) => write_dense(path, a.view()),
        ViewMatrix::Sparse(m) => write_sparse(path, m),
    }
}

/// A token stream over the non-comment lines of a Matrix Market file that
/// remembers the line number of every token it hands out.
struct Tokens {
    lines: Vec<(usize, String)>,
    line_idx: usize,
    tokens: Vec<String>,
    token_idx: usize,
    current_line: usize,
}

impl Tokens {
    fn new(lines: Vec<(usize, String)>) -> Self {
        Tokens {
            lines,
            line_idx: 0,
            tokens: Vec::new(),
            token_idx: 0,
            current_line: 0,
        }
    }

    fn next(&mut self) -> Option<(usize, &str)> {
        while self.token_idx >= self.tokens.len() {
            if self.line_idx >= self.lines.len() {
                return None;
            }
            let (no, line) = &self.lines[self.line_idx];
            self.current_line = *no;
            self.tokens = line.split_whitespace().map(str::to_owned).collect();
            self.token_idx = 0;
            self.line_idx += 1;
        }
        let tok = &self.tokens[self.token_idx];
        self.token_idx += 1;
        Some((self.current_line, tok))
    }
}

fn parse_usize(path: &Path, tok: Option<(usize, &str)>, what: &str) -> Result<usize> {
    let (line, s) = match tok {
        Some(t) => t,
        None => bail!("{}: unexpected end of file while reading {what}", path.display()),
    };
    s.parse::<usize>()
        .with_context(|| format!("{}:{line}: invalid {what} `{s}`", path.display()))
}

fn parse_value(path: &Path, tok: Option<(usize, &str)>, what: &str) -> Result<f64> {
    let (line, s) = match tok {
        Some(t) => t,
        None => bail!("{}: unexpected end of file while reading {what}", path.display()),
    };
    let v: f64 = s
        .parse()
        .with_context(|| format!("{}:{line}: invalid {what} `{s}`", path.display()))?;
    if !v.is_finite() {
        bail!("{}:{line}: non-finite {what} `{s}`", path.display());
    }
    Ok(v)
}

/// Reads a Matrix Market file, preserving the dense/sparse distinction.
pub fn read_matrix(path: &Path) -> Result<ViewMatrix> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let reader = BufReader::new(file);

    let mut header: Option<String> = None;
    let mut body: Vec<(usize, String)> = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.with_context(|| format!("reading {}", path.display()))?;
        let no = idx + 1;
        if header.is_none() {
            header = Some(line);
            continue;
        }
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        body.push((no, line));
    }

    let header = header.unwrap_or_default();
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 5 || !fields[0].eq_ignore_ascii_case("%%MatrixMarket") {
        bail!(
            "{}:1: not a Matrix Market file (expected `%%MatrixMarket matrix <format> <field> <symmetry>`)",
            path.display()
        );
    }
    if !fields[1].eq_ignore_ascii_case("matrix") {
        bail!("{}:1: unsupported object `{}` (only `matrix`)", path.display(), fields[1]);
    }
    let format = fields[2].to_ascii_lowercase();
    let field = fields[3].to_ascii_lowercase();
    let symmetry = fields[4].to_ascii_lowercase();
    if field != "real" && field != "integer" {
        bail!("{}:1: unsupported field `{}` (only `real`/`integer`)", path.display(), field);
    }
    if symmetry != "general" {
        bail!("{}:1: unsupported symmetry `{}` (only `general`)", path.display(), symmetry);
    }

    let mut toks = Tokens::new(body);
    match format.as_str() {
        "array" => {
            let rows = parse_usize(path, toks.next(), "row count")?;
            let cols = parse_usize(path, toks.next(), "column count")?;
            let mut a = Array2::zeros((rows, cols));
            for j in 0..cols {
                for i in 0..rows {
                    a[(i, j)] = parse_value(path, toks.next(), "matrix entry")?;
                }
            }
            if let Some((line, tok)) = toks.next() {
                bail!("{}:{line}: trailing data `{tok}` after {} entries", path.display(), rows * cols);
            }
            Ok(ViewMatrix::Dense(a))
        }
        "coordinate" => {
            let rows = parse_usize(path, toks.next(), "row count")?;
            let cols = parse_usize(path, toks.next(), "column count")?;
            let nnz = parse_usize(path, toks.next(), "entry count")?;
            let mut triplets = Vec::with_capacity(nnz);
            for _ in 0..nnz {
                let (line, i) = match toks.next() {
                    Some((line, tok)) => {
                        let i: usize = tok.parse().with_context(|| {
                            format!("{}:{line}: invalid row index `{tok}`", path.display())
                        })?;
                        (line, i)
                    }
                    None => bail!(
                        "{}: unexpected end of file ({} of {nnz} entries read)",
                        path.display(),
                        triplets.len()
                    ),
                };
                let j = parse_usize(path, toks.next(), "column index")?;
                let v = parse_value(path, toks.next(), "entry value")?;
                if i == 0 || j == 0 || i > rows || j > cols {
                    bail!(
                        "{}:{line}: index ({i}, {j}) outside 1..={rows} x 1..={cols}",
                        path.display()
                    );
                }
                triplets.push((i - 1, j - 1, v));
            }
            if let Some((line, tok)) = toks.next() {
                bail!("{}:{line}: trailing data `{tok}` after {nnz} entries", path.display());
            }
            let m = SparseMatrix::from_triplets(rows, cols, &triplets)
                .with_context(|| format!("{}: invalid coordinate data", path.display()))?;
            Ok(ViewMatrix::Sparse(m))
        }
        other => bail!("{}:1: unsupported format `{other}` (only `array`/`coordinate`)", path.display()),
    }
}

/// Reads a matrix and densifies it if necessary.
pub fn read_dense(path: &Path) -> Result<Array2<f64>> {
    Ok(read_matrix(path)?.to_dense())
}
