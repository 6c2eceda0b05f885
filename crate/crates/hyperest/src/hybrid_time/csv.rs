use std::io::{BufRead, Write};

use nalgebra::DMatrix;
use thiserror::Error;

use super::arc::{ArcError, HybridArc, SampleBlock};
use super::domain::{DomainError, HybridTimeDomain};

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Arc(#[from] ArcError),
    #[error("shape {0}x{1} does not match {2} value columns")]
    ShapeColumns(usize, usize, usize),
}

/// Write an arc as CSV with header `t,j,v_0,...,v_{rc-1}`, rows sorted by
/// `(j, t)`, matrix values flattened row-major. Degenerate intervals appear
/// as single rows. Output is deterministic: identical arcs produce identical
/// bytes.
pub fn write_arc_csv<W: Write>(arc: &HybridArc, out: &mut W) -> Result<(), CsvError> {
    let (r, c) = arc.shape();
    write!(out, "t,j")?;
    for k in 0..r * c {
        write!(out, ",v_{k}")?;
    }
    writeln!(out)?;
    for (t, j, value) in arc.iter_samples() {
        write!(out, "{t:?},{j}")?;
        for row in 0..r {
            for col in 0..c {
                write!(out, ",{:?}", value[(row, col)])?;
            }
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Read an arc from CSV, treating values as column vectors of dimension `rc`.
pub fn read_arc_csv<R: BufRead>(input: R) -> Result<HybridArc, CsvError> {
    read_arc_csv_with_shape(input, None)
}

/// Read an arc from CSV with an explicit value shape `(r, c)`; the header must
/// carry exactly `r*c` value columns.
pub fn read_arc_csv_with_shape<R: BufRead>(
    input: R,
    shape: Option<(usize, usize)>,
) -> Result<HybridArc, CsvError> {
    let mut lines = input.lines().enumerate();
    let (_, header) = lines.next().ok_or(CsvError::Parse { line: 1, msg: "empty file".into() })?;
    let header = header?;
    let cols: Vec<&str> = header.trim().split(',').collect();
    if cols.len() < 3 || cols[0] != "t" || cols[1] != "j" {
        return Err(CsvError::Parse { line: 1, msg: "expected header t,j,v_0,...".into() });
    }
    let n_values = cols.len() - 2;
    let (r, c) = shape.unwrap_or((n_values, 1));
    if r * c != n_values {
        return Err(CsvError::ShapeColumns(r, c, n_values));
    }

    // Rows grouped by j, sorted by (j, t).
    let mut blocks: Vec<(u32, SampleBlock)> = Vec::new();
    for (lineno, line) in lines {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != n_values + 2 {
            return Err(CsvError::Parse {
                line: lineno + 1,
                msg: format!("expected {} fields, found {}", n_values + 2, parts.len()),
            });
        }
        let parse_f = |s: &str| -> Result<f64, CsvError> {
            s.trim().parse::<f64>().map_err(|e| CsvError::Parse {
                line: lineno + 1,
                msg: format!("bad number {s:?}: {e}"),
            })
        };
        let t = parse_f(parts[0])?;
        let j: u32 = parts[1].trim().parse().map_err(|e| CsvError::Parse {
            line: lineno + 1,
            msg: format!("bad jump index {:?}: {e}", parts[1]),
        })?;
        let mut value = DMatrix::zeros(r, c);
        for (k, s) in parts[2..].iter().enumerate() {
            value[(k / c, k % c)] = parse_f(s)?;
        }
        match blocks.last_mut() {
            Some((bj, block)) if *bj == j => block.push((t, value)),
            _ => blocks.push((j, vec![(t, value)])),
        }
    }
    if blocks.is_empty() {
        return Err(CsvError::Parse { line: 2, msg: "no data rows".into() });
    }

    let breakpoints: Vec<(f64, f64, u32)> = blocks
        .iter()
        .map(|(j, block)| (block.first().unwrap().0, block.last().unwrap().0, *j))
        .collect();
    let domain = HybridTimeDomain::new(&breakpoints)?;
    let samples = blocks.into_iter().map(|(_, block)| block).collect();
    Ok(HybridArc::new(domain, samples)?)
}
