//! Matrix CSV format: a `rows,cols` header line, then one line per row with
//! comma-separated values printed at 17 significant digits so that every
//! finite `f64` round-trips bit-exactly.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::ndmath::Matrix;
use crate::{Error, Result};

pub fn write_matrix_csv(path: &Path, m: &Matrix) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "{},{}", m.rows(), m.cols())?;
    for i in 0..m.rows() {
        let mut first = true;
        for &v in m.row(i) {
            if !first {
                write!(w, ",")?;
            }
            first = false;
            write!(w, "{}", format_f64(v))?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix_csv(path: &Path) -> Result<Matrix> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse(format!("{}: empty file", path.display())))??;
    let (rows, cols) = parse_header(&header)
        .ok_or_else(|| Error::Parse(format!("{}: bad header {header:?}", path.display())))?;

    let mut data = Vec::with_capacity(rows * cols);
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        for field in line.split(',') {
            let v: f64 = field.trim().parse().map_err(|_| {
                Error::Parse(format!("{}: row {}: bad float {field:?}", path.display(), i + 1))
            })?;
            data.push(v);
        }
    }
    if data.len() != rows * cols {
        return Err(Error::Parse(format!(
            "{}: expected {} values, found {}",
            path.display(),
            rows * cols,
            data.len()
        )));
    }
    Matrix::from_vec(rows, cols, data)
}

/// 17 significant decimal digits; enough to reproduce any `f64` exactly.
fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_header(header: &str) -> Option<(usize, usize)> {
    let mut it = header.trim().split(',');
    let rows = it.next()?.trim().parse().ok()?;
    let cols = it.next()?.trim().parse().ok()?;
    if it.next().is_some() {
        return None;
    }
    Some((rows, cols))
}
