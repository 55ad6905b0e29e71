use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{CsvError, Error, Result};

/// Builds a matrix from equal-length rows.
pub fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || ncols == 0 {
        return Err(Error::Dimension("matrix has no entries".into()));
    }
    if let Some(i) = rows.iter().position(|r| r.len() != ncols) {
        return Err(Error::Dimension(format!(
            "row {} has {} entries, expected {ncols}",
            i + 1,
            rows[i].len()
        )));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

pub fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Dense row-major CSV without a header.
pub fn read_matrix_csv<R: Read>(reader: R) -> Result<DMatrix<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CsvError::Read(e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        let row = rec
            .iter()
            .enumerate()
            .map(|(j, v)| {
                v.parse::<f64>().map_err(|_| CsvError::NonNumeric {
                    line,
                    column: format!("{}", j + 1),
                    value: v.to_string(),
                })
            })
            .collect::<std::result::Result<Vec<f64>, CsvError>>()?;
        rows.push(row);
    }
    matrix_from_rows(&rows)
}

pub fn write_matrix_csv<W: Write>(m: &DMatrix<f64>, writer: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    for row in m.row_iter() {
        w.write_record(row.iter().map(|v| format!("{v:?}")))
            .map_err(|e| CsvError::Read(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `.json` (array of rows) or anything else as CSV.
pub fn load_matrix<P: AsRef<Path>>(path: P) -> Result<DMatrix<f64>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)?;
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        let rows: Vec<Vec<f64>> = serde_json::from_reader(std::io::BufReader::new(file))?;
        matrix_from_rows(&rows)
    } else {
        read_matrix_csv(file)
    }
}
