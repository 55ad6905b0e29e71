use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use super::{Observation, SurvivalDataset};
use crate::error::{CsvError, Error, Result};

/// Writes `time,status,z1,...,zp` with one row per subject. Floats use the
/// shortest representation that parses back to the same value.
pub fn write_csv<W: Write>(dataset: &SurvivalDataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["time".to_string(), "status".to_string()];
    header.extend((1..=dataset.p).map(|j| format!("z{j}")));
    w.write_record(&header).map_err(csv_err)?;
    for o in &dataset.observations {
        let mut row = Vec::with_capacity(dataset.p + 2);
        row.push(o.time.to_string());
        row.push(if o.event { "1" } else { "0" }.to_string());
        row.extend(o.covariates.iter().map(f64::to_string));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Csv(CsvError::Read(e.to_string()))
}

fn parse_number(line: u64, column: &str, value: &str) -> std::result::Result<f64, CsvError> {
    value
        .trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| CsvError::NonNumeric {
            line,
            column: column.to_string(),
            value: value.to_string(),
        })
}

/// Parses a dataset. The horizon of a loaded dataset is its largest
/// follow-up time.
pub fn read_csv<R: Read>(reader: R) -> Result<SurvivalDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();
    let well_formed = header.len() >= 3
        && header[0] == "time"
        && header[1] == "status"
        && header[2..]
            .iter()
            .enumerate()
            .all(|(j, h)| *h == format!("z{}", j + 1));
    if !well_formed {
        return Err(CsvError::MissingColumns { found: header }.into());
    }
    let p = header.len() - 2;

    let mut observations = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(0, |pos| pos.line());
        if record.len() != header.len() {
            return Err(CsvError::FieldCount {
                line,
                expected: header.len(),
                found: record.len(),
            }
            .into());
        }
        let time = parse_number(line, "time", &record[0])?;
        let event = match record[1].trim() {
            "0" => false,
            "1" => true,
            other => {
                return Err(CsvError::InvalidStatus {
                    line,
                    value: other.to_string(),
                }
                .into())
            }
        };
        if time <= 0.0 {
            return Err(CsvError::NonPositiveTime { line, value: time }.into());
        }
        let covariates = (0..p)
            .map(|j| parse_number(line, &header[j + 2], &record[j + 2]))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        observations.push(Observation {
            time,
            event,
            covariates,
        });
    }
    if observations.is_empty() {
        return Err(CsvError::Empty.into());
    }
    let tau = observations.iter().map(|o| o.time).fold(0.0, f64::max);
    SurvivalDataset::new(observations, p, tau)
}

pub fn load_csv<P: AsRef<Path>>(path: P) -> Result<SurvivalDataset> {
    read_csv(BufReader::new(File::open(path)?))
}

pub fn save_csv<P: AsRef<Path>>(dataset: &SurvivalDataset, path: P) -> Result<()> {
    write_csv(dataset, File::create(path)?)
}
