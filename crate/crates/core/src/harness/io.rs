//! Survival data in CSV form: header `time,status,<covariates...>`, one
//! subject per row, status 0 (censored) or 1 (event).

use std::path::Path;

use ndarray::{Array1, Array2};

use crate::error::{CoxError, Result};
use crate::surv::SurvivalDataset;

/// A dataset with the covariate names taken from the header.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedDataset {
    pub data: SurvivalDataset,
    pub names: Vec<String>,
}

fn parse_error(line: usize, column: &str, message: impl Into<String>) -> CoxError {
    CoxError::Parse { line, column: column.to_string(), message: message.into() }
}

pub fn read_csv(path: &Path) -> Result<NamedDataset> {
    let file = std::fs::File::open(path).map_err(|e| CoxError::Io(format!("{}: {e}", path.display())))?;
    read_csv_from(file)
}

pub fn read_csv_from(reader: impl std::io::Read) -> Result<NamedDataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| parse_error(1, "header", e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.len() < 3 || header[0] != "time" || header[1] != "status" {
        return Err(parse_error(
            1,
            "header",
            "expected a header starting with 'time,status' followed by at least one covariate",
        ));
    }
    let p = header.len() - 2;
    let mut times = Vec::new();
    let mut events = Vec::new();
    let mut z = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |pos| pos.line() as usize);
            parse_error(line, "row", e.to_string())
        })?;
        let line = record.position().map_or(0, |pos| pos.line() as usize);
        if record.len() != header.len() {
            return Err(parse_error(
                line,
                "row",
                format!("expected {} fields, found {}", header.len(), record.len()),
            ));
        }
        let number = |k: usize| -> Result<f64> {
            let cell = &record[k];
            let v: f64 = cell
                .parse()
                .map_err(|_| parse_error(line, &header[k], format!("'{cell}' is not a number")))?;
            if !v.is_finite() {
                return Err(parse_error(line, &header[k], format!("'{cell}' is not finite")));
            }
            Ok(v)
        };
        let t = number(0)?;
        if t < 0.0 {
            return Err(parse_error(line, "time", "time must be nonnegative"));
        }
        times.push(t);
        events.push(match &record[1] {
            "0" => false,
            "1" => true,
            other => return Err(parse_error(line, "status", format!("'{other}' is not 0 or 1"))),
        });
        for k in 2..header.len() {
            z.push(number(k)?);
        }
    }
    let n = times.len();
    if n < 2 {
        return Err(CoxError::InvalidInput(format!("need at least 2 subjects, found {n}")));
    }
    let covariates = Array2::from_shape_vec((n, p), z).map_err(|e| CoxError::InvalidInput(e.to_string()))?;
    let data = SurvivalDataset::new(Array1::from(times), events, covariates)?;
    Ok(NamedDataset { data, names: header[2..].to_vec() })
}

/// Writes a dataset with 17 significant digits so that reading it back
/// reproduces every value exactly.
pub fn write_csv(path: &Path, data: &SurvivalDataset, names: Option<&[String]>) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| CoxError::Io(format!("{}: {e}", path.display())))?;
    write_csv_to(std::io::BufWriter::new(file), data, names)
}

pub fn write_csv_to(writer: impl std::io::Write, data: &SurvivalDataset, names: Option<&[String]>) -> Result<()> {
    let p = data.p();
    let default_names: Vec<String> = (1..=p).map(|j| format!("z{j}")).collect();
    let names = names.unwrap_or(&default_names);
    if names.len() != p {
        return Err(CoxError::DimensionMismatch(format!("{} names for {p} covariates", names.len())));
    }
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| CoxError::Io(e.to_string());
    let mut header = vec!["time".to_string(), "status".to_string()];
    header.extend(names.iter().cloned());
    w.write_record(&header).map_err(io)?;
    for i in 0..data.n() {
        let mut row = Vec::with_capacity(p + 2);
        row.push(format!("{:.16e}", data.times()[i]));
        row.push(if data.events()[i] { "1" } else { "0" }.to_string());
        row.extend(data.covariates().row(i).iter().map(|v| format!("{v:.16e}")));
        w.write_record(&row).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}
