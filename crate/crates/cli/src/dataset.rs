//! CSV datasets (inputs then output, optional header) and support-set files.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::Deserialize;
use wassdrl_core::linalg::Matrix;
use wassdrl_core::{Dataset, Polytope, SupportSet, Task};

use crate::error::{CliError, Result};

/// Reads a CSV whose last column is the output. A first row that does not
/// parse as numbers is treated as a header.
pub fn load_dataset(path: &Path, task: Task) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| CliError::parse(path, format!("cannot open: {e}")))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).comment(Some(b'#')).from_reader(file);
    let mut data: Vec<f64> = Vec::new();
    let mut outputs: Vec<f64> = Vec::new();
    let mut width: Option<usize> = None;
    for (k, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::parse(path, e))?;
        let line = record.position().map_or(k as u64 + 1, |p| p.line());
        let parsed: std::result::Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        let values = match parsed {
            Ok(v) => v,
            Err(_) if k == 0 => continue,
            Err(e) => return Err(CliError::parse(path, format!("line {line}: {e}"))),
        };
        if values.len() < 2 {
            return Err(CliError::parse(path, format!("line {line}: need at least one input column and an output")));
        }
        if let Some(w) = width {
            if values.len() != w {
                return Err(CliError::parse(path, format!("line {line}: expected {w} columns, found {}", values.len())));
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(CliError::parse(path, format!("line {line}: non-finite value")));
        }
        width = Some(values.len());
        let (y, x) = values.split_last().expect("at least two columns");
        data.extend_from_slice(x);
        outputs.push(*y);
    }
    let Some(width) = width else {
        return Err(CliError::parse(path, "no data rows"));
    };
    let inputs = Matrix::from_vec(outputs.len(), width - 1, data)?;
    Dataset::new(inputs, outputs, task).map_err(|e| CliError::parse(path, e))
}

/// Writes rows `(x, y)` with a `x1,…,xn,y` header.
pub fn write_rows(path: &Path, rows: &[(Vec<f64>, f64)]) -> Result<()> {
    let io = |source| CliError::Io { path: path.to_path_buf(), source };
    let mut w = csv::Writer::from_path(path).map_err(|e| io(e.into()))?;
    let n = rows.first().map_or(0, |r| r.0.len());
    let mut header: Vec<String> = (1..=n).map(|j| format!("x{j}")).collect();
    header.push("y".into());
    w.write_record(&header).map_err(|e| io(e.into()))?;
    for (x, y) in rows {
        let rec: Vec<String> = x.iter().chain(std::iter::once(y)).map(|v| v.to_string()).collect();
        w.write_record(&rec).map_err(|e| io(e.into()))?;
    }
    w.flush().map_err(io)
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let io = |source| CliError::Io { path: path.to_path_buf(), source };
    let mut w = csv::Writer::from_path(path).map_err(|e| io(e.into()))?;
    w.write_record(header).map_err(|e| io(e.into()))?;
    for r in rows {
        w.write_record(r).map_err(|e| io(e.into()))?;
    }
    w.flush().map_err(io)
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let io = |source| CliError::Io { path: path.to_path_buf(), source };
    let mut f = File::create(path).map_err(io)?;
    serde_json::to_writer_pretty(&mut f, value).map_err(|e| io(e.into()))?;
    writeln!(f).map_err(io)
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let file = File::open(path).map_err(|e| CliError::parse(path, format!("cannot open: {e}")))?;
    serde_json::from_reader(std::io::BufReader::new(file)).map_err(|e| CliError::parse(path, e))
}

#[derive(Debug, Deserialize)]
struct SupportFile {
    #[serde(rename = "C1")]
    c1: Vec<Vec<f64>>,
    c2: Option<Vec<f64>>,
    d: Vec<f64>,
}

/// Polytope `C1 x + c2 y ≤ d` from `{"C1": [[…]], "c2": […], "d": […]}`.
/// Classification supports omit `c2`.
pub fn load_support(path: &Path, task: Task) -> Result<SupportSet> {
    let raw: SupportFile = read_json(path)?;
    let c_x = Matrix::from_rows(&raw.c1).map_err(|e| CliError::parse(path, e))?;
    let c_y = match (task, raw.c2) {
        (Task::Regression, Some(c2)) => Some(c2),
        (Task::Regression, None) => Some(vec![0.0; raw.d.len()]),
        (Task::Classification, Some(_)) => return Err(CliError::parse(path, "classification supports constrain inputs only; drop `c2`")),
        (Task::Classification, None) => None,
    };
    Ok(SupportSet::Polytope(Polytope::new(c_x, c_y, raw.d, None)?))
}
