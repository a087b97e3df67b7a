//! CSV ingestion: one observation per row, one column per coordinate, an
//! optional header row, `.` as decimal separator.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use super::{ModelError, Provenance, Sample};

/// Reads a sample of `dim`-dimensional observations from a CSV file.
pub fn read_csv(path: &Path, dim: usize) -> Result<Sample, ModelError> {
    let file = File::open(path).map_err(|e| ModelError::Io(format!("{}: {e}", path.display())))?;
    let data = parse_rows(file, dim)?;
    Sample::new(data, dim, Provenance::File { path: path.to_path_buf() })
}

/// Same as [`read_csv`] for an arbitrary reader, with inline provenance.
pub fn read_csv_from<R: Read>(reader: R, dim: usize) -> Result<Sample, ModelError> {
    let data = parse_rows(reader, dim)?;
    Sample::new(data, dim, Provenance::Inline)
}

fn parse_rows<R: Read>(reader: R, dim: usize) -> Result<Vec<f64>, ModelError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut data = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let line = row + 1;
        let record = record.map_err(|e| ModelError::Data { line, message: e.to_string() })?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let parsed: Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(values) => {
                if values.len() != dim {
                    return Err(ModelError::Data {
                        line,
                        message: format!("expected {dim} columns, found {}", values.len()),
                    });
                }
                if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
                    return Err(ModelError::Data { line, message: format!("non-finite value {bad}") });
                }
                data.extend(values);
            }
            // A non-numeric first row is a header.
            Err(_) if row == 0 => continue,
            Err(e) => return Err(ModelError::Data { line, message: e.to_string() }),
        }
    }
    if data.is_empty() {
        return Err(ModelError::EmptySample);
    }
    Ok(data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn header_is_optional() {
        let a = read_csv_from("x\n0\n2.5\n".as_bytes(), 1).unwrap();
        let b = read_csv_from("0\n2.5\n".as_bytes(), 1).unwrap();
        assert_eq!(a.as_slice(), &[0.0, 2.5]);
        assert_eq!(a.as_slice(), b.as_slice());
    }

    #[test]
    fn multi_column_rows() {
        let s = read_csv_from("a,b\n1,2\n3,4\n".as_bytes(), 2).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.points().nth(1).unwrap(), &[3.0, 4.0]);
    }

    #[test]
    fn rejects_bad_rows() {
        assert_eq!(read_csv_from("".as_bytes(), 1).unwrap_err(), ModelError::EmptySample);
        assert_eq!(read_csv_from("x\n".as_bytes(), 1).unwrap_err(), ModelError::EmptySample);
        assert!(matches!(read_csv_from("1\nabc\n".as_bytes(), 1), Err(ModelError::Data { line: 2, .. })));
        assert!(matches!(read_csv_from("1,2\n".as_bytes(), 1), Err(ModelError::Data { line: 1, .. })));
        assert!(matches!(read_csv_from("1\nNaN\n".as_bytes(), 1), Err(ModelError::Data { .. })));
    }

    #[test]
    fn file_provenance() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "value\n1.5\n-2").unwrap();
        let s = read_csv(f.path(), 1).unwrap();
        assert_eq!(s.as_slice(), &[1.5, -2.0]);
        assert!(matches!(s.provenance(), Provenance::File { .. }));
        assert!(matches!(read_csv(Path::new("/nonexistent/x.csv"), 1), Err(ModelError::Io(_))));
    }
}
