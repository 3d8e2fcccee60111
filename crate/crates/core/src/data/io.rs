//! CSV dataset format: header `x1,...,xd,d,y`, one observation per row.
//!
//! Reals are written in shortest round-trip form, so `load(save(data))`
//! reproduces `data` exactly.

use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use super::Dataset;
use crate::error::{Error, Result};

pub fn save_dataset_csv(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let file = File::create(path.as_ref())?;
    write_dataset_csv(data, file)
}

pub fn write_dataset_csv<W: Write>(data: &Dataset, sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    let mut header: Vec<String> = (1..=data.dim()).map(|k| format!("x{k}")).collect();
    header.push("d".into());
    header.push("y".into());
    w.write_record(&header)?;
    for i in 0..data.n() {
        let mut row: Vec<String> = data.x(i).iter().map(|v| v.to_string()).collect();
        row.push(data.treatment(i).to_string());
        row.push(data.y(i).to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_dataset_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    read_dataset_csv(File::open(path)?, path)
}

/// Parses a dataset; `origin` only labels error messages.
pub fn read_dataset_csv<R: Read>(source: R, origin: &Path) -> Result<Dataset> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: PathBuf::from(origin),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);

    let header = reader.headers()?.clone();
    let cols: Vec<&str> = header.iter().collect();
    if cols.len() < 3 || cols[cols.len() - 2] != "d" || cols[cols.len() - 1] != "y" {
        return Err(parse_err(1, "header must be x1,...,xd,d,y".into()));
    }
    let dim = cols.len() - 2;
    for (k, name) in cols[..dim].iter().enumerate() {
        if *name != format!("x{}", k + 1) {
            return Err(parse_err(1, format!("expected column x{}, found {name:?}", k + 1)));
        }
    }

    let mut x = Vec::new();
    let mut treatment = Vec::new();
    let mut y = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != dim + 2 {
            return Err(parse_err(
                line,
                format!("expected {} fields, found {}", dim + 2, record.len()),
            ));
        }
        let real = |k: usize| -> Result<f64> {
            record[k]
                .parse::<f64>()
                .map_err(|_| parse_err(line, format!("column {}: not a real: {:?}", k + 1, &record[k])))
        };
        for k in 0..dim {
            x.push(real(k)?);
        }
        let t = match &record[dim] {
            "0" => 0,
            "1" => 1,
            other => return Err(parse_err(line, format!("treatment must be 0 or 1, found {other:?}"))),
        };
        treatment.push(t);
        y.push(real(dim + 1)?);
    }
    Dataset::new(dim, x, treatment, y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Dataset> {
        read_dataset_csv(text.as_bytes(), Path::new("mem.csv"))
    }

    #[test]
    fn two_rows_parse() {
        let d = parse("x1,x2,d,y\n0.5,1,0,2.5\n-1,3e-2,1,7\n").unwrap();
        assert_eq!(d.n(), 2);
        assert_eq!(d.dim(), 2);
        assert_eq!(d.x(1), &[-1.0, 0.03]);
        assert_eq!(d.treatments(), &[0, 1]);
    }

    #[test]
    fn short_row_reports_line() {
        let err = parse("x1,x2,d,y\n0,0,1,1\n1,2,3,4,5\n").unwrap_err();
        match err {
            Error::Parse { line, message, .. } => {
                assert_eq!(line, 3);
                assert!(message.contains("expected 4 fields"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn nonbinary_treatment_rejected() {
        let err = parse("x1,d,y\n0,2,1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn bad_header_rejected() {
        assert!(parse("a,b,c\n1,0,1\n").is_err());
    }

    #[test]
    fn round_trip_is_exact() {
        let d = Dataset::new(
            2,
            vec![0.1, 1.0 / 3.0, -2.5e-300, std::f64::consts::PI],
            vec![1, 0],
            vec![1e17 + 1.0, -0.000_123_456_789_012_345_68],
        )
        .unwrap();
        let mut buf = Vec::new();
        write_dataset_csv(&d, &mut buf).unwrap();
        let back = read_dataset_csv(buf.as_slice(), Path::new("mem")).unwrap();
        assert_eq!(d, back);
    }
}
