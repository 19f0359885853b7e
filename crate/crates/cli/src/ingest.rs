//! Strict CSV ingestion: header row, one numeric column per variable, one
//! row per period, no missing cells.

use std::path::{Path, PathBuf};

use lproj::Matrix;

pub const MIN_PERIODS: usize = 30;

#[derive(Debug, Clone)]
pub struct IngestedSeries {
    pub columns: Vec<String>,
    pub data: Matrix,
    pub source: PathBuf,
}

impl IngestedSeries {
    /// Column index by name, or by 0-based position when `key` is numeric.
    pub fn column(&self, key: &str) -> Result<usize, String> {
        if let Some(i) = self.columns.iter().position(|c| c == key) {
            return Ok(i);
        }
        match key.parse::<usize>() {
            Ok(i) if i < self.columns.len() => Ok(i),
            _ => Err(format!(
                "{}: no column {key:?} (columns: {})",
                self.source.display(),
                self.columns.join(", ")
            )),
        }
    }
}

pub fn read_series(path: &Path) -> Result<IngestedSeries, String> {
    let file = std::fs::File::open(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_series(file, path)
}

pub fn parse_series<R: std::io::Read>(input: R, source: &Path) -> Result<IngestedSeries, String> {
    let here = source.display();
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let columns: Vec<String> = rd
        .headers()
        .map_err(|e| format!("{here}: header: {e}"))?
        .iter()
        .map(str::to_string)
        .collect();
    if columns.is_empty() || columns.iter().any(String::is_empty) {
        return Err(format!("{here}: header row must name every column"));
    }
    let n = columns.len();
    let mut values = Vec::new();
    let mut periods = 0;
    for (k, rec) in rd.records().enumerate() {
        // Line 1 is the header.
        let line = k + 2;
        let rec = rec.map_err(|e| format!("{here}: row {line}: {e}"))?;
        if rec.len() != n {
            return Err(format!("{here}: row {line}: {} fields, expected {n}", rec.len()));
        }
        for (j, cell) in rec.iter().enumerate() {
            let x: f64 = cell
                .parse()
                .ok()
                .filter(|x: &f64| x.is_finite())
                .ok_or_else(|| format!("{here}: row {line}, column {} ({}): {cell:?} is not a finite number", j + 1, columns[j]))?;
            values.push(x);
        }
        periods += 1;
    }
    if periods < MIN_PERIODS {
        return Err(format!("{here}: {periods} periods; at least {MIN_PERIODS} are required"));
    }
    let data = Matrix::new(periods, n, values).map_err(|e| e.to_string())?;
    Ok(IngestedSeries {
        columns,
        data,
        source: source.to_path_buf(),
    })
}

/// Writes a `T x n` matrix with a header, 17 significant digits per cell.
pub fn write_series<W: std::io::Write>(out: W, columns: &[String], data: &Matrix) -> Result<(), String> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(columns).map_err(|e| e.to_string())?;
    for t in 0..data.rows() {
        w.write_record(data.row(t).iter().map(|x| format!("{x:.16e}")))
            .map_err(|e| e.to_string())?;
    }
    w.flush().map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn csv_text(rows: usize) -> String {
        let mut s = String::from("a,b\n");
        for t in 0..rows {
            s.push_str(&format!("{t},{}\n", 0.5 * t as f64));
        }
        s
    }

    #[test]
    fn parses_and_resolves_columns() {
        let s = parse_series(csv_text(40).as_bytes(), Path::new("x.csv")).unwrap();
        assert_eq!(s.data.rows(), 40);
        assert_eq!(s.data[(3, 1)], 1.5);
        assert_eq!(s.column("b").unwrap(), 1);
        assert_eq!(s.column("0").unwrap(), 0);
        assert!(s.column("c").is_err());
    }

    #[test]
    fn rejects_bad_cells_with_position() {
        let text = csv_text(40).replace("5,2.5", "5,NA");
        let e = parse_series(text.as_bytes(), Path::new("x.csv")).unwrap_err();
        assert!(e.contains("row 7, column 2 (b)"), "{e}");
        let missing = csv_text(40).replace("5,2.5", "5,");
        assert!(parse_series(missing.as_bytes(), Path::new("x.csv")).is_err());
    }

    #[test]
    fn rejects_short_samples() {
        assert!(parse_series(csv_text(29).as_bytes(), Path::new("x.csv"))
            .unwrap_err()
            .contains("at least 30"));
    }

    #[test]
    fn round_trip_is_exact() {
        let data = Matrix::new(30, 2, (0..60).map(|i| (i as f64).sqrt() / 3.0).collect()).unwrap();
        let mut buf = Vec::new();
        write_series(&mut buf, &["x".into(), "y".into()], &data).unwrap();
        let back = parse_series(&buf[..], Path::new("mem")).unwrap();
        assert_eq!(back.data, data);
    }
}
