use std::io::{Read, Write};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const CSV_HEADER: [&str; 7] = ["dgp", "method", "horizon", "coverage", "median_length", "failed", "reps"];

/// Summary of one `(dgp, method, horizon)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McRow {
    pub dgp: String,
    pub method: String,
    pub horizon: usize,
    /// Share of surviving repetitions whose interval covers the truth.
    pub coverage: f64,
    /// Median interval length over surviving repetitions.
    pub median_length: f64,
    /// Repetitions where the method returned an error.
    pub failed: usize,
    pub reps: usize,
    pub covered: usize,
}

impl McRow {
    pub fn key(&self) -> (&str, &str, usize) {
        (&self.dgp, &self.method, self.horizon)
    }

    pub fn surviving(&self) -> usize {
        self.reps - self.failed
    }

    /// Binomial standard error of `coverage`.
    pub fn coverage_se(&self) -> f64 {
        coverage_se(self.coverage, self.surviving())
    }
}

/// `sqrt(c (1 - c) / n)`.
pub fn coverage_se(coverage: f64, n: usize) -> f64 {
    (coverage * (1.0 - coverage) / n as f64).sqrt()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct McResultTable {
    pub rows: Vec<McRow>,
    /// Digest of every simulated sample, in repetition order.
    pub sample_digest: u64,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl McResultTable {
    pub fn get(&self, dgp: &str, method: &str, horizon: usize) -> Option<&McRow> {
        self.rows.iter().find(|r| r.key() == (dgp, method, horizon))
    }

    /// Appends another table; digests are chained.
    pub fn extend(&mut self, other: McResultTable) {
        self.rows.extend(other.rows);
        self.sample_digest = super::fnv_mix(self.sample_digest, other.sample_digest);
        self.wall_time += other.wall_time;
    }

    /// Floats are written with 17 significant digits so a read-back is exact.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::ConfigInvalid(format!("csv output: {e}"));
        w.write_record(CSV_HEADER).map_err(io)?;
        for r in &self.rows {
            w.write_record([
                r.dgp.clone(),
                r.method.clone(),
                r.horizon.to_string(),
                format!("{:.16e}", r.coverage),
                format!("{:.16e}", r.median_length),
                r.failed.to_string(),
                r.reps.to_string(),
            ])
            .map_err(io)?;
        }
        w.flush().map_err(|e| Error::ConfigInvalid(format!("csv output: {e}")))
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(input);
        let headers = rd
            .headers()
            .map_err(|e| Error::ConfigInvalid(format!("csv header: {e}")))?
            .clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| Error::ConfigInvalid(format!("csv header: missing column {name}")))
        };
        let idx: Vec<usize> = CSV_HEADER.iter().map(|c| col(c)).collect::<Result<_>>()?;
        let mut rows = Vec::new();
        for (line, rec) in rd.records().enumerate() {
            let rec = rec.map_err(|e| Error::ConfigInvalid(format!("csv row {}: {e}", line + 2)))?;
            let field = |k: usize| rec.get(idx[k]).unwrap_or("").trim();
            let bad = |k: usize| Error::ConfigInvalid(format!("csv row {}: bad {} {:?}", line + 2, CSV_HEADER[k], field(k)));
            let horizon: usize = field(2).parse().map_err(|_| bad(2))?;
            let coverage: f64 = field(3).parse().map_err(|_| bad(3))?;
            let median_length: f64 = field(4).parse().map_err(|_| bad(4))?;
            let failed: usize = field(5).parse().map_err(|_| bad(5))?;
            let reps: usize = field(6).parse().map_err(|_| bad(6))?;
            if failed > reps {
                return Err(bad(5));
            }
            let covered = if coverage.is_finite() {
                (coverage * (reps - failed) as f64).round() as usize
            } else {
                0
            };
            rows.push(McRow {
                dgp: field(0).to_string(),
                method: field(1).to_string(),
                horizon,
                coverage,
                median_length,
                failed,
                reps,
                covered,
            });
        }
        Ok(Self {
            rows,
            ..Self::default()
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("table serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::ConfigInvalid(format!("json table: {e}")))
    }
}

/// A cell outside tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct CellMismatch {
    pub dgp: String,
    pub method: String,
    pub horizon: usize,
    pub coverage: (f64, f64),
    pub median_length: (f64, f64),
}

/// Cells of `reference` whose coverage differs by more than `cov_tol` or
/// whose median length differs by more than `len_rel_tol` relative to the
/// reference. Bounds are closed. Every reference cell must be present in
/// `observed`; extra observed cells are ignored.
pub fn compare_tables(
    observed: &McResultTable,
    reference: &McResultTable,
    cov_tol: f64,
    len_rel_tol: f64,
) -> Result<Vec<CellMismatch>> {
    // Absorbs rounding in the subtraction itself.
    const SLACK: f64 = 1e-12;
    let mut out = Vec::new();
    for r in &reference.rows {
        let o = observed.get(&r.dgp, &r.method, r.horizon).ok_or_else(|| {
            Error::KeyMismatch(format!("{} / {} / h={} missing from the observed table", r.dgp, r.method, r.horizon))
        })?;
        let cov_ok = (o.coverage - r.coverage).abs() <= cov_tol + SLACK;
        let len_ok = (o.median_length - r.median_length).abs() <= len_rel_tol * r.median_length.abs() + SLACK;
        if !(cov_ok && len_ok) {
            out.push(CellMismatch {
                dgp: r.dgp.clone(),
                method: r.method.clone(),
                horizon: r.horizon,
                coverage: (o.coverage, r.coverage),
                median_length: (o.median_length, r.median_length),
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(method: &str, h: usize, coverage: f64, len: f64) -> McRow {
        McRow {
            dgp: "ar1(rho=0.5)".into(),
            method: method.into(),
            horizon: h,
            coverage,
            median_length: len,
            failed: 0,
            reps: 1000,
            covered: (coverage * 1000.0).round() as usize,
        }
    }

    fn table(rows: Vec<McRow>) -> McResultTable {
        McResultTable {
            rows,
            ..Default::default()
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let t = table(vec![row("LP-LA_b", 1, 0.9, 0.1 + 0.2), row("AR", 12, 1.0 / 3.0, std::f64::consts::PI)]);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("dgp,method,horizon,coverage,median_length,failed,reps\n"));
        let back = McResultTable::read_csv(&buf[..]).unwrap();
        assert_eq!(back.rows, t.rows);
    }

    #[test]
    fn json_round_trip_skips_wall_time() {
        let mut t = table(vec![row("AR", 1, 0.9, 1.0)]);
        t.wall_time = Duration::from_secs(5);
        let json = t.to_json();
        assert!(!json.contains("wall_time"));
        let back = McResultTable::from_json(&json).unwrap();
        assert_eq!(back.rows, t.rows);
        assert_eq!(back.wall_time, Duration::ZERO);
    }

    #[test]
    fn tolerance_bounds_are_closed() {
        let reference = table(vec![row("AR", 1, 0.900, 1.0)]);
        let at_edge = table(vec![row("AR", 1, 0.915, 1.05)]);
        assert!(compare_tables(&at_edge, &reference, 0.015, 0.05).unwrap().is_empty());
        let outside = table(vec![row("AR", 1, 0.916, 1.0)]);
        assert_eq!(compare_tables(&outside, &reference, 0.015, 0.05).unwrap().len(), 1);
        let long = table(vec![row("AR", 1, 0.9, 1.051)]);
        assert_eq!(compare_tables(&long, &reference, 0.015, 0.05).unwrap().len(), 1);
    }

    #[test]
    fn missing_reference_key() {
        let reference = table(vec![row("AR", 1, 0.9, 1.0), row("AR", 6, 0.9, 1.0)]);
        let observed = table(vec![row("AR", 1, 0.9, 1.0), row("LP-LA", 1, 0.9, 1.0)]);
        assert!(matches!(
            compare_tables(&observed, &reference, 0.01, 0.01),
            Err(Error::KeyMismatch(_))
        ));
        // Extra observed rows are fine.
        assert!(compare_tables(&observed, &table(vec![row("AR", 1, 0.9, 1.0)]), 0.0, 0.0)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn csv_diagnostics() {
        let bad = "dgp,method,horizon,coverage,median_length,failed,reps\nx,AR,one,0.9,1,0,10\n";
        let e = McResultTable::read_csv(bad.as_bytes()).unwrap_err().to_string();
        assert!(e.contains("row 2") && e.contains("horizon"), "{e}");
        let missing = "dgp,method,horizon\nx,AR,1\n";
        assert!(McResultTable::read_csv(missing.as_bytes()).unwrap_err().to_string().contains("coverage"));
    }

    #[test]
    fn binomial_se() {
        assert!((coverage_se(0.9, 1000) - 0.009486832980505138).abs() < 1e-15);
        assert_eq!(coverage_se(1.0, 10), 0.0);
    }
}
