//! JSON property report and CSV spectrum output.

use std::io::Write;

use serde::Serialize;

use crate::dirac::SpectrumEntry;

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub anchor: String,
    pub defect: Option<f64>,
    pub tolerance: f64,
    pub passed: bool,
    pub skipped: bool,
    pub detail: String,
}

impl CheckOutcome {
    pub fn measured(name: &str, anchor: &str, defect: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        CheckOutcome {
            name: name.into(),
            anchor: anchor.into(),
            // non-finite defects (rank mismatches and the like) serialize as null and fail
            defect: defect.is_finite().then_some(defect),
            tolerance,
            passed: defect.is_finite() && defect <= tolerance,
            skipped: false,
            detail: detail.into(),
        }
    }

    pub fn skipped(name: &str, anchor: &str, tolerance: f64, reason: impl Into<String>) -> Self {
        CheckOutcome {
            name: name.into(),
            anchor: anchor.into(),
            defect: None,
            tolerance,
            passed: true,
            skipped: true,
            detail: reason.into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct RunSummary {
    pub command: String,
    pub algebra: String,
    pub mu: Vec<f64>,
    pub z: Vec<f64>,
    pub connection: String,
    pub metric: String,
    pub orientation: i8,
    pub character_weight: Vec<f64>,
    pub irrep_cutoff: usize,
    pub irreps: Vec<String>,
    pub reduction: String,
    pub orbit_dim: usize,
    pub spinor_dim: usize,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct PropertyReport {
    pub run: RunSummary,
    pub checks: Vec<CheckOutcome>,
    pub all_passed: bool,
    pub non_hermitian_spectrum: bool,
    pub spectrum_rows: usize,
    pub warnings: Vec<String>,
}

impl PropertyReport {
    pub fn new(run: RunSummary, checks: Vec<CheckOutcome>, warnings: Vec<String>) -> Self {
        let all_passed = checks.iter().all(|c| c.passed);
        PropertyReport { run, checks, all_passed, non_hermitian_spectrum: false, spectrum_rows: 0, warnings }
    }

    pub fn check(&self, name: &str) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report is plain data");
        s.push('\n');
        s
    }
}

#[derive(Serialize)]
struct CsvRow<'a> {
    eigenvalue_re: String,
    eigenvalue_im: String,
    multiplicity: usize,
    irrep_label: &'a str,
    block_dim: usize,
}

fn fixed(v: f64) -> String {
    let s = format!("{v:.12}");
    // "-0.000000000000" after rounding
    if s.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') {
        s.trim_start_matches('-').to_string()
    } else {
        s
    }
}

pub fn write_spectrum_csv<W: Write>(rows: &[SpectrumEntry], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(["eigenvalue_re", "eigenvalue_im", "multiplicity", "irrep_label", "block_dim"])?;
    }
    for r in rows {
        w.serialize(CsvRow {
            eigenvalue_re: fixed(r.re),
            eigenvalue_im: fixed(r.im),
            multiplicity: r.multiplicity,
            irrep_label: &r.irrep_label,
            block_dim: r.block_dim,
        })?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let rows = vec![
            SpectrumEntry { re: -1.0, im: 0.0, multiplicity: 3, irrep_label: "spin-1".into(), block_dim: 2 },
            SpectrumEntry { re: -1e-13, im: 0.0, multiplicity: 1, irrep_label: "a,b".into(), block_dim: 1 },
        ];
        let mut buf = Vec::new();
        write_spectrum_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "eigenvalue_re,eigenvalue_im,multiplicity,irrep_label,block_dim");
        assert_eq!(lines[1], "-1.000000000000,0.000000000000,3,spin-1,2");
        assert_eq!(lines[2], "0.000000000000,0.000000000000,1,\"a,b\",1");
    }

    #[test]
    fn empty_spectrum_still_has_header() {
        let mut buf = Vec::new();
        write_spectrum_csv(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1);
    }

    #[test]
    fn non_finite_defect_fails() {
        let c = CheckOutcome::measured("x", "a", f64::INFINITY, 1.0, "");
        assert!(!c.passed && c.defect.is_none());
        assert!(CheckOutcome::skipped("y", "a", 1.0, "off").passed);
    }
}
