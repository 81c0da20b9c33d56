//! CSV layout and number formatting.
//!
//! Sweep files start with `(<param>, msd_theory, msd_sim, msd_sim_ci)` and
//! may append preset-specific columns. Curve files are
//! `(n, msd_theory, msd_sim, msd_theory_db, msd_sim_db)`. Missing values are
//! empty cells.

use std::path::Path;

use crate::error::{CliError, Result};

pub const SWEEP_VALUES: [&str; 3] = ["msd_theory", "msd_sim", "msd_sim_ci"];
pub const CURVE_COLUMNS: [&str; 5] = ["n", "msd_theory", "msd_sim", "msd_theory_db", "msd_sim_db"];

/// Upper bound on the rows written per learning curve.
pub const CURVE_ROWS: usize = 1000;

/// 17 significant digits, or an empty cell for missing values.
pub fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        String::new()
    }
}

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// MSD in dB, 4 decimals.
pub fn db(v: Option<f64>) -> String {
    match v {
        Some(x) if x > 0.0 && x.is_finite() => format!("{:.4}", 10.0 * x.log10()),
        _ => String::new(),
    }
}

/// In-memory CSV table with a header row.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        Self {
            header: header.iter().map(|s| s.as_ref().to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path)
            .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
        let header = rdr
            .headers()
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?
            .iter()
            .map(str::to_string)
            .collect();
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
            rows.push(rec.iter().map(str::to_string).collect());
        }
        Ok(Self { header, rows })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let fail =
            |e: csv::Error| CliError::Validation(format!("cannot write {}: {e}", path.display()));
        let mut w = csv::Writer::from_path(path).map_err(fail)?;
        w.write_record(&self.header).map_err(fail)?;
        for row in &self.rows {
            w.write_record(row).map_err(fail)?;
        }
        w.flush()
            .map_err(|e| CliError::Validation(format!("cannot write {}: {e}", path.display())))
    }
}

/// Row indices kept when thinning a curve of `len` samples: a uniform
/// stride plus the final sample.
pub fn curve_indices(len: usize) -> Vec<usize> {
    if len == 0 {
        return Vec::new();
    }
    let stride = len.div_ceil(CURVE_ROWS).max(1);
    let mut idx: Vec<usize> = (0..len).step_by(stride).collect();
    if *idx.last().unwrap() != len - 1 {
        idx.push(len - 1);
    }
    idx
}

/// Learning-curve table from optional theory and simulation series.
pub fn curve_table(theory: Option<&[f64]>, sim: Option<&[f64]>) -> Table {
    let len = theory
        .map_or(0, <[f64]>::len)
        .max(sim.map_or(0, <[f64]>::len));
    let mut t = Table::new(&CURVE_COLUMNS);
    for n in curve_indices(len) {
        let th = theory.and_then(|v| v.get(n).copied());
        let si = sim.and_then(|v| v.get(n).copied());
        t.push(vec![n.to_string(), opt(th), opt(si), db(th), db(si)]);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(num(0.1), "1.0000000000000001e-1");
        assert_eq!(num(3.75e-7), "3.7500000000000001e-7");
        assert_eq!(num(f64::NAN), "");
        let x = 1.0 / 3.0;
        assert_eq!(num(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn db_has_four_decimals() {
        assert_eq!(db(Some(2.0)), "3.0103");
        assert_eq!(db(Some(1e-3)), "-30.0000");
        assert_eq!(db(Some(0.0)), "");
        assert_eq!(db(None), "");
    }

    #[test]
    fn curve_thinning_keeps_ends() {
        assert_eq!(curve_indices(5), vec![0, 1, 2, 3, 4]);
        let idx = curve_indices(30_001);
        assert!(idx.len() <= CURVE_ROWS + 1);
        assert_eq!(idx[0], 0);
        assert_eq!(*idx.last().unwrap(), 30_000);
        assert!(curve_indices(0).is_empty());
    }

    #[test]
    fn curve_table_pads_short_series() {
        let t = curve_table(Some(&[1.0, 0.5, 0.25]), Some(&[1.0, 0.4]));
        assert_eq!(t.header, CURVE_COLUMNS);
        assert_eq!(t.rows.len(), 3);
        assert_eq!(t.rows[2][2], "");
        assert_eq!(t.rows[2][3], "-6.0206");
    }
}
