//! Theory-vs-simulation gap reports.
//!
//! Both files are keyed on their first column. The theory file contributes
//! its `msd_theory` column and the simulation file its `msd_sim` column; a
//! two-column file contributes its second column instead. Rows where either
//! value is empty are skipped.

use std::path::Path;

use serde::Serialize;

use crate::error::{CliError, Result};
use crate::table::Table;

/// Keys closer than this (relative) are the same grid point.
const KEY_TOLERANCE: f64 = 1e-12;

/// Longest list of missing points spelled out in a mismatch error.
const MAX_LISTED: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Gap {
    pub key: String,
    pub theory: f64,
    pub sim: f64,
    /// `10 log10(sim / theory)`.
    pub gap_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub key_column: String,
    pub gaps: Vec<Gap>,
    pub skipped: usize,
    pub max_abs_db: f64,
    pub mean_db: f64,
    pub mean_abs_db: f64,
    pub tolerance_db: f64,
    pub pass: bool,
}

fn value_column(t: &Table, preferred: &str, what: &str) -> Result<usize> {
    if let Some(i) = t.column(preferred) {
        return Ok(i);
    }
    if t.header.len() == 2 {
        return Ok(1);
    }
    Err(CliError::Validation(format!(
        "{what} file has no '{preferred}' column and more than one value column"
    )))
}

fn parse_cell(cell: &str, row: usize, what: &str) -> Result<Option<f64>> {
    let cell = cell.trim();
    if cell.is_empty() {
        return Ok(None);
    }
    cell.parse::<f64>().map(Some).map_err(|_| {
        CliError::Validation(format!("{what} row {}: '{cell}' is not a number", row + 1))
    })
}

fn keys(t: &Table, what: &str) -> Result<Vec<(String, f64)>> {
    t.rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let k = r.first().map(String::as_str).unwrap_or("");
            match parse_cell(k, i, what)? {
                Some(v) => Ok((k.trim().to_string(), v)),
                None => Err(CliError::Validation(format!(
                    "{what} row {}: empty key",
                    i + 1
                ))),
            }
        })
        .collect()
}

fn same_key(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= KEY_TOLERANCE * a.abs().max(b.abs())
}

fn listing(v: &[String]) -> String {
    let mut s = v
        .iter()
        .take(MAX_LISTED)
        .cloned()
        .collect::<Vec<_>>()
        .join(", ");
    if v.len() > MAX_LISTED {
        s.push_str(&format!(", ... ({} total)", v.len()));
    }
    s
}

/// Per-point gaps between two tables on the same grid.
pub fn compare_tables(theory: &Table, sim: &Table, tolerance_db: f64) -> Result<Report> {
    if tolerance_db.is_nan() || tolerance_db < 0.0 {
        return Err(CliError::Validation(format!(
            "tolerance must be >= 0 dB, got {tolerance_db}"
        )));
    }
    let (Some(kt), Some(ks)) = (theory.header.first(), sim.header.first()) else {
        return Err(CliError::Validation("empty header".into()));
    };
    if kt != ks {
        return Err(CliError::Validation(format!(
            "grid mismatch: theory is keyed on '{kt}', simulation on '{ks}'"
        )));
    }
    let ct = value_column(theory, "msd_theory", "theory")?;
    let cs = value_column(sim, "msd_sim", "simulation")?;
    let tk = keys(theory, "theory")?;
    let sk = keys(sim, "simulation")?;

    let mut matched = vec![None; tk.len()];
    let mut used = vec![false; sk.len()];
    for (i, (_, a)) in tk.iter().enumerate() {
        if let Some(j) = (0..sk.len()).find(|&j| !used[j] && same_key(*a, sk[j].1)) {
            used[j] = true;
            matched[i] = Some(j);
        }
    }
    let missing_sim: Vec<String> = tk
        .iter()
        .zip(&matched)
        .filter(|(_, m)| m.is_none())
        .map(|(k, _)| k.0.clone())
        .collect();
    let missing_theory: Vec<String> = sk
        .iter()
        .zip(&used)
        .filter(|(_, u)| !**u)
        .map(|(k, _)| k.0.clone())
        .collect();
    if !missing_sim.is_empty() || !missing_theory.is_empty() {
        let mut msg = format!("grid mismatch on '{kt}'");
        if !missing_sim.is_empty() {
            msg.push_str(&format!(
                "; missing from simulation: {}",
                listing(&missing_sim)
            ));
        }
        if !missing_theory.is_empty() {
            msg.push_str(&format!(
                "; missing from theory: {}",
                listing(&missing_theory)
            ));
        }
        return Err(CliError::Validation(msg));
    }

    let mut gaps = Vec::new();
    let mut skipped = 0;
    for (i, j) in matched.iter().enumerate() {
        let j = j.expect("every key matched");
        let t = parse_cell(
            theory.rows[i].get(ct).map_or("", String::as_str),
            i,
            "theory",
        )?;
        let s = parse_cell(
            sim.rows[j].get(cs).map_or("", String::as_str),
            j,
            "simulation",
        )?;
        let (Some(t), Some(s)) = (t, s) else {
            skipped += 1;
            continue;
        };
        if !(t > 0.0 && s > 0.0) {
            return Err(CliError::Validation(format!(
                "point {}: MSD values must be positive (theory {t}, simulation {s})",
                tk[i].0
            )));
        }
        gaps.push(Gap {
            key: tk[i].0.clone(),
            theory: t,
            sim: s,
            gap_db: 10.0 * (s / t).log10(),
        });
    }
    if gaps.is_empty() {
        return Err(CliError::Validation(
            "no point has both a theory and a simulation value".into(),
        ));
    }
    let n = gaps.len() as f64;
    let max_abs_db = gaps.iter().map(|g| g.gap_db.abs()).fold(0.0, f64::max);
    let mean_db = gaps.iter().map(|g| g.gap_db).sum::<f64>() / n;
    let mean_abs_db = gaps.iter().map(|g| g.gap_db.abs()).sum::<f64>() / n;
    Ok(Report {
        key_column: kt.clone(),
        gaps,
        skipped,
        max_abs_db,
        mean_db,
        mean_abs_db,
        tolerance_db,
        pass: max_abs_db <= tolerance_db,
    })
}

pub fn compare_files(theory: &Path, sim: &Path, tolerance_db: f64) -> Result<Report> {
    compare_tables(&Table::read(theory)?, &Table::read(sim)?, tolerance_db)
}

impl Report {
    /// Per-point table followed by the summary line.
    pub fn render(&self) -> String {
        let mut out = format!(
            "{:>24}  {:>24}  {:>24}  {:>9}\n",
            self.key_column, "theory", "simulation", "gap_db"
        );
        for g in &self.gaps {
            out.push_str(&format!(
                "{:>24}  {:>24.16e}  {:>24.16e}  {:>9.4}\n",
                g.key, g.theory, g.sim, g.gap_db
            ));
        }
        out.push_str(&format!(
            "{} points ({} skipped): max |gap| {:.4} dB, mean gap {:.4} dB, mean |gap| {:.4} dB; tolerance {} dB: {}\n",
            self.gaps.len(),
            self.skipped,
            self.max_abs_db,
            self.mean_db,
            self.mean_abs_db,
            self.tolerance_db,
            if self.pass { "PASS" } else { "FAIL" }
        ));
        out
    }
}
