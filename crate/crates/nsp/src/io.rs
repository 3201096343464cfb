//! File formats: profile tables, snapshots, slices, ledgers and summaries.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use nsp_core::fields::EulerianSlice;
use nsp_core::monitor::DiagnosticsReport;
use nsp_core::solver::LagrangianState;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Deserialize)]
struct ProfileRow {
    r: f64,
    rho0: f64,
    m0: f64,
}

/// Reads a CSV table with header `r,rho0,m0`.
pub fn read_profile_table(path: &Path) -> CliResult<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let (mut r, mut rho, mut m) = (Vec::new(), Vec::new(), Vec::new());
    for row in reader.deserialize() {
        let row: ProfileRow = row.map_err(|e| CliError::Parse {
            path: path.to_path_buf(),
            detail: e.to_string(),
        })?;
        r.push(row.r);
        rho.push(row.rho0);
        m.push(row.m0);
    }
    if r.len() < 2 {
        return Err(CliError::Parse {
            path: path.to_path_buf(),
            detail: "need at least two rows".into(),
        });
    }
    Ok((r, rho, m))
}

pub fn create(path: &Path) -> CliResult<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(|e| CliError::io(path, e))?))
}

fn csv_writer(path: &Path) -> CliResult<csv::Writer<BufWriter<File>>> {
    Ok(csv::Writer::from_writer(create(path)?))
}

/// Writes rows of equally long columns under `header`.
pub fn write_columns(path: &Path, header: &[&str], columns: &[&[f64]]) -> CliResult<()> {
    let mut w = csv_writer(path)?;
    w.write_record(header)?;
    let rows = columns.iter().map(|c| c.len()).min().unwrap_or(0);
    let mut rec = Vec::with_capacity(columns.len());
    for i in 0..rows {
        rec.clear();
        rec.extend(columns.iter().map(|c| format!("{:e}", c[i])));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))?;
    Ok(())
}

/// Edge-centred snapshot `x,r,u,rho`; ρ at an edge is the mean of its cells.
pub fn write_snapshot(path: &Path, state: &LagrangianState) -> CliResult<()> {
    let n = state.cells();
    let rho: Vec<f64> = (0..=n)
        .map(|k| match k {
            0 => state.rho[0],
            k if k == n => state.rho[n - 1],
            k => 0.5 * (state.rho[k - 1] + state.rho[k]),
        })
        .collect();
    write_columns(path, &["x", "r", "u", "rho"], &[&state.x, &state.r, &state.u, &rho])
}

pub fn write_slice(path: &Path, slice: &EulerianSlice) -> CliResult<()> {
    write_columns(
        path,
        &["r", "rho", "u", "phir"],
        &[&slice.r_grid, &slice.rho, &slice.u, &slice.phi_r],
    )
}

/// One line of the run ledger.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LedgerLine {
    pub tau: f64,
    pub mass: f64,
    #[serde(rename = "E_kin")]
    pub e_kin: f64,
    #[serde(rename = "E_int")]
    pub e_int: f64,
    #[serde(rename = "E_field")]
    pub e_field: f64,
    #[serde(rename = "E_balance_residual")]
    pub e_balance_residual: f64,
    pub bd_functional: f64,
    pub rho_boundary: f64,
    pub rho_boundary_oracle: f64,
    pub b_of_t: f64,
}

impl From<&DiagnosticsReport> for LedgerLine {
    fn from(r: &DiagnosticsReport) -> Self {
        Self {
            tau: r.tau,
            mass: r.mass,
            e_kin: r.e_kin,
            e_int: r.e_int,
            e_field: r.e_field,
            e_balance_residual: r.e_balance_residual,
            bd_functional: r.bd_functional,
            rho_boundary: r.rho_boundary,
            rho_boundary_oracle: r.rho_boundary_oracle,
            b_of_t: r.b_of_t,
        }
    }
}

/// Appends NDJSON lines and flushes after each, so a crash keeps what was written.
pub struct LedgerWriter {
    out: BufWriter<File>,
    path: std::path::PathBuf,
}

impl LedgerWriter {
    pub fn create(path: &Path) -> CliResult<Self> {
        Ok(Self {
            out: create(path)?,
            path: path.to_path_buf(),
        })
    }

    pub fn write(&mut self, line: &LedgerLine) -> CliResult<()> {
        serde_json::to_writer(&mut self.out, line)?;
        self.out.write_all(b"\n").map_err(|e| CliError::io(&self.path, e))?;
        self.out.flush().map_err(|e| CliError::io(&self.path, e))
    }
}

pub fn read_ledger(path: &Path) -> CliResult<Vec<LedgerLine>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(CliError::from))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extremes {
    pub min: f64,
    pub max: f64,
    #[serde(rename = "final")]
    pub last: f64,
}

impl Extremes {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Option<Self> {
        let mut it = values.into_iter();
        let first = it.next()?;
        let mut e = Extremes {
            min: first,
            max: first,
            last: first,
        };
        for v in it {
            e.min = e.min.min(v);
            e.max = e.max.max(v);
            e.last = v;
        }
        Some(e)
    }
}

/// min/max/final of every scalar report field, keyed by field name.
pub fn summarize(reports: &[DiagnosticsReport]) -> serde_json::Map<String, serde_json::Value> {
    type Getter = fn(&DiagnosticsReport) -> f64;
    let fields: [(&str, Getter); 14] = [
        ("tau", |r| r.tau),
        ("mass", |r| r.mass),
        ("E_kin", |r| r.e_kin),
        ("E_int", |r| r.e_int),
        ("E_field", |r| r.e_field),
        ("E_grav", |r| r.e_grav),
        ("E_balance_residual", |r| r.e_balance_residual),
        ("bd_functional", |r| r.bd_functional),
        ("bd_residual", |r| r.bd_residual),
        ("rho_boundary", |r| r.rho_boundary),
        ("rho_boundary_oracle", |r| r.rho_boundary_oracle),
        ("b_of_t", |r| r.b_of_t),
        ("higher_int_density", |r| r.higher_int_density),
        ("higher_int_velocity", |r| r.higher_int_velocity),
    ];
    let mut map = serde_json::Map::new();
    for (name, get) in fields {
        if let Some(e) = Extremes::of(reports.iter().map(get)) {
            map.insert(name.to_string(), serde_json::to_value(e).expect("plain numbers"));
        }
    }
    map
}

pub fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n").map_err(|e| CliError::io(path, e))?;
    out.flush().map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extremes_track_last_value() {
        let e = Extremes::of([3.0, -1.0, 5.0, 2.0]).unwrap();
        assert_eq!((e.min, e.max, e.last), (-1.0, 5.0, 2.0));
        assert!(Extremes::of(std::iter::empty()).is_none());
    }

    #[test]
    fn ledger_round_trips_with_schema_names() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ledger.ndjson");
        let line = LedgerLine {
            tau: 0.5,
            mass: 1.0,
            e_kin: 0.1,
            e_int: 0.2,
            e_field: 0.3,
            e_balance_residual: 1e-9,
            bd_functional: -2.0,
            rho_boundary: 0.6,
            rho_boundary_oracle: 0.6,
            b_of_t: 4.1,
        };
        let mut w = LedgerWriter::create(&path).unwrap();
        w.write(&line).unwrap();
        w.write(&line).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.lines().next().unwrap().contains("\"E_balance_residual\""));
        assert_eq!(read_ledger(&path).unwrap(), vec![line, line]);
    }

    #[test]
    fn profile_table_needs_the_right_header() {
        let dir = tempfile::tempdir().unwrap();
        let good = dir.path().join("good.csv");
        std::fs::write(&good, "r,rho0,m0\n0,1,0\n1,1,1\n").unwrap();
        let (r, rho, m) = read_profile_table(&good).unwrap();
        assert_eq!(r, vec![0.0, 1.0]);
        assert_eq!(rho, vec![1.0, 1.0]);
        assert_eq!(m, vec![0.0, 1.0]);
        let bad = dir.path().join("bad.csv");
        std::fs::write(&bad, "r,rho,m\n0,1,0\n1,1,1\n").unwrap();
        assert!(matches!(read_profile_table(&bad), Err(CliError::Parse { .. })));
    }
}
