//! On-disk artifacts: the diagnostics table, binary field snapshots and the
//! run summary.
//!
//! A field file starts with one ASCII line
//! `KVMIX-FIELD v1 n=<n> N=<N> t=<t>` followed by, for each constituent,
//! the arrays ρ, v₁, v₂, π of `N²` little-endian `f64` values in row-major
//! order (index `a·N + b` is the node `(a h, b h)`).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::basis::SpectralBasis;
use crate::diagnostics::DiagnosticsRecord;
use crate::engine::{coefficient_rate, EngineError, SimState};
use crate::mixture::{ForcingSpec, MixtureParams};
use crate::pressure::pressure_at;
use crate::scalar::Real;

pub const FIELD_MAGIC: &str = "KVMIX-FIELD";
pub const FIELD_VERSION: &str = "v1";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const SUMMARY_FILE: &str = "summary.txt";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: malformed field file: {reason}")]
    MalformedField { path: PathBuf, reason: String },
    #[error(transparent)]
    Engine(#[from] EngineError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Creates `dir` and any missing parents.
pub fn ensure_dir(dir: &Path) -> Result<(), IoError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))
}

/// Renders diagnostics as CSV with every value in `{:.16e}`.
pub fn diagnostics_csv<T: Real>(records: &[DiagnosticsRecord<T>]) -> String {
    let n = records.first().map_or(0, |r| r.n());
    let mut out = DiagnosticsRecord::<T>::header(n).join(",");
    out.push('\n');
    for r in records {
        let row: Vec<String> = r.values().iter().map(|v| format!("{v:.16e}")).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn write_diagnostics<T: Real>(
    path: &Path,
    records: &[DiagnosticsRecord<T>],
) -> Result<(), IoError> {
    std::fs::write(path, diagnostics_csv(records)).map_err(io_err(path))
}

/// Grid values of every constituent at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSnapshot {
    pub grid_size: usize,
    pub t: f64,
    pub constituents: Vec<ConstituentFields>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstituentFields {
    pub rho: Vec<f64>,
    pub vx: Vec<f64>,
    pub vy: Vec<f64>,
    pub pressure: Vec<f64>,
}

impl FieldSnapshot {
    /// Samples densities, velocities and recovered pressures of `state`.
    pub fn capture<T: Real>(
        state: &SimState<T>,
        params: &MixtureParams<T>,
        forcing: &ForcingSpec<T>,
        basis: &SpectralBasis<T>,
    ) -> Result<Self, EngineError> {
        let dcdt = coefficient_rate(state, params, forcing, basis)?;
        let pressure = pressure_at(state, &dcdt, params, forcing, basis)?;
        let velocities = state.velocities(basis)?;
        let f = |v: &[T]| v.iter().map(|x| x.to_f64_lossy()).collect::<Vec<f64>>();
        let constituents = (0..state.n())
            .map(|i| ConstituentFields {
                rho: f(state.densities[i].values()),
                vx: f(&velocities[i].x),
                vy: f(&velocities[i].y),
                pressure: f(pressure.per_constituent[i].data()),
            })
            .collect();
        Ok(Self {
            grid_size: basis.grid_size(),
            t: state.t.to_f64_lossy(),
            constituents,
        })
    }
}

/// Name of the snapshot file for output step `step`.
pub fn field_file_name(step: u64) -> String {
    format!("fields_{step:08}.dat")
}

pub fn write_fields(path: &Path, snap: &FieldSnapshot) -> Result<(), IoError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    let mut body = || -> std::io::Result<()> {
        writeln!(
            w,
            "{FIELD_MAGIC} {FIELD_VERSION} n={} N={} t={:.17e}",
            snap.constituents.len(),
            snap.grid_size,
            snap.t
        )?;
        for c in &snap.constituents {
            for arr in [&c.rho, &c.vx, &c.vy, &c.pressure] {
                for v in arr.iter() {
                    w.write_all(&v.to_le_bytes())?;
                }
            }
        }
        w.flush()
    };
    body().map_err(io_err(path))
}

pub fn read_fields(path: &Path) -> Result<FieldSnapshot, IoError> {
    let bad = |reason: String| IoError::MalformedField {
        path: path.to_path_buf(),
        reason,
    };
    let file = File::open(path).map_err(io_err(path))?;
    let mut r = BufReader::new(file);
    let mut header = String::new();
    r.read_line(&mut header).map_err(io_err(path))?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 5 || parts[0] != FIELD_MAGIC || parts[1] != FIELD_VERSION {
        return Err(bad(format!("unrecognized header {:?}", header.trim_end())));
    }
    let value = |key: &str, s: &str| -> Result<String, IoError> {
        s.strip_prefix(key)
            .map(str::to_string)
            .ok_or_else(|| bad(format!("expected {key}..., found {s}")))
    };
    let n: usize = value("n=", parts[2])?
        .parse()
        .map_err(|e| bad(format!("n: {e}")))?;
    let grid_size: usize = value("N=", parts[3])?
        .parse()
        .map_err(|e| bad(format!("N: {e}")))?;
    let t: f64 = value("t=", parts[4])?
        .parse()
        .map_err(|e| bad(format!("t: {e}")))?;
    let len = grid_size * grid_size;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes).map_err(io_err(path))?;
    if bytes.len() != n * 4 * len * 8 {
        return Err(bad(format!(
            "payload has {} bytes, expected {}",
            bytes.len(),
            n * 4 * len * 8
        )));
    }
    let mut values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")));
    let mut take = || values.by_ref().take(len).collect::<Vec<f64>>();
    let constituents = (0..n)
        .map(|_| ConstituentFields {
            rho: take(),
            vx: take(),
            vy: take(),
            pressure: take(),
        })
        .collect();
    Ok(FieldSnapshot {
        grid_size,
        t,
        constituents,
    })
}

/// One line of the summary table.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub check: String,
    pub value: String,
    /// `None` for informational rows.
    pub pass: Option<bool>,
}

impl SummaryRow {
    pub fn check(check: impl Into<String>, value: impl Into<String>, pass: bool) -> Self {
        Self {
            check: check.into(),
            value: value.into(),
            pass: Some(pass),
        }
    }

    pub fn info(check: impl Into<String>, value: impl Into<String>) -> Self {
        Self {
            check: check.into(),
            value: value.into(),
            pass: None,
        }
    }
}

/// Aligned text table with a PASS/FAIL/- column.
pub fn render_summary(title: &str, rows: &[SummaryRow]) -> String {
    let w0 = rows.iter().map(|r| r.check.len()).max().unwrap_or(0).max(5);
    let w1 = rows.iter().map(|r| r.value.len()).max().unwrap_or(0).max(5);
    let mut out = format!("{title}\n");
    out.push_str(&format!("{:<w0$}  {:<w1$}  result\n", "check", "value"));
    out.push_str(&format!("{}\n", "-".repeat(w0 + w1 + 10)));
    for r in rows {
        let verdict = match r.pass {
            Some(true) => "PASS",
            Some(false) => "FAIL",
            None => "-",
        };
        out.push_str(&format!("{:<w0$}  {:<w1$}  {verdict}\n", r.check, r.value));
    }
    out
}

pub fn write_summary(path: &Path, title: &str, rows: &[SummaryRow]) -> Result<(), IoError> {
    std::fs::write(path, render_summary(title, rows)).map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{ModeRef, Parity, ScalarGrid};
    use crate::linalg::SquareMatrix;
    use crate::mixture::{validate_initial_data, validate_params};

    fn setup() -> (
        SimState<f64>,
        MixtureParams<f64>,
        ForcingSpec<f64>,
        SpectralBasis<f64>,
    ) {
        let basis = SpectralBasis::build(8, 2).unwrap();
        let params = validate_params(
            SquareMatrix::identity(1),
            SquareMatrix::identity(1),
            SquareMatrix::zeros(1),
        )
        .unwrap();
        let rho = vec![ScalarGrid::from_fn(8, |x: f64, _| 1.5 + 0.5 * x.cos())];
        let v0 = vec![vec![(ModeRef::new(1, 0, Parity::Cos), 0.7)]];
        let data = validate_initial_data(rho, &v0, &basis).unwrap();
        (
            SimState::from_initial(&data).unwrap(),
            params,
            ForcingSpec::zero(1),
            basis,
        )
    }

    #[test]
    fn field_files_round_trip() {
        let (state, params, forcing, basis) = setup();
        let snap = FieldSnapshot::capture(&state, &params, &forcing, &basis).unwrap();
        assert_eq!(snap.constituents[0].rho.len(), 64);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(field_file_name(3));
        write_fields(&path, &snap).unwrap();
        assert_eq!(read_fields(&path).unwrap(), snap);
        let size = std::fs::metadata(&path).unwrap().len() as usize;
        let header = std::fs::read(&path)
            .unwrap()
            .iter()
            .position(|&b| b == b'\n')
            .unwrap()
            + 1;
        assert_eq!(size - header, 4 * 64 * 8);
    }

    #[test]
    fn truncated_field_file_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.dat");
        std::fs::write(&path, b"KVMIX-FIELD v1 n=1 N=2 t=0\n\x00\x01").unwrap();
        assert!(matches!(
            read_fields(&path),
            Err(IoError::MalformedField { .. })
        ));
        std::fs::write(&path, b"something else\n").unwrap();
        assert!(matches!(
            read_fields(&path),
            Err(IoError::MalformedField { .. })
        ));
    }

    #[test]
    fn csv_has_header_and_full_precision() {
        let (state, params, forcing, basis) = setup();
        let rec =
            crate::diagnostics::compute_record::<f64>(&state, None, &params, &forcing, &basis, 4.0)
                .unwrap();
        let csv = diagnostics_csv(std::slice::from_ref(&rec));
        let mut lines = csv.lines();
        let header: Vec<&str> = lines.next().unwrap().split(',').collect();
        let row: Vec<f64> = lines
            .next()
            .unwrap()
            .split(',')
            .map(|s| s.parse().unwrap())
            .collect();
        assert_eq!(header.len(), row.len());
        assert_eq!(row, rec.values());
    }

    #[test]
    fn summary_table_marks_rows() {
        let s = render_summary(
            "t",
            &[
                SummaryRow::check("a", "1", true),
                SummaryRow::check("bb", "2", false),
                SummaryRow::info("c", "3"),
            ],
        );
        assert!(s.contains("PASS") && s.contains("FAIL"));
        assert_eq!(s.lines().count(), 6);
    }
}
