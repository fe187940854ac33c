//! CSV and JSON artifacts. CSV files are comma separated with a mandatory
//! header row, LF line endings and full round-trip precision.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pde::{FluxLedger, PdeState, SpatialGrid, TimeControls};
use crate::profile::{ProfileSolution, ProfileTolerances};
use crate::similarity::SimilarityFrame;

pub const PROFILE_CSV: &str = "profile.csv";
pub const PROFILE_JSON: &str = "profile.json";
pub const PDE_RUN_JSON: &str = "pde_run.json";
pub const DISTANCES_CSV: &str = "distances.csv";
pub const SANDWICH_JSON: &str = "sandwich.json";
pub const PROPERTIES_JSON: &str = "properties.json";

pub const PROFILE_HEADER: [&str; 3] = ["zeta", "phi", "dphi"];
pub const SNAPSHOT_HEADER: [&str; 2] = ["x", "u"];
pub const FRAME_HEADER: [&str; 2] = ["zeta", "F"];
pub const DISTANCES_HEADER: [&str; 2] = ["t", "sup_distance"];

fn csv_error(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Parse(format!("{}: {e}", path.display()))
}

/// `1.000000e-1` style, used in file names.
pub fn time_label(t: f64) -> String {
    format!("{t:.6e}")
}

pub fn snapshot_file_name(t: f64) -> String {
    format!("snap_t{}.csv", time_label(t))
}

pub fn frame_file_name(t: f64) -> String {
    format!("frame_t{}.csv", time_label(t))
}

pub fn write_csv<const N: usize>(
    path: &Path,
    header: [&str; N],
    rows: impl IntoIterator<Item = [f64; N]>,
) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for row in rows {
        w.write_record(row.iter().map(|v| format!("{v:.16e}")))
            .map_err(|e| csv_error(path, e))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a numeric CSV whose header must equal `header` exactly.
pub fn read_csv<const N: usize>(path: &Path, header: [&str; N]) -> Result<Vec<[f64; N]>> {
    if !path.exists() {
        return Err(Error::Io(format!("missing file {}", path.display())));
    }
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let found = r.headers().map_err(|e| csv_error(path, e))?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(csv_error(
            path,
            format!(
                "header {:?}, expected {header:?}",
                found.iter().collect::<Vec<_>>()
            ),
        ));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let mut row = [0.0; N];
        for (slot, field) in row.iter_mut().zip(rec.iter()) {
            *slot = field
                .trim()
                .parse()
                .map_err(|e| csv_error(path, format!("{field:?}: {e}")))?;
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Parse(e.to_string()))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text =
        fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| csv_error(path, e))
}

/// Sidecar of `profile.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileMeta {
    pub p: f64,
    /// Left amplitude `A` in `1 - phi ~ A e^(2(p+1)/(p-1) zeta)`.
    pub amplitude: f64,
    pub max_residual: f64,
    pub nodes: usize,
    pub tolerances: ProfileTolerances,
}

pub fn write_profile(dir: &Path, sol: &ProfileSolution) -> Result<()> {
    let rows = (0..sol.phi().len()).map(|i| [sol.zeta_grid()[i], sol.phi()[i], sol.dphi()[i]]);
    write_csv(&dir.join(PROFILE_CSV), PROFILE_HEADER, rows)?;
    write_json(
        &dir.join(PROFILE_JSON),
        &ProfileMeta {
            p: sol.params.p(),
            amplitude: sol.shooting_amplitude,
            max_residual: sol.max_residual,
            nodes: sol.phi().len(),
            tolerances: sol.tolerances,
        },
    )
}

/// Run metadata written next to the snapshot files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdeRunMeta {
    pub p: f64,
    pub alpha: f64,
    #[serde(rename = "L")]
    pub length: f64,
    pub n: usize,
    /// Initial step `min(c_dt dx^2, dt_max)`; later steps follow `controls`.
    pub dt: f64,
    pub t_end: f64,
    pub snapshot_times: Vec<f64>,
    pub controls: TimeControls,
}

pub fn write_snapshot(dir: &Path, state: &PdeState) -> Result<PathBuf> {
    let path = dir.join(snapshot_file_name(state.t));
    let rows = state
        .u
        .iter()
        .enumerate()
        .map(|(i, &u)| [state.grid.x(i), u]);
    write_csv(&path, SNAPSHOT_HEADER, rows)?;
    Ok(path)
}

/// Reads `snap_t<t>.csv` back into a state on a uniform grid starting at 0.
/// The flux ledger is not stored and comes back zeroed.
pub fn read_snapshot(dir: &Path, t: f64) -> Result<PdeState> {
    let path = dir.join(snapshot_file_name(t));
    let rows = read_csv(&path, SNAPSHOT_HEADER)?;
    let n = rows.len();
    if n < 2 || rows[0][0] != 0.0 {
        return Err(csv_error(
            &path,
            "snapshot must start at x = 0 with at least two rows",
        ));
    }
    let grid = SpatialGrid::new(rows[n - 1][0], n)?;
    let worst = rows
        .iter()
        .enumerate()
        .map(|(i, r)| (r[0] - grid.x(i)).abs())
        .fold(0.0, f64::max);
    if worst > 1e-9 * grid.length() {
        return Err(csv_error(&path, "x column is not a uniform grid"));
    }
    Ok(PdeState {
        grid,
        u: rows.iter().map(|r| r[1]).collect(),
        t,
        ledger: FluxLedger::default(),
    })
}

pub fn write_frame(dir: &Path, frame: &SimilarityFrame) -> Result<PathBuf> {
    let path = dir.join(frame_file_name(frame.t));
    let rows = frame.zeta.iter().zip(&frame.f).map(|(&z, &f)| [z, f]);
    write_csv(&path, FRAME_HEADER, rows)?;
    Ok(path)
}

pub fn read_frame(dir: &Path, t: f64) -> Result<SimilarityFrame> {
    let rows = read_csv(&dir.join(frame_file_name(t)), FRAME_HEADER)?;
    Ok(SimilarityFrame {
        t,
        zeta: rows.iter().map(|r| r[0]).collect(),
        f: rows.iter().map(|r| r[1]).collect(),
    })
}
