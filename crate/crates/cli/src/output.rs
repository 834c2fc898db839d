//! CSV and JSON emission. Every file is written to a temporary sibling and
//! renamed into place.

use std::io::Write;
use std::path::{Path, PathBuf};

use gaussian_tcl::moments::MomentTrajectory;
use serde::Serialize;

use crate::error::{CliError, CliResult};

pub const TRAJECTORY_HEADER_VERSION: &str = "# gtcl-trajectory v1";
pub const TRAJECTORY_COLUMNS: &str =
    "t,re_a,im_a,n,re_a2,im_a2,re_c00,im_c00,re_c01,im_c01,re_c11,im_c11,im_n,herm_drift,min_uncertainty_eig";
pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// 17 significant digits, fixed exponent form.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| CliError::io(&dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Single-mode trajectory as CSV.
pub fn trajectory_csv(traj: &MomentTrajectory) -> String {
    let mut out = String::new();
    out.push_str(TRAJECTORY_HEADER_VERSION);
    out.push('\n');
    out.push_str(TRAJECTORY_COLUMNS);
    out.push('\n');
    for s in &traj.samples {
        let a = s.mean_a(0);
        let n = s.number(0);
        let a2 = s.a_squared(0);
        let row = [
            s.t,
            a.re,
            a.im,
            n.re,
            a2.re,
            a2.im,
            s.c[(0, 0)].re,
            s.c[(0, 0)].im,
            s.c[(0, 1)].re,
            s.c[(0, 1)].im,
            s.c[(1, 1)].re,
            s.c[(1, 1)].im,
            n.im,
            s.diagnostics.herm_drift,
            s.diagnostics.min_uncertainty_eig,
        ];
        let cells: Vec<String> = row.iter().map(|&x| fmt_f64(x)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt_f64(1.0), "1.0000000000000000e0");
        let x = 0.1 + 0.2;
        assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        assert_eq!(TRAJECTORY_COLUMNS.split(',').count(), 15);
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
