//! Fixed-format CSV writers and atomic file output.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use lemnilab_core::moments::LengthSample;
use lemnilab_core::LevelSet;

use crate::error::{CliError, CliResult};

pub const LENGTH_HEADER: &str = "t,length,phi,method,err_estimate";

/// 17 significant digits, identical across runs and platforms.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub fn lengths_csv(rows: &[LengthSample]) -> String {
    let mut out = String::from(LENGTH_HEADER);
    out.push('\n');
    for r in rows {
        let phi = r.phi.map(num).unwrap_or_else(|| "nan".into());
        let _ = writeln!(out, "{},{},{},{},{}", num(r.t), num(r.length), phi, r.method.as_str(), num(r.err_estimate));
    }
    out
}

pub fn atoms_csv(atoms: &[(f64, f64)]) -> String {
    let mut out = String::from("x,w\n");
    for (x, w) in atoms {
        let _ = writeln!(out, "{},{}", num(*x), num(*w));
    }
    out
}

/// Rows `t,component,theta,re_z,im_z` for every traced sample.
pub fn samples_csv(sets: &[LevelSet]) -> String {
    let mut out = String::from("t,component,theta,re_z,im_z\n");
    for set in sets {
        for (i, comp) in set.components.iter().enumerate() {
            for (theta, z) in &comp.samples {
                let _ = writeln!(out, "{},{i},{},{},{}", num(set.t), num(*theta), num(z.re), num(z.im));
            }
        }
    }
    out
}

/// Writes `contents` to a sibling temporary file and renames it into place,
/// so readers never observe a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> CliResult<()> {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("output");
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    let shown = path.display().to_string();
    fs::write(&tmp, contents).map_err(|e| CliError::io(&shown, e))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        CliError::io(&shown, e)
    })
}

/// Writes several files only after all of them have been rendered.
pub fn write_all(dir: &Path, files: &[(&str, String)]) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir.display().to_string(), e))?;
    for (name, contents) in files {
        write_atomic(&dir.join(name), contents)?;
    }
    Ok(())
}
