//! Plain-text plot series extracted from a saved sweep.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::asymptotics::DECAY_WINDOW;
use crate::error::{Error, Result};
use crate::grid::RadialField;
use crate::report::{comment_header, SweepDocument};

pub const KINDS: [&str; 4] = ["profile", "ratio", "trap_mass", "decay"];

/// Series text for one kind, without the comment header.
pub fn series(doc: &SweepDocument, kind: &str) -> Result<String> {
    let rep = &doc.report;
    let mut s = String::new();
    let last_profile = || -> Result<RadialField> {
        rep.rows
            .iter()
            .rev()
            .filter(|r| r.converged)
            .find_map(|r| r.profile_field())
            .ok_or(Error::ProfileMissing)
    };
    match kind {
        "profile" => {
            let wk = last_profile()?;
            let lim = RadialField::from_record(&doc.limit_profile)?;
            if !wk.same_grid(&lim) {
                return Err(Error::GridMismatch);
            }
            s.push_str("# r w_k w/sqrt(a*)\n");
            for ((r, a), b) in wk.grid().r().iter().zip(wk.values()).zip(lim.values()) {
                writeln!(s, "{r:e} {a:e} {b:e}").unwrap();
            }
        }
        "ratio" => {
            s.push_str("# M ratio -lambda0\n");
            for r in rep.converged_rows() {
                writeln!(s, "{:e} {:e} {:e}", r.m, r.ratio, -rep.lambda0).unwrap();
            }
        }
        "trap_mass" => {
            s.push_str("# M trap_mass\n");
            for r in rep.converged_rows() {
                writeln!(s, "{:e} {:e}", r.m, r.trap_mass).unwrap();
            }
        }
        "decay" => {
            let wk = last_profile()?;
            let rmax = wk.grid().rmax();
            let (lo, hi) = (DECAY_WINDOW.0 * rmax, DECAY_WINDOW.1 * rmax);
            s.push_str("# r -ln(w_k)\n");
            for (r, v) in wk.grid().r().iter().zip(wk.values()) {
                if *r >= lo && *r <= hi && *v > 0.0 {
                    writeln!(s, "{r:e} {:e}", -v.ln()).unwrap();
                }
            }
        }
        other => return Err(Error::Usage(format!("unknown plot kind '{other}'"))),
    }
    Ok(s)
}

/// Writes `{kind}_{hash}.dat` for each kind into `out_dir`.
pub fn emit_plot_data(doc: &SweepDocument, kinds: &[&str], out_dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    let hash = doc.config.params_hash();
    let header = comment_header(&doc.config)?;
    let mut files = Vec::new();
    for kind in kinds {
        let body = series(doc, kind)?;
        let path = out_dir.join(format!("{kind}_{hash}.dat"));
        std::fs::write(&path, format!("{header}{body}"))?;
        files.push(path);
    }
    Ok(files)
}
