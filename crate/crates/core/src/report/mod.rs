//! Command execution and persistence of profiles, minimizers, sweeps and
//! verification reports.

pub mod config;
pub mod plot;
pub mod verify;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::asymptotics::{run_sweep, ScalingReport};
use crate::error::{Error, Result};
use crate::grid::{FieldRecord, RadialField, RadialGrid};
use crate::minimizer::{gfdn_minimize, lagrange_multiplier, MinimizerSummary, Multiplier};
use crate::params::{epsilon_of, ProblemParams};
use crate::profile::{cross_validate, CrossValidation, ProfileHeader};

use config::{Command, Format, RunConfig};
use verify::VerifyReport;

pub const VERSION: &str = concat!("gpsing ", env!("CARGO_PKG_VERSION"));

/// `#`-prefixed lines carrying the version and the resolved config.
pub fn comment_header(cfg: &RunConfig) -> Result<String> {
    Ok(format!("# {VERSION}\n# config: {}\n", serde_json::to_string(cfg)?))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileDocument {
    pub version: String,
    pub config: RunConfig,
    pub header: ProfileHeader,
    pub cross_validation: CrossValidation,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profile: Option<FieldRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MinimizeDocument {
    pub version: String,
    pub config: RunConfig,
    pub result: MinimizerSummary,
    pub multiplier: Multiplier,
    /// Radius of the solve grid in original coordinates.
    pub solve_rmax: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<FieldRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepDocument {
    pub version: String,
    pub config: RunConfig,
    pub report: ScalingReport,
    /// `w/√a*` on the profile grid.
    pub limit_profile: FieldRecord,
}

impl SweepDocument {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// What a command produced and whether it counts as success.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub summary: String,
    /// Some sweep rows failed to converge.
    pub solver_failed: bool,
    /// A verification check failed.
    pub verify_failed: bool,
}

fn write(path: PathBuf, text: &str, files: &mut Vec<PathBuf>) -> Result<()> {
    std::fs::write(&path, text)?;
    files.push(path);
    Ok(())
}

fn two_columns(field: &RadialField, sep: &str, head: &str) -> String {
    let mut s = String::with_capacity(field.values().len() * 48 + head.len());
    s.push_str(head);
    for (r, v) in field.grid().r().iter().zip(field.values()) {
        s.push_str(&format!("{r:e}{sep}{v:e}\n"));
    }
    s
}

/// Writes `field` as `{stem}.dat` or `{stem}.csv` after a comment header.
fn write_field(
    cfg: &RunConfig,
    field: &RadialField,
    stem: &str,
    value_name: &str,
    files: &mut Vec<PathBuf>,
) -> Result<()> {
    let header = comment_header(cfg)?;
    match cfg.format {
        Format::Plain => write(
            cfg.out_dir.join(format!("{stem}.dat")),
            &two_columns(field, " ", &header),
            files,
        ),
        Format::Csv => write(
            cfg.out_dir.join(format!("{stem}.csv")),
            &two_columns(field, ",", &format!("{header}r,{value_name}\n")),
            files,
        ),
        Format::Json => Ok(()),
    }
}

pub fn run_command(cfg: &RunConfig) -> Result<Outcome> {
    std::fs::create_dir_all(&cfg.out_dir)?;
    let mut files = Vec::new();
    write(cfg.out_dir.join("config.resolved.toml"), &cfg.to_toml()?, &mut files)?;
    let mut out = match cfg.command {
        Command::Wprofile => wprofile(cfg)?,
        Command::Minimize => minimize(cfg)?,
        Command::Sweep => sweep(cfg)?,
        Command::Verify => verify(cfg)?,
        Command::Plotdata => plotdata(cfg)?,
    };
    files.append(&mut out.files);
    out.files = files;
    Ok(out)
}

fn grid_of(cfg: &RunConfig) -> Result<Arc<RadialGrid>> {
    Ok(Arc::new(RadialGrid::new(cfg.grid)?))
}

fn wprofile(cfg: &RunConfig) -> Result<Outcome> {
    let (w, cv) = cross_validate(&cfg.exponents(), grid_of(cfg)?, &cfg.flow_config())?;
    let mut files = Vec::new();
    write_field(cfg, &w.profile, "wprofile", "w", &mut files)?;
    let doc = ProfileDocument {
        version: VERSION.into(),
        config: cfg.clone(),
        header: w.header(),
        cross_validation: cv,
        profile: (cfg.format == Format::Json).then(|| w.profile.to_record()),
    };
    write(
        cfg.out_dir.join("wprofile.json"),
        &serde_json::to_string_pretty(&doc)?,
        &mut files,
    )?;
    Ok(Outcome {
        files,
        summary: format!(
            "a* = {:.12e}, w(0) = {:.12e}, pohozaev residuals = ({:.3e}, {:.3e}), flow/shooting a* difference = {:.3e}",
            w.a_star, w.w0, w.pohozaev_res.0, w.pohozaev_res.1, cv.a_star_rel
        ),
        solver_failed: false,
        verify_failed: false,
    })
}

fn minimize(cfg: &RunConfig) -> Result<Outcome> {
    let exps = cfg.exponents();
    let m = cfg.m.ok_or_else(|| Error::Usage("minimize needs --M".into()))?;
    let params = ProblemParams::new(exps, m)?;
    let base = grid_of(cfg)?;
    let w = crate::profile::solve_w_shooting(&exps, base.clone(), None)?;
    let eps = epsilon_of(&params, w.a_star)?;
    let grid = Arc::new(base.scaled(eps)?);
    let res = gfdn_minimize(&params, &cfg.potential(), grid.clone(), &cfg.flow_config(), Some(&w))?;
    let mut files = Vec::new();
    write_field(cfg, &res.u, "minimizer", "u", &mut files)?;
    let doc = MinimizeDocument {
        version: VERSION.into(),
        config: cfg.clone(),
        result: res.summary(),
        multiplier: lagrange_multiplier(&res),
        solve_rmax: grid.rmax(),
        field: (cfg.format == Format::Json).then(|| res.u.to_record()),
    };
    write(
        cfg.out_dir.join("minimize.json"),
        &serde_json::to_string_pretty(&doc)?,
        &mut files,
    )?;
    Ok(Outcome {
        files,
        summary: format!(
            "I(M) = {:.12e}, mu = {:.12e}, iterations = {}, residual = {:.3e}",
            res.energy.total, res.mu, res.iters, res.el_residual
        ),
        solver_failed: false,
        verify_failed: false,
    })
}

/// Runs the configured sweep and returns its persisted form.
pub fn sweep_document(cfg: &RunConfig) -> Result<SweepDocument> {
    let w = crate::profile::solve_w_shooting(&cfg.exponents(), grid_of(cfg)?, None)?;
    let report = run_sweep(
        &w,
        &cfg.potential(),
        &cfg.m_list,
        &cfg.flow_config(),
        cfg.execution(),
        true,
    )?;
    Ok(SweepDocument {
        version: VERSION.into(),
        config: cfg.clone(),
        report,
        limit_profile: w.normalized().to_record(),
    })
}

fn sweep(cfg: &RunConfig) -> Result<Outcome> {
    let doc = sweep_document(cfg)?;
    let mut files = Vec::new();
    if cfg.format != Format::Json {
        let text = format!("{}{}", comment_header(cfg)?, doc.report.to_csv()?);
        let name = if cfg.format == Format::Csv { "sweep.csv" } else { "sweep.dat" };
        write(cfg.out_dir.join(name), &text, &mut files)?;
    }
    write(
        cfg.out_dir.join("sweep.json"),
        &serde_json::to_string_pretty(&doc)?,
        &mut files,
    )?;
    let failed = doc.report.rows.iter().filter(|r| !r.converged).count();
    let mut summary = String::new();
    for r in &doc.report.rows {
        summary.push_str(&format!(
            "M = {:e}: ratio = {:.8e}, trap_mass = {:.3e}, eps^2 mu = {:.8e}, sup_dist = {:.3e}, converged = {}\n",
            r.m, r.ratio, r.trap_mass, r.mu_eps2, r.sup_dist, r.converged
        ));
    }
    Ok(Outcome {
        files,
        summary: summary.trim_end().into(),
        solver_failed: failed > 0,
        verify_failed: false,
    })
}

pub fn verify_report_json(rep: &VerifyReport) -> Result<String> {
    Ok(serde_json::to_string_pretty(rep)?)
}

fn verify(cfg: &RunConfig) -> Result<Outcome> {
    let rep = verify::verify_suites(cfg);
    let mut files = Vec::new();
    write(cfg.out_dir.join("verify.json"), &verify_report_json(&rep)?, &mut files)?;
    let mut summary = String::new();
    for s in &rep.suites {
        summary.push_str(&format!("{}: {}\n", s.name, if s.passed { "pass" } else { "FAIL" }));
        for c in &s.checks {
            summary.push_str(&format!(
                "  [{}] {} = {:e} ({})\n",
                if c.passed { "ok" } else { "x" },
                c.name,
                c.value,
                c.bound
            ));
        }
        if let Some(e) = &s.error {
            summary.push_str(&format!("  error: {e}\n"));
        }
    }
    Ok(Outcome {
        files,
        summary: summary.trim_end().into(),
        solver_failed: false,
        verify_failed: !rep.passed,
    })
}

fn plotdata(cfg: &RunConfig) -> Result<Outcome> {
    let input = cfg
        .input
        .clone()
        .unwrap_or_else(|| cfg.out_dir.join("sweep.json"));
    let doc = SweepDocument::load(&input)?;
    let kinds: Vec<&str> = if cfg.kinds.iter().any(|k| k == "all") {
        plot::KINDS.to_vec()
    } else {
        cfg.kinds.iter().map(String::as_str).collect()
    };
    let files = plot::emit_plot_data(&doc, &kinds, &cfg.out_dir)?;
    Ok(Outcome {
        summary: format!("wrote {} series from {}", files.len(), input.display()),
        files,
        solver_failed: false,
        verify_failed: false,
    })
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_REGIME: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::RegimeViolation { .. } | Error::NonpositiveAStar(_) => EXIT_REGIME,
        Error::Usage(_)
        | Error::BadGridSpec(_)
        | Error::WeightNotIntegrable { .. }
        | Error::Io(_)
        | Error::Serde(_) => EXIT_USAGE,
        _ => EXIT_SOLVER,
    }
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.verify_failed {
            EXIT_VERIFY
        } else if self.solver_failed {
            EXIT_SOLVER
        } else {
            EXIT_OK
        }
    }
}
