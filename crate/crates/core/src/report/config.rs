//! Run configuration: TOML file keys merged under command-line flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::grid::GridSpec;
use crate::minimizer::FlowConfig;
use crate::params::{Exponents, Potential, ProblemParams};

pub const OUT_DIR_ENV: &str = "GPSING_OUT_DIR";
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_M_LIST: [f64; 4] = [1e1, 1e2, 1e3, 1e4];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Wprofile,
    Minimize,
    Sweep,
    Verify,
    Plotdata,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
    Plain,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "plain" => Ok(Format::Plain),
            _ => Err(Error::Usage(format!("unknown format '{s}' (csv, json, plain)"))),
        }
    }
}

/// Keys accepted in a config file; every key is optional.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(rename = "N")]
    pub n: Option<usize>,
    pub p: Option<f64>,
    pub b: Option<f64>,
    #[serde(rename = "M")]
    pub m: Option<f64>,
    #[serde(rename = "M_list")]
    pub m_list: Option<Vec<f64>>,
    pub potential: Option<String>,
    pub rmax: Option<f64>,
    pub nodes: Option<usize>,
    pub grading: Option<f64>,
    pub dt: Option<f64>,
    pub max_iters: Option<usize>,
    pub tol_energy: Option<f64>,
    pub tol_residual: Option<f64>,
    pub out_dir: Option<PathBuf>,
    pub format: Option<Format>,
    pub suites: Option<Vec<String>>,
    pub seed: Option<u64>,
    pub sequential: Option<bool>,
    pub input: Option<PathBuf>,
    pub kinds: Option<Vec<String>>,
}

impl FileConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Usage(format!("config file: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Fields set in `over` replace those in `self`.
    pub fn overlay(self, over: FileConfig) -> Self {
        Self {
            n: over.n.or(self.n),
            p: over.p.or(self.p),
            b: over.b.or(self.b),
            m: over.m.or(self.m),
            m_list: over.m_list.or(self.m_list),
            potential: over.potential.or(self.potential),
            rmax: over.rmax.or(self.rmax),
            nodes: over.nodes.or(self.nodes),
            grading: over.grading.or(self.grading),
            dt: over.dt.or(self.dt),
            max_iters: over.max_iters.or(self.max_iters),
            tol_energy: over.tol_energy.or(self.tol_energy),
            tol_residual: over.tol_residual.or(self.tol_residual),
            out_dir: over.out_dir.or(self.out_dir),
            format: over.format.or(self.format),
            suites: over.suites.or(self.suites),
            seed: over.seed.or(self.seed),
            sequential: over.sequential.or(self.sequential),
            input: over.input.or(self.input),
            kinds: over.kinds.or(self.kinds),
        }
    }
}

/// Flow settings in file-friendly form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowSettings {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    pub max_iters: usize,
    pub tol_energy: f64,
    pub tol_residual: f64,
}

impl FlowSettings {
    pub fn to_flow_config(self) -> FlowConfig {
        FlowConfig {
            dt: self.dt,
            max_iters: self.max_iters,
            tol_energy: self.tol_energy,
            tol_residual: self.tol_residual,
            ..FlowConfig::default()
        }
    }
}

/// Fully resolved configuration, echoed next to every output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    #[serde(rename = "N")]
    pub n: usize,
    pub p: f64,
    pub b: f64,
    #[serde(rename = "M", skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    #[serde(rename = "M_list")]
    pub m_list: Vec<f64>,
    pub potential: String,
    pub grid: GridSpec,
    pub flow: FlowSettings,
    pub out_dir: PathBuf,
    pub format: Format,
    pub suites: Vec<String>,
    pub seed: u64,
    pub sequential: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    pub kinds: Vec<String>,
}

impl RunConfig {
    /// Applies defaults and checks every value before any solve.
    /// `env_out` is the value of the out-dir environment variable, if set.
    pub fn resolve(command: Command, fc: FileConfig, env_out: Option<PathBuf>) -> Result<Self> {
        let n = fc.n.unwrap_or(1);
        let p = fc.p.unwrap_or(2.0);
        let b = fc.b.unwrap_or(0.5);
        let exps = Exponents::new(n, p, b)?;
        if let Some(m) = fc.m {
            ProblemParams::new(exps, m)?;
        }
        let m_list = fc.m_list.unwrap_or_else(|| DEFAULT_M_LIST.to_vec());
        for &m in &m_list {
            ProblemParams::new(exps, m)?;
        }
        if m_list.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Usage("--M-list must be strictly increasing".into()));
        }
        let potential = fc.potential.unwrap_or_else(|| "harmonic".into());
        let parsed: Potential = potential.parse()?;
        let std = GridSpec::standard(n);
        let grid = GridSpec::new(
            n,
            fc.rmax.unwrap_or(std.rmax),
            fc.nodes.unwrap_or(std.nodes),
            fc.grading.unwrap_or(std.grading),
        );
        crate::grid::RadialGrid::new(grid)?;
        let def = FlowConfig::default();
        let flow = FlowSettings {
            dt: fc.dt,
            max_iters: fc.max_iters.unwrap_or(def.max_iters),
            tol_energy: fc.tol_energy.unwrap_or(def.tol_energy),
            tol_residual: fc.tol_residual.unwrap_or(def.tol_residual),
        };
        flow.to_flow_config().validate()?;
        let suites = fc.suites.unwrap_or_else(|| vec!["all".into()]);
        for s in &suites {
            if s != "all" && !crate::report::verify::SUITES.contains(&s.as_str()) {
                return Err(Error::Usage(format!(
                    "unknown suite '{s}' (expected all or one of {})",
                    crate::report::verify::SUITES.join(", ")
                )));
            }
        }
        let kinds = fc.kinds.unwrap_or_else(|| vec!["all".into()]);
        for k in &kinds {
            if k != "all" && !crate::report::plot::KINDS.contains(&k.as_str()) {
                return Err(Error::Usage(format!(
                    "unknown plot kind '{k}' (expected all or one of {})",
                    crate::report::plot::KINDS.join(", ")
                )));
            }
        }
        if command == Command::Minimize && fc.m.is_none() {
            return Err(Error::Usage("minimize needs --M".into()));
        }
        Ok(Self {
            command,
            n,
            p,
            b,
            m: fc.m,
            m_list,
            potential: parsed.to_string(),
            grid,
            flow,
            out_dir: fc.out_dir.or(env_out).unwrap_or_else(|| PathBuf::from("out")),
            format: fc.format.unwrap_or_default(),
            suites,
            seed: fc.seed.unwrap_or(DEFAULT_SEED),
            sequential: fc.sequential.unwrap_or(false),
            input: fc.input,
            kinds,
        })
    }

    pub fn exponents(&self) -> Exponents {
        Exponents::new(self.n, self.p, self.b).expect("validated on resolve")
    }

    pub fn potential(&self) -> Potential {
        self.potential.parse().expect("validated on resolve")
    }

    pub fn execution(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        }
    }

    pub fn flow_config(&self) -> FlowConfig {
        self.flow.to_flow_config()
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Serde(e.to_string()))
    }

    /// Short stable digest of the physical parameters, for file names.
    pub fn params_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let key = format!(
            "N={};p={:e};b={:e};V={};grid={:e},{},{:e}",
            self.n, self.p, self.b, self.potential, self.grid.rmax, self.grid.nodes, self.grid.grading
        );
        let digest = Sha256::digest(key.as_bytes());
        digest.iter().take(6).map(|b| format!("{b:02x}")).collect()
    }
}
