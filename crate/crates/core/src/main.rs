use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use gpsing::report::config::{Command, FileConfig, Format, RunConfig, OUT_DIR_ENV};
use gpsing::report::{exit_code, run_command, EXIT_USAGE};

/// Minimizers of a trapped Gross-Pitaevskii energy with the singular
/// nonlinearity |x|^{-b}|u|^{p+1}, and their large-mass profile.
#[derive(Debug, Parser)]
#[command(name = "gpsing", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,

    #[command(flatten)]
    opts: Opts,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Compute the profile w and a* = ‖w‖².
    Wprofile,
    /// Minimize the trapped energy at one mass.
    Minimize,
    /// Sweep the mass and compare rescaled minimizers with w.
    Sweep,
    /// Run verification suites.
    Verify,
    /// Emit plot series from a saved sweep.
    Plotdata,
}

#[derive(Debug, Args)]
struct Opts {
    /// TOML file with default values for any of the flags below.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long = "N", global = true)]
    n: Option<usize>,
    #[arg(long, global = true)]
    p: Option<f64>,
    #[arg(long, global = true)]
    b: Option<f64>,
    #[arg(long = "M", global = true)]
    m: Option<f64>,
    /// Comma-separated increasing masses.
    #[arg(long = "M-list", value_delimiter = ',', global = true)]
    m_list: Option<Vec<f64>>,
    /// zero, harmonic, or power:gamma,s for V(r) = gamma² r^s.
    #[arg(long, global = true)]
    potential: Option<String>,
    /// Outer radius; for minimize and sweep it is measured in units of ε(M).
    #[arg(long, global = true)]
    rmax: Option<f64>,
    #[arg(long, global = true)]
    nodes: Option<usize>,
    #[arg(long, global = true)]
    grading: Option<f64>,
    /// Pseudo-time step cap of the gradient flow.
    #[arg(long, global = true)]
    dt: Option<f64>,
    #[arg(long = "max-iters", global = true)]
    max_iters: Option<usize>,
    /// Output directory (falls back to $GPSING_OUT_DIR, then ./out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    format: Option<String>,
    /// Suite names for verify (repeatable or comma-separated; default all).
    #[arg(long = "suite", value_delimiter = ',', global = true)]
    suites: Option<Vec<String>>,
    /// Seed of the random fields in the gn suite.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Run sweep rows one after another.
    #[arg(long, global = true)]
    sequential: bool,
    /// Sweep JSON read by plotdata (default <out>/sweep.json).
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// Plot kinds: profile, ratio, trap_mass, decay (default all).
    #[arg(long = "kind", value_delimiter = ',', global = true)]
    kinds: Option<Vec<String>>,
}

impl Opts {
    fn to_file_config(&self) -> gpsing::Result<FileConfig> {
        let format = self.format.as_deref().map(str::parse::<Format>).transpose()?;
        Ok(FileConfig {
            n: self.n,
            p: self.p,
            b: self.b,
            m: self.m,
            m_list: self.m_list.clone(),
            potential: self.potential.clone(),
            rmax: self.rmax,
            nodes: self.nodes,
            grading: self.grading,
            dt: self.dt,
            max_iters: self.max_iters,
            tol_energy: None,
            tol_residual: None,
            out_dir: self.out.clone(),
            format,
            suites: self.suites.clone(),
            seed: self.seed,
            sequential: self.sequential.then_some(true),
            input: self.input.clone(),
            kinds: self.kinds.clone(),
        })
    }
}

fn resolve(cli: &Cli) -> gpsing::Result<RunConfig> {
    let command = match cli.command {
        Sub::Wprofile => Command::Wprofile,
        Sub::Minimize => Command::Minimize,
        Sub::Sweep => Command::Sweep,
        Sub::Verify => Command::Verify,
        Sub::Plotdata => Command::Plotdata,
    };
    let file = match &cli.opts.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let merged = file.overlay(cli.opts.to_file_config()?);
    let env_out = std::env::var_os(OUT_DIR_ENV).map(PathBuf::from);
    RunConfig::resolve(command, merged, env_out)
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let outcome = resolve(&cli).and_then(|cfg| run_command(&cfg));
    match outcome {
        Ok(out) => {
            println!("{}", out.summary);
            for f in &out.files {
                println!("wrote {}", f.display());
            }
            out.exit_code()
        }
        Err(e) => {
            eprintln!("gpsing: {e}");
            exit_code(&e)
        }
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    std::process::exit(run());
}
