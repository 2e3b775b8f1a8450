//! Named verification suites with measured values and tolerances.

use std::cell::OnceCell;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{decreasing, run_sweep, uniform_bounds_check, ScalingReport};
use crate::error::{Error, Result};
use crate::grid::{RadialField, RadialGrid};
use crate::minimizer::{gfdn_minimize, test_function_energy};
use crate::params::{tilde_i_closed, Exponents, Potential, ProblemParams};
use crate::profile::{cross_validate, gn_ratio, solve_w_shooting, GroundStateW};
use crate::report::config::RunConfig;

pub const SUITES: [&str; 8] = [
    "gn",
    "pohozaev",
    "crossval",
    "scaling",
    "sandwich",
    "concentration",
    "decay",
    "multiplier",
];

pub const GN_FIELDS: usize = 100;
pub const TRAP_FREE_MASSES: [f64; 3] = [1.0, 10.0, 100.0];
pub const TAU_CHECKS: [f64; 4] = [15.0, 20.0, 50.0, 100.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// Human-readable acceptance condition on `value`.
    pub bound: String,
    pub passed: bool,
}

fn at_most(name: &str, value: f64, tol: f64) -> Check {
    Check {
        name: name.into(),
        value,
        bound: format!("<= {tol:e}"),
        passed: value <= tol,
    }
}

fn at_least(name: &str, value: f64, tol: f64) -> Check {
    Check {
        name: name.into(),
        value,
        bound: format!(">= {tol:e}"),
        passed: value >= tol,
    }
}

fn within(name: &str, value: f64, lo: f64, hi: f64) -> Check {
    Check {
        name: name.into(),
        value,
        bound: format!("in [{lo}, {hi}]"),
        passed: (lo..=hi).contains(&value),
    }
}

fn holds(name: &str, ok: bool) -> Check {
    Check {
        name: name.into(),
        value: if ok { 1.0 } else { 0.0 },
        bound: "true".into(),
        passed: ok,
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub name: String,
    pub passed: bool,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub version: String,
    pub config: RunConfig,
    pub seed: u64,
    pub suites: Vec<SuiteResult>,
    pub passed: bool,
}

/// Runs suites against one configuration, sharing the profile and the
/// sweep between them.
pub struct Verifier<'a> {
    cfg: &'a RunConfig,
    exps: Exponents,
    w: OnceCell<GroundStateW>,
    sweep: OnceCell<ScalingReport>,
}

impl<'a> Verifier<'a> {
    pub fn new(cfg: &'a RunConfig) -> Self {
        Self {
            cfg,
            exps: cfg.exponents(),
            w: OnceCell::new(),
            sweep: OnceCell::new(),
        }
    }

    fn grid(&self) -> Result<Arc<RadialGrid>> {
        Ok(Arc::new(RadialGrid::new(self.cfg.grid)?))
    }

    pub fn w(&self) -> Result<&GroundStateW> {
        if let Some(w) = self.w.get() {
            return Ok(w);
        }
        let w = solve_w_shooting(&self.exps, self.grid()?, None)?;
        Ok(self.w.get_or_init(|| w))
    }

    pub fn sweep(&self) -> Result<&ScalingReport> {
        if let Some(s) = self.sweep.get() {
            return Ok(s);
        }
        let rep = run_sweep(
            self.w()?,
            &self.cfg.potential(),
            &self.cfg.m_list,
            &self.cfg.flow_config(),
            self.cfg.execution(),
            false,
        )?;
        Ok(self.sweep.get_or_init(|| rep))
    }

    fn trapped(&self) -> bool {
        !self.cfg.potential().is_zero()
    }

    pub fn run(&self, name: &str) -> SuiteResult {
        let out = match name {
            "gn" => self.gn(),
            "pohozaev" => self.pohozaev(),
            "crossval" => self.crossval(),
            "scaling" => self.scaling(),
            "sandwich" => self.sandwich(),
            "concentration" => self.concentration(),
            "decay" => self.decay(),
            "multiplier" => self.multiplier(),
            other => Err(Error::Usage(format!("unknown suite '{other}'"))),
        };
        match out {
            Ok(checks) => SuiteResult {
                name: name.into(),
                passed: !checks.is_empty() && checks.iter().all(|c| c.passed),
                checks,
                error: None,
            },
            Err(e) => SuiteResult {
                name: name.into(),
                passed: false,
                checks: Vec::new(),
                error: Some(e.to_string()),
            },
        }
    }

    fn gn(&self) -> Result<Vec<Check>> {
        let w = self.w()?;
        let c = self.exps.c_gn(w.a_star);
        let grid = w.profile.grid().clone();
        let fields = gn_fields(&grid, self.cfg.seed, GN_FIELDS)?;
        let mut worst = f64::NEG_INFINITY;
        for f in &fields {
            worst = worst.max(gn_ratio(f, &self.exps, c)?);
        }
        Ok(vec![
            at_most("max gn_ratio over random fields", worst, 1.0 + 1e-6),
            within("gn_ratio(w)", gn_ratio(&w.profile, &self.exps, c)?, 0.999, 1.001),
        ])
    }

    fn pohozaev(&self) -> Result<Vec<Check>> {
        let w = self.w()?;
        Ok(vec![
            at_most("kinetic vs singular residual", w.pohozaev_res.0, 1e-4),
            at_most("kinetic vs mass residual", w.pohozaev_res.1, 1e-4),
        ])
    }

    fn crossval(&self) -> Result<Vec<Check>> {
        let (_, cv) = cross_validate(&self.exps, self.grid()?, &self.cfg.flow_config())?;
        Ok(vec![
            at_most("a* relative difference", cv.a_star_rel, 1e-3),
            at_most("sup distance / w(0)", cv.sup_rel, 1e-3),
        ])
    }

    fn scaling(&self) -> Result<Vec<Check>> {
        let w = self.w()?;
        let flow = self.cfg.flow_config();
        let mut checks = Vec::new();
        for &m in &TRAP_FREE_MASSES {
            let params = ProblemParams::new(self.exps, m)?;
            let eps = crate::params::epsilon_of(&params, w.a_star)?;
            let grid = Arc::new(w.profile.grid().scaled(eps)?);
            let res = gfdn_minimize(&params, &Potential::Zero, grid, &flow, Some(w))?;
            let closed = tilde_i_closed(&params, w.a_star)?;
            checks.push(at_most(
                &format!("trap-free energy law at M={m}"),
                rel(res.energy.total, closed),
                1e-3,
            ));
            if m == 1.0 {
                checks.push(at_most(
                    "multiplier of the M=1 trap-free minimizer",
                    rel(res.mu, self.exps.tilde_mu_one(w.a_star)),
                    1e-3,
                ));
            }
        }
        if self.trapped() {
            let rep = self.sweep()?;
            let errs: Vec<f64> = rep
                .rows
                .iter()
                .map(|r| (r.ratio + rep.lambda0).abs() / rep.lambda0)
                .collect();
            checks.push(holds("all sweep rows converged", rep.all_converged()));
            checks.push(at_most(
                "|ratio + lambda0| / lambda0 at largest M",
                *errs.last().unwrap(),
                0.02,
            ));
            checks.push(holds("ratio error decreasing across sweep", decreasing(&errs)));
        } else {
            let rep = self.sweep()?;
            let worst = rep
                .rows
                .iter()
                .map(|r| (r.ratio + rep.lambda0).abs() / rep.lambda0)
                .fold(0.0, f64::max);
            checks.push(holds("all sweep rows converged", rep.all_converged()));
            checks.push(at_most("max |ratio + lambda0| / lambda0", worst, 1e-3));
        }
        Ok(checks)
    }

    fn sandwich(&self) -> Result<Vec<Check>> {
        let w = self.w()?;
        let rep = self.sweep()?;
        let mut checks = vec![holds("all sweep rows converged", rep.all_converged())];
        for r in &rep.rows {
            checks.push(holds(&format!("lower <= I(M) <= upper at M={}", r.m), r.sandwiched()));
            checks.push(holds(
                &format!("closed-form lower <= I(M) at M={}", r.m),
                r.converged && r.tilde_closed <= r.i_m,
            ));
        }
        let params = ProblemParams::new(self.exps, 1.0)?;
        for &tau in &TAU_CHECKS {
            let grid = Arc::new(w.profile.grid().scaled(1.0 / tau)?);
            let t = test_function_energy(&params, &self.cfg.potential(), grid, tau, Some(w))?;
            checks.push(within(&format!("A_tau at tau={tau}"), t.a_tau, 1.0, 1.0 + 1e-6));
        }
        Ok(checks)
    }

    fn concentration(&self) -> Result<Vec<Check>> {
        let w = self.w()?;
        let rep = self.sweep()?;
        let last = rep.rows.last().expect("nonempty sweep");
        let mut checks = vec![holds("all sweep rows converged", rep.all_converged())];
        let trap: Vec<f64> = rep.rows.iter().map(|r| r.trap_mass).collect();
        let sup: Vec<f64> = rep.rows.iter().map(|r| r.sup_dist).collect();
        let h1: Vec<f64> = rep.rows.iter().map(|r| r.h1_dist).collect();
        let peak = w.profile.max_value() / w.a_star.sqrt();
        if self.trapped() {
            checks.push(holds("trap_mass decreasing across sweep", decreasing(&trap)));
            checks.push(at_most("trap_mass at largest M", last.trap_mass, 1e-2));
            checks.push(holds("sup_dist decreasing across sweep", decreasing(&sup)));
            checks.push(holds("h1_dist decreasing across sweep", decreasing(&h1)));
            checks.push(at_most("sup_dist at largest M", last.sup_dist, 5e-2 * peak));
        } else {
            checks.push(holds("trap_mass identically zero", trap.iter().all(|&t| t == 0.0)));
            let worst = sup.iter().copied().fold(0.0, f64::max);
            checks.push(at_most("max sup_dist", worst, 1e-3 * peak));
        }
        checks.push(at_most(
            "sing_mass relative to its limit at largest M",
            rel(last.sing_mass, rep.sing_mass_limit),
            0.02,
        ));
        let bounds = uniform_bounds_check(rep)?;
        checks.push(holds("uniform bounds positive and finite", bounds.all_positive_finite));
        checks.push(at_most(
            "energy ratio relative to 4/sigma at largest M",
            rel(bounds.energy_ratio, bounds.energy_ratio_limit),
            0.02,
        ));
        Ok(checks)
    }

    fn decay(&self) -> Result<Vec<Check>> {
        let w = self.w()?;
        let fit = w
            .decay
            .ok_or_else(|| Error::NonpositiveTail(w.profile.grid().rmax()))?;
        let rep = self.sweep()?;
        let last = rep.rows.last().expect("nonempty sweep");
        Ok(vec![
            within("tail rate of w", fit.rate, 0.9, 1.1),
            at_least("fit quality for w", fit.quality, 0.99),
            at_least("tail rate of w_k at largest M", last.decay_rate, 0.5),
            at_least("fit quality for w_k at largest M", last.decay_quality, 0.99),
        ])
    }

    fn multiplier(&self) -> Result<Vec<Check>> {
        let rep = self.sweep()?;
        let errs: Vec<f64> = rep.rows.iter().map(|r| (r.mu_eps2 + 1.0).abs()).collect();
        let mut checks = vec![
            holds("all sweep rows converged", rep.all_converged()),
            holds("mu < 0 on every row", rep.rows.iter().all(|r| r.mu_eps2 < 0.0)),
            at_most("|eps^2 mu + 1| at largest M", *errs.last().unwrap(), 0.02),
        ];
        if self.trapped() {
            checks.push(holds("|eps^2 mu + 1| decreasing across sweep", decreasing(&errs)));
        }
        Ok(checks)
    }
}

/// Seeded radial test fields: sums of three positive Gaussian bumps.
pub fn gn_fields(grid: &Arc<RadialGrid>, seed: u64, count: usize) -> Result<Vec<RadialField>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let bumps: Vec<(f64, f64, f64)> = (0..3)
                .map(|_| {
                    (
                        rng.random_range(0.1..2.0),
                        rng.random_range(0.0..3.0),
                        rng.random_range(0.3..3.0),
                    )
                })
                .collect();
            RadialField::from_fn(grid.clone(), |r| {
                bumps
                    .iter()
                    .map(|(c, c0, s)| c * (-((r - c0) / s).powi(2)).exp())
                    .sum()
            })
        })
        .collect()
}

/// Expands `all` and runs the requested suites in order.
pub fn verify_suites(cfg: &RunConfig) -> VerifyReport {
    let names: Vec<&str> = if cfg.suites.iter().any(|s| s == "all") {
        SUITES.to_vec()
    } else {
        cfg.suites.iter().map(String::as_str).collect()
    };
    let v = Verifier::new(cfg);
    let suites: Vec<SuiteResult> = names.iter().map(|n| v.run(n)).collect();
    VerifyReport {
        version: crate::report::VERSION.into(),
        config: cfg.clone(),
        seed: cfg.seed,
        passed: suites.iter().all(|s| s.passed),
        suites,
    }
}
