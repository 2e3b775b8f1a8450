//! Constrained minimization of the trapped energy by a normalized gradient
//! flow, energy bookkeeping, Lagrange multipliers, and the cut-off test
//! function upper bound.
//!
//! The discrete energy is the P1 finite-element energy on the radial grid:
//! kinetic term from cell difference quotients, trap and mass terms with the
//! lumped mass weights, and the singular term with product weights for
//! `r^{-b}`. Each flow step solves the backward-Euler system
//!
//! ```text
//! (W + dt (K + W V - c Wb u_n^{p-1})) u* = W u_n,    u_{n+1} = u* / ‖u*‖
//! ```
//!
//! whose matrix is a symmetric tridiagonal Stieltjes matrix whenever it is
//! positive definite, so positivity of `u` is preserved.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{RadialField, RadialGrid};
use crate::params::{epsilon_of, Potential, ProblemParams};
use crate::profile::GroundStateW;

/// Slack allowed on an energy increase before a step is rejected.
pub const DESCENT_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    /// `exp(-(r/width)²)`, normalized.
    Gaussian(f64),
    /// An explicit starting field (interpolated onto the solve grid).
    Profile(RadialField),
    /// The trap-free minimizer built from `w`, Gaussian of unit width when
    /// no profile is supplied.
    ScaledW,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowConfig {
    /// Pseudo-time step cap; `None` picks one from the initial multiplier.
    pub dt: Option<f64>,
    pub max_iters: usize,
    pub tol_energy: f64,
    pub tol_residual: f64,
    pub init: Init,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            dt: None,
            max_iters: 20_000,
            tol_energy: 1e-10,
            tol_residual: 1e-6,
            init: Init::ScaledW,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::Usage(format!("dt must be positive (got {dt})")));
            }
        }
        if self.max_iters < 1 {
            return Err(Error::Usage("max_iters must be >= 1".into()));
        }
        if !(self.tol_energy > 0.0 && self.tol_residual > 0.0) {
            return Err(Error::Usage("tolerances must be positive".into()));
        }
        Ok(())
    }

    pub fn with_init(mut self, init: Init) -> Self {
        self.init = init;
        self
    }
}

/// Energy decomposition `E = kinetic + trap - 2c/(p+1) · interaction`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyParts {
    pub kinetic: f64,
    pub trap: f64,
    /// `∫ |u|^{p+1} |x|^{-b}`
    pub interaction: f64,
    pub total: f64,
}

/// Discrete energy operator for fixed `(params, potential, grid)`.
#[derive(Debug, Clone)]
pub struct Discretization {
    grid: Arc<RadialGrid>,
    p: f64,
    coupling: f64,
    mass: Vec<f64>,
    sing: Vec<f64>,
    stiff: Vec<f64>,
    vpot: Vec<f64>,
}

impl Discretization {
    pub fn new(params: &ProblemParams, potential: &Potential, grid: Arc<RadialGrid>) -> Result<Self> {
        if grid.dim() != params.exps.n() {
            return Err(Error::Usage(format!(
                "grid dimension {} does not match N = {}",
                grid.dim(),
                params.exps.n()
            )));
        }
        let sing = grid.weights(-params.exps.b())?;
        let stiff = grid
            .cell_moments()
            .iter()
            .enumerate()
            .map(|(j, m)| m / grid.cell_width(j).powi(2))
            .collect();
        let vpot = grid.r().iter().map(|&r| potential.eval(r)).collect();
        Ok(Self {
            mass: grid.mass_weights().to_vec(),
            grid,
            p: params.exps.p(),
            coupling: params.coupling(),
            sing,
            stiff,
            vpot,
        })
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn mass(&self, u: &[f64]) -> f64 {
        self.grid.surface() * self.mass.iter().zip(u).map(|(w, x)| w * x * x).sum::<f64>()
    }

    pub fn parts(&self, u: &[f64]) -> EnergyParts {
        let s = self.grid.surface();
        let kinetic = s * self
            .stiff
            .iter()
            .enumerate()
            .map(|(j, k)| k * (u[j + 1] - u[j]).powi(2))
            .sum::<f64>();
        let trap = s * self
            .mass
            .iter()
            .zip(&self.vpot)
            .zip(u)
            .map(|((w, v), x)| w * v * x * x)
            .sum::<f64>();
        let interaction = s * self
            .sing
            .iter()
            .zip(u)
            .map(|(w, x)| w * x.abs().powf(self.p + 1.0))
            .sum::<f64>();
        let total = kinetic + trap - 2.0 * self.coupling / (self.p + 1.0) * interaction;
        EnergyParts {
            kinetic,
            trap,
            interaction,
            total,
        }
    }

    /// Rayleigh form `∫ |∇u|² + V u² - c |u|^{p+1} r^{-b}` divided by the mass.
    pub fn rayleigh(&self, u: &[f64]) -> f64 {
        let e = self.parts(u);
        (e.kinetic + e.trap - self.coupling * e.interaction) / self.mass(u)
    }

    /// `(K + W V) u - c Wb |u|^{p-1} u`, the energy gradient up to a factor `2 S_N`.
    fn apply(&self, u: &[f64]) -> Vec<f64> {
        let n = u.len();
        let mut out: Vec<f64> = (0..n)
            .map(|i| {
                self.mass[i] * self.vpot[i] * u[i]
                    - self.coupling * self.sing[i] * u[i].abs().powf(self.p - 1.0) * u[i]
            })
            .collect();
        for (j, k) in self.stiff.iter().enumerate() {
            let d = k * (u[j + 1] - u[j]);
            out[j] -= d;
            out[j + 1] += d;
        }
        out
    }

    /// Relative residual `‖H u - μ W u‖ / ‖H u‖` of the discrete
    /// Euler–Lagrange equation, both measured in the dual norm of
    /// `K + |μ| W`. The dual norm stays above roundoff on strongly graded
    /// grids, where the mass-weighted strong form does not.
    pub fn el_residual(&self, u: &[f64], mu: f64) -> f64 {
        let hu = self.apply(u);
        let res: Vec<f64> = hu
            .iter()
            .zip(&self.mass)
            .zip(u)
            .map(|((h, w), x)| h - mu * w * x)
            .collect();
        let shift = mu.abs().max(f64::MIN_POSITIVE);
        let mut diag: Vec<f64> = self.mass.iter().map(|w| shift * w).collect();
        let off: Vec<f64> = self.stiff.iter().map(|k| -k).collect();
        for (j, k) in self.stiff.iter().enumerate() {
            diag[j] += k;
            diag[j + 1] += k;
        }
        let dual = |f: &[f64]| -> f64 {
            match solve_spd_tridiagonal(&diag, &off, f) {
                Some(x) => x.iter().zip(f).map(|(a, b)| a * b).sum::<f64>().max(0.0).sqrt(),
                None => f64::NAN,
            }
        };
        let (num, den) = (dual(&res), dual(&hu));
        if den == 0.0 {
            num
        } else {
            num / den
        }
    }

    /// One backward-Euler step followed by exact renormalization. `None`
    /// when the step matrix is not positive definite.
    pub fn step(&self, u: &[f64], dt: f64) -> Option<Vec<f64>> {
        let n = u.len();
        let mut diag: Vec<f64> = (0..n)
            .map(|i| {
                self.mass[i] * (1.0 + dt * self.vpot[i])
                    - dt * self.coupling * self.sing[i] * u[i].abs().powf(self.p - 1.0)
            })
            .collect();
        let off: Vec<f64> = self.stiff.iter().map(|k| -dt * k).collect();
        for (j, k) in self.stiff.iter().enumerate() {
            diag[j] += dt * k;
            diag[j + 1] += dt * k;
        }
        let rhs: Vec<f64> = self.mass.iter().zip(u).map(|(w, x)| w * x).collect();
        let mut x = solve_spd_tridiagonal(&diag, &off, &rhs)?;
        let m = self.mass(&x);
        if !(m > 0.0 && m.is_finite()) {
            return None;
        }
        let s = 1.0 / m.sqrt();
        x.iter_mut().for_each(|v| *v *= s);
        Some(x)
    }

    pub fn normalize(&self, u: &mut [f64]) -> Result<()> {
        let m = self.mass(u);
        if !(m > 0.0) {
            return Err(Error::ZeroField);
        }
        let s = 1.0 / m.sqrt();
        u.iter_mut().for_each(|v| *v *= s);
        Ok(())
    }
}

/// Thomas elimination for a symmetric tridiagonal matrix; returns `None`
/// unless every pivot is positive (i.e. the matrix is positive definite).
fn solve_spd_tridiagonal(diag: &[f64], off: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = diag.len();
    let mut piv = vec![0.0; n];
    let mut y = vec![0.0; n];
    piv[0] = diag[0];
    y[0] = rhs[0];
    if !(piv[0] > 0.0) {
        return None;
    }
    for i in 1..n {
        let l = off[i - 1] / piv[i - 1];
        piv[i] = diag[i] - l * off[i - 1];
        if !(piv[i] > 1e-14 * diag[i].abs()) {
            return None;
        }
        y[i] = rhs[i] - l * y[i - 1];
    }
    let mut x = vec![0.0; n];
    x[n - 1] = y[n - 1] / piv[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = (y[i] - off[i] * x[i + 1]) / piv[i];
    }
    Some(x)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimizerResult {
    pub params: ProblemParams,
    pub potential: Potential,
    pub u: RadialField,
    pub energy: EnergyParts,
    pub mu: f64,
    pub iters: usize,
    pub el_residual: f64,
    /// Energies of the initial field and of every accepted step.
    pub energy_history: Vec<f64>,
    pub converged: bool,
}

/// JSON export of a minimizer result.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MinimizerSummary {
    pub params: ProblemParams,
    pub potential: Potential,
    pub energy_parts: EnergyParts,
    pub mu: f64,
    pub iters: usize,
    pub el_residual: f64,
    pub converged: bool,
}

impl MinimizerResult {
    pub fn summary(&self) -> MinimizerSummary {
        MinimizerSummary {
            params: self.params,
            potential: self.potential,
            energy_parts: self.energy,
            mu: self.mu,
            iters: self.iters,
            el_residual: self.el_residual,
            converged: self.converged,
        }
    }
}

/// Evaluates the discrete energy of `u` (assumed normalized).
pub fn evaluate_energy(
    u: &RadialField,
    params: &ProblemParams,
    potential: &Potential,
) -> Result<EnergyParts> {
    let d = Discretization::new(params, potential, u.grid().clone())?;
    Ok(d.parts(u.values()))
}

fn initial_field(
    params: &ProblemParams,
    grid: &Arc<RadialGrid>,
    init: &Init,
    w: Option<&GroundStateW>,
) -> Result<Vec<f64>> {
    let gaussian = |width: f64| -> Vec<f64> {
        grid.r().iter().map(|&r| (-(r / width).powi(2)).exp()).collect()
    };
    let values = match (init, w) {
        (Init::Gaussian(width), _) => {
            if !(*width > 0.0) {
                return Err(Error::Usage(format!("gaussian width must be positive (got {width})")));
            }
            gaussian(*width)
        }
        (Init::Profile(f), _) => {
            if f.values().iter().any(|&v| v < 0.0) || f.l2_norm_sq() == 0.0 {
                return Err(Error::Usage("initial profile must be nonnegative and nonzero".into()));
            }
            if Arc::ptr_eq(f.grid(), grid) || **f.grid() == **grid {
                f.values().to_vec()
            } else {
                f.rescale_onto(1.0, grid.clone()).into_values()
            }
        }
        (Init::ScaledW, Some(w)) => {
            let eps = epsilon_of(params, w.a_star)?;
            let scaled = w.profile.rescale_onto(1.0 / eps, grid.clone());
            scaled.into_values()
        }
        (Init::ScaledW, None) => gaussian(1.0),
    };
    Ok(values)
}

/// Minimizes the trapped energy over `‖u‖₂² = 1` by the normalized gradient
/// flow. `w` seeds [`Init::ScaledW`].
pub fn gfdn_minimize(
    params: &ProblemParams,
    potential: &Potential,
    grid: Arc<RadialGrid>,
    cfg: &FlowConfig,
    w: Option<&GroundStateW>,
) -> Result<MinimizerResult> {
    cfg.validate()?;
    let disc = Discretization::new(params, potential, grid.clone())?;
    let mut u = initial_field(params, &grid, &cfg.init, w)?;
    disc.normalize(&mut u)?;

    let mut energy = disc.parts(&u);
    let mut history = vec![energy.total];
    let mu0 = disc.rayleigh(&u);
    let dt_cap = cfg.dt.unwrap_or_else(|| {
        if mu0 < 0.0 {
            0.9 / mu0.abs()
        } else {
            10.0 / mu0.max(1e-3)
        }
    });
    let dt_floor = dt_cap * 1e-14;
    let mut dt = dt_cap;
    let mut mu = mu0;
    let mut residual = disc.el_residual(&u, mu);

    let finish = |u: Vec<f64>, energy, mu, iters, residual, history, converged| -> Result<MinimizerResult> {
        Ok(MinimizerResult {
            params: *params,
            potential: *potential,
            u: RadialField::new(grid.clone(), u)?,
            energy,
            mu,
            iters,
            el_residual: residual,
            energy_history: history,
            converged,
        })
    };

    for iter in 1..=cfg.max_iters {
        let (next, next_energy) = loop {
            if dt < dt_floor {
                return if residual < 1e-3 {
                    Err(Error::GridTooCoarse(residual))
                } else {
                    Err(Error::FlowDiverged(iter))
                };
            }
            match disc.step(&u, dt) {
                Some(cand) => {
                    let e = disc.parts(&cand);
                    if e.total <= energy.total + DESCENT_SLACK * energy.total.abs().max(1.0) {
                        break (cand, e);
                    }
                    dt *= 0.5;
                }
                None => dt *= 0.5,
            }
        };
        let decrease = (energy.total - next_energy.total) / next_energy.total.abs().max(1e-300);
        u = next;
        energy = next_energy;
        history.push(energy.total);
        mu = disc.rayleigh(&u);
        residual = disc.el_residual(&u, mu);
        if decrease.abs() < cfg.tol_energy && residual < cfg.tol_residual {
            return finish(u, energy, mu, iter, residual, history, true);
        }
        dt = (dt * 1.1).min(dt_cap);
    }
    let partial = finish(u, energy, mu, cfg.max_iters, residual, history, false)?;
    Err(Error::MaxItersReached(Box::new(partial)))
}

/// Multiplier from the energy identity together with its Rayleigh form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Multiplier {
    /// `I(M) - (p-1)/(p+1) · M^{(p-1)/2} ∫ u^{p+1} |x|^{-b}`
    pub mu: f64,
    /// `∫ |∇u|² + V u² - M^{(p-1)/2} u^{p+1} |x|^{-b}`
    pub rayleigh: f64,
}

impl Multiplier {
    pub fn discrepancy(&self) -> f64 {
        (self.mu - self.rayleigh).abs() / self.mu.abs().max(1e-300)
    }
}

pub fn lagrange_multiplier(result: &MinimizerResult) -> Multiplier {
    let p = result.params.exps.p();
    let c = result.params.coupling();
    let e = result.energy;
    Multiplier {
        mu: e.total - (p - 1.0) / (p + 1.0) * c * e.interaction,
        rayleigh: (e.kinetic + e.trap - c * e.interaction) / result.u.l2_norm_sq(),
    }
}

/// Smooth cut-off: 1 on `[0, 1]`, 0 on `[2, ∞)`.
pub fn cutoff(t: f64) -> f64 {
    fn psi(s: f64) -> f64 {
        if s > 0.0 {
            (-1.0 / s).exp()
        } else {
            0.0
        }
    }
    if t <= 1.0 {
        1.0
    } else if t >= 2.0 {
        0.0
    } else {
        let a = psi(2.0 - t);
        a / (a + psi(t - 1.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestFunctionEnergy {
    pub tau: f64,
    /// `A_τ` from `A_τ² = ‖w‖² / ∫ w² φ²(x/τ)`.
    pub a_tau: f64,
    pub energy: EnergyParts,
}

/// `E_M(u_τ)` for `u_τ(x) = A_τ τ^{N/2} w(τx) φ(x) / ‖w‖`, normalized on `grid`.
pub fn test_function_energy(
    params: &ProblemParams,
    potential: &Potential,
    grid: Arc<RadialGrid>,
    tau: f64,
    w: Option<&GroundStateW>,
) -> Result<TestFunctionEnergy> {
    let w = w.ok_or(Error::ProfileMissing)?;
    if !(tau > 0.0) {
        return Err(Error::Usage(format!("tau must be positive (got {tau})")));
    }
    let wp = &w.profile;
    let wg = wp.grid();
    let full = wp.l2_norm_sq();
    let cut: f64 = wg.surface()
        * wg
            .mass_weights()
            .iter()
            .zip(wp.values())
            .zip(wg.r())
            .map(|((m, v), r)| m * (v * cutoff(r / tau)).powi(2))
            .sum::<f64>();
    if !(cut > 0.0) {
        return Err(Error::ZeroField);
    }
    let a_tau = (full / cut).sqrt();

    let disc = Discretization::new(params, potential, grid.clone())?;
    let scaled = wp.rescale_onto(tau, grid.clone());
    let mut u: Vec<f64> = scaled
        .values()
        .iter()
        .zip(grid.r())
        .map(|(v, &r)| a_tau * v * cutoff(r) / w.a_star.sqrt())
        .collect();
    // exact discrete normalization keeps u_τ an admissible candidate
    disc.normalize(&mut u)?;
    Ok(TestFunctionEnergy {
        tau,
        a_tau,
        energy: disc.parts(&u),
    })
}
