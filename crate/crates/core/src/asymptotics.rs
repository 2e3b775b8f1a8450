//! Large-mass sweeps of the trapped problem: energies against the
//! trap-free law, vanishing trap energy, the multiplier limit, and
//! concentration of the rescaled minimizers onto `w/√a*`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::decay::decay_fit;
pub use crate::decay::DecayFit;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::grid::{h1_distance, sup_distance, FieldRecord, GridSpec, RadialField, RadialGrid};
use crate::minimizer::{gfdn_minimize, test_function_energy, FlowConfig, MinimizerResult};
use crate::params::{epsilon_of, tilde_i_closed, Exponents, Potential, ProblemParams};
use crate::profile::GroundStateW;

/// Decay window for `w_k`, as fractions of the rescaled radius.
pub const DECAY_WINDOW: (f64, f64) = (0.5, 0.75);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    #[serde(deserialize_with = "nan_from_null")]
    #[serde(rename = "M")]
    pub m: f64,
    #[serde(deserialize_with = "nan_from_null")]
    #[serde(rename = "I_M")]
    pub i_m: f64,
    /// `I(M) / (M/a*)^{β_E}`
    #[serde(deserialize_with = "nan_from_null")]
    pub ratio: f64,
    #[serde(deserialize_with = "nan_from_null")]
    pub trap_mass: f64,
    #[serde(deserialize_with = "nan_from_null")]
    pub eps: f64,
    #[serde(deserialize_with = "nan_from_null")]
    pub mu_eps2: f64,
    #[serde(deserialize_with = "nan_from_null")]
    pub sup_dist: f64,
    #[serde(deserialize_with = "nan_from_null")]
    pub h1_dist: f64,
    #[serde(deserialize_with = "nan_from_null")]
    pub sing_mass: f64,
    #[serde(deserialize_with = "nan_from_null")]
    pub decay_rate: f64,
    pub converged: bool,
    /// `‖∇w_k‖²`
    #[serde(deserialize_with = "nan_from_null")]
    pub grad_sq: f64,
    #[serde(deserialize_with = "nan_from_null")]
    pub decay_quality: f64,
    /// `-λ₀ (M/a*)^{β_E}`
    #[serde(deserialize_with = "nan_from_null")]
    pub tilde_closed: f64,
    /// Trap-free minimum on the same grid.
    #[serde(deserialize_with = "nan_from_null")]
    pub tilde_discrete: f64,
    /// `E_M(u_τ)` at `τ = 1/ε`.
    #[serde(deserialize_with = "nan_from_null")]
    pub upper: f64,
    #[serde(deserialize_with = "nan_from_null")]
    pub a_tau: f64,
    #[serde(deserialize_with = "nan_from_null")]
    pub el_residual: f64,
    pub iters: usize,
    pub error: Option<String>,
    /// `w_k` on the profile grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<FieldRecord>,
}

/// Failed rows carry NaN, which JSON writes as `null`.
fn nan_from_null<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

impl ScalingRow {
    fn failed(m: f64, eps: f64, err: &Error) -> Self {
        Self {
            m,
            i_m: f64::NAN,
            ratio: f64::NAN,
            trap_mass: f64::NAN,
            eps,
            mu_eps2: f64::NAN,
            sup_dist: f64::NAN,
            h1_dist: f64::NAN,
            sing_mass: f64::NAN,
            decay_rate: f64::NAN,
            converged: false,
            grad_sq: f64::NAN,
            decay_quality: f64::NAN,
            tilde_closed: f64::NAN,
            tilde_discrete: f64::NAN,
            upper: f64::NAN,
            a_tau: f64::NAN,
            el_residual: f64::NAN,
            iters: 0,
            error: Some(err.to_string()),
            profile: None,
        }
    }

    /// `Ĩ(M) ≤ I(M) ≤ E_M(u_τ)` with the discrete trap-free minimum.
    pub fn sandwiched(&self) -> bool {
        self.converged && self.tilde_discrete <= self.i_m && self.i_m <= self.upper
    }

    pub fn profile_field(&self) -> Option<RadialField> {
        self.profile.as_ref().and_then(|r| RadialField::from_record(r).ok())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    #[serde(rename = "N")]
    pub n: usize,
    pub p: f64,
    pub b: f64,
    pub potential: Potential,
    pub a_star: f64,
    pub lambda0: f64,
    pub beta_energy: f64,
    /// Grid of `w`; each row solves on this grid scaled by its `ε`.
    pub grid: GridSpec,
    pub rows: Vec<ScalingRow>,
    /// `∫ (w/√a*)^{p+1} |x|^{-b}`, the limit of `sing_mass`.
    pub sing_mass_limit: f64,
    pub assumptions: Vec<String>,
}

pub const CSV_HEADER: [&str; 11] = [
    "M",
    "I_M",
    "ratio",
    "trap_mass",
    "eps",
    "mu_eps2",
    "sup_dist",
    "h1_dist",
    "sing_mass",
    "decay_rate",
    "converged",
];

impl ScalingReport {
    pub fn exponents(&self) -> Result<Exponents> {
        Exponents::new(self.n, self.p, self.b)
    }

    pub fn converged_rows(&self) -> impl Iterator<Item = &ScalingRow> {
        self.rows.iter().filter(|r| r.converged)
    }

    pub fn all_converged(&self) -> bool {
        !self.rows.is_empty() && self.rows.iter().all(|r| r.converged)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut wtr = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        wtr.write_record(CSV_HEADER)?;
        for r in &self.rows {
            wtr.write_record([
                r.m.to_string(),
                r.i_m.to_string(),
                r.ratio.to_string(),
                r.trap_mass.to_string(),
                r.eps.to_string(),
                r.mu_eps2.to_string(),
                r.sup_dist.to_string(),
                r.h1_dist.to_string(),
                r.sing_mass.to_string(),
                r.decay_rate.to_string(),
                r.converged.to_string(),
            ])?;
        }
        let bytes = wtr.into_inner().map_err(|e| Error::Serde(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Serde(e.to_string()))
    }

}

/// Copies a field on `w.grid().scaled(ε)` back to the profile grid as
/// `ε^{N/2} u(ε y)`; node `i` maps to node `i`.
fn to_profile_frame(u: &RadialField, eps: f64, target: &Arc<RadialGrid>) -> Result<RadialField> {
    let src = u.grid().spec();
    let dst = target.spec();
    if src.nodes != dst.nodes || src.grading != dst.grading {
        return Ok(u.rescale_onto(eps, target.clone()));
    }
    let amp = eps.powf(target.dim() as f64 / 2.0);
    RadialField::new(target.clone(), u.values().iter().map(|v| amp * v).collect())
}

fn sweep_row(
    w: &GroundStateW,
    potential: &Potential,
    m: f64,
    cfg: &FlowConfig,
    keep_profile: bool,
) -> ScalingRow {
    let exps = w.exps;
    let eps = (m / w.a_star).powf(-exps.beta_length());
    match try_row(w, potential, m, cfg, keep_profile) {
        Ok(row) => row,
        Err(e) => {
            log::warn!("sweep row M = {m} failed: {e}");
            let mut row = ScalingRow::failed(m, eps, &e);
            if let Error::MaxItersReached(partial) = &e {
                row.i_m = partial.energy.total;
                row.iters = partial.iters;
                row.el_residual = partial.el_residual;
            }
            row
        }
    }
}

fn try_row(
    w: &GroundStateW,
    potential: &Potential,
    m: f64,
    cfg: &FlowConfig,
    keep_profile: bool,
) -> Result<ScalingRow> {
    let exps = w.exps;
    let params = ProblemParams::new(exps, m)?;
    let eps = epsilon_of(&params, w.a_star)?;
    let wgrid = w.profile.grid();
    let grid = Arc::new(wgrid.scaled(eps)?);

    let res: MinimizerResult = gfdn_minimize(&params, potential, grid.clone(), cfg, Some(w))?;
    let tilde = if potential.is_zero() {
        res.energy.total
    } else {
        gfdn_minimize(&params, &Potential::Zero, grid.clone(), cfg, Some(w))?
            .energy
            .total
    };
    let upper = test_function_energy(&params, potential, grid, 1.0 / eps, Some(w))?;

    let wk = to_profile_frame(&res.u, eps, wgrid)?;
    let target = w.normalized();
    let rmax = wgrid.rmax();
    let fit = decay_fit(&wk, (DECAY_WINDOW.0 * rmax, DECAY_WINDOW.1 * rmax));
    let (decay_rate, decay_quality) = match fit {
        Ok(f) => (f.rate, f.quality),
        Err(e) => {
            log::warn!("decay fit at M = {m}: {e}");
            (f64::NAN, f64::NAN)
        }
    };
    let scale = (m / w.a_star).powf(exps.beta_energy());
    Ok(ScalingRow {
        m,
        i_m: res.energy.total,
        ratio: res.energy.total / scale,
        trap_mass: res.energy.trap,
        eps,
        mu_eps2: eps * eps * res.mu,
        sup_dist: sup_distance(&wk, &target)?,
        h1_dist: h1_distance(&wk, &target)?,
        sing_mass: wk.power_integral(exps.p() + 1.0, -exps.b())?,
        decay_rate,
        converged: res.converged,
        grad_sq: wk.h1_seminorm_sq(),
        decay_quality,
        tilde_closed: tilde_i_closed(&params, w.a_star)?,
        tilde_discrete: tilde,
        upper: upper.energy.total,
        a_tau: upper.a_tau,
        el_residual: res.el_residual,
        iters: res.iters,
        error: None,
        profile: keep_profile.then(|| wk.to_record()),
    })
}

/// Solves the trapped problem for each mass in `m_list` (increasing) and
/// compares the rescaled minimizers against `w`. Failed rows are kept with
/// their error.
pub fn run_sweep(
    w: &GroundStateW,
    potential: &Potential,
    m_list: &[f64],
    cfg: &FlowConfig,
    exec: Execution,
    keep_profiles: bool,
) -> Result<ScalingReport> {
    if m_list.is_empty() {
        return Err(Error::Usage("empty mass list".into()));
    }
    if m_list.windows(2).any(|p| p[1] <= p[0]) {
        return Err(Error::Usage("mass list must be strictly increasing".into()));
    }
    for &m in m_list {
        ProblemParams::new(w.exps, m)?;
    }
    cfg.validate()?;
    let rows = exec.map(m_list, |&m| sweep_row(w, potential, m, cfg, keep_profiles));
    let exps = w.exps;
    let sing_mass_limit = w
        .normalized()
        .power_integral(exps.p() + 1.0, -exps.b())?;
    Ok(ScalingReport {
        n: exps.n(),
        p: exps.p(),
        b: exps.b(),
        potential: *potential,
        a_star: w.a_star,
        lambda0: exps.lambda0(),
        beta_energy: exps.beta_energy(),
        grid: w.profile.grid().spec(),
        rows,
        sing_mass_limit,
        assumptions: vec![
            "radially symmetric minimizers".into(),
            "a single minimizer branch along the mass sequence".into(),
        ],
    })
}

/// `(sup_dist, h1_dist)` of every converged row against `w/√a*`.
pub fn profile_convergence(report: &ScalingReport, w: Option<&GroundStateW>) -> Result<Vec<(f64, f64)>> {
    let w = w.ok_or(Error::ProfileMissing)?;
    let target = w.normalized();
    report
        .converged_rows()
        .map(|row| match row.profile_field() {
            Some(wk) => Ok((sup_distance(&wk, &target)?, h1_distance(&wk, &target)?)),
            None => Ok((row.sup_dist, row.h1_dist)),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformBounds {
    pub grad_min: f64,
    pub grad_max: f64,
    pub sing_min: f64,
    pub sing_max: f64,
    /// `2 a*^{(p-1)/2} / (p+1) · sing_mass / ‖∇w_k‖²` on the last converged row.
    pub energy_ratio: f64,
    /// Value of that ratio at `w/√a*`, namely `4/σ`.
    pub energy_ratio_limit: f64,
    pub all_positive_finite: bool,
}

/// Range of `‖∇w_k‖²` and `∫ w_k^{p+1}|x|^{-b}` over converged rows.
pub fn uniform_bounds_check(report: &ScalingReport) -> Result<UniformBounds> {
    let rows: Vec<&ScalingRow> = report.converged_rows().collect();
    if rows.len() < 2 {
        return Err(Error::Usage("need at least two converged rows".into()));
    }
    let exps = report.exponents()?;
    let fold = |f: fn(&ScalingRow) -> f64| {
        rows.iter().map(|r| f(r)).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        })
    };
    let (grad_min, grad_max) = fold(|r| r.grad_sq);
    let (sing_min, sing_max) = fold(|r| r.sing_mass);
    let last = rows[rows.len() - 1];
    let c = 2.0 * report.a_star.powf((exps.p() - 1.0) / 2.0) / (exps.p() + 1.0);
    let ok = |v: f64| v > 0.0 && v.is_finite();
    Ok(UniformBounds {
        grad_min,
        grad_max,
        sing_min,
        sing_max,
        energy_ratio: c * last.sing_mass / last.grad_sq,
        energy_ratio_limit: 4.0 / exps.sigma(),
        all_positive_finite: ok(grad_min) && ok(grad_max) && ok(sing_min) && ok(sing_max),
    })
}

/// Strictly decreasing sequence.
pub fn decreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|p| p[1] < p[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;
    use crate::profile::solve_w_shooting;
    use std::sync::OnceLock;

    fn w_case_a() -> &'static GroundStateW {
        static W: OnceLock<GroundStateW> = OnceLock::new();
        W.get_or_init(|| {
            let e = Exponents::new(1, 2.0, 0.5).unwrap();
            solve_w_shooting(&e, build_grid(1, 20.0, 4001, 2.0).unwrap(), None).unwrap()
        })
    }

    #[test]
    fn trap_free_rows_follow_exact_scaling() {
        let w = w_case_a();
        let rep = run_sweep(
            w,
            &Potential::Zero,
            &[10.0, 100.0, 1000.0],
            &FlowConfig::default(),
            Execution::Sequential,
            true,
        )
        .unwrap();
        let lambda0 = rep.lambda0;
        for r in &rep.rows {
            assert!(r.converged, "{r:?}");
            assert!(((r.ratio + lambda0) / lambda0).abs() < 1e-3, "ratio {}", r.ratio);
            assert_eq!(r.trap_mass, 0.0);
            assert!(r.sup_dist < 1e-3, "sup {}", r.sup_dist);
            assert!(r.ratio < 0.0);
            assert_eq!(r.eps, (r.m / w.a_star).powf(-0.5));
        }
        let grads: Vec<f64> = rep.rows.iter().map(|r| r.grad_sq).collect();
        let expect = w.profile.h1_seminorm_sq() / w.a_star;
        for g in grads {
            assert!(((g - expect) / expect).abs() < 1e-3);
        }
        let conv = profile_convergence(&rep, Some(w)).unwrap();
        assert_eq!(conv.len(), 3);
        assert!(matches!(profile_convergence(&rep, None), Err(Error::ProfileMissing)));
        let b = uniform_bounds_check(&rep).unwrap();
        assert!(b.all_positive_finite);
        assert!(((b.energy_ratio - b.energy_ratio_limit) / b.energy_ratio_limit).abs() < 1e-3);
    }

    #[test]
    fn identity_distance_is_zero() {
        let w = w_case_a();
        let t = w.normalized();
        assert_eq!(sup_distance(&t, &t).unwrap(), 0.0);
        assert_eq!(h1_distance(&t, &t).unwrap(), 0.0);
    }

    #[test]
    fn csv_layout() {
        let w = w_case_a();
        let rep = run_sweep(
            w,
            &Potential::harmonic(),
            &[10.0],
            &FlowConfig::default(),
            Execution::Sequential,
            false,
        )
        .unwrap();
        let csv = rep.to_csv().unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER.join(","));
        assert_eq!(lines.count(), 1);
        assert!(!csv.contains('\r'));
    }

    #[test]
    fn rejects_bad_mass_lists() {
        let w = w_case_a();
        let cfg = FlowConfig::default();
        for list in [&[][..], &[10.0, 5.0][..], &[-1.0][..]] {
            assert!(run_sweep(w, &Potential::Zero, list, &cfg, Execution::Sequential, false).is_err());
        }
    }

    #[test]
    fn failed_rows_are_kept() {
        let w = w_case_a();
        let cfg = FlowConfig {
            max_iters: 1,
            ..FlowConfig::default()
        };
        let rep = run_sweep(w, &Potential::harmonic(), &[10.0, 100.0], &cfg, Execution::Sequential, false).unwrap();
        assert_eq!(rep.rows.len(), 2);
        assert!(rep.rows.iter().all(|r| !r.converged && r.error.is_some()));
        assert!(!rep.all_converged());
        let json = serde_json::to_string(&rep).unwrap();
        let back: ScalingReport = serde_json::from_str(&json).unwrap();
        assert!(back.rows[0].ratio.is_nan());
        assert_eq!(back.rows[1].error, rep.rows[1].error);
    }
}
