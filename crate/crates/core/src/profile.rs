//! The positive radial profile `w` of `-Δw + w - w^p |x|^{-b} = 0`,
//! computed by radial shooting and, independently, by minimizing the
//! trap-free energy and undoing its scaling.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::decay::{decay_fit, DecayFit};
use crate::error::{Error, Result};
use crate::grid::{sup_distance, RadialField, RadialGrid};
use crate::minimizer::{gfdn_minimize, FlowConfig, Init};
use crate::ode::{Dopri, OdeFailure};
use crate::params::{Exponents, Potential, ProblemParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Flow,
    Shooting,
    CrossValidated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundStateW {
    pub exps: Exponents,
    pub profile: RadialField,
    pub a_star: f64,
    pub w0: f64,
    pub pohozaev_res: (f64, f64),
    pub decay: Option<DecayFit>,
    pub method: Method,
    /// Nonincreasing on the grid (recorded, not required).
    pub monotone: bool,
    /// `|w(rmax)| ≤ 1e-8`
    pub boundary_ok: bool,
    /// Multiplier of the `Ĩ(1)` minimizer (flow route only).
    pub tilde_mu_one: Option<f64>,
}

/// JSON header written next to an exported profile.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileHeader {
    #[serde(rename = "N")]
    pub n: usize,
    pub p: f64,
    pub b: f64,
    pub a_star: f64,
    pub w0: f64,
    pub pohozaev_res: (f64, f64),
    pub decay: Option<f64>,
    pub method: Method,
    pub monotone: bool,
}

impl GroundStateW {
    fn assemble(
        exps: Exponents,
        profile: RadialField,
        a_star: f64,
        method: Method,
        tilde_mu_one: Option<f64>,
    ) -> Self {
        let pohozaev_res = pohozaev_residual(&profile, &exps);
        let rmax = profile.grid().rmax();
        let decay = decay_fit(&profile, (0.5 * rmax, 0.75 * rmax)).ok();
        let monotone = profile.values().windows(2).all(|w| w[1] <= w[0]);
        let boundary_ok = profile.check_boundary("profile w");
        Self {
            exps,
            w0: profile.at_origin(),
            profile,
            a_star,
            pohozaev_res,
            decay,
            method,
            monotone,
            boundary_ok,
            tilde_mu_one,
        }
    }

    pub fn header(&self) -> ProfileHeader {
        ProfileHeader {
            n: self.exps.n(),
            p: self.exps.p(),
            b: self.exps.b(),
            a_star: self.a_star,
            w0: self.w0,
            pohozaev_res: self.pohozaev_res,
            decay: self.decay.map(|d| d.rate),
            method: self.method,
            monotone: self.monotone,
        }
    }

    /// `w / √a*`, the predicted limit of the rescaled minimizers.
    pub fn normalized(&self) -> RadialField {
        self.profile.scale(1.0 / self.a_star.sqrt())
    }

    /// Smallest node value on the bulk `r < rmax - margin`.
    pub fn bulk_min(&self, margin: f64) -> f64 {
        let cut = self.profile.grid().rmax() - margin;
        self.profile
            .grid()
            .r()
            .iter()
            .zip(self.profile.values())
            .filter(|(r, _)| **r < cut)
            .map(|(_, v)| *v)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Relative residuals of the two Pohozaev equalities
/// `‖∇w‖² = σ/(2(p+1)) ∫ w^{p+1}|x|^{-b} = σ/(2(p+1) - σ) ‖w‖²`.
pub fn pohozaev_residual(w: &RadialField, exps: &Exponents) -> (f64, f64) {
    let kin = w.h1_seminorm_sq();
    let mass = w.l2_norm_sq();
    let sing = w
        .power_integral(exps.p() + 1.0, -exps.b())
        .expect("b < N keeps the weight integrable");
    let r1 = (kin - exps.kinetic_to_singular() * sing).abs() / kin;
    let r2 = (kin - exps.kinetic_to_mass() * mass).abs() / kin;
    (r1, r2)
}

/// `C_GN ∫|u|^{p+1}|x|^{-b} / (‖∇u‖^{N(p-1)/2+b} ‖u‖^{p+1-N(p-1)/2-b})`;
/// at most one, with equality at `w`.
pub fn gn_ratio(u: &RadialField, exps: &Exponents, c_gn: f64) -> Result<f64> {
    let kin = u.h1_seminorm_sq();
    let mass = u.l2_norm_sq();
    if kin == 0.0 || mass == 0.0 {
        return Err(Error::ZeroField);
    }
    let half = exps.sigma() / 2.0;
    let sing = u.power_integral(exps.p() + 1.0, -exps.b())?;
    Ok(c_gn * sing / (kin.powf(half / 2.0) * mass.powf((exps.p() + 1.0 - half) / 2.0)))
}

// ---------------------------------------------------------------------------
// shooting

/// Outcome of integrating the radial ODE from a trial `w(0)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shot {
    /// `w` crossed zero: `w(0)` too large.
    Crossed,
    /// `w'` turned positive while `w > 0`: `w(0)` too small.
    Turned,
    /// Neither event before the end of the integration range.
    Undecided,
}

struct Shooter {
    n: f64,
    p: f64,
    b: f64,
    ode: Dopri,
}

/// State `[w, w', ∫w² r^{N-1}, ∫w'² r^{N-1}, ∫w^{p+1} r^{N-1-b}]`.
type State = [f64; 5];

impl Shooter {
    fn new(exps: &Exponents) -> Self {
        Self {
            n: exps.n() as f64,
            p: exps.p(),
            b: exps.b(),
            ode: Dopri::default(),
        }
    }

    fn rhs(&self, r: f64, y: &State) -> State {
        let w = y[0];
        let v = y[1];
        let rn = r.powf(self.n - 1.0);
        let wp = w.abs().powf(self.p - 1.0) * w;
        let rb = r.powf(-self.b);
        [
            v,
            w - wp * rb - (self.n - 1.0) / r * v,
            w * w * rn,
            v * v * rn,
            w.abs().powf(self.p + 1.0) * rn * rb,
        ]
    }

    /// Series `w0 + c1 r^{2-b} + c2 r² + c3 r^{4-2b}` near the origin.
    fn series(&self, w0: f64, r: f64) -> State {
        let (n, p, b) = (self.n, self.p, self.b);
        let c1 = -w0.powf(p) / ((2.0 - b) * (n - b));
        let c2 = w0 / (2.0 * n);
        let c3 = -p * w0.powf(p - 1.0) * c1 / ((4.0 - 2.0 * b) * (n + 2.0 - 2.0 * b));
        let w = w0 + c1 * r.powf(2.0 - b) + c2 * r * r + c3 * r.powf(4.0 - 2.0 * b);
        let dw = c1 * (2.0 - b) * r.powf(1.0 - b) + 2.0 * c2 * r + c3 * (4.0 - 2.0 * b) * r.powf(3.0 - 2.0 * b);
        [
            w,
            dw,
            w0 * w0 * r.powf(n) / n,
            (c1 * (2.0 - b)).powi(2) * r.powf(n + 2.0 - 2.0 * b) / (n + 2.0 - 2.0 * b),
            w0.powf(p + 1.0) * r.powf(n - b) / (n - b),
        ]
    }

    fn classify(&self, w0: f64, r_start: f64, r_end: f64) -> Shot {
        let mut h = r_start;
        let mut outcome = Shot::Undecided;
        let res = self.ode.integrate(
            |r, y| self.rhs(r, y),
            r_start,
            self.series(w0, r_start),
            r_end,
            &mut h,
            |_, y| {
                if y[0] < 0.0 {
                    outcome = Shot::Crossed;
                    true
                } else if y[1] > 0.0 {
                    outcome = Shot::Turned;
                    true
                } else {
                    false
                }
            },
        );
        match res {
            Ok(_) => outcome,
            // a blown-up trajectory has left the positive decreasing regime
            Err(_) => Shot::Crossed,
        }
    }

    /// Integrates outward through the grid nodes until an event; returns the
    /// states at nodes `1..` that were reached.
    fn trajectory(&self, w0: f64, r: &[f64], r_start: f64) -> Vec<State> {
        let mut out = Vec::with_capacity(r.len());
        let mut t = r_start;
        let mut y = self.series(w0, r_start);
        let mut h = r_start;
        for &target in &r[1..] {
            if target > t {
                let res = self.ode.integrate(|s, y| self.rhs(s, y), t, y, target, &mut h, |_, y| {
                    y[0] < 0.0 || y[1] > 0.0
                });
                match res {
                    Ok(o) if !o.stopped => {
                        y = o.y;
                        t = target;
                    }
                    _ => break,
                }
            }
            out.push(y);
        }
        out
    }

    /// Integrates inward from `r_hi` to `r_lo` with a decaying start of
    /// amplitude `amp`; states at the visited nodes, outermost first.
    fn inward(&self, amp: f64, nodes: &[f64]) -> std::result::Result<Vec<State>, OdeFailure> {
        let r_hi = *nodes.last().unwrap();
        let nonlin = amp.powf(self.p - 1.0) * r_hi.powf(-self.b);
        let kappa = (1.0 - nonlin).max(0.01).sqrt() + (self.n - 1.0) / (2.0 * r_hi);
        let mut y: State = [amp, -kappa * amp, 0.0, 0.0, 0.0];
        let mut t = r_hi;
        let mut h = 1e-2;
        let mut out = Vec::with_capacity(nodes.len());
        out.push(y);
        for &target in nodes.iter().rev().skip(1) {
            let o = self
                .ode
                .integrate(|s, y| self.rhs(s, y), t, y, target, &mut h, |_, _| false)?;
            y = o.y;
            t = target;
            out.push(y);
        }
        Ok(out)
    }
}

/// Shooting bracket search: doubles or halves from `w(0) = 1` until the two
/// outcomes differ.
pub fn find_bracket(exps: &Exponents, rmax: f64) -> Result<(f64, f64)> {
    let sh = Shooter::new(exps);
    let (r_start, r_end) = (1e-6, rmax.max(60.0));
    let mut w0 = 1.0;
    let first = sh.classify(w0, r_start, r_end);
    for _ in 0..200 {
        let next = if first == Shot::Crossed { w0 * 0.5 } else { w0 * 2.0 };
        let shot = sh.classify(next, r_start, r_end);
        if shot != first {
            return Ok(if next < w0 { (next, w0) } else { (w0, next) });
        }
        w0 = next;
    }
    Err(Error::NoBracket { lo: w0, hi: w0 })
}

/// Bisection on `w(0)` between crossing and turning trajectories; tail
/// beyond the reliable outward range is matched to an inward-integrated
/// decaying solution.
pub fn solve_w_shooting(
    exps: &Exponents,
    grid: Arc<RadialGrid>,
    bracket: Option<(f64, f64)>,
) -> Result<GroundStateW> {
    if grid.dim() != exps.n() {
        return Err(Error::Usage("grid dimension does not match N".into()));
    }
    let r = grid.r();
    let rmax = grid.rmax();
    let sh = Shooter::new(exps);
    let r_start = r[1].min(1e-5);
    let r_end = rmax.max(60.0);

    let (mut lo, mut hi) = match bracket {
        Some(b) => b,
        None => find_bracket(exps, rmax)?,
    };
    let s_lo = sh.classify(lo, r_start, r_end);
    let s_hi = sh.classify(hi, r_start, r_end);
    if s_lo != Shot::Turned || s_hi != Shot::Crossed {
        return Err(Error::NoBracket { lo, hi });
    }
    for _ in 0..2000 {
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            break;
        }
        match sh.classify(mid, r_start, r_end) {
            Shot::Turned => lo = mid,
            Shot::Crossed => hi = mid,
            Shot::Undecided => {
                lo = mid;
                hi = mid;
                break;
            }
        }
    }
    let tol = 1e-12 * hi.max(1.0);
    if hi - lo > tol {
        return Err(Error::BisectionStalled(hi - lo));
    }

    let traj_lo = sh.trajectory(lo, r, r_start);
    let traj_hi = sh.trajectory(hi, r, r_start);
    let reach = traj_lo.len().min(traj_hi.len());
    // last node (index into r) where the bracketing trajectories agree
    let mut agree = 0;
    for k in 0..reach {
        let (a, b) = (traj_lo[k][0], traj_hi[k][0]);
        if (a - b).abs() > 1e-10 * a.abs().max(b.abs()) || a <= 0.0 {
            break;
        }
        agree = k + 1;
    }
    let outward = |k: usize| -> State {
        let (a, b) = (&traj_lo[k - 1], &traj_hi[k - 1]);
        std::array::from_fn(|j| 0.5 * (a[j] + b[j]))
    };
    let w0 = 0.5 * (lo + hi);
    let mut values = vec![0.0; r.len()];
    values[0] = w0;

    let last = r.len() - 1;
    let i_match = agree.min(
        r.iter()
            .position(|&x| x >= 0.6 * rmax)
            .unwrap_or(last)
            .max(1),
    );
    let q_out = outward(i_match);
    for (k, v) in values.iter_mut().enumerate().take(i_match + 1).skip(1) {
        *v = outward(k)[0];
    }

    let surface = grid.surface();
    let mut q2 = q_out[2];
    if i_match < last {
        let target = q_out[0];
        let tail_nodes = &r[i_match..];
        let eval = |log_amp: f64| -> Option<(f64, Vec<State>)> {
            let states = sh.inward(log_amp.exp(), tail_nodes).ok()?;
            let at = states.last()?[0];
            if !(at > 0.0 && at.is_finite()) {
                return None;
            }
            Some((at.ln() - target.ln(), states))
        };
        let span = rmax - r[i_match];
        let guess = target.ln() - span - 0.5 * (exps.n() as f64 - 1.0) * (rmax / r[i_match]).ln();
        let (mut a, mut b) = (guess - 1.0, guess + 1.0);
        let mut fa = eval(a).ok_or(Error::GridTooCoarse(f64::NAN))?.0;
        let mut fb = eval(b).ok_or(Error::GridTooCoarse(f64::NAN))?.0;
        let mut widen = 0;
        while fa * fb > 0.0 {
            widen += 1;
            if widen > 60 {
                return Err(Error::GridTooCoarse(fa.abs().min(fb.abs())));
            }
            if fa > 0.0 {
                a -= 2.0;
                fa = eval(a).ok_or(Error::GridTooCoarse(f64::NAN))?.0;
            } else {
                b += 2.0;
                fb = eval(b).ok_or(Error::GridTooCoarse(f64::NAN))?.0;
            }
        }
        let mut best = None;
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            let (fm, states) = eval(m).ok_or(Error::GridTooCoarse(f64::NAN))?;
            best = Some(states);
            if fm.abs() < 1e-14 || (b - a) < 1e-15 * m.abs().max(1.0) {
                break;
            }
            if (fm > 0.0) == (fa > 0.0) {
                a = m;
                fa = fm;
            } else {
                b = m;
            }
        }
        let states = best.expect("bisection ran at least once");
        // states are outermost first; states[j] sits at node last - j
        for (j, s) in states.iter().enumerate() {
            let k = last - j;
            if k > i_match {
                values[k] = s[0];
            }
        }
        // the inward quadratures accumulate with a negative orientation
        q2 += -states.last().unwrap()[2];
        let wr = values[last];
        let kappa = 1.0 + (exps.n() as f64 - 1.0) / (2.0 * rmax);
        q2 += wr * wr * rmax.powf(exps.n() as f64 - 1.0) / (2.0 * kappa);
    }
    let a_star = surface * q2;
    let profile = RadialField::new(grid, values)?;
    Ok(GroundStateW::assemble(*exps, profile, a_star, Method::Shooting, None))
}

// ---------------------------------------------------------------------------
// flow

/// Minimizes the trap-free energy at `M = 1` and maps the minimizer back to
/// `w` through `ũ₁(x) = a*^{-(2-b)/D} w(a*^{-(p-1)/D} x)`, `D = 4 - 2b - N(p-1)`.
///
/// `a*` is read off the minimum energy `Ĩ(1) = -λ₀ a*^{-β_E}`. A second
/// pass re-solves on the grid scaled to the recovered length so that the
/// final mapping lands on grid nodes.
pub fn solve_w_flow(exps: &Exponents, grid: Arc<RadialGrid>, cfg: &FlowConfig) -> Result<GroundStateW> {
    let params = ProblemParams::new(*exps, 1.0)?;
    let a_from_energy = |e: f64| (-e / exps.lambda0()).powf(-1.0 / exps.beta_energy());

    let first_cfg = match cfg.init {
        Init::ScaledW => cfg.clone().with_init(Init::Gaussian(1.0)),
        _ => cfg.clone(),
    };
    let first = gfdn_minimize(&params, &Potential::Zero, grid.clone(), &first_cfg, None)?;
    let a1 = a_from_energy(first.energy.total);
    let scaled_grid = Arc::new(grid.scaled(a1.powf(exps.beta_length()))?);
    let second_cfg = cfg.clone().with_init(Init::Profile(first.u.clone()));
    let second = gfdn_minimize(&params, &Potential::Zero, scaled_grid, &second_cfg, None)?;
    if second.el_residual > cfg.tol_residual {
        return Err(Error::GridTooCoarse(second.el_residual));
    }
    let a2 = a_from_energy(second.energy.total);
    let eps = a2.powf(exps.beta_length());
    let amp = a2.powf((2.0 - exps.b()) / exps.subcritical_gap()) / eps.powf(exps.n() as f64 / 2.0);
    let w = second.u.rescale_onto(eps, grid).scale(amp);
    let a_star = w.l2_norm_sq();
    Ok(GroundStateW::assemble(*exps, w, a_star, Method::Flow, Some(second.mu)))
}

/// Agreement between the two independent constructions of `w`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossValidation {
    pub a_star_flow: f64,
    pub a_star_shooting: f64,
    pub a_star_rel: f64,
    pub sup_dist: f64,
    /// `sup_dist / w(0)`
    pub sup_rel: f64,
}

/// Runs both solvers on `grid`; returns the shooting profile (the reference
/// for `a*`) tagged as cross-validated, plus the agreement figures.
pub fn cross_validate(
    exps: &Exponents,
    grid: Arc<RadialGrid>,
    cfg: &FlowConfig,
) -> Result<(GroundStateW, CrossValidation)> {
    let shoot = solve_w_shooting(exps, grid.clone(), None)?;
    let flow = solve_w_flow(exps, grid, cfg)?;
    let sup = sup_distance(&flow.profile, &shoot.profile)?;
    let cv = CrossValidation {
        a_star_flow: flow.a_star,
        a_star_shooting: shoot.a_star,
        a_star_rel: (flow.a_star - shoot.a_star).abs() / shoot.a_star,
        sup_dist: sup,
        sup_rel: sup / shoot.w0,
    };
    let mut w = shoot;
    w.method = Method::CrossValidated;
    Ok((w, cv))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;
    use proptest::prelude::*;
    use std::sync::OnceLock;

    fn case_a() -> Exponents {
        Exponents::new(1, 2.0, 0.5).unwrap()
    }

    fn w_case_a() -> &'static GroundStateW {
        static W: OnceLock<GroundStateW> = OnceLock::new();
        W.get_or_init(|| {
            let g = build_grid(1, 20.0, 4001, 2.0).unwrap();
            solve_w_shooting(&case_a(), g, None).unwrap()
        })
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn shooting_matches_reference_values() {
        let w = w_case_a();
        // reference from an independent adaptive shooting solve
        assert!(rel(w.a_star, 0.980_638) < 1e-5, "a* = {}", w.a_star);
        assert!(rel(w.w0, 0.814_397) < 1e-5, "w0 = {}", w.w0);
        assert!(w.monotone);
        assert!(w.boundary_ok);
        assert!(w.bulk_min(0.0) >= 0.0);
    }

    #[test]
    fn pohozaev_and_singular_mass() {
        let w = w_case_a();
        assert!(w.pohozaev_res.0 <= 1e-4 && w.pohozaev_res.1 <= 1e-4);
        let kin = w.profile.h1_seminorm_sq();
        assert!(rel(kin / w.profile.l2_norm_sq(), 0.5) < 1e-4);
        let sing = w.profile.power_integral(3.0, -0.5).unwrap();
        assert!(rel(sing, 1.5 * w.a_star) < 1e-3);

        let doubled = w.profile.scale(2.0);
        let (r1, r2) = pohozaev_residual(&doubled, &case_a());
        assert!(r1 > 0.1, "r1 = {r1}");
        assert!(r2 < 1e-4);
    }

    #[test]
    fn tail_decays_at_unit_rate() {
        let d = w_case_a().decay.unwrap();
        assert!((0.9..=1.1).contains(&d.rate), "rate {}", d.rate);
        assert!(d.quality >= 0.99);
    }

    #[test]
    fn flow_and_shooting_agree() {
        let g = build_grid(1, 20.0, 4001, 2.0).unwrap();
        let (w, cv) = cross_validate(&case_a(), g, &FlowConfig::default()).unwrap();
        assert_eq!(w.method, Method::CrossValidated);
        assert!(cv.a_star_rel < 1e-3, "{cv:?}");
        assert!(cv.sup_rel < 1e-3, "{cv:?}");
    }

    #[test]
    fn flow_multiplier_is_minus_inverse_mass() {
        let g = build_grid(1, 20.0, 4001, 2.0).unwrap();
        let w = solve_w_flow(&case_a(), g, &FlowConfig::default()).unwrap();
        let mu = w.tilde_mu_one.unwrap();
        assert!(rel(mu * w.a_star, -1.0) < 1e-3, "mu a* = {}", mu * w.a_star);
        assert!(rel(mu, case_a().tilde_mu_one(w.a_star)) < 1e-3);
    }

    #[test]
    fn gn_ratio_sharp_at_w() {
        let e = case_a();
        let w = w_case_a();
        let c = e.c_gn(w.a_star);
        let at_w = gn_ratio(&w.profile, &e, c).unwrap();
        assert!((0.999..=1.001).contains(&at_w), "{at_w}");
        let gauss = RadialField::from_fn(w.profile.grid().clone(), |r| (-r * r).exp()).unwrap();
        assert!(gn_ratio(&gauss, &e, c).unwrap() < 1.0);
        let zero = RadialField::zeros(w.profile.grid().clone());
        assert!(matches!(gn_ratio(&zero, &e, c), Err(Error::ZeroField)));
    }

    #[test]
    fn bad_bracket_rejected() {
        let g = build_grid(1, 20.0, 4001, 2.0).unwrap();
        assert!(matches!(
            solve_w_shooting(&case_a(), g, Some((0.9, 1.0))),
            Err(Error::NoBracket { .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn gn_ratio_invariant_and_bounded(amp in 0.1f64..10.0, width in 0.3f64..3.0, lam in 0.5f64..2.0) {
            let e = case_a();
            let w = w_case_a();
            let c = e.c_gn(w.a_star);
            let grid = w.profile.grid().clone();
            let f = RadialField::from_fn(grid.clone(), |r| (-(r / width).powi(2)).exp()).unwrap();
            let g = RadialField::from_fn(grid, |r| amp * (-(lam * r / width).powi(2)).exp()).unwrap();
            let rf = gn_ratio(&f, &e, c).unwrap();
            let rg = gn_ratio(&g, &e, c).unwrap();
            prop_assert!(rf <= 1.0 + 1e-6);
            prop_assert!((rf - rg).abs() < 1e-5);
        }
    }
}
