//! Graded radial grids, product quadrature against `r^{N-1+γ}`, discrete
//! norms, and rescaling of radial fields.
//!
//! A field is represented by its nodal values and is treated as piecewise
//! linear between nodes. Every quadrature integrates that interpolant against
//! the radial weight exactly, so the singular weight `r^{-b}` is never
//! evaluated at the origin.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interp::Pchip;

/// Boundary value above which a field is considered truncated by `rmax`.
pub const BOUNDARY_WARN: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    #[serde(rename = "N")]
    pub n: usize,
    pub rmax: f64,
    pub nodes: usize,
    pub grading: f64,
}

impl GridSpec {
    pub fn new(n: usize, rmax: f64, nodes: usize, grading: f64) -> Self {
        Self {
            n,
            rmax,
            nodes,
            grading,
        }
    }

    /// Default resolution used throughout: `rmax = 20`, 4001 nodes, grading 2.
    pub fn standard(n: usize) -> Self {
        Self::new(n, 20.0, 4001, 2.0)
    }

    pub fn with_rmax(self, rmax: f64) -> Self {
        Self { rmax, ..self }
    }

    pub fn with_nodes(self, nodes: usize) -> Self {
        Self { nodes, ..self }
    }
}

/// Immutable radial grid `r_i = rmax (i/(n-1))^g` with cached mass weights
/// and per-cell stiffness moments.
#[derive(Debug, Clone)]
pub struct RadialGrid {
    spec: GridSpec,
    r: Vec<f64>,
    surface: f64,
    mass_w: Vec<f64>,
    cell_moment: Vec<f64>,
}

impl PartialEq for RadialGrid {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec && self.r == other.r
    }
}

/// Area of the unit sphere in `R^N`; 2 for `N = 1` (even extension).
pub fn surface_const(n: usize) -> f64 {
    // S_1 = 2, S_2 = 2π, S_{N+2} = 2π S_N / N
    let mut s = if n % 2 == 1 { 2.0 } else { 2.0 * std::f64::consts::PI };
    let mut k = if n % 2 == 1 { 1 } else { 2 };
    while k < n {
        s *= 2.0 * std::f64::consts::PI / k as f64;
        k += 2;
    }
    s
}

pub fn build_grid(n: usize, rmax: f64, nodes: usize, grading: f64) -> Result<Arc<RadialGrid>> {
    RadialGrid::new(GridSpec::new(n, rmax, nodes, grading)).map(Arc::new)
}

impl RadialGrid {
    pub fn new(spec: GridSpec) -> Result<Self> {
        if spec.n < 1 {
            return Err(Error::BadGridSpec("dimension must be >= 1".into()));
        }
        if spec.nodes < 3 {
            return Err(Error::BadGridSpec(format!(
                "need at least 3 nodes (got {})",
                spec.nodes
            )));
        }
        if !(spec.rmax > 0.0 && spec.rmax.is_finite()) {
            return Err(Error::BadGridSpec(format!("rmax must be positive (got {})", spec.rmax)));
        }
        if !(spec.grading >= 1.0 && spec.grading.is_finite()) {
            return Err(Error::BadGridSpec(format!(
                "grading must be >= 1 (got {})",
                spec.grading
            )));
        }
        let last = (spec.nodes - 1) as f64;
        let mut r: Vec<f64> = (0..spec.nodes)
            .map(|i| spec.rmax * (i as f64 / last).powf(spec.grading))
            .collect();
        r[spec.nodes - 1] = spec.rmax;
        if r.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::BadGridSpec("nodes are not strictly increasing".into()));
        }
        let k = spec.n as f64 - 1.0;
        let (wa, wb) = cell_weights(&r, k);
        let mass_w = assemble(&wa, &wb);
        let cell_moment = wa.iter().zip(&wb).map(|(a, b)| a + b).collect();
        Ok(Self {
            spec,
            r,
            surface: surface_const(spec.n),
            mass_w,
            cell_moment,
        })
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.n
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn rmax(&self) -> f64 {
        self.spec.rmax
    }

    pub fn surface(&self) -> f64 {
        self.surface
    }

    /// Nodal weights for `γ = 0` (the lumped mass matrix, without the
    /// surface factor).
    pub fn mass_weights(&self) -> &[f64] {
        &self.mass_w
    }

    /// `∫_{cell j} r^{N-1} dr`, used by the kinetic form.
    pub fn cell_moments(&self) -> &[f64] {
        &self.cell_moment
    }

    pub fn cell_width(&self, j: usize) -> f64 {
        self.r[j + 1] - self.r[j]
    }

    pub fn min_spacing(&self) -> f64 {
        self.r
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    /// Nodal weights `ω_i` such that `Σ ω_i f_i = ∫_0^{rmax} I_h f · r^{N-1+γ} dr`
    /// for the piecewise-linear interpolant `I_h f`.
    pub fn weights(&self, gamma: f64) -> Result<Vec<f64>> {
        if gamma == 0.0 {
            return Ok(self.mass_w.clone());
        }
        let n = self.spec.n;
        if gamma <= -(n as f64) {
            return Err(Error::WeightNotIntegrable { n, gamma });
        }
        let (wa, wb) = cell_weights(&self.r, n as f64 - 1.0 + gamma);
        Ok(assemble(&wa, &wb))
    }

    /// Same grid family with every length multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.spec.with_rmax(self.spec.rmax * factor))
    }
}

/// Per-cell hat-function moments `(∫ (b-r)/h r^k, ∫ (r-a)/h r^k)`.
fn cell_weights(r: &[f64], k: f64) -> (Vec<f64>, Vec<f64>) {
    let cells = r.len() - 1;
    let mut wa = Vec::with_capacity(cells);
    let mut wb = Vec::with_capacity(cells);
    for j in 0..cells {
        let (a, b) = (r[j], r[j + 1]);
        let h = b - a;
        let (x, y) = if a == 0.0 {
            let m0 = b.powf(k + 1.0) / (k + 1.0);
            let right = b.powf(k + 1.0) / (k + 2.0);
            (m0 - right, right)
        } else if h < 0.5 * a {
            // smooth weight on the cell; Gauss–Legendre avoids cancellation
            let (mut x, mut y) = (0.0, 0.0);
            for (t, w) in GL8_NODES.iter().zip(GL8_WEIGHTS.iter()) {
                let t = 0.5 * (t + 1.0);
                let f = 0.5 * w * (a + h * t).powf(k);
                x += f * (1.0 - t);
                y += f * t;
            }
            (x * h, y * h)
        } else {
            let m0 = (b.powf(k + 1.0) - a.powf(k + 1.0)) / (k + 1.0);
            let m1 = (b.powf(k + 2.0) - a.powf(k + 2.0)) / (k + 2.0);
            let right = (m1 - a * m0) / h;
            (m0 - right, right)
        };
        wa.push(x);
        wb.push(y);
    }
    (wa, wb)
}

fn assemble(wa: &[f64], wb: &[f64]) -> Vec<f64> {
    let mut w = vec![0.0; wa.len() + 1];
    for j in 0..wa.len() {
        w[j] += wa[j];
        w[j + 1] += wb[j];
    }
    w
}

const GL8_NODES: [f64; 8] = [
    -0.960_289_856_497_536_2,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329_0,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329_0,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_2,
];
const GL8_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_3,
    0.222_381_034_453_374_5,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362_0,
    0.362_683_783_378_362_0,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// A radial function sampled at the nodes of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialField {
    grid: Arc<RadialGrid>,
    values: Vec<f64>,
}

impl RadialField {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.r().iter().map(|&r| f(r)).collect();
        Self::new(grid, values)
    }

    pub fn zeros(grid: Arc<RadialGrid>) -> Self {
        let values = vec![0.0; grid.len()];
        Self { grid, values }
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.grid.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    pub fn at_origin(&self) -> f64 {
        self.values[0]
    }

    pub fn boundary_value(&self) -> f64 {
        *self.values.last().unwrap()
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Logs a warning when the field has not decayed by `rmax`.
    pub fn check_boundary(&self, what: &str) -> bool {
        let ok = self.boundary_value().abs() <= BOUNDARY_WARN;
        if !ok {
            log::warn!(
                "{what}: |u(rmax)| = {:e} exceeds {:e}; consider a larger rmax",
                self.boundary_value().abs(),
                BOUNDARY_WARN
            );
        }
        ok
    }

    /// `S_N ∫ f r^{N-1+γ} dr` with `f` these nodal values.
    pub fn integrate(&self, gamma: f64) -> Result<f64> {
        let w = self.grid.weights(gamma)?;
        Ok(self.grid.surface() * dot(&w, &self.values))
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.grid.surface()
            * self
                .grid
                .mass_weights()
                .iter()
                .zip(&self.values)
                .map(|(w, u)| w * u * u)
                .sum::<f64>()
    }

    /// `‖∇u‖²` from the cell-centred difference quotients, exact for the
    /// piecewise-linear interpolant.
    pub fn h1_seminorm_sq(&self) -> f64 {
        let g = &self.grid;
        let r = g.r();
        let s: f64 = g
            .cell_moments()
            .iter()
            .enumerate()
            .map(|(j, m)| {
                let d = (self.values[j + 1] - self.values[j]) / (r[j + 1] - r[j]);
                m * d * d
            })
            .sum();
        g.surface() * s
    }

    /// `S_N ∫ |u|^q r^{N-1+γ} dr`.
    pub fn power_integral(&self, q: f64, gamma: f64) -> Result<f64> {
        let w = self.grid.weights(gamma)?;
        Ok(self.grid.surface()
            * w.iter()
                .zip(&self.values)
                .map(|(w, u)| w * u.abs().powf(q))
                .sum::<f64>())
    }

    pub fn interpolator(&self) -> Pchip {
        Pchip::new(self.grid.r(), &self.values)
    }

    /// `v(r) = ε^{N/2} u(ε r)` sampled on the same grid; zero beyond `rmax/ε`.
    pub fn rescale(&self, eps: f64) -> Self {
        self.rescale_onto(eps, self.grid.clone())
    }

    /// `v(r) = ε^{N/2} u(ε r)` sampled on `target`.
    pub fn rescale_onto(&self, eps: f64, target: Arc<RadialGrid>) -> Self {
        let amp = eps.powf(self.grid.dim() as f64 / 2.0);
        let pc = self.interpolator();
        let xs: Vec<f64> = target.r().iter().map(|&r| eps * r).collect();
        let values = pc
            .eval_sorted(&xs)
            .into_iter()
            .map(|v| amp * v)
            .collect();
        Self {
            grid: target,
            values,
        }
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    pub fn to_plain(&self) -> String {
        let mut s = String::with_capacity(self.values.len() * 48);
        for (r, v) in self.grid.r().iter().zip(&self.values) {
            s.push_str(&format!("{r:e} {v:e}\n"));
        }
        s
    }

    pub fn to_record(&self) -> FieldRecord {
        FieldRecord {
            grid: self.grid.spec(),
            values: self.values.clone(),
        }
    }

    pub fn from_record(rec: &FieldRecord) -> Result<Self> {
        let grid = Arc::new(RadialGrid::new(rec.grid)?);
        Self::new(grid, rec.values.clone())
    }
}

/// JSON form of a field: the grid recipe plus nodal values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldRecord {
    pub grid: GridSpec,
    pub values: Vec<f64>,
}

pub fn sup_distance(f: &RadialField, g: &RadialField) -> Result<f64> {
    if !f.same_grid(g) {
        return Err(Error::GridMismatch);
    }
    Ok(f.values
        .iter()
        .zip(&g.values)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

/// `‖f - g‖_{H¹}` with the same discrete norms as [`RadialField::l2_norm_sq`]
/// and [`RadialField::h1_seminorm_sq`].
pub fn h1_distance(f: &RadialField, g: &RadialField) -> Result<f64> {
    if !f.same_grid(g) {
        return Err(Error::GridMismatch);
    }
    let d = RadialField {
        grid: f.grid.clone(),
        values: f.values.iter().zip(&g.values).map(|(a, b)| a - b).collect(),
    };
    Ok((d.l2_norm_sq() + d.h1_seminorm_sq()).sqrt())
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
