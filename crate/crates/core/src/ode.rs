//! Adaptive Dormand–Prince 5(4) integrator for small fixed-size systems.

#[derive(Debug, Clone, Copy)]
pub struct Dopri {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for Dopri {
    fn default() -> Self {
        Self {
            rtol: 1e-12,
            atol: 1e-24,
            max_steps: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Outcome<const D: usize> {
    pub t: f64,
    pub y: [f64; D],
    /// The event predicate fired at `t`.
    pub stopped: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OdeFailure {
    StepUnderflow(f64),
    TooManySteps,
    NonFinite(f64),
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy<const D: usize>(y: &[f64; D], h: f64, terms: &[(f64, &[f64; D])]) -> [f64; D] {
    let mut out = *y;
    for i in 0..D {
        let mut s = 0.0;
        for (c, k) in terms {
            s += c * k[i];
        }
        out[i] += h * s;
    }
    out
}

impl Dopri {
    /// Integrates `y' = f(t, y)` from `t0` to `t1` (either direction).
    ///
    /// `h` carries the step-size estimate between calls. `stop` is checked
    /// after every accepted step; when it returns true the integration ends
    /// there.
    pub fn integrate<const D: usize, F, S>(
        &self,
        f: F,
        t0: f64,
        y0: [f64; D],
        t1: f64,
        h: &mut f64,
        mut stop: S,
    ) -> Result<Outcome<D>, OdeFailure>
    where
        F: Fn(f64, &[f64; D]) -> [f64; D],
        S: FnMut(f64, &[f64; D]) -> bool,
    {
        let dir = if t1 >= t0 { 1.0 } else { -1.0 };
        let span = (t1 - t0).abs();
        if span == 0.0 {
            return Ok(Outcome {
                t: t0,
                y: y0,
                stopped: false,
            });
        }
        let mut t = t0;
        let mut y = y0;
        let mut step = if *h > 0.0 { h.min(span) } else { span * 1e-3 };
        let mut k1 = f(t, &y);
        let mut steps = 0;
        loop {
            steps += 1;
            if steps > self.max_steps {
                return Err(OdeFailure::TooManySteps);
            }
            let remaining = (t1 - t).abs();
            let last = step >= remaining;
            if last {
                step = remaining;
            }
            let hs = dir * step;
            let k2 = f(t + C2 * hs, &axpy(&y, hs, &[(A21, &k1)]));
            let k3 = f(t + C3 * hs, &axpy(&y, hs, &[(A31, &k1), (A32, &k2)]));
            let k4 = f(
                t + C4 * hs,
                &axpy(&y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
            );
            let k5 = f(
                t + C5 * hs,
                &axpy(&y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
            );
            let k6 = f(
                t + hs,
                &axpy(
                    &y,
                    hs,
                    &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
                ),
            );
            let y_new = axpy(
                &y,
                hs,
                &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
            );
            let k7 = f(t + hs, &y_new);
            let mut err = 0.0f64;
            for i in 0..D {
                let e = hs
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let sc = self.atol + self.rtol * y[i].abs().max(y_new[i].abs());
                err = err.max((e / sc).abs());
            }
            if !err.is_finite() {
                step *= 0.25;
                if step < 1e-300 {
                    return Err(OdeFailure::NonFinite(t));
                }
                continue;
            }
            if err <= 1.0 {
                t = if last { t1 } else { t + hs };
                y = y_new;
                k1 = k7;
                *h = step;
                if stop(t, &y) {
                    return Ok(Outcome {
                        t,
                        y,
                        stopped: true,
                    });
                }
                if last {
                    return Ok(Outcome {
                        t,
                        y,
                        stopped: false,
                    });
                }
                let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                step *= fac;
            } else {
                step *= (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
            }
            if step <= t.abs().max(1e-300) * 1e-15 {
                return Err(OdeFailure::StepUnderflow(t));
            }
        }
    }
}
