//! Monotone piecewise-cubic Hermite interpolation (Fritsch–Carlson slopes
//! with the weighted harmonic mean for non-uniform spacing).

#[derive(Debug, Clone)]
pub struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl Pchip {
    pub fn new(x: &[f64], y: &[f64]) -> Self {
        assert_eq!(x.len(), y.len());
        assert!(x.len() >= 2);
        let n = x.len();
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        let mut d = vec![0.0; n];
        if n == 2 {
            d[0] = delta[0];
            d[1] = delta[0];
        } else {
            for k in 1..n - 1 {
                let (a, b) = (delta[k - 1], delta[k]);
                if a * b <= 0.0 {
                    d[k] = 0.0;
                } else {
                    let w1 = 2.0 * h[k] + h[k - 1];
                    let w2 = h[k] + 2.0 * h[k - 1];
                    d[k] = (w1 + w2) / (w1 / a + w2 / b);
                }
            }
            d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
            d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        }
        Self {
            x: x.to_vec(),
            y: y.to_vec(),
            d,
        }
    }

    fn eval_in(&self, i: usize, t: f64) -> f64 {
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.y[i] + h10 * h * self.d[i] + h01 * self.y[i + 1] + h11 * h * self.d[i + 1]
    }

    /// Value at `t`; zero outside `[x_0, x_last]`.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        if t < self.x[0] || t > self.x[n - 1] {
            return 0.0;
        }
        let i = match self.x.binary_search_by(|v| v.partial_cmp(&t).unwrap()) {
            Ok(i) => return self.y[i],
            Err(i) => i - 1,
        };
        self.eval_in(i, t)
    }

    /// Evaluates at nondecreasing points with a single forward sweep.
    pub fn eval_sorted(&self, ts: &[f64]) -> Vec<f64> {
        let n = self.x.len();
        let mut i = 0;
        ts.iter()
            .map(|&t| {
                if t < self.x[0] || t > self.x[n - 1] {
                    return 0.0;
                }
                while i + 2 < n && self.x[i + 1] <= t {
                    i += 1;
                }
                if t == self.x[i] {
                    self.y[i]
                } else if t == self.x[i + 1] {
                    self.y[i + 1]
                } else {
                    self.eval_in(i, t)
                }
            })
            .collect()
    }
}

fn end_slope(h0: f64, h1: f64, m0: f64, m1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
    if d.signum() != m0.signum() {
        0.0
    } else if m0.signum() != m1.signum() && d.abs() > 3.0 * m0.abs() {
        3.0 * m0
    } else {
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_nodes_and_linear_data() {
        let x = [0.0, 0.1, 0.5, 1.2, 2.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v - 1.0).collect();
        let p = Pchip::new(&x, &y);
        for (a, b) in x.iter().zip(&y) {
            assert_eq!(p.eval(*a), *b);
        }
        for t in [0.05, 0.3, 0.77, 1.9] {
            assert!((p.eval(t) - (3.0 * t - 1.0)).abs() < 1e-14);
        }
        assert_eq!(p.eval(2.5), 0.0);
    }

    #[test]
    fn monotone_data_stays_monotone() {
        let x: Vec<f64> = (0..20).map(|i| (i as f64 / 19.0).powi(2) * 5.0).collect();
        let y: Vec<f64> = x.iter().map(|v| if *v < 1.0 { 1.0 } else { (-v).exp() }).collect();
        let p = Pchip::new(&x, &y);
        let ts: Vec<f64> = (0..=1000).map(|i| 5.0 * i as f64 / 1000.0).collect();
        let v = p.eval_sorted(&ts);
        assert!(v.windows(2).all(|w| w[1] <= w[0] + 1e-15));
        for (t, val) in ts.iter().zip(&v) {
            assert_eq!(*val, p.eval(*t));
        }
    }
}
