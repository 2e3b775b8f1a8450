//! Least-squares fit of an exponential tail.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::RadialField;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// Slope of `-ln u(r)` against `r`.
    pub rate: f64,
    pub window: (f64, f64),
    /// `min(rate², 1 - 1e-6)`
    pub theta: f64,
    /// Coefficient of determination of the linear fit.
    pub quality: f64,
}

/// Fits `-ln u(r) ≈ rate · r + c` over the nodes inside `window`.
pub fn decay_fit(field: &RadialField, window: (f64, f64)) -> Result<DecayFit> {
    let (lo, hi) = window;
    let mut pts = Vec::new();
    for (&r, &u) in field.grid().r().iter().zip(field.values()) {
        if r < lo || r > hi {
            continue;
        }
        if !(u > 0.0) {
            return Err(Error::NonpositiveTail(r));
        }
        pts.push((r, -u.ln()));
    }
    if pts.len() < 3 {
        return Err(Error::Usage(format!(
            "decay window [{lo}, {hi}] holds only {} nodes",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in &pts {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let rate = sxy / sxx;
    let quality = if syy == 0.0 { 0.0 } else { sxy * sxy / (sxx * syy) };
    Ok(DecayFit {
        rate,
        window,
        theta: (rate * rate).min(1.0 - 1e-6),
        quality,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;

    #[test]
    fn synthetic_exponentials() {
        let g = build_grid(2, 20.0, 801, 2.0).unwrap();
        let f = RadialField::from_fn(g.clone(), |r| 3.0 * (-r).exp()).unwrap();
        let fit = decay_fit(&f, (8.0, 14.0)).unwrap();
        assert!((fit.rate - 1.0).abs() < 1e-6);
        assert!(fit.quality > 0.999_999);
        assert_eq!(fit.theta, 1.0 - 1e-6);

        let f = RadialField::from_fn(g.clone(), |r| (-0.5 * r).exp()).unwrap();
        let fit = decay_fit(&f, (8.0, 14.0)).unwrap();
        assert!((fit.rate - 0.5).abs() < 1e-9);
        assert!((fit.theta - 0.25).abs() < 1e-9);

        let f = RadialField::from_fn(g, |r| 1.0 - r / 10.0).unwrap();
        assert!(matches!(decay_fit(&f, (8.0, 14.0)), Err(Error::NonpositiveTail(_))));
    }
}
