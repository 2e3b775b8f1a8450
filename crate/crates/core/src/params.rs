//! Problem parameters, the admissible regime, and the closed-form constants
//! and scaling exponents of the trap-free problem.
//!
//! All quantities are plain `f64` evaluated once per parameter set.

use serde::{Deserialize, Serialize};

use crate::error::{Error, ParamField, Result};

/// The exponent triple `(N, p, b)` shared by the profile equation and the
/// minimization problem.
///
/// Construction validates `0 < b < min{2, N}` and `1 < p < 1 + (4 - 2b)/N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exponents {
    n: usize,
    p: f64,
    b: f64,
}

impl Exponents {
    pub fn new(n: usize, p: f64, b: f64) -> Result<Self> {
        if n < 1 {
            return Err(Error::RegimeViolation {
                field: ParamField::N,
                bound: "N >= 1".into(),
                value: n as f64,
            });
        }
        let nf = n as f64;
        let b_max = nf.min(2.0);
        if !(b > 0.0 && b < b_max) {
            return Err(Error::RegimeViolation {
                field: ParamField::B,
                bound: format!("0 < b < {b_max}"),
                value: b,
            });
        }
        let p_max = 1.0 + (4.0 - 2.0 * b) / nf;
        if !(p > 1.0 && p < p_max) {
            return Err(Error::RegimeViolation {
                field: ParamField::P,
                bound: format!("1 < p < {p_max}"),
                value: p,
            });
        }
        Ok(Self { n, p, b })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// `N(p-1) + 2b`, the homogeneity degree of the singular term relative to
    /// the kinetic term.
    pub fn sigma(&self) -> f64 {
        self.n as f64 * (self.p - 1.0) + 2.0 * self.b
    }

    /// `4 - N(p-1) - 2b`, strictly positive in the subcritical regime.
    pub fn subcritical_gap(&self) -> f64 {
        4.0 - self.sigma()
    }

    /// `2(p+1) - N(p-1) - 2b`.
    pub fn pohozaev_denominator(&self) -> f64 {
        2.0 * (self.p + 1.0) - self.sigma()
    }

    /// `‖∇w‖² / ‖w‖²` for the profile.
    pub fn kinetic_to_mass(&self) -> f64 {
        self.sigma() / self.pohozaev_denominator()
    }

    /// `‖∇w‖² / ∫ w^{p+1} |x|^{-b}` for the profile.
    pub fn kinetic_to_singular(&self) -> f64 {
        self.sigma() / (2.0 * (self.p + 1.0))
    }

    pub fn lambda0(&self) -> f64 {
        -(self.sigma() - 4.0) / self.pohozaev_denominator()
    }

    pub fn beta_length(&self) -> f64 {
        (self.p - 1.0) / self.subcritical_gap()
    }

    pub fn beta_energy(&self) -> f64 {
        2.0 * self.beta_length()
    }

    /// Sharp Gagliardo–Nirenberg constant for a given `a* = ‖w‖²`.
    pub fn c_gn(&self, a_star: f64) -> f64 {
        let s = self.sigma();
        let d = self.pohozaev_denominator();
        (s / d).powf(s / 4.0) * d / (2.0 * (self.p + 1.0)) * a_star.powf((self.p - 1.0) / 2.0)
    }

    /// Multiplier of the `Ĩ(1)` minimizer, `-(a*)^{2(1-p)/(4-2b-N(p-1))}`.
    pub fn tilde_mu_one(&self, a_star: f64) -> f64 {
        -a_star.powf(2.0 * (1.0 - self.p) / self.subcritical_gap())
    }

    pub fn derived(&self) -> DerivedConstants {
        DerivedConstants {
            lambda0: self.lambda0(),
            beta_energy: self.beta_energy(),
            beta_length: self.beta_length(),
            a_star: None,
            c_gn: None,
        }
    }
}

/// Validated `(N, p, b, M)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    pub exps: Exponents,
    m: f64,
}

impl ProblemParams {
    pub fn new(exps: Exponents, m: f64) -> Result<Self> {
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::RegimeViolation {
                field: ParamField::M,
                bound: "M > 0".into(),
                value: m,
            });
        }
        Ok(Self { exps, m })
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn with_m(&self, m: f64) -> Result<Self> {
        Self::new(self.exps, m)
    }

    /// Coefficient `M^{(p-1)/2}` in front of the singular term.
    pub fn coupling(&self) -> f64 {
        self.m.powf((self.exps.p - 1.0) / 2.0)
    }
}

/// Validates `(N, p, b, M)` against the subcritical regime.
pub fn validate_params(n: usize, p: f64, b: f64, m: f64) -> Result<ProblemParams> {
    ProblemParams::new(Exponents::new(n, p, b)?, m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedConstants {
    pub lambda0: f64,
    pub beta_energy: f64,
    pub beta_length: f64,
    pub a_star: Option<f64>,
    pub c_gn: Option<f64>,
}

impl DerivedConstants {
    pub fn with_a_star(mut self, exps: &Exponents, a_star: f64) -> Result<Self> {
        check_a_star(a_star)?;
        self.a_star = Some(a_star);
        self.c_gn = Some(exps.c_gn(a_star));
        Ok(self)
    }
}

pub fn derived_constants(params: &ProblemParams) -> DerivedConstants {
    params.exps.derived()
}

fn check_a_star(a_star: f64) -> Result<()> {
    if a_star > 0.0 && a_star.is_finite() {
        Ok(())
    } else {
        Err(Error::NonpositiveAStar(a_star))
    }
}

/// Closed-form trap-free energy `-λ₀ (M/a*)^{β_E}`.
pub fn tilde_i_closed(params: &ProblemParams, a_star: f64) -> Result<f64> {
    check_a_star(a_star)?;
    let e = &params.exps;
    Ok(-e.lambda0() * (params.m / a_star).powf(e.beta_energy()))
}

/// Concentration length `ε(M) = (M/a*)^{-β_L}`.
pub fn epsilon_of(params: &ProblemParams, a_star: f64) -> Result<f64> {
    check_a_star(a_star)?;
    Ok((params.m / a_star).powf(-params.exps.beta_length()))
}

/// `Ĩ(M) = M^{β_E} Ĩ(1)`.
pub fn tilde_scaling_identity(params: &ProblemParams, i1: f64) -> f64 {
    params.m.powf(params.exps.beta_energy()) * i1
}

/// Radial trapping potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Potential {
    /// `V(r) = γ² r^s`
    PowerLaw { gamma: f64, s: f64 },
    Zero,
}

impl Potential {
    pub fn harmonic() -> Self {
        Potential::PowerLaw { gamma: 1.0, s: 2.0 }
    }

    pub fn power_law(gamma: f64, s: f64) -> Result<Self> {
        if !(gamma > 0.0 && s > 0.0) {
            return Err(Error::Usage(format!(
                "power-law potential needs gamma > 0 and s > 0 (got {gamma}, {s})"
            )));
        }
        Ok(Potential::PowerLaw { gamma, s })
    }

    pub fn eval(&self, r: f64) -> f64 {
        match *self {
            Potential::PowerLaw { gamma, s } => gamma * gamma * r.powf(s),
            Potential::Zero => 0.0,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Potential::Zero)
    }
}

impl std::str::FromStr for Potential {
    type Err = Error;

    /// Accepts `zero`, `harmonic`, or `power:gamma,s`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "zero" => return Ok(Potential::Zero),
            "harmonic" => return Ok(Potential::harmonic()),
            _ => {}
        }
        let rest = s
            .strip_prefix("power:")
            .ok_or_else(|| Error::Usage(format!("unknown potential '{s}'")))?;
        let mut it = rest.split(',').map(|t| t.trim().parse::<f64>());
        match (it.next(), it.next(), it.next()) {
            (Some(Ok(g)), Some(Ok(e)), None) => Potential::power_law(g, e),
            _ => Err(Error::Usage(format!("malformed potential '{s}'"))),
        }
    }
}

impl std::fmt::Display for Potential {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Potential::Zero => write!(f, "zero"),
            Potential::PowerLaw { gamma, s } => write!(f, "power:{gamma},{s}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn case_a() -> ProblemParams {
        validate_params(1, 2.0, 0.5, 1.0).unwrap()
    }

    #[test]
    fn regime_accepts_and_rejects() {
        assert!(validate_params(1, 2.0, 0.5, 1.0).is_ok());
        match validate_params(2, 2.0, 1.0, 1.0) {
            Err(Error::RegimeViolation { field, .. }) => assert_eq!(field, ParamField::P),
            other => panic!("expected p violation, got {other:?}"),
        }
        match validate_params(3, 1.2, 2.5, 1.0) {
            Err(Error::RegimeViolation { field, bound, .. }) => {
                assert_eq!(field, ParamField::B);
                assert!(bound.contains("b < 2"));
            }
            other => panic!("expected b violation, got {other:?}"),
        }
        assert!(matches!(
            validate_params(1, 2.0, 0.5, 0.0),
            Err(Error::RegimeViolation { field: ParamField::M, .. })
        ));
        assert!(matches!(
            validate_params(0, 2.0, 0.5, 1.0),
            Err(Error::RegimeViolation { field: ParamField::N, .. })
        ));
    }

    #[test]
    fn derived_spot_values() {
        let d = derived_constants(&case_a());
        assert!((d.lambda0 - 0.5).abs() < 1e-15);
        assert!((d.beta_energy - 1.0).abs() < 1e-15);
        assert!((d.beta_length - 0.5).abs() < 1e-15);
        assert!(d.a_star.is_none() && d.c_gn.is_none());

        let d3 = derived_constants(&validate_params(3, 1.2, 0.5, 1.0).unwrap());
        assert!((d3.lambda0 - 6.0 / 7.0).abs() < 1e-14);
        assert!((d3.beta_energy - 1.0 / 6.0).abs() < 1e-14);

        let e = case_a().exps;
        let with = e.derived().with_a_star(&e, 1.0).unwrap();
        assert!((with.c_gn.unwrap() - 0.5f64.sqrt() * 4.0 / 6.0).abs() < 1e-15);
        assert!((with.c_gn.unwrap() - 0.471405).abs() < 1e-6);
    }

    #[test]
    fn closed_forms() {
        let p = case_a().with_m(8.0).unwrap();
        assert!((tilde_i_closed(&p, 2.0).unwrap() + 2.0).abs() < 1e-15);
        let p = case_a().with_m(3.7).unwrap();
        assert!((tilde_i_closed(&p, 3.7).unwrap() + 0.5).abs() < 1e-15);
        assert!(matches!(tilde_i_closed(&p, 0.0), Err(Error::NonpositiveAStar(_))));
        assert!(matches!(epsilon_of(&p, -1.0), Err(Error::NonpositiveAStar(_))));

        assert_eq!(epsilon_of(&case_a(), 1.0).unwrap(), 1.0);
        let p = case_a().with_m(100.0).unwrap();
        assert!((epsilon_of(&p, 1.0).unwrap() - 0.1).abs() < 1e-15);
        let p3 = validate_params(3, 1.2, 0.5, 64.0).unwrap();
        assert!((epsilon_of(&p3, 1.0).unwrap() - 0.5f64.sqrt()).abs() < 1e-12);

        assert_eq!(tilde_scaling_identity(&case_a(), -0.3), -0.3);
        let p4 = case_a().with_m(4.0).unwrap();
        assert!((tilde_scaling_identity(&p4, -0.25) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn potential_parsing() {
        assert_eq!("zero".parse::<Potential>().unwrap(), Potential::Zero);
        assert_eq!(
            "power:2,1.5".parse::<Potential>().unwrap(),
            Potential::PowerLaw { gamma: 2.0, s: 1.5 }
        );
        assert!("power:2".parse::<Potential>().is_err());
        assert!("power:-1,2".parse::<Potential>().is_err());
        assert!("cubic".parse::<Potential>().is_err());
        let v = Potential::harmonic();
        assert_eq!(v.eval(0.0), 0.0);
        assert_eq!(v.eval(3.0), 9.0);
    }

    fn valid_exponents() -> impl Strategy<Value = Exponents> {
        (1usize..=4, 0.01f64..0.99, 0.01f64..0.99).prop_map(|(n, tb, tp)| {
            let b = tb * (n as f64).min(2.0);
            let p = 1.0 + tp * (4.0 - 2.0 * b) / n as f64;
            Exponents::new(n, p, b).unwrap()
        })
    }

    proptest! {
        #[test]
        fn regime_constants_positive(e in valid_exponents()) {
            prop_assert!(e.lambda0() > 0.0);
            prop_assert!(e.subcritical_gap() > 0.0);
            prop_assert!(e.pohozaev_denominator() > 0.0);
            let d = e.derived();
            prop_assert!((d.beta_energy - 2.0 * d.beta_length).abs() <= 1e-15 * d.beta_energy.abs().max(1.0));
        }

        #[test]
        fn closed_energy_homogeneous_and_decreasing(
            e in valid_exponents(), m in 0.01f64..1e4, c in 1.01f64..50.0, a in 0.1f64..20.0
        ) {
            // near the critical exponent β_E is large; keep every power
            // normal and let the tolerance follow their conditioning
            let be = e.beta_energy();
            prop_assume!([m, a.recip(), m / a, c * m / a].iter().all(|x| x.powf(be).is_normal()));
            let p = ProblemParams::new(e, m).unwrap();
            let pc = p.with_m(c * m).unwrap();
            let i = tilde_i_closed(&p, a).unwrap();
            let ic = tilde_i_closed(&pc, a).unwrap();
            prop_assert!(i < 0.0);
            prop_assert!(ic < i);
            let expect = c.powf(e.beta_energy()) * i;
            prop_assert!((ic - expect).abs() <= 1e-12 * expect.abs());

            let cond = 1.0 + be * (m.ln().abs() + a.ln().abs());
            let one = p.with_m(1.0).unwrap();
            let via_identity = tilde_scaling_identity(&p, tilde_i_closed(&one, a).unwrap());
            prop_assert!((via_identity - i).abs() <= 1e-14 * cond * i.abs());

            let eps = epsilon_of(&p, a).unwrap();
            let alpha = (m / a).powf(e.beta_length());
            prop_assert!((eps * alpha - 1.0).abs() < 1e-12);
            prop_assert!(epsilon_of(&pc, a).unwrap() < eps);
        }
    }
}
