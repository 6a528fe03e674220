//! The inequality checkers. Every checker first verifies that `(f, g)`
//! solves the relevant equation; pairs that fail the gate give an invalid
//! case instead of a ratio.

use serde::{Deserialize, Serialize};

use super::report::CaseResult;
use super::{frac_norm, gain_exponent, mixed_norm};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::{AxisKind, Layout, Rep};
use crate::model::{check_residual, manufactured_rhs, CoefficientModel, ModelParams};

/// Largest relative residual accepted before a pair is checked.
pub const RESIDUAL_GATE: f64 = 1e-8;

/// A pair `(f, g)` with its residual against a model, stored fully
/// frequency-represented.
#[derive(Debug, Clone)]
pub struct VerifiedPair {
    pub f: Field,
    pub g: Field,
    pub residual: f64,
    pub params: ModelParams,
}

impl VerifiedPair {
    pub fn new(f: &Field, g: &Field, params: &ModelParams) -> Result<Self> {
        if f.layout() != Layout::Full {
            return Err(Error::Representation("checkers need (t, x, v) fields".into()));
        }
        let residual = check_residual(f, g, params)?;
        let all = [AxisKind::T, AxisKind::X, AxisKind::V];
        Ok(VerifiedPair {
            f: f.with_rep(&all, Rep::Frequency),
            g: g.with_rep(&all, Rep::Frequency),
            residual,
            params: params.clone(),
        })
    }

    /// `g = L f`, then gated like any other pair.
    pub fn manufactured(f: &Field, params: &ModelParams) -> Result<Self> {
        let g = manufactured_rhs(f, params)?.g;
        VerifiedPair::new(f, &g, params)
    }

    pub fn is_valid(&self) -> bool {
        self.residual.is_finite() && self.residual <= RESIDUAL_GATE
    }
}

/// The registered inequalities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "kebab-case")]
pub enum Check {
    /// `‖|Dx|^{α/(1+α)} f‖ ≲ ‖g‖^{α/(1+α)} ‖|Dv|^α f‖^{1/(1+α)}` for free transport.
    PropBouchut { alpha: f64 },
    /// `‖|Dv|^β f‖ ≲ ‖g‖^{1/2} ‖f‖^{1/2}`.
    Step1 { beta: f64 },
    /// `‖|Dx|^{2β/(1+2β)} f‖ ≲ ‖|Dv|^{2β} f‖ + ‖|Dv|^{2β} f‖^{1/(1+2β)} ‖g‖^{2β/(1+2β)}`.
    Step2 { beta: f64 },
    /// `‖|Dv|^β |Dx|^{β/(1+2β)} f‖ ≲ ‖|Dx|^{2β/(1+2β)} f‖^{1/2} ‖g‖^{1/2}`.
    Step3 { beta: f64 },
    /// `‖|Dv|^{2β} f‖ + ‖|Dx|^{2β/(1+2β)} f‖ ≲ ‖g‖`, constant coefficient.
    Thm1 { beta: f64 },
    /// The same left side against `‖g‖ + ‖f‖`, variable coefficient.
    Thm2 { beta: f64 },
}

impl Check {
    pub fn name(&self) -> &'static str {
        match self {
            Check::PropBouchut { .. } => "prop-bouchut",
            Check::Step1 { .. } => "step1",
            Check::Step2 { .. } => "step2",
            Check::Step3 { .. } => "step3",
            Check::Thm1 { .. } => "thm1",
            Check::Thm2 { .. } => "thm2",
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Check::PropBouchut { alpha } => {
                if !(alpha >= 0.0 && alpha.is_finite()) {
                    return Err(Error::param("alpha", format!("{alpha} must be finite and >= 0")));
                }
            }
            Check::Step1 { beta }
            | Check::Step2 { beta }
            | Check::Step3 { beta }
            | Check::Thm1 { beta }
            | Check::Thm2 { beta } => {
                if !(beta > 0.0 && beta <= 1.0) {
                    return Err(Error::param("beta", format!("{beta} is outside (0, 1]")));
                }
            }
        }
        Ok(())
    }

    /// Whether a pair verified against `params` satisfies this check's
    /// hypothesis.
    pub fn accepts(&self, params: &ModelParams) -> bool {
        match (self, &params.coefficient) {
            (Check::PropBouchut { .. }, _) => params.is_transport_only(),
            (Check::Thm2 { beta }, CoefficientModel::Variable(_)) => params.beta == *beta,
            (Check::Thm2 { .. }, _) => false,
            (_, CoefficientModel::Constant(a)) => *a > 0.0 && params.beta == self.beta(),
            _ => false,
        }
    }

    fn beta(&self) -> f64 {
        match *self {
            Check::PropBouchut { alpha } => alpha,
            Check::Step1 { beta }
            | Check::Step2 { beta }
            | Check::Step3 { beta }
            | Check::Thm1 { beta }
            | Check::Thm2 { beta } => beta,
        }
    }

    pub fn evaluate(&self, pair: &VerifiedPair) -> Result<CaseResult> {
        self.validate()?;
        if !self.accepts(&pair.params) {
            return Err(Error::param("params", format!("pair was not verified for the {} hypothesis", self.name())));
        }
        if !pair.is_valid() {
            return Ok(CaseResult::invalid().with_terms(&[("residual", pair.residual)]));
        }
        let (f, g) = (&pair.f, &pair.g);
        let gn = g.norm();
        let case = match *self {
            Check::PropBouchut { alpha } => {
                let e = alpha / (1.0 + alpha);
                let lhs = frac_norm(f, e, AxisKind::X)?;
                let dv = frac_norm(f, alpha, AxisKind::V)?;
                CaseResult::new(lhs, gn.powf(e) * dv.powf(1.0 / (1.0 + alpha)))
            }
            Check::Step1 { beta } => {
                let lhs = frac_norm(f, beta, AxisKind::V)?;
                CaseResult::new(lhs, gn.sqrt() * f.norm().sqrt())
            }
            Check::Step2 { beta } => {
                let lhs = frac_norm(f, gain_exponent(beta), AxisKind::X)?;
                let dv = frac_norm(f, 2.0 * beta, AxisKind::V)?;
                let rhs = dv + dv.powf(1.0 / (1.0 + 2.0 * beta)) * gn.powf(gain_exponent(beta));
                CaseResult::new(lhs, rhs).with_terms(&[("dv_2beta", dv)])
            }
            Check::Step3 { beta } => {
                let lhs = mixed_norm(f, beta / (1.0 + 2.0 * beta), beta)?;
                let dx = frac_norm(f, gain_exponent(beta), AxisKind::X)?;
                CaseResult::new(lhs, dx.sqrt() * gn.sqrt())
            }
            Check::Thm1 { beta } | Check::Thm2 { beta } => {
                let dv = frac_norm(f, 2.0 * beta, AxisKind::V)?;
                let dx = frac_norm(f, gain_exponent(beta), AxisKind::X)?;
                let rhs = match self {
                    Check::Thm1 { .. } => gn,
                    _ => gn + f.norm(),
                };
                CaseResult::new(dv + dx, rhs).with_terms(&[("dv_2beta", dv), ("dx_gain", dx)])
            }
        };
        Ok(case.with_residual(pair.residual))
    }
}

impl CaseResult {
    fn with_residual(mut self, residual: f64) -> Self {
        self.terms.push(("residual".into(), residual));
        self
    }
}

pub fn check_prop_bouchut(f: &Field, g: &Field, alpha: f64) -> Result<CaseResult> {
    let pair = VerifiedPair::new(f, g, &ModelParams::transport_only())?;
    Check::PropBouchut { alpha }.evaluate(&pair)
}

pub fn check_step1(f: &Field, g: &Field, beta: f64) -> Result<CaseResult> {
    Check::Step1 { beta }.evaluate(&VerifiedPair::new(f, g, &ModelParams::constant(beta))?)
}

pub fn check_step2(f: &Field, g: &Field, beta: f64) -> Result<CaseResult> {
    Check::Step2 { beta }.evaluate(&VerifiedPair::new(f, g, &ModelParams::constant(beta))?)
}

pub fn check_step3(f: &Field, g: &Field, beta: f64) -> Result<CaseResult> {
    Check::Step3 { beta }.evaluate(&VerifiedPair::new(f, g, &ModelParams::constant(beta))?)
}

/// Part 1 for a constant coefficient, part 2 for a variable one.
pub fn check_theorem(f: &Field, g: &Field, params: &ModelParams) -> Result<CaseResult> {
    let check = match params.coefficient {
        CoefficientModel::Constant(_) => Check::Thm1 { beta: params.beta },
        CoefficientModel::Variable(_) => Check::Thm2 { beta: params.beta },
    };
    check.evaluate(&VerifiedPair::new(f, g, params)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Mode, SpectralData};
    use crate::grid::GridSpec;
    use crate::model::{Coefficient, CoefficientRecipe};
    use num_complex::Complex64;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn grid() -> Arc<GridSpec> {
        Arc::new(GridSpec::new(1, 16, 16, 64, 2.0 * PI, 2.0 * PI, 8.0 * PI).unwrap())
    }

    fn boxes(g: &GridSpec) -> [f64; 3] {
        [g.box_len(AxisKind::T), g.box_len(AxisKind::X), g.box_len(AxisKind::V)]
    }

    fn packet(g: &Arc<GridSpec>) -> Field {
        let mut d = SpectralData::single_mode(1, boxes(g), Mode {
            t: 1,
            x: [2, 0],
            v: [3, 0],
            coef: Complex64::new(0.4, -0.2),
        });
        d.window = Some(1.5);
        d.sample(g).unwrap()
    }

    #[test]
    fn alpha_zero_collapses_to_identity() {
        let g = grid();
        let pair = VerifiedPair::manufactured(&packet(&g), &ModelParams::transport_only()).unwrap();
        let c = Check::PropBouchut { alpha: 0.0 }.evaluate(&pair).unwrap();
        assert_eq!(c.ratio, 1.0);
    }

    #[test]
    fn zero_pair_is_vacuous() {
        let g = grid();
        let z = Field::zeros(g.clone(), Layout::Full, Rep::Physical);
        for c in [
            check_step1(&z, &z, 0.5).unwrap(),
            check_step2(&z, &z, 0.5).unwrap(),
            check_step3(&z, &z, 0.5).unwrap(),
            check_theorem(&z, &z, &ModelParams::constant(1.0)).unwrap(),
        ] {
            assert!(c.vacuous && c.valid && c.ratio == 0.0);
        }
    }

    #[test]
    fn residual_gate_rejects_non_solutions() {
        let g = grid();
        let f = packet(&g);
        let c = check_step1(&f, &f, 0.5).unwrap();
        assert!(!c.valid);
        assert!(!c.is_sound());
    }

    #[test]
    fn single_mode_closed_form() {
        // a (τ, ξ) mode with k = 0 has g = (iτ + |ξ|^{2β}) f
        let g = grid();
        let (tau, xi, beta) = (1.0, 0.75, 0.5);
        let f = Field::from_fn(g.clone(), Layout::Full, |t, _, v| Complex64::from_polar(1.0, tau * t + xi * v[0]));
        let pair = VerifiedPair::manufactured(&f, &ModelParams::constant(beta)).unwrap();
        assert!(pair.is_valid());
        let gabs = Complex64::new(xi.powf(2.0 * beta), tau).norm();
        let c = Check::Step1 { beta }.evaluate(&pair).unwrap();
        let want = xi.powf(beta) / gabs.sqrt();
        assert!((c.ratio - want).abs() < 1e-12 * want);
        let c = Check::Thm1 { beta }.evaluate(&pair).unwrap();
        let want = xi.powf(2.0 * beta) / gabs;
        assert!((c.ratio - want).abs() < 1e-12 * want);
    }

    #[test]
    fn ratios_are_one_homogeneous() {
        let g = grid();
        let f = packet(&g);
        let coef = Arc::new(Coefficient::from_recipe(g.clone(), &CoefficientRecipe::default()).unwrap());
        let cases = [
            (Check::PropBouchut { alpha: 1.0 }, ModelParams::transport_only()),
            (Check::Step1 { beta: 0.5 }, ModelParams::constant(0.5)),
            (Check::Step2 { beta: 0.5 }, ModelParams::constant(0.5)),
            (Check::Step3 { beta: 0.5 }, ModelParams::constant(0.5)),
            (Check::Thm1 { beta: 0.5 }, ModelParams::constant(0.5)),
            (Check::Thm2 { beta: 0.5 }, ModelParams::variable(0.5, coef)),
        ];
        for (check, params) in cases {
            let a = check.evaluate(&VerifiedPair::manufactured(&f, &params).unwrap()).unwrap();
            let b = check
                .evaluate(&VerifiedPair::manufactured(&f.scaled(37.5), &params).unwrap())
                .unwrap();
            assert!(a.is_sound() && a.ratio > 0.0, "{}", check.name());
            assert!((a.ratio - b.ratio).abs() <= 1e-12 * a.ratio, "{}", check.name());
        }
    }

    #[test]
    fn mismatched_hypothesis_is_an_error() {
        let g = grid();
        let pair = VerifiedPair::manufactured(&packet(&g), &ModelParams::constant(0.5)).unwrap();
        assert!(Check::PropBouchut { alpha: 1.0 }.evaluate(&pair).is_err());
        assert!(Check::Thm2 { beta: 0.5 }.evaluate(&pair).is_err());
        assert!(Check::Step1 { beta: 0.25 }.evaluate(&pair).is_err());
    }
}
