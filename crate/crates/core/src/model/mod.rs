//! The kinetic model `∂t f + v·∇x f + a |Dv|^{2β} f = g`: coefficients,
//! the residual operator, the Fourier-side Duhamel oracle and the
//! split-step solver.

pub mod coefficient;
pub mod operator;
pub mod oracle;
pub mod stepper;

use std::sync::Arc;

pub use coefficient::{bump, ChiPower, Coefficient, CoefficientRecipe};
pub use operator::{check_residual, manufactured_rhs, Manufactured, BAND_WARNING_THRESHOLD};
pub use oracle::{step_exponent, DuhamelOracle};
pub use stepper::{solve_cauchy, step_strang, CauchyProblem, SolveOptions, Stepper, Trajectory};

use crate::error::{Error, Result};

/// The diffusion coefficient in front of `|Dv|^{2β}`.
#[derive(Debug, Clone)]
pub enum CoefficientModel {
    /// `a ≡ c`; `c = 0` switches diffusion off.
    Constant(f64),
    Variable(Arc<Coefficient>),
}

#[derive(Debug, Clone)]
pub struct ModelParams {
    pub beta: f64,
    pub coefficient: CoefficientModel,
    /// Apply the 2/3 rule to the product `a·Qf`.
    pub dealias: bool,
}

impl ModelParams {
    /// Constant coefficient `a ≡ 1`.
    pub fn constant(beta: f64) -> Self {
        ModelParams::with_constant(beta, 1.0)
    }

    pub fn with_constant(beta: f64, a: f64) -> Self {
        ModelParams {
            beta,
            coefficient: CoefficientModel::Constant(a),
            dealias: false,
        }
    }

    pub fn variable(beta: f64, coefficient: Arc<Coefficient>) -> Self {
        ModelParams {
            beta,
            coefficient: CoefficientModel::Variable(coefficient),
            dealias: false,
        }
    }

    /// Free transport `∂t f + v·∇x f = g`.
    pub fn transport_only() -> Self {
        ModelParams::with_constant(1.0, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::param("beta", format!("{} is outside (0, 1]", self.beta)));
        }
        if let CoefficientModel::Constant(a) = self.coefficient {
            if !(a >= 0.0 && a.is_finite()) {
                return Err(Error::param("a", format!("{a} must be finite and >= 0")));
            }
        }
        Ok(())
    }

    pub fn is_transport_only(&self) -> bool {
        matches!(self.coefficient, CoefficientModel::Constant(a) if a == 0.0)
    }
}
