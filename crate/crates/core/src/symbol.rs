//! Fourier multipliers on the `(k, ξ)` lattice and the spectral transport
//! operator.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::{AxisKind, GridSpec, Rep};

/// Symbol family of a multiplier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymbolKind {
    /// `|ξ|^{2β}`
    FracV,
    /// `(|ξ|² + |k|^{2/(1+2β)})^β`
    Aniso,
    /// `(δ + |ξ|² + <k>^{2/(1+2β)})^β` with `<k> = (1+|k|²)^{1/2}`
    BracketAniso,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiplierSpec {
    pub kind: SymbolKind,
    pub beta: f64,
    /// Regularization, read by [`SymbolKind::BracketAniso`] only.
    pub delta: f64,
}

impl MultiplierSpec {
    pub fn frac_v(beta: f64) -> Self {
        MultiplierSpec {
            kind: SymbolKind::FracV,
            beta,
            delta: 0.0,
        }
    }

    pub fn aniso(beta: f64) -> Self {
        MultiplierSpec {
            kind: SymbolKind::Aniso,
            beta,
            delta: 0.0,
        }
    }

    pub fn bracket(beta: f64, delta: f64) -> Self {
        MultiplierSpec {
            kind: SymbolKind::BracketAniso,
            beta,
            delta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::param("beta", format!("{} is outside (0, 1]", self.beta)));
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(Error::param("delta", format!("{} must be >= 0", self.delta)));
        }
        Ok(())
    }

    /// Whether the symbol depends on the `x` frequency.
    pub fn reads_k(&self) -> bool {
        self.kind != SymbolKind::FracV
    }

    /// Symbol value at one lattice point.
    #[inline]
    pub fn value(&self, k: &[f64], xi: &[f64]) -> f64 {
        let b = self.beta;
        let xi2: f64 = xi.iter().map(|z| z * z).sum();
        match self.kind {
            SymbolKind::FracV => xi2.powf(b),
            SymbolKind::Aniso => {
                let k2: f64 = k.iter().map(|z| z * z).sum();
                (xi2 + k2.powf(1.0 / (1.0 + 2.0 * b))).powf(b)
            }
            SymbolKind::BracketAniso => {
                let k2: f64 = k.iter().map(|z| z * z).sum();
                (self.delta + xi2 + (1.0 + k2).powf(1.0 / (1.0 + 2.0 * b))).powf(b)
            }
        }
    }

    /// `ξ`-gradient of the symbol dotted with `k`.
    pub fn xi_derivative_along(&self, k: &[f64], xi: &[f64]) -> f64 {
        let b = self.beta;
        let xi2: f64 = xi.iter().map(|z| z * z).sum();
        let dot: f64 = xi.iter().zip(k).map(|(a, c)| a * c).sum();
        let base = match self.kind {
            SymbolKind::FracV => xi2,
            SymbolKind::Aniso => {
                let k2: f64 = k.iter().map(|z| z * z).sum();
                xi2 + k2.powf(1.0 / (1.0 + 2.0 * b))
            }
            SymbolKind::BracketAniso => {
                let k2: f64 = k.iter().map(|z| z * z).sum();
                self.delta + xi2 + (1.0 + k2).powf(1.0 / (1.0 + 2.0 * b))
            }
        };
        2.0 * b * dot * base.powf(b - 1.0)
    }
}

/// Symbol values on the phase-space frequency lattice of a grid, in the
/// row-major `(k.., ξ..)` order of one time slice.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolLattice {
    pub values: Vec<f64>,
}

pub fn eval_symbol(spec: &MultiplierSpec, grid: &GridSpec) -> Result<SymbolLattice> {
    spec.validate()?;
    let values = grid.phase_map(Rep::Frequency, Rep::Frequency, |k, xi| spec.value(k, xi));
    Ok(SymbolLattice { values })
}

/// Pointwise product with the symbol; representation unchanged.
pub fn apply_multiplier(field: &Field, spec: &MultiplierSpec) -> Result<Field> {
    field.require_rep(AxisKind::V, Rep::Frequency)?;
    if spec.reads_k() {
        field.require_rep(AxisKind::X, Rep::Frequency)?;
    }
    let lattice = eval_symbol(spec, field.grid())?;
    let mut out = field.clone();
    out.mul_phase(&lattice.values);
    Ok(out)
}

/// Applies an arbitrary real symbol `w(k, ξ)`; both `x` and `v` must be in
/// the frequency representation.
pub fn apply_symbol_fn<F>(field: &Field, w: F) -> Result<Field>
where
    F: Fn(&[f64], &[f64]) -> f64 + Sync,
{
    field.require_rep(AxisKind::X, Rep::Frequency)?;
    field.require_rep(AxisKind::V, Rep::Frequency)?;
    let lattice = field.grid().phase_map(Rep::Frequency, Rep::Frequency, w);
    let mut out = field.clone();
    out.mul_phase(&lattice);
    Ok(out)
}

/// `v·∇_x f`, evaluated as the diagonal product `i k·v` in the mixed
/// representation (`x` frequency, `v` physical).
pub fn apply_transport(field: &Field) -> Result<Field> {
    field.require_rep(AxisKind::X, Rep::Frequency)?;
    field.require_rep(AxisKind::V, Rep::Physical)?;
    let factor = transport_lattice(field.grid());
    let mut out = field.clone();
    out.mul_phase(&factor);
    Ok(out)
}

/// `i k·v` on the mixed lattice.
pub fn transport_lattice(grid: &GridSpec) -> Vec<Complex64> {
    grid.phase_map(Rep::Frequency, Rep::Physical, |k, v| {
        let kv: f64 = k.iter().zip(v).map(|(a, b)| a * b).sum();
        Complex64::new(0.0, kv)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Direction;
    use crate::grid::{Axis, Layout};
    use std::f64::consts::PI;
    use std::sync::Arc;

    #[test]
    fn symbol_point_values() {
        assert!((MultiplierSpec::frac_v(0.5).value(&[0.0], &[3.0]) - 3.0).abs() < 1e-14);
        for beta in [0.1, 0.5, 1.0] {
            assert_eq!(MultiplierSpec::frac_v(beta).value(&[2.0], &[0.0]), 0.0);
        }
        assert!((MultiplierSpec::aniso(1.0).value(&[0.0], &[2.0]) - 4.0).abs() < 1e-14);
        let br = MultiplierSpec::bracket(0.5, 0.2);
        assert!(br.value(&[0.0], &[0.0]) >= 0.2_f64.powf(0.5));
    }

    #[test]
    fn pure_mode_is_eigenfunction() {
        let g = Arc::new(GridSpec::new(1, 4, 8, 16, 2.0 * PI, 2.0 * PI, 2.0 * PI).unwrap());
        let xi0 = 3.0;
        let beta = 0.3;
        let f = Field::from_fn(g.clone(), Layout::Full, |_, _, v| Complex64::from_polar(1.0, xi0 * v[0]));
        let fh = f.transform(&[Axis::V(0)], Direction::Forward).unwrap();
        let qf = apply_multiplier(&fh, &MultiplierSpec::frac_v(beta))
            .unwrap()
            .transform(&[Axis::V(0)], Direction::Inverse)
            .unwrap();
        let want = f.scaled(xi0.powf(2.0 * beta));
        assert!(qf.sub(&want).unwrap().norm() < 1e-12 * want.norm());
    }

    #[test]
    fn requires_frequency_axes() {
        let g = Arc::new(GridSpec::new(1, 4, 8, 8, 1.0, 1.0, 1.0).unwrap());
        let f = Field::zeros(g, Layout::Full, Rep::Physical);
        assert!(apply_multiplier(&f, &MultiplierSpec::frac_v(0.5)).is_err());
        let fv = f.with_rep(&[AxisKind::V], Rep::Frequency);
        assert!(apply_multiplier(&fv, &MultiplierSpec::aniso(0.5)).is_err());
        assert!(apply_multiplier(&fv, &MultiplierSpec::frac_v(0.5)).is_ok());
    }

    #[test]
    fn rejects_beta_out_of_range() {
        let g = GridSpec::new(1, 4, 4, 4, 1.0, 1.0, 1.0).unwrap();
        assert!(eval_symbol(&MultiplierSpec::frac_v(0.0), &g).is_err());
        assert!(eval_symbol(&MultiplierSpec::frac_v(1.5), &g).is_err());
    }

    #[test]
    fn derivative_matches_finite_difference() {
        for spec in [MultiplierSpec::aniso(0.4), MultiplierSpec::bracket(0.7, 0.1)] {
            let k = [1.3, -0.4];
            let xi = [0.8, 2.1];
            let h = 1e-6;
            let plus = [xi[0] + h * k[0], xi[1] + h * k[1]];
            let minus = [xi[0] - h * k[0], xi[1] - h * k[1]];
            let fd = (spec.value(&k, &plus) - spec.value(&k, &minus)) / (2.0 * h);
            assert!((fd - spec.xi_derivative_along(&k, &xi)).abs() < 1e-6);
        }
    }
}
