//! The multiplier pairing of the constant-coefficient estimate: test the
//! equation against `P f` with `P` the anisotropic symbol.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ordered_sum;
use crate::grid::{AxisKind, Rep};
use crate::model::CoefficientModel;
use crate::norms::{frac_norm, gain_exponent, mixed_norm, CaseResult, VerifiedPair};
use crate::symbol::{apply_multiplier, apply_transport, MultiplierSpec, SymbolKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Step4Terms {
    /// `Re (Q f, P f)`
    pub lhs_pos: f64,
    /// `‖Q f‖ ‖P f‖`, the scale positivity is judged against.
    pub lhs_scale: f64,
    /// `−Re (v·∇x f, P f)`, with the transport applied in physical `v`.
    pub i_direct: f64,
    /// `−½ Σ (k·∇ξ P) |f̂|²` on the lattice.
    pub i_symbol: f64,
    /// `Re (g, P f)`
    pub ii: f64,
    /// `‖|Dv|^β |Dx|^{β/(1+2β)} f‖ ‖|Dx|^{2β/(1+2β)} f‖`
    pub i_bound: f64,
    /// `(‖|Dv|^{2β} f‖ + ‖|Dx|^{2β/(1+2β)} f‖) ‖g‖`
    pub ii_bound: f64,
    /// Set when the homogeneous symbol met data at `(k, ξ) = (0, 0)`.
    pub zero_mode_excluded: bool,
}

fn safe_ratio(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else {
        num / den
    }
}

impl Step4Terms {
    /// `LHSpos − I − II` relative to the largest term; zero up to rounding
    /// because the time derivative pairs to zero against `P f`.
    pub fn identity_defect(&self) -> f64 {
        let scale = self.lhs_pos.abs().max(self.i_direct.abs()).max(self.ii.abs());
        safe_ratio((self.lhs_pos - self.i_direct - self.ii).abs(), scale)
    }

    /// Mismatch between the direct and the symbol-derivative forms of `I`.
    pub fn i_mismatch(&self) -> f64 {
        let scale = self.i_direct.abs().max(self.i_symbol.abs());
        safe_ratio((self.i_direct - self.i_symbol).abs(), scale)
    }

    pub fn positivity(&self) -> f64 {
        safe_ratio(self.lhs_pos, self.lhs_scale)
    }

    pub fn i_ratio(&self) -> f64 {
        safe_ratio(self.i_direct.abs(), self.i_bound)
    }

    pub fn ii_ratio(&self) -> f64 {
        safe_ratio(self.ii.abs(), self.ii_bound)
    }

    pub fn i_case(&self) -> CaseResult {
        CaseResult::new(self.i_direct.abs(), self.i_bound).with_terms(&[
            ("i_symbol", self.i_symbol),
            ("i_mismatch", self.i_mismatch()),
        ])
    }

    pub fn ii_case(&self) -> CaseResult {
        CaseResult::new(self.ii.abs(), self.ii_bound).with_terms(&[
            ("lhs_pos", self.lhs_pos),
            ("identity_defect", self.identity_defect()),
        ])
    }
}

/// All the Step-4 quantities for a pair solving the constant-coefficient
/// equation. `symbol` must be one of the anisotropic kinds with the
/// pair's `β`.
pub fn step4_terms(pair: &VerifiedPair, symbol: &MultiplierSpec) -> Result<Step4Terms> {
    symbol.validate()?;
    if symbol.kind == SymbolKind::FracV {
        return Err(Error::param("symbol", "the pairing needs an anisotropic multiplier"));
    }
    let beta = pair.params.beta;
    if (symbol.beta - beta).abs() > 1e-15 {
        return Err(Error::param("symbol", "its beta must match the pair"));
    }
    let a = match pair.params.coefficient {
        CoefficientModel::Constant(a) => a,
        CoefficientModel::Variable(_) => {
            return Err(Error::param("pair", "the pairing identity needs a constant coefficient"))
        }
    };
    if !pair.is_valid() {
        return Err(Error::param("pair", "the residual gate was not passed"));
    }
    let all = [AxisKind::T, AxisKind::X, AxisKind::V];
    let f = pair.f.with_rep(&all, Rep::Frequency);
    let g = pair.g.with_rep(&all, Rep::Frequency);
    let grid = f.grid().clone();

    let pf = apply_multiplier(&f, symbol)?;
    let mut qf = apply_multiplier(&f, &MultiplierSpec::frac_v(beta))?;
    qf.scale(Complex64::new(a, 0.0));
    let lhs_pos = qf.inner(&pf)?.re;
    let lhs_scale = qf.norm() * pf.norm();

    let mut tf = apply_transport(&f.with_rep(&[AxisKind::V], Rep::Physical))?;
    tf.set_rep(&[AxisKind::V], Rep::Frequency);
    let i_direct = -tf.inner(&pf)?.re;
    let ii = g.inner(&pf)?.re;

    // k·∇ξ P on the lattice; the homogeneous symbol is singular only at the
    // origin, where the k factor kills it anyway
    let homogeneous = symbol.kind == SymbolKind::Aniso;
    let weights = grid.phase_map(Rep::Frequency, Rep::Frequency, |k, xi| {
        let at_origin = k.iter().chain(xi).all(|&z| z == 0.0);
        if homogeneous && at_origin {
            None
        } else {
            Some(symbol.xi_derivative_along(k, xi))
        }
    });
    let p = grid.phase_len();
    let mut zero_mode_excluded = false;
    for (i, z) in f.data().iter().enumerate() {
        if weights[i % p].is_none() && z.norm_sqr() > 0.0 {
            zero_mode_excluded = true;
            break;
        }
    }
    let i_symbol = -0.5
        * f.cell_volume()
        * ordered_sum(f.data(), |i, z| weights[i % p].unwrap_or(0.0) * z.norm_sqr());

    let gain = gain_exponent(beta);
    let dx_gain = frac_norm(&f, gain, AxisKind::X)?;
    let i_bound = mixed_norm(&f, 0.5 * gain, beta)? * dx_gain;
    let ii_bound = (frac_norm(&f, 2.0 * beta, AxisKind::V)? + dx_gain) * g.norm();

    Ok(Step4Terms {
        lhs_pos,
        lhs_scale,
        i_direct,
        i_symbol,
        ii,
        i_bound,
        ii_bound,
        zero_mode_excluded,
    })
}
