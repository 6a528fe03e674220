//! Fractional Sobolev norms and the inequality checkers built on them.

pub mod checks;
pub mod corpus;
pub mod fit;

pub mod report;

pub use checks::{
    check_prop_bouchut, check_step1, check_step2, check_step3, check_theorem, Check, VerifiedPair, RESIDUAL_GATE,
};
pub use corpus::{Corpus, CorpusKind, CorpusSpec};
pub use fit::{fit_scaling_exponent, AxisSpectrum, FamilyMember, FamilySpec, FiberFamily, FitResult};

pub use report::{CaseResult, EstimateReport};

use crate::error::{Error, Result};
use crate::field::{ordered_sum, Field};
use crate::grid::{AxisKind, Layout, Rep};

/// `2β/(1+2β)`, the `x` regularity gained by the kinetic equation.
pub fn gain_exponent(beta: f64) -> f64 {
    2.0 * beta / (1.0 + 2.0 * beta)
}

fn magnitude(c: &[f64]) -> f64 {
    c.iter().map(|z| z * z).sum::<f64>().sqrt()
}

/// `‖ w · f ‖` for a weight given per time slot and per phase-space slot.
fn weighted_norm(field: &Field, time_w: Option<&[f64]>, phase_w: Option<&[f64]>) -> f64 {
    let p = field.grid().phase_len();
    let sum = ordered_sum(field.data(), |idx, z| {
        let mut w = 1.0;
        if let Some(tw) = time_w {
            w *= tw[idx / p];
        }
        if let Some(pw) = phase_w {
            w *= pw[idx % p];
        }
        w * w * z.norm_sqr()
    });
    (field.cell_volume() * sum).sqrt()
}

/// `‖ |D_axis|^s f ‖`: the `L²` norm of `|freq|^s f̂` over the whole grid.
/// The field must be in the frequency representation on `axis`.
pub fn frac_norm(field: &Field, s: f64, axis: AxisKind) -> Result<f64> {
    if !(s >= 0.0 && s.is_finite()) {
        return Err(Error::param("s", format!("{s} must be finite and >= 0")));
    }
    if axis == AxisKind::T && field.layout() != Layout::Full {
        return Err(Error::Representation("a phase-space field has no time axis".into()));
    }
    field.require_rep(axis, Rep::Frequency)?;
    if s == 0.0 {
        return Ok(field.norm());
    }
    let grid = field.grid();
    match axis {
        AxisKind::T => {
            let w: Vec<f64> = grid.freqs(AxisKind::T).iter().map(|tau| tau.abs().powf(s)).collect();
            Ok(weighted_norm(field, Some(&w), None))
        }
        AxisKind::X | AxisKind::V => {
            let xr = field.kind_rep(AxisKind::X).expect("phase axes");
            let vr = field.kind_rep(AxisKind::V).expect("phase axes");
            let w = grid.phase_map(xr, vr, |x, v| match axis {
                AxisKind::X => magnitude(x).powf(s),
                _ => magnitude(v).powf(s),
            });
            Ok(weighted_norm(field, None, Some(&w)))
        }
    }
}

/// `‖ |D_v|^{sv} |D_x|^{sx} f ‖`; both phase axes must be frequency-represented.
pub fn mixed_norm(field: &Field, sx: f64, sv: f64) -> Result<f64> {
    if !(sx >= 0.0 && sv >= 0.0 && sx.is_finite() && sv.is_finite()) {
        return Err(Error::param("s", "mixed exponents must be finite and >= 0"));
    }
    field.require_rep(AxisKind::X, Rep::Frequency)?;
    field.require_rep(AxisKind::V, Rep::Frequency)?;
    let w = field
        .grid()
        .phase_map(Rep::Frequency, Rep::Frequency, |k, xi| {
            magnitude(k).powf(sx) * magnitude(xi).powf(sv)
        });
    Ok(weighted_norm(field, None, Some(&w)))
}

/// `‖ w(k, ξ) f̂ ‖` for a real symbol on the phase-space frequency lattice.
pub fn symbol_norm<F>(field: &Field, w: F) -> Result<f64>
where
    F: Fn(&[f64], &[f64]) -> f64 + Sync,
{
    field.require_rep(AxisKind::X, Rep::Frequency)?;
    field.require_rep(AxisKind::V, Rep::Frequency)?;
    let lattice = field.grid().phase_map(Rep::Frequency, Rep::Frequency, w);
    Ok(weighted_norm(field, None, Some(&lattice)))
}
