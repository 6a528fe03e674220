//! The residual operator `L f = ∂t f + v·∇x f + a Q f`, applied spectrally.

use num_complex::Complex64;

use super::{CoefficientModel, ModelParams};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::{AxisKind, GridSpec, Layout, Rep};
use crate::symbol::{apply_multiplier, apply_transport, MultiplierSpec};

/// Top-third energy fraction above which the aliasing warning is raised.
pub const BAND_WARNING_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct Manufactured {
    pub g: Field,
    pub top_third_fraction: f64,
    pub band_warning: bool,
}

fn check_time_coefficient(params: &ModelParams, grid: &GridSpec) -> Result<()> {
    if let CoefficientModel::Variable(c) = &params.coefficient {
        if **c.grid() != *grid {
            return Err(Error::GridMismatch("coefficient sampled on another grid".into()));
        }
    }
    Ok(())
}

/// `L f` in the physical representation.
fn apply_operator(f: &Field, params: &ModelParams) -> Result<Field> {
    params.validate()?;
    if f.layout() != Layout::Full {
        return Err(Error::Representation("the model operator needs a (t, x, v) field".into()));
    }
    let grid = f.grid().clone();
    check_time_coefficient(params, &grid)?;

    // ∂t f
    let mut out = f.with_rep(&[AxisKind::T], Rep::Frequency);
    let taus: Vec<Complex64> = grid
        .freqs(AxisKind::T)
        .into_iter()
        .map(|tau| Complex64::new(0.0, tau))
        .collect();
    out.mul_time(&taus);
    out.set_rep(&[AxisKind::T, AxisKind::X, AxisKind::V], Rep::Physical);

    // v·∇x f
    let mut mixed = f.with_rep(&[AxisKind::X], Rep::Frequency);
    mixed.set_rep(&[AxisKind::V], Rep::Physical);
    let mut transport = apply_transport(&mixed)?;
    transport.set_rep(&[AxisKind::T, AxisKind::X, AxisKind::V], Rep::Physical);
    out.axpy(Complex64::new(1.0, 0.0), &transport)?;

    // a Q f
    if !params.is_transport_only() {
        let fv = f.with_rep(&[AxisKind::V], Rep::Frequency);
        let mut q = apply_multiplier(&fv, &MultiplierSpec::frac_v(params.beta))?;
        q.set_rep(&[AxisKind::T, AxisKind::X, AxisKind::V], Rep::Physical);
        match &params.coefficient {
            CoefficientModel::Constant(a) => q.scale(Complex64::new(*a, 0.0)),
            CoefficientModel::Variable(c) => {
                let p = grid.phase_len();
                q.data_mut().chunks_mut(p).enumerate().for_each(|(j, slice)| {
                    for (z, a) in slice.iter_mut().zip(c.slice(j)) {
                        *z *= a;
                    }
                });
                if params.dealias {
                    q.dealias();
                }
            }
        }
        out.axpy(Complex64::new(1.0, 0.0), &q)?;
    }
    Ok(out)
}

/// `g = ∂t f + v·∇x f + a|Dv|^{2β} f`, returned in the representation of `f`.
/// The band warning is raised when the top third of some frequency axis of
/// `f` carries more than [`BAND_WARNING_THRESHOLD`] of its energy.
pub fn manufactured_rhs(f: &Field, params: &ModelParams) -> Result<Manufactured> {
    let mut g = apply_operator(f, params)?;
    for (axis, rep) in f.axes().into_iter().zip(f.reps().to_vec()) {
        if rep == Rep::Frequency {
            g.transform_in_place(&[axis], crate::field::Direction::Forward)?;
        }
    }
    let top = f.top_third_energy_fraction();
    Ok(Manufactured {
        g,
        top_third_fraction: top,
        band_warning: top > BAND_WARNING_THRESHOLD,
    })
}

/// `‖L f − g‖ / max(‖g‖, ‖f‖)`; zero when both vanish.
pub fn check_residual(f: &Field, g: &Field, params: &ModelParams) -> Result<f64> {
    if f.layout() != g.layout() || **f.grid() != **g.grid() {
        return Err(Error::GridMismatch("f and g live on different grids".into()));
    }
    let lf = apply_operator(f, params)?;
    let gp = g.with_rep(&g.all_kinds(), Rep::Physical);
    let r = lf.sub(&gp)?.norm();
    let scale = g.norm().max(f.norm());
    Ok(if scale == 0.0 { 0.0 } else { r / scale })
}
