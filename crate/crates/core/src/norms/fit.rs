//! Empirical sharpness of the `x` gain exponent.
//!
//! For each scale `Λ` the data lives on a single `x` Fourier mode `|k| = Λ`
//! (an `x` box of length `2π/Λ`). The source is a time-independent Gaussian
//! in `v`. The solution from zero data is computed with the Duhamel oracle,
//! and norms are taken over the second half of the time window, where the
//! solution has settled. A dictionary of source widths is tried per scale
//! and the largest `‖f‖/‖g‖` is kept. The fitted exponent is the largest
//! `s` for which `Λ^s ‖f‖/‖g‖` does not grow faster than `Λ^{slope_tol}`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::report::{CaseResult, EstimateReport};
use super::gain_exponent;
use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::{AxisKind, GridSpec, Layout, Rep};
use crate::model::DuhamelOracle;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub beta: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub count: usize,
    /// Source widths in `ξ` are `√Λ · 2^j` for `|j| <= dictionary`.
    pub dictionary: i32,
    pub s_step: f64,
    pub s_max: f64,
    pub slope_tol: f64,
}

impl FamilySpec {
    pub fn new(beta: f64) -> Self {
        FamilySpec {
            beta,
            lambda_min: 1.0,
            lambda_max: 10f64.powf(2.5),
            count: 6,
            dictionary: 3,
            s_step: 0.005,
            s_max: 1.5,
            slope_tol: 0.02,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::param("beta", format!("{} is outside (0, 1]", self.beta)));
        }
        if !(self.lambda_min > 0.0 && self.lambda_max > self.lambda_min) {
            return Err(Error::param("family_min", "need 0 < family_min < family_max"));
        }
        if self.count < 5 {
            return Err(Error::param("family_count", format!("{} scales; at least 5 are needed", self.count)));
        }
        if !(self.s_step > 0.0 && self.s_max > 0.0) {
            return Err(Error::param("s_grid_step", "must be > 0"));
        }
        Ok(())
    }

    pub fn lambdas(&self) -> Vec<f64> {
        let r = (self.lambda_max / self.lambda_min).ln();
        (0..self.count)
            .map(|i| self.lambda_min * (r * i as f64 / (self.count - 1) as f64).exp())
            .collect()
    }
}

/// Energy of a field binned by `|freq|` along one axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisSpectrum {
    /// `(|freq|, ∫|f̂|²)` pairs, sorted by frequency.
    pub bins: Vec<(f64, f64)>,
}

impl AxisSpectrum {
    /// Spectrum along `axis` (x or v) restricted to the time slots in
    /// `slots`. The field must be phase-frequency-represented.
    pub fn of(field: &Field, axis: AxisKind, slots: std::ops::Range<usize>) -> Result<Self> {
        if axis == AxisKind::T || field.layout() != Layout::Full {
            return Err(Error::Representation("spectra are taken along x or v of a (t, x, v) field".into()));
        }
        field.require_rep(axis, Rep::Frequency)?;
        let grid = field.grid();
        let xr = field.kind_rep(AxisKind::X).expect("phase axes");
        let vr = field.kind_rep(AxisKind::V).expect("phase axes");
        let mags = grid.phase_map(xr, vr, |x, v| {
            let c = if axis == AxisKind::X { x } else { v };
            c.iter().map(|z| z * z).sum::<f64>().sqrt()
        });
        let p = grid.phase_len();
        let vol = field.cell_volume();
        let mut bins: Vec<(f64, f64)> = Vec::new();
        for (i, &m) in mags.iter().enumerate() {
            let e: f64 = slots.clone().map(|j| field.data()[j * p + i].norm_sqr()).sum::<f64>() * vol;
            match bins.iter_mut().find(|b| (b.0 - m).abs() <= 1e-12 * m.max(1.0)) {
                Some(b) => b.1 += e,
                None => bins.push((m, e)),
            }
        }
        bins.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(AxisSpectrum { bins })
    }

    /// `‖|D|^s f‖` over the same slots.
    pub fn frac_norm(&self, s: f64) -> f64 {
        self.bins
            .iter()
            .map(|(m, e)| if s == 0.0 { *e } else { m.powf(2.0 * s) * e })
            .sum::<f64>()
            .sqrt()
    }
}

/// One scale of the family after reduction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyMember {
    pub scale: f64,
    pub f_spectrum: AxisSpectrum,
    pub g_norm: f64,
    /// Width of the winning dictionary source.
    pub width: f64,
}

/// Builds the single-mode family with the Duhamel oracle.
#[derive(Debug, Clone, Copy)]
pub struct FiberFamily {
    pub spec: FamilySpec,
}

/// A solved fiber problem: `(‖f‖ spectrum, ‖g‖)` over the second half of
/// the window.
fn solve_fiber(beta: f64, lambda: f64, width: f64) -> Result<(AxisSpectrum, f64)> {
    // ξ scale on which the symbol balances the shear; sizes the grid only
    let ell = lambda.powf(1.0 / (1.0 + 2.0 * beta));
    let dxi = (0.25 * width).min(0.25 * ell);
    // distance along ξ after which the decay factor is below e^{-18}
    let tail = ell * (18.0 * (1.0 + 2.0 * beta)).powf(1.0 / (1.0 + 2.0 * beta));
    let reach = 6.0 * width + tail;
    let nv = 2 * (reach / dxi).ceil() as usize;
    let dt = dxi / lambda;
    let nt = 2 * ((12.0 * width + tail) / dxi).ceil() as usize;
    let lv = 2.0 * PI / dxi;
    let lx = 2.0 * PI / lambda;
    let grid = Arc::new(GridSpec::new(1, nt, 4, nv, nt as f64 * dt, lx, lv)?);
    let centre = 0.5 * lv;
    let g = Field::from_fn(grid.clone(), Layout::Full, |_, x, v| {
        let r = (v[0] - centre) * width;
        Complex64::from_polar((-0.5 * r * r).exp(), lambda * x[0])
    });
    let f = DuhamelOracle::new(beta).solve(&g, None)?;
    let half = nt / 2..nt;
    let gh = g.with_rep(&[AxisKind::X, AxisKind::V], Rep::Frequency);
    let g_norm = AxisSpectrum::of(&gh, AxisKind::X, half.clone())?.frac_norm(0.0);
    Ok((AxisSpectrum::of(&f, AxisKind::X, half)?, g_norm))
}

impl FiberFamily {
    pub fn new(spec: FamilySpec) -> Result<Self> {
        spec.validate()?;
        Ok(FiberFamily { spec })
    }

    pub fn widths(&self, lambda: f64) -> Vec<f64> {
        (-self.spec.dictionary..=self.spec.dictionary)
            .map(|j| lambda.sqrt() * 2f64.powi(j))
            .collect()
    }

    pub fn build(&self) -> Result<Vec<FamilyMember>> {
        self.spec
            .lambdas()
            .into_iter()
            .map(|lambda| {
                let mut best: Option<FamilyMember> = None;
                for w in self.widths(lambda) {
                    let (fs, gn) = solve_fiber(self.spec.beta, lambda, w)?;
                    let ratio = fs.frac_norm(0.0) / gn;
                    if best.as_ref().is_none_or(|b| ratio > b.f_spectrum.frac_norm(0.0) / b.g_norm) {
                        best = Some(FamilyMember {
                            scale: lambda,
                            f_spectrum: fs,
                            g_norm: gn,
                            width: w,
                        });
                    }
                }
                Ok(best.expect("nonempty dictionary"))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub s_hat: f64,
    pub half_width: f64,
    pub scales: Vec<f64>,
    /// `‖f‖/‖g‖` per scale.
    pub base_ratios: Vec<f64>,
    pub members: Vec<FamilyMember>,
}

fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

impl FitResult {
    /// `‖|Dx|^s f‖ / ‖g‖` per scale.
    pub fn ratios(&self, s: f64) -> Vec<f64> {
        self.members
            .iter()
            .map(|m| m.f_spectrum.frac_norm(s) / m.g_norm)
            .collect()
    }

    /// Last ratio over first ratio at order `s`.
    pub fn growth(&self, s: f64) -> f64 {
        let r = self.ratios(s);
        r[r.len() - 1] / r[0]
    }

    pub fn slope(&self, s: f64) -> f64 {
        loglog_slope(&self.scales, &self.ratios(s))
    }

    /// Report with one case per scale at the fitted order, passing when
    /// `ŝ` is within `tol` of `2β/(1+2β)`.
    pub fn report(&self, beta: f64, tol: f64) -> EstimateReport {
        let cases = self
            .members
            .iter()
            .map(|m| {
                CaseResult::new(m.f_spectrum.frac_norm(self.s_hat), m.g_norm)
                    .with_terms(&[("scale", m.scale), ("width", m.width)])
            })
            .collect();
        let mut r = EstimateReport::from_cases("exponent-fit", cases);
        r.fitted_exponent = Some(self.s_hat);
        r.half_width = Some(self.half_width);
        r.tolerance = Some(tol);
        r.passed = r.passed && (self.s_hat - gain_exponent(beta)).abs() <= tol;
        r
    }
}

/// Largest `s` on the grid `0, step, 2·step, ..` up to `s_max` whose ratio
/// sequence has log-log slope at most `slope_tol`.
pub fn fit_scaling_exponent(members: Vec<FamilyMember>, s_step: f64, s_max: f64, slope_tol: f64) -> Result<FitResult> {
    if members.len() < 5 {
        return Err(Error::param("family_count", format!("{} scales; at least 5 are needed", members.len())));
    }
    let mut fit = FitResult {
        s_hat: f64::NAN,
        half_width: 0.5 * s_step,
        scales: members.iter().map(|m| m.scale).collect(),
        base_ratios: members.iter().map(|m| m.f_spectrum.frac_norm(0.0) / m.g_norm).collect(),
        members,
    };
    let steps = (s_max / s_step).round() as usize;
    let mut best = None;
    for i in 0..=steps {
        let s = i as f64 * s_step;
        if fit.slope(s) <= slope_tol {
            best = Some(s);
        }
    }
    fit.s_hat = best.ok_or_else(|| Error::param("slope_tol", "no order on the grid meets the slope tolerance"))?;
    Ok(fit)
}

impl FiberFamily {
    pub fn fit(&self) -> Result<FitResult> {
        fit_scaling_exponent(self.build()?, self.spec.s_step, self.spec.s_max, self.spec.slope_tol)
    }
}
