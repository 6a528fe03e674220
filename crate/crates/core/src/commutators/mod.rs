//! Commutators of a smooth modifier `bχ` with the Fourier multipliers `Q`
//! and `P`, acting on phase-space fields.
//!
//! The convention throughout is `M(bχ f) − bχ (M f)`.

pub mod kernel;
pub mod lemma;
pub mod schur;

pub use kernel::{kernel_bound_ratio, kernel_commutator_1d, hurwitz_zeta, KernelOptions, KernelQuadrature};
pub use lemma::{check_lemma, sobolev_norm, LemmaOptions};
pub use schur::{schur_row_bounds, SchurBounds};

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{RandomFieldSpec, SpectralData};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::{AxisKind, GridSpec, Layout, Rep};
use crate::model::{bump, BAND_WARNING_THRESHOLD};
use crate::norms::frac_norm;
use crate::symbol::{apply_multiplier, MultiplierSpec, SymbolKind};

/// A modifier defined independently of the grid, so that refinement
/// studies compare the same function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModifierSpec {
    Constant {
        value: f64,
    },
    /// `(b₀ + b₁ cos(2π j x₁/L_x) cos(2π l v₁/L_v)) χ(x, v)` with `χ` the
    /// product bump vanishing within `margin·L` of the edges.
    Bump {
        b_base: f64,
        b_amp: f64,
        x_mode: u32,
        v_mode: u32,
        margin: f64,
    },
    /// `b₀ + b₁ cos(2π j x₁/L_x) cos(2π l v₁/L_v)` without cutoff; a
    /// trigonometric polynomial, so products with band-limited data stay
    /// resolved.
    Trig {
        b_base: f64,
        b_amp: f64,
        x_mode: u32,
        v_mode: u32,
    },
}

impl ModifierSpec {
    pub fn bump(x_mode: u32, v_mode: u32) -> Self {
        ModifierSpec::Bump {
            b_base: 1.0,
            b_amp: 0.5,
            x_mode,
            v_mode,
            margin: 0.1,
        }
    }

    pub fn sample(&self, grid: &Arc<GridSpec>) -> Result<Field> {
        let (lx, lv) = (grid.box_len(AxisKind::X), grid.box_len(AxisKind::V));
        let wave = move |amp: f64, j: u32, l: u32, x: &[f64], v: &[f64]| {
            amp * (2.0 * PI * j as f64 * x[0] / lx).cos() * (2.0 * PI * l as f64 * v[0] / lv).cos()
        };
        let field = match *self {
            ModifierSpec::Constant { value } => {
                if !value.is_finite() {
                    return Err(Error::param("modifier", "must be finite"));
                }
                Field::from_fn(grid.clone(), Layout::Phase, |_, _, _| Complex64::new(value, 0.0))
            }
            ModifierSpec::Trig {
                b_base,
                b_amp,
                x_mode,
                v_mode,
            } => Field::from_fn(grid.clone(), Layout::Phase, |_, x, v| {
                Complex64::new(b_base + wave(b_amp, x_mode, v_mode, x, v), 0.0)
            }),
            ModifierSpec::Bump {
                b_base,
                b_amp,
                x_mode,
                v_mode,
                margin,
            } => {
                if !(0.0..0.5).contains(&margin) {
                    return Err(Error::param("margin", "must lie in [0, 0.5)"));
                }
                Field::from_fn(grid.clone(), Layout::Phase, |_, x, v| {
                    let mut chi = 1.0;
                    for &y in x {
                        chi *= bump((y - lx / 2.0) / (lx * (0.5 - margin)));
                    }
                    for &y in v {
                        chi *= bump((y - lv / 2.0) / (lv * (0.5 - margin)));
                    }
                    Complex64::new((b_base + wave(b_amp, x_mode, v_mode, x, v)) * chi, 0.0)
                })
            }
        };
        Ok(field)
    }
}

/// Norm the commutator is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weight {
    /// `‖f‖`
    Plain,
    /// `‖|Dv|^{β−1/2} f‖ + ‖f‖`
    Shifted,
    /// `‖|Dv|^{2β−1} f‖ + ‖f‖`, the order of the commutator itself.
    FullOrder,
}

impl Weight {
    /// Exponent on `|Dv|`, `None` for the plain weight.
    pub fn exponent(self, beta: f64) -> Option<f64> {
        match self {
            Weight::Plain => None,
            Weight::Shifted => Some(beta - 0.5),
            Weight::FullOrder => Some(2.0 * beta - 1.0),
        }
    }

    /// The weight the lemma asserts boundedness in.
    pub fn for_beta(beta: f64) -> Self {
        if beta <= 0.5 {
            Weight::Plain
        } else {
            Weight::Shifted
        }
    }
}

#[derive(Debug, Clone)]
pub struct CommutatorSpec {
    pub multiplier: MultiplierSpec,
    /// `bχ` on phase space, physical representation.
    pub modifier: Field,
}

impl CommutatorSpec {
    pub fn new(multiplier: MultiplierSpec, modifier: Field) -> Result<Self> {
        multiplier.validate()?;
        if modifier.layout() != Layout::Phase {
            return Err(Error::Representation("the modifier lives on phase space".into()));
        }
        let modifier = modifier.with_rep(&[AxisKind::X, AxisKind::V], Rep::Physical);
        let scale = modifier.max_abs().max(1.0);
        if modifier.data().iter().any(|z| z.im.abs() > 1e-12 * scale || !z.re.is_finite()) {
            return Err(Error::param("modifier", "must be real-valued"));
        }
        Ok(CommutatorSpec { multiplier, modifier })
    }

    pub fn from_modifier(multiplier: MultiplierSpec, modifier: &ModifierSpec, grid: &Arc<GridSpec>) -> Result<Self> {
        CommutatorSpec::new(multiplier, modifier.sample(grid)?)
    }

    pub fn grid(&self) -> &Arc<GridSpec> {
        self.modifier.grid()
    }

    pub fn beta(&self) -> f64 {
        self.multiplier.beta
    }

    /// `Q` rather than one of the anisotropic `P`.
    pub fn is_q(&self) -> bool {
        self.multiplier.kind == SymbolKind::FracV
    }

    /// `‖f‖` or `‖|Dv|^{β−1/2} f‖ + ‖f‖`.
    pub fn weight_norm(&self, f: &Field, weight: Weight) -> Result<f64> {
        match weight.exponent(self.beta()) {
            None => Ok(f.norm()),
            Some(s) if s < 0.0 => Err(Error::Unsupported("velocity weights need beta >= 1/2".into())),
            Some(s) => {
                let fv = f.with_rep(&[AxisKind::V], Rep::Frequency);
                Ok(frac_norm(&fv, s, AxisKind::V)? + f.norm())
            }
        }
    }

    /// `(1 + |ξ|^{2s})^{1/2}` on the frequency lattice, the quadratic
    /// minorant of a velocity weight; identically 1 for the plain one.
    pub(crate) fn weight_symbol(&self, weight: Weight) -> Vec<f64> {
        let s = weight.exponent(self.beta());
        self.grid().phase_map(Rep::Frequency, Rep::Frequency, |_, xi| match s {
            None => 1.0,
            Some(s) => {
                let m: f64 = xi.iter().map(|z| z * z).sum::<f64>().sqrt();
                (1.0 + m.powf(2.0 * s)).sqrt()
            }
        })
    }
}

/// Result of [`commutator_apply`].
#[derive(Debug, Clone)]
pub struct Applied {
    /// `M(bχ f) − bχ (M f)`, physical representation.
    pub value: Field,
    /// Top-third energy fraction of `bχ f`.
    pub top_third_fraction: f64,
    pub band_warning: bool,
}

fn apply_spectral(f: &Field, m: &MultiplierSpec) -> Result<Field> {
    let mut out = apply_multiplier(&f.with_rep(&[AxisKind::X, AxisKind::V], Rep::Frequency), m)?;
    out.set_rep(&[AxisKind::X, AxisKind::V], Rep::Physical);
    Ok(out)
}

fn times_modifier(spec: &CommutatorSpec, f: &Field) -> Field {
    let mut out = f.with_rep(&[AxisKind::X, AxisKind::V], Rep::Physical);
    out.mul_phase(spec.modifier.data());
    out
}

fn commutator(spec: &CommutatorSpec, f: &Field) -> Result<Field> {
    let bf = times_modifier(spec, f);
    let mbf = apply_spectral(&bf, &spec.multiplier)?;
    let bmf = times_modifier(spec, &apply_spectral(f, &spec.multiplier)?);
    mbf.sub(&bmf)
}

pub fn commutator_apply(spec: &CommutatorSpec, f: &Field) -> Result<Applied> {
    if f.layout() != Layout::Phase || **f.grid() != **spec.grid() {
        return Err(Error::GridMismatch("f must live on the modifier's phase space".into()));
    }
    let value = commutator(spec, f)?;
    let top = times_modifier(spec, f).top_third_energy_fraction();
    Ok(Applied {
        value,
        top_third_fraction: top,
        band_warning: top > BAND_WARNING_THRESHOLD,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpNormOptions {
    pub corpus_size: usize,
    pub seed: u64,
    /// Band of the corpus fields, in lattice indices; must fit every grid
    /// of a refinement study.
    pub band_x: i64,
    pub band_v: i64,
    pub decay_q: f64,
    pub max_iterations: usize,
    pub tol: f64,
}

impl Default for OpNormOptions {
    fn default() -> Self {
        OpNormOptions {
            corpus_size: 16,
            seed: 11,
            band_x: 3,
            band_v: 8,
            decay_q: 1.0,
            max_iterations: 100,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpNormEstimate {
    /// The larger of the two estimates.
    pub value: f64,
    pub corpus_max: f64,
    /// Weighted ratio on the final power-iteration vector.
    pub power_value: f64,
    pub iterations: usize,
    pub converged: bool,
    pub seed: u64,
}

fn ratio(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else {
        num / den
    }
}

fn unit_weight_inverse(f: &Field, s: &[f64]) -> Field {
    let mut out = f.with_rep(&[AxisKind::X, AxisKind::V], Rep::Frequency);
    let inv: Vec<f64> = s.iter().map(|w| 1.0 / w).collect();
    out.mul_phase(&inv);
    out.set_rep(&[AxisKind::X, AxisKind::V], Rep::Physical);
    out
}

/// `sup_f ‖[bχ, M] f‖ / weight(f)`, from below: the larger of a random
/// band-limited corpus and power iteration on `S⁻¹ A* A S⁻¹` with `S` the
/// quadratic minorant of the weight.
pub fn op_norm_estimate(spec: &CommutatorSpec, weight: Weight, opts: &OpNormOptions) -> Result<OpNormEstimate> {
    if weight.exponent(spec.beta()).is_some_and(|s| s < 0.0) {
        return Err(Error::Unsupported("velocity weights need beta >= 1/2".into()));
    }
    let grid = spec.grid().clone();
    let boxes = [grid.box_len(AxisKind::T), grid.box_len(AxisKind::X), grid.box_len(AxisKind::V)];
    let band = RandomFieldSpec {
        band_t: 0,
        band_x: opts.band_x,
        band_v: opts.band_v,
        decay_q: opts.decay_q,
        window: None,
    };
    let mut corpus_max: f64 = 0.0;
    for i in 0..opts.corpus_size {
        let f = SpectralData::random(grid.n(), boxes, &band, opts.seed + i as u64).sample_phase(&grid)?;
        let c = commutator(spec, &f)?;
        corpus_max = corpus_max.max(ratio(c.norm(), spec.weight_norm(&f, weight)?));
    }

    let s = spec.weight_symbol(weight);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let data = (0..grid.phase_len())
        .map(|_| Complex64::new(StandardNormal.sample(&mut rng), 0.0))
        .collect();
    let mut u = Field::from_data(grid.clone(), Layout::Phase, vec![Rep::Physical; 2 * grid.n()], data)?;
    u.scale(Complex64::new(1.0 / u.norm(), 0.0));
    let (mut lambda, mut iterations, mut converged) = (0.0, 0, false);
    while iterations < opts.max_iterations {
        iterations += 1;
        let a = commutator(spec, &unit_weight_inverse(&u, &s))?;
        // A* = −A for real bχ and a real even symbol
        let mut w = unit_weight_inverse(&commutator(spec, &a)?, &s);
        w.scale(Complex64::new(-1.0, 0.0));
        let next = w.inner(&u)?.re;
        let nw = w.norm();
        if nw == 0.0 {
            lambda = 0.0;
            converged = true;
            break;
        }
        w.scale(Complex64::new(1.0 / nw, 0.0));
        u = w;
        if (next - lambda).abs() <= opts.tol * next.abs() {
            lambda = next;
            converged = true;
            break;
        }
        lambda = next;
    }
    let f = unit_weight_inverse(&u, &s);
    let power_value = if lambda == 0.0 {
        0.0
    } else {
        ratio(commutator(spec, &f)?.norm(), spec.weight_norm(&f, weight)?)
    };
    Ok(OpNormEstimate {
        value: corpus_max.max(power_value),
        corpus_max,
        power_value,
        iterations,
        converged,
        seed: opts.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Mode;

    const LX: f64 = 2.0 * PI;
    const LV: f64 = 8.0 * PI;

    fn grid(nx: usize, nv: usize) -> Arc<GridSpec> {
        Arc::new(GridSpec::new(1, 4, nx, nv, 1.0, LX, LV).unwrap())
    }

    fn random_field(g: &Arc<GridSpec>, seed: u64) -> Field {
        let spec = RandomFieldSpec {
            band_t: 0,
            band_x: 3,
            band_v: 6,
            decay_q: 1.0,
            window: None,
        };
        SpectralData::random(1, [1.0, LX, LV], &spec, seed).sample_phase(g).unwrap()
    }

    fn multipliers(beta: f64) -> [MultiplierSpec; 3] {
        [
            MultiplierSpec::frac_v(beta),
            MultiplierSpec::aniso(beta),
            MultiplierSpec::bracket(beta, 1.0),
        ]
    }

    #[test]
    fn constant_modifier_commutes() {
        let g = grid(16, 64);
        let f = random_field(&g, 1);
        for m in multipliers(0.75) {
            let spec = CommutatorSpec::from_modifier(m, &ModifierSpec::Constant { value: 2.5 }, &g).unwrap();
            let c = commutator_apply(&spec, &f).unwrap();
            assert!(c.value.norm() <= 1e-12 * f.norm());
            let e = op_norm_estimate(&spec, Weight::Plain, &OpNormOptions::default()).unwrap();
            assert!(e.value <= 1e-10, "{}", e.value);
        }
    }

    #[test]
    fn two_mode_closed_form() {
        let g = grid(16, 64);
        let boxes = [1.0, LX, LV];
        let mode = |x: i64, v: i64, c: f64| {
            SpectralData::single_mode(1, boxes, Mode {
                t: 0,
                x: [x, 0],
                v: [v, 0],
                coef: Complex64::new(c, 0.0),
            })
            .sample_phase(&g)
            .unwrap()
        };
        // bχ = cos(θ_b), two frequency shifts
        let (bp, bm) = (mode(1, 2, 1.0), mode(-1, -2, 1.0));
        let b = bp.add(&bm).unwrap().scaled(0.5);
        let f = mode(2, -5, 1.0);
        let (ux, uv) = (2.0 * PI / LX, 2.0 * PI / LV);
        for m in multipliers(0.4) {
            let spec = CommutatorSpec::new(m, b.clone()).unwrap();
            let got = commutator_apply(&spec, &f).unwrap().value;
            let p_f = m.value(&[2.0 * ux], &[-5.0 * uv]);
            let mut want = Field::zeros(g.clone(), Layout::Phase, Rep::Physical);
            for (shift, (kx, kv)) in [(&bp, (3.0, -3.0)), (&bm, (1.0, -7.0))] {
                let mut term = shift.clone();
                term.mul_phase(f.data());
                let c = 0.5 * (m.value(&[kx * ux], &[kv * uv]) - p_f);
                want.axpy(Complex64::new(c, 0.0), &term).unwrap();
            }
            assert!(got.sub(&want).unwrap().norm() <= 1e-12 * want.norm());
        }
    }

    #[test]
    fn constant_data_gives_the_multiplier_of_the_modifier() {
        let g = grid(16, 64);
        let b = ModifierSpec::bump(1, 1).sample(&g).unwrap();
        let one = Field::from_fn(g.clone(), Layout::Phase, |_, _, _| Complex64::new(1.0, 0.0));
        let spec = CommutatorSpec::new(MultiplierSpec::frac_v(0.3), b.clone()).unwrap();
        let got = commutator_apply(&spec, &one).unwrap().value;
        let want = apply_spectral(&b, &MultiplierSpec::frac_v(0.3)).unwrap();
        assert!(got.sub(&want).unwrap().norm() <= 1e-12 * want.norm());
    }

    #[test]
    fn linear_in_the_modifier_and_skew_adjoint() {
        let g = grid(16, 64);
        let (f, h) = (random_field(&g, 2), random_field(&g, 3));
        let b1 = ModifierSpec::bump(1, 2).sample(&g).unwrap();
        let b2 = ModifierSpec::Trig {
            b_base: 0.0,
            b_amp: 1.0,
            x_mode: 2,
            v_mode: 1,
        }
        .sample(&g)
        .unwrap();
        for m in multipliers(0.75) {
            let s1 = CommutatorSpec::new(m, b1.clone()).unwrap();
            let s2 = CommutatorSpec::new(m, b2.clone()).unwrap();
            let s12 = CommutatorSpec::new(m, b1.add(&b2).unwrap()).unwrap();
            let sum = commutator(&s1, &f).unwrap().add(&commutator(&s2, &f).unwrap()).unwrap();
            let both = commutator(&s12, &f).unwrap();
            assert!(both.sub(&sum).unwrap().norm() <= 1e-12 * both.norm());

            let lhs = commutator(&s1, &f).unwrap().inner(&h).unwrap();
            let rhs = f.inner(&commutator(&s1, &h).unwrap()).unwrap();
            let scale = commutator(&s1, &f).unwrap().norm() * h.norm();
            assert!((lhs + rhs).norm() <= 1e-10 * scale);
        }
    }

    #[test]
    fn rejects_complex_modifiers_and_bad_regimes() {
        let g = grid(8, 16);
        let c = Field::from_fn(g.clone(), Layout::Phase, |_, _, _| Complex64::new(1.0, 1.0));
        assert!(CommutatorSpec::new(MultiplierSpec::frac_v(0.5), c).is_err());
        let spec = CommutatorSpec::from_modifier(MultiplierSpec::frac_v(0.25), &ModifierSpec::bump(1, 1), &g).unwrap();
        assert!(op_norm_estimate(&spec, Weight::Shifted, &OpNormOptions::default()).is_err());
    }

    #[test]
    fn estimate_is_reproducible() {
        let g = grid(8, 32);
        let spec = CommutatorSpec::from_modifier(MultiplierSpec::frac_v(0.25), &ModifierSpec::bump(1, 1), &g).unwrap();
        let opts = OpNormOptions {
            band_v: 6,
            ..Default::default()
        };
        let a = op_norm_estimate(&spec, Weight::Plain, &opts).unwrap();
        let b = op_norm_estimate(&spec, Weight::Plain, &opts).unwrap();
        assert_eq!(a, b);
        assert!(a.value > 0.0 && a.power_value >= a.corpus_max * 0.5);
    }
}
