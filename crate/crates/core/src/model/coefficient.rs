//! The diffusion coefficient `a = b²χ² + a₋` (or `b²χ + a₋`).

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::{AxisKind, GridSpec, Layout, Rep};

/// Power of the cutoff in `a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChiPower {
    /// `a = b²χ² + a₋`
    Squared,
    /// `a = b²χ + a₋`
    Linear,
}

/// Smooth bump `exp(1 - 1/(1 - r²))` on `|r| < 1`, zero outside.
pub fn bump(r: f64) -> f64 {
    if r.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - r * r)).exp()
    }
}

/// Parameters of the default coefficient family
/// `b = b₀ + b₁ cos(x₁) cos(2π v₁/L_v) (1 + b_t cos(2π t/L_t))` and a
/// product bump `χ` that vanishes within `margin·L` of every `x`/`v` edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRecipe {
    pub a_minus: f64,
    pub b_base: f64,
    pub b_amp: f64,
    pub b_time_amp: f64,
    pub margin: f64,
    pub chi_power: ChiPower,
}

impl Default for CoefficientRecipe {
    fn default() -> Self {
        CoefficientRecipe {
            a_minus: 0.1,
            b_base: 1.0,
            b_amp: 0.5,
            b_time_amp: 0.0,
            margin: 0.1,
            chi_power: ChiPower::Squared,
        }
    }
}

/// Sampled coefficient. `b` and `χ` are stored on the full grid when `b`
/// depends on time, on phase space otherwise.
#[derive(Debug, Clone)]
pub struct Coefficient {
    grid: Arc<GridSpec>,
    b: Field,
    chi: Field,
    a_minus: f64,
    power: ChiPower,
    /// One phase-space lattice of `a` per stored time slice.
    slices: Vec<Vec<f64>>,
}

impl Coefficient {
    /// Builds from real sample functions and validates the invariants:
    /// `a₋ > 0`, `b, χ >= 0`, `χ = 0` within `margin·L` of each edge.
    #[allow(clippy::too_many_arguments)]
    pub fn from_fns<B, C>(
        grid: Arc<GridSpec>,
        time_dependent: bool,
        b: B,
        chi: C,
        a_minus: f64,
        power: ChiPower,
        margin: f64,
    ) -> Result<Self>
    where
        B: Fn(f64, &[f64], &[f64]) -> f64 + Sync,
        C: Fn(&[f64], &[f64]) -> f64 + Sync,
    {
        if !(a_minus > 0.0 && a_minus.is_finite()) {
            return Err(Error::param("a_minus", format!("{a_minus} must be > 0")));
        }
        if !(0.0..0.5).contains(&margin) {
            return Err(Error::param("chi_margin", format!("{margin} must lie in [0, 0.5)")));
        }
        let layout = if time_dependent { Layout::Full } else { Layout::Phase };
        let b_field = Field::from_fn(grid.clone(), layout, |t, x, v| Complex64::new(b(t, x, v), 0.0));
        let chi_field = Field::from_fn(grid.clone(), Layout::Phase, |_, x, v| Complex64::new(chi(x, v), 0.0));

        if b_field.data().iter().any(|z| z.re < 0.0 || !z.re.is_finite()) {
            return Err(Error::param("b", "must be finite and nonnegative"));
        }
        if chi_field.data().iter().any(|z| z.re < 0.0 || !z.re.is_finite()) {
            return Err(Error::param("chi", "must be finite and nonnegative"));
        }
        let (lx, lv) = (grid.box_len(AxisKind::X), grid.box_len(AxisKind::V));
        let near_edge = grid.phase_map(Rep::Physical, Rep::Physical, |x, v| {
            let edge = |y: f64, l: f64| y < margin * l || y > (1.0 - margin) * l;
            x.iter().any(|&y| edge(y, lx)) || v.iter().any(|&y| edge(y, lv))
        });
        if chi_field
            .data()
            .iter()
            .zip(&near_edge)
            .any(|(z, &edge)| edge && z.re != 0.0)
        {
            return Err(Error::param("chi", "must vanish within the boundary margin"));
        }

        let chi_vals: Vec<f64> = chi_field.data().iter().map(|z| z.re).collect();
        let p = grid.phase_len();
        let slices = b_field
            .data()
            .chunks(p)
            .map(|bs| {
                bs.iter()
                    .zip(&chi_vals)
                    .map(|(b, c)| {
                        let c = match power {
                            ChiPower::Squared => c * c,
                            ChiPower::Linear => *c,
                        };
                        b.re * b.re * c + a_minus
                    })
                    .collect()
            })
            .collect();
        Ok(Coefficient {
            grid,
            b: b_field,
            chi: chi_field,
            a_minus,
            power,
            slices,
        })
    }

    pub fn from_recipe(grid: Arc<GridSpec>, recipe: &CoefficientRecipe) -> Result<Self> {
        if recipe.b_base < recipe.b_amp.abs() * (1.0 + recipe.b_time_amp.abs()) {
            return Err(Error::param("b_base", "must dominate the oscillating part so that b >= 0"));
        }
        let (lt, lx, lv) = (
            grid.box_len(AxisKind::T),
            grid.box_len(AxisKind::X),
            grid.box_len(AxisKind::V),
        );
        let r = recipe.clone_params();
        let margin = recipe.margin;
        let chi = move |x: &[f64], v: &[f64]| {
            let mut c = 1.0;
            for &y in x {
                c *= bump((y - lx / 2.0) / (lx * (0.5 - margin)));
            }
            for &y in v {
                c *= bump((y - lv / 2.0) / (lv * (0.5 - margin)));
            }
            c
        };
        let b = move |t: f64, x: &[f64], v: &[f64]| {
            r.0 + r.1
                * (2.0 * PI * x[0] / lx).cos()
                * (2.0 * PI * v[0] / lv).cos()
                * (1.0 + r.2 * (2.0 * PI * t / lt).cos())
        };
        Coefficient::from_fns(
            grid,
            recipe.b_time_amp != 0.0,
            b,
            chi,
            recipe.a_minus,
            recipe.chi_power,
            margin,
        )
    }

    pub fn grid(&self) -> &Arc<GridSpec> {
        &self.grid
    }

    pub fn a_minus(&self) -> f64 {
        self.a_minus
    }

    pub fn power(&self) -> ChiPower {
        self.power
    }

    pub fn is_time_dependent(&self) -> bool {
        self.slices.len() > 1
    }

    pub fn min_a(&self) -> f64 {
        self.slices
            .iter()
            .flatten()
            .fold(f64::INFINITY, |m, &a| m.min(a))
    }

    pub fn max_a(&self) -> f64 {
        self.slices
            .iter()
            .flatten()
            .fold(f64::NEG_INFINITY, |m, &a| m.max(a))
    }

    /// `a` on phase space at stored time slice `j` (any `j` when static).
    pub fn slice(&self, j: usize) -> &[f64] {
        &self.slices[j % self.slices.len()]
    }

    /// `a` at time `t`, linearly interpolated between periodic samples.
    pub fn at_time(&self, t: f64) -> Vec<f64> {
        if self.slices.len() == 1 {
            return self.slices[0].clone();
        }
        let nt = self.slices.len();
        let s = (t / self.grid.spacing(AxisKind::T)).rem_euclid(nt as f64);
        let j = s.floor() as usize % nt;
        let w = s - s.floor();
        self.slices[j]
            .iter()
            .zip(&self.slices[(j + 1) % nt])
            .map(|(a, b)| (1.0 - w) * a + w * b)
            .collect()
    }

    /// The modifier `bχ` on phase space (time slice 0 when time dependent).
    pub fn modifier(&self) -> Field {
        let p = self.grid.phase_len();
        let data = self.b.data()[..p]
            .iter()
            .zip(self.chi.data())
            .map(|(b, c)| Complex64::new(b.re * c.re, 0.0))
            .collect();
        Field::from_data(self.grid.clone(), Layout::Phase, self.chi.reps().to_vec(), data)
            .expect("same grid")
    }
}

impl CoefficientRecipe {
    fn clone_params(&self) -> (f64, f64, f64) {
        (self.b_base, self.b_amp, self.b_time_amp)
    }
}
