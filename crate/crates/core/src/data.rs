//! Band-limited test data defined independently of any grid.
//!
//! A [`SpectralData`] is a finite trigonometric sum, optionally multiplied
//! by a Gaussian velocity window centred in the `v` box. Sampling the same
//! object on a grid and on its refinement gives the same function, which is
//! what makes refinement studies meaningful.

use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Direction, Field};
use crate::grid::{slot_of, AxisKind, GridSpec, Layout, Rep};

/// One Fourier mode, with frequencies given as integer lattice indices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub t: i64,
    pub x: [i64; 2],
    pub v: [i64; 2],
    pub coef: Complex64,
}

/// Parameters of the random band-limited corpus fields.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomFieldSpec {
    /// Largest `|index|` used on the `t`, `x` and `v` axes.
    pub band_t: i64,
    pub band_x: i64,
    pub band_v: i64,
    /// Amplitudes decay like `(1 + |ω|²)^{-q/2}`.
    pub decay_q: f64,
    /// Width of the Gaussian velocity window; `None` leaves data periodic in `v`.
    pub window: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralData {
    pub n: usize,
    /// Box lengths `(L_t, L_x, L_v)` the indices refer to.
    pub boxes: [f64; 3],
    pub modes: Vec<Mode>,
    pub window: Option<f64>,
}

impl SpectralData {
    pub fn zero(n: usize, boxes: [f64; 3]) -> Self {
        SpectralData {
            n,
            boxes,
            modes: Vec::new(),
            window: None,
        }
    }

    /// Gaussian random coefficients on every lattice point of the band.
    pub fn random(n: usize, boxes: [f64; 3], spec: &RandomFieldSpec, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let unit = boxes.map(|l| 2.0 * std::f64::consts::PI / l);
        let vrange = |b: i64, active: bool| if active { -b..=b } else { 0..=0 };
        let mut modes = Vec::new();
        for t in -spec.band_t..=spec.band_t {
            for x0 in -spec.band_x..=spec.band_x {
                for x1 in vrange(spec.band_x, n == 2) {
                    for v0 in -spec.band_v..=spec.band_v {
                        for v1 in vrange(spec.band_v, n == 2) {
                            let w2 = (t as f64 * unit[0]).powi(2)
                                + ((x0 * x0 + x1 * x1) as f64) * unit[1].powi(2)
                                + ((v0 * v0 + v1 * v1) as f64) * unit[2].powi(2);
                            let amp = (1.0 + w2).powf(-spec.decay_q / 2.0);
                            let re: f64 = StandardNormal.sample(&mut rng);
                            let im: f64 = StandardNormal.sample(&mut rng);
                            modes.push(Mode {
                                t,
                                x: [x0, x1],
                                v: [v0, v1],
                                coef: Complex64::new(re, im) * (amp / 2f64.sqrt()),
                            });
                        }
                    }
                }
            }
        }
        SpectralData {
            n,
            boxes,
            modes,
            window: spec.window,
        }
    }

    pub fn single_mode(n: usize, boxes: [f64; 3], mode: Mode) -> Self {
        SpectralData {
            n,
            boxes,
            modes: vec![mode],
            window: None,
        }
    }

    fn check_grid(&self, grid: &GridSpec) -> Result<()> {
        let same = grid.n() == self.n
            && [AxisKind::T, AxisKind::X, AxisKind::V]
                .iter()
                .zip(self.boxes)
                .all(|(k, l)| (grid.box_len(*k) - l).abs() <= 1e-12 * l);
        if same {
            Ok(())
        } else {
            Err(Error::GridMismatch("data boxes differ from the grid boxes".into()))
        }
    }

    /// Samples on the full `(t, x, v)` grid, physical representation.
    pub fn sample(&self, grid: &Arc<GridSpec>) -> Result<Field> {
        self.sample_layout(grid, Layout::Full)
    }

    /// Samples at `t = 0` on phase space, physical representation.
    pub fn sample_phase(&self, grid: &Arc<GridSpec>) -> Result<Field> {
        self.sample_layout(grid, Layout::Phase)
    }

    fn sample_layout(&self, grid: &Arc<GridSpec>, layout: Layout) -> Result<Field> {
        self.check_grid(grid)?;
        let mut f = Field::zeros(grid.clone(), layout, Rep::Frequency);
        let total = grid.layout_len(layout) as f64;
        let scale = total.sqrt();
        let shape = grid.shape(layout);
        let axes = grid.axes(layout);
        for m in &self.modes {
            let mut flat = 0usize;
            for (axis, &len) in axes.iter().zip(&shape) {
                let idx = match axis {
                    crate::grid::Axis::T => m.t,
                    crate::grid::Axis::X(i) => m.x[*i],
                    crate::grid::Axis::V(i) => m.v[*i],
                };
                if idx.unsigned_abs() as usize >= len / 2 {
                    return Err(Error::GridMismatch(format!(
                        "mode index {idx} does not fit below the Nyquist index of an axis of length {len}"
                    )));
                }
                flat = flat * len + slot_of(len, idx).expect("checked above");
            }
            // On phase space every time mode folds onto t = 0.
            f.data_mut()[flat] += m.coef * scale;
        }
        let all = f.axes();
        f.transform_in_place(&all, Direction::Inverse)?;
        if let Some(width) = self.window {
            let lv = grid.box_len(AxisKind::V);
            let w = grid.phase_map(Rep::Physical, Rep::Physical, |_, v| {
                let r2: f64 = v.iter().map(|vi| (vi - lv / 2.0).powi(2)).sum();
                (-r2 / (2.0 * width * width)).exp()
            });
            f.mul_phase(&w);
        }
        Ok(f)
    }

    /// Evaluates the data at one point.
    pub fn eval(&self, t: f64, x: &[f64], v: &[f64]) -> Complex64 {
        let unit = self.boxes.map(|l| 2.0 * std::f64::consts::PI / l);
        let mut s = Complex64::default();
        for m in &self.modes {
            let mut ph = m.t as f64 * unit[0] * t;
            for i in 0..self.n {
                ph += m.x[i] as f64 * unit[1] * x[i] + m.v[i] as f64 * unit[2] * v[i];
            }
            s += m.coef * Complex64::from_polar(1.0, ph);
        }
        if let Some(width) = self.window {
            let lv = self.boxes[2];
            let r2: f64 = v.iter().map(|vi| (vi - lv / 2.0).powi(2)).sum();
            s *= (-r2 / (2.0 * width * width)).exp();
        }
        s
    }
}
