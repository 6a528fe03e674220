//! Complex fields sampled on a [`GridSpec`], with per-axis representation.
//!
//! Norms and inner products carry the cell volume of the layout, so with the
//! unitary transform convention they approximate the continuous `L²` norm on
//! the torus and agree exactly between representations.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftDirection;

use crate::error::{Error, Result};
use crate::fft::fft_axis;
use crate::grid::{Axis, AxisKind, GridSpec, Layout, Rep};

/// Chunk size of the fixed-order reductions.
const SUM_CHUNK: usize = 4096;

/// Transform direction: physical to frequency, or back.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

impl Direction {
    fn target(self) -> Rep {
        match self {
            Direction::Forward => Rep::Frequency,
            Direction::Inverse => Rep::Physical,
        }
    }
}

/// Sum with a fixed reduction tree, independent of the thread count.
pub(crate) fn ordered_sum<F>(data: &[Complex64], f: F) -> f64
where
    F: Fn(usize, &Complex64) -> f64 + Sync,
{
    let partial: Vec<f64> = data
        .par_chunks(SUM_CHUNK)
        .enumerate()
        .map(|(c, chunk)| {
            chunk
                .iter()
                .enumerate()
                .map(|(i, z)| f(c * SUM_CHUNK + i, z))
                .sum::<f64>()
        })
        .collect();
    partial.iter().sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Arc<GridSpec>,
    layout: Layout,
    rep: Vec<Rep>,
    data: Vec<Complex64>,
}

impl Field {
    pub fn zeros(grid: Arc<GridSpec>, layout: Layout, rep: Rep) -> Self {
        let axes = grid.axes(layout).len();
        let len = grid.layout_len(layout);
        Field {
            grid,
            layout,
            rep: vec![rep; axes],
            data: vec![Complex64::default(); len],
        }
    }

    pub fn from_data(
        grid: Arc<GridSpec>,
        layout: Layout,
        rep: Vec<Rep>,
        data: Vec<Complex64>,
    ) -> Result<Self> {
        if rep.len() != grid.axes(layout).len() {
            return Err(Error::Representation(format!(
                "{} rep flags for {} axes",
                rep.len(),
                grid.axes(layout).len()
            )));
        }
        if data.len() != grid.layout_len(layout) {
            return Err(Error::GridMismatch(format!(
                "{} samples for a grid of {}",
                data.len(),
                grid.layout_len(layout)
            )));
        }
        Ok(Field {
            grid,
            layout,
            rep,
            data,
        })
    }

    /// Samples `f(t, x, v)` in the physical representation. Phase-space
    /// fields are evaluated at `t = 0`.
    pub fn from_fn<F>(grid: Arc<GridSpec>, layout: Layout, f: F) -> Self
    where
        F: Fn(f64, &[f64], &[f64]) -> Complex64 + Sync,
    {
        let ts = match layout {
            Layout::Full => grid.coords(AxisKind::T),
            Layout::Phase => vec![0.0],
        };
        let mut data = Vec::with_capacity(grid.layout_len(layout));
        for &t in &ts {
            data.extend(grid.phase_map(Rep::Physical, Rep::Physical, |x, v| f(t, x, v)));
        }
        let axes = grid.axes(layout).len();
        Field {
            grid,
            layout,
            rep: vec![Rep::Physical; axes],
            data,
        }
    }

    /// Stacks phase-space slices into a `(t, x, v)` field.
    pub fn from_slices(grid: Arc<GridSpec>, slices: &[Field]) -> Result<Self> {
        let nt = grid.len(AxisKind::T);
        if slices.len() != nt {
            return Err(Error::GridMismatch(format!(
                "{} slices for N_t = {nt}",
                slices.len()
            )));
        }
        let rep = slices[0].rep.clone();
        let mut data = Vec::with_capacity(grid.full_len());
        for s in slices {
            if s.layout != Layout::Phase || *s.grid != *grid || s.rep != rep {
                return Err(Error::GridMismatch("slice does not match the grid".into()));
            }
            data.extend_from_slice(&s.data);
        }
        let mut full_rep = vec![Rep::Physical];
        full_rep.extend(rep);
        Field::from_data(grid, Layout::Full, full_rep, data)
    }

    pub fn grid(&self) -> &Arc<GridSpec> {
        &self.grid
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn reps(&self) -> &[Rep] {
        &self.rep
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    pub fn axes(&self) -> Vec<Axis> {
        self.grid.axes(self.layout)
    }

    pub fn shape(&self) -> Vec<usize> {
        self.grid.shape(self.layout)
    }

    pub fn position(&self, axis: Axis) -> Result<usize> {
        self.axes()
            .iter()
            .position(|a| *a == axis)
            .ok_or_else(|| Error::Representation(format!("{axis:?} is not an axis of this field")))
    }

    pub fn rep(&self, axis: Axis) -> Result<Rep> {
        Ok(self.rep[self.position(axis)?])
    }

    /// Representation shared by every axis of `kind`, or `None` when mixed.
    pub fn kind_rep(&self, kind: AxisKind) -> Option<Rep> {
        let reps: Vec<Rep> = self
            .axes()
            .iter()
            .zip(&self.rep)
            .filter(|(a, _)| a.kind() == kind)
            .map(|(_, r)| *r)
            .collect();
        let first = *reps.first()?;
        reps.iter().all(|r| *r == first).then_some(first)
    }

    pub fn require_rep(&self, kind: AxisKind, rep: Rep) -> Result<()> {
        match self.kind_rep(kind) {
            Some(r) if r == rep => Ok(()),
            _ => Err(Error::Representation(format!(
                "{kind:?} axes must be in {rep:?} representation"
            ))),
        }
    }

    pub fn axes_of(&self, kind: AxisKind) -> Vec<Axis> {
        self.axes().into_iter().filter(|a| a.kind() == kind).collect()
    }

    /// Transforms the listed axes; each must be in the opposite representation.
    pub fn transform(&self, axes: &[Axis], direction: Direction) -> Result<Field> {
        let mut out = self.clone();
        out.transform_in_place(axes, direction)?;
        Ok(out)
    }

    pub fn transform_in_place(&mut self, axes: &[Axis], direction: Direction) -> Result<()> {
        let target = direction.target();
        let positions = axes
            .iter()
            .map(|a| self.position(*a))
            .collect::<Result<Vec<_>>>()?;
        for (axis, &p) in axes.iter().zip(&positions) {
            if self.rep[p] == target {
                return Err(Error::Representation(format!(
                    "{axis:?} is already in {target:?} representation"
                )));
            }
        }
        let shape = self.shape();
        let fft_dir = match direction {
            Direction::Forward => FftDirection::Forward,
            Direction::Inverse => FftDirection::Inverse,
        };
        for p in positions {
            fft_axis(&mut self.data, &shape, p, fft_dir);
            self.rep[p] = target;
        }
        Ok(())
    }

    /// Brings every axis of the given kinds into `rep`, skipping axes that
    /// are already there.
    pub fn set_rep(&mut self, kinds: &[AxisKind], rep: Rep) {
        let axes: Vec<Axis> = self
            .axes()
            .into_iter()
            .zip(self.rep.clone())
            .filter(|(a, r)| kinds.contains(&a.kind()) && *r != rep)
            .map(|(a, _)| a)
            .collect();
        let dir = match rep {
            Rep::Frequency => Direction::Forward,
            Rep::Physical => Direction::Inverse,
        };
        self.transform_in_place(&axes, dir)
            .expect("axes were filtered by representation");
    }

    pub fn with_rep(&self, kinds: &[AxisKind], rep: Rep) -> Field {
        let mut out = self.clone();
        out.set_rep(kinds, rep);
        out
    }

    pub fn all_kinds(&self) -> Vec<AxisKind> {
        match self.layout {
            Layout::Full => vec![AxisKind::T, AxisKind::X, AxisKind::V],
            Layout::Phase => vec![AxisKind::X, AxisKind::V],
        }
    }

    pub fn cell_volume(&self) -> f64 {
        self.grid.cell_volume(self.layout)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.cell_volume() * ordered_sum(&self.data, |_, z| z.norm_sqr())
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Largest sample modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    fn check_compatible(&self, other: &Field) -> Result<()> {
        if self.grid != other.grid && *self.grid != *other.grid {
            return Err(Error::GridMismatch("fields live on different grids".into()));
        }
        if self.layout != other.layout {
            return Err(Error::GridMismatch("fields have different layouts".into()));
        }
        if self.rep != other.rep {
            return Err(Error::Representation(
                "fields are in different representations".into(),
            ));
        }
        Ok(())
    }

    /// Discrete `L²` inner product, conjugate-linear in `other`.
    pub fn inner(&self, other: &Field) -> Result<Complex64> {
        self.check_compatible(other)?;
        let b = &other.data;
        let partial: Vec<Complex64> = self
            .data
            .par_chunks(SUM_CHUNK)
            .zip(b.par_chunks(SUM_CHUNK))
            .map(|(x, y)| x.iter().zip(y).map(|(a, b)| a * b.conj()).sum::<Complex64>())
            .collect();
        Ok(partial.iter().sum::<Complex64>() * self.cell_volume())
    }

    pub fn scale(&mut self, c: Complex64) {
        self.data.par_iter_mut().for_each(|z| *z *= c);
    }

    pub fn scaled(&self, c: f64) -> Field {
        let mut out = self.clone();
        out.scale(Complex64::new(c, 0.0));
        out
    }

    /// `self += c * other`
    pub fn axpy(&mut self, c: Complex64, other: &Field) -> Result<()> {
        self.check_compatible(other)?;
        self.data
            .par_iter_mut()
            .zip(other.data.par_iter())
            .for_each(|(a, b)| *a += c * b);
        Ok(())
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        let mut out = self.clone();
        out.axpy(Complex64::new(-1.0, 0.0), other)?;
        Ok(out)
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        let mut out = self.clone();
        out.axpy(Complex64::new(1.0, 0.0), other)?;
        Ok(out)
    }

    /// Multiplies every time slice pointwise by a phase-space lattice.
    pub fn mul_phase<T>(&mut self, weights: &[T])
    where
        T: Copy + Sync + Into<Complex64>,
    {
        let p = self.grid.phase_len();
        assert_eq!(weights.len(), p);
        self.data.par_chunks_mut(p).for_each(|slice| {
            for (z, w) in slice.iter_mut().zip(weights) {
                *z *= (*w).into();
            }
        });
    }

    /// Multiplies time slice `j` by `weights[j]`.
    pub fn mul_time(&mut self, weights: &[Complex64]) {
        let p = self.grid.phase_len();
        assert_eq!(self.layout, Layout::Full);
        self.data
            .par_chunks_mut(p)
            .zip(weights.par_iter())
            .for_each(|(slice, w)| slice.iter_mut().for_each(|z| *z *= w));
    }

    /// Copy of time slice `j` as a phase-space field.
    pub fn time_slice(&self, j: usize) -> Result<Field> {
        if self.layout != Layout::Full {
            return Err(Error::Representation("phase-space field has no time axis".into()));
        }
        if self.rep[0] != Rep::Physical {
            return Err(Error::Representation("time axis must be physical to slice".into()));
        }
        let p = self.grid.phase_len();
        Field::from_data(
            self.grid.clone(),
            Layout::Phase,
            self.rep[1..].to_vec(),
            self.data[j * p..(j + 1) * p].to_vec(),
        )
    }

    /// Fraction of the energy carried by modes in the top third of some
    /// frequency axis. Axes in the physical representation are transformed
    /// on a copy first.
    pub fn top_third_energy_fraction(&self) -> f64 {
        let spectral = self.with_rep(&self.all_kinds(), Rep::Frequency);
        let total = ordered_sum(&spectral.data, |_, z| z.norm_sqr());
        if total == 0.0 {
            return 0.0;
        }
        let shape = spectral.shape();
        let high = ordered_sum(&spectral.data, |idx, z| {
            let mut rem = idx;
            let mut top = false;
            for &len in shape.iter().rev() {
                let i = rem % len;
                rem /= len;
                let m = crate::grid::signed_index(len, i).unsigned_abs() as usize;
                if 3 * m > len {
                    top = true;
                }
            }
            if top {
                z.norm_sqr()
            } else {
                0.0
            }
        });
        high / total
    }

    /// Zeroes every mode in the top third of any axis (2/3 rule). Works in
    /// the frequency representation and restores the original one.
    pub fn dealias(&mut self) {
        let original = self.rep.clone();
        let kinds = self.all_kinds();
        self.set_rep(&kinds, Rep::Frequency);
        let shape = self.shape();
        self.data.par_iter_mut().enumerate().for_each(|(idx, z)| {
            let mut rem = idx;
            for &len in shape.iter().rev() {
                let i = rem % len;
                rem /= len;
                let m = crate::grid::signed_index(len, i).unsigned_abs() as usize;
                if 3 * m > len {
                    *z = Complex64::default();
                    return;
                }
            }
        });
        for (axis, rep) in self.axes().into_iter().zip(original) {
            if rep == Rep::Physical {
                self.transform_in_place(&[axis], Direction::Inverse)
                    .expect("axis was in frequency representation");
            }
        }
    }
}
