//! Periodic lattices over `(t, x, v)`.
//!
//! Every axis is a uniform periodic grid on `[0, L)`. Frequencies use the
//! usual FFT storage order `0, 1, .., N/2-1, -N/2, .., -1` scaled by `2π/L`,
//! so the Nyquist mode carries the negative sign.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on the number of complex samples in one field (512 MiB).
pub const DEFAULT_MEMORY_BUDGET: usize = 1 << 25;

/// Physical or Fourier representation of one axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Rep {
    Physical,
    Frequency,
}

impl Rep {
    pub fn flag(self) -> u8 {
        match self {
            Rep::Physical => 0,
            Rep::Frequency => 1,
        }
    }

    pub fn from_flag(flag: u8) -> Option<Rep> {
        match flag {
            0 => Some(Rep::Physical),
            1 => Some(Rep::Frequency),
            _ => None,
        }
    }

    pub fn flipped(self) -> Rep {
        match self {
            Rep::Physical => Rep::Frequency,
            Rep::Frequency => Rep::Physical,
        }
    }
}

/// Which family an axis belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AxisKind {
    T,
    X,
    V,
}

/// A concrete axis; `X(i)` and `V(i)` carry the component index `i < n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    T,
    X(usize),
    V(usize),
}

impl Axis {
    pub fn kind(self) -> AxisKind {
        match self {
            Axis::T => AxisKind::T,
            Axis::X(_) => AxisKind::X,
            Axis::V(_) => AxisKind::V,
        }
    }
}

/// Axis set carried by a field: with the time axis or phase space only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Layout {
    /// `(t, x_1..x_n, v_1..v_n)`
    Full,
    /// `(x_1..x_n, v_1..v_n)`
    Phase,
}

/// Resolution and box sizes of a periodic `(t, x, v)` lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    n: usize,
    nt: usize,
    nx: usize,
    nv: usize,
    lt: f64,
    lx: f64,
    lv: f64,
}

fn check_len(name: &'static str, len: usize) -> Result<()> {
    if len < 4 || !len.is_multiple_of(2) {
        return Err(Error::InvalidGrid(format!(
            "{name} = {len} must be even and at least 4"
        )));
    }
    Ok(())
}

fn check_box(name: &'static str, len: f64) -> Result<()> {
    if !(len.is_finite() && len > 0.0) {
        return Err(Error::InvalidGrid(format!("{name} = {len} must be positive")));
    }
    Ok(())
}

/// Signed wavenumber index of storage slot `i` on an axis of length `len`.
#[inline]
pub fn signed_index(len: usize, i: usize) -> i64 {
    if i < len / 2 {
        i as i64
    } else {
        i as i64 - len as i64
    }
}

/// Storage slot of signed wavenumber index `m`, if it lies on the lattice.
#[inline]
pub fn slot_of(len: usize, m: i64) -> Option<usize> {
    let half = (len / 2) as i64;
    if m < -half || m >= half {
        None
    } else if m >= 0 {
        Some(m as usize)
    } else {
        Some((m + len as i64) as usize)
    }
}

impl GridSpec {
    /// Builds a grid under the default memory budget.
    pub fn new(n: usize, nt: usize, nx: usize, nv: usize, lt: f64, lx: f64, lv: f64) -> Result<Self> {
        Self::with_budget(n, nt, nx, nv, lt, lx, lv, DEFAULT_MEMORY_BUDGET)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn with_budget(
        n: usize,
        nt: usize,
        nx: usize,
        nv: usize,
        lt: f64,
        lx: f64,
        lv: f64,
        budget: usize,
    ) -> Result<Self> {
        if !(1..=2).contains(&n) {
            return Err(Error::InvalidGrid(format!("dimension n = {n} must be 1 or 2")));
        }
        check_len("N_t", nt)?;
        check_len("N_x", nx)?;
        check_len("N_v", nv)?;
        check_box("L_t", lt)?;
        check_box("L_x", lx)?;
        check_box("L_v", lv)?;
        let points = (nx.pow(n as u32))
            .checked_mul(nv.pow(n as u32))
            .and_then(|p| p.checked_mul(nt))
            .unwrap_or(usize::MAX);
        if points > budget {
            return Err(Error::MemoryBudget { points, budget });
        }
        Ok(GridSpec {
            n,
            nt,
            nx,
            nv,
            lt,
            lx,
            lv,
        })
    }

    /// The same boxes with every resolution doubled.
    pub fn refined(&self) -> Result<Self> {
        Self::new(self.n, 2 * self.nt, 2 * self.nx, 2 * self.nv, self.lt, self.lx, self.lv)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self, kind: AxisKind) -> usize {
        match kind {
            AxisKind::T => self.nt,
            AxisKind::X => self.nx,
            AxisKind::V => self.nv,
        }
    }

    pub fn box_len(&self, kind: AxisKind) -> f64 {
        match kind {
            AxisKind::T => self.lt,
            AxisKind::X => self.lx,
            AxisKind::V => self.lv,
        }
    }

    pub fn spacing(&self, kind: AxisKind) -> f64 {
        self.box_len(kind) / self.len(kind) as f64
    }

    /// Lattice spacing `2π/L` in frequency.
    pub fn freq_unit(&self, kind: AxisKind) -> f64 {
        2.0 * PI / self.box_len(kind)
    }

    /// Frequencies in storage order.
    pub fn freqs(&self, kind: AxisKind) -> Vec<f64> {
        let len = self.len(kind);
        let unit = self.freq_unit(kind);
        (0..len).map(|i| signed_index(len, i) as f64 * unit).collect()
    }

    /// Frequencies in ascending order, `-N/2 .. N/2-1` times `2π/L`.
    pub fn lattice(&self, kind: AxisKind) -> Vec<f64> {
        let len = self.len(kind) as i64;
        let unit = self.freq_unit(kind);
        (-len / 2..len / 2).map(|m| m as f64 * unit).collect()
    }

    pub fn max_abs_freq(&self, kind: AxisKind) -> f64 {
        (self.len(kind) / 2) as f64 * self.freq_unit(kind)
    }

    /// Sample positions `j L / N`.
    pub fn coords(&self, kind: AxisKind) -> Vec<f64> {
        let h = self.spacing(kind);
        (0..self.len(kind)).map(|j| j as f64 * h).collect()
    }

    pub fn axes(&self, layout: Layout) -> Vec<Axis> {
        let mut axes = Vec::with_capacity(1 + 2 * self.n);
        if layout == Layout::Full {
            axes.push(Axis::T);
        }
        axes.extend((0..self.n).map(Axis::X));
        axes.extend((0..self.n).map(Axis::V));
        axes
    }

    pub fn shape(&self, layout: Layout) -> Vec<usize> {
        self.axes(layout).iter().map(|a| self.len(a.kind())).collect()
    }

    /// Number of `x` lattice points, `N_x^n`.
    pub fn x_points(&self) -> usize {
        self.nx.pow(self.n as u32)
    }

    /// Number of `v` lattice points, `N_v^n`.
    pub fn v_points(&self) -> usize {
        self.nv.pow(self.n as u32)
    }

    pub fn phase_len(&self) -> usize {
        self.x_points() * self.v_points()
    }

    pub fn full_len(&self) -> usize {
        self.nt * self.phase_len()
    }

    pub fn layout_len(&self, layout: Layout) -> usize {
        match layout {
            Layout::Full => self.full_len(),
            Layout::Phase => self.phase_len(),
        }
    }

    /// Product of the cell widths of every axis in the layout.
    pub fn cell_volume(&self, layout: Layout) -> f64 {
        self.axes(layout)
            .iter()
            .map(|a| self.spacing(a.kind()))
            .product()
    }

    /// Splits a flat `x` (or `v`) block index into per-component indices.
    #[inline]
    pub fn components(&self, kind: AxisKind, flat: usize) -> [usize; 2] {
        let len = self.len(kind);
        if self.n == 1 {
            [flat, 0]
        } else {
            [flat / len, flat % len]
        }
    }

    /// Evaluates `f(x_part, v_part)` on every phase-space point.
    ///
    /// Each part holds `n` values: frequencies when the matching `Rep` is
    /// `Frequency`, sample positions otherwise. The result is in row-major
    /// `(x.., v..)` order, i.e. the layout of one time slice.
    pub fn phase_map<T, F>(&self, x_rep: Rep, v_rep: Rep, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&[f64], &[f64]) -> T + Sync,
    {
        let xs = match x_rep {
            Rep::Physical => self.coords(AxisKind::X),
            Rep::Frequency => self.freqs(AxisKind::X),
        };
        let vs = match v_rep {
            Rep::Physical => self.coords(AxisKind::V),
            Rep::Frequency => self.freqs(AxisKind::V),
        };
        let n = self.n;
        let vp = self.v_points();
        (0..self.phase_len())
            .into_par_iter()
            .map(|p| {
                let xi = self.components(AxisKind::X, p / vp);
                let vi = self.components(AxisKind::V, p % vp);
                let xpart = [xs[xi[0]], xs[xi[1]]];
                let vpart = [vs[vi[0]], vs[vi[1]]];
                f(&xpart[..n], &vpart[..n])
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_pi_box_has_integer_lattice() {
        let g = GridSpec::new(1, 4, 4, 4, 2.0 * PI, 2.0 * PI, 2.0 * PI).unwrap();
        let k = g.lattice(AxisKind::X);
        let expected = [-2.0, -1.0, 0.0, 1.0];
        for (a, b) in k.iter().zip(expected) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn nyquist_index_is_half_length() {
        let g = GridSpec::new(1, 64, 64, 64, 2.0 * PI, 2.0 * PI, 2.0 * PI).unwrap();
        assert_eq!(g.full_len(), 64 * 64 * 64);
        assert!((g.max_abs_freq(AxisKind::X) - 32.0).abs() < 1e-12);
        let max = g
            .freqs(AxisKind::X)
            .iter()
            .fold(0.0_f64, |m, k| m.max(k.abs()));
        assert!((max - 32.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_odd_and_small_lengths() {
        assert!(matches!(
            GridSpec::new(1, 5, 4, 4, 1.0, 1.0, 1.0),
            Err(Error::InvalidGrid(_))
        ));
        assert!(GridSpec::new(1, 4, 2, 4, 1.0, 1.0, 1.0).is_err());
        assert!(GridSpec::new(3, 4, 4, 4, 1.0, 1.0, 1.0).is_err());
        assert!(GridSpec::new(1, 4, 4, 4, 0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn rejects_grids_over_budget() {
        let err = GridSpec::with_budget(2, 64, 64, 64, 1.0, 1.0, 1.0, 1 << 20).unwrap_err();
        assert!(matches!(err, Error::MemoryBudget { .. }));
    }

    #[test]
    fn slots_round_trip() {
        for len in [4usize, 6, 16] {
            for i in 0..len {
                assert_eq!(slot_of(len, signed_index(len, i)), Some(i));
            }
            assert_eq!(slot_of(len, len as i64 / 2), None);
        }
    }
}
