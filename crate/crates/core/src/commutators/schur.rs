//! Schur-test bounds for the commutator, read off its exact matrix on the
//! discrete frequency lattice.
//!
//! Multiplication by `bχ` is the circular convolution
//! `(bχ f)^(ω) = N^{−1/2} Σ_{ω'} b̂(ω − ω') f̂(ω')`, so the commutator has the
//! kernel `K(ω, ω') = [p(ω) − p(ω')] b̂(ω − ω') N^{−1/2}`. It splits into
//! `K₁ = [p(k, ξ') − p(k', ξ')] b̂` and `K₂ = [p(k, ξ) − p(k, ξ')] b̂`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{CommutatorSpec, Weight};
use crate::error::Result;
use crate::grid::{AxisKind, GridSpec, Rep};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchurPiece {
    pub row_sup: f64,
    pub col_sup: f64,
}

impl SchurPiece {
    /// `(row_sup · col_sup)^{1/2}`, an upper bound on the operator norm.
    pub fn bound(&self) -> f64 {
        (self.row_sup * self.col_sup).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchurBounds {
    pub full: SchurPiece,
    pub k1: SchurPiece,
    pub k2: SchurPiece,
}

impl SchurBounds {
    /// Best certified bound: the full kernel, or the two pieces added.
    pub fn certified(&self) -> f64 {
        self.full.bound().min(self.k1.bound() + self.k2.bound())
    }
}

/// Table of `(a − b) mod len` per component, flattened, for one block.
fn difference_table(grid: &GridSpec, kind: AxisKind, points: usize) -> Vec<usize> {
    let len = grid.len(kind);
    let n = grid.n();
    let mut table = vec![0; points * points];
    for a in 0..points {
        let ca = grid.components(kind, a);
        for b in 0..points {
            let cb = grid.components(kind, b);
            let mut flat = 0;
            for i in 0..n {
                flat = flat * len + (ca[i] + len - cb[i]) % len;
            }
            table[a * points + b] = flat;
        }
    }
    table
}

/// Row and column sups of `|K|/S(ω')` for the full kernel and both pieces;
/// `S` is the quadratic minorant of the weight, so the bounds dominate the
/// weighted operator norm. Cost grows like the square of the phase-space
/// lattice size.
pub fn schur_row_bounds(spec: &CommutatorSpec, weight: Weight) -> Result<SchurBounds> {
    let grid = spec.grid().clone();
    let (xp, vp) = (grid.x_points(), grid.v_points());
    let total = grid.phase_len();
    let b_hat = spec.modifier.with_rep(&[AxisKind::X, AxisKind::V], Rep::Frequency);
    let scale = 1.0 / (total as f64).sqrt();
    let b_abs: Vec<f64> = b_hat.data().iter().map(|z| z.norm() * scale).collect();
    let m = spec.multiplier;
    let p = grid.phase_map(Rep::Frequency, Rep::Frequency, |k, xi| m.value(k, xi));
    let s = spec.weight_symbol(weight);
    let xd = difference_table(&grid, AxisKind::X, xp);
    let vd = difference_table(&grid, AxisKind::V, vp);

    // rows: sums over ω' for each ω; columns: sums over ω for each ω'
    let sums = |by_row: bool| -> Vec<[f64; 3]> {
        (0..total)
            .into_par_iter()
            .map(|outer| {
                let (ox, ov) = (outer / vp, outer % vp);
                let mut acc = [0.0; 3];
                for inner in 0..total {
                    let (ix, iv) = (inner / vp, inner % vp);
                    let ((kx, kv), (jx, jv)) = if by_row { ((ox, ov), (ix, iv)) } else { ((ix, iv), (ox, ov)) };
                    let b = b_abs[xd[kx * xp + jx] * vp + vd[kv * vp + jv]];
                    if b == 0.0 {
                        continue;
                    }
                    let w = b / s[jx * vp + jv];
                    let p_row = p[kx * vp + kv];
                    let p_col = p[jx * vp + jv];
                    let p_mixed = p[kx * vp + jv];
                    acc[0] += (p_row - p_col).abs() * w;
                    acc[1] += (p_mixed - p_col).abs() * w;
                    acc[2] += (p_row - p_mixed).abs() * w;
                }
                acc
            })
            .collect()
    };
    let sup = |v: &[[f64; 3]], i: usize| v.iter().fold(0.0f64, |m, a| m.max(a[i]));
    let (rows, cols) = (sums(true), sums(false));
    let piece = |i| SchurPiece {
        row_sup: sup(&rows, i),
        col_sup: sup(&cols, i),
    };
    Ok(SchurBounds {
        full: piece(0),
        k1: piece(1),
        k2: piece(2),
    })
}
