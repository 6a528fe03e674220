//! The small-frequency term of the initial value problem for free
//! transport, `f̂(t, k, ξ) = F̂₀(k, ξ + t k)` on `t >= 0`.

use serde::{Deserialize, Serialize};

use super::SplitParams;
use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::{AxisKind, Layout, Rep};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IvpTerm {
    pub x_slot: usize,
    pub k_abs: f64,
    pub d: f64,
    /// `|k|^r ∫₀^∞ ∫_{|ξ|<D} |f̂|² dξ dt`
    pub iii: f64,
    /// `2 D |k|^{r−1} ∫ |F̂₀|²`
    pub bound: f64,
}

impl IvpTerm {
    pub fn ratio(&self) -> f64 {
        if self.iii == 0.0 {
            0.0
        } else {
            self.iii / self.bound
        }
    }
}

/// Length of `{t >= 0 : |η − t k| <= D}`.
pub fn exit_time_measure(eta: &[f64], k: &[f64], d: f64) -> f64 {
    let k2: f64 = k.iter().map(|z| z * z).sum();
    let dot: f64 = eta.iter().zip(k).map(|(a, b)| a * b).sum();
    let eta2: f64 = eta.iter().map(|z| z * z).sum();
    let disc = dot * dot - k2 * (eta2 - d * d);
    if k2 == 0.0 || disc <= 0.0 {
        return 0.0;
    }
    let root = disc.sqrt();
    let hi = (dot + root) / k2;
    let lo = ((dot - root) / k2).max(0.0);
    (hi - lo).max(0.0)
}

/// `III` on one `x` slot of a phase-space datum. `None` for `k = 0`.
pub fn check_ivp_term(f0: &Field, params: &SplitParams, x_slot: usize) -> Result<Option<IvpTerm>> {
    let params = params.validated()?;
    if f0.layout() != Layout::Phase {
        return Err(Error::Representation("the initial datum lives on phase space".into()));
    }
    let grid = f0.grid().clone();
    if x_slot >= grid.x_points() {
        return Err(Error::param("x_slot", format!("{x_slot} is outside the grid")));
    }
    let f = f0.with_rep(&[AxisKind::X, AxisKind::V], Rep::Frequency);
    let (fx, fv) = (grid.freqs(AxisKind::X), grid.freqs(AxisKind::V));
    let n = grid.n();
    let kc = grid.components(AxisKind::X, x_slot);
    let k: Vec<f64> = kc[..n].iter().map(|&i| fx[i]).collect();
    let k_abs = k.iter().map(|z| z * z).sum::<f64>().sqrt();
    if k_abs == 0.0 {
        return Ok(None);
    }
    let d = params.cut(k_abs);
    let vp = grid.v_points();
    let (mut weighted, mut energy) = (0.0, 0.0);
    for vs in 0..vp {
        let c = grid.components(AxisKind::V, vs);
        let eta: Vec<f64> = c[..n].iter().map(|&i| fv[i]).collect();
        let e = f.data()[x_slot * vp + vs].norm_sqr();
        weighted += e * exit_time_measure(&eta, &k, d);
        energy += e;
    }
    let vol = f.cell_volume();
    Ok(Some(IvpTerm {
        x_slot,
        k_abs,
        d,
        iii: k_abs.powf(params.r) * weighted * vol,
        bound: 2.0 * d * k_abs.powf(params.r - 1.0) * energy * vol,
    }))
}
