//! Exact Fourier-side solution of the constant-coefficient model.
//!
//! In `(k, ξ)` the equation reads `∂t f̂ − k·∇ξ f̂ + a|ξ|^{2β} f̂ = ĝ`. Along
//! the characteristic ending at `(t, ξ)` the point at time `t − u` is
//! `ξ + u k`, so one step of length `dt` is
//!
//! ```text
//! f̂(t+dt, ξ) = F(ξ) f̂(t, ξ + dt k) + ∫₀^{dt} E(u, ξ) ĝ(t + dt − u, ξ + u k) du
//! F(ξ) = exp(−a ∫₀^{dt} |ξ + u k|^{2β} du)
//! ```
//!
//! When `dt·L_v/L_x` is an integer, `ξ + dt k` is again a lattice point and
//! the step is exact up to the quadrature of the exponent and of the source
//! integral. The source integrand is interpolated along the characteristic
//! through four lattice times (shifted forward near `t = 0`), after removing
//! the phase `e^{−i u k·c}` that data centred at `v = c` picks up along the
//! shear (`c` is the box centre) and the local decay `e^{−a|ξ|^{2β}u}`; both
//! are integrated exactly, which keeps stiff steps accurate. Lattice
//! points pushed outside the box are treated as zero (whole-line semantics).

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::{signed_index, slot_of, AxisKind, GridSpec, Layout, Rep};
use crate::quadrature::integrate;

/// `∫₀^{h} |ξ + u k|^{2β} du`, split at the point of closest approach.
pub fn step_exponent(xi: &[f64], k: &[f64], h: f64, beta: f64, tol: f64) -> Result<f64> {
    let k2: f64 = k.iter().map(|c| c * c).sum();
    let xi2: f64 = xi.iter().map(|c| c * c).sum();
    if k2 == 0.0 {
        return Ok(h * xi2.powf(beta));
    }
    let dot: f64 = xi.iter().zip(k).map(|(a, b)| a * b).sum();
    // |ξ + u k|² = xi2 + 2u dot + u² k2
    let f = |u: f64| (xi2 + 2.0 * u * dot + u * u * k2).max(0.0).powf(beta);
    let u_star = -dot / k2;
    let rel = 1e-13;
    if u_star > 0.0 && u_star < h {
        Ok(integrate(f, 0.0, u_star, tol / 2.0, rel)? + integrate(f, u_star, h, tol / 2.0, rel)?)
    } else {
        integrate(f, 0.0, h, tol, rel)
    }
}

/// `∫₀¹ s^p e^{−iΩs} ds` for `p = 0..=3`; `Im Ω <= 0` adds decay.
fn oscillatory_moments(omega: Complex64) -> [Complex64; 4] {
    let mut mu = [Complex64::default(); 4];
    let i = Complex64::new(0.0, 1.0);
    if omega.norm() < 1.0 {
        for (p, m) in mu.iter_mut().enumerate() {
            let mut term = Complex64::new(1.0, 0.0);
            for n in 0..40 {
                if n > 0 {
                    term *= -i * omega / n as f64;
                }
                *m += term / (p + n + 1) as f64;
            }
        }
    } else {
        let e = (-i * omega).exp();
        let iw = i * omega;
        mu[0] = (1.0 - e) / iw;
        for p in 1..4 {
            mu[p] = (p as f64 * mu[p - 1] - e) / iw;
        }
    }
    mu
}

/// Weights of `∫₀¹ e^{−iΩs} ℓ_j(s) ds` for the Lagrange basis through the
/// given integer nodes (one to four). With nodes `0..=3` and `Ω = 0` these
/// are the Adams–Moulton weights.
pub fn source_weights(nodes: &[i64], omega: Complex64) -> Vec<Complex64> {
    assert!((1..=4).contains(&nodes.len()));
    let mu = oscillatory_moments(omega);
    nodes
        .iter()
        .map(|&sj| {
            // monomial coefficients of ℓ_j
            let mut coef = vec![1.0];
            let mut denom = 1.0;
            for &si in nodes.iter().filter(|&&si| si != sj) {
                let mut next = vec![0.0; coef.len() + 1];
                for (d, c) in coef.iter().enumerate() {
                    next[d + 1] += c;
                    next[d] -= c * si as f64;
                }
                coef = next;
                denom *= (sj - si) as f64;
            }
            coef.iter().zip(&mu).map(|(c, m)| m * (c / denom)).sum()
        })
        .collect()
}

/// Lattice offset per step: `ξ → ξ + shift·m` for `k = m·(2π/L_x)`.
fn lattice_shift(grid: &GridSpec, h: f64) -> Result<i64> {
    let unit = grid.box_len(AxisKind::X) / grid.box_len(AxisKind::V);
    let s = h / unit;
    let r = s.round();
    if r < 1.0 || (s - r).abs() > 1e-9 * s.max(1.0) {
        return Err(Error::InadmissibleStep { dt: h, unit });
    }
    Ok(r as i64)
}

/// For every phase-space slot, the slot reached by `ξ → ξ + j·shift·m`.
fn shift_map(grid: &GridSpec, offset: i64) -> Vec<Option<usize>> {
    let n = grid.n();
    let (nx, nv) = (grid.len(AxisKind::X), grid.len(AxisKind::V));
    let vp = grid.v_points();
    (0..grid.phase_len())
        .into_par_iter()
        .map(|idx| {
            let xc = grid.components(AxisKind::X, idx / vp);
            let vc = grid.components(AxisKind::V, idx % vp);
            let mut v_flat = 0usize;
            for c in 0..n {
                let m = signed_index(nx, xc[c]);
                let xi = signed_index(nv, vc[c]) + offset * m;
                v_flat = v_flat * nv + slot_of(nv, xi)?;
            }
            Some((idx / vp) * vp + v_flat)
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
pub struct DuhamelOracle {
    pub beta: f64,
    /// Constant diffusivity `a`.
    pub a: f64,
    /// Absolute tolerance of the exponent quadrature.
    pub tol: f64,
}

impl DuhamelOracle {
    pub fn new(beta: f64) -> Self {
        DuhamelOracle {
            beta,
            a: 1.0,
            tol: 1e-10,
        }
    }

    pub fn with_diffusivity(mut self, a: f64) -> Self {
        self.a = a;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::param("beta", format!("{} is outside (0, 1]", self.beta)));
        }
        if !(self.a >= 0.0 && self.a.is_finite()) {
            return Err(Error::param("a", "must be finite and >= 0"));
        }
        Ok(())
    }

    /// `−a ∫₀^{h}|ξ + u k|^{2β} du` on the phase-space frequency lattice.
    fn log_factor(&self, grid: &GridSpec, h: f64) -> Result<Vec<f64>> {
        let (beta, a, tol) = (self.beta, self.a, self.tol);
        if a == 0.0 {
            return Ok(vec![0.0; grid.phase_len()]);
        }
        grid.phase_map(Rep::Frequency, Rep::Frequency, |k, xi| {
            step_exponent(xi, k, h, beta, tol / a).map(|e| -a * e)
        })
        .into_iter()
        .collect()
    }

    /// Solution of the homogeneous problem at an admissible time `t` from a
    /// phase-space datum. Returns `(k, ξ)` frequency representation.
    pub fn propagate(&self, f0: &Field, t: f64) -> Result<Field> {
        self.validate()?;
        if f0.layout() != Layout::Phase {
            return Err(Error::Representation("initial datum must be a phase-space field".into()));
        }
        let grid = f0.grid().clone();
        let f0h = f0.with_rep(&[AxisKind::X, AxisKind::V], Rep::Frequency);
        if t == 0.0 {
            return Ok(f0h);
        }
        let shift = lattice_shift(&grid, t)?;
        let log_f = self.log_factor(&grid, t)?;
        let map = shift_map(&grid, shift);
        let old = f0h.data();
        let data = (0..grid.phase_len())
            .into_par_iter()
            .map(|p| match map[p] {
                Some(q) => old[q] * log_f[p].exp(),
                None => Complex64::default(),
            })
            .collect();
        Field::from_data(grid, Layout::Phase, f0h.reps().to_vec(), data)
    }

    /// Solves on the time samples `t_j = j·L_t/N_t` of `g`'s grid with
    /// `f(0) = f0` (zero when `None`). The output is physical in `t` and in
    /// the frequency representation in `(x, v)`.
    pub fn solve(&self, g: &Field, f0: Option<&Field>) -> Result<Field> {
        self.validate()?;
        if g.layout() != Layout::Full {
            return Err(Error::Representation("source must be a (t, x, v) field".into()));
        }
        let grid = g.grid().clone();
        let h = grid.spacing(AxisKind::T);
        let shift = lattice_shift(&grid, h)?;
        let mut gh = g.with_rep(&[AxisKind::X, AxisKind::V], Rep::Frequency);
        gh.set_rep(&[AxisKind::T], Rep::Physical);

        let p = grid.phase_len();
        let nt = grid.len(AxisKind::T);
        let log_f = self.log_factor(&grid, h)?;

        // Node j sits at u = j·h, time t_{m+1−j}; j ranges over −2..=3.
        const LO: i64 = -2;
        let maps: Vec<Vec<Option<usize>>> = (LO..=3).map(|j| shift_map(&grid, j * shift)).collect();
        let map = |j: i64| &maps[(j - LO) as usize];
        // log E_j: decay between u = 0 and u = j·h along the characteristic.
        let mut log_e: Vec<Vec<f64>> = vec![Vec::new(); 6];
        log_e[(0 - LO) as usize] = vec![0.0; p];
        for j in 1..=3i64 {
            let prev = log_e[(j - 1 - LO) as usize].clone();
            let through = map(j - 1);
            log_e[(j - LO) as usize] = (0..p)
                .into_par_iter()
                .map(|idx| match through[idx] {
                    Some(q) => prev[idx] + log_f[q],
                    None => f64::NEG_INFINITY,
                })
                .collect();
        }
        for j in (LO..0).rev() {
            let prev = log_e[(j + 1 - LO) as usize].clone();
            let through = map(j);
            log_e[(j - LO) as usize] = (0..p)
                .into_par_iter()
                .map(|idx| match through[idx] {
                    Some(q) => prev[idx] - log_f[q],
                    None => f64::NEG_INFINITY,
                })
                .collect();
        }

        let mut out = vec![Complex64::default(); grid.full_len()];
        if let Some(f0) = f0 {
            if f0.layout() != Layout::Phase || **f0.grid() != *grid {
                return Err(Error::GridMismatch("initial datum does not match the source grid".into()));
            }
            let f0h = f0.with_rep(&[AxisKind::X, AxisKind::V], Rep::Frequency);
            out[..p].copy_from_slice(f0h.data());
        }

        // Rate at u = 0 and centre phase per phase point.
        let centre = 0.5 * grid.box_len(AxisKind::V);
        let (beta, a) = (self.beta, self.a);
        let local: Vec<(f64, f64)> = grid.phase_map(Rep::Frequency, Rep::Frequency, |k, xi| {
            let xi2: f64 = xi.iter().map(|c| c * c).sum();
            (a * xi2.powf(beta) * h, k.iter().sum::<f64>() * centre * h)
        });
        let log_e = &log_e;
        // Folded weights of one node window at one phase point: the source
        // along the characteristic is e^{−iωs}·e^{−ρs}·R(s)·G(s) with the
        // centre phase and the decay at the end point exact, and R·G
        // interpolated. When R varies too much over the window the stencil
        // shrinks toward the latest node.
        let point_weights = |idx: usize, window: &[i64]| -> Vec<(i64, Complex64)> {
            let (rho, omega) = local[idx];
            let log_r = |j: i64| log_e[(j - LO) as usize][idx] + rho * j as f64;
            let tame = |nodes: &[i64]| nodes.iter().all(|&j| log_r(j).is_finite() && log_r(j).abs() <= 1.0);
            let nodes: &[i64] = if tame(window) {
                window
            } else if tame(&[0, 1]) {
                &[0, 1]
            } else {
                &[0]
            };
            let big = Complex64::new(omega, -rho);
            source_weights(nodes, big)
                .into_iter()
                .zip(nodes)
                .map(|(w, &j)| {
                    let fold = Complex64::from_polar(h * log_r(j).exp(), omega * j as f64);
                    (j, w * fold)
                })
                .collect()
        };

        let gd = gh.data();
        let mut cached: Option<(i64, Vec<Vec<(i64, Complex64)>>)> = None;
        for m in 0..nt - 1 {
            // earliest window whose times t_{m+1−j} stay inside [0, T)
            let j0 = (m as i64 + 1 - 3).clamp(LO, 0).max(m as i64 + 2 - nt as i64);
            if cached.as_ref().is_none_or(|c| c.0 != j0) {
                let window: Vec<i64> = (j0..j0 + 4).collect();
                cached = Some((j0, (0..p).into_par_iter().map(|idx| point_weights(idx, &window)).collect()));
            }
            let weights = &cached.as_ref().expect("filled above").1;
            let (done, rest) = out.split_at_mut((m + 1) * p);
            let old = &done[m * p..];
            rest[..p].par_iter_mut().enumerate().for_each(|(idx, z)| {
                let mut acc = match map(1)[idx] {
                    Some(s) => old[s] * log_f[idx].exp(),
                    None => Complex64::default(),
                };
                for &(j, wj) in &weights[idx] {
                    if let Some(s) = map(j)[idx] {
                        let time = (m as i64 + 1 - j) as usize;
                        acc += gd[time * p + s] * wj;
                    }
                }
                *z = acc;
            });
        }
        let mut rep = gh.reps().to_vec();
        rep[0] = Rep::Physical;
        Field::from_data(grid, Layout::Full, rep, out)
    }
}
