//! Strang splitting for the Cauchy problem on `[0, T]`.
//!
//! The state lives in the mixed representation (`x` frequency, `v`
//! physical), where transport is the diagonal phase `e^{−i k·v dt/2}`.
//! Diffusion is `e^{−a|ξ|^{2β}dt}` for constant `a` and an implicit Euler
//! step `(I + dt·a·Q)⁻¹` otherwise. The source enters by the trapezoidal
//! rule around the homogeneous step:
//! `f_{n+1} = S(f_n + dt/2·g_n) + dt/2·g_{n+1}`.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::{CoefficientModel, ModelParams};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::{AxisKind, GridSpec, Layout, Rep};
use crate::snapshot;

/// Inner iteration limits of the variable-coefficient diffusion solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InnerSolve {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for InnerSolve {
    fn default() -> Self {
        InnerSolve {
            tol: 1e-10,
            max_iter: 200,
        }
    }
}

/// Precomputed factors for one step size.
pub struct Stepper {
    grid: Arc<GridSpec>,
    params: ModelParams,
    dt: f64,
    half_phase: Vec<Complex64>,
    /// `|ξ|^{2β}` on the `v` lattice of one `x` slab.
    symbol: Vec<f64>,
    /// `e^{−a|ξ|^{2β}dt}` for constant `a`.
    decay: Option<Vec<f64>>,
    pub inner: InnerSolve,
}

/// Outcome of one step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct StepStats {
    pub iterations: usize,
    pub residual: f64,
}

impl Stepper {
    pub fn new(grid: Arc<GridSpec>, params: &ModelParams, dt: f64) -> Result<Self> {
        params.validate()?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::param("dt", format!("{dt} must be positive")));
        }
        if let CoefficientModel::Variable(c) = &params.coefficient {
            if **c.grid() != *grid {
                return Err(Error::GridMismatch("coefficient sampled on another grid".into()));
            }
        }
        let half_phase = grid.phase_map(Rep::Frequency, Rep::Physical, |k, v| {
            let kv: f64 = k.iter().zip(v).map(|(a, b)| a * b).sum();
            Complex64::from_polar(1.0, -kv * dt / 2.0)
        });
        let xi_lattice = grid.phase_map(Rep::Frequency, Rep::Frequency, |_, xi| {
            xi.iter().map(|z| z * z).sum::<f64>().powf(params.beta)
        });
        let symbol = xi_lattice[..grid.v_points()].to_vec();
        let decay = match params.coefficient {
            CoefficientModel::Constant(a) => Some(symbol.iter().map(|s| (-a * s * dt).exp()).collect()),
            CoefficientModel::Variable(_) => None,
        };
        Ok(Stepper {
            grid,
            params: params.clone(),
            dt,
            half_phase,
            symbol,
            decay,
            inner: InnerSolve::default(),
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn require_state(&self, f: &Field) -> Result<()> {
        if f.layout() != Layout::Phase || **f.grid() != *self.grid {
            return Err(Error::GridMismatch("state must be a phase-space field on the stepper grid".into()));
        }
        Ok(())
    }

    /// `Q` applied slab by slab; `u` is physical in `v`.
    fn apply_v_symbol(u: &mut Field, weights: impl Fn(usize, usize) -> f64 + Sync) {
        let nvp = u.grid().v_points();
        u.set_rep(&[AxisKind::V], Rep::Frequency);
        u.data_mut()
            .par_chunks_mut(nvp)
            .enumerate()
            .for_each(|(slab, chunk)| {
                for (j, z) in chunk.iter_mut().enumerate() {
                    *z *= weights(slab, j);
                }
            });
        u.set_rep(&[AxisKind::V], Rep::Physical);
    }

    /// Solves `(I + dt·a·Q) u = r` with `x` and `v` physical by Richardson
    /// iteration preconditioned with `I + dt·ā_x·Q` per `x` slab.
    fn implicit_diffusion(&self, r: &Field, a: &[f64]) -> Result<(Field, StepStats)> {
        let nvp = self.grid.v_points();
        let dt = self.dt;
        let a_bar: Vec<f64> = a
            .chunks(nvp)
            .map(|s| {
                let (lo, hi) = s.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &x| (l.min(x), h.max(x)));
                0.5 * (lo + hi)
            })
            .collect();
        let symbol = &self.symbol;
        let precondition = |res: &mut Field| {
            Self::apply_v_symbol(res, |slab, j| 1.0 / (1.0 + dt * a_bar[slab] * symbol[j]));
        };
        let r_norm = r.norm();
        let mut u = r.clone();
        precondition(&mut u);
        if r_norm == 0.0 {
            return Ok((u, StepStats::default()));
        }
        for it in 1..=self.inner.max_iter {
            // res = r − u − dt·a·Q u
            let mut qu = u.clone();
            Self::apply_v_symbol(&mut qu, |_, j| symbol[j]);
            let mut res = r.clone();
            res.data_mut()
                .par_iter_mut()
                .zip(u.data().par_iter().zip(qu.data().par_iter().zip(a.par_iter())))
                .for_each(|(z, (uu, (q, aa)))| *z -= uu + q * (dt * aa));
            let rel = res.norm() / r_norm;
            if rel <= self.inner.tol {
                return Ok((
                    u,
                    StepStats {
                        iterations: it - 1,
                        residual: rel,
                    },
                ));
            }
            precondition(&mut res);
            u.axpy(Complex64::new(1.0, 0.0), &res)?;
            if it == self.inner.max_iter {
                return Err(Error::Convergence {
                    what: "implicit diffusion",
                    iterations: it,
                    residual: rel,
                });
            }
        }
        unreachable!("loop returns on its last iteration")
    }

    /// One homogeneous step from `t` to `t + dt`. The state is kept in the
    /// mixed representation.
    pub fn homogeneous(&self, f: &Field, t: f64) -> Result<(Field, StepStats)> {
        self.require_state(f)?;
        let mut u = f.with_rep(&[AxisKind::X], Rep::Frequency);
        u.set_rep(&[AxisKind::V], Rep::Physical);
        u.mul_phase(&self.half_phase);
        let mut stats = StepStats::default();
        match (&self.params.coefficient, &self.decay) {
            (CoefficientModel::Constant(a), _) if *a == 0.0 => {}
            (CoefficientModel::Constant(_), Some(decay)) => {
                Self::apply_v_symbol(&mut u, |_, j| decay[j]);
            }
            (CoefficientModel::Variable(c), _) => {
                u.set_rep(&[AxisKind::X], Rep::Physical);
                let a = c.at_time(t + 0.5 * self.dt);
                let (mut w, s) = self.implicit_diffusion(&u, &a)?;
                if self.params.dealias {
                    w.dealias();
                }
                stats = s;
                w.set_rep(&[AxisKind::X], Rep::Frequency);
                u = w;
            }
            _ => unreachable!("constant coefficients always carry a decay table"),
        }
        u.mul_phase(&self.half_phase);
        Ok((u, stats))
    }

    /// Full step with trapezoidal source terms `g(t)` and `g(t + dt)`.
    pub fn step(&self, f: &Field, t: f64, g: Option<(&Field, &Field)>) -> Result<(Field, StepStats)> {
        match g {
            None => self.homogeneous(f, t),
            Some((g0, g1)) => {
                let half = Complex64::new(0.5 * self.dt, 0.0);
                let mut pre = f.with_rep(&[AxisKind::X], Rep::Frequency);
                pre.set_rep(&[AxisKind::V], Rep::Physical);
                pre.axpy(half, &mixed(g0))?;
                let (mut out, stats) = self.homogeneous(&pre, t)?;
                out.axpy(half, &mixed(g1))?;
                Ok((out, stats))
            }
        }
    }
}

fn mixed(f: &Field) -> Field {
    let mut m = f.with_rep(&[AxisKind::X], Rep::Frequency);
    m.set_rep(&[AxisKind::V], Rep::Physical);
    m
}

/// One homogeneous Strang step; convenience wrapper around [`Stepper`].
pub fn step_strang(f: &Field, dt: f64, params: &ModelParams) -> Result<Field> {
    let stepper = Stepper::new(f.grid().clone(), params, dt)?;
    Ok(stepper.homogeneous(f, 0.0)?.0)
}

/// Initial datum, optional source sampled every `dt`, horizon and step count.
#[derive(Debug, Clone)]
pub struct CauchyProblem {
    pub f0: Field,
    /// `(t, x, v)` field whose time spacing equals `T/steps`; sample
    /// `steps` wraps to sample 0 when the time axis is exactly `[0, T)`.
    pub source: Option<Field>,
    pub horizon: f64,
    pub steps: usize,
}

impl CauchyProblem {
    pub fn homogeneous(f0: Field, horizon: f64, steps: usize) -> Self {
        CauchyProblem {
            f0,
            source: None,
            horizon,
            steps,
        }
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::param("horizon", "must be positive"));
        }
        if self.steps == 0 {
            return Err(Error::param("steps", "must be at least 1"));
        }
        if self.f0.layout() != Layout::Phase {
            return Err(Error::Representation("initial datum must be a phase-space field".into()));
        }
        if let Some(g) = &self.source {
            if g.layout() != Layout::Full || **g.grid() != **self.f0.grid() {
                return Err(Error::GridMismatch("source must be a (t, x, v) field on the datum's grid".into()));
            }
            let h = g.grid().spacing(AxisKind::T);
            if (h - self.dt()).abs() > 1e-12 * h {
                return Err(Error::param(
                    "steps",
                    format!("source time spacing {h} differs from dt = {}", self.dt()),
                ));
            }
            let nt = g.grid().len(AxisKind::T);
            let wraps = (g.grid().box_len(AxisKind::T) - self.horizon).abs() <= 1e-12 * self.horizon;
            if self.steps >= nt && !(self.steps == nt && wraps) {
                return Err(Error::param("steps", "source does not cover the horizon"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveOptions {
    /// Keep every `record_stride`-th state; the final state is always kept.
    pub record_stride: usize,
    pub inner: InnerSolve,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            record_stride: 1,
            inner: InnerSolve::default(),
        }
    }
}

/// Recorded states in the `(k, ξ)` frequency representation.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Field>,
    /// Inner-solve residual of the step that produced each state.
    pub residuals: Vec<f64>,
    pub max_inner_iterations: usize,
}

#[derive(Serialize)]
struct TrajectoryManifest<'a> {
    beta: f64,
    coefficient: &'a str,
    steps: usize,
    dt: f64,
    times: &'a [f64],
    files: Vec<String>,
    residuals: &'a [f64],
    norms: Vec<f64>,
    max_inner_iterations: usize,
}

impl Trajectory {
    pub fn final_state(&self) -> &Field {
        self.states.last().expect("a trajectory holds at least the initial state")
    }

    /// Writes one snapshot per recorded state and `manifest.json`. Returns
    /// every path written.
    pub fn write(&self, dir: &Path, params: &ModelParams) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let mut files = Vec::new();
        for (i, s) in self.states.iter().enumerate() {
            let name = format!("state_{i:05}.hypo");
            let path = dir.join(&name);
            snapshot::write(s, &path)?;
            files.push(name);
            written.push(path);
        }
        let coefficient = match params.coefficient {
            CoefficientModel::Constant(_) => "constant",
            CoefficientModel::Variable(_) => "variable",
        };
        let dt = if self.times.len() > 1 { self.times[1] - self.times[0] } else { 0.0 };
        let manifest = TrajectoryManifest {
            beta: params.beta,
            coefficient,
            steps: self.times.len().saturating_sub(1),
            dt,
            times: &self.times,
            files,
            residuals: &self.residuals,
            norms: self.states.iter().map(Field::norm).collect(),
            max_inner_iterations: self.max_inner_iterations,
        };
        let path = dir.join("manifest.json");
        std::fs::write(&path, serde_json::to_string_pretty(&manifest)?)?;
        written.push(path);
        Ok(written)
    }

    /// Stacks the states into a `(t, x, v)` field on `grid`, whose time axis
    /// must match the recorded times.
    pub fn to_field(&self, grid: Arc<GridSpec>) -> Result<Field> {
        let nt = grid.len(AxisKind::T);
        if self.states.len() < nt {
            return Err(Error::GridMismatch("fewer recorded states than time samples".into()));
        }
        Field::from_slices(grid, &self.states[..nt])
    }
}

pub fn solve_cauchy(problem: &CauchyProblem, params: &ModelParams, opts: &SolveOptions) -> Result<Trajectory> {
    problem.validate()?;
    if opts.record_stride == 0 {
        return Err(Error::param("record_stride", "must be at least 1"));
    }
    let grid = problem.f0.grid().clone();
    let dt = problem.dt();
    let mut stepper = Stepper::new(grid.clone(), params, dt)?;
    stepper.inner = opts.inner;
    let spectral = |f: &Field| f.with_rep(&[AxisKind::X, AxisKind::V], Rep::Frequency);
    let slices: Option<Vec<Field>> = match &problem.source {
        None => None,
        Some(g) => {
            let mut g = g.clone();
            g.set_rep(&[AxisKind::T], Rep::Physical);
            Some(
                (0..grid.len(AxisKind::T))
                    .map(|j| g.time_slice(j))
                    .collect::<Result<_>>()?,
            )
        }
    };
    let mut f = problem.f0.clone();
    let mut traj = Trajectory {
        times: vec![0.0],
        states: vec![spectral(&f)],
        residuals: vec![0.0],
        max_inner_iterations: 0,
    };
    for n in 0..problem.steps {
        let t = n as f64 * dt;
        let g = slices.as_ref().map(|s| {
            let len = s.len();
            (&s[n % len], &s[(n + 1) % len])
        });
        let (next, stats) = stepper.step(&f, t, g)?;
        f = next;
        traj.max_inner_iterations = traj.max_inner_iterations.max(stats.iterations);
        if (n + 1) % opts.record_stride == 0 || n + 1 == problem.steps {
            traj.times.push((n + 1) as f64 * dt);
            traj.states.push(spectral(&f));
            traj.residuals.push(stats.residual);
        }
    }
    Ok(traj)
}
