//! Acceptance criteria, one line each. Pass criterion numbers as arguments
//! to run a subset.

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use hypo_core::commutators::{commutator_apply, kernel_commutator_1d, KernelOptions, KernelQuadrature, op_norm_estimate, schur_row_bounds, CommutatorSpec, ModifierSpec, OpNormOptions, Weight};
use hypo_core::harness::{cmd_solve, cmd_verify, run_dir, ExperimentConfig, RunManifest, CATALOGUE};
use hypo_core::data::{RandomFieldSpec, SpectralData};
use hypo_core::model::{solve_cauchy, CauchyProblem, DuhamelOracle, ModelParams, SolveOptions};
use hypo_core::model::CoefficientRecipe;
use hypo_core::diagnostics::{step4_terms, balance_lambda, exponent_identity_defect, holder_vs_prop, split_all, SplitParams};
use hypo_core::norms::{frac_norm, gain_exponent, Check, Corpus, CorpusKind, CorpusSpec, FamilySpec, FiberFamily};
use hypo_core::symbol::apply_transport;
use hypo_core::{apply_multiplier, AxisKind, Field, GridSpec, Layout, MultiplierSpec, Rep};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        passed,
        detail: detail.into(),
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn noise(grid: &Arc<GridSpec>, layout: Layout, seed: u64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..grid.layout_len(layout))
        .map(|_| Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)))
        .collect();
    let reps = vec![Rep::Physical; grid.axes(layout).len()];
    Field::from_data(grid.clone(), layout, reps, data).unwrap()
}

// 1: spectral core invariants

fn spectral_invariants(n: usize) -> Vec<(&'static str, f64, f64)> {
    let grid = Arc::new(GridSpec::new(1, n, n, n, 2.0 * PI, 2.0 * PI, 8.0 * PI).unwrap());
    let f = noise(&grid, Layout::Full, 1);
    let g = noise(&grid, Layout::Full, 2);
    let mut out = Vec::new();

    let fh = f.with_rep(&f.all_kinds(), Rep::Frequency);
    out.push(("plancherel", rel(fh.norm(), f.norm()), 1e-12));

    // one v line against a direct DFT with the unitary scaling
    let fv = f.with_rep(&[AxisKind::V], Rep::Frequency);
    let line = &f.data()[..n];
    let mut worst = 0.0f64;
    for m in 0..n {
        let direct: Complex64 = line
            .iter()
            .enumerate()
            .map(|(j, z)| z * Complex64::from_polar(1.0, -2.0 * PI * (j * m) as f64 / n as f64))
            .sum::<Complex64>()
            / (n as f64).sqrt();
        worst = worst.max((direct - fv.data()[m]).norm());
    }
    let scale = line.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    out.push(("direct-dft", worst / scale, 1e-12));

    let spectral = |h: &Field| h.with_rep(&[AxisKind::X, AxisKind::V], Rep::Frequency);
    let (fs, gs) = (spectral(&f), spectral(&g));
    for (name, m) in [
        ("self-adjoint-frac-v", MultiplierSpec::frac_v(0.35)),
        ("self-adjoint-aniso", MultiplierSpec::aniso(0.75)),
        ("self-adjoint-bracket", MultiplierSpec::bracket(0.5, 1.0)),
    ] {
        let mf = apply_multiplier(&fs, &m).unwrap();
        let mg = apply_multiplier(&gs, &m).unwrap();
        let (a, b) = (mf.inner(&gs).unwrap(), fs.inner(&mg).unwrap());
        out.push((name, (a - b).norm() / (mf.norm() * gs.norm()), 1e-10));
    }

    let mixed = |h: &Field| {
        let mut o = h.with_rep(&[AxisKind::X], Rep::Frequency);
        o.set_rep(&[AxisKind::V], Rep::Physical);
        o
    };
    let (fm, gm) = (mixed(&f), mixed(&g));
    let (tf, tg) = (apply_transport(&fm).unwrap(), apply_transport(&gm).unwrap());
    let skew = tf.inner(&gm).unwrap() + fm.inner(&tg).unwrap();
    out.push(("transport-skew", skew.norm() / (tf.norm() * gm.norm()), 1e-10));
    // T is multiplication by i k·v with k the x frequency
    let (kx, vs) = (grid.freqs(AxisKind::X), grid.coords(AxisKind::V));
    let mut worst = 0.0f64;
    for (idx, (a, b)) in fm.data().iter().zip(tf.data()).enumerate() {
        let (xs, vsl) = ((idx / n) % n, idx % n);
        let want = a * Complex64::new(0.0, kx[xs] * vs[vsl]);
        worst = worst.max((want - b).norm());
    }
    out.push(("transport-direct", worst / tf.max_abs(), 1e-12));

    let (b1, b2) = (0.3, 0.45);
    let two = apply_multiplier(&apply_multiplier(&fs, &MultiplierSpec::frac_v(b1)).unwrap(), &MultiplierSpec::frac_v(b2)).unwrap();
    let one = apply_multiplier(&fs, &MultiplierSpec::frac_v(b1 + b2)).unwrap();
    out.push(("composition", two.sub(&one).unwrap().norm() / one.norm(), 1e-12));
    out
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for n in [64, 128] {
        let mut worst = ("", 0.0f64);
        for (name, err, tol) in spectral_invariants(n) {
            ok &= err <= tol;
            if err / tol > worst.1 {
                worst = (name, err / tol);
            }
            if err > tol {
                parts.push(format!("{n}^3 {name} {err:.1e} > {tol:.0e}"));
            }
        }
        parts.push(format!("{n}^3 worst err/tol {:.1e} ({})", worst.1, worst.0));
    }
    let secs = start.elapsed().as_secs_f64();
    ok &= secs < 60.0;
    parts.push(format!("{secs:.1}s"));
    verdict(ok, parts.join(", "))
}

// 2: stepper, oracle and an analytic manufactured solution

/// `f = Σ e^{ikx} ψ_k(t) G_k(v)` with Gaussians `G_k`, and its source for
/// `β = 1`, `a = 1`, written out by hand.
struct Manufactured {
    centre: f64,
}

const MODES: [(f64, f64); 3] = [(0.0, 2.0), (1.0, 2.5), (2.0, 3.0)];

/// Time profiles and their derivatives; `τ = t / TAU`.
fn psi(k: usize, t: f64) -> (Complex64, Complex64) {
    let s = t / TAU;
    let (p, dp) = match k {
        0 => (Complex64::new(1.0 + 0.5 * (2.0 * s).sin(), 0.0), Complex64::new((2.0 * s).cos(), 0.0)),
        1 => (Complex64::new((3.0 * s).cos(), 0.3), Complex64::new(-3.0 * (3.0 * s).sin(), 0.0)),
        _ => (Complex64::new(0.5 * (-s).exp(), 0.0), Complex64::new(-0.5 * (-s).exp(), 0.0)),
    };
    (p, dp / TAU)
}

impl Manufactured {
    fn f(&self, t: f64, x: f64, v: f64) -> Complex64 {
        MODES
            .iter()
            .enumerate()
            .map(|(i, &(k, s))| {
                let g = (-(v - self.centre).powi(2) / (2.0 * s * s)).exp();
                psi(i, t).0 * g * Complex64::from_polar(1.0, k * x)
            })
            .sum()
    }

    fn g(&self, t: f64, x: f64, v: f64) -> Complex64 {
        MODES
            .iter()
            .enumerate()
            .map(|(i, &(k, s))| {
                let y = v - self.centre;
                let gauss = (-y * y / (2.0 * s * s)).exp();
                let second = gauss * (y * y / s.powi(4) - 1.0 / (s * s));
                let (p, dp) = psi(i, t);
                let val = dp * gauss + Complex64::new(0.0, k * v) * p * gauss - p * second;
                val * Complex64::from_polar(1.0, k * x)
            })
            .sum()
    }
}

// The oracle steps by one lattice shear lx/lv = T/16. A step of that size
// turns the transport phase at the box centre by a multiple of π, so the
// stepper cannot share it and runs on the same lattice at T/1024.
const C2_LX: f64 = 2.0 * PI;
const C2_LV: f64 = 32.0 * PI;
const C2_T: f64 = 1.0;
const TAU: f64 = 1.0;

/// Stepper states at `t = j·T/16`, `dt = T/nt`.
fn stepper_run(m: &Manufactured, nt: usize) -> Vec<Field> {
    let grid = Arc::new(GridSpec::new(1, nt, 128, 128, C2_T, C2_LX, C2_LV).unwrap());
    let g = Field::from_fn(grid.clone(), Layout::Full, |t, x, v| m.g(t, x[0], v[0]));
    let f0 = Field::from_fn(grid.clone(), Layout::Phase, |_, x, v| m.f(0.0, x[0], v[0]));
    let stride = nt / 16;
    let problem = CauchyProblem {
        f0,
        source: Some(g),
        horizon: (nt - 1) as f64 * C2_T / nt as f64,
        steps: nt - 1,
    };
    let traj = solve_cauchy(&problem, &ModelParams::constant(1.0), &SolveOptions {
        record_stride: stride,
        ..Default::default()
    })
    .unwrap();
    // the final state is recorded in addition to the stride
    traj.states.into_iter().take(16).collect()
}

/// Oracle states at `t = j·T/16` on the same time grid.
fn oracle_run(m: &Manufactured, nt: usize) -> Vec<Field> {
    let grid = Arc::new(GridSpec::new(1, nt, 128, 128, C2_T, C2_LX, C2_LV).unwrap());
    let g = Field::from_fn(grid.clone(), Layout::Full, |t, x, v| m.g(t, x[0], v[0]));
    let f0 = Field::from_fn(grid.clone(), Layout::Phase, |_, x, v| m.f(0.0, x[0], v[0]));
    let sol = DuhamelOracle::new(1.0).solve(&g, Some(&f0)).unwrap();
    (0..16).map(|j| sol.time_slice(j * nt / 16).unwrap()).collect()
}

fn exact_states(m: &Manufactured) -> Vec<Field> {
    let grid = Arc::new(GridSpec::new(1, 16, 128, 128, C2_T, C2_LX, C2_LV).unwrap());
    (0..16)
        .map(|j| {
            let t = j as f64 * C2_T / 16.0;
            Field::from_fn(grid.clone(), Layout::Phase, |_, x, v| m.f(t, x[0], v[0]))
                .with_rep(&[AxisKind::X, AxisKind::V], Rep::Frequency)
        })
        .collect()
}

/// Homogeneous problem from a windowed random datum: stepper states at
/// `t = j·T/16` against the oracle's exact lattice propagation.
fn homogeneous_errors(beta: f64) -> (f64, f64) {
    let grid = Arc::new(GridSpec::new(1, 4, 128, 128, C2_T, C2_LX, C2_LV).unwrap());
    let spec = RandomFieldSpec {
        band_t: 0,
        band_x: 2,
        band_v: 4,
        decay_q: 2.0,
        // spectrum below e^{-18} where the shear meets the lattice edge
        window: Some(3.0),
    };
    let f0 = SpectralData::random(1, [C2_T, C2_LX, C2_LV], &spec, 21).sample_phase(&grid).unwrap();
    let params = ModelParams::constant(beta);
    let oracle = DuhamelOracle::new(beta);
    let exact: Vec<Field> = (0..=16).map(|j| oracle.propagate(&f0, j as f64 * C2_T / 16.0).unwrap()).collect();
    let run = |steps: usize| {
        let traj = solve_cauchy(&CauchyProblem::homogeneous(f0.clone(), C2_T, steps), &params, &SolveOptions {
            record_stride: steps / 16,
            ..Default::default()
        })
        .unwrap();
        traj.states
            .iter()
            .map(|s| s.with_rep(&[AxisKind::X, AxisKind::V], Rep::Frequency))
            .collect::<Vec<_>>()
    };
    let (s256, s512, s1024) = (run(256), run(512), run(1024));
    // the oracle moves spectra only by whole lattice shifts, so for beta < 1 the
    // two differ by a box-size term that does not depend on dt; the order is
    // therefore taken from successive halvings of the stepper itself
    let order = (global_error(&s256, &s512) / global_error(&s512, &s1024)).log2();
    (global_error(&s1024, &exact), order)
}

fn global_error(got: &[Field], want: &[Field]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (a, b) in got.iter().zip(want) {
        let a = a.with_rep(&[AxisKind::X, AxisKind::V], Rep::Frequency);
        let d: f64 = a.data().iter().zip(b.data()).map(|(p, q)| (p - q).norm_sqr()).sum();
        num += d;
        den += b.data().iter().map(|z| z.norm_sqr()).sum::<f64>();
    }
    (num / den).sqrt()
}

fn criterion_2() -> Verdict {
    let start = Instant::now();
    let m = Manufactured { centre: 0.5 * C2_LV };
    let exact = exact_states(&m);
    let fine = stepper_run(&m, 1024);
    let e_fine = global_error(&fine, &exact);
    let e_coarse = global_error(&stepper_run(&m, 512), &exact);
    let order = (e_coarse / e_fine).log2();

    let oracle = oracle_run(&m, 16);
    let e_oracle = global_error(&oracle, &exact);
    let oracle_freq: Vec<Field> = oracle
        .iter()
        .map(|s| s.with_rep(&[AxisKind::X, AxisKind::V], Rep::Frequency))
        .collect();
    let e_cross = global_error(&fine, &oracle_freq);
    let mut ok = e_fine <= 1e-3 && (order - 2.0).abs() <= 0.4;
    let mut homogeneous = Vec::new();
    for beta in [0.5, 1.0] {
        let (f, o) = homogeneous_errors(beta);
        ok &= f <= 1e-3 && (o - 2.0).abs() <= 0.4;
        homogeneous.push(format!("beta {beta}: {f:.2e} order {o:.2}"));
    }
    let secs = start.elapsed().as_secs_f64();
    ok &= secs < 120.0;
    verdict(
        ok,
        format!(
            "manufactured: stepper vs exact {e_fine:.2e} at T/1024, {e_coarse:.2e} at T/512, order {order:.2}; \
             homogeneous vs exact propagation (self-convergence order): {}; sourced oracle at T/16 vs exact {e_oracle:.2e}, vs stepper {e_cross:.2e}; {secs:.1}s",
            homogeneous.join(", ")
        ),
    )
}

// 3 and 4: exponent recovery and sharpness

fn criteria_3_4() -> (Verdict, Verdict) {
    let (mut ok3, mut ok4) = (true, true);
    let (mut d3, mut d4) = (Vec::new(), Vec::new());
    for beta in [0.25, 0.5, 1.0] {
        let start = Instant::now();
        let spec = FamilySpec::new(beta);
        let lambdas = spec.lambdas();
        let span = lambdas.last().unwrap() / lambdas[0];
        let fit = FiberFamily::new(spec).unwrap().fit().unwrap();
        let target = 2.0 * beta / (1.0 + 2.0 * beta);
        assert!((target - gain_exponent(beta)).abs() < 1e-15);
        let secs = start.elapsed().as_secs_f64();
        let good = (fit.s_hat - target).abs() <= 0.05 && lambdas.len() >= 5 && span >= 100.0 && secs <= 300.0;
        ok3 &= good;
        d3.push(format!("beta {beta}: s^ {:.3} vs {target:.3} ({} scales x{span:.0}, {secs:.1}s)", fit.s_hat, lambdas.len()));
        let growth = fit.growth(target + 0.15);
        ok4 &= growth >= 2.0;
        d4.push(format!("beta {beta}: growth {growth:.2}"));
    }
    (verdict(ok3, d3.join("; ")), verdict(ok4, d4.join("; ")))
}

// 5: inequality stability under grid doubling

fn criterion_5() -> Verdict {
    let start = Instant::now();
    let beta = 0.5;
    let grid = Arc::new(GridSpec::new(1, 64, 64, 64, 2.0 * PI, 2.0 * PI, 8.0 * PI).unwrap());
    let spec = CorpusSpec::default_for(1);
    assert_eq!(spec.size, 50);
    let recipe = CoefficientRecipe::default();
    assert_eq!(recipe.a_minus, 0.1);
    let runs: [(CorpusKind, Vec<Check>); 3] = [
        (CorpusKind::Transport, vec![Check::PropBouchut { alpha: 2.0 * beta }]),
        (
            CorpusKind::Constant { beta },
            vec![Check::Step1 { beta }, Check::Step2 { beta }, Check::Step3 { beta }, Check::Thm1 { beta }],
        ),
        (CorpusKind::Variable { beta, recipe }, vec![Check::Thm2 { beta }]),
    ];
    let mut ok = true;
    let mut detail = Vec::new();
    for (kind, checks) in runs {
        let corpus = Corpus::new(grid.clone(), spec, kind).unwrap();
        for r in corpus.refinement_study(&checks, 0.10).unwrap() {
            let delta = r.refinement_delta.unwrap();
            ok &= r.passed && delta < 0.10;
            detail.push(format!("{} max {:.4} delta {:.1e}", r.name, r.max_ratio, delta));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(ok, format!("64^3 -> 128^3, 50 cases: {}; {secs:.0}s", detail.join(", ")))
}

// 6: proof mechanics

fn golden_min(phi: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    // on ln λ, where φ is unimodal
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo.ln(), hi.ln());
    for _ in 0..200 {
        let c = b - r * (b - a);
        let d = a + r * (b - a);
        if phi(c.exp()) < phi(d.exp()) {
            b = d;
        } else {
            a = c;
        }
    }
    phi((0.5 * (a + b)).exp())
}

fn criterion_6() -> Verdict {
    let start = Instant::now();
    let grid = Arc::new(GridSpec::new(1, 32, 32, 64, 2.0 * PI, 2.0 * PI, 8.0 * PI).unwrap());
    let mut spec = CorpusSpec::default_for(1);
    spec.size = 20;
    let corpus = Corpus::new(grid.clone(), spec, CorpusKind::Transport).unwrap();
    let (mut partition, mut total_u, mut holder, mut balance_excess) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut balanced = 0;
    for alpha in [0.25, 0.5, 1.0] {
        let params = SplitParams::balanced(alpha, 1.0).unwrap();
        for i in 0..spec.size {
            let pair = corpus.pair(i).unwrap();
            let slices = split_all(&pair, &params).unwrap();
            let mut su = 0.0;
            for sl in &slices {
                partition = partition.max((sl.a + sl.b - sl.u).abs() / sl.u.max(f64::MIN_POSITIVE));
                su += sl.u;
            }
            let want = frac_norm(&pair.f, params.r / 2.0, AxisKind::X).unwrap().powi(2);
            total_u = total_u.max(rel(su, want));

            let (h, p) = holder_vs_prop(&pair, alpha).unwrap();
            holder = holder.max(rel(h, p));

            // source energy in the λ term, |ξ|^m moment in the λ^{-m} term
            for sl in slices.iter().filter(|s| s.u > 0.0 && s.v > 0.0 && s.w > 0.0) {
                let b = balance_lambda(sl.u, sl.w, sl.v, params.m).unwrap();
                let c = (sl.u * sl.w).sqrt();
                let phi = |l: f64| l * c + l.powf(-params.m) * sl.v;
                let scale = (sl.v / c).powf(1.0 / (params.m + 1.0));
                let min = golden_min(phi, scale * 1e-4, scale * 1e4);
                balance_excess = balance_excess.max(b.phi_opt / min - 1.0);
                balanced += 1;
            }
        }
    }

    let mut identity = 0.0f64;
    let ks: Vec<f64> = grid.freqs(AxisKind::X).iter().map(|k| k.abs()).filter(|&k| k > 0.0).collect();
    for m in [0.5, 1.0, 2.0, 3.0, 4.0] {
        let r = 2.0 * m / (m + 2.0);
        for &k in &ks {
            let d = k.powf(r / m);
            identity = identity.max(rel(k.powf(2.0 * (r - 1.0)) * d * d, k.powf(r)));
        }
        identity = identity.max(exponent_identity_defect(&grid, &SplitParams::balanced(m / 2.0, 1.0).unwrap()));
    }

    let ok = partition <= 1e-12 && total_u <= 1e-12 && identity <= 1e-12 && balance_excess <= 0.05 && holder <= 1e-10;
    let secs = start.elapsed().as_secs_f64();
    verdict(
        ok,
        format!(
            "A+B vs U {partition:.1e}, sum U vs |Dx|^(r/2) norm {total_u:.1e}; exponent identity {identity:.1e}; \
             balance closed form above golden-section min by {:.2e}% over {balanced} slices; holder vs prop-bouchut {holder:.1e}; {secs:.1}s",
            100.0 * balance_excess
        ),
    )
}

// 7: step 4 pairing

fn step4_corpus(grid: Arc<GridSpec>, beta: f64, symbol: &MultiplierSpec) -> (f64, f64, f64, f64) {
    let mut spec = CorpusSpec::default_for(1);
    spec.size = 100;
    let corpus = Corpus::new(grid, spec, CorpusKind::Constant { beta }).unwrap();
    let (mut pos, mut i_max, mut ii_max, mut defect) = (f64::INFINITY, 0.0f64, 0.0f64, 0.0f64);
    for i in 0..spec.size {
        let t = step4_terms(&corpus.pair(i).unwrap(), symbol).unwrap();
        pos = pos.min(t.positivity());
        // NaN propagates through the comparisons below as a failure
        i_max = if t.i_ratio().is_finite() { i_max.max(t.i_ratio()) } else { f64::NAN };
        ii_max = if t.ii_ratio().is_finite() { ii_max.max(t.ii_ratio()) } else { f64::NAN };
        defect = defect.max(t.identity_defect());
    }
    (pos, i_max, ii_max, defect)
}

fn criterion_7() -> Verdict {
    let start = Instant::now();
    let coarse = Arc::new(GridSpec::new(1, 32, 32, 64, 2.0 * PI, 2.0 * PI, 8.0 * PI).unwrap());
    let fine = Arc::new(coarse.refined().unwrap());
    let mut ok = true;
    let mut detail = Vec::new();
    for beta in [0.25, 0.5, 1.0] {
        for symbol in [MultiplierSpec::aniso(beta), MultiplierSpec::bracket(beta, 1.0)] {
            let (p0, i0, ii0, d0) = step4_corpus(coarse.clone(), beta, &symbol);
            let (p1, i1, ii1, d1) = step4_corpus(fine.clone(), beta, &symbol);
            let di = rel(i1, i0);
            let dii = rel(ii1, ii0);
            ok &= p0 >= -1e-10 && p1 >= -1e-10;
            ok &= i0.is_finite() && ii0.is_finite() && i1.is_finite() && ii1.is_finite();
            ok &= di < 0.10 && dii < 0.10;
            detail.push(format!(
                "beta {beta} {:?}: min pos {:.1e}, |I| {i0:.4} ({:.1e}), |II| {ii0:.4} ({:.1e}), defect {:.0e}",
                symbol.kind,
                p0.min(p1),
                di,
                dii,
                d0.max(d1)
            ));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(ok, format!("100 fields, 32x32x64 -> 64x64x128 (refinement change in brackets): {}; {secs:.0}s", detail.join("; ")))
}

// 8: commutator regimes

const NV: [usize; 3] = [64, 128, 256];

fn c8_grid(nv: usize) -> Arc<GridSpec> {
    Arc::new(GridSpec::new(1, 4, 16, nv, 1.0, 2.0 * PI, 8.0 * PI).unwrap())
}

/// Estimate and certified Schur bound for Q and P on each N_v.
fn c8_series(beta: f64, modifier: ModifierSpec, weight: Weight, nvs: &[usize]) -> Vec<[(f64, f64); 2]> {
    nvs.iter()
        .map(|&nv| {
            let grid = c8_grid(nv);
            [MultiplierSpec::frac_v(beta), MultiplierSpec::aniso(beta)].map(|m| {
                let spec = CommutatorSpec::from_modifier(m, &modifier, &grid).unwrap();
                let est = op_norm_estimate(&spec, weight, &OpNormOptions::default()).unwrap().value;
                let schur = schur_row_bounds(&spec, weight).unwrap().certified();
                (est, schur)
            })
        })
        .collect()
}

fn show(series: &[[(f64, f64); 2]], which: usize) -> String {
    series.iter().map(|s| format!("{:.3}", s[which].0)).collect::<Vec<_>>().join("/")
}

fn criterion_8() -> Verdict {
    let start = Instant::now();
    let bump = ModifierSpec::bump(1, 1);
    let mut schur_ok = true;
    let mut record = |series: &[[(f64, f64); 2]]| {
        for s in series.iter().flatten() {
            // the bound is for the exact operator; the estimate carries FFT
            // rounding, which is all there is when the commutator vanishes
            schur_ok &= s.1 >= s.0 - 1e-10;
        }
    };
    let stable = |series: &[[(f64, f64); 2]], which: usize| {
        series.windows(2).map(|w| rel(w[1][which].0, w[0][which].0)).fold(0.0f64, f64::max)
    };

    let constant = c8_series(0.25, ModifierSpec::Constant { value: 1.5 }, Weight::Plain, &NV[..1])
        .into_iter()
        .chain(c8_series(0.75, ModifierSpec::Constant { value: 1.5 }, Weight::Shifted, &NV[..1]))
        .collect::<Vec<_>>();
    record(&constant);
    let const_max = constant.iter().flatten().map(|s| s.0).fold(0.0f64, f64::max);

    let low = c8_series(0.25, bump, Weight::Plain, &NV);
    record(&low);
    let low_delta = stable(&low, 0).max(stable(&low, 1));

    let plain = c8_series(0.75, bump, Weight::Plain, &NV);
    record(&plain);
    let increasing = (0..2).all(|w| plain.windows(2).all(|p| p[1][w].0 > p[0][w].0));

    let shifted = c8_series(0.75, bump, Weight::Shifted, &NV);
    record(&shifted);
    let shifted_delta = stable(&shifted, 0).max(stable(&shifted, 1));

    let full = c8_series(0.75, bump, Weight::FullOrder, &NV);
    record(&full);

    let parts = [
        ("constant", const_max <= 1e-10),
        ("beta 1/4 plain stable", low_delta < 0.10),
        ("beta 3/4 plain increasing", increasing),
        ("beta 3/4 shifted stable", shifted_delta < 0.10),
        ("schur", schur_ok),
    ];
    let failed: Vec<&str> = parts.iter().filter(|p| !p.1).map(|p| p.0).collect();
    let secs = start.elapsed().as_secs_f64();
    verdict(
        failed.is_empty(),
        format!(
            "N_v {NV:?}, Q and P: constant max {const_max:.1e}; beta 1/4 plain Q {} P {} (max change {:.1e}); \
             beta 3/4 plain Q {} P {}; beta 3/4 shifted Q {} P {} (max change {:.0}%); \
             full-order weight Q {} P {}; schur >= estimate on every run: {schur_ok}; failing parts: {failed:?}; {secs:.0}s",
            show(&low, 0),
            show(&low, 1),
            low_delta,
            show(&plain, 0),
            show(&plain, 1),
            show(&shifted, 0),
            show(&shifted, 1),
            100.0 * shifted_delta,
            show(&full, 0),
            show(&full, 1),
        ),
    )
}

// 9: kernel cross-check

fn criterion_9() -> Verdict {
    let start = Instant::now();
    let (beta, lv) = (0.25, 8.0 * PI);
    let grid = Arc::new(GridSpec::new(1, 4, 8, 64, 1.0, 2.0 * PI, lv).unwrap());
    let quad = KernelQuadrature::new(beta, lv, &KernelOptions::default()).unwrap();
    let trig = ModifierSpec::Trig {
        b_base: 1.0,
        b_amp: 0.5,
        x_mode: 1,
        v_mode: 2,
    };
    let data = RandomFieldSpec {
        band_t: 0,
        band_x: 2,
        band_v: 8,
        decay_q: 1.0,
        window: None,
    };
    let mut worst = 0.0f64;
    let mut detail = Vec::new();
    for (name, modifier) in [("trig", trig), ("bump", ModifierSpec::bump(1, 1))] {
        let spec = CommutatorSpec::from_modifier(MultiplierSpec::frac_v(beta), &modifier, &grid).unwrap();
        let mut m = 0.0f64;
        for seed in 0..5 {
            let f = SpectralData::random(1, [1.0, 2.0 * PI, lv], &data, seed).sample_phase(&grid).unwrap();
            let k = kernel_commutator_1d(&spec, &f, &quad).unwrap();
            let s = commutator_apply(&spec, &f).unwrap().value;
            m = m.max(k.sub(&s).unwrap().norm() / s.norm());
        }
        worst = worst.max(m);
        detail.push(format!("{name} modifier {m:.1e}"));
    }

    // one v mode against the trig modifier, in closed form
    let spec = CommutatorSpec::from_modifier(MultiplierSpec::frac_v(beta), &trig, &grid).unwrap();
    let (xi, eta) = (5.0 * 2.0 * PI / lv, 2.0 * 2.0 * PI / lv);
    let p = |z: f64| z.abs().powf(2.0 * beta);
    let f = Field::from_fn(grid.clone(), Layout::Phase, |_, _, v| Complex64::from_polar(1.0, xi * v[0]));
    let exact = Field::from_fn(grid.clone(), Layout::Phase, |_, x, v| {
        let up = Complex64::from_polar(p(xi + eta) - p(xi), (xi + eta) * v[0]);
        let down = Complex64::from_polar(p(xi - eta) - p(xi), (xi - eta) * v[0]);
        0.25 * x[0].cos() * (up + down)
    });
    let k = kernel_commutator_1d(&spec, &f, &quad).unwrap();
    let s = commutator_apply(&spec, &f).unwrap().value.with_rep(&[AxisKind::X, AxisKind::V], Rep::Physical);
    let ek = k.sub(&exact).unwrap().norm() / exact.norm();
    let es = s.sub(&exact).unwrap().norm() / exact.norm();
    worst = worst.max(ek).max(es);
    detail.push(format!("single mode vs closed form: kernel {ek:.1e}, spectral {es:.1e}"));
    let secs = start.elapsed().as_secs_f64();
    verdict(worst <= 1e-2, format!("beta 1/4, 1-d: {}; {secs:.1}s", detail.join(", ")))
}

// 10: determinism

/// Every artifact of a run; manifests without their wall-clock timings.
fn artifacts(dir: &std::path::Path, m: &RunManifest) -> Vec<(String, Vec<u8>)> {
    m.files
        .iter()
        .map(|name| {
            let bytes = std::fs::read(dir.join(name)).unwrap();
            let bytes = if name.ends_with("manifest.json") {
                let mut v: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
                v.as_object_mut().unwrap().remove("timings");
                serde_json::to_vec(&v).unwrap()
            } else {
                bytes
            };
            (name.clone(), bytes)
        })
        .collect()
}

fn criterion_10() -> Verdict {
    let start = Instant::now();
    let roots = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let configs = roots.each_ref().map(|r| ExperimentConfig {
        nt: 8,
        nx: 16,
        nv: 32,
        lt: 2.0,
        corpus_size: 6,
        refine: true,
        out: Some(r.path().to_path_buf()),
        ..Default::default()
    });
    let mut mismatched = Vec::new();
    let (mut runs, mut files) = (0, 0);
    let targets: Vec<Option<&str>> = std::iter::once(None).chain(CATALOGUE.iter().map(|c| Some(*c))).collect();
    for target in targets {
        let out = configs.each_ref().map(|c| {
            let m = match target {
                None => cmd_solve(c).unwrap(),
                Some(check) => cmd_verify(c, check).unwrap(),
            };
            let dir = run_dir(c, &m.command, m.target.as_deref());
            let a = artifacts(&dir, &m);
            (m, a)
        });
        let label = target.unwrap_or("solve");
        if out[0].0.payload() != out[1].0.payload() {
            mismatched.push(format!("{label} manifest"));
        }
        for (x, y) in out[0].1.iter().zip(&out[1].1) {
            if x != y {
                mismatched.push(format!("{label}/{}", x.0));
            }
        }
        if out[0].1.len() != out[1].1.len() {
            mismatched.push(format!("{label} file list"));
        }
        runs += 1;
        files += out[0].1.len();
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        mismatched.is_empty(),
        format!("solve and all {} checks twice in separate output roots: {runs} runs, {files} artifacts compared, mismatches {mismatched:?}; {secs:.1}s", CATALOGUE.len()),
    )
}

fn main() {
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let wanted = |n: u32| only.is_empty() || only.contains(&n);
    let mut results: Vec<(u32, &str, Verdict)> = Vec::new();
    let run = |n: u32, name: &'static str, f: &dyn Fn() -> Verdict, results: &mut Vec<(u32, &str, Verdict)>| {
        if wanted(n) {
            let v = f();
            println!("criterion {n:>2} {name}: {} | {}", if v.passed { "PASS" } else { "FAIL" }, v.detail);
            results.push((n, name, v));
        }
    };
    run(1, "spectral-core invariants", &criterion_1, &mut results);
    run(2, "oracle/stepper equivalence", &criterion_2, &mut results);
    if wanted(3) || wanted(4) {
        let (v3, v4) = criteria_3_4();
        for (n, name, v) in [(3, "exponent recovery", v3), (4, "sharpness", v4)] {
            if wanted(n) {
                println!("criterion {n:>2} {name}: {} | {}", if v.passed { "PASS" } else { "FAIL" }, v.detail);
                results.push((n, name, v));
            }
        }
    }
    run(5, "inequality stability", &criterion_5, &mut results);
    run(6, "proof-mechanics identities", &criterion_6, &mut results);
    run(7, "step-4 positivity", &criterion_7, &mut results);
    run(8, "commutator regimes", &criterion_8, &mut results);
    run(9, "kernel cross-check", &criterion_9, &mut results);
    run(10, "determinism", &criterion_10, &mut results);
    let failed: Vec<u32> = results.iter().filter(|r| !r.2.passed).map(|r| r.0).collect();
    println!("{} of {} criteria passed", results.len() - failed.len(), results.len());
    if !failed.is_empty() {
        println!("failed: {failed:?}");
        std::process::exit(1);
    }
}
