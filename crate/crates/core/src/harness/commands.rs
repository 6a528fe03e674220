//! The subcommands behind the `hypo` binary.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;
use serde_json::json;

use super::config::{CoefficientChoice, DataChoice, ExperimentConfig, SolverChoice};
use super::manifest::{RunManifest, RunWriter};
use crate::commutators::{check_lemma, LemmaOptions};
use crate::data::SpectralData;
use crate::diagnostics::{
    balance_lambda, check_ivp_term, exponent_identity_defect, holder_vs_prop, slice_uvw, split_all, step4_terms,
    SplitParams,
};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::{AxisKind, GridSpec, Layout, Rep};
use crate::model::{solve_cauchy, CauchyProblem, Coefficient, DuhamelOracle, ModelParams, SolveOptions};
use crate::model::stepper::InnerSolve;
use crate::norms::{CaseResult, Check, Corpus, CorpusKind, EstimateReport, FiberFamily};
use crate::snapshot;
use crate::symbol::MultiplierSpec;

/// Every name accepted by [`cmd_verify`].
pub const CATALOGUE: [&str; 13] = [
    "prop-bouchut",
    "step1",
    "step2",
    "step3",
    "thm1",
    "thm2",
    "split-ab",
    "balance",
    "step4",
    "ivp-term",
    "lemma-q",
    "lemma-p",
    "exponent-fit",
];

/// Parameters accepted by [`cmd_sweep`].
pub const SWEEP_PARAMETERS: [&str; 4] = ["beta", "N", "q", "corpus-size"];

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_CONVERGENCE: i32 = 3;

/// Exit status of a failed command.
pub fn error_exit_code(e: &Error) -> i32 {
    match e {
        Error::Convergence { .. } => EXIT_CONVERGENCE,
        _ => EXIT_CONFIG,
    }
}

pub fn manifest_exit_code(m: &RunManifest) -> i32 {
    if m.passed {
        EXIT_PASS
    } else {
        EXIT_FAIL
    }
}

/// Machine-readable error object for stderr.
pub fn error_json(e: &Error) -> serde_json::Value {
    let kind = match e {
        Error::InvalidGrid(_) => "invalid_grid",
        Error::MemoryBudget { .. } => "memory_budget",
        Error::Representation(_) => "representation",
        Error::GridMismatch(_) => "grid_mismatch",
        Error::InvalidParameter { .. } => "invalid_parameter",
        Error::InadmissibleStep { .. } => "inadmissible_step",
        Error::Convergence { .. } => "convergence",
        Error::Unsupported(_) => "unsupported",
        Error::Format(_) => "format",
        Error::Config(_) => "config",
        Error::Io(_) => "io",
        Error::Json(_) => "json",
    };
    json!({ "error": kind, "message": e.to_string(), "exit_code": error_exit_code(e) })
}

/// Directory a command writes to under the output root.
pub fn run_dir(cfg: &ExperimentConfig, command: &str, target: Option<&str>) -> PathBuf {
    let name = match target {
        Some(t) => format!("{command}-{t}-{}", &cfg.hash()[..12]),
        None => format!("{command}-{}", &cfg.hash()[..12]),
    };
    cfg.out_root().join(name)
}

fn boxes(grid: &GridSpec) -> [f64; 3] {
    [grid.box_len(AxisKind::T), grid.box_len(AxisKind::X), grid.box_len(AxisKind::V)]
}

fn model_params(cfg: &ExperimentConfig, grid: &Arc<GridSpec>) -> Result<ModelParams> {
    let mut p = match cfg.coefficient {
        CoefficientChoice::Constant => cfg.constant_params(),
        CoefficientChoice::Variable => {
            ModelParams::variable(cfg.beta, Arc::new(Coefficient::from_recipe(grid.clone(), &cfg.recipe())?))
        }
    };
    p.dealias = cfg.dealias;
    p.validate()?;
    Ok(p)
}

/// Relative L2 distance, absolute when the reference vanishes.
fn rel_l2(a: &Field, reference: &Field) -> Result<f64> {
    let d = a.sub(reference)?.norm();
    let r = reference.norm();
    Ok(if r == 0.0 { d } else { d / r })
}

/// Runs the stepper and, for constant coefficients, the oracle on the time
/// samples of the grid, and persists both with their discrepancy.
pub fn cmd_solve(cfg: &ExperimentConfig) -> Result<RunManifest> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let dt = grid.spacing(AxisKind::T);
    let unit = cfg.lx / cfg.lv;
    let shift = dt / unit;
    if shift.round() < 1.0 || (shift - shift.round()).abs() > 1e-9 * shift.max(1.0) {
        return Err(Error::Config(format!(
            "key `lt`: the step lt/nt = {dt} must be a positive multiple of lx/lv = {unit}"
        )));
    }
    let params = model_params(cfg, &grid)?;
    let run_oracle = cfg.solver != SolverChoice::Stepper;
    let run_stepper = cfg.solver != SolverChoice::Oracle;
    let oracle_a = match (&params.coefficient, run_oracle) {
        (crate::model::CoefficientModel::Constant(a), _) => Some(*a),
        (_, false) => None,
        _ => {
            return Err(Error::Config(
                "key `solver`: the oracle needs `coefficient = \"constant\"`".into(),
            ))
        }
    };

    let mut w = RunWriter::create(run_dir(cfg, "solve", None), "solve", None, cfg.hash(), cfg.seed)?;
    let b = boxes(&grid);
    let f0 = match cfg.datum {
        DataChoice::Zero => Field::zeros(grid.clone(), Layout::Phase, Rep::Physical),
        DataChoice::Random => SpectralData::random(grid.n(), b, &cfg.field_spec(), cfg.seed).sample_phase(&grid)?,
    };
    let g = match cfg.source {
        DataChoice::Zero => Field::zeros(grid.clone(), Layout::Full, Rep::Physical),
        DataChoice::Random => {
            SpectralData::random(grid.n(), b, &cfg.field_spec(), cfg.seed.wrapping_add(1)).sample(&grid)?
        }
    };
    w.lap("setup");

    let nt = grid.len(AxisKind::T);
    let traj = if run_stepper {
        let problem = CauchyProblem {
            f0: f0.clone(),
            source: Some(g.clone()),
            horizon: (nt - 1) as f64 * dt,
            steps: nt - 1,
        };
        let opts = SolveOptions {
            record_stride: cfg.record_stride,
            inner: InnerSolve {
                tol: cfg.inner_tol,
                max_iter: cfg.inner_max_iter,
            },
        };
        let traj = solve_cauchy(&problem, &params, &opts)?;
        for p in traj.write(&w.dir().join("stepper"), &params)? {
            w.track(&p);
        }
        w.scalar("stepper_final_norm", traj.final_state().norm());
        w.scalar("stepper_max_inner_iterations", traj.max_inner_iterations as f64);
        w.lap("stepper");
        Some(traj)
    } else {
        None
    };

    let oracle = match oracle_a {
        Some(a) if run_oracle => {
            let sol = DuhamelOracle::new(cfg.beta).with_diffusivity(a).solve(&g, Some(&f0))?;
            let mut norms = Vec::with_capacity(nt);
            for j in 0..nt {
                let s = sol.time_slice(j)?;
                norms.push(s.norm());
                w.write_file(&format!("oracle/state_{j:05}.hypo"), &snapshot::encode(&s))?;
            }
            let max = norms.iter().cloned().fold(0.0, f64::max);
            w.scalar("oracle_max_norm", max);
            w.lap("oracle");
            Some(sol)
        }
        _ => None,
    };

    if let (Some(traj), Some(sol)) = (&traj, &oracle) {
        let (mut num, mut den, mut worst) = (0.0, 0.0, 0.0f64);
        for (t, s) in traj.times.iter().zip(&traj.states) {
            let j = (t / dt).round() as usize;
            let o = sol.time_slice(j)?.with_rep(&[AxisKind::X, AxisKind::V], Rep::Frequency);
            let s = s.with_rep(&[AxisKind::X, AxisKind::V], Rep::Frequency);
            let d = s.sub(&o)?.norm_sqr();
            num += d;
            den += o.norm_sqr();
            worst = worst.max(rel_l2(&s, &o)?);
        }
        let global = if den == 0.0 { num.sqrt() } else { (num / den).sqrt() };
        w.scalar("discrepancy_global", global);
        w.scalar("discrepancy_max_slice", worst);
        let case = CaseResult::new(global, cfg.solve_tol);
        let mut r = EstimateReport::from_cases("solver-agreement", vec![case]);
        r.tolerance = Some(cfg.solve_tol);
        r.passed = r.passed && global <= cfg.solve_tol;
        w.reports(&[r])?;
    }
    let zero = traj.as_ref().is_none_or(|t| t.states.iter().all(|s| s.max_abs() == 0.0))
        && oracle.as_ref().is_none_or(|o| o.max_abs() == 0.0);
    w.scalar("zero_trajectory", if zero { 1.0 } else { 0.0 });
    w.write_file("config.toml", cfg.canonical().to_toml().as_bytes())?;
    w.finish()
}

fn corpus(cfg: &ExperimentConfig, kind: CorpusKind) -> Result<Corpus> {
    Corpus::new(cfg.grid()?, cfg.corpus_spec(), kind)
}

fn ratio_check(cfg: &ExperimentConfig, name: &str) -> (Check, CorpusKind) {
    let beta = cfg.beta;
    match name {
        "prop-bouchut" => (Check::PropBouchut { alpha: cfg.alpha }, CorpusKind::Transport),
        "step1" => (Check::Step1 { beta }, CorpusKind::Constant { beta }),
        "step2" => (Check::Step2 { beta }, CorpusKind::Constant { beta }),
        "step3" => (Check::Step3 { beta }, CorpusKind::Constant { beta }),
        "thm1" => (Check::Thm1 { beta }, CorpusKind::Constant { beta }),
        _ => (
            Check::Thm2 { beta },
            CorpusKind::Variable {
                beta,
                recipe: cfg.recipe(),
            },
        ),
    }
}

/// Fails the report unless its largest ratio stays at most `limit`.
fn capped(mut r: EstimateReport, limit: f64) -> EstimateReport {
    r.tolerance = Some(limit);
    r.passed = r.passed && r.max_ratio <= limit;
    r
}

type Outcome = (Vec<EstimateReport>, Vec<(String, f64)>);

fn verify_split(cfg: &ExperimentConfig) -> Result<Outcome> {
    let c = corpus(cfg, CorpusKind::Transport)?;
    let params = SplitParams::balanced(cfg.alpha, cfg.split_lambda)?;
    let (mut part, mut a, mut b) = (Vec::new(), Vec::new(), Vec::new());
    for i in 0..c.spec.size {
        let pair = c.pair(i)?;
        for s in split_all(&pair, &params)? {
            let terms = [("case", i as f64), ("k", s.k_abs), ("d", s.d)];
            part.push(CaseResult::new((s.a + s.b - s.u).abs(), s.u).with_terms(&terms));
            a.push(CaseResult::new(s.a_ratio, 1.0).with_terms(&terms));
            b.push(CaseResult::new(s.b_ratio, 1.0).with_terms(&terms));
        }
    }
    let defect = exponent_identity_defect(&c.grid, &params);
    let identity = CaseResult::new(defect, 1.0);
    Ok((
        vec![
            capped(EstimateReport::from_cases("split-partition", part), 1e-12),
            capped(EstimateReport::from_cases("split-a", a), 1.0),
            capped(EstimateReport::from_cases("split-b", b), 1.0),
            capped(EstimateReport::from_cases("split-exponent-identity", vec![identity]), 1e-12),
        ],
        vec![("exponent_identity_defect".into(), defect)],
    ))
}

fn verify_balance(cfg: &ExperimentConfig) -> Result<Outcome> {
    let c = corpus(cfg, CorpusKind::Transport)?;
    let params = SplitParams::balanced(cfg.alpha, 1.0)?;
    let (mut closed, mut agree) = (Vec::new(), Vec::new());
    for i in 0..c.spec.size {
        let pair = c.pair(i)?;
        for (u, v, wsrc) in slice_uvw(&pair, &params)? {
            let bal = balance_lambda(u, wsrc, v, params.m)?;
            if bal.lambda_opt.is_some() {
                closed.push(
                    CaseResult::new(bal.phi_opt, bal.grid_min).with_terms(&[("case", i as f64), ("bound", bal.bound)]),
                );
            }
        }
        let (h, p) = holder_vs_prop(&pair, cfg.alpha)?;
        agree.push(CaseResult::new((h - p).abs(), 1.0).with_terms(&[("holder", h), ("prop_bouchut", p)]));
    }
    Ok((
        vec![
            capped(EstimateReport::from_cases("balance-closed-form", closed), 1.05),
            capped(EstimateReport::from_cases("holder-vs-prop", agree), 1e-10),
        ],
        Vec::new(),
    ))
}

fn step4_reports(c: &Corpus, symbol: &MultiplierSpec) -> Result<(Vec<EstimateReport>, f64)> {
    let (mut pos, mut i_cases, mut ii_cases) = (Vec::new(), Vec::new(), Vec::new());
    let mut defect = 0.0f64;
    for i in 0..c.spec.size {
        let t = step4_terms(&c.pair(i)?, symbol)?;
        // fails only when the pairing is negative beyond rounding
        pos.push(CaseResult::new((-t.positivity()).max(0.0), 1.0).with_terms(&[("relative", t.positivity())]));
        i_cases.push(t.i_case());
        ii_cases.push(t.ii_case());
        defect = defect.max(t.identity_defect());
    }
    Ok((
        vec![
            capped(EstimateReport::from_cases("step4-positivity", pos), 1e-10),
            EstimateReport::from_cases("step4-i", i_cases),
            EstimateReport::from_cases("step4-ii", ii_cases),
        ],
        defect,
    ))
}

fn verify_step4(cfg: &ExperimentConfig) -> Result<Outcome> {
    let c = corpus(cfg, CorpusKind::Constant { beta: cfg.beta })?;
    let symbol = cfg.multiplier();
    let (mut reports, defect) = step4_reports(&c, &symbol)?;
    let mut scalars = vec![("identity_defect".to_string(), defect)];
    if cfg.refine {
        let (fine, fine_defect) = step4_reports(&c.refined()?, &symbol)?;
        scalars.push(("identity_defect_fine".into(), fine_defect));
        reports = reports
            .into_iter()
            .zip(&fine)
            .map(|(r, f)| {
                if r.name == "step4-positivity" {
                    r
                } else {
                    r.with_refinement(f, cfg.refinement_tol)
                }
            })
            .collect();
    }
    Ok((reports, scalars))
}

fn verify_ivp(cfg: &ExperimentConfig) -> Result<Outcome> {
    let c = corpus(cfg, CorpusKind::Transport)?;
    let params = SplitParams::balanced(cfg.alpha, cfg.split_lambda)?;
    let mut cases = Vec::new();
    for i in 0..c.spec.size {
        let f0 = c.data(i).sample_phase(&c.grid)?;
        for x in 0..c.grid.x_points() {
            if let Some(t) = check_ivp_term(&f0, &params, x)? {
                cases.push(CaseResult::new(t.iii, t.bound).with_terms(&[("case", i as f64), ("k", t.k_abs)]));
            }
        }
    }
    Ok((vec![capped(EstimateReport::from_cases("ivp-term", cases), 1.0)], Vec::new()))
}

fn verify_lemma(cfg: &ExperimentConfig, q: bool) -> Result<Outcome> {
    let multiplier = if q {
        MultiplierSpec::frac_v(cfg.beta)
    } else {
        cfg.multiplier()
    };
    let opts = LemmaOptions {
        op: cfg.op_options(),
        sobolev_delta: cfg.sobolev_delta,
        refinement_tol: cfg.refinement_tol,
        schur: cfg.schur,
    };
    let r = check_lemma(multiplier, &cfg.modifiers()?, &cfg.grid()?, cfg.weight(), &opts)?;
    Ok((vec![r], Vec::new()))
}

fn verify_fit(cfg: &ExperimentConfig) -> Result<Outcome> {
    let family = FiberFamily::new(cfg.family_spec())?;
    let fit = family.fit()?;
    let target = 2.0 * cfg.beta / (1.0 + 2.0 * cfg.beta);
    let r = fit.report(cfg.beta, cfg.exponent_tol);
    let scalars = vec![
        ("s_hat".to_string(), fit.s_hat),
        ("target".to_string(), target),
        ("growth_above".to_string(), fit.growth(target + 0.15)),
    ];
    Ok((vec![r], scalars))
}

fn unknown_check(name: &str) -> Error {
    Error::Config(format!("unknown check `{name}`; the catalogue is: {}", CATALOGUE.join(", ")))
}

/// Computes the reports of one catalogue entry without writing anything.
pub fn run_check(cfg: &ExperimentConfig, name: &str) -> Result<Outcome> {
    cfg.validate()?;
    match name {
        "prop-bouchut" | "step1" | "step2" | "step3" | "thm1" | "thm2" => {
            let (check, kind) = ratio_check(cfg, name);
            let c = corpus(cfg, kind)?;
            let reports = if cfg.refine {
                c.refinement_study(&[check], cfg.refinement_tol)?
            } else {
                c.evaluate(&[check])?
            };
            Ok((reports, Vec::new()))
        }
        "split-ab" => verify_split(cfg),
        "balance" => verify_balance(cfg),
        "step4" => verify_step4(cfg),
        "ivp-term" => verify_ivp(cfg),
        "lemma-q" => verify_lemma(cfg, true),
        "lemma-p" => verify_lemma(cfg, false),
        "exponent-fit" => verify_fit(cfg),
        _ => Err(unknown_check(name)),
    }
}

fn verify_into(cfg: &ExperimentConfig, name: &str, dir: PathBuf) -> Result<RunManifest> {
    if !CATALOGUE.contains(&name) {
        return Err(unknown_check(name));
    }
    cfg.validate()?;
    let mut w = RunWriter::create(dir, "verify", Some(name), cfg.hash(), cfg.seed)?;
    let (reports, scalars) = run_check(cfg, name)?;
    w.lap("check");
    for (k, v) in scalars {
        w.scalar(k, v);
    }
    w.reports(&reports)?;
    w.write_file("config.toml", cfg.canonical().to_toml().as_bytes())?;
    w.lap("write");
    w.finish()
}

pub fn cmd_verify(cfg: &ExperimentConfig, name: &str) -> Result<RunManifest> {
    verify_into(cfg, name, run_dir(cfg, "verify", Some(name)))
}

fn apply_sweep_value(cfg: &mut ExperimentConfig, parameter: &str, value: &str) -> Result<()> {
    let bad = |why: &str| Error::Config(format!("sweep value `{value}` for `{parameter}`: {why}"));
    match parameter {
        "beta" => cfg.beta = value.parse().map_err(|_| bad("not a number"))?,
        "q" => cfg.decay_q = Some(value.parse().map_err(|_| bad("not a number"))?),
        "corpus-size" => cfg.corpus_size = value.parse().map_err(|_| bad("not a count"))?,
        "N" => cfg.set_grid(value)?,
        _ => {
            return Err(Error::Config(format!(
                "unknown sweep parameter `{parameter}`; expected one of: {}",
                SWEEP_PARAMETERS.join(", ")
            )))
        }
    }
    cfg.validate()
}

/// Repeats a check for every value of one parameter. Each point is a full
/// verify run in its own subdirectory; `sweep.csv` gathers one row per point
/// and report, with `step_delta` the relative change of the max ratio from
/// the previous point.
pub fn cmd_sweep(cfg: &ExperimentConfig, check: &str, parameter: &str, values: &[String]) -> Result<RunManifest> {
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    if !CATALOGUE.contains(&check) {
        return Err(unknown_check(check));
    }
    let points = values
        .iter()
        .map(|v| {
            let mut c = cfg.clone();
            apply_sweep_value(&mut c, parameter, v)?;
            Ok(c)
        })
        .collect::<Result<Vec<_>>>()?;
    cfg.validate()?;
    let mut w = RunWriter::create(
        run_dir(cfg, "sweep", Some(&format!("{check}-{parameter}"))),
        "sweep",
        Some(check),
        cfg.hash(),
        cfg.seed,
    )?;
    let mut csv = String::from(
        "parameter,value,check,passed,max_ratio,median_ratio,refinement_delta,fitted_exponent,target,step_delta\n",
    );
    let mut previous: std::collections::HashMap<String, f64> = Default::default();
    for (i, (value, pc)) in values.iter().zip(&points).enumerate() {
        let sub = w.dir().join(format!("point-{i:03}"));
        let m = verify_into(pc, check, sub.clone())?;
        for f in &m.files {
            w.track(&sub.join(f));
        }
        for s in &m.checks {
            let step = previous
                .get(&s.name)
                .map(|p| if *p == 0.0 && s.max_ratio == 0.0 { 0.0 } else { (s.max_ratio - p).abs() / p.abs() });
            previous.insert(s.name.clone(), s.max_ratio);
            let opt = |x: Option<f64>| x.map(|x| format!("{x:e}")).unwrap_or_default();
            let target = 2.0 * pc.beta / (1.0 + 2.0 * pc.beta);
            csv.push_str(&format!(
                "{parameter},{value},{},{},{:e},{:e},{},{},{target:e},{}\n",
                s.name,
                s.passed,
                s.max_ratio,
                s.median_ratio,
                opt(s.refinement_delta),
                opt(s.fitted_exponent),
                opt(step),
            ));
            w.status(s.clone());
        }
        for (k, v) in &m.scalars {
            w.scalar(format!("{i:03}.{k}"), *v);
        }
        w.lap(&format!("point-{i:03}"));
    }
    w.write_file("sweep.csv", csv.as_bytes())?;
    w.finish()
}

pub fn cmd_defaults() -> String {
    ExperimentConfig::default().to_toml()
}

/// Summary of a snapshot file.
pub fn cmd_inspect(path: &Path) -> Result<serde_json::Value> {
    let f = snapshot::read(path)?;
    let grid = f.grid();
    let reps: Vec<&str> = f
        .reps()
        .iter()
        .map(|r| match r {
            Rep::Physical => "physical",
            Rep::Frequency => "frequency",
        })
        .collect();
    let physical = f.with_rep(&f.all_kinds(), Rep::Physical);
    let imag = physical.data().iter().fold(0.0f64, |m, z: &Complex64| m.max(z.im.abs()));
    Ok(json!({
        "path": path.display().to_string(),
        "n": grid.n(),
        "layout": match f.layout() { Layout::Full => "full", Layout::Phase => "phase" },
        "shape": f.shape(),
        "boxes": boxes(grid),
        "reps": reps,
        "norm": f.norm(),
        "max_abs": physical.max_abs(),
        "max_imag": imag,
        "top_third_energy_fraction": f.with_rep(&f.all_kinds(), Rep::Frequency).top_third_energy_fraction(),
    }))
}
