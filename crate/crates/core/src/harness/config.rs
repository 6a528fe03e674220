//! Flat key-value experiment configuration.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::commutators::{KernelOptions, ModifierSpec, OpNormOptions, Weight};
use crate::data::RandomFieldSpec;
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::model::{ChiPower, CoefficientRecipe, ModelParams};
use crate::norms::{CorpusSpec, FamilySpec};
use crate::symbol::MultiplierSpec;

/// Environment variable naming the output root.
pub const OUT_ENV: &str = "HYPO_OUT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientChoice {
    Constant,
    Variable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymbolChoice {
    Aniso,
    Bracket,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModifierChoice {
    Bump,
    Trig,
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightChoice {
    /// Plain for `β <= 1/2`, shifted above.
    Auto,
    Plain,
    Shifted,
    FullOrder,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverChoice {
    Stepper,
    Oracle,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataChoice {
    Zero,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    // model
    pub beta: f64,
    /// Order of the velocity moment in the averaging checks.
    pub alpha: f64,
    pub coefficient: CoefficientChoice,
    /// Constant diffusivity.
    pub a: f64,
    pub a_minus: f64,
    pub b_base: f64,
    pub b_amp: f64,
    pub b_time_amp: f64,
    pub chi_margin: f64,
    pub chi_power: ChiPower,
    pub dealias: bool,

    // grid
    pub n: usize,
    pub nt: usize,
    pub nx: usize,
    pub nv: usize,
    pub lt: f64,
    pub lx: f64,
    pub lv: f64,

    // corpus
    pub corpus_size: usize,
    pub seed: u64,
    pub band_t: i64,
    pub band_x: i64,
    pub band_v: i64,
    /// Spectral decay; `n + 2` when absent.
    pub decay_q: Option<f64>,
    /// Gaussian velocity window width; 0 leaves the data periodic.
    pub window: f64,

    // checks
    pub refine: bool,
    pub refinement_tol: f64,
    pub exponent_tol: f64,
    pub symbol: SymbolChoice,
    pub delta: f64,
    pub split_lambda: f64,

    // scaling family
    pub family_min: f64,
    pub family_max: f64,
    pub family_count: usize,
    pub family_dictionary: i32,
    pub s_grid_step: f64,
    pub s_max: f64,
    pub slope_tol: f64,

    // commutators
    pub modifier: ModifierChoice,
    pub modifier_value: f64,
    pub x_mode: u32,
    pub v_mode: u32,
    /// Members `j = 1, 2, 4, ..` of the modifier family.
    pub modifier_family: usize,
    pub weight: WeightChoice,
    pub power_iterations: usize,
    pub power_tol: f64,
    pub commutator_corpus: usize,
    pub commutator_band_x: i64,
    pub commutator_band_v: i64,
    pub schur: bool,
    pub sobolev_delta: f64,
    pub kernel_panels: usize,
    pub kernel_ratio: f64,
    pub kernel_nodes: usize,

    // solve
    pub solver: SolverChoice,
    pub datum: DataChoice,
    pub source: DataChoice,
    pub record_stride: usize,
    pub inner_tol: f64,
    pub inner_max_iter: usize,
    /// Largest accepted relative stepper/oracle discrepancy.
    pub solve_tol: f64,

    /// Output root; `HYPO_OUT` or `runs` when absent.
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let recipe = CoefficientRecipe::default();
        let kernel = KernelOptions::default();
        let op = OpNormOptions::default();
        let family = FamilySpec::new(0.5);
        ExperimentConfig {
            beta: 0.5,
            alpha: 1.0,
            coefficient: CoefficientChoice::Constant,
            a: 1.0,
            a_minus: recipe.a_minus,
            b_base: recipe.b_base,
            b_amp: recipe.b_amp,
            b_time_amp: recipe.b_time_amp,
            chi_margin: recipe.margin,
            chi_power: recipe.chi_power,
            dealias: false,
            n: 1,
            nt: 64,
            nx: 64,
            nv: 64,
            lt: 16.0,
            lx: 2.0 * PI,
            lv: 8.0 * PI,
            corpus_size: 50,
            seed: 7,
            band_t: 2,
            band_x: 2,
            band_v: 4,
            decay_q: None,
            window: 1.5,
            refine: false,
            refinement_tol: 0.1,
            exponent_tol: 0.05,
            symbol: SymbolChoice::Aniso,
            delta: 1.0,
            split_lambda: 1.0,
            family_min: family.lambda_min,
            family_max: family.lambda_max,
            family_count: family.count,
            family_dictionary: family.dictionary,
            s_grid_step: family.s_step,
            s_max: family.s_max,
            slope_tol: family.slope_tol,
            modifier: ModifierChoice::Bump,
            modifier_value: 1.0,
            x_mode: 1,
            v_mode: 1,
            modifier_family: 3,
            weight: WeightChoice::Auto,
            power_iterations: op.max_iterations,
            power_tol: op.tol,
            commutator_corpus: op.corpus_size,
            commutator_band_x: op.band_x,
            commutator_band_v: op.band_v,
            schur: true,
            sobolev_delta: 0.1,
            kernel_panels: kernel.panels,
            kernel_ratio: kernel.ratio,
            kernel_nodes: kernel.nodes,
            solver: SolverChoice::Both,
            datum: DataChoice::Random,
            source: DataChoice::Zero,
            record_stride: 1,
            inner_tol: 1e-10,
            inner_max_iter: 200,
            solve_tol: 1e-2,
            out: None,
        }
    }
}

fn bad(key: &str, reason: impl std::fmt::Display) -> Error {
    Error::Config(format!("key `{key}`: {reason}"))
}

fn positive(key: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(bad(key, format!("{x} must be finite and > 0")))
    }
}

fn grid_len(key: &str, x: usize) -> Result<()> {
    if x >= 4 && x.is_multiple_of(2) {
        Ok(())
    } else {
        Err(bad(key, format!("{x} must be even and at least 4")))
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// The config without its output root, which is where a run goes and
    /// not what it computes.
    pub fn canonical(&self) -> ExperimentConfig {
        ExperimentConfig {
            out: None,
            ..self.clone()
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("the config serializes")
    }

    /// Checks every key against its documented range.
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(bad("beta", format!("{} is outside (0, 1]", self.beta)));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(bad("alpha", format!("{} must be finite and >= 0", self.alpha)));
        }
        if !(self.a >= 0.0 && self.a.is_finite()) {
            return Err(bad("a", format!("{} must be finite and >= 0", self.a)));
        }
        positive("a_minus", self.a_minus)?;
        if self.b_base < self.b_amp.abs() * (1.0 + self.b_time_amp.abs()) {
            return Err(bad("b_base", "must dominate the oscillating part so that b >= 0"));
        }
        if !(0.0..0.5).contains(&self.chi_margin) {
            return Err(bad("chi_margin", "must lie in [0, 0.5)"));
        }
        if !(1..=2).contains(&self.n) {
            return Err(bad("n", format!("{} must be 1 or 2", self.n)));
        }
        grid_len("nt", self.nt)?;
        grid_len("nx", self.nx)?;
        grid_len("nv", self.nv)?;
        positive("lt", self.lt)?;
        positive("lx", self.lx)?;
        positive("lv", self.lv)?;
        if self.corpus_size == 0 {
            return Err(bad("corpus_size", "must be >= 1"));
        }
        for (key, band, len) in [
            ("band_t", self.band_t, self.nt),
            ("band_x", self.band_x, self.nx),
            ("band_v", self.band_v, self.nv),
        ] {
            if band < 0 || band as usize >= len / 2 {
                return Err(bad(key, format!("{band} must lie in [0, {})", len / 2)));
            }
        }
        if let Some(q) = self.decay_q {
            if !(q >= 0.0 && q.is_finite()) {
                return Err(bad("decay_q", format!("{q} must be finite and >= 0")));
            }
        }
        if !(self.window >= 0.0 && self.window.is_finite()) {
            return Err(bad("window", "must be finite and >= 0"));
        }
        positive("refinement_tol", self.refinement_tol)?;
        positive("exponent_tol", self.exponent_tol)?;
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(bad("delta", "must be finite and >= 0"));
        }
        positive("split_lambda", self.split_lambda)?;
        positive("family_min", self.family_min)?;
        if self.family_max <= self.family_min {
            return Err(bad("family_max", "must exceed family_min"));
        }
        if self.family_count < 5 {
            return Err(bad("family_count", "at least 5 scales are needed"));
        }
        if self.family_dictionary < 1 {
            return Err(bad("family_dictionary", "must be >= 1"));
        }
        positive("s_grid_step", self.s_grid_step)?;
        positive("s_max", self.s_max)?;
        positive("slope_tol", self.slope_tol)?;
        if !self.modifier_value.is_finite() {
            return Err(bad("modifier_value", "must be finite"));
        }
        if self.modifier_family == 0 {
            return Err(bad("modifier_family", "must be >= 1"));
        }
        if self.power_iterations == 0 {
            return Err(bad("power_iterations", "must be >= 1"));
        }
        positive("power_tol", self.power_tol)?;
        for (key, band, len) in [
            ("commutator_band_x", self.commutator_band_x, self.nx),
            ("commutator_band_v", self.commutator_band_v, self.nv),
        ] {
            if band < 0 || band as usize >= len / 2 {
                return Err(bad(key, format!("{band} must lie in [0, {})", len / 2)));
            }
        }
        positive("sobolev_delta", self.sobolev_delta)?;
        if self.kernel_panels == 0 || self.kernel_nodes == 0 {
            return Err(bad("kernel_panels", "panels and nodes must be >= 1"));
        }
        if !(self.kernel_ratio > 0.0 && self.kernel_ratio < 1.0) {
            return Err(bad("kernel_ratio", "must lie in (0, 1)"));
        }
        if self.record_stride == 0 {
            return Err(bad("record_stride", "must be >= 1"));
        }
        positive("inner_tol", self.inner_tol)?;
        positive("solve_tol", self.solve_tol)?;
        if self.inner_max_iter == 0 {
            return Err(bad("inner_max_iter", "must be >= 1"));
        }
        Ok(())
    }

    /// Sha-256 of the canonical JSON form, output root excluded.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(&self.canonical()).expect("the config serializes");
        Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn out_root(&self) -> PathBuf {
        self.out
            .clone()
            .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("runs"))
    }

    pub fn grid(&self) -> Result<Arc<GridSpec>> {
        Ok(Arc::new(GridSpec::new(self.n, self.nt, self.nx, self.nv, self.lt, self.lx, self.lv)?))
    }

    pub fn recipe(&self) -> CoefficientRecipe {
        CoefficientRecipe {
            a_minus: self.a_minus,
            b_base: self.b_base,
            b_amp: self.b_amp,
            b_time_amp: self.b_time_amp,
            margin: self.chi_margin,
            chi_power: self.chi_power,
        }
    }

    pub fn field_spec(&self) -> RandomFieldSpec {
        RandomFieldSpec {
            band_t: self.band_t,
            band_x: self.band_x,
            band_v: self.band_v,
            decay_q: self.decay_q.unwrap_or(self.n as f64 + 2.0),
            window: (self.window > 0.0).then_some(self.window),
        }
    }

    pub fn corpus_spec(&self) -> CorpusSpec {
        CorpusSpec {
            size: self.corpus_size,
            seed: self.seed,
            field: self.field_spec(),
        }
    }

    pub fn constant_params(&self) -> ModelParams {
        let mut p = ModelParams::with_constant(self.beta, self.a);
        p.dealias = self.dealias;
        p
    }

    pub fn multiplier(&self) -> MultiplierSpec {
        match self.symbol {
            SymbolChoice::Aniso => MultiplierSpec::aniso(self.beta),
            SymbolChoice::Bracket => MultiplierSpec::bracket(self.beta, self.delta),
        }
    }

    pub fn family_spec(&self) -> FamilySpec {
        FamilySpec {
            beta: self.beta,
            lambda_min: self.family_min,
            lambda_max: self.family_max,
            count: self.family_count,
            dictionary: self.family_dictionary,
            s_step: self.s_grid_step,
            s_max: self.s_max,
            slope_tol: self.slope_tol,
        }
    }

    /// Modifier family, modes scaled by `1, 2, 4, ..`. Every mode must lie
    /// below the Nyquist index of its axis.
    pub fn modifiers(&self) -> Result<Vec<ModifierSpec>> {
        if self.modifier != ModifierChoice::Constant {
            let j = 1usize << (self.modifier_family - 1);
            if self.x_mode as usize * j >= self.nx / 2 || self.v_mode as usize * j >= self.nv / 2 {
                return Err(bad("modifier_family", "its highest mode does not fit below the Nyquist index"));
            }
        }
        Ok((0..self.modifier_family)
            .map(|i| {
                let j = 1u32 << i;
                match self.modifier {
                    ModifierChoice::Constant => ModifierSpec::Constant {
                        value: self.modifier_value,
                    },
                    ModifierChoice::Trig => ModifierSpec::Trig {
                        b_base: self.b_base,
                        b_amp: self.b_amp,
                        x_mode: self.x_mode * j,
                        v_mode: self.v_mode * j,
                    },
                    ModifierChoice::Bump => ModifierSpec::Bump {
                        b_base: self.b_base,
                        b_amp: self.b_amp,
                        x_mode: self.x_mode * j,
                        v_mode: self.v_mode * j,
                        margin: self.chi_margin,
                    },
                }
            })
            .collect())
    }

    pub fn weight(&self) -> Weight {
        match self.weight {
            WeightChoice::Auto => Weight::for_beta(self.beta),
            WeightChoice::Plain => Weight::Plain,
            WeightChoice::Shifted => Weight::Shifted,
            WeightChoice::FullOrder => Weight::FullOrder,
        }
    }

    pub fn op_options(&self) -> OpNormOptions {
        OpNormOptions {
            corpus_size: self.commutator_corpus,
            seed: self.seed,
            band_x: self.commutator_band_x,
            band_v: self.commutator_band_v,
            decay_q: 1.0,
            max_iterations: self.power_iterations,
            tol: self.power_tol,
        }
    }

    pub fn kernel_options(&self) -> KernelOptions {
        KernelOptions {
            panels: self.kernel_panels,
            ratio: self.kernel_ratio,
            nodes: self.kernel_nodes,
        }
    }

    /// Applies a `--grid` override: `N` for every axis or `NTxNXxNV`.
    pub fn set_grid(&mut self, spec: &str) -> Result<()> {
        let parts: Vec<&str> = spec.split('x').collect();
        let parse = |s: &str| s.trim().parse::<usize>().map_err(|_| bad("grid", format!("`{spec}` is not N or NTxNXxNV")));
        match parts.as_slice() {
            [n] => {
                let n = parse(n)?;
                (self.nt, self.nx, self.nv) = (n, n, n);
            }
            [t, x, v] => (self.nt, self.nx, self.nv) = (parse(t)?, parse(x)?, parse(v)?),
            _ => return Err(bad("grid", format!("`{spec}` is not N or NTxNXxNV"))),
        }
        Ok(())
    }
}
