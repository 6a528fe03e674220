//! Random band-limited corpora of manufactured pairs.
//!
//! Case `i` draws its data from seed `seed + i`. The data is defined
//! independently of the grid, so the same corpus can be evaluated on a grid
//! and on its refinement.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::checks::{Check, VerifiedPair};
use super::report::EstimateReport;
use crate::data::{RandomFieldSpec, SpectralData};
use crate::error::{Error, Result};
use crate::grid::{AxisKind, GridSpec};
use crate::model::{Coefficient, CoefficientRecipe, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub size: usize,
    pub seed: u64,
    pub field: RandomFieldSpec,
}

impl CorpusSpec {
    /// Defaults for dimension `n`: decay `q = n + 2`.
    pub fn default_for(n: usize) -> Self {
        CorpusSpec {
            size: 50,
            seed: 7,
            field: RandomFieldSpec {
                band_t: 2,
                band_x: 2,
                band_v: 4,
                decay_q: n as f64 + 2.0,
                window: Some(1.5),
            },
        }
    }
}

/// Which equation the corpus pairs solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CorpusKind {
    Transport,
    Constant { beta: f64 },
    Variable { beta: f64, recipe: CoefficientRecipe },
}

#[derive(Debug, Clone)]
pub struct Corpus {
    pub grid: Arc<GridSpec>,
    pub spec: CorpusSpec,
    pub kind: CorpusKind,
    params: ModelParams,
}

impl Corpus {
    pub fn new(grid: Arc<GridSpec>, spec: CorpusSpec, kind: CorpusKind) -> Result<Self> {
        if spec.size == 0 {
            return Err(Error::param("corpus_size", "must be >= 1"));
        }
        let params = match kind {
            CorpusKind::Transport => ModelParams::transport_only(),
            CorpusKind::Constant { beta } => ModelParams::constant(beta),
            CorpusKind::Variable { beta, recipe } => {
                ModelParams::variable(beta, Arc::new(Coefficient::from_recipe(grid.clone(), &recipe)?))
            }
        };
        params.validate()?;
        Ok(Corpus {
            grid,
            spec,
            kind,
            params,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// The same corpus on the doubled grid.
    pub fn refined(&self) -> Result<Corpus> {
        Corpus::new(Arc::new(self.grid.refined()?), self.spec, self.kind)
    }

    pub fn data(&self, i: usize) -> SpectralData {
        let g = &self.grid;
        let boxes = [g.box_len(AxisKind::T), g.box_len(AxisKind::X), g.box_len(AxisKind::V)];
        SpectralData::random(g.n(), boxes, &self.spec.field, self.spec.seed.wrapping_add(i as u64))
    }

    pub fn pair(&self, i: usize) -> Result<VerifiedPair> {
        let f = self.data(i).sample(&self.grid)?;
        VerifiedPair::manufactured(&f, &self.params)
    }

    /// Runs every check on every case; one report per check. Cases are
    /// built one at a time so that only a few fields are alive at once.
    pub fn evaluate(&self, checks: &[Check]) -> Result<Vec<EstimateReport>> {
        let rows: Vec<Vec<_>> = (0..self.spec.size)
            .into_par_iter()
            .map(|i| {
                let pair = self.pair(i)?;
                checks.iter().map(|c| c.evaluate(&pair)).collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        Ok(checks
            .iter()
            .enumerate()
            .map(|(j, c)| EstimateReport::from_cases(c.name(), rows.iter().map(|r| r[j].clone()).collect()))
            .collect())
    }

    /// Evaluates on this grid and its refinement; the coarse reports carry
    /// the refinement delta and fail when it reaches `tol`.
    pub fn refinement_study(&self, checks: &[Check], tol: f64) -> Result<Vec<EstimateReport>> {
        let coarse = self.evaluate(checks)?;
        let fine = self.refined()?.evaluate(checks)?;
        Ok(coarse
            .into_iter()
            .zip(&fine)
            .map(|(c, f)| c.with_refinement(f, tol))
            .collect())
    }
}
