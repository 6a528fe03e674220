//! Per-case results and their corpus summary.

use serde::{Deserialize, Serialize};

/// One evaluated inequality `LHS ≲ RHS`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseResult {
    pub case: usize,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs / rhs`; `0` for the vacuous case `lhs = rhs = 0`.
    pub ratio: f64,
    pub vacuous: bool,
    /// False when the pair failed the residual gate.
    pub valid: bool,
    /// Named intermediate norms, e.g. the two summands of a left side.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub terms: Vec<(String, f64)>,
}

impl CaseResult {
    pub fn new(lhs: f64, rhs: f64) -> Self {
        let vacuous = lhs == 0.0 && rhs == 0.0;
        CaseResult {
            case: 0,
            lhs,
            rhs,
            ratio: if vacuous { 0.0 } else { lhs / rhs },
            vacuous,
            valid: true,
            terms: Vec::new(),
        }
    }

    pub fn invalid() -> Self {
        CaseResult {
            case: 0,
            lhs: f64::NAN,
            rhs: f64::NAN,
            ratio: f64::NAN,
            vacuous: false,
            valid: false,
            terms: Vec::new(),
        }
    }

    pub fn with_terms(mut self, terms: &[(&str, f64)]) -> Self {
        self.terms = terms.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        self
    }

    pub fn is_sound(&self) -> bool {
        self.valid && self.ratio.is_finite() && self.ratio >= 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub name: String,
    pub cases: Vec<CaseResult>,
    pub max_ratio: f64,
    pub median_ratio: f64,
    /// Empirical constant of `≲`: the corpus max ratio.
    pub constant: f64,
    /// Relative change of the max ratio under grid doubling.
    pub refinement_delta: Option<f64>,
    pub fitted_exponent: Option<f64>,
    pub half_width: Option<f64>,
    pub tolerance: Option<f64>,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl EstimateReport {
    /// Summarizes cases; any invalid or non-finite ratio fails the report.
    pub fn from_cases(name: impl Into<String>, mut cases: Vec<CaseResult>) -> Self {
        for (i, c) in cases.iter_mut().enumerate() {
            c.case = i;
        }
        let sound = cases.iter().all(CaseResult::is_sound);
        let mut ratios: Vec<f64> = cases.iter().filter(|c| !c.vacuous).map(|c| c.ratio).collect();
        let (max_ratio, median_ratio) = if sound && !ratios.is_empty() {
            ratios.sort_by(f64::total_cmp);
            let m = ratios.len();
            let median = if m % 2 == 1 {
                ratios[m / 2]
            } else {
                0.5 * (ratios[m / 2 - 1] + ratios[m / 2])
            };
            (ratios[m - 1], median)
        } else if sound {
            (0.0, 0.0)
        } else {
            (f64::NAN, f64::NAN)
        };
        EstimateReport {
            name: name.into(),
            cases,
            max_ratio,
            median_ratio,
            constant: max_ratio,
            refinement_delta: None,
            fitted_exponent: None,
            half_width: None,
            tolerance: None,
            passed: sound,
            notes: Vec::new(),
        }
    }

    /// True when every case is the vacuous `0 ≲ 0`.
    pub fn is_vacuous(&self) -> bool {
        !self.cases.is_empty() && self.cases.iter().all(|c| c.vacuous)
    }

    /// Running maximum of the ratios in case order.
    pub fn running_max(&self) -> Vec<f64> {
        let mut m = 0.0f64;
        self.cases
            .iter()
            .map(|c| {
                m = m.max(c.ratio);
                m
            })
            .collect()
    }

    /// Records the refinement delta against the same corpus on a doubled
    /// grid and fails when it reaches `tol`.
    pub fn with_refinement(mut self, fine: &EstimateReport, tol: f64) -> Self {
        let delta = if self.max_ratio == 0.0 && fine.max_ratio == 0.0 {
            0.0
        } else {
            (fine.max_ratio - self.max_ratio).abs() / self.max_ratio.abs()
        };
        self.refinement_delta = Some(delta);
        self.tolerance = Some(tol);
        self.passed = self.passed && fine.passed && delta.is_finite() && delta < tol;
        self
    }

    pub fn note(mut self, text: impl Into<String>) -> Self {
        self.notes.push(text.into());
        self
    }

    /// One JSON object per case followed by the summary object.
    pub fn to_json_lines(&self) -> serde_json::Result<String> {
        let mut out = String::new();
        for c in &self.cases {
            let mut v = serde_json::to_value(c)?;
            v["check"] = serde_json::Value::String(self.name.clone());
            out.push_str(&serde_json::to_string(&v)?);
            out.push('\n');
        }
        let mut summary = serde_json::to_value(self)?;
        if let Some(obj) = summary.as_object_mut() {
            obj.remove("cases");
            obj.insert("summary".into(), serde_json::Value::Bool(true));
        }
        out.push_str(&serde_json::to_string(&summary)?);
        out.push('\n');
        Ok(out)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("case,lhs,rhs,ratio\n");
        for c in &self.cases {
            out.push_str(&format!("{},{:e},{:e},{:e}\n", c.case, c.lhs, c.rhs, c.ratio));
        }
        out
    }
}
