//! JSON input files describing a product.
//!
//! ```json
//! {"label": "demo", "factors": [{"terms": [[0, 0.6, 0], [3, 0.8, 0]]}]}
//! {"classical_riesz": {"thetas": [0.785], "exponents": [3], "tail_test": "divergent"}}
//! {"ledrappier": {"heights": [1, 2], "spacers": [0, 0]}}
//! {"rankone": {"stages": [{"m": 2, "spacers": [0]}]}}
//! ```
//!
//! Exactly one source key must be present.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polynomial::{norm_grid_floor, TrigPolynomial, MAX_GRID_DEGREE};
use crate::products::{classical_riesz, ledrappier_spec, ClassicalRiesz, RieszSpec, TailTest};
use crate::rankone::{build_polynomials, return_times, RankOneParams, RankOneParamsRepr, RankOneSpec};

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecRepr {
    label: Option<String>,
    factors: Option<Vec<TrigPolynomial>>,
    #[serde(default)]
    normalize: bool,
    classical_riesz: Option<ClassicalRepr>,
    ledrappier: Option<LedrappierRepr>,
    rankone: Option<RankOneParamsRepr>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClassicalRepr {
    thetas: Vec<f64>,
    exponents: Vec<u64>,
    #[serde(default = "default_tail")]
    tail_test: TailTest,
}

fn default_tail() -> TailTest {
    TailTest::PartialSumOnly
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LedrappierRepr {
    heights: Vec<u64>,
    spacers: Vec<u64>,
}

#[derive(Clone, Debug)]
pub enum Source {
    Factors { factors: Vec<TrigPolynomial>, normalize: bool },
    ClassicalRiesz { thetas: Vec<f64>, exponents: Vec<u64>, tail_test: TailTest },
    Ledrappier { heights: Vec<u64>, spacers: Vec<u64> },
    RankOne(RankOneParamsRepr),
}

#[derive(Clone, Debug)]
pub struct SpecFile {
    pub label: Option<String>,
    pub source: Source,
}

#[derive(Clone, Debug, Serialize)]
pub struct Built {
    pub spec: RieszSpec,
    pub classical: Option<ClassicalRiesz>,
    pub rankone: Option<RankOneSpec>,
}

fn parse_error(e: serde_json::Error) -> Error {
    Error::InvalidParameter(format!("line {} column {}: {e}", e.line(), e.column()))
}

impl SpecFile {
    pub fn from_json(text: &str) -> Result<Self> {
        let r: SpecRepr = serde_json::from_str(text).map_err(parse_error)?;
        let mut sources = Vec::new();
        if let Some(factors) = r.factors {
            sources.push(("factors", Source::Factors { factors, normalize: r.normalize }));
        }
        if let Some(c) = r.classical_riesz {
            sources.push((
                "classical_riesz",
                Source::ClassicalRiesz {
                    thetas: c.thetas,
                    exponents: c.exponents,
                    tail_test: c.tail_test,
                },
            ));
        }
        if let Some(l) = r.ledrappier {
            sources.push((
                "ledrappier",
                Source::Ledrappier { heights: l.heights, spacers: l.spacers },
            ));
        }
        if let Some(p) = r.rankone {
            sources.push(("rankone", Source::RankOne(p)));
        }
        let names: Vec<&str> = sources.iter().map(|s| s.0).collect();
        if sources.len() != 1 {
            return Err(Error::InvalidParameter(format!(
                "need exactly one of factors, classical_riesz, ledrappier, rankone; found {names:?}"
            )));
        }
        if r.normalize && names[0] != "factors" {
            return Err(Error::InvalidParameter("field normalize applies to factors only".into()));
        }
        Ok(Self {
            label: r.label,
            source: sources.pop().unwrap().1,
        })
    }

    pub fn build(&self) -> Result<Built> {
        let mut built = match &self.source {
            Source::Factors { factors, normalize } => {
                let label = "factors";
                let spec = if *normalize {
                    RieszSpec::normalized(factors.clone(), label)?
                } else {
                    RieszSpec::new(factors.clone(), label)?
                };
                Built { spec, classical: None, rankone: None }
            }
            Source::ClassicalRiesz { thetas, exponents, tail_test } => {
                let c = classical_riesz(thetas, exponents, *tail_test)?;
                Built { spec: c.spec.clone(), classical: Some(c), rankone: None }
            }
            Source::Ledrappier { heights, spacers } => Built {
                spec: ledrappier_spec(heights, spacers)?,
                classical: None,
                rankone: None,
            },
            Source::RankOne(repr) => {
                let params = RankOneParams::try_from(repr.clone())?;
                let r = build_polynomials(&params, params.stages().len())?;
                Built { spec: r.spec.clone(), classical: None, rankone: Some(r) }
            }
        };
        if let Some(label) = &self.label {
            built.spec = built.spec.with_label(label.clone());
        }
        Ok(built)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub field: String,
    pub message: String,
}

fn diag(severity: Severity, field: &str, message: impl Into<String>) -> Diagnostic {
    Diagnostic {
        severity,
        field: field.into(),
        message: message.into(),
    }
}

/// Schema and cross-field checks; never runs an analysis.
pub fn validate(text: &str, grid: Option<usize>, stages: Option<(usize, usize)>) -> Vec<Diagnostic> {
    let file = match SpecFile::from_json(text) {
        Ok(f) => f,
        Err(e) => return vec![diag(Severity::Error, "spec", e.to_string())],
    };
    let mut out = Vec::new();
    let mut degrees: Option<Vec<u64>> = None;
    if let Source::RankOne(repr) = &file.source {
        match RankOneParams::try_from(repr.clone()) {
            Err(e) => out.push(diag(Severity::Error, "rankone", e.to_string())),
            Ok(params) => match return_times(&params) {
                Err(e) => out.push(diag(
                    Severity::Warning,
                    "rankone.stages",
                    format!("height pre-flight: {e}"),
                )),
                Ok(t) => {
                    let h = *t.heights.last().unwrap();
                    if h > MAX_GRID_DEGREE {
                        out.push(diag(
                            Severity::Warning,
                            "rankone.stages",
                            format!(
                                "height pre-flight: h_K = {h} exceeds the grid degree limit {MAX_GRID_DEGREE}"
                            ),
                        ));
                    }
                    degrees = Some(t.returns.iter().map(|r| *r.last().unwrap()).collect());
                }
            },
        }
    } else {
        match file.build() {
            Err(e) => out.push(diag(Severity::Error, "spec", e.to_string())),
            Ok(b) => degrees = Some(b.spec.factors().iter().map(|p| p.degree()).collect()),
        }
    }
    let Some(degrees) = degrees else { return out };
    let k = degrees.len();
    let (a, b) = stages.unwrap_or((1, k));
    if a == 0 || a > b || b > k {
        out.push(diag(
            Severity::Error,
            "stages",
            format!("stage range {a}..{b} outside 1..{k}"),
        ));
        return out;
    }
    let total = degrees[..b]
        .iter()
        .try_fold(0u64, |s, &d| s.checked_add(d));
    match total {
        None => out.push(diag(
            Severity::Warning,
            "stages",
            format!("partial product degree overflows u64 by stage {b}"),
        )),
        Some(d) => {
            if let Some(n) = grid {
                let floor = norm_grid_floor(d);
                if (n as u64) < floor {
                    out.push(diag(
                        Severity::Error,
                        "grid",
                        format!("grid {n} below floor N >= 2*deg + 1 = {floor} at stage {b}"),
                    ));
                }
            }
            if d > MAX_GRID_DEGREE {
                out.push(diag(
                    Severity::Warning,
                    "stages",
                    format!("stage {b} degree {d} exceeds the grid degree limit {MAX_GRID_DEGREE}"),
                ));
            }
        }
    }
    out
}
