//! Spectral polynomials of rank-one cutting-and-stacking constructions.
//!
//! Stage `k` cuts the tower of height `h_{k-1}` into `m_k` columns with
//! `a_{i,k}` spacers on column `i` (none above the last), giving return
//! times `R_{i,k} = i h_{k-1} + sum_{l<i} a_{l,k}` and heights
//! `h_k = R_{m_k-1,k} + h_{k-1}`. The stage polynomial carries
//! `sqrt(p_{i,k}) c_{i,k}` at `R_{i,k}`.
//!
//! Exponents are stored as `+R` rather than `-R` (`reflected`), which
//! leaves `|P|^2` unchanged.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dissociation::is_modulus_dissociated;
use crate::error::{Error, Result};
use crate::polynomial::{norm_grid_floor, TrigPolynomial};
use crate::products::RieszSpec;

const PARAM_TOL: f64 = 1e-12;

/// One cutting stage.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Stage {
    pub m: usize,
    /// `a_{i,k}` for `i = 0..m-2`.
    pub spacers: Vec<u64>,
    pub p: Vec<f64>,
    pub phases: Vec<Complex64>,
}

impl Stage {
    /// Measure-preserving stage with unit phases.
    pub fn uniform(m: usize, spacers: Vec<u64>) -> Self {
        Self {
            m,
            spacers,
            p: vec![1.0 / m as f64; m],
            phases: vec![Complex64::new(1.0, 0.0); m],
        }
    }

    fn validate(&self, k: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(format!("stage {k}: {msg}")));
        if self.m < 2 {
            return bad(format!("m = {} < 2", self.m));
        }
        if self.spacers.len() != self.m - 1 {
            return bad(format!("{} spacers for m = {}", self.spacers.len(), self.m));
        }
        if self.p.len() != self.m || self.phases.len() != self.m {
            return bad(format!(
                "{} probabilities and {} phases for m = {}",
                self.p.len(),
                self.phases.len(),
                self.m
            ));
        }
        if let Some(i) = self.p.iter().position(|&x| !(x.is_finite() && x > 0.0)) {
            return bad(format!("p_{i} = {} is not positive", self.p[i]));
        }
        let total: f64 = self.p.iter().sum();
        if (total - 1.0).abs() > PARAM_TOL {
            return bad(format!("probabilities sum to {total}"));
        }
        if let Some(i) = self
            .phases
            .iter()
            .position(|c| (c.norm() - 1.0).abs() > PARAM_TOL)
        {
            return bad(format!("|c_{i}| = {} is not 1", self.phases[i].norm()));
        }
        if (self.phases[0] - Complex64::new(1.0, 0.0)).norm() > PARAM_TOL {
            return bad("c_0 must be 1".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankOneParams {
    stages: Vec<Stage>,
}

/// JSON form: `{"stages": [{"m", "spacers", "p"?, "phases"?}]}`.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RankOneParamsRepr {
    pub stages: Vec<StageRepr>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageRepr {
    pub m: usize,
    pub spacers: Vec<u64>,
    pub p: Option<Vec<f64>>,
    pub phases: Option<Vec<[f64; 2]>>,
}

impl TryFrom<RankOneParamsRepr> for RankOneParams {
    type Error = Error;

    fn try_from(r: RankOneParamsRepr) -> Result<Self> {
        let stages = r
            .stages
            .into_iter()
            .map(|s| {
                let m = s.m.max(1);
                Stage {
                    m: s.m,
                    spacers: s.spacers,
                    p: s.p.unwrap_or_else(|| vec![1.0 / m as f64; m]),
                    phases: s
                        .phases
                        .map(|v| v.iter().map(|c| Complex64::new(c[0], c[1])).collect())
                        .unwrap_or_else(|| vec![Complex64::new(1.0, 0.0); m]),
                }
            })
            .collect();
        RankOneParams::new(stages)
    }
}

impl<'de> Deserialize<'de> for RankOneParams {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        RankOneParamsRepr::deserialize(d)?
            .try_into()
            .map_err(serde::de::Error::custom)
    }
}

impl RankOneParams {
    pub fn new(stages: Vec<Stage>) -> Result<Self> {
        if stages.is_empty() {
            return Err(Error::InvalidParameter("no stages".into()));
        }
        for (k, s) in stages.iter().enumerate() {
            s.validate(k + 1)?;
        }
        Ok(Self { stages })
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    /// `prod_{k<=K} max_i p_{i,k}` over the supplied stages.
    pub fn dissipativity_product(&self) -> f64 {
        self.stages
            .iter()
            .map(|s| s.p.iter().cloned().fold(0.0, f64::max))
            .product()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ReturnTimeTable {
    /// `h_0 = 1, h_1, ..., h_K`.
    pub heights: Vec<u64>,
    /// `returns[k-1][i-1] = R_{i,k}` for `1 <= i <= m_k - 1`.
    pub returns: Vec<Vec<u64>>,
}

fn overflow(k: usize) -> Error {
    Error::Overflow(format!("return times overflow u64 at stage {k}"))
}

pub fn return_times(params: &RankOneParams) -> Result<ReturnTimeTable> {
    let mut heights = vec![1u64];
    let mut returns = Vec::with_capacity(params.stages.len());
    for (idx, s) in params.stages.iter().enumerate() {
        let k = idx + 1;
        let h = heights[idx];
        let mut row = Vec::with_capacity(s.m - 1);
        let mut spacer_sum = 0u64;
        for i in 1..s.m {
            spacer_sum = spacer_sum.checked_add(s.spacers[i - 1]).ok_or_else(|| overflow(k))?;
            let r = (i as u64)
                .checked_mul(h)
                .and_then(|x| x.checked_add(spacer_sum))
                .ok_or_else(|| overflow(k))?;
            row.push(r);
        }
        let next = row.last().unwrap().checked_add(h).ok_or_else(|| overflow(k))?;
        heights.push(next);
        returns.push(row);
    }
    Ok(ReturnTimeTable { heights, returns })
}

/// The conditions `h_1 = R_{m_1-1,1} + 1`, `R_{1,k} >= h_{k-1}` and
/// `R_{i+1,k} - R_{i,k} >= h_{k-1}`; returns the first violation.
pub fn check_return_conditions(t: &ReturnTimeTable) -> Option<String> {
    if let Some(row) = t.returns.first() {
        if t.heights[1] != row.last().unwrap() + 1 {
            return Some(format!("h_1 = {} != R_(m_1-1,1) + 1", t.heights[1]));
        }
    }
    for (idx, row) in t.returns.iter().enumerate() {
        let k = idx + 1;
        let h = t.heights[idx];
        if row[0] < h {
            return Some(format!("R_(1,{k}) = {} < h_{} = {h}", row[0], k - 1));
        }
        for (i, w) in row.windows(2).enumerate() {
            if w[1] - w[0] < h {
                return Some(format!(
                    "R_({},{k}) - R_({},{k}) = {} < h_{} = {h}",
                    i + 2,
                    i + 1,
                    w[1] - w[0],
                    k - 1
                ));
            }
        }
        if t.heights[k] <= *row.last().unwrap() {
            return Some(format!("h_{k} <= R_(m_k-1,{k})"));
        }
    }
    None
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankOneSpec {
    pub spec: RieszSpec,
    pub table: ReturnTimeTable,
    /// Exponents stored as `+R_{i,k}`.
    pub reflected: bool,
}

/// Stage polynomials for the first `k` stages.
pub fn build_polynomials(params: &RankOneParams, k: usize) -> Result<RankOneSpec> {
    if k == 0 || k > params.stages.len() {
        return Err(Error::StageOutOfRange {
            stage: k,
            stages: params.stages.len(),
        });
    }
    let sub = RankOneParams {
        stages: params.stages[..k].to_vec(),
    };
    let table = return_times(&sub)?;
    let factors = sub
        .stages
        .iter()
        .zip(&table.returns)
        .map(|(s, row)| {
            let norm = s.p.iter().sum::<f64>().sqrt();
            let exps = std::iter::once(0u64).chain(row.iter().copied());
            TrigPolynomial::new(
                exps.zip(s.p.iter().zip(&s.phases))
                    .map(|(e, (&p, &c))| (e, c * (p.sqrt() / norm))),
            )
        })
        .collect();
    Ok(RankOneSpec {
        spec: RieszSpec::new(factors, "rankone")?,
        table,
        reflected: true,
    })
}

/// Cutting parameters read back from stage polynomials.
pub fn reconstruct_params(spec: &RieszSpec) -> Result<RankOneParams> {
    let mut h = 1u64;
    let mut stages = Vec::with_capacity(spec.stage_count());
    for (idx, p) in spec.factors().iter().enumerate() {
        let r: Vec<u64> = p.exponents().collect();
        if r[0] != 0 {
            return Err(Error::ZeroConstantTerm);
        }
        let mut spacers = Vec::with_capacity(r.len() - 1);
        for i in 1..r.len() {
            let gap = r[i] - r[i - 1];
            spacers.push(gap.checked_sub(h).ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "stage {}: gap {gap} below height {h}",
                    idx + 1
                ))
            })?);
        }
        let p_list: Vec<f64> = p.terms().iter().map(|t| t.1.norm_sqr()).collect();
        let phases = p.terms().iter().map(|t| t.1 / t.1.norm()).collect();
        stages.push(Stage {
            m: r.len(),
            spacers,
            p: p_list,
            phases,
        });
        h = r.last().unwrap().checked_add(h).ok_or_else(|| overflow(idx + 1))?;
    }
    RankOneParams::new(stages)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DynamicalCheck {
    pub dynamical: bool,
    pub purely: bool,
    pub violation: Option<String>,
    /// `h_0 = 1, h_j = r_{n_j,j} + h_{j-1}`.
    pub heights: Vec<u64>,
}

/// Gap conditions `r_{1,j} >= h_{j-1}`, `r_{i+1,j} - r_{i,j} >= h_{j-1}`.
pub fn is_dynamical_origin(spec: &RieszSpec) -> DynamicalCheck {
    let mut heights = vec![1u64];
    let mut violation = None;
    for (idx, p) in spec.factors().iter().enumerate() {
        let j = idx + 1;
        let h = heights[idx];
        let r: Vec<u64> = p.exponents().collect();
        if violation.is_none() {
            if r[0] != 0 {
                violation = Some(format!("factor {j} has no constant term"));
            } else if r.len() > 1 && r[1] < h {
                violation = Some(format!("r_(1,{j}) = {} < h_{} = {h}", r[1], j - 1));
            } else if let Some(i) = (1..r.len().saturating_sub(1)).find(|&i| r[i + 1] - r[i] < h) {
                violation = Some(format!(
                    "r_({},{j}) - r_({i},{j}) = {} < h_{} = {h}",
                    i + 1,
                    r[i + 1] - r[i],
                    j - 1
                ));
            }
        }
        match r.last().unwrap().checked_add(h) {
            Some(next) => heights.push(next),
            None => {
                violation.get_or_insert_with(|| format!("height overflow at factor {j}"));
                break;
            }
        }
    }
    let dynamical = violation.is_none();
    let positive = spec
        .factors()
        .iter()
        .all(|p| p.terms().iter().all(|t| t.1.im == 0.0 && t.1.re > 0.0));
    DynamicalCheck {
        dynamical,
        purely: dynamical && positive,
        violation,
        heights,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Lift {
    pub spec: RieszSpec,
    pub n: Vec<u64>,
    /// Cumulative bounds `H_j`.
    pub h_bounds: Vec<u64>,
    pub dissociated: bool,
    pub dynamical: bool,
}

/// `p_j(z^{N_j})` with `N_1 = 1`, `N_{j+1} = multiplier * H_j + 1` and
/// `H_j = sum_{i<=j} N_i deg p_i + h_{j-1}`.
pub fn dissociate_lift(ps: &[TrigPolynomial]) -> Result<Lift> {
    dissociate_lift_with(ps, 2)
}

pub fn dissociate_lift_with(ps: &[TrigPolynomial], multiplier: u64) -> Result<Lift> {
    if multiplier < 2 {
        return Err(Error::InvalidParameter(format!("lift multiplier {multiplier} < 2")));
    }
    if ps.is_empty() {
        return Err(Error::InvalidParameter("nothing to lift".into()));
    }
    if let Some(i) = ps.iter().position(|p| p.constant_term().norm() == 0.0) {
        return Err(Error::InvalidParameter(format!(
            "input {} has zero constant term",
            i + 1
        )));
    }
    let of = |j: usize| Error::Overflow(format!("lift exponent overflow at factor {j}"));
    let mut n = Vec::with_capacity(ps.len());
    let mut h_bounds = Vec::with_capacity(ps.len());
    let (mut deg_sum, mut h_prev) = (0u64, 1u64);
    let mut factors = Vec::with_capacity(ps.len());
    for (idx, p) in ps.iter().enumerate() {
        let j = idx + 1;
        let nj = match h_bounds.last() {
            None => 1,
            Some(&hb) => multiplier
                .checked_mul(hb)
                .and_then(|x: u64| x.checked_add(1))
                .ok_or_else(|| of(j))?,
        };
        let lifted = p.contract(nj)?;
        let scaled_deg = lifted.degree();
        deg_sum = deg_sum.checked_add(scaled_deg).ok_or_else(|| of(j))?;
        let hb = deg_sum.checked_add(h_prev).ok_or_else(|| of(j))?;
        h_prev = scaled_deg.checked_add(h_prev).ok_or_else(|| of(j))?;
        n.push(nj);
        h_bounds.push(hb);
        factors.push(lifted);
    }
    let spec = RieszSpec::normalized(factors, "lift")?;
    let dissociated = is_modulus_dissociated(spec.factors())?.dissociated;
    let dynamical = is_dynamical_origin(&spec).dynamical;
    if !dissociated || !dynamical {
        return Err(Error::Postcondition(format!(
            "lifted spec: dissociated = {dissociated}, dynamical origin = {dynamical}"
        )));
    }
    Ok(Lift {
        spec,
        n,
        h_bounds,
        dissociated,
        dynamical,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlatLift {
    /// Selected 1-based input indices `j_k`.
    pub selected: Vec<usize>,
    /// Grid fraction of `{ ||p_{j_k}| - 1| >= 2^-k }` per stage.
    pub fractions: Vec<f64>,
    pub lift: Lift,
}

/// Picks, for `k = 1..=count`, the first later index whose exceptional
/// set `{ ||p| - 1| >= 2^-k }` covers at most a `2^-k` fraction of the
/// grid, then lifts the selection.
pub fn flat_lift_schedule(ps: &[TrigPolynomial], count: usize, n_grid: usize) -> Result<FlatLift> {
    if count == 0 {
        return Err(Error::InvalidParameter("selection count must be >= 1".into()));
    }
    let mut selected = Vec::with_capacity(count);
    let mut fractions = Vec::with_capacity(count);
    let mut next = 0usize;
    for k in 1..=count {
        let eps = 0.5f64.powi(k as i32);
        let mut found = None;
        while next < ps.len() {
            let p = &ps[next];
            next += 1;
            let floor = norm_grid_floor(p.degree());
            if (n_grid as u64) < floor {
                return Err(Error::GridTooCoarse {
                    grid: n_grid,
                    floor: floor as usize,
                    rule: "N >= 2*deg p + 1",
                });
            }
            let g = p.normalize_l2()?.evaluate_grid(n_grid);
            let bad = g.values.iter().filter(|v| (v.norm() - 1.0).abs() >= eps).count();
            let frac = bad as f64 / n_grid as f64;
            if frac <= eps {
                found = Some((next, frac));
                break;
            }
        }
        match found {
            Some((j, f)) => {
                selected.push(j);
                fractions.push(f);
            }
            None => {
                return Err(Error::ScheduleInfeasible(format!(
                    "no remaining input meets the stage-{k} flatness threshold 2^-{k}"
                )))
            }
        }
    }
    let chosen: Vec<TrigPolynomial> = selected.iter().map(|&j| ps[j - 1].clone()).collect();
    let lift = dissociate_lift(&chosen)?;
    Ok(FlatLift {
        selected,
        fractions,
        lift,
    })
}
