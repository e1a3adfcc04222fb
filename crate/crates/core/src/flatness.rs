//! Flatness metrics, Barker sequences, the Gaussian `L^1` experiment and
//! zero-location checks.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::factorization::{mahler_measure, mahler_measure_jensen};
use crate::polynomial::{default_grid, norm_grid_floor, TrigPolynomial};
use crate::roots::{find_roots, Root, DEFAULT_ROOT_TOL};

/// `sqrt(pi) / 2`, the `L^1` norm of a standard complex Gaussian.
pub const GAUSSIAN_L1: f64 = 0.886_226_925_452_758;

/// Golden ratio.
pub const PHI: f64 = 1.618_033_988_749_895;

pub const ZERO_BOUND_TOL: f64 = 1e-8;

const UNIMODULAR_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "class", content = "param")]
pub enum ClassTag {
    /// All coefficients of modulus one.
    Unimodular,
    /// Coefficients in `{0, 1}`.
    ZeroOne,
    /// Real coefficients in `[0, lambda]` after normalization; smallest `lambda`.
    ALambda(f64),
    /// Coefficients `+-1`.
    Littlewood,
    /// Equal positive coefficients with exponent gaps at least `h`.
    RankOneForm(u64),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlatnessMetrics {
    pub l1_over_l2: f64,
    pub mahler_over_l2: f64,
    /// `max ||p(z)| - 1|` over the grid for the normalized copy.
    pub sup_deviation: f64,
    pub class_tags: Vec<ClassTag>,
    pub grid: usize,
}

fn strip_monomial(p: &TrigPolynomial) -> TrigPolynomial {
    let low = p.terms()[0].0;
    TrigPolynomial::new(p.terms().iter().map(|&(e, c)| (e - low, c)))
}

/// Root-based Mahler measure, falling back to Jensen quadrature when the
/// degree is beyond the root finder.
fn mahler_any(p: &TrigPolynomial, n: usize) -> Result<f64> {
    match mahler_measure(p) {
        Err(Error::DegreeTooLarge { .. }) => {
            let floor = 4 * p.degree() as usize + 4;
            mahler_measure_jensen(p, n.max(floor.next_power_of_two()))
        }
        r => r,
    }
}

fn class_tags(p: &TrigPolynomial) -> Vec<ClassTag> {
    let terms = p.terms();
    let dense = terms.len() as u64 == p.degree() + 1;
    let mut tags = Vec::new();
    if dense && terms.iter().all(|t| (t.1.norm() - 1.0).abs() <= UNIMODULAR_TOL) {
        tags.push(ClassTag::Unimodular);
    }
    let ones = terms.iter().all(|t| t.1 == Complex64::new(1.0, 0.0));
    if ones {
        tags.push(ClassTag::ZeroOne);
    }
    if terms.iter().all(|t| t.1.im == 0.0 && t.1.re >= 0.0) {
        let norm = p.l2_norm();
        let lambda = terms.iter().map(|t| t.1.re / norm).fold(0.0, f64::max);
        tags.push(ClassTag::ALambda(lambda));
    }
    if dense && terms.iter().all(|t| t.1.im == 0.0 && t.1.re.abs() == 1.0) {
        tags.push(ClassTag::Littlewood);
    }
    let c0 = terms[0].1;
    if terms[0].0 == 0
        && terms.len() >= 2
        && c0.im == 0.0
        && c0.re > 0.0
        && terms.iter().all(|t| t.1 == c0)
    {
        let h = terms.windows(2).map(|w| w[1].0 - w[0].0).min().unwrap();
        tags.push(ClassTag::RankOneForm(h));
    }
    tags
}

/// Metrics of the `L^2`-normalized copy on an `n`-point grid; class tags
/// are read off the coefficients as given.
pub fn flatness_metrics(p: &TrigPolynomial, n: usize) -> Result<FlatnessMetrics> {
    if p.is_zero() {
        return Err(Error::EmptyPolynomial);
    }
    let floor = norm_grid_floor(p.degree());
    if (n as u64) < floor {
        return Err(Error::GridTooCoarse {
            grid: n,
            floor: floor as usize,
            rule: "N >= 2*deg + 1",
        });
    }
    let q = p.normalize_l2()?;
    let g = q.evaluate_grid(n).modulus();
    let sup_deviation = g.values.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
    Ok(FlatnessMetrics {
        l1_over_l2: g.mean(),
        mahler_over_l2: mahler_any(&strip_monomial(&q), n)?,
        sup_deviation,
        class_tags: class_tags(p),
        grid: n,
    })
}

/// `flatness_metrics` on [`default_grid`].
pub fn flatness_metrics_default(p: &TrigPolynomial) -> Result<FlatnessMetrics> {
    flatness_metrics(p, default_grid(p.degree())?)
}

/// Known Barker sequences, one representative per length.
pub fn barker_catalog() -> Vec<(usize, Vec<i8>)> {
    let seqs: [&[i8]; 7] = [
        &[1, 1],
        &[1, 1, -1],
        &[1, 1, -1, 1],
        &[1, 1, 1, -1, 1],
        &[1, 1, 1, -1, -1, 1, -1],
        &[1, 1, 1, -1, -1, -1, 1, -1, -1, 1, -1],
        &[1, 1, 1, 1, 1, -1, -1, 1, 1, -1, 1, -1, 1],
    ];
    seqs.iter().map(|s| (s.len(), s.to_vec())).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BarkerCheck {
    pub barker: bool,
    pub max_correlation: i64,
    /// `c_k = sum_j e_j e_{j+k}` for `k = 1..n-1`.
    pub correlations: Vec<i64>,
}

pub fn verify_barker(seq: &[i8]) -> Result<BarkerCheck> {
    if let Some(i) = seq.iter().position(|&e| e != 1 && e != -1) {
        return Err(Error::InvalidParameter(format!(
            "entry {i} = {} is not +-1",
            seq[i]
        )));
    }
    let n = seq.len();
    let correlations: Vec<i64> = (1..n)
        .map(|k| (0..n - k).map(|j| (seq[j] * seq[j + k]) as i64).sum())
        .collect();
    let max_correlation = correlations.iter().map(|c| c.abs()).max().unwrap_or(0);
    Ok(BarkerCheck {
        barker: max_correlation <= 1,
        max_correlation,
        correlations,
    })
}

/// `(sum_j e_j z^j) / sqrt(n)`.
pub fn sign_polynomial(seq: &[i8]) -> TrigPolynomial {
    let s = 1.0 / (seq.len() as f64).sqrt();
    TrigPolynomial::new(
        seq.iter()
            .enumerate()
            .map(|(j, &e)| (j as u64, Complex64::new(e as f64 * s, 0.0))),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "law")]
pub enum SpacerLaw {
    /// Uniform integers in `[0, upper)`; `upper = 0` means the height.
    Uniform { upper: u64 },
    Constant { value: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GaussianOptions {
    pub m: usize,
    pub trials: usize,
    pub seed: u64,
    /// Tower height; `None` means `m`.
    pub height: Option<u64>,
    pub spacers: SpacerLaw,
    pub grid: Option<usize>,
}

impl GaussianOptions {
    pub fn new(m: usize, trials: usize, seed: u64) -> Self {
        Self {
            m,
            trials,
            seed,
            height: None,
            spacers: SpacerLaw::Uniform { upper: 0 },
            grid: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GaussianExperiment {
    pub values: Vec<f64>,
    pub mean: f64,
    pub stddev: f64,
    pub target: f64,
    pub deviation: f64,
    pub grid: usize,
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// Exponents `j h + a_1 + ... + a_j`, `j = 0..m-1`.
fn random_stage(m: usize, h: u64, law: SpacerLaw, rng: &mut ChaCha8Rng) -> Vec<u64> {
    let mut exps = Vec::with_capacity(m);
    let mut acc = 0u64;
    exps.push(0);
    for _ in 1..m {
        let a = match law {
            SpacerLaw::Uniform { upper } => {
                let upper = if upper == 0 { h } else { upper };
                rng.random_range(0..upper)
            }
            SpacerLaw::Constant { value } => value,
        };
        acc += h + a;
        exps.push(acc);
    }
    exps
}

/// Empirical `||P||_1` of random stage polynomials
/// `(1/sqrt m) sum_j z^{j h + a_1 + ... + a_j}`.
///
/// Trial `t` draws from its own ChaCha stream, so results do not depend
/// on scheduling.
pub fn gaussian_l1_experiment(opts: &GaussianOptions) -> Result<GaussianExperiment> {
    if opts.m < 2 {
        return Err(Error::InvalidParameter(format!("m = {} < 2", opts.m)));
    }
    if opts.trials == 0 {
        return Err(Error::InvalidParameter("no trials".into()));
    }
    let h = opts.height.unwrap_or(opts.m as u64);
    if h == 0 {
        return Err(Error::InvalidParameter("height must be positive".into()));
    }
    let max_spacer = match opts.spacers {
        SpacerLaw::Uniform { upper } => if upper == 0 { h } else { upper }.saturating_sub(1),
        SpacerLaw::Constant { value } => value,
    };
    let max_degree = (opts.m as u64 - 1)
        .checked_mul(h.checked_add(max_spacer).ok_or_else(|| Error::Overflow("spacer".into()))?)
        .ok_or_else(|| Error::Overflow("stage degree".into()))?;
    let grid = match opts.grid {
        Some(n) => {
            let floor = norm_grid_floor(max_degree);
            if (n as u64) < floor {
                return Err(Error::GridTooCoarse {
                    grid: n,
                    floor: floor as usize,
                    rule: "N >= 2*deg + 1",
                });
            }
            n
        }
        None => default_grid(max_degree)?,
    };
    let c = Complex64::new(1.0 / (opts.m as f64).sqrt(), 0.0);
    let values: Vec<f64> = (0..opts.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(opts.seed, t);
            let exps = random_stage(opts.m, h, opts.spacers, &mut rng);
            let p = TrigPolynomial::new(exps.into_iter().map(|e| (e, c)));
            p.l1_norm(grid)
        })
        .collect::<Result<_>>()?;
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0)
    } else {
        0.0
    };
    Ok(GaussianExperiment {
        mean,
        stddev: var.sqrt(),
        target: GAUSSIAN_L1,
        deviation: mean - GAUSSIAN_L1,
        values,
        grid,
    })
}

/// Root of `x^m - 2x + 1` in `(1/2, 1)` for `m > 2`; `1` for `m = 2`.
pub fn b_m(m: usize) -> Result<f64> {
    if m < 2 {
        return Err(Error::InvalidParameter(format!("m = {m} < 2")));
    }
    if m == 2 {
        return Ok(1.0);
    }
    let f = |x: f64| x.powi(m as i32) - 2.0 * x + 1.0;
    let (mut lo, mut hi) = (0.5, 1.0 - 0.5 / m as f64);
    while f(hi) >= 0.0 {
        hi = 0.5 * (hi + 1.0);
    }
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Clone, Debug, Serialize)]
pub struct AnnulusCheck {
    pub roots: Vec<Root>,
    pub inner: f64,
    pub outer: f64,
    /// Indices of roots outside `[inner - tol, outer + tol]`.
    pub violations: Vec<usize>,
    pub refined_inner: f64,
    pub refined_outer: f64,
    pub refined_violations: Vec<usize>,
    /// Absent for the `{0,1}` check.
    pub b_m: Option<f64>,
}

fn outside(roots: &[Root], lo: f64, hi: f64) -> Vec<usize> {
    roots
        .iter()
        .enumerate()
        .filter(|(_, r)| {
            let a = r.modulus();
            a < lo - ZERO_BOUND_TOL || a > hi + ZERO_BOUND_TOL
        })
        .map(|(i, _)| i)
        .collect()
}

/// `1 + z^{h + a_1} + ... + z^{(m-1) h + a_1 + ... + a_{m-1}}` from
/// spacers `a_1..a_{m-1}`.
pub fn r_form(h: u64, spacers: &[u64]) -> TrigPolynomial {
    let one = Complex64::new(1.0, 0.0);
    let mut acc = 0u64;
    let mut terms = vec![(0, one)];
    for &a in spacers {
        acc += h + a;
        terms.push((acc, one));
    }
    TrigPolynomial::new(terms)
}

/// Checks `(1/2)^{1/h} <= |w| <= 2^{1/h}` and the `b_m` refinement for
/// a polynomial of the (R) shape.
pub fn zero_annulus_check(p: &TrigPolynomial, h: u64) -> Result<AnnulusCheck> {
    let terms = p.terms();
    let one = Complex64::new(1.0, 0.0);
    if h == 0
        || terms.len() < 2
        || terms[0].0 != 0
        || terms.iter().any(|t| t.1 != one)
        || terms.windows(2).any(|w| w[1].0 - w[0].0 < h)
    {
        return Err(Error::InvalidParameter(format!(
            "not of the (R) shape with height {h}"
        )));
    }
    let m = terms.len();
    let roots = find_roots(p, DEFAULT_ROOT_TOL)?;
    let hf = h as f64;
    let (inner, outer) = (0.5f64.powf(1.0 / hf), 2f64.powf(1.0 / hf));
    let b = b_m(m)?;
    let (refined_inner, refined_outer) = (b.powf(1.0 / hf), (1.0 / b).powf(1.0 / hf));
    Ok(AnnulusCheck {
        violations: outside(&roots, inner, outer),
        refined_violations: outside(&roots, refined_inner, refined_outer),
        inner,
        outer,
        refined_inner,
        refined_outer,
        b_m: Some(b),
        roots,
    })
}

/// Roots of a `{0,1}` polynomial outside the open annulus `(1/phi, phi)`.
pub fn zero_one_annulus_check(p: &TrigPolynomial) -> Result<AnnulusCheck> {
    let one = Complex64::new(1.0, 0.0);
    let terms = p.terms();
    if terms.len() < 2 || terms[0].0 != 0 || terms.iter().any(|t| t.1 != one) {
        return Err(Error::InvalidParameter(
            "coefficients must be 0 or 1 with constant and leading term 1".into(),
        ));
    }
    let roots = find_roots(p, DEFAULT_ROOT_TOL)?;
    let violations: Vec<usize> = roots
        .iter()
        .enumerate()
        .filter(|(_, r)| {
            let a = r.modulus();
            a <= 1.0 / PHI - ZERO_BOUND_TOL || a >= PHI + ZERO_BOUND_TOL
        })
        .map(|(i, _)| i)
        .collect();
    Ok(AnnulusCheck {
        roots,
        inner: 1.0 / PHI,
        outer: PHI,
        refined_violations: violations.clone(),
        violations,
        refined_inner: 1.0 / PHI,
        refined_outer: PHI,
        b_m: None,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClusterCount {
    pub n: u64,
    pub delta: f64,
    pub count: u64,
    pub threshold: f64,
    pub pass: bool,
    pub margin: f64,
    pub note: &'static str,
}

/// `33 pi log(n) / sqrt(n)`.
pub fn cluster_delta(n: u64) -> f64 {
    33.0 * PI * (n as f64).ln() / (n as f64).sqrt()
}

/// Counts roots within `delta_n` of `e^{i angle}` against `8 sqrt(n) log n`.
/// A shortfall points at the root finder, not at the theorem.
pub fn cluster_count_check(p: &TrigPolynomial, angle: f64) -> Result<ClusterCount> {
    let n = p.degree();
    let delta = cluster_delta(n);
    if n < 2 || delta >= 1.0 {
        return Err(Error::DegreeTooSmall { n, delta });
    }
    if p.constant_term().norm() != 1.0
        || p.leading_coefficient().norm() != 1.0
        || p.terms().iter().any(|t| t.1.norm() > 1.0)
    {
        return Err(Error::InvalidParameter(
            "need |a_0| = |a_n| = 1 and |a_k| <= 1".into(),
        ));
    }
    let zeta = Complex64::from_polar(1.0, angle);
    let count = find_roots(p, DEFAULT_ROOT_TOL)?
        .iter()
        .filter(|r| (r.location - zeta).norm() <= delta)
        .map(|r| r.multiplicity as u64)
        .sum();
    let threshold = 8.0 * (n as f64).sqrt() * (n as f64).ln();
    Ok(ClusterCount {
        n,
        delta,
        count,
        threshold,
        pass: count as f64 >= threshold,
        margin: count as f64 - threshold,
        note: "informational: a shortfall indicates a root-finder limitation",
    })
}
