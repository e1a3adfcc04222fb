//! Finite-stage generalized Riesz products `prod_{j<=K} |P_j|^2`.
//!
//! Every quantity that depends on the infinite tail (the tail constant
//! term `c_0`, the limits `b` and `beta`) is computed from the truncation
//! at `K` and carries a `truncated` flag.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factorization::{root_invariants, CIRCLE_EPS};
use crate::fft;
use crate::polynomial::{
    default_grid, norm_grid_floor, GridValues, TrigPolynomial, MAX_GRID_DEGREE,
    NORMALIZATION_TOLERANCE,
};
use crate::roots::DEFAULT_ROOT_TOL;

/// Ordered list of L2-normalized factors with positive constant terms.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RieszSpec {
    factors: Vec<TrigPolynomial>,
    label: String,
}

impl RieszSpec {
    /// Validates normalization and positivity of every constant term.
    pub fn new(factors: Vec<TrigPolynomial>, label: impl Into<String>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidParameter("a spec needs at least one factor".into()));
        }
        for (i, p) in factors.iter().enumerate() {
            if !p.is_normalized() {
                return Err(Error::InvalidParameter(format!(
                    "factor {} has sum |c|^2 = {:.15} (want 1 within {NORMALIZATION_TOLERANCE:e})",
                    i + 1,
                    p.l2_norm_sq()
                )));
            }
            if !p.has_positive_constant_term() {
                return Err(Error::InvalidParameter(format!(
                    "factor {} needs a positive real constant term, got {}",
                    i + 1,
                    p.constant_term()
                )));
            }
        }
        Ok(Self {
            factors,
            label: label.into(),
        })
    }

    /// Normalizes (and rotates) each factor before validating.
    pub fn normalized(factors: Vec<TrigPolynomial>, label: impl Into<String>) -> Result<Self> {
        let factors = factors
            .iter()
            .map(|p| p.normalize_l2())
            .collect::<Result<Vec<_>>>()?;
        Self::new(factors, label)
    }

    /// `K` copies of the constant 1.
    pub fn ones(k: usize) -> Self {
        Self {
            factors: vec![TrigPolynomial::one(); k.max(1)],
            label: "ones".into(),
        }
    }

    pub fn factors(&self) -> &[TrigPolynomial] {
        &self.factors
    }

    pub fn factor(&self, j: usize) -> Result<&TrigPolynomial> {
        self.check_stage(j)?;
        Ok(&self.factors[j - 1])
    }

    pub fn stage_count(&self) -> usize {
        self.factors.len()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn check_stage(&self, n: usize) -> Result<()> {
        if n == 0 || n > self.factors.len() {
            return Err(Error::StageOutOfRange {
                stage: n,
                stages: self.factors.len(),
            });
        }
        Ok(())
    }

    /// `deg S_n`, overflow-checked.
    pub fn partial_degree(&self, n: usize) -> Result<u64> {
        self.check_stage(n)?;
        self.factors[..n].iter().try_fold(0u64, |acc, p| {
            acc.checked_add(p.degree())
                .ok_or_else(|| Error::Overflow(format!("degree of S_{n} exceeds u64")))
        })
    }

    /// `S_n = P_1 ... P_n`.
    pub fn partial_product(&self, n: usize) -> Result<TrigPolynomial> {
        self.check_stage(n)?;
        self.factors[..n]
            .iter()
            .try_fold(TrigPolynomial::one(), |acc, p| acc.multiply(p))
    }

    /// Samples of `S_n` on the `n_grid`-point grid, as a product of factor
    /// samples (never expands `S_n`).
    pub fn partial_product_grid(&self, n: usize, n_grid: usize) -> Result<GridValues<Complex64>> {
        self.check_stage(n)?;
        let mut acc = vec![Complex64::new(1.0, 0.0); n_grid];
        for p in &self.factors[..n] {
            for (a, v) in acc.iter_mut().zip(fft::sample_terms(p.terms(), n_grid)) {
                *a *= v;
            }
        }
        Ok(GridValues::new(acc))
    }

    /// `|S_n|^2` on the grid; requires `N >= 2 deg S_n + 1`.
    pub fn density_grid(&self, n: usize, n_grid: usize) -> Result<GridValues<f64>> {
        let deg = self.partial_degree(n)?;
        check_density_grid(deg, n_grid)?;
        Ok(self.partial_product_grid(n, n_grid)?.map(|v| v.norm_sqr()))
    }

    /// `b_j^{(n)}` for `j = 0..=kmax`, exact from the truncated expansion.
    pub fn fourier_coefficients(&self, n: usize, kmax: u64) -> Result<Vec<Complex64>> {
        self.check_stage(n)?;
        let mut acc: Vec<(u64, Complex64)> = vec![(0, Complex64::new(1.0, 0.0))];
        for p in &self.factors[..n] {
            let mut next = std::collections::BTreeMap::<u64, Complex64>::new();
            for &(ea, ca) in &acc {
                for &(eb, cb) in p.terms() {
                    if let Some(e) = ea.checked_add(eb).filter(|&e| e <= kmax) {
                        *next.entry(e).or_default() += ca * cb;
                    }
                }
            }
            acc = next.into_iter().collect();
        }
        let mut out = vec![Complex64::new(0.0, 0.0); kmax as usize + 1];
        for (e, c) in acc {
            out[e as usize] = c;
        }
        Ok(out)
    }

    /// A single coefficient `b_j^{(n)}`; negative `j` is rejected since
    /// `S_n` is analytic.
    pub fn fourier_coefficient(&self, n: usize, j: i64) -> Result<Complex64> {
        if j < 0 {
            return Err(Error::InvalidIndex(format!(
                "coefficient index {j} < 0: partial products are analytic"
            )));
        }
        Ok(self.fourier_coefficients(n, j as u64)?[j as usize])
    }

    /// Selected factors, 1-based strictly increasing indices.
    pub fn subproduct(&self, indices: &[usize]) -> Result<Self> {
        check_indices(indices, self.factors.len())?;
        Ok(Self {
            factors: indices.iter().map(|&i| self.factors[i - 1].clone()).collect(),
            label: format!("{}[sub]", self.label),
        })
    }

    /// Every factor replaced by `P_j(z^q)`.
    pub fn contract(&self, q: u64) -> Result<Self> {
        Ok(Self {
            factors: self
                .factors
                .iter()
                .map(|p| p.contract(q))
                .collect::<Result<_>>()?,
            label: format!("{}[q={q}]", self.label),
        })
    }
}

fn check_density_grid(degree: u64, n_grid: usize) -> Result<()> {
    if degree > MAX_GRID_DEGREE {
        return Err(Error::GridTooLarge {
            degree,
            limit: MAX_GRID_DEGREE,
        });
    }
    let floor = norm_grid_floor(degree);
    if (n_grid as u64) < floor {
        return Err(Error::GridTooCoarse {
            grid: n_grid,
            floor: floor as usize,
            rule: "N >= 2*deg(S_n) + 1",
        });
    }
    Ok(())
}

pub(crate) fn check_indices(indices: &[usize], k: usize) -> Result<()> {
    if indices.is_empty() {
        return Err(Error::InvalidIndex("empty index list".into()));
    }
    for w in indices.windows(2) {
        if w[1] == w[0] {
            return Err(Error::InvalidIndex(format!("duplicate index {}", w[0])));
        }
        if w[1] < w[0] {
            return Err(Error::InvalidIndex(format!(
                "indices must increase ({} after {})",
                w[1], w[0]
            )));
        }
    }
    if let Some(&bad) = indices.iter().find(|&&i| i == 0 || i > k) {
        return Err(Error::InvalidIndex(format!("index {bad} outside 1..={k}")));
    }
    Ok(())
}

/// Per-factor quantities from the factorization.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FactorSummary {
    pub degree: u64,
    /// Constant term `a_0`.
    pub a0: f64,
    /// Outer constant term.
    pub alpha: f64,
    pub mahler: f64,
}

/// Factorizes every factor, in parallel, in input order.
pub fn factor_summaries(spec: &RieszSpec) -> Result<Vec<FactorSummary>> {
    spec.factors()
        .par_iter()
        .map(|p| {
            let (alpha, mahler) = root_invariants(p, DEFAULT_ROOT_TOL, CIRCLE_EPS)?;
            Ok(FactorSummary {
                degree: p.degree(),
                a0: p.constant_term().re,
                alpha,
                mahler,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StageDiagnostics {
    pub stage: usize,
    /// Constant term of `S_n`.
    pub b0: f64,
    /// Product of outer constant terms up to `n`.
    pub beta: f64,
    /// `prod_{n<j<=K} a_0^{(j)}`.
    pub tail_c0: f64,
    /// `deg S_n`.
    pub degree: u64,
    /// `deg S_n * (1 - tail_c0)`.
    pub margin: f64,
    /// `prod_{j<=n} alpha_j^2`.
    pub mahler_product: f64,
    /// `||S_n||_1` on the default grid; absent above the grid limit.
    pub l1_of_sn: Option<f64>,
    pub grid: Option<usize>,
    pub truncated: bool,
}

/// Diagnostics for stages `1..=K`.
pub fn all_stage_diagnostics(spec: &RieszSpec) -> Result<Vec<StageDiagnostics>> {
    let sums = factor_summaries(spec)?;
    let k = spec.stage_count();
    let mut suffix = vec![1.0; k + 1];
    for j in (0..k).rev() {
        suffix[j] = suffix[j + 1] * sums[j].a0;
    }
    let mut out = Vec::with_capacity(k);
    let (mut b0, mut beta, mut mp, mut deg) = (1.0, 1.0, 1.0, 0u64);
    for n in 1..=k {
        let s = &sums[n - 1];
        b0 *= s.a0;
        beta *= s.alpha;
        mp *= s.alpha * s.alpha;
        deg = deg
            .checked_add(s.degree)
            .ok_or_else(|| Error::Overflow(format!("degree of S_{n} exceeds u64")))?;
        let tail_c0 = suffix[n];
        out.push(StageDiagnostics {
            stage: n,
            b0,
            beta,
            tail_c0,
            degree: deg,
            margin: deg as f64 * (1.0 - tail_c0),
            mahler_product: mp,
            l1_of_sn: None,
            grid: None,
            truncated: true,
        });
    }
    out.par_iter_mut().try_for_each(|d| -> Result<()> {
        if d.degree <= MAX_GRID_DEGREE {
            let n_grid = default_grid(d.degree)?;
            let g = spec.partial_product_grid(d.stage, n_grid)?;
            d.l1_of_sn = Some(g.modulus().mean());
            d.grid = Some(n_grid);
        }
        Ok(())
    })?;
    Ok(out)
}

pub fn stage_diagnostics(spec: &RieszSpec, n: usize) -> Result<StageDiagnostics> {
    spec.check_stage(n)?;
    Ok(all_stage_diagnostics(spec)?.swap_remove(n - 1))
}

/// `prod_{j<=n} alpha_j^2`.
pub fn mahler_of_product(spec: &RieszSpec, n: usize) -> Result<f64> {
    spec.check_stage(n)?;
    let sub = spec.subproduct(&(1..=n).collect::<Vec<_>>())?;
    Ok(factor_summaries(&sub)?
        .iter()
        .map(|s| s.alpha * s.alpha)
        .product())
}

/// `prod_{j<=n} alpha_j^2` for every `n`.
pub fn mahler_of_products(spec: &RieszSpec) -> Result<Vec<f64>> {
    let mut acc = 1.0;
    Ok(factor_summaries(spec)?
        .iter()
        .map(|s| {
            acc *= s.alpha * s.alpha;
            acc
        })
        .collect())
}

/// Greedy subproduct whose stage margins decay like `2^-i`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Schedule {
    /// Selected 1-based indices, starting at 1.
    pub indices: Vec<usize>,
    /// `margins[i-1] = m_i (1 - c_0)` achieved at step `i`.
    pub margins: Vec<f64>,
    /// Step at which the truncation ran out of candidates, if any.
    pub exhausted_at: Option<usize>,
    pub truncated: bool,
}

/// Starting from `k_1 = 1`, picks the least `k_{i+1} > k_i` with
/// `m_i (1 - prod_{j >= k_{i+1}} a_0^{(j)}) <= 2^-i`, where `m_i` is the
/// degree of the product of the factors selected so far.
pub fn select_corollary25_indices(spec: &RieszSpec) -> Result<Schedule> {
    let k = spec.stage_count();
    let a0: Vec<f64> = spec.factors().iter().map(|p| p.constant_term().re).collect();
    let b_est: f64 = a0.iter().product();
    if b_est <= 0.0 || !b_est.is_finite() {
        return Err(Error::ScheduleInfeasible(
            "truncated constant-term product b is zero".into(),
        ));
    }
    // tail[j] = prod_{i >= j} a0 (1-based j)
    let mut tail = vec![1.0; k + 2];
    for j in (1..=k).rev() {
        tail[j] = tail[j + 1] * a0[j - 1];
    }
    let mut indices = vec![1usize];
    let mut margins = Vec::new();
    let mut m = spec.factors()[0].degree() as f64;
    let mut exhausted_at = None;
    let mut step = 1;
    loop {
        let last = *indices.last().unwrap();
        let bound = 0.5f64.powi(step as i32);
        let next = (last + 1..=k).find(|&j| m * (1.0 - tail[j]) <= bound);
        match next {
            Some(j) => {
                margins.push(m * (1.0 - tail[j]));
                indices.push(j);
                m += spec.factors()[j - 1].degree() as f64;
                step += 1;
            }
            None => {
                if last < k {
                    exhausted_at = Some(step);
                }
                break;
            }
        }
    }
    if indices.len() == 1 && k > 1 {
        return Err(Error::ScheduleInfeasible(format!(
            "step 1: no index in 2..={k} with m_1 (1 - c_0) <= 1/2 (m_1 = {m})"
        )));
    }
    Ok(Schedule {
        indices,
        margins,
        exhausted_at,
        truncated: true,
    })
}

/// Moduli of the Fourier coefficients `k = 1..=kmax` of the tail density
/// `|prod_{m<j<=K} P_j|^2`, with the bound `sqrt(1 - d_0^2)`.
pub fn tail_density_coefficients(
    spec: &RieszSpec,
    m: usize,
    kmax: usize,
    n_grid: usize,
) -> Result<(Vec<f64>, f64)> {
    let k = spec.stage_count();
    if m >= k {
        return Err(Error::StageOutOfRange { stage: m, stages: k });
    }
    let tail = spec.subproduct(&(m + 1..=k).collect::<Vec<_>>())?;
    let dens = tail.density_grid(tail.stage_count(), n_grid)?;
    let d0: f64 = tail.factors().iter().map(|p| p.constant_term().re).product();
    let vals: Vec<Complex64> = dens.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let coeffs = fft::grid_coefficients(&vals);
    let moduli = (1..=kmax.min(n_grid - 1)).map(|j| coeffs[j].norm()).collect();
    Ok((moduli, (1.0 - d0 * d0).max(0.0).sqrt()))
}

/// Caller's statement about convergence of `sum cos^2 sin^2`; the tool
/// never decides series convergence numerically.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailTest {
    Convergent,
    Divergent,
    PartialSumOnly,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    AbsolutelyContinuous,
    Singular,
    Undecided,
}

#[derive(Clone, Debug, Serialize)]
pub struct ClassicalRiesz {
    pub spec: RieszSpec,
    /// Criterion evaluation from the caller's tail test, not a theorem
    /// about the truncation.
    pub verdict: Verdict,
    /// `sum cos^2(theta_k) sin^2(theta_k)` over the supplied stages.
    pub cos2sin2_partial_sum: f64,
    /// `sum sin^2(2 theta_k)` (the l2 test on `a_k = sin 2 theta_k`).
    pub l2_partial_sum: f64,
    /// Stages `k` with `n_{k+1} / n_k < 3`.
    pub lacunarity_warnings: Vec<usize>,
    pub truncated: bool,
}

/// Factors `cos(theta_k) + sin(theta_k) z^{n_k}`.
pub fn classical_riesz(thetas: &[f64], exponents: &[u64], test: TailTest) -> Result<ClassicalRiesz> {
    if thetas.len() != exponents.len() || thetas.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "{} angles for {} exponents",
            thetas.len(),
            exponents.len()
        )));
    }
    let half_pi = std::f64::consts::FRAC_PI_2;
    let mut factors = Vec::with_capacity(thetas.len());
    for (k, (&t, &n)) in thetas.iter().zip(exponents).enumerate() {
        if !(t > 0.0 && t < half_pi) {
            return Err(Error::InvalidParameter(format!(
                "theta_{} = {t} outside (0, pi/2)",
                k + 1
            )));
        }
        if n == 0 {
            return Err(Error::InvalidParameter(format!("n_{} must be positive", k + 1)));
        }
        factors.push(TrigPolynomial::new([
            (0, Complex64::new(t.cos(), 0.0)),
            (n, Complex64::new(t.sin(), 0.0)),
        ]));
    }
    let lacunarity_warnings = exponents
        .windows(2)
        .enumerate()
        .filter(|(_, w)| (w[1] as f64) < 3.0 * w[0] as f64)
        .map(|(k, _)| k + 1)
        .collect();
    let cos2sin2_partial_sum = thetas.iter().map(|t| (t.cos() * t.sin()).powi(2)).sum();
    let l2_partial_sum = thetas.iter().map(|t| (2.0 * t).sin().powi(2)).sum();
    let verdict = match test {
        TailTest::Convergent => Verdict::AbsolutelyContinuous,
        TailTest::Divergent => Verdict::Singular,
        TailTest::PartialSumOnly => Verdict::Undecided,
    };
    Ok(ClassicalRiesz {
        spec: RieszSpec::new(factors, "classical_riesz")?,
        verdict,
        cos2sin2_partial_sum,
        l2_partial_sum,
        lacunarity_warnings,
        truncated: true,
    })
}

/// Factors `(1 + z^{h_k + a_k}) / sqrt 2`.
pub fn ledrappier_spec(heights: &[u64], spacers: &[u64]) -> Result<RieszSpec> {
    if heights.len() != spacers.len() || heights.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "{} heights for {} spacers",
            heights.len(),
            spacers.len()
        )));
    }
    let c = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let factors = heights
        .iter()
        .zip(spacers)
        .enumerate()
        .map(|(k, (&h, &a))| {
            let e = h
                .checked_add(a)
                .ok_or_else(|| Error::Overflow(format!("h_{0} + a_{0}", k + 1)))?;
            if e == 0 {
                return Err(Error::InvalidParameter(format!(
                    "h_{0} + a_{0} must be positive",
                    k + 1
                )));
            }
            Ok(TrigPolynomial::new([(0, c), (e, c)]))
        })
        .collect::<Result<Vec<_>>>()?;
    RieszSpec::new(factors, "ledrappier")
}
