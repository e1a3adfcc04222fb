//! Affinity sequences, Radon-Nikodym approximants and singularity
//! certificates between finite-stage Riesz products.
//!
//! The reference measure `nu` is always replaced by its stage-`n` density
//! (`stage_surrogate`), and no verdict is ever issued: every criterion
//! here is asymptotic, so the outputs are sequences and bounds.

use num_complex::Complex64;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fft;
use crate::polynomial::{default_grid, norm_grid_floor, GridValues, MAX_GRID_DEGREE};
use crate::products::RieszSpec;

/// Below this modulus the phase `S_n / |S_n|` is left undefined.
pub const PHASE_FLOOR: f64 = 1e-12;

/// Successive grid doublings stop once stage values agree to this.
pub const QUADRATURE_TOL: f64 = 1e-8;

/// Grid sizes are never doubled past this.
pub const MAX_REFINED_GRID: usize = 1 << 24;

fn check_nmax(spec: &RieszSpec, nmax: usize) -> Result<()> {
    if nmax == 0 || nmax > spec.stage_count() {
        return Err(Error::StageOutOfRange {
            stage: nmax,
            stages: spec.stage_count(),
        });
    }
    Ok(())
}

fn check_grid(degree: u64, n_grid: usize, rule: &'static str) -> Result<()> {
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
            rule,
        });
    }
    Ok(())
}

/// Moduli `|P_j|` on the grid for `j = 1..=nmax`, fed one at a time.
fn for_each_factor_modulus(
    spec: &RieszSpec,
    nmax: usize,
    n_grid: usize,
    mut f: impl FnMut(usize, &[f64]),
) {
    for (j, p) in spec.factors()[..nmax].iter().enumerate() {
        let m: Vec<f64> = fft::sample_terms(p.terms(), n_grid)
            .iter()
            .map(|v| v.norm())
            .collect();
        f(j + 1, &m);
    }
}

/// Stage means of running products of `|P_j|` (and `|Q_j|`).
fn running_means(mu: &RieszSpec, nu: Option<&RieszSpec>, nmax: usize, n_grid: usize) -> Vec<f64> {
    let mut acc = vec![1.0f64; n_grid];
    let mut out = Vec::with_capacity(nmax);
    for j in 0..nmax {
        for spec in std::iter::once(mu).chain(nu) {
            let p = &spec.factors()[j];
            for (a, v) in acc.iter_mut().zip(fft::sample_terms(p.terms(), n_grid)) {
                *a *= v.norm();
            }
        }
        out.push(acc.iter().sum::<f64>() / n_grid as f64);
    }
    out
}

/// `int prod_{j<=n} |P_j| |Q_j| dz` for `n = 1..=nmax` on the given grid.
pub fn affinity_sequence(
    mu: &RieszSpec,
    nu: &RieszSpec,
    nmax: usize,
    n_grid: usize,
) -> Result<Vec<f64>> {
    check_nmax(mu, nmax)?;
    check_nmax(nu, nmax)?;
    let deg = mu.partial_degree(nmax)? + nu.partial_degree(nmax)?;
    check_grid(deg, n_grid, "N >= 2*(deg S_n + deg T_n) + 1")?;
    Ok(running_means(mu, Some(nu), nmax, n_grid))
}

/// `||S_n||_1` for `n = 1..=nmax` on the given grid.
pub fn bourgain_l1_sequence(mu: &RieszSpec, nmax: usize, n_grid: usize) -> Result<Vec<f64>> {
    check_nmax(mu, nmax)?;
    check_grid(mu.partial_degree(nmax)?, n_grid, "N >= 2*deg S_n + 1")?;
    Ok(running_means(mu, None, nmax, n_grid))
}

/// Stage values with the grid they settled on and the last change
/// observed between successive doublings.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Refined {
    pub values: Vec<f64>,
    pub grid: usize,
    pub quadrature_error: f64,
}

/// Evaluates at `n0` and `2 n0`, doubling further while stage values
/// move by more than [`QUADRATURE_TOL`].
fn refine(n0: usize, f: impl Fn(usize) -> Vec<f64>) -> Refined {
    let mut n = n0;
    let mut prev = f(n);
    loop {
        let n2 = n * 2;
        if n2 > MAX_REFINED_GRID {
            return Refined {
                values: prev,
                grid: n,
                quadrature_error: f64::NAN,
            };
        }
        let next = f(n2);
        let diff = prev
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if diff <= QUADRATURE_TOL || n2 * 2 > MAX_REFINED_GRID {
            return Refined {
                values: next,
                grid: n2,
                quadrature_error: diff,
            };
        }
        n = n2;
        prev = next;
    }
}

/// [`affinity_sequence`] starting at `n_grid` (default
/// `4 * total degree + 4`) with grid doubling.
pub fn affinity_sequence_refined(
    mu: &RieszSpec,
    nu: &RieszSpec,
    nmax: usize,
    n_grid: Option<usize>,
) -> Result<Refined> {
    check_nmax(mu, nmax)?;
    check_nmax(nu, nmax)?;
    let deg = mu.partial_degree(nmax)? + nu.partial_degree(nmax)?;
    let n0 = match n_grid {
        Some(n) => n,
        None => default_grid(deg)?,
    };
    check_grid(deg, n0, "N >= 2*(deg S_n + deg T_n) + 1")?;
    Ok(refine(n0, |n| running_means(mu, Some(nu), nmax, n)))
}

pub fn bourgain_l1_refined(mu: &RieszSpec, nmax: usize, n_grid: Option<usize>) -> Result<Refined> {
    check_nmax(mu, nmax)?;
    let deg = mu.partial_degree(nmax)?;
    let n0 = match n_grid {
        Some(n) => n,
        None => default_grid(deg)?,
    };
    check_grid(deg, n0, "N >= 2*deg S_n + 1")?;
    Ok(refine(n0, |n| running_means(mu, None, nmax, n)))
}

/// True when the last `window` values are all below `threshold` and
/// never increase.
pub fn singularity_hint(values: &[f64], threshold: f64, window: usize) -> bool {
    if window == 0 || values.len() < window {
        return false;
    }
    let tail = &values[values.len() - window..];
    tail.iter().all(|&v| v < threshold) && tail.windows(2).all(|w| w[1] <= w[0])
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GuenaisReport {
    /// `||P_k||_1`.
    pub factor_l1: Vec<f64>,
    /// `v_k = sqrt(1 - ||P_k||_1^2)`.
    pub v: Vec<f64>,
    /// `sum_{k<=n} v_k`.
    pub partial_sums: Vec<f64>,
    /// `||S_n||_1`.
    pub product_l1: Vec<f64>,
    /// `prod_{k<=n} ||P_k||_1`.
    pub product_of_norms: Vec<f64>,
    /// `sum v - | ||S_n||_1 - prod ||P_k||_1 |`, nonnegative by the
    /// telescoping inequality.
    pub slack: Vec<f64>,
    /// `prod ||P_k||_1 - sum v_k`, a lower bound for `||S_n||_1`.
    pub lower_bound: Vec<f64>,
    pub grid: usize,
}

pub fn guenais_test(mu: &RieszSpec, nmax: usize, n_grid: usize) -> Result<GuenaisReport> {
    check_nmax(mu, nmax)?;
    check_grid(mu.partial_degree(nmax)?, n_grid, "N >= 2*deg S_n + 1")?;
    let mut factor_l1 = Vec::with_capacity(nmax);
    let mut acc = vec![1.0f64; n_grid];
    let mut product_l1 = Vec::with_capacity(nmax);
    for_each_factor_modulus(mu, nmax, n_grid, |_, m| {
        factor_l1.push(m.iter().sum::<f64>() / n_grid as f64);
        for (a, v) in acc.iter_mut().zip(m) {
            *a *= v;
        }
        product_l1.push(acc.iter().sum::<f64>() / n_grid as f64);
    });
    let v: Vec<f64> = factor_l1
        .iter()
        .map(|&l| (1.0 - l * l).max(0.0).sqrt())
        .collect();
    let mut partial_sums = Vec::with_capacity(nmax);
    let mut product_of_norms = Vec::with_capacity(nmax);
    let (mut s, mut pr) = (0.0, 1.0);
    for k in 0..nmax {
        s += v[k];
        pr *= factor_l1[k];
        partial_sums.push(s);
        product_of_norms.push(pr);
    }
    let slack = (0..nmax)
        .map(|k| partial_sums[k] - (product_l1[k] - product_of_norms[k]).abs())
        .collect();
    let lower_bound = (0..nmax)
        .map(|k| product_of_norms[k] - partial_sums[k])
        .collect();
    Ok(GuenaisReport {
        factor_l1,
        v,
        partial_sums,
        product_l1,
        product_of_norms,
        slack,
        lower_bound,
        grid: n_grid,
    })
}

/// Stage-`n` approximant `|S_n|` of `sqrt(d mu / dz)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RnSqrt {
    pub stage: usize,
    pub values: GridValues<f64>,
    /// Caller's assertion that the product is of class (L); not checked.
    pub class_l_asserted: bool,
}

pub fn rn_sqrt_grid(mu: &RieszSpec, n: usize, n_grid: usize, class_l: bool) -> Result<RnSqrt> {
    check_grid(mu.partial_degree(n)?, n_grid, "N >= 2*deg S_n + 1")?;
    Ok(RnSqrt {
        stage: n,
        values: mu.partial_product_grid(n, n_grid)?.modulus(),
        class_l_asserted: class_l,
    })
}

/// `|| |S_{n+1}| - |S_n| ||_1` for `n = 1..nmax`, a Cauchy-in-L1 proxy.
pub fn rn_sqrt_increments(mu: &RieszSpec, nmax: usize, n_grid: usize) -> Result<Vec<f64>> {
    check_nmax(mu, nmax)?;
    check_grid(mu.partial_degree(nmax)?, n_grid, "N >= 2*deg S_n + 1")?;
    let mut acc = vec![1.0f64; n_grid];
    let mut out = Vec::new();
    for_each_factor_modulus(mu, nmax, n_grid, |j, m| {
        let mut diff = 0.0;
        for (a, v) in acc.iter_mut().zip(m) {
            let next = *a * v;
            diff += (next - *a).abs();
            *a = next;
        }
        if j > 1 {
            out.push(diff / n_grid as f64);
        }
    });
    Ok(out)
}

/// `S_n / |S_n|` where `|S_n| > floor`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseGrid {
    pub stage: usize,
    pub grid_size: usize,
    pub values: Vec<Option<Complex64>>,
    pub undefined: usize,
}

impl PhaseGrid {
    /// `(1/N) sum_k phi(z_k) z_k^{-j}` over defined points.
    pub fn fourier_coefficient(&self, j: i64) -> Complex64 {
        let n = self.grid_size;
        let jm = j.rem_euclid(n as i64) as usize;
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, v) in self.values.iter().enumerate() {
            if let Some(v) = v {
                acc += v * fft::grid_point((jm * k) % n, n).conj();
            }
        }
        acc / n as f64
    }
}

pub fn phase_grid(mu: &RieszSpec, n: usize, n_grid: usize, floor: f64) -> Result<PhaseGrid> {
    let s = mu.partial_product_grid(n, n_grid)?;
    let values: Vec<Option<Complex64>> = s
        .values
        .iter()
        .map(|&v| {
            let m = v.norm();
            (m > floor).then(|| v / m)
        })
        .collect();
    let undefined = values.iter().filter(|v| v.is_none()).count();
    Ok(PhaseGrid {
        stage: n,
        grid_size: n_grid,
        values,
        undefined,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SupportBound {
    /// `min ||prod_{j in J} P_j||_1` over the evaluated subsets.
    pub d_hat: f64,
    pub best: Vec<usize>,
    /// Evaluated subsets (1-based) with their L1 norms, in order.
    pub evaluated: Vec<(Vec<usize>, f64)>,
    pub grid: usize,
    pub truncated: bool,
}

/// Singletons, then pairs, then seeded random subsets, until `budget`
/// subsets have been evaluated. A larger budget evaluates a superset.
pub fn support_upper_bound(
    mu: &RieszSpec,
    budget: usize,
    n_grid: usize,
    seed: u64,
) -> Result<SupportBound> {
    if budget == 0 {
        return Err(Error::InvalidParameter("subproduct budget must be >= 1".into()));
    }
    let k = mu.stage_count();
    check_grid(mu.partial_degree(k)?, n_grid, "N >= 2*deg S_K + 1")?;
    let moduli: Vec<Vec<f64>> = mu
        .factors()
        .iter()
        .map(|p| {
            fft::sample_terms(p.terms(), n_grid)
                .iter()
                .map(|v| v.norm())
                .collect()
        })
        .collect();
    let l1 = |set: &[usize]| -> f64 {
        let total: f64 = (0..n_grid)
            .map(|i| set.iter().map(|&j| moduli[j - 1][i]).product::<f64>())
            .sum();
        total / n_grid as f64
    };

    let mut subsets: Vec<Vec<usize>> = (1..=k.min(budget)).map(|i| vec![i]).collect();
    'pairs: for i in 1..=k {
        for j in i + 1..=k {
            if subsets.len() >= budget {
                break 'pairs;
            }
            subsets.push(vec![i, j]);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut attempts = 0;
    while subsets.len() < budget && k >= 3 && attempts < 64 * budget {
        attempts += 1;
        let size = rng.random_range(3..=k);
        let mut set: Vec<usize> = sample(&mut rng, k, size).into_iter().map(|i| i + 1).collect();
        set.sort_unstable();
        if !subsets.contains(&set) {
            subsets.push(set);
        }
    }

    let evaluated: Vec<(Vec<usize>, f64)> = subsets
        .into_iter()
        .map(|s| {
            let v = l1(&s);
            (s, v)
        })
        .collect();
    let (best, d_hat) = evaluated
        .iter()
        .fold((Vec::new(), f64::INFINITY), |(bs, bv), (s, v)| {
            if *v < bv {
                (s.clone(), *v)
            } else {
                (bs, bv)
            }
        });
    Ok(SupportBound {
        d_hat,
        best,
        evaluated,
        grid: n_grid,
        truncated: true,
    })
}

/// Per stage `j`: `(||P_j||_1, int g |P_j| / int g)` on the grid of `g`.
pub fn theorem615_statistics(
    mu: &RieszSpec,
    g: &GridValues<f64>,
    nmax: usize,
) -> Result<Vec<(f64, f64)>> {
    check_nmax(mu, nmax)?;
    if let Some(bad) = g.values.iter().position(|&v| !(v.is_finite() && v >= 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "test function is negative or not finite at grid point {bad}"
        )));
    }
    let n = g.grid_size;
    let mass: f64 = g.values.iter().sum();
    if mass <= 0.0 {
        return Err(Error::InvalidParameter("test function vanishes on the grid".into()));
    }
    let maxdeg = mu.factors()[..nmax].iter().map(|p| p.degree()).max().unwrap_or(0);
    check_grid(maxdeg, n, "N >= 2*deg P_j + 1")?;
    let mut out = Vec::with_capacity(nmax);
    for_each_factor_modulus(mu, nmax, n, |_, m| {
        let l1 = m.iter().sum::<f64>() / n as f64;
        let weighted = m.iter().zip(&g.values).map(|(a, b)| a * b).sum::<f64>() / mass;
        out.push((l1, weighted));
    });
    Ok(out)
}

/// Per-stage certificate table for a pair of products.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DichotomyReport {
    pub stages: Vec<usize>,
    pub affinity: Vec<f64>,
    pub bourgain_l1: Vec<f64>,
    pub guenais_partial: Vec<f64>,
    pub support_bound: f64,
    pub verdict_hints: Vec<String>,
    pub grid: usize,
    pub quadrature_error: f64,
    pub stage_surrogate: bool,
    pub truncated: bool,
}

pub struct ReportOptions {
    pub grid: Option<usize>,
    pub budget: usize,
    pub seed: u64,
    pub hint_threshold: f64,
    pub hint_window: usize,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            grid: None,
            budget: 50,
            seed: 0,
            hint_threshold: 0.1,
            hint_window: 3,
        }
    }
}

pub fn dichotomy_report(
    mu: &RieszSpec,
    nu: &RieszSpec,
    nmax: usize,
    opts: &ReportOptions,
) -> Result<DichotomyReport> {
    let aff = affinity_sequence_refined(mu, nu, nmax, opts.grid)?;
    let grid = aff.grid;
    let bourgain = bourgain_l1_sequence(mu, nmax, grid)?;
    let guenais = guenais_test(mu, nmax, grid)?;
    let sub = mu.subproduct(&(1..=nmax).collect::<Vec<_>>())?;
    let support = support_upper_bound(&sub, opts.budget, grid, opts.seed)?;
    let mut hints = Vec::new();
    if singularity_hint(&aff.values, opts.hint_threshold, opts.hint_window) {
        hints.push(format!(
            "affinity below {} without rebound over the last {} stages (mutual-singularity criterion trend)",
            opts.hint_threshold, opts.hint_window
        ));
    }
    if singularity_hint(&bourgain, opts.hint_threshold, opts.hint_window) {
        hints.push(format!(
            "||S_n||_1 below {} without rebound over the last {} stages (singularity criterion trend)",
            opts.hint_threshold, opts.hint_window
        ));
    }
    if let Some(&lb) = guenais.lower_bound.last() {
        if lb > 0.0 {
            hints.push(format!("||S_n||_1 >= {lb:.6} at every evaluated stage bound"));
        }
    }
    Ok(DichotomyReport {
        stages: (1..=nmax).collect(),
        affinity: aff.values,
        bourgain_l1: bourgain,
        guenais_partial: guenais.partial_sums,
        support_bound: support.d_hat,
        verdict_hints: hints,
        grid,
        quadrature_error: aff.quadrature_error,
        stage_surrogate: true,
        truncated: true,
    })
}
