//! All-roots solver for sparse analytic polynomials.
//!
//! Pipeline:
//! 1. factor out the exponent gcd `g`, so `p(z) = base(z^g)` and the
//!    roots of `p` are the `g`-th roots of the roots of `base`;
//! 2. solve `base` by Gauss-Seidel Aberth-Ehrlich iteration seeded on the
//!    Newton polygon (closed forms for degree one and two);
//! 3. fall back to companion-matrix eigenvalues when the iteration leaves
//!    a residual above tolerance;
//! 4. merge clusters into multiplicities when their spread is what a
//!    multiple root perturbed at working precision would produce.
//!
//! The only contract is on residuals: the backward residual
//! `|p(r)| / sum_j |c_j| |r|^{e_j}` or the relative Newton step,
//! whichever is smaller.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::polynomial::TrigPolynomial;

pub const DEFAULT_ROOT_TOL: f64 = 1e-10;

/// Largest gcd-reduced degree handed to the simultaneous iteration.
pub const MAX_ROOT_DEGREE: u64 = 1 << 15;

/// Dense companion matrices are refused above this degree.
pub const COMPANION_MAX_DEGREE: usize = 10_000;

const MAX_ITERATIONS: usize = 500;
const EPS: f64 = f64::EPSILON;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Root {
    pub location: Complex64,
    pub multiplicity: u32,
}

impl Root {
    pub fn modulus(&self) -> f64 {
        self.location.norm()
    }
}

/// Roots together with solver bookkeeping.
#[derive(Clone, Debug)]
pub struct RootReport {
    pub roots: Vec<Root>,
    /// Largest backward residual over the returned roots.
    pub max_residual: f64,
    /// Exponent gcd factored out before solving.
    pub reduction: u64,
    pub iterations: usize,
    pub used_companion: bool,
}

/// All roots of `p` with multiplicities; see the module docs.
pub fn find_roots(p: &TrigPolynomial, tol: f64) -> Result<Vec<Root>> {
    find_roots_report(p, tol).map(|r| r.roots)
}

pub fn find_roots_report(p: &TrigPolynomial, tol: f64) -> Result<RootReport> {
    if p.degree() == 0 {
        return Err(Error::InvalidParameter(
            "root finding needs degree >= 1".into(),
        ));
    }
    if p.constant_term().norm() == 0.0 {
        return Err(Error::ZeroConstantTerm);
    }
    let (base, g) = p.decontract();
    if base.degree() > MAX_ROOT_DEGREE {
        return Err(Error::DegreeTooLarge {
            degree: base.degree(),
            limit: MAX_ROOT_DEGREE,
        });
    }

    let solved = solve_base(&base, tol)?;
    let merged = merge_clusters(&base, &solved.roots, tol);

    let mut roots = Vec::with_capacity(p.degree() as usize);
    if g == 1 {
        roots = merged;
    } else {
        for r in merged {
            let radius = r.location.norm().powf(1.0 / g as f64);
            let arg = r.location.arg();
            for k in 0..g {
                let theta = (arg + std::f64::consts::TAU * k as f64) / g as f64;
                roots.push(Root {
                    location: Complex64::from_polar(radius, theta),
                    multiplicity: r.multiplicity,
                });
            }
        }
    }
    roots.sort_by(|a, b| {
        angle_key(a.location)
            .total_cmp(&angle_key(b.location))
            .then(a.modulus().total_cmp(&b.modulus()))
    });

    let ev = Evaluator::new(p);
    let max_residual = roots
        .iter()
        .map(|r| residual_with(&ev, r.location))
        .fold(0.0, f64::max);
    if max_residual > tol {
        return Err(Error::NoConvergence {
            iterations: solved.iterations,
            best_residual: max_residual,
        });
    }
    Ok(RootReport {
        roots,
        max_residual,
        reduction: g,
        iterations: solved.iterations,
        used_companion: solved.used_companion,
    })
}

fn angle_key(z: Complex64) -> f64 {
    let a = z.arg();
    if a < 0.0 {
        a + std::f64::consts::TAU
    } else {
        a
    }
}

/// `|p(z)| / sum_j |c_j| |z|^{e_j}`, scaled to avoid overflow.
pub fn backward_residual(p: &TrigPolynomial, z: Complex64) -> f64 {
    let ev = Evaluator::new(p);
    ev.ratio_and_residual(z).1
}

/// The smaller of the backward residual and the relative Newton step
/// `|p / p'| / max(1, |z|)`. At high degree the backward residual of a
/// correctly rounded root is about `deg * eps`; the Newton step is not.
pub fn root_residual(p: &TrigPolynomial, z: Complex64) -> f64 {
    residual_with(&Evaluator::new(p), z)
}

fn residual_with(ev: &Evaluator, z: Complex64) -> f64 {
    let (ratio, backward) = ev.ratio_and_residual(z);
    let step = ratio.norm() / z.norm().max(1.0);
    if step.is_finite() {
        backward.min(step)
    } else {
        backward
    }
}

struct Solved {
    roots: Vec<Complex64>,
    iterations: usize,
    used_companion: bool,
}

fn solve_base(base: &TrigPolynomial, tol: f64) -> Result<Solved> {
    let d = base.degree();
    let c0 = base.constant_term();
    let cd = base.leading_coefficient();
    if d == 1 {
        return Ok(Solved {
            roots: vec![-c0 / cd],
            iterations: 0,
            used_companion: false,
        });
    }
    if d == 2 {
        let c1 = base.coefficient(1);
        return Ok(Solved {
            roots: quadratic(cd, c1, c0).to_vec(),
            iterations: 0,
            used_companion: false,
        });
    }

    let ev = Evaluator::new(base);
    let (mut roots, iterations) = aberth(&ev, newton_polygon_seeds(base));
    let worst = roots
        .iter()
        .map(|&z| ev.ratio_and_residual(z).1)
        .fold(0.0, f64::max);
    if worst <= tol {
        return Ok(Solved {
            roots,
            iterations,
            used_companion: false,
        });
    }
    if (d as usize) <= COMPANION_MAX_DEGREE {
        let mut eig = companion_eigenvalues(base).unwrap_or_default();
        if eig.len() == d as usize {
            polish(&ev, &mut eig);
            let eig_worst = eig
                .iter()
                .map(|&z| ev.ratio_and_residual(z).1)
                .fold(0.0, f64::max);
            if eig_worst < worst {
                roots = eig;
                return Ok(Solved {
                    roots,
                    iterations,
                    used_companion: true,
                });
            }
        }
    }
    Err(Error::NoConvergence {
        iterations,
        best_residual: worst,
    })
}

/// Roots of `a z^2 + b z + c` avoiding cancellation.
fn quadratic(a: Complex64, b: Complex64, c: Complex64) -> [Complex64; 2] {
    let disc = (b * b - a * c * 4.0).sqrt();
    let s = if (b.conj() * disc).re >= 0.0 {
        b + disc
    } else {
        b - disc
    };
    if s.norm() == 0.0 {
        let r = (-c / a).sqrt();
        return [r, -r];
    }
    let q = s * -0.5;
    [q / a, c / q]
}

/// Evaluates `p / p'` and the backward residual with the dense Horner
/// scheme or the sparse term sum, reflecting through `1/z` when `|z| > 1`.
enum Evaluator {
    Dense(Vec<Complex64>),
    Sparse(Vec<(u64, Complex64)>, u64),
}

impl Evaluator {
    fn new(p: &TrigPolynomial) -> Self {
        let d = p.degree();
        if (p.term_count() as u64) * 8 >= d {
            Evaluator::Dense(p.dense_coefficients())
        } else {
            Evaluator::Sparse(p.terms().to_vec(), d)
        }
    }

    fn ratio_and_residual(&self, z: Complex64) -> (Complex64, f64) {
        match self {
            Evaluator::Dense(a) => dense_ratio(a, z),
            Evaluator::Sparse(t, d) => sparse_ratio(t, *d, z),
        }
    }
}

fn dense_ratio(a: &[Complex64], z: Complex64) -> (Complex64, f64) {
    let d = a.len() - 1;
    let zero = Complex64::new(0.0, 0.0);
    if z.norm() <= 1.0 {
        let (mut p, mut dp, mut s) = (zero, zero, 0.0);
        let r = z.norm();
        for &c in a.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
            s = s * r + c.norm();
        }
        (p / dp, p.norm() / s)
    } else {
        let w = z.inv();
        let r = w.norm();
        let (mut q, mut dq, mut s) = (zero, zero, 0.0);
        for &c in a.iter() {
            dq = dq * w + q;
            q = q * w + c;
            s = s * r + c.norm();
        }
        let denom = q * d as f64 - w * dq;
        (z * q / denom, q.norm() / s)
    }
}

fn sparse_ratio(t: &[(u64, Complex64)], d: u64, z: Complex64) -> (Complex64, f64) {
    use crate::polynomial::pow_u64;
    let zero = Complex64::new(0.0, 0.0);
    let (mut v, mut dv, mut s) = (zero, zero, 0.0);
    if z.norm() <= 1.0 {
        let r = z.norm();
        for &(e, c) in t {
            let ze = pow_u64(z, e);
            v += c * ze;
            s += c.norm() * r.powf(e as f64);
            if e > 0 {
                dv += c * e as f64 * pow_u64(z, e - 1);
            }
        }
    } else {
        let w = z.inv();
        let r = w.norm();
        for &(e, c) in t {
            let k = d - e;
            v += c * pow_u64(w, k);
            s += c.norm() * r.powf(k as f64);
            dv += c * e as f64 * pow_u64(w, k + 1);
        }
    }
    (v / dv, v.norm() / s)
}

/// Starting points on circles read off the upper convex hull of
/// `(e_j, log |c_j|)`.
fn newton_polygon_seeds(p: &TrigPolynomial) -> Vec<Complex64> {
    let pts: Vec<(f64, f64)> = p
        .terms()
        .iter()
        .map(|&(e, c)| (e as f64, c.norm().ln()))
        .collect();
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for &pt in &pts {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (b.0 - a.0) * (pt.1 - a.1) - (b.1 - a.1) * (pt.0 - a.0);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(pt);
    }
    let d = p.degree() as f64;
    let mut seeds = Vec::with_capacity(p.degree() as usize);
    for (seg, w) in hull.windows(2).enumerate() {
        let width = (w[1].0 - w[0].0).round() as usize;
        let radius = ((w[0].1 - w[1].1) / (w[1].0 - w[0].0)).exp();
        let offset = std::f64::consts::TAU * seg as f64 / d + 0.7;
        for l in 0..width {
            let theta = std::f64::consts::TAU * l as f64 / width as f64 + offset;
            seeds.push(Complex64::from_polar(radius, theta));
        }
    }
    seeds
}

fn aberth(ev: &Evaluator, mut z: Vec<Complex64>) -> (Vec<Complex64>, usize) {
    let n = z.len();
    let mut done = vec![false; n];
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS && done.iter().any(|d| !d) {
        iterations += 1;
        for i in 0..n {
            if done[i] {
                continue;
            }
            let (ratio, residual) = ev.ratio_and_residual(z[i]);
            if residual <= 4.0 * EPS || !ratio.is_finite() {
                done[i] = residual <= 4.0 * EPS;
                continue;
            }
            let zi = z[i];
            let mut s = Complex64::new(0.0, 0.0);
            for (j, &zj) in z.iter().enumerate() {
                if j != i {
                    s += (zi - zj).inv();
                }
            }
            let w = ratio / (Complex64::new(1.0, 0.0) - ratio * s);
            if !w.is_finite() {
                continue;
            }
            z[i] = zi - w;
            if w.norm() <= 4.0 * EPS * z[i].norm().max(EPS) {
                done[i] = true;
            }
        }
    }
    (z, iterations)
}

fn polish(ev: &Evaluator, z: &mut [Complex64]) {
    for zi in z.iter_mut() {
        for _ in 0..8 {
            let (ratio, res) = ev.ratio_and_residual(*zi);
            if !ratio.is_finite() {
                break;
            }
            let cand = *zi - ratio;
            if ev.ratio_and_residual(cand).1 < res {
                *zi = cand;
            } else {
                break;
            }
        }
    }
}

fn companion_eigenvalues(p: &TrigPolynomial) -> Option<Vec<Complex64>> {
    let a = p.dense_coefficients();
    let d = a.len() - 1;
    let lead = a[d];
    let mut m = DMatrix::<Complex64>::zeros(d, d);
    for i in 1..d {
        m[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    for i in 0..d {
        m[(i, d - 1)] = -a[i] / lead;
    }
    let schur = nalgebra::linalg::Schur::try_new(m, EPS, 10_000)?;
    schur.eigenvalues().map(|v| v.iter().copied().collect())
}

/// Groups near-coincident roots and keeps a group as one multiple root
/// when its spread is consistent with a working-precision perturbation of
/// a root of that multiplicity, or lies within `10 * tol`.
fn merge_clusters(p: &TrigPolynomial, roots: &[Complex64], tol: f64) -> Vec<Root> {
    let n = roots.len();
    let link = |z: Complex64| 1e-3 * z.norm().max(1.0);
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| roots[a].re.total_cmp(&roots[b].re));
    let max_link = roots.iter().map(|&z| link(z)).fold(0.0, f64::max);
    for (oi, &i) in order.iter().enumerate() {
        for &j in &order[oi + 1..] {
            if roots[j].re - roots[i].re > max_link {
                break;
            }
            if (roots[i] - roots[j]).norm() <= link(roots[i]).min(link(roots[j])) {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri] = rj;
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }

    let mut out = Vec::with_capacity(n);
    for members in groups.into_values() {
        if members.len() == 1 {
            out.push(Root {
                location: roots[members[0]],
                multiplicity: 1,
            });
            continue;
        }
        let m = members.len();
        let centroid =
            members.iter().map(|&i| roots[i]).sum::<Complex64>() / m as f64;
        let spread = members
            .iter()
            .map(|&i| (roots[i] - centroid).norm())
            .fold(0.0, f64::max);
        let predicted = predicted_split_radius(p, centroid, m);
        let accept = spread <= 10.0 * tol * centroid.norm().max(1.0)
            || predicted.is_some_and(|r| spread <= 10.0 * r);
        if accept {
            out.push(Root {
                location: polish_multiple(p, centroid, m),
                multiplicity: m as u32,
            });
        } else {
            out.extend(members.iter().map(|&i| Root {
                location: roots[i],
                multiplicity: 1,
            }));
        }
    }
    out
}

/// `k`-th Taylor coefficient `p^{(k)}(c) / k!`.
fn taylor_coefficient(p: &TrigPolynomial, c: Complex64, k: usize) -> Complex64 {
    use crate::polynomial::pow_u64;
    let mut acc = Complex64::new(0.0, 0.0);
    for &(e, a) in p.terms() {
        if (e as usize) < k {
            continue;
        }
        let mut binom = 1.0;
        for i in 0..k {
            binom *= (e as f64 - i as f64) / (i as f64 + 1.0);
        }
        acc += a * binom * pow_u64(c, e - k as u64);
    }
    acc
}

/// Spread `(eta * S(c) / |T_m(c)|)^{1/m}` of an `m`-fold root under a
/// relative coefficient perturbation `eta` of a few hundred ulps.
fn predicted_split_radius(p: &TrigPolynomial, c: Complex64, m: usize) -> Option<f64> {
    let r = c.norm();
    let scale: f64 = p
        .terms()
        .iter()
        .map(|&(e, a)| a.norm() * r.powf(e as f64))
        .sum();
    let tm = taylor_coefficient(p, c, m).norm();
    let eta = 512.0 * EPS;
    let pred = (eta * scale / tm).powf(1.0 / m as f64);
    pred.is_finite().then_some(pred)
}

/// Newton on `p^{(m-1)}`, for which an `m`-fold root of `p` is simple.
fn polish_multiple(p: &TrigPolynomial, mut c: Complex64, m: usize) -> Complex64 {
    let f = |z: Complex64| taylor_coefficient(p, z, m - 1);
    for _ in 0..4 {
        let num = f(c);
        let den = taylor_coefficient(p, c, m) * m as f64;
        let step = num / den;
        if !step.is_finite() {
            break;
        }
        let cand = c - step;
        if f(cand).norm() < num.norm() {
            c = cand;
        } else {
            break;
        }
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn linear() {
        let r = find_roots(&TrigPolynomial::from_real(&[1.0, 1.0]), DEFAULT_ROOT_TOL).unwrap();
        assert_eq!(r.len(), 1);
        assert!((r[0].location - c(-1.0, 0.0)).norm() < 1e-15);
        assert_eq!(r[0].multiplicity, 1);
    }

    #[test]
    fn double_root() {
        let r = find_roots(&TrigPolynomial::from_real(&[1.0, 2.0, 1.0]), DEFAULT_ROOT_TOL)
            .unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].multiplicity, 2);
        assert!((r[0].location - c(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn cubic_factors() {
        let p = TrigPolynomial::from_real(&[1.0, 1.0, 1.0, 1.0]);
        let r = find_roots(&p, DEFAULT_ROOT_TOL).unwrap();
        assert_eq!(r.len(), 3);
        for want in [c(-1.0, 0.0), c(0.0, 1.0), c(0.0, -1.0)] {
            assert!(r.iter().any(|x| (x.location - want).norm() < 1e-12), "{want}");
        }
    }

    #[test]
    fn triple_root_merges() {
        // (z - 0.5)^3 (z + 2)
        let base = TrigPolynomial::from_real(&[-0.125, 0.75, -1.5, 1.0])
            .multiply(&TrigPolynomial::from_real(&[2.0, 1.0]))
            .unwrap();
        let r = find_roots(&base, DEFAULT_ROOT_TOL).unwrap();
        let triple = r.iter().find(|x| x.multiplicity == 3).expect("triple root");
        assert!((triple.location - c(0.5, 0.0)).norm() < 1e-10);
        assert_eq!(r.iter().map(|x| x.multiplicity).sum::<u32>(), 4);
    }

    #[test]
    fn contracted_polynomial_uses_gcd() {
        let p = TrigPolynomial::from_real(&[1.0, 1.0]).contract(6).unwrap();
        let rep = find_roots_report(&p, DEFAULT_ROOT_TOL).unwrap();
        assert_eq!(rep.reduction, 6);
        assert_eq!(rep.roots.len(), 6);
        for r in &rep.roots {
            assert!((r.modulus() - 1.0).abs() < 1e-14);
            assert!((r.location.powu(6) + 1.0).norm() < 1e-13);
        }
    }

    #[test]
    fn sparse_high_degree() {
        // 1 + z^37 + z^81 : sparse evaluator path
        let p = TrigPolynomial::new([(0, c(1.0, 0.0)), (37, c(1.0, 0.0)), (81, c(1.0, 0.0))]);
        let r = find_roots(&p, DEFAULT_ROOT_TOL).unwrap();
        assert_eq!(r.iter().map(|x| x.multiplicity as u64).sum::<u64>(), 81);
    }

    #[test]
    fn rejects_zero_constant_and_constants() {
        assert_eq!(
            find_roots(&TrigPolynomial::monomial(2, c(1.0, 0.0)), 1e-10).unwrap_err(),
            Error::ZeroConstantTerm
        );
        assert!(find_roots(&TrigPolynomial::one(), 1e-10).is_err());
    }

    #[test]
    fn wide_dynamic_range() {
        // roots at 1e-3 and 1e3
        let p = TrigPolynomial::from_real(&[1.0, -1000.001, 1.0]);
        let r = find_roots(&p, DEFAULT_ROOT_TOL).unwrap();
        let mut m: Vec<f64> = r.iter().map(|x| x.modulus()).collect();
        m.sort_by(f64::total_cmp);
        assert!((m[0] - 1e-3).abs() < 1e-15);
        assert!((m[1] - 1e3).abs() < 1e-9);
    }

    #[test]
    fn companion_agrees_on_small_cubic() {
        let p = TrigPolynomial::from_real(&[6.0, -11.0, 6.0, -1.0]);
        let mut e = companion_eigenvalues(&p).unwrap();
        e.sort_by(|a, b| a.re.total_cmp(&b.re));
        for (got, want) in e.iter().zip([1.0, 2.0, 3.0]) {
            assert!((got - c(want, 0.0)).norm() < 1e-10);
        }
    }
}
