//! Beurling inner/outer splitting of a polynomial and its Mahler measure.
//!
//! With roots split into `A` (inside the disc), `B` (on the circle, up to
//! a dead-band) and `C` (outside),
//!
//! ```text
//! outer = g * a_m * prod_A (1 - conj(a) z) * prod_B (z - b) * prod_C (z - c)
//! inner = conj(g) * prod_A (z - a) / (1 - conj(a) z)
//! ```
//!
//! where `g` is unimodular and makes the constant term of `outer` positive.

use num_complex::Complex64;
use serde::ser::{Serialize, SerializeStruct, Serializer};

use crate::error::{Error, Result};
use crate::fft;
use crate::polynomial::TrigPolynomial;
use crate::roots::{find_roots, Root, DEFAULT_ROOT_TOL};

/// Dead-band around the unit circle assigned to `B`.
pub const CIRCLE_EPS: f64 = 1e-9;

/// Grid points where `|p| <= JENSEN_ROOT_GUARD * sum |c_j|` are treated as
/// sitting on a root.
pub const JENSEN_ROOT_GUARD: f64 = 1e-12;

/// Largest degree for which the outer factor is expanded when `A` is
/// nonempty.
pub const OUTER_MAX_DEGREE: u64 = 1 << 16;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RootClasses {
    pub inside: Vec<usize>,
    pub on_circle: Vec<usize>,
    pub outside: Vec<usize>,
}

/// Partition by modulus; the band `||r| - 1| <= eps` goes to `on_circle`.
pub fn classify_roots(roots: &[Root], eps: f64) -> RootClasses {
    let mut c = RootClasses::default();
    for (i, r) in roots.iter().enumerate() {
        let m = r.modulus();
        if m < 1.0 - eps {
            c.inside.push(i);
        } else if m > 1.0 + eps {
            c.outside.push(i);
        } else {
            c.on_circle.push(i);
        }
    }
    c
}

/// Finite Blaschke product `u * prod (z - a) / (1 - conj(a) z)`.
#[derive(Clone, Debug, PartialEq)]
pub struct InnerFactor {
    /// Zeros repeated by multiplicity.
    pub zeros: Vec<Complex64>,
    pub unimodular: Complex64,
}

impl InnerFactor {
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let one = Complex64::new(1.0, 0.0);
        self.zeros
            .iter()
            .fold(self.unimodular, |acc, &a| acc * (z - a) / (one - a.conj() * z))
    }

    pub fn is_trivial(&self) -> bool {
        self.zeros.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct FactorizationResult {
    pub roots: Vec<Root>,
    pub classes: RootClasses,
    /// `||r| - 1|` per root, kept for auditing dead-band assignments.
    pub circle_distance: Vec<f64>,
    pub inner: InnerFactor,
    pub outer: TrigPolynomial,
    /// Constant term of `outer` (positive real).
    pub alpha: f64,
    /// `|a_m| prod_C |c|`.
    pub mahler: f64,
}

impl Serialize for FactorizationResult {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let roots: Vec<(f64, f64, u32)> = self
            .roots
            .iter()
            .map(|r| (r.location.re, r.location.im, r.multiplicity))
            .collect();
        let mut st = s.serialize_struct("FactorizationResult", 7)?;
        st.serialize_field("roots", &roots)?;
        st.serialize_field("A", &self.classes.inside)?;
        st.serialize_field("B", &self.classes.on_circle)?;
        st.serialize_field("C", &self.classes.outside)?;
        st.serialize_field("circle_distance", &self.circle_distance)?;
        st.serialize_field("alpha", &self.alpha)?;
        st.serialize_field("mahler", &self.mahler)?;
        st.end()
    }
}

/// Roots, classes and the two root-product invariants without building
/// the outer polynomial.
#[derive(Clone, Debug)]
pub struct RootSummary {
    pub roots: Vec<Root>,
    pub classes: RootClasses,
    pub alpha: f64,
    pub mahler: f64,
}

pub fn root_summary(p: &TrigPolynomial, tol: f64, eps: f64) -> Result<RootSummary> {
    if p.is_zero() {
        return Err(Error::EmptyPolynomial);
    }
    if p.constant_term().norm() == 0.0 {
        return Err(Error::ZeroConstantTerm);
    }
    if p.degree() == 0 {
        let c = p.constant_term().norm();
        return Ok(RootSummary {
            roots: vec![],
            classes: RootClasses::default(),
            alpha: c,
            mahler: c,
        });
    }
    let roots = find_roots(p, tol)?;
    let classes = classify_roots(&roots, eps);
    let log_sum = |idx: &[usize]| -> f64 {
        idx.iter()
            .map(|&i| roots[i].multiplicity as f64 * roots[i].modulus().ln())
            .sum()
    };
    let lead = p.leading_coefficient().norm().ln();
    let log_c = log_sum(&classes.outside);
    let log_b = log_sum(&classes.on_circle);
    Ok(RootSummary {
        alpha: (lead + log_b + log_c).exp(),
        mahler: (lead + log_c).exp(),
        roots,
        classes,
    })
}

/// `(alpha, mahler)` from the roots of `base` where `p(z) = base(z^g)`,
/// without expanding the `g`-th roots. Classes are taken on the base
/// roots: `g` roots of modulus `|r|^{1/g}` would all fall into the
/// dead-band for large `g` and shift `alpha` by `|r|`.
pub fn root_invariants(p: &TrigPolynomial, tol: f64, eps: f64) -> Result<(f64, f64)> {
    if p.is_zero() {
        return Err(Error::EmptyPolynomial);
    }
    if p.constant_term().norm() == 0.0 {
        return Err(Error::ZeroConstantTerm);
    }
    if p.degree() == 0 {
        let c = p.constant_term().norm();
        return Ok((c, c));
    }
    let (base, _) = p.decontract();
    let roots = find_roots(&base, tol)?;
    let lead = p.leading_coefficient().norm().ln();
    let (mut log_b, mut log_c) = (0.0, 0.0);
    for r in &roots {
        let log_r = r.modulus().ln();
        let term = r.multiplicity as f64 * log_r;
        if (r.modulus() - 1.0).abs() <= eps {
            log_b += term;
        } else if r.modulus() > 1.0 {
            log_c += term;
        }
    }
    Ok(((lead + log_b + log_c).exp(), (lead + log_c).exp()))
}

/// Mahler measure `|a_m| prod_C |c|`.
pub fn mahler_measure(p: &TrigPolynomial) -> Result<f64> {
    root_invariants(p, DEFAULT_ROOT_TOL, CIRCLE_EPS).map(|s| s.1)
}

/// Outer constant term `|a_m| prod_B |b| prod_C |c|`.
pub fn outer_constant(p: &TrigPolynomial) -> Result<f64> {
    root_invariants(p, DEFAULT_ROOT_TOL, CIRCLE_EPS).map(|s| s.0)
}

pub fn inner_outer(p: &TrigPolynomial) -> Result<FactorizationResult> {
    inner_outer_with(p, DEFAULT_ROOT_TOL, CIRCLE_EPS)
}

pub fn inner_outer_with(p: &TrigPolynomial, tol: f64, eps: f64) -> Result<FactorizationResult> {
    let summary = root_summary(p, tol, eps)?;
    let zeros: Vec<Complex64> = summary
        .classes
        .inside
        .iter()
        .flat_map(|&i| {
            let r = summary.roots[i];
            std::iter::repeat_n(r.location, r.multiplicity as usize)
        })
        .collect();
    if !zeros.is_empty() && p.degree() > OUTER_MAX_DEGREE {
        return Err(Error::DegreeTooLarge {
            degree: p.degree(),
            limit: OUTER_MAX_DEGREE,
        });
    }

    let raw = if zeros.is_empty() {
        p.clone()
    } else {
        let mut coeffs = p.dense_coefficients();
        for &a in &zeros {
            coeffs = swap_root_inside_out(&coeffs, a);
        }
        TrigPolynomial::from_dense(&coeffs)
    };
    let c0 = raw.constant_term();
    let gamma = c0.conj() / c0.norm();
    let outer = TrigPolynomial::new(raw.terms().iter().map(|&(e, c)| {
        if e == 0 {
            (e, Complex64::new(c0.norm(), 0.0))
        } else {
            (e, c * gamma)
        }
    }));
    let circle_distance = summary
        .roots
        .iter()
        .map(|r| (r.modulus() - 1.0).abs())
        .collect();
    Ok(FactorizationResult {
        circle_distance,
        inner: InnerFactor {
            zeros,
            unimodular: gamma.conj(),
        },
        outer,
        alpha: summary.alpha,
        mahler: summary.mahler,
        roots: summary.roots,
        classes: summary.classes,
    })
}

/// `coeffs * (1 - conj(a) z) / (z - a)`, deflating from the top.
fn swap_root_inside_out(coeffs: &[Complex64], a: Complex64) -> Vec<Complex64> {
    let d = coeffs.len() - 1;
    let mut q = vec![Complex64::new(0.0, 0.0); d];
    q[d - 1] = coeffs[d];
    for k in (1..d).rev() {
        q[k - 1] = coeffs[k] + a * q[k];
    }
    let ac = a.conj();
    let mut out = vec![Complex64::new(0.0, 0.0); d + 1];
    for k in 0..=d {
        let hi = if k < d { q[k] } else { Complex64::new(0.0, 0.0) };
        let lo = if k > 0 { q[k - 1] } else { Complex64::new(0.0, 0.0) };
        out[k] = hi - ac * lo;
    }
    out
}

/// `exp` of the grid mean of `log |p|`, independent of any root finding.
///
/// At a node where `|p|` vanishes to working precision the integrand is
/// `m log|2 sin(t/2)| + log|T_m|` plus a smooth remainder, with `T_m` the
/// first non-vanishing Taylor coefficient. The periodic trapezoid rule is
/// restored to spectral accuracy by giving that node the value
/// `log|T_m| + m log(h / 2 pi)`.
pub fn mahler_measure_jensen(p: &TrigPolynomial, n: usize) -> Result<f64> {
    if p.is_zero() {
        return Err(Error::EmptyPolynomial);
    }
    let floor = 4 * p.degree() as usize + 4;
    if n < floor {
        return Err(Error::GridTooCoarse {
            grid: n,
            floor,
            rule: "N >= 4*deg + 4",
        });
    }
    if p.degree() == 0 {
        return Ok(p.constant_term().norm());
    }
    let scale: f64 = p.terms().iter().map(|t| t.1.norm()).sum();
    let guard = JENSEN_ROOT_GUARD * scale;
    let values = fft::sample_terms(p.terms(), n);
    let h = std::f64::consts::TAU / n as f64;
    let mut excluded = 0usize;
    let mut total = 0.0;
    for (k, v) in values.iter().enumerate() {
        let m = v.norm();
        if m > guard {
            total += m.ln();
            continue;
        }
        excluded += 1;
        total += singular_panel(p, fft::grid_point(k, n), h, guard);
    }
    if excluded * 100 > n {
        return Err(Error::DegenerateGrid { excluded, grid: n });
    }
    Ok((total / n as f64).exp())
}

/// Corrected node value at a zero `z` of `p` on a grid of spacing `h`.
fn singular_panel(p: &TrigPolynomial, z: Complex64, h: f64, guard: f64) -> f64 {
    use crate::polynomial::pow_u64;
    let mut order = 1usize;
    loop {
        let mut t = Complex64::new(0.0, 0.0);
        for &(e, a) in p.terms() {
            if (e as usize) < order {
                continue;
            }
            let mut binom = 1.0;
            for i in 0..order {
                binom *= (e as f64 - i as f64) / (i as f64 + 1.0);
            }
            t += a * binom * pow_u64(z, e - order as u64);
        }
        let tm = t.norm();
        if tm > guard || order as u64 >= p.degree() {
            return tm.ln() + order as f64 * (h / std::f64::consts::TAU).ln();
        }
        order += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn invariants_skip_root_expansion() {
        let g = 3u64.pow(20);
        let p = TrigPolynomial::new([(0, c(0.6, 0.0)), (g, c(0.8, 0.0))]);
        let (alpha, mahler) = root_invariants(&p, DEFAULT_ROOT_TOL, CIRCLE_EPS).unwrap();
        assert!((alpha - 0.8).abs() < 1e-15 && (mahler - 0.8).abs() < 1e-15);
        let q = TrigPolynomial::new([(0, c(0.8, 0.0)), (g, c(0.6, 0.0))]);
        assert!((mahler_measure(&q).unwrap() - 0.8).abs() < 1e-15);

        let small = TrigPolynomial::new([(0, c(0.6, 0.0)), (7, c(0.8, 0.0))]);
        let s = root_summary(&small, DEFAULT_ROOT_TOL, CIRCLE_EPS).unwrap();
        let (a, m) = root_invariants(&small, DEFAULT_ROOT_TOL, CIRCLE_EPS).unwrap();
        assert!((s.alpha - a).abs() < 1e-14 && (s.mahler - m).abs() < 1e-14);
    }

    #[test]
    fn classify_examples() {
        let r = find_roots(&TrigPolynomial::from_real(&[1.0, 1.0]), 1e-10).unwrap();
        let k = classify_roots(&r, CIRCLE_EPS);
        assert_eq!((k.inside.len(), k.on_circle.len(), k.outside.len()), (0, 1, 0));

        let r = find_roots(&TrigPolynomial::from_real(&[2.0, 1.0]), 1e-10).unwrap();
        let k = classify_roots(&r, CIRCLE_EPS);
        assert_eq!(k.outside, vec![0]);
        assert!((r[0].location - c(-2.0, 0.0)).norm() < 1e-14);

        let r = find_roots(&TrigPolynomial::from_real(&[1.0, 2.0]), 1e-10).unwrap();
        let k = classify_roots(&r, CIRCLE_EPS);
        assert_eq!(k.inside, vec![0]);
        assert!((r[0].location - c(-0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn one_plus_z_normalized() {
        let p = TrigPolynomial::from_real(&[1.0, 1.0]).normalize_l2().unwrap();
        let f = inner_outer(&p).unwrap();
        assert!(f.inner.is_trivial());
        assert_eq!(f.outer, p);
        assert!((f.alpha - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((f.mahler - FRAC_1_SQRT_2).abs() < 1e-15);
        let j = mahler_measure_jensen(&p, 8192).unwrap();
        assert!((j - FRAC_1_SQRT_2).abs() < 1e-12, "{j}");
    }

    #[test]
    fn two_term_alpha_is_max_of_cos_and_sin() {
        for &(theta, n) in &[(0.3, 1u64), (1.1, 4), (PI / 4.0, 9), (0.7, 27)] {
            let p = TrigPolynomial::new([(0, c(theta.cos(), 0.0)), (n, c(theta.sin(), 0.0))]);
            let want = theta.cos().max(theta.sin());
            assert!((outer_constant(&p).unwrap() - want).abs() < 1e-12);
            if n <= 9 {
                let f = inner_outer(&p).unwrap();
                assert!((f.outer.constant_term().re - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn constant_factor() {
        let f = inner_outer(&TrigPolynomial::one()).unwrap();
        assert!(f.inner.is_trivial());
        assert_eq!(f.outer, TrigPolynomial::one());
        assert_eq!((f.alpha, f.mahler), (1.0, 1.0));
    }

    #[test]
    fn mahler_examples() {
        assert!((mahler_measure(&TrigPolynomial::from_real(&[1.0, 1.0])).unwrap() - 1.0).abs() < 1e-15);
        let p = TrigPolynomial::from_real(&[2.0, 1.0]);
        assert!((mahler_measure(&p).unwrap() - 2.0).abs() < 1e-14);
        assert!((mahler_measure_jensen(&p, 4096).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn factors_reconstruct_on_the_circle() {
        // roots 0.5, -3, 1i, 0.2+0.9i
        let mut p = TrigPolynomial::one();
        for r in [c(0.5, 0.0), c(-3.0, 0.0), c(0.0, 1.0), c(0.2, 0.9)] {
            p = p.multiply(&TrigPolynomial::from_dense(&[-r, c(1.0, 0.0)])).unwrap();
        }
        let f = inner_outer(&p).unwrap();
        assert_eq!(f.classes.inside.len(), 2);
        assert!(f.outer.constant_term().im == 0.0 && f.outer.constant_term().re > 0.0);
        let scale: f64 = p.terms().iter().map(|t| t.1.norm()).sum();
        for k in 0..64 {
            let z = fft::grid_point(k, 64);
            assert!((f.inner.eval(z).norm() - 1.0).abs() < 1e-8);
            let (pz, oz) = (p.eval(z), f.outer.eval(z));
            assert!((pz.norm() - oz.norm()).abs() <= 1e-8 * scale);
            assert!((f.inner.eval(z) * oz - pz).norm() < 1e-8 * scale);
        }
        assert!((f.alpha - f.outer.constant_term().re).abs() < 1e-9 * f.alpha);
        // outer has no zeros inside the disc
        let outer_roots = find_roots(&f.outer, 1e-10).unwrap();
        assert!(outer_roots.iter().all(|r| r.modulus() >= 1.0 - CIRCLE_EPS));
    }

    #[test]
    fn jensen_grid_floor_and_constants() {
        let p = TrigPolynomial::from_real(&[1.0, 1.0]);
        assert!(matches!(
            mahler_measure_jensen(&p, 7),
            Err(Error::GridTooCoarse { floor: 8, .. })
        ));
        assert_eq!(mahler_measure_jensen(&TrigPolynomial::one(), 8).unwrap(), 1.0);
    }

    #[test]
    fn jensen_double_root_on_node() {
        // (1+z)^2 / 2 has a double zero at the grid node -1
        let p = TrigPolynomial::from_real(&[0.5, 1.0, 0.5]);
        let j = mahler_measure_jensen(&p, 4096).unwrap();
        assert!((j - 0.5).abs() < 1e-12, "{j}");
    }
}
