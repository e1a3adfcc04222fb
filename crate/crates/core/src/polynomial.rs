//! Sparse analytic trigonometric polynomials on the unit circle.
//!
//! A [`TrigPolynomial`] stores only its nonzero terms as `(exponent,
//! coefficient)` pairs in strictly increasing exponent order. Rank-one
//! spectral polynomials have a handful of terms spread over degrees in
//! the millions, so nothing here assumes a dense coefficient vector
//! unless a grid is explicitly requested.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::fft;

/// Coefficients with modulus below this are treated as exact zeros.
pub const ZERO_THRESHOLD: f64 = 1e-300;

/// Tolerance for the `sum |c|^2 = 1` normalization flag.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;

/// Smallest grid on which norms default to being computed.
pub const MIN_DEFAULT_GRID: usize = 4096;

/// Density and norm grids are refused above this degree (memory guard).
pub const MAX_GRID_DEGREE: u64 = 1 << 22;

/// A sparse analytic trigonometric polynomial `sum_j c_j z^{e_j}`.
#[derive(Clone)]
pub struct TrigPolynomial {
    terms: Vec<(u64, Complex64)>,
    /// Multiplier applied by the last canonicalization: `self = original * factor`.
    factor: Complex64,
}

impl PartialEq for TrigPolynomial {
    fn eq(&self, other: &Self) -> bool {
        self.terms == other.terms
    }
}

impl fmt::Debug for TrigPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list()
            .entries(self.terms.iter().map(|(e, c)| (e, c.re, c.im)))
            .finish()
    }
}

impl fmt::Display for TrigPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (e, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            if c.im == 0.0 {
                write!(f, "{}", c.re)?;
            } else {
                write!(f, "({}{:+}i)", c.re, c.im)?;
            }
            match e {
                0 => {}
                1 => write!(f, "z")?,
                _ => write!(f, "z^{e}")?,
            }
        }
        Ok(())
    }
}

impl TrigPolynomial {
    /// Builds a polynomial from arbitrary terms: exponents are sorted,
    /// repeated exponents summed, negligible coefficients dropped.
    pub fn new<I>(terms: I) -> Self
    where
        I: IntoIterator<Item = (u64, Complex64)>,
    {
        let mut acc: BTreeMap<u64, Complex64> = BTreeMap::new();
        for (e, c) in terms {
            *acc.entry(e).or_insert(Complex64::new(0.0, 0.0)) += c;
        }
        Self::from_sorted_unchecked(
            acc.into_iter()
                .filter(|(_, c)| c.norm() >= ZERO_THRESHOLD)
                .collect(),
        )
    }

    fn from_sorted_unchecked(terms: Vec<(u64, Complex64)>) -> Self {
        debug_assert!(terms.windows(2).all(|w| w[0].0 < w[1].0));
        Self {
            terms,
            factor: Complex64::new(1.0, 0.0),
        }
    }

    /// Real coefficients given densely, `coeffs[j]` multiplying `z^j`.
    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(
            coeffs
                .iter()
                .enumerate()
                .map(|(j, &c)| (j as u64, Complex64::new(c, 0.0))),
        )
    }

    /// Complex coefficients given densely.
    pub fn from_dense(coeffs: &[Complex64]) -> Self {
        Self::new(coeffs.iter().enumerate().map(|(j, &c)| (j as u64, c)))
    }

    pub fn constant(c: f64) -> Self {
        Self::new([(0, Complex64::new(c, 0.0))])
    }

    pub fn one() -> Self {
        Self::constant(1.0)
    }

    pub fn monomial(exponent: u64, c: Complex64) -> Self {
        Self::new([(exponent, c)])
    }

    pub fn terms(&self) -> &[(u64, Complex64)] {
        &self.terms
    }

    pub fn exponents(&self) -> impl Iterator<Item = u64> + '_ {
        self.terms.iter().map(|t| t.0)
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Largest exponent; zero for constants and for the zero polynomial.
    pub fn degree(&self) -> u64 {
        self.terms.last().map_or(0, |t| t.0)
    }

    pub fn constant_term(&self) -> Complex64 {
        match self.terms.first() {
            Some(&(0, c)) => c,
            _ => Complex64::new(0.0, 0.0),
        }
    }

    pub fn leading_coefficient(&self) -> Complex64 {
        self.terms
            .last()
            .map_or(Complex64::new(0.0, 0.0), |t| t.1)
    }

    /// Coefficient of `z^j` (zero when absent).
    pub fn coefficient(&self, j: u64) -> Complex64 {
        match self.terms.binary_search_by_key(&j, |t| t.0) {
            Ok(i) => self.terms[i].1,
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    /// Multiplier recorded by [`normalize_l2`](Self::normalize_l2); the
    /// original polynomial is `self / factor()`.
    pub fn factor(&self) -> Complex64 {
        self.factor
    }

    /// `sum |c_j|^2`.
    pub fn l2_norm_sq(&self) -> f64 {
        self.terms.iter().map(|t| t.1.norm_sqr()).sum()
    }

    /// Exact L2(dz) norm, from Parseval.
    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    pub fn is_normalized(&self) -> bool {
        (self.l2_norm_sq() - 1.0).abs() <= NORMALIZATION_TOLERANCE
    }

    /// Constant term present, real and positive.
    pub fn has_positive_constant_term(&self) -> bool {
        let c = self.constant_term();
        c.re > 0.0 && c.im.abs() <= 1e-14 * c.re.max(1.0)
    }

    /// Scales by a positive real to unit L2 norm and rotates by a
    /// unimodular constant so that the constant term (if any) is positive.
    pub fn normalize_l2(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::EmptyPolynomial);
        }
        let scale = 1.0 / self.l2_norm();
        let c0 = self.constant_term();
        let rotation = if c0.norm() > 0.0 {
            c0.conj() / c0.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        let mult = rotation * scale;
        let mut terms: Vec<_> = self.terms.iter().map(|&(e, c)| (e, c * mult)).collect();
        if let Some(first) = terms.first_mut() {
            if first.0 == 0 {
                // land the constant exactly on the positive real axis
                first.1 = Complex64::new(first.1.norm(), 0.0);
            }
        }
        Ok(Self {
            terms,
            factor: self.factor * mult,
        })
    }

    /// Multiplies every coefficient by `c`.
    pub fn scale(&self, c: Complex64) -> Self {
        Self::new(self.terms.iter().map(|&(e, a)| (e, a * c)))
    }

    /// Exact coefficient convolution.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        if self.is_zero() || other.is_zero() {
            return Ok(Self::new([]));
        }
        self.degree()
            .checked_add(other.degree())
            .ok_or_else(|| Error::Overflow("product degree exceeds u64".into()))?;
        let mut acc: BTreeMap<u64, Complex64> = BTreeMap::new();
        for &(ea, ca) in &self.terms {
            for &(eb, cb) in &other.terms {
                *acc.entry(ea + eb).or_insert(Complex64::new(0.0, 0.0)) += ca * cb;
            }
        }
        Ok(Self::from_sorted_unchecked(
            acc.into_iter()
                .filter(|(_, c)| c.norm() >= ZERO_THRESHOLD)
                .collect(),
        ))
    }

    /// `p(z^q)`: every exponent multiplied by `q`, coefficients unchanged.
    pub fn contract(&self, q: u64) -> Result<Self> {
        if q == 0 {
            return Err(Error::InvalidParameter("contraction factor must be >= 1".into()));
        }
        let terms = self
            .terms
            .iter()
            .map(|&(e, c)| {
                e.checked_mul(q)
                    .map(|e| (e, c))
                    .ok_or_else(|| Error::Overflow(format!("exponent {e} times {q}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            terms,
            factor: self.factor,
        })
    }

    /// Greatest common divisor of all exponents (zero for constants).
    pub fn exponent_gcd(&self) -> u64 {
        self.exponents().fold(0, gcd)
    }

    /// `p(z / g)` for `g` the exponent gcd, returned with `g`.
    pub fn decontract(&self) -> (Self, u64) {
        let g = self.exponent_gcd();
        if g <= 1 {
            return (self.clone(), 1);
        }
        (
            Self {
                terms: self.terms.iter().map(|&(e, c)| (e / g, c)).collect(),
                factor: self.factor,
            },
            g,
        )
    }

    /// Dense coefficient vector of length `degree + 1`.
    pub fn dense_coefficients(&self) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.degree() as usize + 1];
        for &(e, c) in &self.terms {
            out[e as usize] = c;
        }
        out
    }

    /// Direct evaluation at an arbitrary complex point.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for &(e, c) in &self.terms {
            acc += c * pow_u64(z, e);
        }
        acc
    }

    /// Horner evaluation on the dense coefficient vector.
    pub fn eval_horner(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut iter = self.terms.iter().rev().peekable();
        let mut e = self.degree();
        loop {
            if let Some(&&(te, c)) = iter.peek() {
                if te == e {
                    acc += c;
                    iter.next();
                }
            }
            if e == 0 {
                break;
            }
            acc *= z;
            e -= 1;
        }
        acc
    }

    /// `p'(z)` as a polynomial.
    pub fn derivative(&self) -> Self {
        Self::new(
            self.terms
                .iter()
                .filter(|t| t.0 > 0)
                .map(|&(e, c)| (e - 1, c * e as f64)),
        )
    }

    /// `|p|^2` on the circle as two-sided exponents with nonzero
    /// coefficients: the autocorrelation of the coefficient sequence.
    /// Coefficients below `1e-14 * sum |c|^2` are treated as cancelled.
    pub fn modulus_squared_terms(&self) -> Vec<(i64, Complex64)> {
        let mut acc: BTreeMap<i64, Complex64> = BTreeMap::new();
        for &(ea, ca) in &self.terms {
            for &(eb, cb) in &self.terms {
                let k = ea as i64 - eb as i64;
                *acc.entry(k).or_insert(Complex64::new(0.0, 0.0)) += ca * cb.conj();
            }
        }
        let floor = 1e-14 * self.l2_norm_sq();
        acc.into_iter().filter(|(_, c)| c.norm() > floor).collect()
    }

    /// Samples on the `n`-point grid `z_k = exp(2 pi i k / n)` by FFT.
    pub fn evaluate_grid(&self, n: usize) -> GridValues<Complex64> {
        GridValues::new(fft::sample_terms(&self.terms, n))
    }

    /// Trapezoid mean of `|p|` on the `n`-point grid.
    pub fn l1_norm(&self, n: usize) -> Result<f64> {
        check_norm_grid(self.degree(), n)?;
        let g = self.evaluate_grid(n);
        Ok(g.values.iter().map(|v| v.norm()).sum::<f64>() / n as f64)
    }

    /// Maximum of `|p|` on the `n`-point grid.
    pub fn sup_norm(&self, n: usize) -> Result<f64> {
        check_norm_grid(self.degree(), n)?;
        let g = self.evaluate_grid(n);
        Ok(g.values.iter().map(|v| v.norm()).fold(0.0, f64::max))
    }

    /// `l1_norm` on [`default_grid`].
    pub fn l1_norm_default(&self) -> Result<f64> {
        self.l1_norm(default_grid(self.degree())?)
    }
}

fn check_norm_grid(degree: u64, n: usize) -> Result<()> {
    let floor = norm_grid_floor(degree);
    if (n as u64) < floor {
        return Err(Error::GridTooCoarse {
            grid: n,
            floor: floor as usize,
            rule: "N >= 2*deg + 1",
        });
    }
    Ok(())
}

/// Exactness floor `2 * deg + 1` for grid means of `|p|^2`.
pub fn norm_grid_floor(degree: u64) -> u64 {
    2 * degree + 1
}

/// Smallest power of two `>= max(4 * deg + 4, 4096)`.
///
/// Refused above [`MAX_GRID_DEGREE`].
pub fn default_grid(degree: u64) -> Result<usize> {
    if degree > MAX_GRID_DEGREE {
        return Err(Error::GridTooLarge {
            degree,
            limit: MAX_GRID_DEGREE,
        });
    }
    let want = (4 * degree + 4).max(MIN_DEFAULT_GRID as u64);
    Ok(want.next_power_of_two() as usize)
}

/// `z^e` by repeated squaring.
pub fn pow_u64(z: Complex64, mut e: u64) -> Complex64 {
    let mut base = z;
    let mut acc = Complex64::new(1.0, 0.0);
    while e > 0 {
        if e & 1 == 1 {
            acc *= base;
        }
        e >>= 1;
        if e > 0 {
            base *= base;
        }
    }
    acc
}

pub fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Samples of a function on the `N`-point circle grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridValues<T> {
    pub grid_size: usize,
    pub values: Vec<T>,
}

impl<T> GridValues<T> {
    pub fn new(values: Vec<T>) -> Self {
        Self {
            grid_size: values.len(),
            values,
        }
    }

    pub fn angle(&self, k: usize) -> f64 {
        fft::grid_angle(k, self.grid_size)
    }

    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> GridValues<U> {
        GridValues::new(self.values.iter().map(f).collect())
    }
}

impl GridValues<f64> {
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.grid_size as f64
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

impl GridValues<Complex64> {
    pub fn modulus(&self) -> GridValues<f64> {
        self.map(|v| v.norm())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolyRepr {
    terms: Vec<(u64, f64, f64)>,
}

impl Serialize for TrigPolynomial {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PolyRepr {
            terms: self.terms.iter().map(|&(e, c)| (e, c.re, c.im)).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for TrigPolynomial {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = PolyRepr::deserialize(d)?;
        if repr.terms.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(serde::de::Error::custom(
                "polynomial exponents must be strictly ascending",
            ));
        }
        if repr.terms.iter().any(|t| !t.1.is_finite() || !t.2.is_finite()) {
            return Err(serde::de::Error::custom("non-finite coefficient"));
        }
        Ok(Self::new(
            repr.terms
                .into_iter()
                .map(|(e, re, im)| (e, Complex64::new(re, im))),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn normalize_two_term() {
        let p = TrigPolynomial::from_real(&[1.0, 1.0]).normalize_l2().unwrap();
        assert!((p.constant_term().re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!(p.is_normalized());
    }

    #[test]
    fn normalize_constant_and_rotation() {
        let p = TrigPolynomial::constant(3.0).normalize_l2().unwrap();
        assert_eq!(p, TrigPolynomial::one());

        let q = TrigPolynomial::new([(0, c(0.0, 1.0)), (2, c(0.0, 1.0))])
            .normalize_l2()
            .unwrap();
        assert!(q.is_normalized());
        assert_eq!(q.constant_term().im, 0.0);
        assert!((q.constant_term().re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((q.coefficient(2) - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        // the recorded factor recovers the input
        let back = q.scale(q.factor().inv());
        assert!((back.coefficient(0) - c(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn normalize_rejects_zero() {
        assert_eq!(
            TrigPolynomial::new([]).normalize_l2(),
            Err(Error::EmptyPolynomial)
        );
    }

    #[test]
    fn products_from_background_examples() {
        let a = TrigPolynomial::from_real(&[1.0, 1.0]);
        let sq = a.multiply(&a).unwrap();
        assert_eq!(sq, TrigPolynomial::from_real(&[1.0, 2.0, 1.0]));
        let b = TrigPolynomial::from_real(&[1.0, 0.0, 1.0]);
        assert_eq!(
            a.multiply(&b).unwrap(),
            TrigPolynomial::from_real(&[1.0, 1.0, 1.0, 1.0])
        );
        assert_eq!(a.multiply(&TrigPolynomial::one()).unwrap(), a);
    }

    #[test]
    fn norms_of_two_term_polynomial() {
        let p = TrigPolynomial::from_real(&[1.0, 1.0]).normalize_l2().unwrap();
        assert!((p.l2_norm() - 1.0).abs() < 1e-15);
        let l1 = p.l1_norm(4096).unwrap();
        assert!((l1 - 2.0 * SQRT_2 / PI).abs() < 1e-6, "{l1}");
        let sup = TrigPolynomial::from_real(&[1.0, 1.0]).sup_norm(4096).unwrap();
        assert!((sup - 2.0).abs() < 1e-5);
    }

    #[test]
    fn coarse_grid_rejected() {
        let p = TrigPolynomial::from_real(&[1.0, 0.0, 0.0, 1.0]);
        assert!(matches!(p.l1_norm(6), Err(Error::GridTooCoarse { floor: 7, .. })));
        assert!(p.l1_norm(7).is_ok());
    }

    #[test]
    fn contraction() {
        let p = TrigPolynomial::from_real(&[1.0, 1.0]);
        assert_eq!(p.contract(3).unwrap(), TrigPolynomial::from_real(&[1.0, 0.0, 0.0, 1.0]));
        assert_eq!(p.contract(1).unwrap(), p);
        assert!(matches!(
            TrigPolynomial::monomial(u64::MAX / 2, c(1.0, 0.0)).contract(3),
            Err(Error::Overflow(_))
        ));
    }

    #[test]
    fn grid_samples() {
        let g = TrigPolynomial::one().evaluate_grid(8);
        assert!(g.values.iter().all(|v| (*v - c(1.0, 0.0)).norm() < 1e-15));
        let z = TrigPolynomial::monomial(1, c(1.0, 0.0)).evaluate_grid(4);
        let want = [c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.0, -1.0)];
        for (got, want) in z.values.iter().zip(want) {
            assert!((got - want).norm() < 1e-15);
        }
    }

    #[test]
    fn grid_folds_high_exponents() {
        let p = TrigPolynomial::new([(0, c(1.0, 0.0)), (13, c(0.5, -0.25))]);
        let g = p.evaluate_grid(8);
        for k in 0..8 {
            let z = fft::grid_point(k, 8);
            assert!((g.values[k] - p.eval(z)).norm() < 1e-13);
        }
    }

    #[test]
    fn horner_matches_sparse_eval() {
        let p = TrigPolynomial::new([(0, c(1.0, 2.0)), (3, c(-0.5, 0.0)), (7, c(0.0, 1.5))]);
        let z = c(0.3, -0.8);
        assert!((p.eval(z) - p.eval_horner(z)).norm() < 1e-14);
    }

    #[test]
    fn modulus_squared_of_two_term() {
        let p = TrigPolynomial::from_real(&[1.0, 1.0]);
        let ex: Vec<i64> = p.modulus_squared_terms().iter().map(|t| t.0).collect();
        assert_eq!(ex, vec![-1, 0, 1]);
    }

    #[test]
    fn json_format() {
        let p = TrigPolynomial::new([(0, c(0.5, 0.0)), (4, c(0.0, -1.0))]);
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"{"terms":[[0,0.5,0.0],[4,0.0,-1.0]]}"#);
        let back: TrigPolynomial = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
        assert!(serde_json::from_str::<TrigPolynomial>(r#"{"terms":[[3,1,0],[1,1,0]]}"#).is_err());
    }

    #[test]
    fn default_grid_rule() {
        assert_eq!(default_grid(0).unwrap(), 4096);
        assert_eq!(default_grid(1023).unwrap(), 4096);
        assert_eq!(default_grid(1024).unwrap(), 8192);
        assert!(default_grid(MAX_GRID_DEGREE + 1).is_err());
    }

    #[test]
    fn decontract_recovers_base() {
        let p = TrigPolynomial::from_real(&[1.0, 2.0, 0.5]).contract(6).unwrap();
        let (base, g) = p.decontract();
        assert_eq!(g, 6);
        assert_eq!(base, TrigPolynomial::from_real(&[1.0, 2.0, 0.5]));
    }
}
