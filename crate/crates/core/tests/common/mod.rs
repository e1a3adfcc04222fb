#![allow(dead_code)]

use num_complex::Complex64;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use riesz_core::products::RieszSpec;
use riesz_core::rankone::{RankOneParams, Stage};
use riesz_core::TrigPolynomial;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn unit_square(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

/// Dense random polynomial of exact degree `deg`, normalized, with a
/// positive constant term.
pub fn dense_poly(rng: &mut ChaCha8Rng, deg: usize) -> TrigPolynomial {
    let mut c: Vec<Complex64> = (0..=deg).map(|_| unit_square(rng)).collect();
    for x in [0, deg] {
        while c[x].norm() < 0.1 {
            c[x] = unit_square(rng);
        }
    }
    positive(TrigPolynomial::from_dense(&c))
}

/// Random polynomial with at most `terms` terms and degree at most `max_deg`,
/// always including the constant term.
pub fn sparse_poly(rng: &mut ChaCha8Rng, terms: usize, max_deg: u64) -> TrigPolynomial {
    let t = rng.random_range(1..=terms.min(max_deg as usize + 1));
    let mut exps: Vec<u64> = vec![0];
    if t > 1 {
        exps.extend(
            sample(rng, max_deg as usize, t - 1)
                .into_iter()
                .map(|e| e as u64 + 1),
        );
    }
    let mut c: Vec<(u64, Complex64)> = Vec::with_capacity(t);
    for e in exps {
        let mut z = unit_square(rng);
        while z.norm() < 0.1 {
            z = unit_square(rng);
        }
        c.push((e, z));
    }
    positive(TrigPolynomial::new(c))
}

fn positive(p: TrigPolynomial) -> TrigPolynomial {
    p.normalize_l2().unwrap()
}

pub fn random_spec(rng: &mut ChaCha8Rng, max_k: usize, terms: usize, max_deg: u64) -> RieszSpec {
    let k = rng.random_range(1..=max_k);
    let factors = (0..k).map(|_| sparse_poly(rng, terms, max_deg)).collect();
    RieszSpec::new(factors, "random").unwrap()
}

pub fn random_params(rng: &mut ChaCha8Rng, max_m: usize, max_spacer: u64, max_k: usize) -> RankOneParams {
    let k = rng.random_range(1..=max_k);
    let stages = (0..k)
        .map(|_| {
            let m = rng.random_range(2..=max_m);
            let spacers = (0..m - 1).map(|_| rng.random_range(0..=max_spacer)).collect();
            let w: Vec<f64> = (0..m).map(|_| rng.random_range(0.05..1.0)).collect();
            let total: f64 = w.iter().sum();
            let mut phases = vec![Complex64::new(1.0, 0.0)];
            phases.extend((1..m).map(|_| Complex64::from_polar(1.0, rng.random_range(-3.0..3.0))));
            Stage {
                m,
                spacers,
                p: w.iter().map(|x| x / total).collect(),
                phases,
            }
        })
        .collect();
    RankOneParams::new(stages).unwrap()
}
