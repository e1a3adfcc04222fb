//! Dissociation: every choice of one term from each polynomial must land
//! on a distinct exponent sum.
//!
//! Small instances are decided by exact enumeration of the sumset. Large
//! instances first look for a collision among prefixes and pairs (any
//! such collision is a collision of the full product) and then try a
//! lacunary gap condition that certifies distinctness. If neither
//! settles the question the check reports itself infeasible rather than
//! guessing.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::polynomial::TrigPolynomial;

/// Maximum number of exponent-sum combinations enumerated exactly.
pub const ENUMERATION_CAP: u64 = 1_000_000;

/// Two distinct selections (one exponent per polynomial) with equal sums.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Collision {
    pub sum: i64,
    pub first: Vec<i64>,
    pub second: Vec<i64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Enumeration,
    PartialEnumeration,
    GapCondition,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Dissociation {
    pub dissociated: bool,
    pub witness: Option<Collision>,
    pub method: Method,
}

/// Dissociation of the analytic polynomials themselves.
pub fn is_dissociated(ps: &[TrigPolynomial]) -> Result<Dissociation> {
    let sets: Vec<Vec<i64>> = ps
        .iter()
        .map(|p| p.exponents().map(|e| e as i64).collect())
        .collect();
    check_exponent_sets(&sets, ENUMERATION_CAP)
}

/// Dissociation of the moduli squared `|p_j|^2` as two-sided
/// trigonometric polynomials.
pub fn is_modulus_dissociated(ps: &[TrigPolynomial]) -> Result<Dissociation> {
    let sets: Vec<Vec<i64>> = ps
        .iter()
        .map(|p| p.modulus_squared_terms().into_iter().map(|t| t.0).collect())
        .collect();
    check_exponent_sets(&sets, ENUMERATION_CAP)
}

/// Core check over exponent sets (each sorted ascending, distinct).
pub fn check_exponent_sets(sets: &[Vec<i64>], cap: u64) -> Result<Dissociation> {
    if sets.is_empty() {
        return Err(Error::InvalidParameter(
            "dissociation check needs at least one polynomial".into(),
        ));
    }
    if sets.iter().any(|s| s.is_empty()) {
        return Err(Error::EmptyPolynomial);
    }
    let total = sets
        .iter()
        .fold(1u64, |acc, s| acc.saturating_mul(s.len() as u64));
    if total <= cap {
        return Ok(match enumerate(sets, cap) {
            Enumerated::Collision(c) => collided(c, Method::Enumeration),
            _ => Dissociation {
                dissociated: true,
                witness: None,
                method: Method::Enumeration,
            },
        });
    }

    // Any collision within a prefix extends to the full product.
    if let Enumerated::Collision(c) = enumerate(sets, cap) {
        return Ok(collided(c, Method::PartialEnumeration));
    }
    if let Some(c) = pairwise_collision(sets, cap) {
        return Ok(collided(c, Method::PartialEnumeration));
    }
    if gap_condition(sets) {
        return Ok(Dissociation {
            dissociated: true,
            witness: None,
            method: Method::GapCondition,
        });
    }
    Err(Error::DissociationInfeasible(format!(
        "{total} combinations exceed the enumeration cap {cap}, no collision found and the gap condition fails"
    )))
}

fn collided(c: Collision, method: Method) -> Dissociation {
    Dissociation {
        dissociated: false,
        witness: Some(c),
        method,
    }
}

enum Enumerated {
    Complete,
    Truncated,
    Collision(Collision),
}

#[derive(Clone, Copy)]
struct Node {
    sum: i64,
    parent: u32,
    term: u32,
}

/// Builds the sorted sumset one polynomial at a time, stopping at the
/// first repeated sum or once a level would exceed `cap` entries.
fn enumerate(sets: &[Vec<i64>], cap: u64) -> Enumerated {
    let mut levels: Vec<Vec<Node>> = Vec::with_capacity(sets.len());
    let mut prev = vec![Node {
        sum: 0,
        parent: 0,
        term: 0,
    }];
    for (depth, set) in sets.iter().enumerate() {
        if (prev.len() as u64).saturating_mul(set.len() as u64) > cap {
            return Enumerated::Truncated;
        }
        let mut next = Vec::with_capacity(prev.len() * set.len());
        for (pi, node) in prev.iter().enumerate() {
            for (ti, &e) in set.iter().enumerate() {
                next.push(Node {
                    sum: node.sum + e,
                    parent: pi as u32,
                    term: ti as u32,
                });
            }
        }
        next.sort_unstable_by_key(|n| n.sum);
        levels.push(prev);
        if let Some(w) = next.windows(2).find(|w| w[0].sum == w[1].sum) {
            let (a, b) = (w[0], w[1]);
            let first = trace(&levels, sets, depth, a);
            let second = trace(&levels, sets, depth, b);
            return Enumerated::Collision(Collision {
                sum: a.sum,
                first,
                second,
            });
        }
        prev = next;
    }
    Enumerated::Complete
}

fn trace(levels: &[Vec<Node>], sets: &[Vec<i64>], depth: usize, leaf: Node) -> Vec<i64> {
    let mut picks = vec![0i64; depth + 1];
    let mut node = leaf;
    for d in (0..=depth).rev() {
        picks[d] = sets[d][node.term as usize];
        node = levels[d][node.parent as usize];
    }
    // polynomials past the collision depth take their first term
    picks.extend(sets[depth + 1..].iter().map(|s| s[0]));
    picks
}

fn pairwise_collision(sets: &[Vec<i64>], cap: u64) -> Option<Collision> {
    for i in 0..sets.len() {
        for j in i + 1..sets.len() {
            if (sets[i].len() as u64) * (sets[j].len() as u64) > cap {
                continue;
            }
            let mut sums: Vec<(i64, usize, usize)> = Vec::new();
            for (a, &x) in sets[i].iter().enumerate() {
                for (b, &y) in sets[j].iter().enumerate() {
                    sums.push((x + y, a, b));
                }
            }
            sums.sort_unstable();
            if let Some(w) = sums.windows(2).find(|w| w[0].0 == w[1].0) {
                let base: Vec<i64> = sets.iter().map(|s| s[0]).collect();
                let pick = |a: usize, b: usize| {
                    let mut v = base.clone();
                    v[i] = sets[i][a];
                    v[j] = sets[j][b];
                    v
                };
                let first = pick(w[0].1, w[0].2);
                let second = pick(w[1].1, w[1].2);
                let sum = first.iter().sum();
                return Some(Collision { sum, first, second });
            }
        }
    }
    None
}

/// Sufficient condition: ordered by span, each set's minimal gap exceeds
/// the total span of the sets before it.
fn gap_condition(sets: &[Vec<i64>]) -> bool {
    let mut order: Vec<&Vec<i64>> = sets.iter().collect();
    order.sort_by_key(|s| span(s));
    let mut width: i128 = 0;
    for s in order {
        let gap = s.windows(2).map(|w| w[1] - w[0]).min();
        if let Some(g) = gap {
            if (g as i128) <= width {
                return false;
            }
        }
        width += span(s) as i128;
    }
    true
}

fn span(s: &[i64]) -> i64 {
    s.last().unwrap() - s.first().unwrap()
}
