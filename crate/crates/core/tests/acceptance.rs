//! End-to-end acceptance checks, one line per check.
//!
//! Run with `cargo test -p riesz-core --test acceptance`.

mod common;

use std::f64::consts::{FRAC_PI_4, PI, SQRT_2};
use std::process::ExitCode;
use std::time::Instant;

use num_complex::Complex64;
use rand::Rng;

use common::{dense_poly, random_params, random_spec, rng, sparse_poly};
use riesz_core::dichotomy::{affinity_sequence, bourgain_l1_sequence, guenais_test};
use riesz_core::dissociation::{is_dissociated, is_modulus_dissociated};
use riesz_core::factorization::{mahler_measure, mahler_measure_jensen};
use riesz_core::flatness::{
    b_m, barker_catalog, flatness_metrics_default, gaussian_l1_experiment, r_form, sign_polynomial,
    verify_barker, zero_annulus_check, zero_one_annulus_check, GaussianOptions, GAUSSIAN_L1,
};
use riesz_core::polynomial::default_grid;
use riesz_core::products::{
    all_stage_diagnostics, classical_riesz, mahler_of_product, RieszSpec, TailTest,
};
use riesz_core::rankone::{
    build_polynomials, check_return_conditions, dissociate_lift, is_dynamical_origin,
    reconstruct_params, return_times,
};
use riesz_core::TrigPolynomial;

type Check = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn mahler_cross_oracle() -> Outcome {
    let start = Instant::now();
    let mut r = rng(1);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let deg = r.random_range(1..=64);
        let p = dense_poly(&mut r, deg);
        let roots = mahler_measure(&p).unwrap();
        let jensen = mahler_measure_jensen(&p, 1 << 16).unwrap();
        worst = worst.max((roots - jensen).abs() / roots);
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-6 && secs <= 30.0,
        format!("max relative gap {worst:.3e} over 200 polynomials in {secs:.2} s"),
    )
}

fn classical_pi4(k: usize) -> RieszSpec {
    let exps: Vec<u64> = (1..=k as u32).map(|j| 3u64.pow(j)).collect();
    classical_riesz(&vec![FRAC_PI_4; k], &exps, TailTest::Divergent)
        .unwrap()
        .spec
}

fn classical_singular() -> Outcome {
    let spec = classical_pi4(10);
    let worst = (1..=10)
        .map(|n| (mahler_of_product(&spec, n).unwrap() - 0.5f64.powi(n as i32)).abs())
        .fold(0.0, f64::max);
    let grid = default_grid(spec.partial_degree(10).unwrap()).unwrap();
    let l1 = bourgain_l1_sequence(&spec, 10, grid).unwrap();
    let first = 2.0 * SQRT_2 / PI;
    let pass = worst <= 1e-12 && l1[9] < l1[0] && (l1[0] - first).abs() < 1e-6;
    outcome(
        pass,
        format!(
            "max |M(S_n) - 2^-n| = {worst:.2e}; ||S_1||_1 = {:.6}, ||S_10||_1 = {:.6}",
            l1[0], l1[9]
        ),
    )
}

fn classical_absolutely_continuous() -> Outcome {
    // cos(theta_j) = sqrt(1 - 1/j^2). The j = 1 factor is z^{n_1}: constant
    // term 0 and outer constant 1, so it changes b_0 but not beta.
    let js: Vec<u32> = (2..=21).collect();
    let thetas: Vec<f64> = js
        .iter()
        .map(|&j| (1.0 - 1.0 / (j * j) as f64).sqrt().acos())
        .collect();
    let exps: Vec<u64> = js.iter().map(|&j| 3u64.pow(j)).collect();
    let c = classical_riesz(&thetas, &exps, TailTest::Convergent).unwrap();
    let d = all_stage_diagnostics(&c.spec).unwrap();
    let beta_through_20 = d[18].beta;
    let target = (21.0f64 / 40.0).sqrt();

    let first = TrigPolynomial::new([(0, Complex64::new(0.0, 0.0)), (3, Complex64::new(1.0, 0.0))]);
    let b0_with_first = first.constant_term().re * d[18].b0;
    let rejected = classical_riesz(&[PI / 2.0], &[3], TailTest::Convergent).is_err();

    let gap = (beta_through_20 - target).abs();
    outcome(
        gap <= 1e-10 && b0_with_first == 0.0 && d[18].b0 > 0.0 && rejected,
        format!(
            "beta over j = 1..20 is {beta_through_20:.12} (target {target:.12}, gap {gap:.1e}); \
             b_0 with j = 1 is {b0_with_first}, without it {:.6}; beta over j = 2..21 is {:.6}",
            d[18].b0, d[19].beta
        ),
    )
}

fn normalization_suite() -> Outcome {
    let mut r = rng(4);
    let (mut worst, mut all_dissociated) = (0.0f64, true);
    for _ in 0..100 {
        let k = r.random_range(2..=4);
        let ps: Vec<TrigPolynomial> = (0..k).map(|_| sparse_poly(&mut r, 4, 8)).collect();
        let lift = dissociate_lift(&ps).unwrap();
        let s = &lift.spec;
        all_dissociated &= is_dissociated(s.factors()).unwrap().dissociated
            && is_modulus_dissociated(s.factors()).unwrap().dissociated;
        let kk = s.stage_count();
        let grid = default_grid(s.partial_degree(kk).unwrap()).unwrap();
        let mean = s.density_grid(kk, grid).unwrap().mean();
        worst = worst.max((mean - 1.0).abs());
    }
    outcome(
        worst <= 1e-10 && all_dissociated,
        format!("max |mean - 1| = {worst:.2e}; all lifted specs dissociated: {all_dissociated}"),
    )
}

fn rank_one_integrity() -> Outcome {
    let mut r = rng(5);
    let mut failures = Vec::new();
    for trial in 0..1000 {
        let params = random_params(&mut r, 6, 10, 8);
        let table = return_times(&params).unwrap();
        if let Some(v) = check_return_conditions(&table) {
            failures.push(format!("trial {trial}: {v}"));
            continue;
        }
        let built = build_polynomials(&params, params.stages().len()).unwrap();
        if !is_dynamical_origin(&built.spec).dynamical {
            failures.push(format!("trial {trial}: not of dynamical origin"));
        }
        let back = reconstruct_params(&built.spec).unwrap();
        for (a, b) in params.stages().iter().zip(back.stages()) {
            let close = a.p.iter().zip(&b.p).all(|(x, y)| (x - y).abs() <= 1e-14)
                && a.phases.iter().zip(&b.phases).all(|(x, y)| (x - y).norm() <= 1e-14);
            if a.m != b.m || a.spacers != b.spacers || !close {
                failures.push(format!("trial {trial}: reconstruction differs"));
                break;
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!("1000 parameter sets, {} failures {:?}", failures.len(), failures.first()),
    )
}

fn lift_constructor() -> Outcome {
    let mut r = rng(6);
    let mut bad = 0;
    for _ in 0..100 {
        let k = r.random_range(1..=5);
        let ps: Vec<TrigPolynomial> = (0..k).map(|_| sparse_poly(&mut r, 5, 20)).collect();
        match dissociate_lift(&ps) {
            Ok(l) => {
                let ok = is_dissociated(l.spec.factors()).unwrap().dissociated
                    && is_modulus_dissociated(l.spec.factors()).unwrap().dissociated
                    && is_dynamical_origin(&l.spec).dynamical;
                bad += usize::from(!ok);
            }
            Err(_) => bad += 1,
        }
    }
    outcome(bad == 0, format!("100 random input lists, {bad} failures"))
}

fn zero_bounds() -> Outcome {
    let mut r = rng(7);
    let mut r_form_bad = 0;
    for _ in 0..500 {
        let m = r.random_range(2..=8);
        let h = r.random_range(2..=50u64);
        let spacers: Vec<u64> = (1..m).map(|_| r.random_range(0..=2 * h)).collect();
        let c = zero_annulus_check(&r_form(h, &spacers), h).unwrap();
        r_form_bad += usize::from(!c.violations.is_empty() || !c.refined_violations.is_empty());
    }
    let b3 = b_m(3).unwrap();
    let b64 = b_m(64).unwrap();
    let b3_gap = (b3 - (5f64.sqrt() - 1.0) / 2.0).abs();
    let mut zero_one_bad = 0;
    for _ in 0..500 {
        let deg = r.random_range(1..=40);
        let mut c: Vec<f64> = (0..=deg).map(|_| f64::from(r.random_range(0..=1u8))).collect();
        c[0] = 1.0;
        c[deg] = 1.0;
        let chk = zero_one_annulus_check(&TrigPolynomial::from_real(&c)).unwrap();
        zero_one_bad += usize::from(!chk.violations.is_empty());
    }
    outcome(
        r_form_bad == 0 && b3_gap <= 1e-10 && (b64 - 0.5).abs() <= 1e-3 && zero_one_bad == 0,
        format!(
            "(R) form violations {r_form_bad}/500; b_3 gap {b3_gap:.1e}; b_64 = {b64:.6}; \
             {{0,1}} violations {zero_one_bad}/500"
        ),
    )
}

fn brute_force_barker(seq: &[i8]) -> (bool, i64) {
    let n = seq.len();
    let mut worst = 0i64;
    for k in 1..n {
        let mut c = 0i64;
        for j in 0..n - k {
            c += i64::from(seq[j]) * i64::from(seq[j + k]);
        }
        worst = worst.max(c.abs());
    }
    (worst <= 1, worst)
}

fn barker() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;
    for (n, s) in barker_catalog() {
        let ok = verify_barker(&s).unwrap().barker;
        let m = flatness_metrics_default(&sign_polynomial(&s)).unwrap().mahler_over_l2;
        let bound = 1.0 - 1.0 / n as f64;
        pass &= ok && m > bound;
        notes.push(format!("{n}:{m:.4}"));
    }
    let mut disagreements = 0;
    for n in 1..=5usize {
        for mask in 0..(1u32 << n) {
            let s: Vec<i8> = (0..n).map(|i| if mask >> i & 1 == 1 { 1 } else { -1 }).collect();
            let c = verify_barker(&s).unwrap();
            disagreements += usize::from((c.barker, c.max_correlation) != brute_force_barker(&s));
        }
    }
    outcome(
        pass && disagreements == 0,
        format!(
            "catalog M/L2 by length [{}]; exhaustive n <= 5 disagreements {disagreements}",
            notes.join(", ")
        ),
    )
}

fn gaussian_limit() -> Outcome {
    let opts = GaussianOptions::new(400, 50, 1);
    let a = gaussian_l1_experiment(&opts).unwrap();
    let b = gaussian_l1_experiment(&opts).unwrap();
    let identical = a.values.iter().zip(&b.values).all(|(x, y)| x.to_bits() == y.to_bits());
    let gap = (a.mean - GAUSSIAN_L1).abs();
    outcome(
        gap <= 0.05 && identical,
        format!(
            "mean {:.6} (sd {:.4}) vs {GAUSSIAN_L1:.6}, gap {gap:.4}; rerun bit-identical: {identical}",
            a.mean, a.stddev
        ),
    )
}

fn contraction_invariance() -> Outcome {
    let mut r = rng(10);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let spec = random_spec(&mut r, 4, 4, 10);
        let k = spec.stage_count();
        let base = mahler_of_product(&spec, k).unwrap();
        for q in [2, 3, 5] {
            let c = mahler_of_product(&spec.contract(q).unwrap(), k).unwrap();
            worst = worst.max((c - base).abs());
        }
    }
    outcome(worst <= 1e-9, format!("max change {worst:.2e} over 50 specs and q in {{2,3,5}}"))
}

fn density_factorization() -> Outcome {
    let mut r = rng(11);
    let mut worst = 0.0f64;
    let mut tested = 0;
    while tested < 50 {
        let spec = random_spec(&mut r, 6, 4, 12);
        let k = spec.stage_count();
        if k < 2 {
            continue;
        }
        tested += 1;
        let (first, second): (Vec<usize>, Vec<usize>) = (1..=k).partition(|_| r.random_bool(0.5));
        let (first, second) = if first.is_empty() || second.is_empty() {
            ((1..k).collect(), vec![k])
        } else {
            (first, second)
        };
        let grid = default_grid(spec.partial_degree(k).unwrap()).unwrap();
        let whole = spec.density_grid(k, grid).unwrap();
        let s1 = spec.subproduct(&first).unwrap();
        let s2 = spec.subproduct(&second).unwrap();
        let d1 = s1.density_grid(s1.stage_count(), grid).unwrap();
        let d2 = s2.density_grid(s2.stage_count(), grid).unwrap();
        for ((w, a), b) in whole.values.iter().zip(&d1.values).zip(&d2.values) {
            worst = worst.max((w - a * b).abs() / w.abs().max(1.0));
        }
    }
    outcome(
        worst <= 1e-12,
        format!("max pointwise gap {worst:.2e} over 50 random splits"),
    )
}

fn affinity_sanity() -> Outcome {
    let mut r = rng(12);
    // self-affinity is ||S_n||_2^2, which is 1 only for dissociated specs
    let mut specs: Vec<RieszSpec> = (0..20)
        .map(|_| {
            let k = r.random_range(1..=4);
            let ps: Vec<TrigPolynomial> = (0..k).map(|_| sparse_poly(&mut r, 4, 10)).collect();
            dissociate_lift(&ps).unwrap().spec
        })
        .collect();
    let (mut worst_aff, mut worst_slack) = (0.0f64, f64::INFINITY);
    for spec in &specs {
        let k = spec.stage_count();
        let grid = default_grid(2 * spec.partial_degree(k).unwrap()).unwrap();
        for a in affinity_sequence(spec, spec, k, grid).unwrap() {
            worst_aff = worst_aff.max((a - 1.0).abs());
        }
    }
    specs.push(classical_pi4(8));
    for spec in &specs {
        let k = spec.stage_count();
        let grid = default_grid(spec.partial_degree(k).unwrap()).unwrap();
        let g = guenais_test(spec, k, grid).unwrap();
        worst_slack = g.slack.iter().cloned().fold(worst_slack, f64::min);
    }
    outcome(
        worst_aff <= 1e-10 && worst_slack >= -1e-10,
        format!("max |affinity - 1| = {worst_aff:.2e}; min telescoping slack {worst_slack:.3e}"),
    )
}

fn main() -> ExitCode {
    let checks: [Check; 12] = [
        ("mahler cross-oracle", mahler_cross_oracle),
        ("classical riesz, singular instance", classical_singular),
        ("classical riesz, absolutely continuous instance", classical_absolutely_continuous),
        ("normalization of dissociated specs", normalization_suite),
        ("rank-one integrity", rank_one_integrity),
        ("dissociating lift", lift_constructor),
        ("zero bounds", zero_bounds),
        ("barker sequences", barker),
        ("gaussian limit", gaussian_limit),
        ("contraction invariance", contraction_invariance),
        ("finite-stage density factorization", density_factorization),
        ("affinity sanity", affinity_sanity),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        let start = Instant::now();
        let o = check();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!o.pass);
        println!("{tag} {name}: {} [{:.2} s]", o.detail, start.elapsed().as_secs_f64());
    }
    println!("acceptance: {} passed, {failed} failed", checks.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
