//! Cross-checks against independent brute-force computations, plus the
//! published constants the library is expected to reproduce.

use std::f64::consts::PI;

use hecke_central::central::{central_value, root_number, Evaluator};
use hecke_central::character::{factor_eps, validate_character, EpsCharacter};
use hecke_central::charsum::{char_sum, dyadic_consistency, reduction_identity_check};
use hecke_central::dirichlet::{an_coefficients, l_d_at_1, l_d_at_1_abel, DirichletData};
use hecke_central::kernels::special::{exp_integral_e1, inc_gamma_ratio};
use hecke_central::kernels::{miller_yang_i, quadrature::integrate};
use hecke_central::quad::{
    ideal_from_generators, is_fundamental_discriminant, kronecker, principal_lattice_points,
    reduced_forms, LatticePoint, QuadInt, QuadraticField,
};
use proptest::prelude::*;

fn is_prime(n: i64) -> bool {
    n >= 2 && (2..).take_while(|p| p * p <= n).all(|p| n % p != 0)
}

fn pow_mod(mut b: i64, mut e: i64, m: i64) -> i64 {
    let mut r = 1;
    b = b.rem_euclid(m);
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % m;
        }
        b = b * b % m;
        e >>= 1;
    }
    r
}

/// Legendre symbol by Euler's criterion.
fn legendre(a: i64, p: i64) -> i8 {
    match pow_mod(a, (p - 1) / 2, p) {
        0 => 0,
        1 => 1,
        _ => -1,
    }
}

fn squarefree(n: i64) -> bool {
    (2..).take_while(|p| p * p <= n).all(|p| n % (p * p) != 0)
}

/// Counts reduced forms `(a, b, c)` with `b^2 - 4ac = -D` directly.
fn brute_class_number(disc: i64) -> usize {
    let mut h = 0;
    let mut a = 1;
    while 3 * a * a <= disc {
        for b in -a + 1..=a {
            let num = b * b + disc;
            if num % (4 * a) != 0 {
                continue;
            }
            let c = num / (4 * a);
            if c < a || (c == a && b < 0) {
                continue;
            }
            let g = [a, b.abs(), c].into_iter().fold(0, num_gcd);
            if g == 1 {
                h += 1;
            }
        }
        a += 1;
    }
    h
}

fn num_gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        num_gcd(b, a % b)
    }
}

fn character(disc: i64, twist: i64, k: u32) -> EpsCharacter {
    EpsCharacter::new(&QuadraticField::new(disc).unwrap(), twist, k, 0).unwrap()
}

#[test]
fn kronecker_matches_euler_criterion_on_odd_primes() {
    for p in (3..200).filter(|&p| is_prime(p)) {
        for a in -60..60 {
            assert_eq!(kronecker(a, p), legendre(a, p), "({a}/{p})");
        }
    }
    assert_eq!(kronecker(-7, 1), 1);
    assert_eq!(kronecker(-7, 3), -1);
    assert_eq!(kronecker(-7, 2), 1);
}

#[test]
fn kronecker_at_two_on_discriminants_counts_square_roots() {
    for a in (-99i64..100).filter(|a| a.rem_euclid(4) == 1) {
        let has_root = (0..8).any(|x: i64| (x * x - a).rem_euclid(8) == 0);
        assert_eq!(kronecker(a, 2) == 1, has_root, "a = {a}");
    }
}

#[test]
fn fundamental_discriminants_by_definition() {
    for m in -400i64..=400 {
        let expect = if m == 0 || m == 1 {
            false
        } else if m.rem_euclid(4) == 1 {
            squarefree(m.abs())
        } else if m % 4 == 0 {
            let q = m / 4;
            (q.rem_euclid(4) == 2 || q.rem_euclid(4) == 3) && squarefree(q.abs())
        } else {
            false
        };
        assert_eq!(is_fundamental_discriminant(m), expect, "{m}");
    }
}

#[test]
fn reduced_form_count_matches_brute_enumeration() {
    for disc in 5..=500 {
        if QuadraticField::new(disc).is_err() {
            continue;
        }
        assert_eq!(reduced_forms(disc).len(), brute_class_number(disc), "D = {disc}");
    }
    assert_eq!(brute_class_number(7), 1);
    assert_eq!(brute_class_number(23), 3);
    assert_eq!(brute_class_number(47), 5);
}

#[test]
fn ideal_generation_examples() {
    let f7 = QuadraticField::new(7).unwrap();
    let root = f7.sqrt_neg_d();
    assert_eq!(ideal_from_generators(&f7, &[root, QuadInt::rational(4)]).unwrap().a, 1);
    assert_eq!(ideal_from_generators(&f7, &[root]).unwrap().a, 7);
    let f8 = QuadraticField::new(8).unwrap();
    let ideal = ideal_from_generators(&f8, &[f8.sqrt_neg_d().scale(2), QuadInt::rational(8)]).unwrap();
    assert_eq!(ideal.norm(), 32);
}

#[test]
fn lattice_enumeration_matches_exhaustive_scan() {
    for disc in [7, 8, 15, 23, 24, 163] {
        let field = QuadraticField::new(disc).unwrap();
        let bound = 300.0;
        let mut got: Vec<LatticePoint> = principal_lattice_points(&field, bound).collect();
        let mut want = Vec::new();
        for u in 1..=40 {
            for v in -20i64..=20 {
                let n4 = u * u + disc * v * v;
                if v != 0 && n4 % 4 == 0 && n4 as f64 / 4.0 <= bound {
                    want.push(LatticePoint { u, v });
                }
            }
        }
        got.sort_by_key(|p| (p.u, p.v));
        want.sort_by_key(|p| (p.u, p.v));
        assert_eq!(got, want, "D = {disc}");
    }
    let f7 = QuadraticField::new(7).unwrap();
    let small: Vec<_> = principal_lattice_points(&f7, 2.0).collect();
    assert_eq!(small.len(), 2);
    assert!(principal_lattice_points(&f7, 1.9).next().is_none());
}

#[test]
fn chi_on_rational_integers() {
    for (disc, twist, k) in [(7, 1, 1), (7, 5, 2), (23, -3, 1), (8, 5, 3), (24, 1, 1)] {
        let ch = character(disc, twist, k);
        for n in 1..60i64 {
            if num_gcd(n, 2 * disc * twist) != 1 {
                continue;
            }
            let chi = ch.chi_value(LatticePoint { u: 2 * n, v: 0 });
            let expect = kronecker(-disc, n) as f64 * (n as f64).powi(2 * k as i32 - 1);
            assert!((chi.re - expect).abs() < 1e-9 * expect.abs() && chi.im.abs() < 1e-9);
        }
    }
    assert_eq!(character(7, 1, 1).eps(QuadInt::rational(3)), -1);
}

#[test]
fn incomplete_gamma_ratio_against_quadrature() {
    for k in 1..=4u32 {
        for x in [0.0, 0.3, 1.0, 2.5, 7.0] {
            let tail = integrate(|t: f64| t.powi(k as i32 - 1) * (-t).exp(), x, x + 60.0, 1e-13).unwrap();
            let gamma_k: f64 = (1..k).map(|j| j as f64).product();
            assert!((inc_gamma_ratio(k, x) - tail.value / gamma_k).abs() < 1e-11, "k={k}, x={x}");
        }
    }
    assert!((inc_gamma_ratio(2, 1.0) - 2.0 / std::f64::consts::E).abs() < 1e-15);
    let e1 = integrate(|t: f64| (-t).exp() / t, 0.5, 60.0, 1e-13).unwrap().value;
    assert!((exp_integral_e1(0.5) - e1).abs() < 1e-11);
}

#[test]
fn class_number_formula_values() {
    let l7 = l_d_at_1(7, 1, 1e-12).unwrap().value;
    assert!((l7 - PI / 7f64.sqrt()).abs() < 1e-10);
    let l23 = l_d_at_1(23, 1, 1e-12).unwrap().value;
    assert!((l23 - 3.0 * PI / 23f64.sqrt()).abs() < 1e-10);
    let l75 = l_d_at_1(7, 5, 1e-12).unwrap().value;
    let factor = 1.0 - kronecker(-7, 5) as f64 / 5.0;
    assert!((l75 - PI / 7f64.sqrt() * factor).abs() < 1e-10);
}

#[test]
fn l_at_one_against_abel_partial_sums() {
    for (disc, twist) in [(11, 1), (31, 5), (56, -3), (95, 1), (163, 8)] {
        let fast = l_d_at_1(disc, twist, 1e-10).unwrap().value;
        let (slow, bound) = l_d_at_1_abel(&DirichletData::new(disc, twist).unwrap(), 2_000_000);
        assert!((fast - slow).abs() <= bound + 1e-12, "({disc},{twist})");
    }
}

#[test]
fn coefficients_match_squarefree_divisor_sum() {
    for (disc, twist) in [(7, 1), (8, 5), (23, -3), (24, 1)] {
        let a = an_coefficients(disc, twist, 3000).unwrap();
        let chi = |m: i64| if num_gcd(m, twist) == 1 { kronecker(-disc, m) as i64 } else { 0 };
        for n in 1..=3000i64 {
            let divisor_sum: i64 = (1..=n).filter(|m| n % m == 0 && squarefree(*m)).map(|m| chi(n / m)).sum();
            assert_eq!(a[n as usize], divisor_sum, "({disc},{twist}) n={n}");
        }
    }
}

#[test]
fn published_constants() {
    assert!(miller_yang_i(4.0, 1e-10).unwrap() > 0.0351);
    for x in [0.5, 1.0, 2.0, 8.0, 32.0] {
        assert!(miller_yang_i(x, 1e-10).unwrap() > 0.0, "I({x})");
    }
    let a = an_coefficients(23, 5, 100_000).unwrap();
    assert_eq!(a[1], 1);
    assert!(a.iter().all(|&x| x >= 0));
}

#[test]
fn canonical_characters_validate() {
    let f7 = QuadraticField::new(7).unwrap();
    assert!(validate_character(&EpsCharacter::new(&f7, 1, 1, 0).unwrap()).passed());
    let f8 = QuadraticField::new(8).unwrap();
    for variant in 0..EpsCharacter::variant_count(&f8).unwrap() {
        assert!(validate_character(&EpsCharacter::new(&f8, 1, 1, variant).unwrap()).passed());
    }
    let mut bad = EpsCharacter::new(&f7, 1, 1, 0).unwrap();
    bad.flip_entry(bad.first_unit_index());
    let report = validate_character(&bad);
    let failure = report.first_failure().expect("corruption detected");
    assert_eq!(failure.name, "homomorphism");
    assert!(failure.witness.is_some());
}

#[test]
fn central_value_small_examples() {
    let ch = character(7, 1, 1);
    assert_eq!(root_number(&ch, 1e-8).unwrap().w, 1);
    let report = central_value(&ch, 1e-8).unwrap();
    assert!(report.l_central.unwrap() > 0.0);
    let ev = Evaluator::new(&ch, 1e-8).unwrap();
    let l = 2.0 * (ev.i1().value + ev.i2().value);
    for x in [0.5, 1.0, 2.0] {
        let (a, b) = ev.lambda_smoothed(x).unwrap();
        assert!((a.value + b.value - l).abs() < 3e-8);
    }
}

#[test]
fn char_sum_examples() {
    let ch = character(7, 1, 1);
    let r = char_sum(&ch, 1, 1, 4).unwrap();
    assert_eq!((r.sum_value, r.terms), (0, 2));
    assert_eq!(char_sum(&ch, 1, 5, 5).unwrap().sum_value, 0);
    for (disc, twist) in [(7, 1), (23, 5)] {
        let r = dyadic_consistency(&character(disc, twist, 1), 1e-8).unwrap();
        assert!(r.blocks as f64 <= r.block_bound);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn kronecker_is_multiplicative_in_the_top(a in -500i64..500, b in -500i64..500, n in 1i64..300) {
        prop_assert_eq!(kronecker(a * b, n), kronecker(a, n) * kronecker(b, n));
    }

    #[test]
    fn norm_is_multiplicative(x1 in -50i64..50, y1 in -50i64..50, x2 in -50i64..50, y2 in -50i64..50,
                              di in 0usize..5) {
        let disc = [7, 8, 23, 24, 163][di];
        let f = QuadraticField::new(disc).unwrap();
        let (p, q) = (QuadInt::new(x1, y1), QuadInt::new(x2, y2));
        prop_assert_eq!(f.norm(f.mul(p, q)), f.norm(p) * f.norm(q));
    }

    #[test]
    fn eps_is_multiplicative(x1 in -80i64..80, y1 in -80i64..80, x2 in -80i64..80, y2 in -80i64..80,
                             case in 0usize..6) {
        let (disc, twist) = [(7, 1), (7, 5), (8, 1), (23, -3), (24, 5), (40, -7)][case];
        let ch = character(disc, twist, 1);
        let f = ch.field();
        let (p, q) = (QuadInt::new(x1, y1), QuadInt::new(x2, y2));
        prop_assert_eq!(ch.eps(f.mul(p, q)), ch.eps(p) * ch.eps(q));
        prop_assert_eq!(ch.eps(f.conj(p)), ch.eps(p));
    }

    #[test]
    fn coefficients_are_multiplicative(m in 1usize..300, n in 1usize..300) {
        prop_assume!(num_gcd(m as i64, n as i64) == 1);
        let a = an_coefficients(11, -4, 90_000).unwrap();
        prop_assert_eq!(a[m * n], a[m] * a[n]);
    }

    #[test]
    fn reduction_identity_holds(v in -40i64..40, m in 1i64..600, len in 0i64..600, case in 0usize..8) {
        let (disc, twist) = [(7, 1), (11, 5), (23, -3), (8, 1), (24, 5), (15, -7), (40, -3), (31, 8)][case];
        let ch = character(disc, twist, 1);
        let fac = factor_eps(&ch).unwrap();
        let r = reduction_identity_check(&ch, &fac, v, m, m + len).unwrap();
        prop_assert_eq!(r.direct, r.reduced);
        let direct = char_sum(&ch, v, m, m + len).unwrap();
        prop_assert!(direct.sum_value.abs() <= direct.terms);
    }
}
