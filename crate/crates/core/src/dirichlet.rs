//! The rational side: `L_D(s) = sum_((n,d)=1) (-D/n) n^-s`, its value and
//! derivative at `s = 1`, the coefficients of `zeta(s) L_D(s) / zeta(2s)`, and
//! `Lambda_k(s) = Q^(s-1) Gamma(s+k-1)/Gamma(k) L_D(2s-1)` with `Q = D*|d|/(2 pi)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::special::{digamma_int, gamma_int, ln_gamma_real};
use crate::kernels::zeta::{hurwitz_zeta_regular, stieltjes_01};
use crate::quad::{gcd, is_fundamental_discriminant, kronecker, QuadraticField};

/// Character `n -> (-D/n) [gcd(n, d) = 1]`, stored over one period `D|d|`.
#[derive(Clone, Debug)]
pub struct DirichletData {
    disc: i64,
    twist: i64,
    values: Vec<i8>,
}

impl DirichletData {
    pub fn new(disc: i64, twist: i64) -> Result<Self> {
        QuadraticField::new(disc)?;
        if twist != 1 && !is_fundamental_discriminant(twist) {
            return Err(Error::invalid(format!("twist {twist} is not a fundamental discriminant")));
        }
        if gcd(twist, disc) != 1 {
            return Err(Error::invalid(format!("twist {twist} is not prime to D = {disc}")));
        }
        let period = disc * twist.abs();
        let values = (0..period)
            .map(|n| if gcd(n, twist) == 1 { kronecker(-disc, n) } else { 0 })
            .collect();
        Ok(DirichletData { disc, twist, values })
    }

    pub fn disc(&self) -> i64 {
        self.disc
    }

    pub fn twist(&self) -> i64 {
        self.twist
    }

    pub fn period(&self) -> usize {
        self.values.len()
    }

    pub fn chi(&self, n: i64) -> i8 {
        self.values[n.rem_euclid(self.values.len() as i64) as usize]
    }

    /// Primes dividing `d`.
    pub fn twist_primes(&self) -> Vec<i64> {
        prime_factors(self.twist.unsigned_abs() as i64)
    }

    /// `max S - min S` over partial sums `S(m) = sum_(n<=m) chi(n)`; bounds every
    /// interval sum of the character.
    pub fn partial_sum_spread(&self) -> i64 {
        let (mut s, mut lo, mut hi) = (0i64, 0i64, 0i64);
        for n in 1..=self.values.len() as i64 {
            s += self.chi(n) as i64;
            lo = lo.min(s);
            hi = hi.max(s);
        }
        hi - lo
    }

    /// `L_D(s)` for real or complex `s` from the full period via Hurwitz zeta.
    /// Slow and used as an independent check of the primitive-plus-Euler route.
    pub fn l_value(&self, s: Complex64) -> Result<Complex64> {
        hurwitz_l(&self.values, s)
    }
}

fn prime_factors(mut n: i64) -> Vec<i64> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            out.push(p);
            while n % p == 0 {
                n /= p;
            }
        }
        p += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// `q^-s sum_a chi(a) zeta(s, a/q)` for a non-principal character of period `q`;
/// the polar parts cancel so the regularized Hurwitz zeta is used.
fn hurwitz_l(values: &[i8], s: Complex64) -> Result<Complex64> {
    let q = values.len() as f64;
    let mut sum = Complex64::new(0.0, 0.0);
    for (a, &c) in values.iter().enumerate().skip(1) {
        if c != 0 {
            sum += hurwitz_zeta_regular(s, a as f64 / q)?.value * c as f64;
        }
    }
    if values[0] != 0 {
        sum += hurwitz_zeta_regular(s, 1.0)?.value * values[0] as f64;
    }
    Ok(sum * (-s * q.ln()).exp())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LValueAt1 {
    /// `L_D(1)`, including the Euler factors at primes dividing `d`.
    pub value: f64,
    /// `L(1, chi_-D)`.
    pub primitive: f64,
    /// `prod_(p | d) (1 - (-D/p)/p)`.
    pub euler_factor: f64,
    pub error_bound: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LDerivativeAt1 {
    pub value: f64,
    pub primitive: f64,
    pub error_bound: f64,
}

/// `(L(1, chi_-D), L'(1, chi_-D), error)` from Stieltjes constants of `a/D`.
fn primitive_at_1(disc: i64) -> (f64, f64, f64) {
    let q = disc as f64;
    let lq = q.ln();
    let (mut l, mut dl, mut err) = (0.0, 0.0, 0.0);
    for a in 1..disc {
        let c = kronecker(-disc, a);
        if c == 0 {
            continue;
        }
        let (g0, g1, e) = stieltjes_01(a as f64 / q);
        l += c as f64 * g0;
        dl += c as f64 * (-g1 - lq * g0);
        err += e * (1.0 + lq);
    }
    (l / q, dl / q, (err + 1e-15 * disc as f64) / q)
}

fn check_budget(context: &'static str, tol: f64, achieved: f64) -> Result<()> {
    if achieved > tol {
        return Err(Error::Tolerance {
            context,
            requested: tol,
            achieved,
        });
    }
    Ok(())
}

pub fn l_d_at_1(disc: i64, twist: i64, tol: f64) -> Result<LValueAt1> {
    let data = DirichletData::new(disc, twist)?;
    let (primitive, _, err) = primitive_at_1(disc);
    let euler_factor: f64 = data
        .twist_primes()
        .iter()
        .map(|&p| 1.0 - kronecker(-disc, p) as f64 / p as f64)
        .product();
    let error_bound = err * euler_factor.abs().max(1.0);
    check_budget("L_D(1)", tol, error_bound)?;
    Ok(LValueAt1 {
        value: primitive * euler_factor,
        primitive,
        euler_factor,
        error_bound,
    })
}

pub fn l_d_derivative_at_1(disc: i64, twist: i64, tol: f64) -> Result<LDerivativeAt1> {
    let data = DirichletData::new(disc, twist)?;
    let (l, dl, err) = primitive_at_1(disc);
    // E(s) = prod (1 - chi(p) p^-s), E'(1)/E(1) = sum chi(p) log p / (p - chi(p))
    let mut euler = 1.0;
    let mut log_derivative = 0.0;
    for p in data.twist_primes() {
        let c = kronecker(-disc, p) as f64;
        let pf = p as f64;
        euler *= 1.0 - c / pf;
        log_derivative += c * pf.ln() / (pf - c);
    }
    let value = euler * (dl + l * log_derivative);
    let error_bound = err * (1.0 + log_derivative.abs()) * euler.abs().max(1.0);
    check_budget("L_D'(1)", tol, error_bound)?;
    Ok(LDerivativeAt1 {
        value,
        primitive: dl,
        error_bound,
    })
}

/// Abel-summation estimate of `L_D(1)` from the first `terms` terms, with the
/// certified tail bound `spread / (terms + 1)`.
pub fn l_d_at_1_abel(data: &DirichletData, terms: usize) -> (f64, f64) {
    let value = (1..=terms as i64).map(|n| data.chi(n) as f64 / n as f64).sum();
    (value, data.partial_sum_spread() as f64 / (terms + 1) as f64)
}

/// Same for `L_D'(1) = -sum chi(n) log n / n`; the tail bound needs `terms >= 3`.
pub fn l_d_derivative_at_1_abel(data: &DirichletData, terms: usize) -> (f64, f64) {
    let value = -(1..=terms as i64)
        .map(|n| data.chi(n) as f64 * (n as f64).ln() / n as f64)
        .sum::<f64>();
    let next = (terms + 1) as f64;
    (value, data.partial_sum_spread() as f64 * next.ln() / next)
}

/// `a_0 = 0, a_1, ..., a_n_max` with `zeta(s) L_D(s) / zeta(2s) = sum a_n n^-s`.
///
/// Each prime power gets the coefficient of `x^j` in `(1 + x)/(1 - chi(p) x)`,
/// which is `chi(p)^j + chi(p)^(j-1)`.
pub fn an_coefficients(disc: i64, twist: i64, n_max: usize) -> Result<Vec<i64>> {
    if n_max == 0 {
        return Err(Error::invalid("coefficient count must be at least 1"));
    }
    let data = DirichletData::new(disc, twist)?;
    let mut spf = vec![0usize; n_max + 1];
    for p in 2..=n_max {
        if spf[p] == 0 {
            for m in (p..=n_max).step_by(p) {
                if spf[m] == 0 {
                    spf[m] = p;
                }
            }
        }
    }
    let mut a = vec![0i64; n_max + 1];
    a[1] = 1;
    for n in 2..=n_max {
        let p = spf[n];
        let mut m = n;
        let mut j = 0u32;
        while m % p == 0 {
            m /= p;
            j += 1;
        }
        let c = data.chi(p as i64) as i64;
        let local = c.pow(j) + c.pow(j - 1);
        a[n] = a[m] * local;
        if a[n] < 0 {
            return Err(Error::NegativeCoefficient { n, value: a[n] });
        }
    }
    Ok(a)
}

/// Direct Dirichlet convolution `1 * chi * mu_2` where `mu_2(m^2) = mu(m)`.
pub fn an_by_convolution(disc: i64, twist: i64, n_max: usize) -> Result<Vec<i64>> {
    let data = DirichletData::new(disc, twist)?;
    let mut one_chi = vec![0i64; n_max + 1];
    for a in 1..=n_max {
        for b in (a..=n_max).step_by(a) {
            one_chi[b] += data.chi((b / a) as i64) as i64;
        }
    }
    let mut mu = vec![1i64; n_max + 1];
    let mut composite = vec![false; n_max + 1];
    for p in 2..=n_max {
        if !composite[p] {
            for m in (p..=n_max).step_by(p) {
                if m > p {
                    composite[m] = true;
                }
                mu[m] = -mu[m];
            }
            if let Some(p2) = p.checked_mul(p) {
                for m in (p2..=n_max).step_by(p2) {
                    mu[m] = 0;
                }
            }
        }
    }
    let mut out = vec![0i64; n_max + 1];
    let mut m = 1;
    while m * m <= n_max {
        if mu[m] != 0 {
            let sq = m * m;
            for k in 1..=n_max / sq {
                out[k * sq] += mu[m] * one_chi[k];
            }
        }
        m += 1;
    }
    Ok(out)
}

/// `Q = D* |d| / (2 pi)`.
pub fn analytic_conductor(disc: i64, twist: i64) -> f64 {
    let d_star = disc * gcd(2, disc);
    (d_star * twist.abs()) as f64 / (2.0 * PI)
}

/// `Lambda_k'(1) = (psi(k) + log Q) L_D(1) + 2 L_D'(1)`.
pub fn lambda_k_derivative_at_1(disc: i64, twist: i64, k: u32, tol: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::invalid("weight k must be at least 1"));
    }
    let l = l_d_at_1(disc, twist, tol / 4.0)?;
    let dl = l_d_derivative_at_1(disc, twist, tol / 4.0)?;
    let q = analytic_conductor(disc, twist);
    Ok((digamma_int(k) + q.ln()) * l.value + 2.0 * dl.value)
}

/// `Lambda_k(s)` for real `s` near 1, from the full-period Hurwitz route.
pub fn lambda_k(data: &DirichletData, k: u32, s: f64) -> Result<f64> {
    let q = analytic_conductor(data.disc(), data.twist());
    let l = data.l_value(Complex64::new(2.0 * s - 1.0, 0.0))?.re;
    let gamma_ratio = (ln_gamma_real(s + k as f64 - 1.0)).exp() / gamma_int(k);
    Ok(q.powf(s - 1.0) * gamma_ratio * l)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn l_at_1_examples() {
        let l = l_d_at_1(7, 1, 1e-12).unwrap();
        assert!((l.value - PI / 7f64.sqrt()).abs() < 1e-13);
        let l = l_d_at_1(23, 1, 1e-12).unwrap();
        assert!((l.value - 3.0 * PI / 23f64.sqrt()).abs() < 1e-13);
        let l = l_d_at_1(7, 5, 1e-12).unwrap();
        let expected = PI / 7f64.sqrt() * (1.0 - kronecker(-7, 5) as f64 / 5.0);
        assert!((l.value - expected).abs() < 1e-13);
        assert_eq!(l.euler_factor, 1.0 - kronecker(-7, 5) as f64 / 5.0);
    }

    #[test]
    fn primitive_route_matches_full_period_hurwitz() {
        for (disc, twist) in [(7, 1), (7, 5), (8, -3), (23, -4), (24, 5), (15, -7)] {
            let data = DirichletData::new(disc, twist).unwrap();
            let direct = data.l_value(Complex64::new(1.0, 0.0)).unwrap().re;
            let l = l_d_at_1(disc, twist, 1e-12).unwrap();
            assert!((direct - l.value).abs() < 1e-11, "({disc},{twist})");
        }
    }

    #[test]
    fn abel_route_is_within_its_certificate() {
        for (disc, twist) in [(7, 1), (11, 5), (24, 5)] {
            let data = DirichletData::new(disc, twist).unwrap();
            let (v, bound) = l_d_at_1_abel(&data, 200_000);
            let l = l_d_at_1(disc, twist, 1e-12).unwrap().value;
            assert!((v - l).abs() <= bound);
            let (dv, dbound) = l_d_derivative_at_1_abel(&data, 200_000);
            let dl = l_d_derivative_at_1(disc, twist, 1e-12).unwrap().value;
            assert!((dv - dl).abs() <= dbound);
        }
    }

    #[test]
    fn derivative_matches_richardson_difference() {
        for (disc, twist) in [(7, 1), (7, 5), (23, -4), (8, 5), (19, -8)] {
            let data = DirichletData::new(disc, twist).unwrap();
            let central = |h: f64| {
                let up = data.l_value(Complex64::new(1.0 + h, 0.0)).unwrap().re;
                let down = data.l_value(Complex64::new(1.0 - h, 0.0)).unwrap().re;
                (up - down) / (2.0 * h)
            };
            let h = 1e-2;
            let rich = (4.0 * central(h / 2.0) - central(h)) / 3.0;
            let dl = l_d_derivative_at_1(disc, twist, 1e-12).unwrap().value;
            assert!((rich - dl).abs() < 1e-6, "({disc},{twist}): {rich} vs {dl}");
        }
    }

    #[test]
    fn coefficient_examples() {
        let a = an_coefficients(7, 1, 100).unwrap();
        assert_eq!((a[1], a[2], a[3], a[7]), (1, 2, 0, 1));
        assert_eq!(a[4], 2);
        assert_eq!(a[49], 0);
        assert_eq!(a, an_by_convolution(7, 1, 100).unwrap());
    }

    #[test]
    fn euler_product_matches_convolution() {
        for (disc, twist) in [(7, 1), (8, 5), (11, -3), (23, 5), (24, -7)] {
            let a = an_coefficients(disc, twist, 10_000).unwrap();
            let b = an_by_convolution(disc, twist, 10_000).unwrap();
            assert_eq!(a, b, "({disc},{twist})");
            assert!(a.iter().all(|&x| x >= 0));
        }
    }

    #[test]
    fn lambda_derivative_matches_finite_difference() {
        for (disc, twist, k) in [(7, 1, 1), (7, 5, 2), (23, -4, 1), (8, -3, 3)] {
            let data = DirichletData::new(disc, twist).unwrap();
            let central = |h: f64| {
                (lambda_k(&data, k, 1.0 + h).unwrap() - lambda_k(&data, k, 1.0 - h).unwrap()) / (2.0 * h)
            };
            let h = 1e-2;
            let rich = (4.0 * central(h / 2.0) - central(h)) / 3.0;
            let closed = lambda_k_derivative_at_1(disc, twist, k, 1e-10).unwrap();
            assert!((rich - closed).abs() < 1e-6, "({disc},{twist},{k}): {rich} vs {closed}");
        }
    }

    #[test]
    fn lambda_derivative_grows_with_weight() {
        for (disc, twist) in [(7, 1), (23, 5), (8, -3)] {
            let l1 = lambda_k_derivative_at_1(disc, twist, 1, 1e-10).unwrap();
            let l = l_d_at_1(disc, twist, 1e-10).unwrap().value;
            for k in 2..5 {
                let lk = lambda_k_derivative_at_1(disc, twist, k, 1e-10).unwrap();
                let expected = (digamma_int(k) - digamma_int(1)) * l;
                assert!((lk - l1 - expected).abs() < 1e-10);
                assert!(lk >= l1);
            }
        }
    }

    #[test]
    fn class_numbers_from_l_values() {
        use crate::quad::class_number;
        for disc in (7..=500).filter(|d| d % 2 == 1 && is_fundamental_discriminant(-d)) {
            let field = QuadraticField::new(disc).unwrap();
            let l = l_d_at_1(disc, 1, 1e-10).unwrap().value;
            let h = (disc as f64).sqrt() * l / PI;
            assert!((h - h.round()).abs() < 1e-6);
            assert_eq!(h.round() as u64, class_number(&field), "D={disc}");
        }
    }

    #[test]
    fn interval_sums_are_bounded_by_the_spread() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for (disc, twist) in [(7, 1), (23, 5), (24, -7)] {
            let data = DirichletData::new(disc, twist).unwrap();
            let spread = data.partial_sum_spread();
            assert!(spread <= data.period() as i64);
            for _ in 0..200 {
                let a: i64 = rng.gen_range(0..10_000);
                let b: i64 = a + rng.gen_range(0..5_000);
                let s: i64 = (a + 1..=b).map(|n| data.chi(n) as i64).sum();
                assert!(s.abs() <= spread);
            }
        }
    }

    #[test]
    fn invalid_inputs() {
        assert!(l_d_at_1(4, 1, 1e-8).is_err());
        assert!(l_d_at_1(7, 7, 1e-8).is_err());
        assert!(an_coefficients(7, 1, 0).is_err());
    }
}
