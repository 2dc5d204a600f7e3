//! Hurwitz zeta by Euler-Maclaurin summation with an explicit remainder
//! bound, plus the first two Stieltjes constants `gamma_0(a)`, `gamma_1(a)`
//! defined by `zeta(s, a) = 1/(s-1) + gamma_0(a) - gamma_1(a) (s-1) + ...`.

use num_complex::Complex64;

use super::special::BERNOULLI_EVEN;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct ZetaValue {
    pub value: Complex64,
    pub error_bound: f64,
}

const EM_TERMS: usize = 12;

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// `(e^z - 1)` without cancellation for small `|z|`.
fn expm1(z: Complex64) -> Complex64 {
    if z.norm() < 0.5 {
        let mut term = z;
        let mut sum = z;
        for n in 2..30 {
            term *= z / n as f64;
            sum += term;
            if term.norm() < 1e-18 * sum.norm() {
                break;
            }
        }
        sum
    } else {
        z.exp() - 1.0
    }
}

/// Euler-Maclaurin evaluation. When `regular` is set the polar part
/// `1/(s-1)` is removed analytically, which keeps the result accurate near `s = 1`.
fn hurwitz_em(s: Complex64, a: f64, regular: bool) -> Result<ZetaValue> {
    if !(a > 0.0) {
        return Err(Error::Domain(format!("Hurwitz zeta needs a > 0 (a={a})")));
    }
    let one = Complex64::new(1.0, 0.0);
    if (s - one).norm() == 0.0 && !regular {
        return Err(Error::Domain("Hurwitz zeta has a pole at s = 1".into()));
    }
    let sigma = s.re;
    let mut n = (s.norm().ceil() as usize + 10).max(10);
    loop {
        let t = n as f64 + a;
        let lt = t.ln();
        let mut sum = Complex64::new(0.0, 0.0);
        for j in 0..n {
            sum += (-s * (j as f64 + a).ln()).exp();
        }
        let t_pow = (-s * lt).exp(); // t^-s
        let tail = if !regular {
            t_pow * t / (s - one)
        } else if (s - one).norm() == 0.0 {
            Complex64::from(-lt)
        } else {
            // (t^(1-s) - 1) / (s - 1)
            expm1((one - s) * lt) / (s - one)
        };
        sum += tail + t_pow * 0.5;
        // sum_j B_2j / (2j)! * (s)_(2j-1) * t^(-s-2j+1)
        let mut rising = s; // (s)_1
        let mut power = t_pow / t; // t^(-s-1)
        for j in 1..=EM_TERMS {
            let b = BERNOULLI_EVEN[j - 1];
            sum += rising * power * (b / factorial(2 * j));
            // advance to (s)_(2j+1) and t^(-s-2j-1)
            rising *= (s + (2 * j - 1) as f64) * (s + (2 * j) as f64);
            power /= t * t;
        }
        // rising = (s)_(2M+1), power = t^(-s-2M-1)
        let m = EM_TERMS;
        let bound = (rising * power).norm() * BERNOULLI_EVEN[m].abs() / factorial(2 * m + 2)
            * (s + (2 * m + 1) as f64).norm()
            / (sigma + (2 * m + 1) as f64);
        let target = 1e-15 * sum.norm().max(1.0);
        if (bound <= target && sigma + (2 * m + 1) as f64 > 0.0) || n > 2_000_000 {
            return Ok(ZetaValue {
                value: sum,
                error_bound: bound + 1e-16 * n as f64 * sum.norm(),
            });
        }
        n *= 2;
    }
}

/// `zeta(s, a)` for complex `s != 1` and `a > 0`.
pub fn hurwitz_zeta(s: Complex64, a: f64) -> Result<ZetaValue> {
    hurwitz_em(s, a, false)
}

/// `zeta(s, a) - 1/(s-1)`, analytic at `s = 1`.
pub fn hurwitz_zeta_regular(s: Complex64, a: f64) -> Result<ZetaValue> {
    hurwitz_em(s, a, true)
}

/// `zeta(s)` on a half-plane `Re s >= 2.5` where it is bounded away from zero.
pub fn zeta_line(s: Complex64) -> Result<Complex64> {
    if s.re < 2.5 {
        return Err(Error::Domain(format!("zeta_line needs Re s >= 2.5 (s={s})")));
    }
    let z = hurwitz_zeta(s, 1.0)?;
    if z.error_bound > 1e-12 {
        return Err(Error::Tolerance {
            context: "zeta remainder",
            requested: 1e-12,
            achieved: z.error_bound,
        });
    }
    // |zeta(s)| >= zeta(2 sigma) / zeta(sigma) >= 0.5 for sigma >= 2.5
    if z.value.norm() < 0.5 {
        return Err(Error::Domain(format!("|zeta({s})| unexpectedly small")));
    }
    Ok(z.value)
}

/// `(gamma_0(a), gamma_1(a), error bound)` for `a > 0`; `gamma_0(a) = -psi(a)`.
pub fn stieltjes_01(a: f64) -> (f64, f64, f64) {
    assert!(a > 0.0, "Stieltjes constants need a > 0");
    const N: usize = 24;
    const M: usize = 10;
    let mut g0 = 0.0;
    let mut g1 = 0.0;
    for n in 0..N {
        let x = n as f64 + a;
        g0 += 1.0 / x;
        g1 += x.ln() / x;
    }
    let t = N as f64 + a;
    let lt = t.ln();
    g0 += -lt + 0.5 / t;
    g1 += -0.5 * lt * lt + 0.5 * lt / t;
    let mut harmonic = 1.0; // H_(2j-1)
    let mut tp = 1.0 / (t * t);
    let mut last = 0.0f64;
    for j in 1..=M {
        let b = BERNOULLI_EVEN[j - 1] / (2 * j) as f64;
        g0 += b * tp;
        g1 += b * (lt - harmonic) * tp;
        last = (b * tp).abs().max((b * (lt - harmonic) * tp).abs());
        harmonic += 1.0 / (2 * j) as f64 + 1.0 / (2 * j + 1) as f64;
        tp /= t * t;
    }
    (g0, g1, last + 1e-16 * N as f64)
}
