//! The auxiliary integral
//! `I(x) = (1/(2 pi i)) int_(2) x^(s-1) Gamma(s) zeta(4s-2) / zeta(2s-1) ds / (s-1)^2`,
//! evaluated on the contour and, independently, through the Liouville
//! expansion `I(x) = sum_m lambda(m) E_1(m^2 / x) / m`.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::contour::{sup_with_decay, vertical_line_integral, AccuracyBudget, DecayCertificate};
use super::special::{exp_integral_e1, ln_gamma};
use super::zeta::zeta_line;
use crate::error::{Error, Result};

const SIGMA: f64 = 2.0;
const ZETA3: f64 = 1.202_056_903_159_594_3;

#[derive(Clone, Copy, Debug)]
pub struct MillerYangValue {
    pub value: f64,
    pub imaginary_residue: f64,
    pub budget: AccuracyBudget,
}

fn integrand(x: f64, s: Complex64) -> Result<Complex64> {
    let num = zeta_line(4.0 * s - 2.0)?;
    let den = zeta_line(2.0 * s - 1.0)?;
    let w = s - 1.0;
    Ok(((s - 1.0) * x.ln() + ln_gamma(s)).exp() * num / den / (w * w))
}

/// `I(x)` on the line `Re s = 2` for `x > 0`.
pub fn miller_yang_detailed(x: f64, tol: f64) -> Result<MillerYangValue> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("I(x) needs x > 0 (x={x})")));
    }
    let rate = PI / 2.0 - 0.25;
    // |zeta(4s-2)| <= zeta(6) and |1/zeta(2s-1)| <= zeta(3)/zeta(6) on the line
    let shape = sup_with_decay(
        |t| ln_gamma(Complex64::new(SIGMA, t)).re.exp() / (1.0 + t * t),
        rate,
        60.0,
    );
    let cert = DecayCertificate {
        amplitude: x * ZETA3 * shape,
        rate,
    };
    // evaluation failures inside the quadrature surface as NaN and then as a tolerance error
    let f = |s: Complex64| integrand(x, s).unwrap_or(Complex64::new(f64::NAN, f64::NAN));
    let r = vertical_line_integral(f, SIGMA, 1.0, cert, tol)?;
    if r.value.im.abs() > tol {
        return Err(Error::Tolerance {
            context: "imaginary part of I(x)",
            requested: tol,
            achieved: r.value.im.abs(),
        });
    }
    Ok(MillerYangValue {
        value: r.value.re,
        imaginary_residue: r.value.im,
        budget: r.budget,
    })
}

pub fn miller_yang_i(x: f64, tol: f64) -> Result<f64> {
    Ok(miller_yang_detailed(x, tol)?.value)
}

/// Liouville function up to `n`.
pub fn liouville_table(n: usize) -> Vec<i8> {
    let mut omega = vec![0u8; n + 1];
    let mut rest: Vec<usize> = (0..=n).collect();
    for p in 2..=n {
        if rest[p] == p && omega[p] == 0 {
            // p is prime (untouched so far)
            let mut pk = p;
            while pk <= n {
                for m in (pk..=n).step_by(pk) {
                    omega[m] += 1;
                    rest[m] /= p;
                }
                if pk > n / p {
                    break;
                }
                pk *= p;
            }
        }
    }
    (0..=n)
        .map(|m| if omega[m] % 2 == 0 { 1 } else { -1 })
        .collect()
}

/// `I(x)` from `sum_m lambda(m) E_1(m^2/x) / m`, truncated once the tail is below `tol`.
pub fn miller_yang_series(x: f64, tol: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("I(x) needs x > 0 (x={x})")));
    }
    // with y = M^2/x >= 1 the tail is at most int_M^inf E_1(t^2/x) dt/t <= e^(-y) / (2 y^2)
    let mut m_max = (x.sqrt() * 2.0).ceil() as usize + 2;
    loop {
        let y = (m_max * m_max) as f64 / x;
        if y >= 1.0 && (-y).exp() / (2.0 * y * y) <= tol / 2.0 {
            break;
        }
        m_max *= 2;
    }
    let lambda = liouville_table(m_max);
    Ok((1..=m_max)
        .map(|m| lambda[m] as f64 * exp_integral_e1((m * m) as f64 / x) / m as f64)
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn liouville_values() {
        let l = liouville_table(12);
        assert_eq!(&l[1..], &[1, -1, -1, 1, -1, 1, -1, -1, 1, 1, -1, -1]);
    }

    #[test]
    fn contour_matches_series() {
        for x in [0.05, 0.5, 4.0, 30.0, 300.0] {
            let contour = miller_yang_i(x, 1e-10).unwrap();
            let series = miller_yang_series(x, 1e-12).unwrap();
            assert!((contour - series).abs() < 1e-9, "x={x}: {contour} vs {series}");
        }
    }

    #[test]
    fn small_x_decay() {
        // only m = 1 matters: I(x) ~ E_1(1/x)
        let x = 0.05;
        let v = miller_yang_i(x, 1e-12).unwrap();
        assert!((v - exp_integral_e1(1.0 / x)).abs() < 1e-12);
    }

    #[test]
    fn nonpositive_argument_is_rejected() {
        assert!(miller_yang_i(0.0, 1e-8).is_err());
    }
}
