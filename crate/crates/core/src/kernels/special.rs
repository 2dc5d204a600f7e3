//! Gamma-family special functions: complex log-gamma, digamma, the
//! regularized upper incomplete gamma at integer order, `E_1`, and the
//! logarithmic kernel `G_k(y) = int_y^inf e^(-t) t^(k-1) log(t/y) dt`.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::quadrature::integrate_pieces;
use crate::error::{Error, Result};

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `B_2, B_4, ..., B_30`.
pub(crate) const BERNOULLI_EVEN: [f64; 15] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
    854513.0 / 138.0,
    -236364091.0 / 2730.0,
    8553103.0 / 6.0,
    -23749461029.0 / 870.0,
    8615841276005.0 / 14322.0,
];

/// `ln Gamma(z)`, principal branch for `Re z > 0`.
pub fn ln_gamma(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        // reflection; only used for sanity checks away from the poles
        let s = (Complex64::from(PI) * z).sin();
        return Complex64::from(PI.ln()) - s.ln() - ln_gamma(1.0 - z);
    }
    let mut shift = Complex64::new(0.0, 0.0);
    let mut w = z;
    while w.re < 15.0 {
        shift += w.ln();
        w += 1.0;
    }
    let inv = 1.0 / w;
    let inv2 = inv * inv;
    let mut series = Complex64::new(0.0, 0.0);
    let mut p = inv;
    for (j, b) in BERNOULLI_EVEN.iter().take(10).enumerate() {
        let two_j = 2.0 * (j as f64 + 1.0);
        series += p * (*b / (two_j * (two_j - 1.0)));
        p *= inv2;
    }
    (w - 0.5) * w.ln() - w + 0.5 * (2.0 * PI).ln() + series - shift
}

pub fn gamma(z: Complex64) -> Complex64 {
    ln_gamma(z).exp()
}

pub fn ln_gamma_real(x: f64) -> f64 {
    ln_gamma(Complex64::new(x, 0.0)).re
}

/// `(k-1)!` as a float.
pub fn gamma_int(k: u32) -> f64 {
    (1..k).map(f64::from).product()
}

/// `psi(x)` for real `x > 0`.
pub fn digamma(x: f64) -> f64 {
    assert!(x > 0.0, "digamma needs x > 0");
    let mut acc = 0.0;
    let mut y = x;
    while y < 12.0 {
        acc -= 1.0 / y;
        y += 1.0;
    }
    let inv2 = 1.0 / (y * y);
    let mut p = inv2;
    let mut series = 0.0;
    for (j, b) in BERNOULLI_EVEN.iter().take(8).enumerate() {
        series += b / (2.0 * (j as f64 + 1.0)) * p;
        p *= inv2;
    }
    acc + y.ln() - 0.5 / y - series
}

/// `psi(k) = -gamma + H_(k-1)`.
pub fn digamma_int(k: u32) -> f64 {
    -EULER_GAMMA + (1..k).map(|j| 1.0 / j as f64).sum::<f64>()
}

/// `Gamma(k, x) / Gamma(k) = e^(-x) sum_(j<k) x^j / j!` for integer `k >= 1`, `x >= 0`.
pub fn inc_gamma_ratio(k: u32, x: f64) -> f64 {
    assert!(k >= 1, "order must be positive");
    if x <= 0.0 {
        return 1.0;
    }
    // summed in log space so that large x does not underflow e^(-x) prematurely
    let lx = x.ln();
    let mut log_term = -x;
    let mut sum = 0.0;
    for j in 0..k {
        sum += log_term.exp();
        log_term += lx - ((j + 1) as f64).ln();
    }
    sum.min(1.0)
}

/// Exponential integral `E_1(x) = int_x^inf e^(-t)/t dt`, `x > 0`.
pub fn exp_integral_e1(x: f64) -> f64 {
    assert!(x > 0.0, "E1 needs x > 0");
    if x <= 1.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for n in 1..60 {
            term *= -x / n as f64;
            let add = term / n as f64;
            sum += add;
            if add.abs() < 1e-18 * sum.abs().max(1e-300) {
                break;
            }
        }
        -EULER_GAMMA - x.ln() - sum
    } else {
        // modified Lentz on the continued fraction
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let an = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (an * d + b);
            c = b + an / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h * (-x).exp()
    }
}

/// `G_k(y) / Gamma(k) = E_1(y) + sum_(j=1)^(k-1) (Gamma(j, y) / Gamma(j)) / j`.
pub fn log_kernel_ratio(k: u32, y: f64) -> Result<f64> {
    if !(y > 0.0) || k == 0 {
        return Err(Error::Domain(format!("log kernel needs y > 0 and k >= 1 (y={y}, k={k})")));
    }
    let mut value = exp_integral_e1(y);
    for j in 1..k {
        value += inc_gamma_ratio(j, y) / j as f64;
    }
    Ok(value)
}

/// `G_k(y)` itself.
pub fn log_kernel(k: u32, y: f64) -> Result<f64> {
    Ok(gamma_int(k) * log_kernel_ratio(k, y)?)
}

/// `G_k(y) / Gamma(k)` by quadrature of `int_y^inf (Gamma(k,t)/Gamma(k)) dt / t`.
pub fn log_kernel_ratio_quadrature(k: u32, y: f64, tol: f64) -> Result<f64> {
    if !(y > 0.0) || k == 0 {
        return Err(Error::Domain(format!("log kernel needs y > 0 and k >= 1 (y={y}, k={k})")));
    }
    // int_T^inf ratio(k,t)/t dt <= k ratio(k+1, T) / T
    let mut upper = (y * 2.0).max(k as f64 + 10.0);
    while k as f64 * inc_gamma_ratio(k + 1, upper) / upper > tol / 2.0 {
        upper *= 1.5;
    }
    // t = y e^u turns dt/t into du
    let span = (upper / y).ln();
    let pieces = (span.ceil() as usize).clamp(1, 400);
    let q = integrate_pieces(|u: f64| inc_gamma_ratio(k, y * u.exp()), 0.0, span, pieces, tol / 2.0)?;
    Ok(q.value)
}

/// `G_k(y) / Gamma(k)` straight from the defining integral; slow, for testing.
pub fn log_kernel_ratio_direct(k: u32, y: f64, tol: f64) -> Result<f64> {
    if !(y > 0.0) || k == 0 {
        return Err(Error::Domain(format!("log kernel needs y > 0 and k >= 1 (y={y}, k={k})")));
    }
    let lg = ln_gamma_real(k as f64);
    let integrand = |t: f64| {
        if t <= 0.0 {
            return 0.0;
        }
        (-t + (k as f64 - 1.0) * t.ln() - lg).exp() * (t / y).ln()
    };
    let mut upper = y + 40.0 + 4.0 * k as f64;
    while integrand(upper) * upper > tol * 1e-3 {
        upper *= 1.5;
    }
    let pieces = ((upper - y).ceil() as usize).clamp(1, 2000);
    Ok(integrate_pieces(integrand, y, upper, pieces, tol)?.value)
}

/// Upper incomplete gamma `Gamma(s, y)` for complex `s` and real `y >= 0`
/// (`y = 0` needs `Re s > 0`).
pub fn complex_inc_gamma(s: Complex64, y: f64, tol: f64) -> Result<Complex64> {
    if y < 0.0 || (y == 0.0 && s.re <= 0.0) {
        return Err(Error::Domain(format!("incomplete gamma needs y >= 0 and Re s > 0 at y = 0 (s={s}, y={y})")));
    }
    let integrand = |t: f64| ((s - 1.0) * t.ln() - t).exp();
    let start = y.max(1.0);
    let sigma = s.re;
    let mut upper = start + 20.0 + 2.0 * sigma.abs();
    // for T > 2 (sigma - 1), Gamma(sigma, T) <= 2 T^(sigma-1) e^(-T)
    while 2.0 * ((sigma - 1.0) * upper.ln() - upper).exp() > tol / 4.0 {
        upper *= 1.5;
    }
    let pieces = ((upper - start).ceil() as usize).clamp(1, 4000);
    let mut total = integrate_pieces(integrand, start, upper, pieces, tol / 4.0)?.value;
    if y < 1.0 {
        // t = tau^(1/sigma) removes the t^(sigma-1) singularity at 0
        let lower = y.powf(sigma);
        let exponent = (s - 1.0) / sigma + 1.0 / sigma - 1.0;
        let q = integrate_pieces(
            |tau: f64| {
                if tau <= 0.0 {
                    return Complex64::new(0.0, 0.0);
                }
                let t = tau.powf(1.0 / sigma);
                (exponent * tau.ln() - t).exp() / sigma
            },
            lower,
            1.0,
            8,
            tol / 2.0,
        )?;
        total += q.value;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_gamma_known_values() {
        assert!((gamma(Complex64::new(5.0, 0.0)).re - 24.0).abs() < 1e-12);
        assert!((gamma(Complex64::new(0.5, 0.0)).re - PI.sqrt()).abs() < 1e-14);
        // |Gamma(1/2 + it)|^2 = pi / cosh(pi t)
        for t in [0.5, 3.0, 10.0, 40.0] {
            let g = gamma(Complex64::new(0.5, t)).norm_sqr();
            let exact = PI / (PI * t).cosh();
            assert!((g - exact).abs() <= 1e-12 * exact, "t={t}");
        }
        // Gamma(z+1) = z Gamma(z)
        let z = Complex64::new(2.3, -7.1);
        let lhs = gamma(z + 1.0);
        let rhs = z * gamma(z);
        assert!((lhs - rhs).norm() <= 1e-12 * lhs.norm());
    }

    #[test]
    fn digamma_values() {
        assert!((digamma(1.0) + EULER_GAMMA).abs() < 1e-14);
        assert!((digamma(0.5) + EULER_GAMMA + 2.0 * 2f64.ln()).abs() < 1e-14);
        for k in 1..8 {
            assert!((digamma(k as f64) - digamma_int(k)).abs() < 1e-13);
        }
    }

    #[test]
    fn incomplete_gamma_ratio() {
        assert_eq!(inc_gamma_ratio(3, 0.0), 1.0);
        assert!((inc_gamma_ratio(1, 2.0) - (-2f64).exp()).abs() < 1e-16);
        let x: f64 = 3.5;
        let exact = (-x).exp() * (1.0 + x + x * x / 2.0);
        assert!((inc_gamma_ratio(3, x) - exact).abs() < 1e-15);
        assert!(inc_gamma_ratio(2, 800.0) == 0.0 || inc_gamma_ratio(2, 800.0) < 1e-300);
        let big = inc_gamma_ratio(6, 720.0);
        let log_exact = -720.0 + 5.0 * 720f64.ln() - 120f64.ln();
        assert!(big > 0.0 && (big.ln() - log_exact).abs() < 1e-2);
    }

    #[test]
    fn e1_known_values() {
        assert!((exp_integral_e1(1.0) - 0.219_383_934_395_520_3).abs() < 1e-15);
        assert!((exp_integral_e1(0.1) - 1.822_923_958_419_390_7).abs() < 1e-14);
        assert!((exp_integral_e1(5.0) - 0.001_148_295_591_275_325_7).abs() < 1e-17);
        assert!((exp_integral_e1(2.0) - 0.048_900_510_708_061_12).abs() < 1e-16);
    }

    #[test]
    fn log_kernel_closed_form_matches_quadratures() {
        for k in 1..=4 {
            for y in [0.01, 0.3, 1.0, 2.5, 7.0, 20.0] {
                let closed = log_kernel_ratio(k, y).unwrap();
                let quad = log_kernel_ratio_quadrature(k, y, 1e-13).unwrap();
                let direct = log_kernel_ratio_direct(k, y, 1e-13).unwrap();
                assert!((closed - quad).abs() < 1e-11, "k={k} y={y}: {closed} vs {quad}");
                assert!((closed - direct).abs() < 1e-11, "k={k} y={y}: {closed} vs {direct}");
            }
        }
    }

    #[test]
    fn log_kernel_domain_error() {
        assert!(log_kernel_ratio(1, 0.0).is_err());
        assert!(log_kernel_ratio(1, -1.0).is_err());
    }

    #[test]
    fn complex_incomplete_gamma() {
        let s = Complex64::new(2.0, 3.0);
        let full = complex_inc_gamma(s, 0.0, 1e-11).unwrap();
        assert!((full - gamma(s)).norm() < 1e-9);
        for k in 1..4u32 {
            for y in [0.2, 1.0, 3.0] {
                let v = complex_inc_gamma(Complex64::new(k as f64, 0.0), y, 1e-12).unwrap();
                let exact = gamma_int(k) * inc_gamma_ratio(k, y);
                assert!((v.re - exact).abs() < 1e-10 && v.im.abs() < 1e-12);
            }
        }
    }
}
