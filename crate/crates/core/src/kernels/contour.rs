//! Vertical-line integrals `(1/(2 pi i)) int_(sigma - i inf)^(sigma + i inf) f(s) ds`
//! with a caller-supplied exponential decay certificate.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::quadrature::integrate_pieces;
use super::special::ln_gamma;
use crate::error::{Error, Result};

/// Claims `|f(sigma + i t)| <= amplitude * exp(-rate |t|)` for all real `t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayCertificate {
    pub amplitude: f64,
    pub rate: f64,
}

impl DecayCertificate {
    pub fn bound(&self, t: f64) -> f64 {
        self.amplitude * (-self.rate * t.abs()).exp()
    }

    /// Height `T` with `(1/pi) int_T^inf bound(t) dt <= tol / 2`.
    pub fn truncation_height(&self, tol: f64) -> f64 {
        let t = (self.amplitude / (PI * self.rate * tol / 2.0)).ln() / self.rate;
        t.max(1.0)
    }

    pub fn tail(&self, height: f64) -> f64 {
        self.amplitude * (-self.rate * height).exp() / (PI * self.rate)
    }
}

/// How a requested tolerance was spent.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AccuracyBudget {
    pub requested: f64,
    pub truncation: f64,
    pub quadrature: f64,
    pub height: f64,
    pub evaluations: usize,
}

impl AccuracyBudget {
    pub fn total(&self) -> f64 {
        self.truncation + self.quadrature
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ContourIntegral {
    pub value: Complex64,
    pub budget: AccuracyBudget,
}

/// Integrates along `Re s = sigma`. `pole_center` is the largest real part of
/// any singularity of `f`; the line must lie strictly to its right.
///
/// The certificate is spot-checked on a grid up to 1.5 times the truncation
/// height before it is trusted.
pub fn vertical_line_integral<F: Fn(Complex64) -> Complex64>(
    f: F,
    sigma: f64,
    pole_center: f64,
    cert: DecayCertificate,
    tol: f64,
) -> Result<ContourIntegral> {
    if !(sigma > pole_center) {
        return Err(Error::Domain(format!(
            "contour at sigma = {sigma} does not clear singularities at {pole_center}"
        )));
    }
    if !(cert.amplitude > 0.0 && cert.rate > 0.0 && tol > 0.0) {
        return Err(Error::Domain("decay certificate needs positive amplitude and rate".into()));
    }
    let height = cert.truncation_height(tol);
    let samples = 90;
    for i in 0..=samples {
        let t = 1.5 * height * i as f64 / samples as f64;
        for t in [t, -t] {
            let observed = f(Complex64::new(sigma, t)).norm();
            let bound = cert.bound(t);
            if observed > bound * (1.0 + 1e-9) {
                return Err(Error::Certificate { t, observed, bound });
            }
        }
    }
    let pieces = (2.0 * height).ceil() as usize;
    let q = integrate_pieces(|t: f64| f(Complex64::new(sigma, t)), -height, height, pieces, PI * tol)?;
    let budget = AccuracyBudget {
        requested: tol,
        truncation: cert.tail(height),
        quadrature: q.error / (2.0 * PI),
        height,
        evaluations: q.evaluations,
    };
    Ok(ContourIntegral {
        value: q.value / (2.0 * PI),
        budget,
    })
}

/// `1.05 * sup_t g(t) e^(rate |t|)` over a grid on `[0, t_max]`; `g` must be
/// even in `t` and eventually dominated by the exponential.
pub fn sup_with_decay(g: impl Fn(f64) -> f64, rate: f64, t_max: f64) -> f64 {
    let steps = 4000;
    let best = (0..=steps)
        .map(|i| {
            let t = t_max * i as f64 / steps as f64;
            g(t) * (rate * t).exp()
        })
        .fold(0.0f64, f64::max);
    1.05 * best
}

/// Amplitude for `|Gamma(sigma + i t)| <= A e^(-rate |t|)` with `rate < pi/2`.
pub fn gamma_decay_amplitude(sigma: f64, rate: f64) -> f64 {
    assert!(rate < PI / 2.0, "Gamma only decays like exp(-pi |t| / 2)");
    let slack = PI / 2.0 - rate;
    let t_max = 4.0 * (sigma.abs() + 1.0) / slack + 20.0;
    sup_with_decay(|t| ln_gamma(Complex64::new(sigma, t)).re.exp(), rate, t_max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::special::{exp_integral_e1, gamma};

    #[test]
    fn gamma_over_double_pole_gives_e1() {
        // (1/2 pi i) int Gamma(s) / (s-1)^2 ds on Re s = 2 equals E_1(1)
        let rate = PI / 2.0 - 0.2;
        let amp = gamma_decay_amplitude(2.0, rate);
        let cert = DecayCertificate { amplitude: amp, rate };
        let r = vertical_line_integral(|s| gamma(s) / ((s - 1.0) * (s - 1.0)), 2.0, 1.0, cert, 1e-10).unwrap();
        assert!((r.value.re - exp_integral_e1(1.0)).abs() < 1e-10);
        assert!(r.value.im.abs() < 1e-10);
        assert!(r.budget.total() <= 1e-10);
    }

    #[test]
    fn mellin_inverse_of_gamma_is_exponential() {
        let rate = PI / 2.0 - 0.3;
        let cert = DecayCertificate { amplitude: 3.0 * gamma_decay_amplitude(1.0, rate), rate };
        for y in [0.5, 1.0, 2.0] {
            let r = vertical_line_integral(|s| gamma(s) * (-s * f64::ln(y)).exp(), 1.0, 0.0, cert, 1e-10).unwrap();
            assert!((r.value.re - (-y).exp()).abs() < 1e-9, "y={y}");
        }
    }

    #[test]
    fn false_certificate_is_rejected() {
        let cert = DecayCertificate { amplitude: 1e-3, rate: 1.0 };
        let err = vertical_line_integral(gamma, 2.0, 0.0, cert, 1e-8).unwrap_err();
        assert!(matches!(err, Error::Certificate { .. }));
    }

    #[test]
    fn contour_left_of_pole_is_rejected() {
        let cert = DecayCertificate { amplitude: 1.0, rate: 1.0 };
        assert!(vertical_line_integral(gamma, 0.5, 1.0, cert, 1e-8).is_err());
    }
}
