//! Central values `L(k, chi, p)` and central derivatives of the twisted Hecke
//! L-function, all normalized by `Q^k Gamma(k)` with `Q = D*|d| / (2 pi)`.
//!
//! With `A(x) = sum_a chi(a) N(a)^-k Gamma(k, N(a)/(Q x)) / Gamma(k)` over
//! principal ideals, the completed function at the center is
//! `A(x) + W A(1/x)` for every `x > 0`. Splitting the ideals into rational
//! ones `(n)` and the rest gives `A(1) = I1 + I2`; replacing the incomplete
//! gamma by the logarithmic kernel `G_k` gives `R_k + C`, half the derivative
//! when `W = -1`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::character::EpsCharacter;
use crate::dirichlet::{an_coefficients, analytic_conductor, DirichletData};
use crate::error::{Error, Result};
use crate::kernels::contour::{sup_with_decay, vertical_line_integral, DecayCertificate};
use crate::kernels::miller_yang::miller_yang_i;
use crate::kernels::special::{exp_integral_e1, gamma_int, inc_gamma_ratio, ln_gamma};
use crate::quad::{gcd, kronecker, LatticePoint};

/// Lower bound for `I(x)` at `x >= 4`, and hence for `R_1` once `D*|d| >= 8 pi`.
pub const R1_LOWER_BOUND: f64 = 0.0351;

/// Relative size below which a central value counts as numerically zero.
pub const NONVANISHING_RELATIVE: f64 = 1e-6;

/// Smallest absolute tolerance accepted by the evaluator.
pub const TOLERANCE_FLOOR: f64 = 1e-14;

/// A computed real number with a rigorous-in-intent absolute error bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub error_bound: f64,
}

impl Estimate {
    fn plus(self, other: Estimate) -> Estimate {
        Estimate {
            value: self.value + other.value,
            error_bound: self.error_bound + other.error_bound,
        }
    }
}

/// Kernel `K(y)` applied to `y = N / scale`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Kernel {
    /// `Gamma(k, y) / Gamma(k)`.
    IncGamma { k: u32, scale: f64 },
    /// `G_k(y) / Gamma(k)`.
    Log { k: u32, scale: f64 },
}

impl Kernel {
    fn scale(&self) -> f64 {
        match *self {
            Kernel::IncGamma { scale, .. } | Kernel::Log { scale, .. } => scale,
        }
    }

    fn raw(&self, y: f64) -> f64 {
        match *self {
            Kernel::IncGamma { k, .. } => inc_gamma_ratio(k, y),
            Kernel::Log { k, .. } => {
                let mut v = exp_integral_e1(y);
                for j in 1..k {
                    v += inc_gamma_ratio(j, y) / j as f64;
                }
                v
            }
        }
    }

    pub fn at_norm(&self, norm: f64) -> f64 {
        self.raw(norm / self.scale())
    }

    /// Upper bound for `int_y^inf K`.
    fn integral_from(&self, y: f64) -> f64 {
        match *self {
            Kernel::IncGamma { k, .. } => k as f64 * inc_gamma_ratio(k + 1, y),
            Kernel::Log { k, .. } => {
                (-y).exp() + (1..k).map(|j| inc_gamma_ratio(j + 1, y)).sum::<f64>()
            }
        }
    }

    /// Bound on the grouped lattice terms with `N > cut`; each conjugate pair has
    /// size at most `2 N^-1/2 K(N/S)` and at most `4 Y / sqrt(D)` pairs have `N <= Y`.
    fn lattice_tail(&self, cut: f64, disc: i64) -> f64 {
        let s = self.scale();
        let y = cut / s;
        8.0 / (disc as f64).sqrt() * (cut.sqrt() * self.raw(y) + s / cut.sqrt() * self.integral_from(y))
    }

    /// Bound on `sum_(n > n0) K(n^2/S) / n`, i.e. `(1/2) int_(n0^2/S)^inf K(y) dy / y`.
    fn rational_tail(&self, n0: u64) -> f64 {
        let y = (n0 * n0) as f64 / self.scale();
        match *self {
            Kernel::IncGamma { k, .. } => 0.5 * Kernel::Log { k, scale: 1.0 }.raw(y),
            Kernel::Log { .. } => 0.5 * self.integral_from(y) / y,
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct LatticeTerm {
    norm: f64,
    /// `chi(alpha) N^-k + chi(conj alpha) N^-k` for the pair `(u, +-v)`.
    weight: f64,
}

/// Grouped lattice terms, one slice per `v > 0`.
struct Lattice {
    slices: Vec<Vec<LatticeTerm>>,
    max_norm: f64,
    points: usize,
}

fn grouped_weight(ch: &EpsCharacter, p: LatticePoint) -> f64 {
    let eps = ch.eps_value(p);
    if eps == 0 {
        return 0.0;
    }
    let d = ch.field().disc() as f64;
    let m = (2 * ch.weight() - 1) as f64;
    let (u, v) = (p.u as f64, p.v as f64);
    let theta = (v * d.sqrt()).atan2(u);
    eps as f64 * 4.0 * (m * theta).cos() / (u * u + d * v * v).sqrt()
}

/// Conjugate-grouped lattice terms `(point, N, weight)` with `u, v > 0` and `N <= cut`,
/// in order of `(v, u)`.
pub fn grouped_lattice_terms(ch: &EpsCharacter, cut: f64) -> Vec<(LatticePoint, f64, f64)> {
    let d = ch.field().disc();
    let bound4 = (4.0 * cut).floor() as i64;
    let mut out = Vec::new();
    let mut v = 1;
    while d * v * v < bound4 {
        let mut u = 1;
        while u * u + d * v * v <= bound4 {
            let p = LatticePoint::new(u, v);
            let n4 = p.norm4(d);
            if n4 % 4 == 0 {
                let w = grouped_weight(ch, p);
                if w != 0.0 {
                    out.push((p, (n4 / 4) as f64, w));
                }
            }
            u += 1;
        }
        v += 1;
    }
    out
}

impl Lattice {
    fn build(ch: &EpsCharacter, max_norm: f64) -> Lattice {
        let d = ch.field().disc();
        let bound4 = (4.0 * max_norm).floor() as i64;
        let vmax = ((bound4 as f64 / d as f64).sqrt().floor() as i64).max(0);
        let slices: Vec<Vec<LatticeTerm>> = (1..=vmax)
            .into_par_iter()
            .map(|v| {
                let rest = bound4 - d * v * v;
                if rest < 1 {
                    return Vec::new();
                }
                let umax = (rest as f64).sqrt().floor() as i64 + 1;
                let mut slice = Vec::new();
                for u in 1..=umax {
                    let p = LatticePoint::new(u, v);
                    let n4 = p.norm4(d);
                    if n4 > bound4 || n4 % 4 != 0 {
                        continue;
                    }
                    let weight = grouped_weight(ch, p);
                    if weight != 0.0 {
                        slice.push(LatticeTerm {
                            norm: (n4 / 4) as f64,
                            weight,
                        });
                    }
                }
                slice
            })
            .collect();
        let points = slices.iter().map(Vec::len).sum();
        Lattice {
            slices,
            max_norm,
            points,
        }
    }

    /// `(sum, sum of |terms|)` over pairs with `N <= cut`, merged in slice order.
    fn sum(&self, kernel: &Kernel, cut: f64) -> (f64, f64) {
        let partial: Vec<(f64, f64)> = self
            .slices
            .par_iter()
            .map(|slice| {
                slice
                    .iter()
                    .filter(|t| t.norm <= cut)
                    .fold((0.0, 0.0), |(s, m), t| {
                        let x = t.weight * kernel.at_norm(t.norm);
                        (s + x, m + x.abs())
                    })
            })
            .collect();
        partial
            .iter()
            .fold((0.0, 0.0), |(s, m), &(x, y)| (s + x, m + y))
    }
}

fn rational_coefficient(disc: i64, twist: i64, n: u64) -> f64 {
    let n = n as i64;
    if gcd(n, twist) != 1 {
        return 0.0;
    }
    kronecker(-disc, n) as f64 / n as f64
}

/// `sum_((n,d)=1) (-D/n) n^-1 K(n^2/S)` with certified truncation.
fn rational_sum(disc: i64, twist: i64, kernel: &Kernel, budget: f64) -> Estimate {
    let mut n0 = (kernel.scale().sqrt().ceil() as u64).max(1);
    while kernel.rational_tail(n0) > budget {
        n0 *= 2;
    }
    while n0 > 1 && kernel.rational_tail(n0 / 2) <= budget {
        n0 /= 2;
    }
    let (mut sum, mut mass) = (0.0, 0.0);
    for n in 1..=n0 {
        let c = rational_coefficient(disc, twist, n);
        if c != 0.0 {
            let x = c * kernel.at_norm((n * n) as f64);
            sum += x;
            mass += x.abs();
        }
    }
    Estimate {
        value: sum,
        error_bound: kernel.rational_tail(n0) + 1e-15 * mass,
    }
}

/// Norm cut from `|Re alpha|, |Im alpha| < (D|d|)^1/2 log(D|d|)`.
pub fn default_norm_cut(disc: i64, twist: i64) -> f64 {
    let m = (disc * twist.abs()) as f64;
    m * m.ln().powi(2)
}

fn lattice_cut(kernel: &Kernel, disc: i64, start: f64, budget: f64) -> f64 {
    let mut cut = start.max(4.0);
    while kernel.lattice_tail(cut, disc) > budget {
        cut *= 2.0;
    }
    while cut > 4.0 && kernel.lattice_tail(cut / 2.0, disc) <= budget {
        cut /= 2.0;
    }
    cut
}

/// Split points tried for the root-number solve, in order.
const SPLITS: [f64; 4] = [2.0, 3.0, 1.5, 4.0];

/// Shared lattice for all sums attached to one character.
pub struct Evaluator<'a> {
    ch: &'a EpsCharacter,
    q: f64,
    tol: f64,
    lattice: Lattice,
    base_cut: f64,
}

impl<'a> Evaluator<'a> {
    pub fn new(ch: &'a EpsCharacter, tol: f64) -> Result<Self> {
        if !(tol > 0.0) {
            return Err(Error::invalid("tolerance must be positive"));
        }
        if tol < TOLERANCE_FLOOR {
            return Err(Error::Tolerance {
                context: "double-precision evaluation",
                requested: tol,
                achieved: TOLERANCE_FLOOR,
            });
        }
        let disc = ch.field().disc();
        let q = analytic_conductor(disc, ch.twist());
        let base_cut = default_norm_cut(disc, ch.twist());
        let k = ch.weight();
        let widest = [
            Kernel::IncGamma { k, scale: q * SPLITS[3] },
            Kernel::Log { k, scale: q },
        ];
        let max_cut = widest
            .iter()
            .map(|kern| lattice_cut(kern, disc, base_cut, tol / 8.0))
            .fold(0.0, f64::max);
        Ok(Evaluator {
            ch,
            q,
            tol,
            lattice: Lattice::build(ch, max_cut),
            base_cut,
        })
    }

    pub fn conductor_q(&self) -> f64 {
        self.q
    }

    pub fn lattice_points(&self) -> usize {
        self.lattice.points
    }

    pub fn base_norm_cut(&self) -> f64 {
        self.base_cut
    }

    pub fn max_norm_cut(&self) -> f64 {
        self.lattice.max_norm
    }

    /// Kernel of `A(1)`, `I1` and `I2`.
    pub fn value_kernel(&self) -> Kernel {
        Kernel::IncGamma { k: self.ch.weight(), scale: self.q }
    }

    /// Kernel of `R_k` and `C`.
    pub fn derivative_kernel(&self) -> Kernel {
        Kernel::Log { k: self.ch.weight(), scale: self.q }
    }

    /// Norm cut used for the lattice part of a sum with this kernel.
    pub fn kernel_cut(&self, kernel: Kernel) -> f64 {
        let disc = self.ch.field().disc();
        lattice_cut(&kernel, disc, self.base_cut, self.tol / 8.0).min(self.lattice.max_norm)
    }

    fn lattice_part(&self, kernel: Kernel) -> (Estimate, f64) {
        let disc = self.ch.field().disc();
        let cut = self.kernel_cut(kernel);
        let (value, mass) = self.lattice.sum(&kernel, cut);
        let est = Estimate {
            value,
            error_bound: kernel.lattice_tail(cut, disc) + 1e-15 * mass,
        };
        (est, mass)
    }

    fn rational_part(&self, kernel: Kernel) -> Estimate {
        rational_sum(self.ch.field().disc(), self.ch.twist(), &kernel, self.tol / 8.0)
    }

    /// `A(x)` over all principal ideals.
    pub fn smoothed(&self, x: f64) -> Estimate {
        let kernel = Kernel::IncGamma { k: self.ch.weight(), scale: self.q * x };
        self.lattice_part(kernel).0.plus(self.rational_part(kernel))
    }

    /// `sum_a |chi(a) N^-k Gamma(k, N/Q)/Gamma(k)|`, the size of `A(1)`'s terms.
    pub fn scale(&self) -> f64 {
        let kernel = Kernel::IncGamma { k: self.ch.weight(), scale: self.q };
        let (_, lattice_mass) = self.lattice_part(kernel);
        let disc = self.ch.field().disc();
        let rational: f64 = (1..)
            .map(|n: u64| (n, rational_coefficient(disc, self.ch.twist(), n).abs()))
            .take_while(|&(n, _)| kernel.rational_tail(n) > 1e-18 || n < 2)
            .map(|(n, c)| c * kernel.at_norm((n * n) as f64))
            .sum();
        (lattice_mass + rational).max(1.0)
    }

    pub fn i1(&self) -> Estimate {
        self.rational_part(Kernel::IncGamma { k: self.ch.weight(), scale: self.q })
    }

    pub fn i2(&self) -> Estimate {
        self.lattice_part(Kernel::IncGamma { k: self.ch.weight(), scale: self.q }).0
    }

    pub fn rk(&self) -> Estimate {
        self.rational_part(Kernel::Log { k: self.ch.weight(), scale: self.q })
    }

    pub fn c_term(&self) -> Estimate {
        self.lattice_part(Kernel::Log { k: self.ch.weight(), scale: self.q }).0
    }

    /// `(A(x), B(x))` with `B(x) = A(1/x)`.
    pub fn lambda_smoothed(&self, x: f64) -> Result<(Estimate, Estimate)> {
        if !(0.125..=8.0).contains(&x) {
            return Err(Error::invalid(format!("split point {x} outside [1/8, 8]")));
        }
        if !(1.0 / SPLITS[3]..=SPLITS[3]).contains(&x) {
            // beyond the lattice built up front: use a dedicated evaluator
            let wide = Evaluator {
                ch: self.ch,
                q: self.q,
                tol: self.tol,
                lattice: Lattice::build(
                    self.ch,
                    lattice_cut(
                        &Kernel::IncGamma { k: self.ch.weight(), scale: self.q * 8.0 },
                        self.ch.field().disc(),
                        self.base_cut,
                        self.tol / 8.0,
                    ),
                ),
                base_cut: self.base_cut,
            };
            return Ok((wide.smoothed(x), wide.smoothed(1.0 / x)));
        }
        Ok((self.smoothed(x), self.smoothed(1.0 / x)))
    }

    pub fn root_number(&self) -> Result<RootNumber> {
        let scale = self.scale();
        let a1 = self.smoothed(1.0);
        let mut chosen = None;
        for &r in &SPLITS {
            let up = self.smoothed(r);
            let down = self.smoothed(1.0 / r);
            let num = up.value - a1.value;
            let den = a1.value - down.value;
            let noise_num = up.error_bound + a1.error_bound + 1e-15 * scale;
            let noise_den = down.error_bound + a1.error_bound + 1e-15 * scale;
            if den.abs() <= 1e3 * noise_den {
                continue;
            }
            let w = num / den;
            let w_error = (noise_num + w.abs() * noise_den) / den.abs();
            if w_error <= 1e-6 {
                chosen = Some((r, w, w_error));
                break;
            }
            if chosen.is_none_or(|(_, _, e)| w_error < e) {
                chosen = Some((r, w, w_error));
            }
        }
        let (split, solved) = match chosen {
            Some((r, w, e)) if e <= 1e-5 => (r, w),
            _ => return Err(Error::IndeterminateRootNumber),
        };
        let residual = (solved.abs() - 1.0).abs();
        if residual > 1e-4 {
            return Err(Error::FunctionalEquation { solved });
        }
        let w: i8 = if solved > 0.0 { 1 } else { -1 };
        let xs = [0.5, 1.0, 2.0];
        let mut lambda = [0.0; 3];
        for (slot, &x) in lambda.iter_mut().zip(&xs) {
            *slot = self.smoothed(x).value + w as f64 * self.smoothed(1.0 / x).value;
        }
        let hi = lambda.iter().cloned().fold(f64::MIN, f64::max);
        let lo = lambda.iter().cloned().fold(f64::MAX, f64::min);
        Ok(RootNumber {
            w,
            solved,
            residual,
            split,
            lambda_at_splits: lambda,
            spread: hi - lo,
            scale,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RootNumber {
    pub w: i8,
    pub solved: f64,
    /// `| |W_solved| - 1 |`.
    pub residual: f64,
    /// Split point `r` used in `W = (A(r) - A(1)) / (A(1) - A(1/r))`.
    pub split: f64,
    /// `A(x) + W A(1/x)` at `x = 1/2, 1, 2`.
    pub lambda_at_splits: [f64; 3],
    pub spread: f64,
    pub scale: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PredictedOrder {
    #[serde(rename = "0")]
    Zero,
    #[serde(rename = "1")]
    One,
    #[serde(rename = "inconclusive")]
    Inconclusive,
}

impl PredictedOrder {
    pub fn as_str(&self) -> &'static str {
        match self {
            PredictedOrder::Zero => "0",
            PredictedOrder::One => "1",
            PredictedOrder::Inconclusive => "inconclusive",
        }
    }

    /// The order `(1 - W)/2` forced by the sign of the functional equation.
    pub fn from_root_number(w: i8) -> Self {
        if w == 1 {
            PredictedOrder::Zero
        } else {
            PredictedOrder::One
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct R1Check {
    pub kernel_route: f64,
    pub expansion_route: f64,
    pub bound_applicable: bool,
    pub bound_holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CentralReport {
    pub disc: i64,
    pub twist: i64,
    pub weight: u32,
    pub class_number: u64,
    pub variant_index: usize,
    pub root_number: RootNumber,
    pub i1: Option<Estimate>,
    pub i2: Option<Estimate>,
    pub rk: Option<Estimate>,
    pub c_term: Option<Estimate>,
    /// `2 (I1 + I2)`, only when `W = +1`.
    pub l_central: Option<f64>,
    /// `A(2) + W A(1/2)`.
    pub l_central_afe: f64,
    /// `2 (R_k + C)`, only when `W = -1`.
    pub l_deriv_central: Option<f64>,
    pub predicted_order: PredictedOrder,
    pub r1: Option<R1Check>,
    pub tol: f64,
    pub conductor_q: f64,
    pub norm_cut: f64,
    pub default_norm_cut: f64,
    pub lattice_points: usize,
    pub notes: Vec<String>,
}

impl CentralReport {
    /// The quantity that decides the order: `L` if `W = +1`, `L'` if `W = -1`.
    pub fn deciding_value(&self) -> Option<f64> {
        if self.root_number.w == 1 {
            self.l_central
        } else {
            self.l_deriv_central
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct AnalysisOptions {
    pub value: bool,
    pub derivative: bool,
    /// For `k = 1`, also evaluate `R_1` through the `a_n`, `I(x)` expansion.
    pub r1_cross_check: bool,
}

pub const DERIVATIVE_NOT_MEANINGFUL: &str =
    "root number +1: derivative route not meaningful for this decomposition";

pub fn analyze(ch: &EpsCharacter, tol: f64, options: AnalysisOptions) -> Result<CentralReport> {
    let ev = Evaluator::new(ch, tol)?;
    let rn = ev.root_number()?;
    let scale = rn.scale;
    let disc = ch.field().disc();
    let twist = ch.twist();
    let k = ch.weight();
    let mut notes = Vec::new();

    let want_value = options.value || rn.w == 1;
    let want_derivative = options.derivative || rn.w == -1;

    let (i1, i2) = if want_value {
        (Some(ev.i1()), Some(ev.i2()))
    } else {
        (None, None)
    };
    let l_central_afe = ev.smoothed(2.0).value + rn.w as f64 * ev.smoothed(0.5).value;
    let l_central = match (rn.w, i1, i2) {
        (1, Some(a), Some(b)) => Some(2.0 * (a.value + b.value)),
        _ => None,
    };
    if let Some(l) = l_central {
        let diff = (l - l_central_afe).abs();
        if diff > 10.0 * tol * scale {
            return Err(Error::IdentityMismatch(format!(
                "dual-route central value mismatch: 2(I1+I2) = {l}, AFE = {l_central_afe}"
            )));
        }
    }

    let (rk, c_term) = if want_derivative {
        (Some(ev.rk()), Some(ev.c_term()))
    } else {
        (None, None)
    };
    let l_deriv_central = match (rn.w, rk, c_term) {
        (-1, Some(a), Some(b)) => Some(2.0 * (a.value + b.value)),
        _ => None,
    };
    if options.derivative && rn.w == 1 {
        notes.push(DERIVATIVE_NOT_MEANINGFUL.to_string());
    }
    if want_derivative && k > 1 {
        notes.push("C carries the 1/Gamma(k) factor, matching I2".to_string());
    }

    let r1 = if k == 1 && want_derivative && options.r1_cross_check {
        let kernel_route = rk.expect("derivative computed").value;
        let expansion = r1_expansion(disc, twist, tol)?;
        if (kernel_route - expansion.value).abs() > 2.0 * tol {
            return Err(Error::RouteMismatch {
                kernel_route,
                expansion_route: expansion.value,
            });
        }
        Some(R1Check {
            kernel_route,
            expansion_route: expansion.value,
            bound_applicable: (disc * gcd(2, disc) * twist.abs()) as f64 >= 8.0 * PI,
            bound_holds: kernel_route >= R1_LOWER_BOUND,
        })
    } else {
        None
    };

    let predicted_order = {
        let (value, error) = if rn.w == 1 {
            let (a, b) = (i1.expect("value computed"), i2.expect("value computed"));
            (2.0 * (a.value + b.value), 2.0 * (a.error_bound + b.error_bound))
        } else {
            let (a, b) = (rk.expect("derivative computed"), c_term.expect("derivative computed"));
            (2.0 * (a.value + b.value), 2.0 * (a.error_bound + b.error_bound))
        };
        let threshold = (NONVANISHING_RELATIVE * scale).max(10.0 * error);
        if value.abs() > threshold {
            PredictedOrder::from_root_number(rn.w)
        } else {
            PredictedOrder::Inconclusive
        }
    };

    Ok(CentralReport {
        disc,
        twist,
        weight: k,
        class_number: ch.field().class_number(),
        variant_index: ch.variant_index(),
        root_number: rn,
        i1,
        i2,
        rk,
        c_term,
        l_central,
        l_central_afe,
        l_deriv_central,
        predicted_order,
        r1,
        tol,
        conductor_q: ev.conductor_q(),
        norm_cut: ev.max_norm_cut(),
        default_norm_cut: ev.base_norm_cut(),
        lattice_points: ev.lattice_points(),
        notes,
    })
}

pub fn central_value(ch: &EpsCharacter, tol: f64) -> Result<CentralReport> {
    analyze(
        ch,
        tol,
        AnalysisOptions {
            value: true,
            ..Default::default()
        },
    )
}

pub fn central_derivative(ch: &EpsCharacter, tol: f64) -> Result<CentralReport> {
    analyze(
        ch,
        tol,
        AnalysisOptions {
            derivative: true,
            r1_cross_check: true,
            ..Default::default()
        },
    )
}

pub fn root_number(ch: &EpsCharacter, tol: f64) -> Result<RootNumber> {
    Evaluator::new(ch, tol)?.root_number()
}

/// `I1` without building any lattice.
pub fn i1(disc: i64, twist: i64, k: u32, tol: f64) -> Result<Estimate> {
    DirichletData::new(disc, twist)?;
    let q = analytic_conductor(disc, twist);
    Ok(rational_sum(disc, twist, &Kernel::IncGamma { k, scale: q }, tol / 2.0))
}

/// `R_k` without building any lattice.
pub fn rk(disc: i64, twist: i64, k: u32, tol: f64) -> Result<Estimate> {
    DirichletData::new(disc, twist)?;
    let q = analytic_conductor(disc, twist);
    Ok(rational_sum(disc, twist, &Kernel::Log { k, scale: q }, tol / 2.0))
}

/// `R_1 = sum_n a_n n^-1 I(Q / n^2)`.
pub fn r1_expansion(disc: i64, twist: i64, tol: f64) -> Result<Estimate> {
    let q = analytic_conductor(disc, twist);
    // with a_n <= n and |I(x)| <= E_1(1/x) + x e^(-1/x)/2, terms past n^2 >= Q are
    // bounded by 1.5 e^(-n^2/Q)
    let tail = |n0: usize| -> f64 {
        let mut s = 0.0;
        let mut n = n0 + 1;
        loop {
            let t = 1.5 * (-((n * n) as f64) / q).exp();
            s += t;
            if t < 1e-3 * tol * 1e-3 {
                return s;
            }
            n += 1;
        }
    };
    let mut n0 = (q.sqrt().ceil() as usize).max(1);
    while tail(n0) > tol / 4.0 {
        n0 = n0 * 3 / 2 + 1;
    }
    let a = an_coefficients(disc, twist, n0)?;
    let weight: f64 = (1..=n0).map(|n| a[n] as f64 / n as f64).sum();
    let per_term = tol / (4.0 * weight.max(1.0));
    let mut value = 0.0;
    for n in 1..=n0 {
        if a[n] == 0 {
            continue;
        }
        let x = q / (n * n) as f64;
        value += a[n] as f64 / n as f64 * miller_yang_i(x, per_term)?;
    }
    Ok(Estimate {
        value,
        error_bound: tail(n0) + tol / 4.0,
    })
}

/// `(1/2 pi i) int_(k+1) Q^(s-k) Gamma(s)/Gamma(k) L_D(2s+1-2k) ds / (s-k)^power`:
/// `power = 1` gives `I1`, `power = 2` gives `R_k`. Slow; for cross-checks.
pub fn rational_part_by_contour(disc: i64, twist: i64, k: u32, power: i32, tol: f64) -> Result<f64> {
    if !(power == 1 || power == 2) {
        return Err(Error::invalid("power must be 1 or 2"));
    }
    let data = DirichletData::new(disc, twist)?;
    let q = analytic_conductor(disc, twist);
    let sigma = k as f64 + 1.0;
    let rate = PI / 2.0 - 0.3;
    let zeta3 = 1.202_056_903_159_594_3;
    let shape = sup_with_decay(
        |t| ln_gamma(Complex64::new(sigma, t)).re.exp() / (1.0 + t * t).powf(power as f64 / 2.0),
        rate,
        80.0,
    );
    let cert = DecayCertificate {
        amplitude: q * zeta3 * shape / gamma_int(k),
        rate,
    };
    let f = |s: Complex64| {
        let w = s - k as f64;
        let l = data
            .l_value(2.0 * s + 1.0 - 2.0 * k as f64)
            .unwrap_or(Complex64::new(f64::NAN, f64::NAN));
        (w * q.ln() + ln_gamma(s)).exp() / gamma_int(k) * l / w.powi(power)
    };
    let r = vertical_line_integral(f, sigma, k as f64, cert, tol)?;
    Ok(r.value.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{principal_lattice_points, QuadraticField};

    fn character(disc: i64, twist: i64, k: u32) -> EpsCharacter {
        EpsCharacter::new(&QuadraticField::new(disc).unwrap(), twist, k, 0).unwrap()
    }

    #[test]
    fn grouped_weight_matches_chi_values() {
        for (disc, twist, k) in [(7, 1, 1), (7, 5, 2), (23, -4, 1), (8, 5, 3)] {
            let ch = character(disc, twist, k);
            for p in principal_lattice_points(ch.field(), 400.0).filter(|p| p.v > 0) {
                let n = p.norm(disc) as f64;
                let pair = (ch.chi_value(p) + ch.chi_value(p.conj())) / n.powi(k as i32);
                assert!(pair.im.abs() < 1e-12);
                assert!((pair.re - grouped_weight(&ch, p)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn i2_grouped_equals_ungrouped() {
        let ch = character(7, 1, 1);
        let ev = Evaluator::new(&ch, 1e-10).unwrap();
        let kernel = Kernel::IncGamma { k: 1, scale: ev.q };
        let cut = 400.0;
        let ungrouped: Complex64 = principal_lattice_points(ch.field(), cut)
            .map(|p| {
                let n = p.norm(7) as f64;
                ch.chi_value(p) / n * kernel.at_norm(n)
            })
            .sum();
        let (grouped, _) = ev.lattice.sum(&kernel, cut);
        assert!(ungrouped.im.abs() < 1e-14);
        assert!((ungrouped.re - grouped).abs() < 1e-14);
    }

    #[test]
    fn truncation_doubling_is_within_bound() {
        for (disc, twist, k) in [(7, 1, 1), (23, 5, 1), (24, -7, 2)] {
            let ch = character(disc, twist, k);
            let ev = Evaluator::new(&ch, 1e-8).unwrap();
            let wide = Lattice::build(&ch, ev.lattice.max_norm * 2.0);
            for kernel in [
                Kernel::IncGamma { k, scale: ev.q },
                Kernel::Log { k, scale: ev.q },
            ] {
                let (est, _) = ev.lattice_part(kernel);
                let (full, _) = wide.sum(&kernel, ev.lattice.max_norm * 2.0);
                assert!((est.value - full).abs() <= est.error_bound);
                assert!(est.error_bound <= 1e-8);
            }
        }
    }

    #[test]
    fn d7_is_nonvanishing_with_positive_root_number() {
        let ch = character(7, 1, 1);
        let report = central_value(&ch, 1e-10).unwrap();
        assert_eq!(report.root_number.w, 1);
        let l = report.l_central.unwrap();
        assert!(l > 0.0);
        assert!((l - report.l_central_afe).abs() < 1e-9);
        assert_eq!(report.predicted_order, PredictedOrder::Zero);
        // A(1) = I1 + I2
        let ev = Evaluator::new(&ch, 1e-10).unwrap();
        let a1 = ev.smoothed(1.0).value;
        assert!((a1 - ev.i1().value - ev.i2().value).abs() < 1e-13);
    }

    #[test]
    fn root_number_is_stable_under_tolerance() {
        for (disc, twist, k) in [(7, 1, 1), (7, 5, 1), (11, -3, 2), (24, 5, 1), (19, -8, 1)] {
            let ch = character(disc, twist, k);
            let a = root_number(&ch, 1e-8).unwrap();
            let b = root_number(&ch, 1e-9).unwrap();
            assert_eq!(a.w, b.w);
            assert!(a.residual < 1e-6, "({disc},{twist},{k}): {}", a.solved);
            assert!(a.spread <= 3e-8 * a.scale);
        }
    }

    #[test]
    fn smoothed_pair_is_symmetric_at_one() {
        let ch = character(23, 5, 1);
        let ev = Evaluator::new(&ch, 1e-9).unwrap();
        let (a, b) = ev.lambda_smoothed(1.0).unwrap();
        assert_eq!(a.value, b.value);
        let (a, b) = ev.lambda_smoothed(8.0).unwrap();
        let w = ev.root_number().unwrap().w as f64;
        let center = ev.smoothed(1.0).value * (1.0 + w);
        assert!((a.value + w * b.value - center).abs() < 1e-7);
        assert!(ev.lambda_smoothed(10.0).is_err());
    }

    #[test]
    fn closed_forms_match_contour_integrals() {
        for (disc, twist, k) in [(7, 1, 1), (7, 5, 2), (8, -3, 1)] {
            let closed = i1(disc, twist, k, 1e-10).unwrap().value;
            let contour = rational_part_by_contour(disc, twist, k, 1, 1e-8).unwrap();
            assert!((closed - contour).abs() < 1e-7, "I1 ({disc},{twist},{k})");
            let closed = rk(disc, twist, k, 1e-10).unwrap().value;
            let contour = rational_part_by_contour(disc, twist, k, 2, 1e-8).unwrap();
            assert!((closed - contour).abs() < 1e-7, "Rk ({disc},{twist},{k})");
        }
    }

    #[test]
    fn r1_routes_agree() {
        for (disc, twist) in [(7, 1), (23, 5), (8, -3)] {
            let kernel = rk(disc, twist, 1, 1e-9).unwrap().value;
            let expansion = r1_expansion(disc, twist, 1e-9).unwrap().value;
            assert!((kernel - expansion).abs() < 2e-9, "({disc},{twist})");
        }
    }

    #[test]
    fn i1_tends_to_l_value_for_large_conductor() {
        use crate::dirichlet::l_d_at_1;
        let (disc, twist) = (163, -824);
        // -824 = -8 * 103 is fundamental and prime to 163
        let est = i1(disc, twist, 1, 1e-8).unwrap().value;
        let l = l_d_at_1(disc, twist, 1e-10).unwrap().value;
        assert!((est - l).abs() < 0.01);
    }

    #[test]
    fn derivative_report_on_positive_root_number_warns() {
        let ch = character(7, 1, 1);
        let report = central_derivative(&ch, 1e-8).unwrap();
        assert!(report.l_deriv_central.is_none());
        assert!(report.notes.iter().any(|n| n == DERIVATIVE_NOT_MEANINGFUL));
    }
}
