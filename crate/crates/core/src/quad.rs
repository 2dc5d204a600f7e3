//! Exact arithmetic in imaginary quadratic fields `Q(sqrt(-D))`.
//!
//! Ring elements are written in the integral basis `{1, omega}` with
//! `omega = (1 + sqrt(-D))/2` for odd `D` and `omega = sqrt(-D)/2` when
//! `8 | D`. Ideals are stored as Z-modules in Hermite normal form
//! `Z*a + Z*(b + c*omega)`, and the lattice sums elsewhere in the crate use
//! the half-integer coordinates `alpha = (u + v*sqrt(-D))/2`.

use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.unsigned_abs(), b.unsigned_abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a as i64
}

/// Extended Euclid: returns `(g, x, y)` with `a*x + b*y = g >= 0`.
pub(crate) fn ext_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    let (mut old_r, mut r) = (a, b);
    let (mut old_s, mut s) = (1i64, 0i64);
    let (mut old_t, mut t) = (0i64, 1i64);
    while r != 0 {
        let q = old_r.div_euclid(r);
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
        (old_t, t) = (t, old_t - q * t);
    }
    if old_r < 0 {
        (-old_r, -old_s, -old_t)
    } else {
        (old_r, old_s, old_t)
    }
}

/// Inverse of `a` modulo `m`, if it exists.
pub(crate) fn mod_inverse(a: i64, m: i64) -> Option<i64> {
    let (g, x, _) = ext_gcd(a.rem_euclid(m), m);
    (g == 1).then(|| x.rem_euclid(m))
}

fn is_squarefree(n: u64) -> bool {
    if n == 0 {
        return false;
    }
    let mut n = n;
    let mut p = 2u64;
    while p * p <= n {
        if n % p == 0 {
            n /= p;
            if n % p == 0 {
                return false;
            }
        }
        p += 1;
    }
    true
}

/// True iff `m` is the discriminant of a quadratic field.
pub fn is_fundamental_discriminant(m: i64) -> bool {
    if m == 1 || m == 0 {
        return false;
    }
    match m.rem_euclid(4) {
        1 => is_squarefree(m.unsigned_abs()),
        0 => {
            let n = m / 4;
            matches!(n.rem_euclid(4), 2 | 3) && is_squarefree(n.unsigned_abs())
        }
        _ => false,
    }
}

/// The Kronecker symbol `(a/n)`.
///
/// Uses `(a/-1) = sign(a)`, `(a/2)` by the mod-8 rule, and `(a/0) = [a = +-1]`.
pub fn kronecker(a: i64, n: i64) -> i8 {
    let a = a as i128;
    let mut n = n as i128;
    if n == 0 {
        return if a == 1 || a == -1 { 1 } else { 0 };
    }
    let mut result: i8 = 1;
    if n < 0 {
        n = -n;
        if a < 0 {
            result = -result;
        }
    }
    let twos = n.trailing_zeros();
    if twos > 0 {
        if a % 2 == 0 {
            return 0;
        }
        if twos % 2 == 1 && matches!(a.rem_euclid(8), 3 | 5) {
            result = -result;
        }
        n >>= twos;
    }
    // Jacobi symbol for odd positive n
    let mut a = a.rem_euclid(n);
    while a != 0 {
        let t = a.trailing_zeros();
        a >>= t;
        if t % 2 == 1 && matches!(n % 8, 3 | 5) {
            result = -result;
        }
        if a % 4 == 3 && n % 4 == 3 {
            result = -result;
        }
        std::mem::swap(&mut a, &mut n);
        a %= n;
    }
    if n == 1 {
        result
    } else {
        0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParityClass {
    /// `D` odd, `omega = (1 + sqrt(-D))/2`.
    Odd,
    /// `8 | D`, `omega = sqrt(-D)/2`.
    Div8,
}

/// An element `x + y*omega` of the ring of integers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct QuadInt {
    pub x: i64,
    pub y: i64,
}

impl QuadInt {
    pub const fn new(x: i64, y: i64) -> Self {
        QuadInt { x, y }
    }

    pub const fn rational(n: i64) -> Self {
        QuadInt { x: n, y: 0 }
    }

    pub fn scale(self, n: i64) -> Self {
        QuadInt::new(self.x * n, self.y * n)
    }

    pub fn is_zero(self) -> bool {
        self.x == 0 && self.y == 0
    }
}

impl std::ops::Add for QuadInt {
    type Output = QuadInt;
    fn add(self, rhs: QuadInt) -> QuadInt {
        QuadInt::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl std::ops::Sub for QuadInt {
    type Output = QuadInt;
    fn sub(self, rhs: QuadInt) -> QuadInt {
        QuadInt::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl std::ops::Neg for QuadInt {
    type Output = QuadInt;
    fn neg(self) -> QuadInt {
        QuadInt::new(-self.x, -self.y)
    }
}

/// The field `Q(sqrt(-D))` with `-D` a fundamental discriminant, `D > 4`,
/// and `D` odd or divisible by 8.
#[derive(Clone, Debug)]
pub struct QuadraticField {
    disc: i64,
    parity: ParityClass,
    class_number: OnceLock<u64>,
}

impl PartialEq for QuadraticField {
    fn eq(&self, other: &Self) -> bool {
        self.disc == other.disc
    }
}

impl Eq for QuadraticField {}

impl fmt::Display for QuadraticField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Q(sqrt(-{}))", self.disc)
    }
}

impl QuadraticField {
    /// Builds the field of discriminant `-d`; `d` is the positive integer `D`.
    pub fn new(d: i64) -> Result<Self> {
        let parity = if d % 2 != 0 {
            ParityClass::Odd
        } else {
            ParityClass::Div8
        };
        let valid = d > 4 && is_fundamental_discriminant(-d) && (d % 2 != 0 || d % 8 == 0);
        if !valid {
            return Err(Error::invalid(format!(
                "-{d} not a valid discriminant (must be odd or divisible by 8, fundamental)"
            )));
        }
        Ok(QuadraticField {
            disc: d,
            parity,
            class_number: OnceLock::new(),
        })
    }

    /// The positive integer `D`; the field discriminant is `-D`.
    pub fn disc(&self) -> i64 {
        self.disc
    }

    pub fn parity(&self) -> ParityClass {
        self.parity
    }

    /// `D* = D * gcd(2, D)`.
    pub fn d_star(&self) -> i64 {
        self.disc * gcd(2, self.disc)
    }

    /// Trace and norm of omega, so that `omega^2 = t*omega - n`.
    fn omega_poly(&self) -> (i64, i64) {
        match self.parity {
            ParityClass::Odd => (1, (1 + self.disc) / 4),
            ParityClass::Div8 => (0, self.disc / 4),
        }
    }

    pub fn omega(&self) -> QuadInt {
        QuadInt::new(0, 1)
    }

    pub fn sqrt_neg_d(&self) -> QuadInt {
        match self.parity {
            ParityClass::Odd => QuadInt::new(-1, 2),
            ParityClass::Div8 => QuadInt::new(0, 2),
        }
    }

    pub fn mul(&self, p: QuadInt, q: QuadInt) -> QuadInt {
        let (t, n) = self.omega_poly();
        QuadInt::new(
            p.x * q.x - n * p.y * q.y,
            p.x * q.y + p.y * q.x + t * p.y * q.y,
        )
    }

    pub fn norm(&self, p: QuadInt) -> i64 {
        let (t, n) = self.omega_poly();
        p.x * p.x + t * p.x * p.y + n * p.y * p.y
    }

    pub fn conj(&self, p: QuadInt) -> QuadInt {
        let (t, _) = self.omega_poly();
        QuadInt::new(p.x + t * p.y, -p.y)
    }

    /// Converts `alpha = (u + v*sqrt(-D))/2` to the omega basis.
    ///
    /// The point must satisfy `4 | u^2 + D v^2`.
    pub fn from_lattice(&self, p: LatticePoint) -> QuadInt {
        debug_assert!(p.is_integral(self.disc));
        match self.parity {
            ParityClass::Odd => QuadInt::new((p.u - p.v) / 2, p.v),
            ParityClass::Div8 => QuadInt::new(p.u / 2, p.v),
        }
    }

    /// Inverse of [`from_lattice`](Self::from_lattice).
    pub fn to_lattice(&self, q: QuadInt) -> LatticePoint {
        match self.parity {
            ParityClass::Odd => LatticePoint::new(2 * q.x + q.y, q.y),
            ParityClass::Div8 => LatticePoint::new(2 * q.x, q.y),
        }
    }

    /// Class number, computed once by counting reduced forms.
    pub fn class_number(&self) -> u64 {
        *self
            .class_number
            .get_or_init(|| reduced_forms(self.disc).len() as u64)
    }
}

/// A Z-module `Z*a + Z*(b + c*omega)` in Hermite normal form.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IdealZModule {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

impl IdealZModule {
    pub const UNIT: IdealZModule = IdealZModule { a: 1, b: 0, c: 1 };

    pub fn norm(&self) -> i64 {
        self.a * self.c
    }

    /// Canonical representative `(x, y)` with `0 <= x < a`, `0 <= y < c`.
    pub fn reduce(&self, q: QuadInt) -> QuadInt {
        let k = q.y.div_euclid(self.c);
        let y = q.y - k * self.c;
        let x = (q.x - k * self.b).rem_euclid(self.a);
        QuadInt::new(x, y)
    }

    pub fn contains(&self, q: QuadInt) -> bool {
        self.reduce(q).is_zero()
    }

    /// Index of the residue class of `q` in `0..norm()`.
    pub fn residue_index(&self, q: QuadInt) -> usize {
        let r = self.reduce(q);
        (r.y * self.a + r.x) as usize
    }

    pub fn residue(&self, index: usize) -> QuadInt {
        let i = index as i64;
        QuadInt::new(i % self.a, i / self.a)
    }
}

/// HNF of the ideal generated by `gens`.
pub fn ideal_from_generators(field: &QuadraticField, gens: &[QuadInt]) -> Result<IdealZModule> {
    let omega = field.omega();
    let vectors: Vec<(i64, i64)> = gens
        .iter()
        .flat_map(|&g| {
            let gw = field.mul(g, omega);
            [(g.x, g.y), (gw.x, gw.y)]
        })
        .collect();

    let mut pivot: Option<(i64, i64)> = None;
    let mut a = 0i64;
    for (mut x, mut y) in vectors {
        if y != 0 {
            match pivot {
                None => {
                    pivot = Some(if y < 0 { (-x, -y) } else { (x, y) });
                    continue;
                }
                Some((mut px, mut py)) => {
                    while y != 0 {
                        let q = py.div_euclid(y);
                        (px, py, x, y) = (x, y, px - q * x, py - q * y);
                    }
                    // (x, y) now has y = 0; (px, py) is the new pivot
                    if py < 0 {
                        (px, py) = (-px, -py);
                    }
                    pivot = Some((px, py));
                }
            }
        }
        a = gcd(a, x);
    }
    let Some((b, c)) = pivot else {
        return Err(Error::ZeroIdeal);
    };
    if a == 0 {
        return Err(Error::ZeroIdeal);
    }
    let ideal = IdealZModule {
        a,
        b: b.rem_euclid(a),
        c,
    };
    debug_assert!(a % c == 0 && ideal.b % c == 0, "HNF of an ideal: c | a, c | b");
    debug_assert!(ideal.contains(field.mul(QuadInt::rational(ideal.a), omega)));
    debug_assert!(ideal.contains(field.mul(QuadInt::new(ideal.b, ideal.c), omega)));
    Ok(ideal)
}

/// Least positive integer contained in the ideal; for an HNF basis this is `a`.
pub fn least_positive_integer(ideal: &IdealZModule) -> i64 {
    ideal.a
}

/// A reduced positive definite form `a x^2 + b xy + c y^2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReducedForm {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

/// All reduced forms of discriminant `-d`.
pub fn reduced_forms(d: i64) -> Vec<ReducedForm> {
    let mut forms = Vec::new();
    let mut a = 1i64;
    while 3 * a * a <= d {
        for b in -a + 1..=a {
            if (b * b + d) % (4 * a) != 0 {
                continue;
            }
            let c = (b * b + d) / (4 * a);
            if c < a {
                continue;
            }
            if (b.abs() == a || a == c) && b < 0 {
                continue;
            }
            forms.push(ReducedForm { a, b, c });
        }
        a += 1;
    }
    forms
}

pub fn class_number(field: &QuadraticField) -> u64 {
    field.class_number()
}

/// `alpha = (u + v*sqrt(-D))/2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LatticePoint {
    pub u: i64,
    pub v: i64,
}

impl LatticePoint {
    pub const fn new(u: i64, v: i64) -> Self {
        LatticePoint { u, v }
    }

    pub fn is_integral(&self, d: i64) -> bool {
        (self.u * self.u + d * self.v * self.v) % 4 == 0
    }

    /// `u^2 + D v^2 = 4 N(alpha)`.
    pub fn norm4(&self, d: i64) -> i64 {
        self.u * self.u + d * self.v * self.v
    }

    pub fn norm(&self, d: i64) -> i64 {
        self.norm4(d) / 4
    }

    pub fn conj(&self) -> LatticePoint {
        LatticePoint::new(self.u, -self.v)
    }
}

/// One generator per non-rational principal ideal of norm at most `norm_bound`,
/// normalized to `u > 0`, in order of (norm, u, v).
///
/// Points with `u = 0` are skipped: they are divisible by `sqrt(-D)` and so
/// never prime to the conductor.
pub fn principal_lattice_points(
    field: &QuadraticField,
    norm_bound: f64,
) -> impl Iterator<Item = LatticePoint> {
    let d = field.disc();
    let bound4 = (4.0 * norm_bound).floor() as i64;
    let mut points = Vec::new();
    if bound4 > 0 {
        let vmax = ((bound4 as f64) / d as f64).sqrt().floor() as i64 + 1;
        for v in -vmax..=vmax {
            if v == 0 {
                continue;
            }
            let rest = bound4 - d * v * v;
            if rest < 1 {
                continue;
            }
            let umax = (rest as f64).sqrt().floor() as i64 + 1;
            for u in 1..=umax {
                let p = LatticePoint::new(u, v);
                let n4 = p.norm4(d);
                if n4 <= bound4 && n4 % 4 == 0 {
                    points.push(p);
                }
            }
        }
    }
    points.sort_by_key(|p| (p.norm4(d), p.u, p.v));
    points.into_iter()
}
