//! Canonical quadratic characters `eps_can` on residues modulo the conductor
//! `(2 sqrt(-D), D)`, their twists by `n -> (d/n)` lifted through the norm,
//! and the split `eps = eps0 * eps1` used by the character-sum identities.
//!
//! The Hecke character on a principal ideal is `chi((alpha)) = eps(alpha) alpha^(2k-1)`;
//! `eps(-1) = -1` makes this independent of the sign of the generator.

use base64::Engine;
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{
    gcd, ideal_from_generators, is_fundamental_discriminant, kronecker, least_positive_integer,
    mod_inverse, IdealZModule, LatticePoint, ParityClass, QuadInt, QuadraticField,
};

/// A `{-1, 0, +1}`-valued function on residues modulo an ideal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResidueCharacter {
    modulus: IdealZModule,
    table: Vec<i8>,
}

impl ResidueCharacter {
    pub fn modulus(&self) -> IdealZModule {
        self.modulus
    }

    pub fn table(&self) -> &[i8] {
        &self.table
    }

    pub fn value(&self, q: QuadInt) -> i8 {
        self.table[self.modulus.residue_index(q)]
    }

    pub fn value_at_integer(&self, n: i64) -> i8 {
        self.value(QuadInt::rational(n))
    }
}

/// Residues modulo `modulus` whose norm is prime to the norm of the modulus.
///
/// For the conductors in this crate (products of ramified primes and rational
/// integers) this is exactly the unit group of the residue ring.
fn unit_indices(field: &QuadraticField, modulus: &IdealZModule) -> Vec<usize> {
    let n = modulus.norm();
    (0..n as usize)
        .filter(|&i| gcd(field.norm(modulus.residue(i)), n) == 1)
        .collect()
}

/// The ideal `(2 sqrt(-D), D)`.
pub fn canonical_conductor(field: &QuadraticField) -> IdealZModule {
    let s = field.sqrt_neg_d();
    ideal_from_generators(field, &[s.scale(2), QuadInt::rational(field.disc())])
        .expect("nonzero generators")
}

/// All canonical characters of the field at the residue level.
///
/// For odd `D` the character is the closed form `alpha -> (-D/a)` with
/// `a = alpha mod sqrt(-D)`. For `8 | D` every solution of the constraint
/// system is returned, ordered lexicographically by table.
pub fn build_canonical(field: &QuadraticField) -> Result<Vec<ResidueCharacter>> {
    match field.parity() {
        ParityClass::Odd => Ok(vec![canonical_closed_form(field)]),
        ParityClass::Div8 => solve_canonical(field, &canonical_conductor(field)),
    }
}

fn canonical_closed_form(field: &QuadraticField) -> ResidueCharacter {
    let modulus = canonical_conductor(field);
    let d = field.disc();
    // modulus is (sqrt(-D)) with HNF (D, b, 1): residues are integers mod D
    debug_assert_eq!((modulus.a, modulus.c), (d, 1));
    let table = (0..modulus.norm() as usize)
        .map(|i| kronecker(-d, modulus.residue(i).x))
        .collect();
    ResidueCharacter { modulus, table }
}

/// Finds every homomorphism `(O/modulus)^x -> {+-1}` with `eps(n) = (-D/n)` on
/// integers and `eps(-1) = -1`, by linear algebra over GF(2) on a basis of the
/// unit group modulo squares.
pub fn solve_canonical(
    field: &QuadraticField,
    modulus: &IdealZModule,
) -> Result<Vec<ResidueCharacter>> {
    let d = field.disc();
    let size = modulus.norm() as usize;
    let units = unit_indices(field, modulus);
    let mul = |i: usize, j: usize| {
        modulus.residue_index(field.mul(modulus.residue(i), modulus.residue(j)))
    };

    // coordinates of each unit in G / G^2
    let mut mask: Vec<Option<u64>> = vec![None; size];
    for &g in &units {
        mask[mul(g, g)] = Some(0);
    }
    let mut rank = 0usize;
    for &g in &units {
        if mask[g].is_some() {
            continue;
        }
        if rank == 64 {
            return Err(Error::InconsistentCharacter);
        }
        let current: Vec<(usize, u64)> = mask
            .iter()
            .enumerate()
            .filter_map(|(i, m)| m.map(|m| (i, m)))
            .collect();
        for (s, m) in current {
            mask[mul(g, s)] = Some(m ^ (1u64 << rank));
        }
        rank += 1;
    }

    let mut rows: Vec<(u64, bool)> = Vec::new();
    for n in 1..modulus.a.max(2) {
        let idx = modulus.residue_index(QuadInt::rational(n));
        if let Some(m) = mask[idx] {
            rows.push((m, kronecker(-d, n) == -1));
        }
    }
    let minus_one = modulus.residue_index(QuadInt::rational(-1));
    if let Some(m) = mask[minus_one] {
        rows.push((m, true));
    }

    let solutions = solve_gf2(rows, rank).ok_or(Error::InconsistentCharacter)?;
    let mut tables: Vec<Vec<i8>> = solutions
        .into_iter()
        .map(|e| {
            mask.iter()
                .map(|m| match m {
                    Some(m) if (m & e).count_ones() % 2 == 1 => -1,
                    Some(_) => 1,
                    None => 0,
                })
                .collect()
        })
        .collect();
    tables.sort();
    Ok(tables
        .into_iter()
        .map(|table| ResidueCharacter {
            modulus: *modulus,
            table,
        })
        .collect())
}

/// All `e` in GF(2)^n with `popcount(row & e) = rhs (mod 2)` for every row.
fn solve_gf2(mut rows: Vec<(u64, bool)>, n: usize) -> Option<Vec<u64>> {
    let mut pivots: Vec<(usize, usize)> = Vec::new(); // (row, column)
    let mut next = 0usize;
    for col in 0..n {
        let bit = 1u64 << col;
        let Some(r) = (next..rows.len()).find(|&r| rows[r].0 & bit != 0) else {
            continue;
        };
        rows.swap(next, r);
        let (prow, prhs) = rows[next];
        for (i, row) in rows.iter_mut().enumerate() {
            if i != next && row.0 & bit != 0 {
                row.0 ^= prow;
                row.1 ^= prhs;
            }
        }
        pivots.push((next, col));
        next += 1;
    }
    if rows[next..].iter().any(|&(m, rhs)| m == 0 && rhs) {
        return None;
    }
    let pivot_cols: u64 = pivots.iter().map(|&(_, c)| 1u64 << c).sum();
    let free: Vec<usize> = (0..n).filter(|c| pivot_cols & (1u64 << c) == 0).collect();
    let mut out = Vec::with_capacity(1 << free.len());
    for choice in 0u64..(1u64 << free.len()) {
        let mut e = 0u64;
        for (i, &c) in free.iter().enumerate() {
            if choice & (1 << i) != 0 {
                e |= 1 << c;
            }
        }
        for &(r, c) in &pivots {
            let (m, rhs) = rows[r];
            let rest = (m & !(1u64 << c) & e).count_ones() % 2 == 1;
            if rhs ^ rest {
                e |= 1 << c;
            }
        }
        out.push(e);
    }
    Some(out)
}

fn validate_twist(field: &QuadraticField, twist: i64) -> Result<()> {
    if twist != 1 && !is_fundamental_discriminant(twist) {
        return Err(Error::invalid(format!(
            "twist {twist} is not a fundamental discriminant"
        )));
    }
    if gcd(twist, field.disc()) != 1 {
        return Err(Error::invalid(format!(
            "twist {twist} is not prime to D = {}",
            field.disc()
        )));
    }
    Ok(())
}

fn validate_weight(field: &QuadraticField, weight: u32) -> Result<()> {
    if weight == 0 {
        return Err(Error::invalid("weight k must be at least 1"));
    }
    let h = field.class_number() as i64;
    if gcd(2 * weight as i64 - 1, h) != 1 {
        return Err(Error::invalid(format!(
            "k shares factor with class number: gcd(2k-1, h) = gcd({}, {h}) > 1",
            2 * weight - 1
        )));
    }
    Ok(())
}

/// The twisted character `eps = eps_can * (d/N(.))` together with the weight `k`.
#[derive(Clone, Debug)]
pub struct EpsCharacter {
    field: QuadraticField,
    twist: i64,
    weight: u32,
    variant_index: usize,
    variant_count: usize,
    canonical: ResidueCharacter,
    conductor: IdealZModule,
    table: Vec<i8>,
}

impl EpsCharacter {
    /// Builds the twisted character for variant `variant` of the canonical character.
    pub fn new(field: &QuadraticField, twist: i64, weight: u32, variant: usize) -> Result<Self> {
        validate_twist(field, twist)?;
        validate_weight(field, weight)?;
        let mut variants = build_canonical(field)?;
        let count = variants.len();
        if variant >= count {
            return Err(Error::invalid(format!(
                "variant {variant} out of range: D = {} has {count} canonical character(s)",
                field.disc()
            )));
        }
        let canonical = variants.swap_remove(variant);
        Ok(Self::assemble(field, canonical, twist, weight, variant, count))
    }

    /// Number of residue-level canonical characters of the field.
    pub fn variant_count(field: &QuadraticField) -> Result<usize> {
        Ok(build_canonical(field)?.len())
    }

    fn assemble(
        field: &QuadraticField,
        canonical: ResidueCharacter,
        twist: i64,
        weight: u32,
        variant_index: usize,
        variant_count: usize,
    ) -> Self {
        let s = field.sqrt_neg_d();
        let conductor = ideal_from_generators(
            field,
            &[s.scale(2 * twist), QuadInt::rational(twist * field.disc())],
        )
        .expect("nonzero conductor");
        let n = conductor.norm();
        let table = (0..n as usize)
            .map(|i| {
                let q = conductor.residue(i);
                let norm = field.norm(q);
                if gcd(norm, n) != 1 {
                    0
                } else {
                    canonical.value(q) * kronecker(twist, norm)
                }
            })
            .collect();
        EpsCharacter {
            field: field.clone(),
            twist,
            weight,
            variant_index,
            variant_count,
            canonical,
            conductor,
            table,
        }
    }

    pub fn field(&self) -> &QuadraticField {
        &self.field
    }

    pub fn twist(&self) -> i64 {
        self.twist
    }

    pub fn weight(&self) -> u32 {
        self.weight
    }

    pub fn variant_index(&self) -> usize {
        self.variant_index
    }

    pub fn variants(&self) -> usize {
        self.variant_count
    }

    /// The conductor `d (2 sqrt(-D), D)` as an HNF module.
    pub fn conductor(&self) -> IdealZModule {
        self.conductor
    }

    pub fn canonical(&self) -> &ResidueCharacter {
        &self.canonical
    }

    pub fn table(&self) -> &[i8] {
        &self.table
    }

    /// Same table, different weight.
    pub fn with_weight(&self, weight: u32) -> Result<Self> {
        validate_weight(&self.field, weight)?;
        let mut out = self.clone();
        out.weight = weight;
        Ok(out)
    }

    pub fn eps(&self, q: QuadInt) -> i8 {
        self.table[self.conductor.residue_index(q)]
    }

    /// `eps(alpha)` for `alpha = (u + v sqrt(-D))/2`; zero iff `(alpha)` is not
    /// prime to the conductor.
    pub fn eps_value(&self, p: LatticePoint) -> i8 {
        self.eps(self.field.from_lattice(p))
    }

    pub fn canonical_value(&self, p: LatticePoint) -> i8 {
        self.canonical.value(self.field.from_lattice(p))
    }

    /// `chi((alpha)) = eps(alpha) alpha^(2k-1)`.
    ///
    /// The power is taken exactly in `Z[1/2, sqrt(-D)]` when it fits in
    /// 128-bit integers, otherwise in polar form.
    pub fn chi_value(&self, p: LatticePoint) -> Complex64 {
        let e = self.eps_value(p);
        if e == 0 {
            return Complex64::new(0.0, 0.0);
        }
        let m = 2 * self.weight - 1;
        let d = self.field.disc();
        let power = exact_power(p.u as i128, p.v as i128, d as i128, m).unwrap_or_else(|| {
            let z = Complex64::new(p.u as f64 / 2.0, p.v as f64 * (d as f64).sqrt() / 2.0);
            z.powu(m)
        });
        power * e as f64
    }

    /// Negates one table entry. Used by the self-test to check that
    /// [`validate_character`] notices corrupted tables.
    pub fn flip_entry(&mut self, index: usize) {
        self.table[index] = -self.table[index];
    }

    /// First residue index whose entry is nonzero.
    pub fn first_unit_index(&self) -> usize {
        self.table.iter().position(|&s| s != 0).unwrap_or(0)
    }

    pub fn to_blob(&self) -> CharacterBlob {
        CharacterBlob {
            version: CharacterBlob::VERSION,
            disc: self.field.disc(),
            twist: self.twist,
            variant_index: self.variant_index,
            variant_count: self.variant_count,
            canonical_conductor: self.canonical.modulus,
            conductor: self.conductor,
            residue_count: self.table.len(),
            canonical_table: pack_signs(&self.canonical.table),
            table: pack_signs(&self.table),
        }
    }

    /// Restores a character from a blob; the weight is not part of the table.
    pub fn from_blob(blob: &CharacterBlob, weight: u32) -> Result<Self> {
        if blob.version != CharacterBlob::VERSION {
            return Err(Error::Blob(format!("unsupported version {}", blob.version)));
        }
        let field = QuadraticField::new(blob.disc)?;
        validate_twist(&field, blob.twist)?;
        validate_weight(&field, weight)?;
        let canonical_len = blob.canonical_conductor.norm() as usize;
        if blob.residue_count != blob.conductor.norm() as usize {
            return Err(Error::Blob("residue count does not match conductor".into()));
        }
        let canonical = ResidueCharacter {
            modulus: blob.canonical_conductor,
            table: unpack_signs(&blob.canonical_table, canonical_len)?,
        };
        let table = unpack_signs(&blob.table, blob.residue_count)?;
        let ch = EpsCharacter {
            field,
            twist: blob.twist,
            weight,
            variant_index: blob.variant_index,
            variant_count: blob.variant_count,
            canonical,
            conductor: blob.conductor,
            table,
        };
        let rebuilt = Self::assemble(
            &ch.field,
            ch.canonical.clone(),
            ch.twist,
            weight,
            ch.variant_index,
            ch.variant_count,
        );
        if rebuilt.conductor != ch.conductor || rebuilt.table != ch.table {
            return Err(Error::Blob("table inconsistent with its canonical part".into()));
        }
        Ok(ch)
    }
}

/// `((u + v sqrt(-D))/2)^m` as a complex number, or `None` on overflow.
fn exact_power(u: i128, v: i128, d: i128, m: u32) -> Option<Complex64> {
    // (re + im sqrt(-D)) / 2^shift
    let (mut re, mut im, mut shift) = (1i128, 0i128, 0u32);
    for _ in 0..m {
        let nre = re.checked_mul(u)?.checked_sub(d.checked_mul(im)?.checked_mul(v)?)?;
        let nim = re.checked_mul(v)?.checked_add(im.checked_mul(u)?)?;
        re = nre;
        im = nim;
        shift += 1;
        while shift > 0 && re % 2 == 0 && im % 2 == 0 {
            re /= 2;
            im /= 2;
            shift -= 1;
        }
    }
    let scale = 2f64.powi(-(shift as i32));
    Some(Complex64::new(
        re as f64 * scale,
        im as f64 * (d as f64).sqrt() * scale,
    ))
}

/// Serialized character table for reuse across runs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CharacterBlob {
    pub version: u32,
    pub disc: i64,
    pub twist: i64,
    pub variant_index: usize,
    pub variant_count: usize,
    pub canonical_conductor: IdealZModule,
    pub conductor: IdealZModule,
    pub residue_count: usize,
    /// Two bits per residue (00 = 0, 01 = +1, 10 = -1), base64.
    pub canonical_table: String,
    pub table: String,
}

impl CharacterBlob {
    pub const VERSION: u32 = 1;
}

fn pack_signs(table: &[i8]) -> String {
    let mut bytes = vec![0u8; table.len().div_ceil(4)];
    for (i, &s) in table.iter().enumerate() {
        let code = match s {
            1 => 1u8,
            -1 => 2u8,
            _ => 0u8,
        };
        bytes[i / 4] |= code << (2 * (i % 4));
    }
    base64::engine::general_purpose::STANDARD.encode(bytes)
}

fn unpack_signs(packed: &str, len: usize) -> Result<Vec<i8>> {
    let bytes = base64::engine::general_purpose::STANDARD
        .decode(packed)
        .map_err(|e| Error::Blob(e.to_string()))?;
    if bytes.len() != len.div_ceil(4) {
        return Err(Error::Blob("packed table has wrong length".into()));
    }
    (0..len)
        .map(|i| match (bytes[i / 4] >> (2 * (i % 4))) & 3 {
            0 => Ok(0),
            1 => Ok(1),
            2 => Ok(-1),
            _ => Err(Error::Blob("invalid sign code".into())),
        })
        .collect()
}

/// `eps = eps0 * eps1` with coprime conductors; `k0` and `k1 / 2` are the
/// least positive integers in the two conductors.
#[derive(Clone, Debug)]
pub struct EpsFactorization {
    pub eps0: ResidueCharacter,
    pub eps1: ResidueCharacter,
    pub k0: i64,
    pub k1: i64,
}

/// Conductors of `eps0` and `eps1`.
///
/// `eps0` carries the odd part of `sqrt(-D)`, `eps1` carries the twist and the
/// whole 2-part of the conductor.
pub fn factor_conductors(field: &QuadraticField, twist: i64) -> (IdealZModule, IdealZModule) {
    let s = field.sqrt_neg_d();
    match field.parity() {
        ParityClass::Odd => (
            ideal_from_generators(field, &[s]).expect("nonzero"),
            ideal_from_generators(field, &[QuadInt::rational(twist)]).expect("nonzero"),
        ),
        ParityClass::Div8 => {
            let m = field.disc() / 8;
            (
                ideal_from_generators(field, &[QuadInt::rational(m), field.omega()])
                    .expect("nonzero"),
                ideal_from_generators(
                    field,
                    &[s.scale(2 * twist), QuadInt::rational(8 * twist)],
                )
                .expect("nonzero"),
            )
        }
    }
}

pub fn factor_eps(ch: &EpsCharacter) -> Result<EpsFactorization> {
    let field = ch.field();
    let (f0, f1) = factor_conductors(field, ch.twist());
    let k0 = least_positive_integer(&f0);
    let half_k1 = least_positive_integer(&f1);
    if gcd(k0, half_k1) != 1 {
        return Err(Error::Factorization(format!(
            "conductors not coprime: k0 = {k0}, k1/2 = {half_k1}"
        )));
    }
    // integer idempotents: e0 = 1 mod k0, 0 mod k1/2; e1 the other way round
    let e0 = half_k1 * mod_inverse(half_k1, k0).unwrap_or(0);
    let e1 = k0 * mod_inverse(k0, half_k1).unwrap_or(0);

    let restrict = |modulus: IdealZModule, lift: &dyn Fn(QuadInt) -> QuadInt| {
        let n = modulus.norm();
        let table = (0..n as usize)
            .map(|i| {
                let r = modulus.residue(i);
                if gcd(field.norm(r), n) != 1 {
                    0
                } else {
                    ch.eps(lift(r))
                }
            })
            .collect();
        ResidueCharacter { modulus, table }
    };
    let eps0 = restrict(f0, &|r| r.scale(e0) + QuadInt::rational(e1));
    let eps1 = restrict(f1, &|r| r.scale(e1) + QuadInt::rational(e0));

    let conductor = ch.conductor();
    for i in 0..conductor.norm() as usize {
        let q = conductor.residue(i);
        let lhs = ch.eps(q);
        let rhs = eps0.value(q) * eps1.value(q);
        if lhs != rhs {
            return Err(Error::Factorization(format!(
                "eps({}, {}) = {lhs} but eps0*eps1 = {rhs}",
                q.x, q.y
            )));
        }
    }
    Ok(EpsFactorization {
        eps0,
        eps1,
        k0,
        k1: 2 * half_k1,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub witness: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct ValidationReport {
    pub disc: i64,
    pub twist: i64,
    pub variant_index: usize,
    pub checks: Vec<CheckOutcome>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn first_failure(&self) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| !c.passed)
    }
}

/// Checks the defining properties of the twisted character table:
/// multiplicativity, agreement with `(-D/n)` on integers, `eps(-1) = -1`,
/// invariance under conjugation, and (odd `D`) the closed form.
pub fn validate_character(ch: &EpsCharacter) -> ValidationReport {
    let field = ch.field();
    let conductor = ch.conductor();
    let n = conductor.norm();
    let units = unit_indices(field, &conductor);
    let mut checks = Vec::new();

    // every unit against a seeded sample of multipliers
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let multipliers: Vec<usize> = units.choose_multiple(&mut rng, 8).copied().collect();
    let mut witness = None;
    'outer: for &g in &units {
        for &h in &multipliers {
            let (a, b) = (conductor.residue(g), conductor.residue(h));
            let prod = field.mul(a, b);
            if ch.eps(prod) != ch.eps(a) * ch.eps(b) {
                witness = Some(format!(
                    "eps(x*y) != eps(x)*eps(y) at x = {} + {}w, y = {} + {}w",
                    a.x, a.y, b.x, b.y
                ));
                break 'outer;
            }
        }
    }
    checks.push(CheckOutcome {
        name: "homomorphism".into(),
        passed: witness.is_none(),
        witness,
    });

    let d = field.disc();
    let witness = (1..1000i64)
        .filter(|&m| gcd(m, n) == 1)
        .find(|&m| ch.eps(QuadInt::rational(m)) != kronecker(-d, m))
        .map(|m| format!("eps({m}) = {} but (-D/{m}) = {}", ch.eps(QuadInt::rational(m)), kronecker(-d, m)));
    checks.push(CheckOutcome {
        name: "integer compatibility".into(),
        passed: witness.is_none(),
        witness,
    });

    let at_minus_one = ch.eps(QuadInt::rational(-1));
    checks.push(CheckOutcome {
        name: "eps(-1) = -1".into(),
        passed: at_minus_one == -1,
        witness: (at_minus_one != -1).then(|| format!("eps(-1) = {at_minus_one}")),
    });

    let witness = units
        .iter()
        .map(|&i| conductor.residue(i))
        .find(|&q| ch.eps(field.conj(q)) != ch.eps(q))
        .map(|q| format!("eps(conj) != eps at {} + {}w", q.x, q.y));
    checks.push(CheckOutcome {
        name: "conjugation invariance".into(),
        passed: witness.is_none(),
        witness,
    });

    if field.parity() == ParityClass::Odd {
        let closed = canonical_closed_form(field);
        let witness = (0..n as usize)
            .map(|i| conductor.residue(i))
            .find(|&q| {
                let e = ch.eps(q);
                e != 0 && e != closed.value(q) * kronecker(ch.twist(), field.norm(q))
            })
            .map(|q| format!("table differs from closed form at {} + {}w", q.x, q.y));
        checks.push(CheckOutcome {
            name: "closed form".into(),
            passed: witness.is_none(),
            witness,
        });
    }

    ValidationReport {
        disc: d,
        twist: ch.twist(),
        variant_index: ch.variant_index(),
        checks,
    }
}
