//! Character sums `S_v(w) = sum_(M <= u < w, 4 | u^2 + D v^2) eps((u + v sqrt(-D))/2)`,
//! their reduction through `eps = eps0 * eps1`, the dyadic block decomposition
//! of the lattice sums, and a seeded survey of Burgess-type ratios.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::central::{grouped_lattice_terms, Evaluator};
use crate::character::{factor_eps, EpsCharacter, EpsFactorization};
use crate::error::{Error, Result};
use crate::quad::{gcd, LatticePoint, QuadraticField};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CharSumRecord {
    pub disc: i64,
    pub twist: i64,
    pub v: i64,
    pub m: i64,
    pub w: i64,
    pub sum_value: i64,
    pub terms: i64,
    /// `|S| / (|d| + M^(1/2) D^(3/16) |d|^(1/2))`.
    pub bound_ratio: f64,
}

fn burgess_denominator(disc: i64, twist: i64, m: i64) -> f64 {
    let d = twist.abs() as f64;
    d + (m as f64).sqrt() * (disc as f64).powf(3.0 / 16.0) * d.sqrt()
}

pub fn char_sum(ch: &EpsCharacter, v: i64, m: i64, w: i64) -> Result<CharSumRecord> {
    if !(0 < m && m <= w) {
        return Err(Error::invalid(format!("character sum needs 0 < M <= w (M={m}, w={w})")));
    }
    let disc = ch.field().disc();
    let (mut sum, mut terms) = (0i64, 0i64);
    for u in m..w {
        if (u * u + disc * v * v) % 4 == 0 {
            sum += ch.eps_value(LatticePoint::new(u, v)) as i64;
            terms += 1;
        }
    }
    Ok(CharSumRecord {
        disc,
        twist: ch.twist(),
        v,
        m,
        w,
        sum_value: sum,
        terms,
        bound_ratio: sum.abs() as f64 / burgess_denominator(disc, ch.twist(), m),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductionCheck {
    pub direct: i64,
    /// Sum over residues `0 <= j < k1`.
    pub reduced: i64,
    /// Same sum restricted to `1 <= j < k1`.
    pub reduced_from_one: i64,
    pub from_one_matches: bool,
}

fn ceil_div(a: i64, b: i64) -> i64 {
    -((-a).div_euclid(b))
}

/// Recomputes `S_v(w)` as
/// `sum_j eps0(k1/2) eps1((k0 j + v sqrt(-D))/2) sum_l eps0(l)` over `u = k0 j + k1 l`
/// and compares with direct summation.
pub fn reduction_identity_check(
    ch: &EpsCharacter,
    fac: &EpsFactorization,
    v: i64,
    m: i64,
    w: i64,
) -> Result<ReductionCheck> {
    let direct = char_sum(ch, v, m, w)?.sum_value;
    let field = ch.field();
    let disc = field.disc();
    let (k0, k1) = (fac.k0, fac.k1);
    let eps0_half = fac.eps0.value_at_integer(k1 / 2) as i64;
    let mut per_j = Vec::with_capacity(k1 as usize);
    for j in 0..k1 {
        if (j * j + disc * v * v) % 4 != 0 {
            per_j.push(0);
            continue;
        }
        let base = LatticePoint::new(k0 * j, v);
        let e1 = fac.eps1.value(field.from_lattice(base)) as i64;
        let lo = ceil_div(m - k0 * j, k1);
        let hi = ceil_div(w - k0 * j, k1);
        let inner: i64 = (lo..hi).map(|l| fac.eps0.value_at_integer(l) as i64).sum();
        per_j.push(eps0_half * e1 * inner);
    }
    let reduced: i64 = per_j.iter().sum();
    let reduced_from_one: i64 = per_j.iter().skip(1).sum();
    if reduced != direct {
        let witness = (0..k1)
            .flat_map(|j| {
                let lo = ceil_div(m - k0 * j, k1);
                let hi = ceil_div(w - k0 * j, k1);
                (lo..hi).map(move |l| (j, l))
            })
            .find(|&(j, l)| {
                let u = k0 * j + k1 * l;
                if (u * u + disc * v * v) % 4 != 0 {
                    return false;
                }
                let lhs = ch.eps_value(LatticePoint::new(u, v));
                let rhs = eps0_half as i8
                    * fac.eps1.value(field.from_lattice(LatticePoint::new(k0 * j, v)))
                    * fac.eps0.value_at_integer(l);
                lhs != rhs
            })
            .map(|(j, l)| format!("(j, u) = ({j}, {})", k0 * j + k1 * l))
            .unwrap_or_else(|| "no single-term witness".into());
        return Err(Error::IdentityMismatch(format!(
            "reduction identity: direct {direct} vs reduced {reduced} at {witness}"
        )));
    }
    Ok(ReductionCheck {
        direct,
        reduced,
        reduced_from_one,
        from_one_matches: reduced_from_one == direct,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DyadicReport {
    pub blocks: usize,
    pub block_bound: f64,
    pub i2_full: f64,
    pub i2_blocks: f64,
    pub c_full: f64,
    pub c_blocks: f64,
}

/// Splits the `I2` and `C` lattice sums into blocks `2^a <= u < 2^(a+1)`,
/// `2^b <= v < 2^(b+1)` and checks that the blocks reassemble to the full sums.
pub fn dyadic_consistency(ch: &EpsCharacter, tol: f64) -> Result<DyadicReport> {
    let ev = Evaluator::new(ch, tol)?;
    let disc = ch.field().disc();
    let mut report = DyadicReport {
        blocks: 0,
        block_bound: 4.0 * (2.0 * (disc * ch.twist().abs()) as f64).log2().powi(2),
        i2_full: 0.0,
        i2_blocks: 0.0,
        c_full: 0.0,
        c_blocks: 0.0,
    };
    for (kernel, reference, slot) in [
        (ev.value_kernel(), ev.i2().value, 0),
        (ev.derivative_kernel(), ev.c_term().value, 1),
    ] {
        let cut = ev.kernel_cut(kernel);
        let terms = grouped_lattice_terms(ch, cut);
        let mut blocks: BTreeMap<(u32, u32), f64> = BTreeMap::new();
        let mut full = 0.0;
        for (p, norm, weight) in &terms {
            let x = weight * kernel.at_norm(*norm);
            full += x;
            let key = (p.u.ilog2(), p.v.ilog2());
            *blocks.entry(key).or_insert(0.0) += x;
        }
        let reassembled: f64 = blocks.values().sum();
        if (full - reassembled).abs() > tol || (full - reference).abs() > tol {
            return Err(Error::IdentityMismatch(format!(
                "dyadic reassembly: full {full}, blocks {reassembled}, evaluator {reference}"
            )));
        }
        report.blocks = report.blocks.max(blocks.len());
        if slot == 0 {
            report.i2_full = full;
            report.i2_blocks = reassembled;
        } else {
            report.c_full = full;
            report.c_blocks = reassembled;
        }
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BurgessSurvey {
    pub seed: u64,
    pub samples: usize,
    pub max_ratio: f64,
    pub mean_ratio: f64,
    pub median_ratio: f64,
    pub p90_ratio: f64,
    /// The exponent of `D` in the denominator.
    pub exponent: f64,
    pub rows: Vec<CharSumRecord>,
}

/// Samples `(D, d, v, M, w)` from `seed` and tabulates `bound_ratio`.
/// Pairs that do not define a valid character are skipped.
pub fn burgess_ratio_survey(
    discs: &[i64],
    twists: &[i64],
    samples: usize,
    seed: u64,
) -> Result<BurgessSurvey> {
    let mut pairs = Vec::new();
    for &disc in discs {
        let Ok(field) = QuadraticField::new(disc) else {
            continue;
        };
        for &twist in twists {
            if gcd(twist, disc) != 1 {
                continue;
            }
            if let Ok(ch) = EpsCharacter::new(&field, twist, 1, 0) {
                pairs.push(ch);
            }
        }
    }
    if pairs.is_empty() {
        return Err(Error::invalid("survey has no admissible (D, d) pair"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tuples: Vec<(usize, i64, i64, i64)> = (0..samples)
        .map(|_| {
            let i = rng.gen_range(0..pairs.len());
            let v = rng.gen_range(1..=20);
            let m = rng.gen_range(1..=2000);
            let w = m + rng.gen_range(1..=2000);
            (i, v, m, w)
        })
        .collect();
    let rows: Vec<CharSumRecord> = tuples
        .par_iter()
        .map(|&(i, v, m, w)| char_sum(&pairs[i], v, m, w))
        .collect::<Result<_>>()?;
    let mut ratios: Vec<f64> = rows.iter().map(|r| r.bound_ratio).collect();
    ratios.sort_by(f64::total_cmp);
    let pick = |q: f64| {
        if ratios.is_empty() {
            0.0
        } else {
            ratios[((ratios.len() - 1) as f64 * q).round() as usize]
        }
    };
    Ok(BurgessSurvey {
        seed,
        samples,
        max_ratio: ratios.last().copied().unwrap_or(0.0),
        mean_ratio: ratios.iter().sum::<f64>() / ratios.len().max(1) as f64,
        median_ratio: pick(0.5),
        p90_ratio: pick(0.9),
        exponent: 3.0 / 16.0,
        rows,
    })
}

impl BurgessSurvey {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("D,d,v,M,w,S,bound_ratio\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.disc, r.twist, r.v, r.m, r.w, r.sum_value, r.bound_ratio
            ));
        }
        out
    }
}

/// Seeded `(D, d, v, M, w)` tuples for the reduction identity.
pub fn reduction_tuples(discs: &[i64], twists: &[i64], count: usize, seed: u64) -> Vec<(i64, i64, i64, i64, i64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let disc = discs[rng.gen_range(0..discs.len())];
            let twist = twists[rng.gen_range(0..twists.len())];
            let v = rng.gen_range(-30..=30);
            let m = rng.gen_range(1..=500);
            let w = rng.gen_range(m..=500);
            (disc, twist, v, m, w)
        })
        .collect()
}

/// Convenience wrapper building the character and factorization.
pub fn check_reduction_tuple(disc: i64, twist: i64, v: i64, m: i64, w: i64) -> Result<ReductionCheck> {
    let field = QuadraticField::new(disc)?;
    let ch = EpsCharacter::new(&field, twist, 1, 0)?;
    let fac = factor_eps(&ch)?;
    reduction_identity_check(&ch, &fac, v, m, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn character(disc: i64, twist: i64) -> EpsCharacter {
        EpsCharacter::new(&QuadraticField::new(disc).unwrap(), twist, 1, 0).unwrap()
    }

    #[test]
    fn char_sum_examples() {
        let ch = character(7, 1);
        let r = char_sum(&ch, 1, 1, 4).unwrap();
        assert_eq!((r.sum_value, r.terms), (0, 2));
        assert_eq!(char_sum(&ch, 1, 5, 5).unwrap().sum_value, 0);
        assert!(char_sum(&ch, 1, 0, 5).is_err());
        assert!(char_sum(&ch, 1, 6, 5).is_err());
    }

    #[test]
    fn reduction_identity_on_seeded_tuples() {
        for (disc, twist, v, m, w) in reduction_tuples(&[7, 11, 23], &[1, 5, -3], 100, 42) {
            if gcd(disc, twist) != 1 {
                continue;
            }
            let check = check_reduction_tuple(disc, twist, v, m, w).unwrap();
            assert_eq!(check.direct, check.reduced);
        }
    }

    #[test]
    fn reduction_identity_for_div8_fields() {
        for (disc, twist) in [(8, 1), (8, 5), (24, -7), (24, 5), (40, -3)] {
            let ch = character(disc, twist);
            let fac = factor_eps(&ch).unwrap();
            for v in -6..=6 {
                let check = reduction_identity_check(&ch, &fac, v, 1, 300).unwrap();
                assert_eq!(check.direct, check.reduced);
            }
        }
    }

    #[test]
    fn residue_zero_is_needed_for_even_v() {
        // d = 1 gives k1 = 2, and u = 0 mod 2 only appears through j = 0
        let ch = character(7, 1);
        let fac = factor_eps(&ch).unwrap();
        let check = reduction_identity_check(&ch, &fac, 2, 1, 200).unwrap();
        assert_eq!(check.direct, check.reduced);
        assert!(!check.from_one_matches);
    }

    #[test]
    fn dyadic_blocks_reassemble() {
        for (disc, twist, k) in [(7, 1, 1), (23, 5, 1), (24, -7, 2)] {
            let ch = EpsCharacter::new(&QuadraticField::new(disc).unwrap(), twist, k, 0).unwrap();
            let report = dyadic_consistency(&ch, 1e-9).unwrap();
            assert!(report.blocks as f64 <= report.block_bound);
        }
    }

    #[test]
    fn survey_is_deterministic() {
        let a = burgess_ratio_survey(&[7, 23, 47], &[1, 5], 200, 9).unwrap();
        let b = burgess_ratio_survey(&[7, 23, 47], &[1, 5], 200, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.rows.iter().all(|r| r.bound_ratio.is_finite() && r.bound_ratio >= 0.0));
        assert!(a.rows.iter().all(|r| r.sum_value.abs() <= r.terms));
    }
}
