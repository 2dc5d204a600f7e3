//! Desk-scale invariant suites for every module, with optional fault injection.

use std::f64::consts::PI;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::central::{analyze, i1, r1_expansion, rational_part_by_contour, rk, AnalysisOptions};
use crate::character::{validate_character, EpsCharacter};
use crate::charsum::{check_reduction_tuple, dyadic_consistency, reduction_tuples};
use crate::dirichlet::{an_by_convolution, an_coefficients, l_d_at_1};
use crate::kernels::{log_kernel_ratio, log_kernel_ratio_quadrature, miller_yang_i, miller_yang_series};
use crate::quad::{gcd, is_fundamental_discriminant, kronecker, reduced_forms, QuadraticField};
use crate::sweep::DEFAULT_TWISTS;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub name: String,
    pub passed: bool,
    pub checks: usize,
    pub elapsed_ms: f64,
    pub witness: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelftestReport {
    pub suites: Vec<SuiteResult>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(|s| s.passed)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SelftestOptions {
    pub tol: f64,
    /// Flip one entry of a character table before validating it.
    pub inject_fault: bool,
}

impl Default for SelftestOptions {
    fn default() -> Self {
        SelftestOptions {
            tol: 1e-8,
            inject_fault: false,
        }
    }
}

type SuiteOutcome = std::result::Result<usize, String>;

fn ensure(cond: bool, witness: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(witness())
    }
}

fn quad_arith() -> SuiteOutcome {
    let mut checks = 0;
    for a in -40i64..=40 {
        for b in -40i64..=40 {
            for n in [3i64, 8, 15, 21, 40] {
                let lhs = kronecker(a * b, n);
                let rhs = kronecker(a, n) * kronecker(b, n);
                ensure(lhs == rhs, || format!("kronecker({a}*{b}, {n}) not multiplicative"))?;
                checks += 1;
            }
        }
    }
    for disc in (7..=500).step_by(2) {
        if !is_fundamental_discriminant(-disc) {
            continue;
        }
        let forms = reduced_forms(disc).len() as f64;
        let l1 = l_d_at_1(disc, 1, 1e-10).map_err(|e| format!("L(1) for D={disc}: {e}"))?;
        let h = (disc as f64).sqrt() * l1.value / PI;
        ensure((h - forms).abs() < 1e-6, || {
            format!("D={disc}: {forms} reduced forms, class number formula gives {h}")
        })?;
        checks += 1;
    }
    let l7 = l_d_at_1(7, 1, 1e-12).map_err(|e| e.to_string())?.value;
    ensure((l7 - PI / 7f64.sqrt()).abs() < 1e-8, || format!("L(1, chi_-7) = {l7}"))?;
    Ok(checks + 1)
}

fn hecke_char(inject_fault: bool) -> SuiteOutcome {
    let mut checks = 0;
    for disc in 5..=300 {
        let Ok(field) = QuadraticField::new(disc) else {
            continue;
        };
        let variants = EpsCharacter::variant_count(&field).map_err(|e| format!("D={disc}: {e}"))?;
        for twist in DEFAULT_TWISTS {
            if gcd(twist, disc) != 1 {
                continue;
            }
            for variant in 0..variants {
                let mut ch = EpsCharacter::new(&field, twist, 1, variant)
                    .map_err(|e| format!("({disc},{twist},{variant}): {e}"))?;
                if inject_fault && disc == 7 && twist == 1 {
                    ch.flip_entry(ch.first_unit_index());
                }
                let report = validate_character(&ch);
                if let Some(fail) = report.first_failure() {
                    return Err(format!(
                        "({disc},{twist},variant {variant}) failed '{}': {}",
                        fail.name,
                        fail.witness.as_deref().unwrap_or("no witness")
                    ));
                }
                let back = EpsCharacter::from_blob(&ch.to_blob(), 1)
                    .map_err(|e| format!("({disc},{twist},{variant}) blob: {e}"))?;
                ensure(back.table() == ch.table(), || format!("({disc},{twist}) blob round trip"))?;
                checks += 1;
            }
        }
    }
    Ok(checks)
}

fn analytic_kernels(tol: f64) -> SuiteOutcome {
    let mut checks = 0;
    let at4 = miller_yang_i(4.0, tol).map_err(|e| e.to_string())?;
    ensure(at4 > 0.0351, || format!("I(4) = {at4}"))?;
    for i in 0..=16 {
        let x = 0.25 * 2f64.powf(i as f64 * 0.5);
        let v = miller_yang_i(x, tol).map_err(|e| format!("I({x}): {e}"))?;
        ensure(v > 0.0, || format!("I({x}) = {v}"))?;
        checks += 1;
    }
    for x in [0.5, 2.0, 9.0] {
        let a = miller_yang_i(x, tol).map_err(|e| e.to_string())?;
        let b = miller_yang_series(x, tol).map_err(|e| e.to_string())?;
        ensure((a - b).abs() < 10.0 * tol, || format!("I({x}): contour {a}, series {b}"))?;
        checks += 1;
    }
    for k in 1..=3 {
        for y in [0.05, 0.7, 3.0, 20.0] {
            let a = log_kernel_ratio(k, y).map_err(|e| e.to_string())?;
            let b = log_kernel_ratio_quadrature(k, y, 1e-11).map_err(|e| e.to_string())?;
            ensure((a - b).abs() < 1e-9 * a.abs().max(1.0), || {
                format!("log kernel k={k}, y={y}: closed {a}, quadrature {b}")
            })?;
            checks += 1;
        }
    }
    Ok(checks + 1)
}

fn dirichlet_series() -> SuiteOutcome {
    let mut checks = 0;
    for disc in [7, 8, 11, 23, 24] {
        for twist in [1, 5, -3] {
            if gcd(twist, disc) != 1 {
                continue;
            }
            let a = an_coefficients(disc, twist, 100_000).map_err(|e| format!("({disc},{twist}): {e}"))?;
            ensure(a[1] == 1, || format!("({disc},{twist}): a_1 = {}", a[1]))?;
            if let Some(n) = (1..a.len()).find(|&n| a[n] < 0) {
                return Err(format!("({disc},{twist}): a_{n} = {}", a[n]));
            }
            let b = an_by_convolution(disc, twist, 10_000).map_err(|e| e.to_string())?;
            if let Some(n) = (1..b.len()).find(|&n| a[n] != b[n]) {
                return Err(format!("({disc},{twist}): a_{n} Euler {} vs convolution {}", a[n], b[n]));
            }
            checks += 1;
        }
    }
    Ok(checks)
}

fn central_values(tol: f64) -> SuiteOutcome {
    let mut checks = 0;
    let cases = [(7, 1, 1), (8, 5, 1), (11, -3, 1), (15, -7, 2), (23, 5, 1), (24, 1, 2), (31, -4, 1)];
    for (disc, twist, k) in cases {
        let field = QuadraticField::new(disc).map_err(|e| e.to_string())?;
        let ch = EpsCharacter::new(&field, twist, k, 0).map_err(|e| e.to_string())?;
        let report = analyze(&ch, tol, AnalysisOptions::default())
            .map_err(|e| format!("({disc},{twist},{k}): {e}"))?;
        let rn = &report.root_number;
        ensure(rn.residual < 1e-4, || format!("({disc},{twist},{k}): W solved {}", rn.solved))?;
        ensure(rn.spread <= 3.0 * tol * rn.scale, || {
            format!("({disc},{twist},{k}): AFE spread {} over x in {{1/2,1,2}}", rn.spread)
        })?;
        checks += 1;
    }
    for (disc, twist, k) in [(7, 1, 1), (23, -3, 2), (8, 5, 1)] {
        let closed = i1(disc, twist, k, 1e-10).map_err(|e| e.to_string())?.value;
        let contour = rational_part_by_contour(disc, twist, k, 1, 1e-8).map_err(|e| e.to_string())?;
        ensure((closed - contour).abs() < 1e-6, || {
            format!("I1({disc},{twist},{k}): closed {closed}, contour {contour}")
        })?;
        checks += 1;
    }
    for (disc, twist) in [(7, 1), (19, 5), (8, -3)] {
        let kernel = rk(disc, twist, 1, 1e-9).map_err(|e| e.to_string())?.value;
        let expansion = r1_expansion(disc, twist, 1e-9).map_err(|e| e.to_string())?.value;
        ensure((kernel - expansion).abs() < 2e-6, || {
            format!("R1({disc},{twist}): kernel {kernel}, expansion {expansion}")
        })?;
        checks += 1;
    }
    Ok(checks)
}

fn charsum_lab(tol: f64) -> SuiteOutcome {
    let mut checks = 0;
    for (disc, twist, v, m, w) in reduction_tuples(&[7, 11, 23], &[1, 5, -3], 100, 2024) {
        let r = check_reduction_tuple(disc, twist, v, m, w)
            .map_err(|e| format!("({disc},{twist},v={v},M={m},w={w}): {e}"))?;
        ensure(r.direct == r.reduced, || format!("({disc},{twist},{v},{m},{w}) mismatch"))?;
        checks += 1;
    }
    for (disc, twist) in [(7, 1), (23, 5), (8, 1), (11, -3), (19, -4), (24, 5), (31, 1), (40, -3), (43, 5), (47, -7)] {
        let field = QuadraticField::new(disc).map_err(|e| e.to_string())?;
        let ch = EpsCharacter::new(&field, twist, 1, 0).map_err(|e| e.to_string())?;
        let r = dyadic_consistency(&ch, tol).map_err(|e| format!("({disc},{twist}): {e}"))?;
        ensure(r.blocks as f64 <= r.block_bound, || {
            format!("({disc},{twist}): {} dyadic blocks exceed {}", r.blocks, r.block_bound)
        })?;
        checks += 1;
    }
    Ok(checks)
}

fn timed(name: &str, f: impl FnOnce() -> SuiteOutcome) -> SuiteResult {
    let start = Instant::now();
    let outcome = f();
    let elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    match outcome {
        Ok(checks) => SuiteResult {
            name: name.to_string(),
            passed: true,
            checks,
            elapsed_ms,
            witness: None,
        },
        Err(witness) => SuiteResult {
            name: name.to_string(),
            passed: false,
            checks: 0,
            elapsed_ms,
            witness: Some(witness),
        },
    }
}

pub fn run_selftest(options: SelftestOptions) -> SelftestReport {
    let tol = options.tol;
    SelftestReport {
        suites: vec![
            timed("quad-arith", quad_arith),
            timed("hecke-char", || hecke_char(options.inject_fault)),
            timed("analytic-kernels", || analytic_kernels(tol)),
            timed("dirichlet-series", dirichlet_series),
            timed("central-values", || central_values(tol)),
            timed("charsum-lab", || charsum_lab(tol)),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn injected_fault_is_reported_with_witness() {
        let r = timed("hecke-char", || hecke_char(true));
        assert!(!r.passed);
        let w = r.witness.unwrap();
        assert!(w.starts_with("(7,1,variant 0)"), "{w}");
    }

    #[test]
    fn clean_run_passes() {
        let report = run_selftest(SelftestOptions::default());
        for s in &report.suites {
            assert!(s.passed, "{}: {:?}", s.name, s.witness);
            assert!(s.checks > 0);
        }
    }
}
