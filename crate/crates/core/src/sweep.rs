//! Sweeps over admissible `(D, d, k, variant)` with resumable JSON-lines
//! persistence. Records are computed in parallel and written in case order,
//! so output is byte-identical for any thread count.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::central::{analyze, AnalysisOptions, CentralReport, PredictedOrder};
use crate::character::EpsCharacter;
use crate::error::{Error, Result};
use crate::quad::{gcd, QuadraticField};

pub const SCHEMA_VERSION: u32 = 1;

/// Fundamental discriminants `d` with `|d| <= 8`, plus the trivial twist.
pub const DEFAULT_TWISTS: [i64; 7] = [1, -3, -4, 5, -7, 8, -8];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SweepCase {
    pub disc: i64,
    pub twist: i64,
    pub weight: u32,
    pub variant: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepRecord {
    pub schema: u32,
    pub disc: i64,
    pub twist: i64,
    pub weight: u32,
    pub class_number: u64,
    pub variant_index: usize,
    pub root_number: i8,
    pub w_solved: f64,
    pub w_residual: f64,
    pub afe_spread: f64,
    pub scale: f64,
    /// `L` at the center when `W = +1`, `L'` when `W = -1`.
    pub value: Option<f64>,
    pub value_error: Option<f64>,
    /// `A(2) + W A(1/2)`; equals `value` when `W = +1`.
    pub afe_value: f64,
    pub predicted_order: PredictedOrder,
    pub tol: f64,
    pub norm_cut: f64,
    pub default_norm_cut: f64,
    pub lattice_points: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl SweepRecord {
    pub fn case(&self) -> SweepCase {
        SweepCase {
            disc: self.disc,
            twist: self.twist,
            weight: self.weight,
            variant: self.variant_index,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }

    /// True when the predicted order equals `(1 - W)/2`.
    pub fn order_matches_root_number(&self) -> bool {
        self.is_ok() && self.predicted_order == PredictedOrder::from_root_number(self.root_number)
    }

    fn from_report(report: &CentralReport) -> Self {
        let (value, value_error) = if report.root_number.w == 1 {
            (
                report.l_central,
                report
                    .i1
                    .zip(report.i2)
                    .map(|(a, b)| 2.0 * (a.error_bound + b.error_bound)),
            )
        } else {
            (
                report.l_deriv_central,
                report
                    .rk
                    .zip(report.c_term)
                    .map(|(a, b)| 2.0 * (a.error_bound + b.error_bound)),
            )
        };
        SweepRecord {
            schema: SCHEMA_VERSION,
            disc: report.disc,
            twist: report.twist,
            weight: report.weight,
            class_number: report.class_number,
            variant_index: report.variant_index,
            root_number: report.root_number.w,
            w_solved: report.root_number.solved,
            w_residual: report.root_number.residual,
            afe_spread: report.root_number.spread,
            scale: report.root_number.scale,
            value,
            value_error,
            afe_value: report.l_central_afe,
            predicted_order: report.predicted_order,
            tol: report.tol,
            norm_cut: report.norm_cut,
            default_norm_cut: report.default_norm_cut,
            lattice_points: report.lattice_points,
            wall_time_ms: None,
            error: None,
        }
    }

    fn failed(case: SweepCase, class_number: u64, tol: f64, err: &Error) -> Self {
        SweepRecord {
            schema: SCHEMA_VERSION,
            disc: case.disc,
            twist: case.twist,
            weight: case.weight,
            class_number,
            variant_index: case.variant,
            root_number: 0,
            w_solved: 0.0,
            w_residual: 0.0,
            afe_spread: 0.0,
            scale: 0.0,
            value: None,
            value_error: None,
            afe_value: 0.0,
            predicted_order: PredictedOrder::Inconclusive,
            tol,
            norm_cut: 0.0,
            default_norm_cut: 0.0,
            lattice_points: 0,
            wall_time_ms: None,
            error: Some(err.to_string()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub d_max: i64,
    pub twists: Vec<i64>,
    pub weights: Vec<u32>,
    pub tol: f64,
    pub threads: usize,
    pub timing: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            d_max: 300,
            twists: DEFAULT_TWISTS.to_vec(),
            weights: vec![1, 2],
            tol: 1e-8,
            threads: 1,
            timing: false,
        }
    }
}

/// Admissible cases in sweep order: by `D`, then twist (as given), weight, variant.
pub fn admissible_cases(cfg: &SweepConfig) -> Vec<SweepCase> {
    let mut out = Vec::new();
    for disc in 5..=cfg.d_max {
        let Ok(field) = QuadraticField::new(disc) else {
            continue;
        };
        let variants = EpsCharacter::variant_count(&field).unwrap_or(0);
        let h = field.class_number() as i64;
        for &twist in &cfg.twists {
            if gcd(twist, disc) != 1 {
                continue;
            }
            for &weight in &cfg.weights {
                if weight == 0 || gcd(2 * weight as i64 - 1, h) != 1 {
                    continue;
                }
                for variant in 0..variants {
                    out.push(SweepCase {
                        disc,
                        twist,
                        weight,
                        variant,
                    });
                }
            }
        }
    }
    out
}

pub fn compute_record(case: SweepCase, tol: f64, timing: bool) -> SweepRecord {
    let start = Instant::now();
    let mut class_number = 0;
    let result = QuadraticField::new(case.disc).and_then(|field| {
        class_number = field.class_number();
        let ch = EpsCharacter::new(&field, case.twist, case.weight, case.variant)?;
        analyze(&ch, tol, AnalysisOptions::default())
    });
    let mut record = match result {
        Ok(report) => SweepRecord::from_report(&report),
        Err(err) => SweepRecord::failed(case, class_number, tol, &err),
    };
    if timing {
        record.wall_time_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    }
    record
}

/// Reads a JSON-lines file; later records for the same case replace earlier ones.
pub fn read_records(path: &Path) -> Result<Vec<SweepRecord>> {
    let file = File::open(path)?;
    let mut by_case: BTreeMap<SweepCase, (usize, SweepRecord)> = BTreeMap::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: SweepRecord = serde_json::from_str(&line)?;
        if record.schema != SCHEMA_VERSION {
            return Err(Error::invalid(format!(
                "line {}: schema version {} is not {SCHEMA_VERSION}",
                i + 1,
                record.schema
            )));
        }
        let first_seen = by_case.get(&record.case()).map_or(i, |(pos, _)| *pos);
        by_case.insert(record.case(), (first_seen, record));
    }
    let mut records: Vec<(usize, SweepRecord)> = by_case.into_values().collect();
    records.sort_by_key(|(pos, _)| *pos);
    Ok(records.into_iter().map(|(_, r)| r).collect())
}

pub fn to_json_line(record: &SweepRecord) -> Result<String> {
    Ok(serde_json::to_string(record)?)
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub total: usize,
    pub errors: usize,
    pub order_matches: usize,
    pub inconclusive: usize,
    pub positive_root_numbers: usize,
    pub negative_root_numbers: usize,
}

pub fn summarize(records: &[SweepRecord]) -> SweepSummary {
    let mut s = SweepSummary {
        total: records.len(),
        ..Default::default()
    };
    for r in records {
        if !r.is_ok() {
            s.errors += 1;
            continue;
        }
        if r.order_matches_root_number() {
            s.order_matches += 1;
        }
        if r.predicted_order == PredictedOrder::Inconclusive {
            s.inconclusive += 1;
        }
        match r.root_number {
            1 => s.positive_root_numbers += 1,
            -1 => s.negative_root_numbers += 1,
            _ => {}
        }
    }
    s
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepOutcome {
    /// All records for the configured cases, in case order.
    pub records: Vec<SweepRecord>,
    pub computed: usize,
    pub skipped: usize,
}

const CHUNK: usize = 32;

/// Runs the sweep. With `out`, new records are appended chunk by chunk; with
/// `resume`, cases that already have a successful record in `out` are skipped.
pub fn run_sweep(cfg: &SweepConfig, out: Option<&Path>, resume: bool) -> Result<SweepOutcome> {
    if !(cfg.tol > 0.0) || cfg.threads == 0 {
        return Err(Error::invalid("sweep needs a positive tolerance and at least one thread"));
    }
    let cases = admissible_cases(cfg);
    let mut existing: BTreeMap<SweepCase, SweepRecord> = BTreeMap::new();
    if resume {
        if let Some(path) = out.filter(|p| p.exists()) {
            for r in read_records(path)? {
                if r.is_ok() {
                    existing.insert(r.case(), r);
                }
            }
        }
    }
    let todo: Vec<SweepCase> = cases
        .iter()
        .copied()
        .filter(|c| !existing.contains_key(c))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    let mut writer = match out {
        Some(path) => Some(
            OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)?,
        ),
        None => None,
    };
    if !resume {
        if let Some(file) = writer.as_mut() {
            file.set_len(0)?;
        }
    }
    let mut fresh: BTreeMap<SweepCase, SweepRecord> = BTreeMap::new();
    for chunk in todo.chunks(CHUNK) {
        let records: Vec<SweepRecord> = pool.install(|| {
            chunk
                .par_iter()
                .map(|&c| compute_record(c, cfg.tol, cfg.timing))
                .collect()
        });
        if let Some(file) = writer.as_mut() {
            let mut buf = String::new();
            for r in &records {
                buf.push_str(&to_json_line(r)?);
                buf.push('\n');
            }
            file.write_all(buf.as_bytes())?;
            file.flush()?;
        }
        for r in records {
            fresh.insert(r.case(), r);
        }
    }
    let computed = fresh.len();
    let skipped = cases.len() - computed;
    let records = cases
        .iter()
        .filter_map(|c| fresh.remove(c).or_else(|| existing.remove(c)))
        .collect();
    Ok(SweepOutcome {
        records,
        computed,
        skipped,
    })
}

pub fn to_csv(records: &[SweepRecord]) -> String {
    let mut out = String::from(
        "D,d,k,h,variant,W,W_solved,value,value_error,afe_value,predicted_order,afe_spread,scale,error\n",
    );
    let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.disc,
            r.twist,
            r.weight,
            r.class_number,
            r.variant_index,
            r.root_number,
            r.w_solved,
            opt(r.value),
            opt(r.value_error),
            r.afe_value,
            r.predicted_order.as_str(),
            r.afe_spread,
            r.scale,
            r.error.as_deref().unwrap_or("").replace(',', ";"),
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn admissible_set_for_small_discriminants() {
        let cfg = SweepConfig {
            d_max: 40,
            twists: vec![1],
            weights: vec![1],
            ..Default::default()
        };
        let discs: Vec<i64> = admissible_cases(&cfg).iter().map(|c| c.disc).collect();
        // 8, 24 and 40 each contribute two variants
        assert_eq!(discs, vec![7, 8, 8, 11, 15, 19, 23, 24, 24, 31, 35, 39, 40, 40]);
    }

    #[test]
    fn record_round_trip() {
        let r = compute_record(
            SweepCase {
                disc: 7,
                twist: 1,
                weight: 1,
                variant: 0,
            },
            1e-8,
            false,
        );
        let line = to_json_line(&r).unwrap();
        let back: SweepRecord = serde_json::from_str(&line).unwrap();
        assert_eq!(r, back);
        assert!(!line.contains("wall_time_ms"));
        let extra = line.replacen('{', "{\"surprise\":0,", 1);
        assert!(serde_json::from_str::<SweepRecord>(&extra).is_err());
    }

    #[test]
    fn resume_adds_nothing_on_second_run() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sweep.jsonl");
        let cfg = SweepConfig {
            d_max: 30,
            twists: vec![1, 5],
            weights: vec![1],
            ..Default::default()
        };
        let first = run_sweep(&cfg, Some(&path), false).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let second = run_sweep(&cfg, Some(&path), true).unwrap();
        assert_eq!(second.computed, 0);
        assert_eq!(std::fs::read(&path).unwrap(), bytes);
        assert_eq!(first.records, second.records);
    }

    #[test]
    fn thread_count_does_not_change_output() {
        let cfg = SweepConfig {
            d_max: 40,
            twists: vec![1, -3],
            weights: vec![1, 2],
            ..Default::default()
        };
        let one = run_sweep(&cfg, None, false).unwrap().records;
        let four = run_sweep(&SweepConfig { threads: 4, ..cfg }, None, false).unwrap().records;
        let lines = |rs: &[SweepRecord]| rs.iter().map(|r| to_json_line(r).unwrap()).collect::<Vec<_>>();
        assert_eq!(lines(&one), lines(&four));
    }
}
