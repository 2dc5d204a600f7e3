use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hecke_central::central::{analyze, AnalysisOptions, CentralReport, DERIVATIVE_NOT_MEANINGFUL};
use hecke_central::character::{factor_eps, EpsCharacter};
use hecke_central::charsum::{burgess_ratio_survey, char_sum, reduction_identity_check};
use hecke_central::quad::QuadraticField;
use hecke_central::selftest::{run_selftest, SelftestOptions};
use hecke_central::sweep::{run_sweep, summarize, to_csv, SweepConfig, DEFAULT_TWISTS};
use hecke_central::Error;

#[derive(Parser)]
#[command(name = "hecke", version, about = "Central values of twisted canonical Hecke L-functions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Central value L(k, chi) with its root number.
    Value(CaseArgs),
    /// Central derivative L'(k, chi); meaningful when W = -1.
    Derivative(CaseArgs),
    /// Numerically solved root number.
    Rootnumber(CaseArgs),
    /// Character sum S_v(w), or a seeded Burgess-ratio survey.
    Charsum(CharsumArgs),
    /// Sweep all admissible (D, d, k, variant) up to a bound.
    Sweep(SweepArgs),
    /// Run the invariant suites of every module.
    Selftest(SelftestArgs),
}

#[derive(Args)]
struct CaseArgs {
    #[arg(long)]
    disc: i64,
    #[arg(long, default_value_t = 1, allow_negative_numbers = true)]
    twist: i64,
    #[arg(long, default_value_t = 1)]
    weight: u32,
    #[arg(long, default_value_t = 0)]
    variant: usize,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Print the report as one line of JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct CharsumArgs {
    #[arg(long)]
    disc: Option<i64>,
    #[arg(long, default_value_t = 1, allow_negative_numbers = true)]
    twist: i64,
    #[arg(long, default_value_t = 0)]
    variant: usize,
    #[arg(long, default_value_t = 1, allow_negative_numbers = true)]
    v: i64,
    /// Lower end M of the summation range.
    #[arg(long, default_value_t = 1)]
    m: i64,
    /// Upper end w (exclusive).
    #[arg(long, default_value_t = 100)]
    w: i64,
    /// Sample (D, d, v, M, w) tuples instead of a single sum.
    #[arg(long)]
    survey: bool,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    samples: usize,
    #[arg(long, default_value_t = 100)]
    d_max: i64,
    #[arg(long)]
    json: bool,
    /// Write survey rows as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, default_value_t = 300)]
    d_max: i64,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    twists: Option<Vec<i64>>,
    #[arg(long, value_delimiter = ',', default_value = "1,2")]
    weights: Vec<u32>,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// JSON-lines output file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Skip cases already present in --out.
    #[arg(long)]
    resume: bool,
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Record per-case wall time (makes output run-dependent).
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct SelftestArgs {
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Corrupt one character-table entry; the run must then fail.
    #[arg(long)]
    inject_fault: bool,
    #[arg(long)]
    json: bool,
}

fn exit_code(err: &Error) -> ExitCode {
    if err.is_invalid_input() {
        ExitCode::from(2)
    } else if err.is_tolerance_failure() {
        ExitCode::from(3)
    } else {
        ExitCode::from(1)
    }
}

fn character(args: &CaseArgs) -> Result<EpsCharacter, Error> {
    if !(args.tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive (got {})", args.tol)));
    }
    let field = QuadraticField::new(args.disc)?;
    EpsCharacter::new(&field, args.twist, args.weight, args.variant)
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), |v| format!("{v:.12}"))
}

fn print_report(r: &CentralReport) {
    println!("D = {}, d = {}, k = {}, h = {}, variant {}", r.disc, r.twist, r.weight, r.class_number, r.variant_index);
    println!(
        "W = {:+} (solved {:.12}, split {}, AFE spread {:.3e}, scale {:.6})",
        r.root_number.w, r.root_number.solved, r.root_number.split, r.root_number.spread, r.root_number.scale
    );
    if let (Some(a), Some(b)) = (r.i1, r.i2) {
        println!("I1 = {:.12} (+/- {:.1e})  I2 = {:.12} (+/- {:.1e})", a.value, a.error_bound, b.value, b.error_bound);
    }
    if let (Some(a), Some(b)) = (r.rk, r.c_term) {
        println!("R{} = {:.12} (+/- {:.1e})  C = {:.12} (+/- {:.1e})", r.weight, a.value, a.error_bound, b.value, b.error_bound);
    }
    println!("L(k) = {}  [AFE route {:.12}]", fmt_opt(r.l_central), r.l_central_afe);
    println!("L'(k) = {}", fmt_opt(r.l_deriv_central));
    if let Some(r1) = &r.r1 {
        println!(
            "R1 expansion route {:.12}; R1 >= 0.0351 {}",
            r1.expansion_route,
            match (r1.bound_applicable, r1.bound_holds) {
                (false, h) => format!("not asserted (D*|d| < 8 pi), holds: {h}"),
                (true, h) => format!("holds: {h}"),
            }
        );
    }
    println!("predicted order: {}", r.predicted_order.as_str());
    println!(
        "Q = {:.6}, norm cut {:.1} (default {:.1}), {} lattice points, tol {:e}",
        r.conductor_q, r.norm_cut, r.default_norm_cut, r.lattice_points, r.tol
    );
    for note in &r.notes {
        println!("note: {note}");
    }
}

fn cmd_case(args: &CaseArgs, options: AnalysisOptions) -> Result<(), Error> {
    let ch = character(args)?;
    let report = analyze(&ch, args.tol, options)?;
    if report.notes.iter().any(|n| n == DERIVATIVE_NOT_MEANINGFUL) {
        eprintln!("warning: {DERIVATIVE_NOT_MEANINGFUL}");
    }
    if args.json {
        println!("{}", serde_json::to_string(&report)?);
    } else {
        print_report(&report);
    }
    Ok(())
}

fn cmd_rootnumber(args: &CaseArgs) -> Result<(), Error> {
    let ch = character(args)?;
    let rn = hecke_central::central::root_number(&ch, args.tol)?;
    if args.json {
        println!("{}", serde_json::to_string(&rn)?);
    } else {
        println!(
            "W = {:+} (solved {:.12}, residual {:.2e}, split {}, AFE values {:?})",
            rn.w, rn.solved, rn.residual, rn.split, rn.lambda_at_splits
        );
    }
    Ok(())
}

fn cmd_charsum(args: &CharsumArgs) -> Result<(), Error> {
    if args.survey {
        let discs: Vec<i64> = (5..=args.d_max).collect();
        let survey = burgess_ratio_survey(&discs, &DEFAULT_TWISTS, args.samples, args.seed)?;
        if let Some(path) = &args.csv {
            fs::write(path, survey.to_csv())?;
        }
        if args.json {
            let mut summary = serde_json::to_value(&survey)?;
            summary.as_object_mut().map(|o| o.remove("rows"));
            println!("{summary}");
        } else {
            println!(
                "seed {}, {} samples: max ratio {:.4}, mean {:.4}, median {:.4}, p90 {:.4} (D exponent {})",
                survey.seed, survey.samples, survey.max_ratio, survey.mean_ratio, survey.median_ratio,
                survey.p90_ratio, survey.exponent
            );
        }
        return Ok(());
    }
    let disc = args
        .disc
        .ok_or_else(|| Error::InvalidInput("--disc is required unless --survey is given".into()))?;
    let field = QuadraticField::new(disc)?;
    let ch = EpsCharacter::new(&field, args.twist, 1, args.variant)?;
    let record = char_sum(&ch, args.v, args.m, args.w)?;
    let check = reduction_identity_check(&ch, &factor_eps(&ch)?, args.v, args.m, args.w)?;
    if args.json {
        println!("{}", serde_json::json!({ "record": record, "reduction": check }));
    } else {
        println!(
            "S_{}({}) from M = {}: {} over {} terms, bound ratio {:.4}",
            record.v, record.w, record.m, record.sum_value, record.terms, record.bound_ratio
        );
        println!(
            "reduction identity: {} (residues from 1 only: {})",
            check.reduced,
            if check.from_one_matches { "agrees" } else { "differs" }
        );
    }
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> Result<bool, Error> {
    let cfg = SweepConfig {
        d_max: args.d_max,
        twists: args.twists.clone().unwrap_or_else(|| DEFAULT_TWISTS.to_vec()),
        weights: args.weights.clone(),
        tol: args.tol,
        threads: args.threads,
        timing: args.timing,
    };
    if args.resume && args.out.is_none() {
        return Err(Error::InvalidInput("--resume needs --out".into()));
    }
    let outcome = run_sweep(&cfg, args.out.as_deref(), args.resume)?;
    if let Some(path) = &args.csv {
        fs::write(path, to_csv(&outcome.records))?;
    }
    for r in outcome.records.iter().filter(|r| !r.is_ok()) {
        eprintln!(
            "error ({}, {}, {}, variant {}): {}",
            r.disc,
            r.twist,
            r.weight,
            r.variant_index,
            r.error.as_deref().unwrap_or("")
        );
    }
    if args.out.is_none() {
        for r in &outcome.records {
            println!("{}", hecke_central::sweep::to_json_line(r)?);
        }
    }
    let s = summarize(&outcome.records);
    eprintln!(
        "{} cases ({} computed, {} resumed): {} match predicted order = (1-W)/2, {} inconclusive, {} errors; W=+1: {}, W=-1: {}",
        s.total,
        outcome.computed,
        outcome.skipped,
        s.order_matches,
        s.inconclusive,
        s.errors,
        s.positive_root_numbers,
        s.negative_root_numbers
    );
    Ok(s.errors == 0)
}

fn cmd_selftest(args: &SelftestArgs) -> Result<bool, Error> {
    let report = run_selftest(SelftestOptions {
        tol: args.tol,
        inject_fault: args.inject_fault,
    });
    if args.json {
        println!("{}", serde_json::to_string(&report)?);
    } else {
        for s in &report.suites {
            let status = if s.passed { "ok" } else { "FAILED" };
            println!("{:<18} {:<6} {:>6} checks {:>9.1} ms", s.name, status, s.checks, s.elapsed_ms);
            if let Some(w) = &s.witness {
                println!("  witness: {w}");
            }
        }
    }
    Ok(report.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Value(a) => cmd_case(
            a,
            AnalysisOptions {
                value: true,
                ..Default::default()
            },
        )
        .map(|_| true),
        Command::Derivative(a) => cmd_case(
            a,
            AnalysisOptions {
                derivative: true,
                r1_cross_check: true,
                ..Default::default()
            },
        )
        .map(|_| true),
        Command::Rootnumber(a) => cmd_rootnumber(a).map(|_| true),
        Command::Charsum(a) => cmd_charsum(a).map(|_| true),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Selftest(a) => cmd_selftest(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err}");
            exit_code(&err)
        }
    }
}
