//! Batch front door: ingest presentation specs, run sigma tests,
//! disintegration synthesis, isometry synthesis, and verification, and emit
//! deterministic JSON reports.  All reported numbers are rational intervals.
//!
//! Exit codes: 0 success, 1 verification failure or internal error,
//! 2 parse error, 3 budget exhausted (a partial report is still written),
//! 4 exponent rejection (p = 2 or mismatched exponents).

use clap::{Parser, Subcommand, ValueEnum};
use lpdis::isometry::{synthesize_isometry, verify_isometry, IsometryData};
use lpdis::lattice::verify_certificate;
use lpdis::num::{pow2, rat_int, ComplexRational};
use lpdis::presentation::{Presentation, PresentationSpec, RationalVector};
use lpdis::sigma::sigma_vec_oracle;
use lpdis::synth::{advance_stage, seed_stage, verify_certificate_oracle, Stage, Strategy};
use lpdis::Error;
use serde::Serialize;
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "lpdis", version, about = "validated L^p disintegration workbench")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum StrategyArg {
    Whitebox,
    Dovetail,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Strategy {
        match s {
            StrategyArg::Whitebox => Strategy::Whitebox,
            StrategyArg::Dovetail => Strategy::Dovetail,
        }
    }
}

#[derive(Subcommand)]
enum Verb {
    /// Enclose the sigma disjointness functional between the first two
    /// generators of a presentation.
    Sigma {
        /// Presentation spec (JSON)
        input: PathBuf,
        #[arg(long, default_value_t = 20)]
        precision: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        report: PathBuf,
    },
    /// Synthesize a staged disintegration of a presentation and certify it.
    Disintegrate {
        /// Presentation spec (JSON)
        input: PathBuf,
        #[arg(long, default_value_t = 8)]
        precision: u32,
        #[arg(long, default_value_t = 2)]
        budget: u32,
        #[arg(long, value_enum, default_value_t = StrategyArg::Whitebox)]
        strategy: StrategyArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        report: PathBuf,
    },
    /// Synthesize a finite-stage linear isometry from a source presentation
    /// into a target presentation.
    Isometry {
        /// Source presentation spec (JSON)
        source: PathBuf,
        /// Target presentation spec (JSON)
        target: PathBuf,
        #[arg(long, default_value_t = 6)]
        precision: u32,
        #[arg(long, default_value_t = 2)]
        budget: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        report: PathBuf,
    },
    /// Re-verify the certificates inside a previously written report.
    Verify {
        /// Report produced by `disintegrate` or `isometry`
        input: PathBuf,
        /// Presentation spec the report was produced from (source for isometry)
        source: PathBuf,
        /// Target presentation spec (isometry reports only)
        target: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        precision: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        report: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.verb) {
        Ok(code) => ExitCode::from(code),
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse(_) => 2,
        Error::BudgetExhausted(_) => 3,
        Error::PEqualsTwo | Error::ExponentMismatch => 4,
        _ => 1,
    }
}

type Run = Result<u8, (u8, String)>;

fn fail(e: Error) -> (u8, String) {
    (exit_code(&e), e.to_string())
}

fn load_presentation(path: &Path) -> Result<Presentation, (u8, String)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| (2u8, format!("cannot read {}: {e}", path.display())))?;
    let spec: PresentationSpec = serde_json::from_str(&text)
        .map_err(|e| (2u8, format!("cannot parse {}: {e}", path.display())))?;
    spec.build().map_err(fail)
}

fn load_json(path: &Path) -> Result<Value, (u8, String)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| (2u8, format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| (2u8, format!("cannot parse {}: {e}", path.display())))
}

fn write_report(path: &Path, value: &impl Serialize) -> Result<(), (u8, String)> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| (1u8, format!("cannot serialize report: {e}")))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| (1u8, format!("cannot write {}: {e}", path.display())))
}

fn run(verb: Verb) -> Run {
    match verb {
        Verb::Sigma {
            input,
            precision,
            seed,
            report,
        } => run_sigma(&input, precision, seed, &report),
        Verb::Disintegrate {
            input,
            precision,
            budget,
            strategy,
            seed,
            report,
        } => run_disintegrate(&input, precision, budget, strategy.into(), seed, &report),
        Verb::Isometry {
            source,
            target,
            precision,
            budget,
            seed,
            report,
        } => run_isometry(&source, &target, precision, budget, seed, &report),
        Verb::Verify {
            input,
            source,
            target,
            precision,
            seed,
            report,
        } => run_verify(&input, &source, target.as_deref(), precision, seed, &report),
    }
}

fn run_sigma(input: &Path, precision: u32, seed: u64, report: &Path) -> Run {
    let pres = load_presentation(input)?;
    let vf = RationalVector::singleton(0, ComplexRational::one());
    let vg = RationalVector::singleton(1, ComplexRational::one());
    let sigma = sigma_vec_oracle(&pres, &vf, &vg, precision).map_err(fail)?;
    let out = json!({
        "verb": "sigma",
        "seed": seed,
        "precision": precision,
        "left": vf,
        "right": vg,
        "sigma": sigma,
        "contains_zero": sigma.contains_zero(),
    });
    write_report(report, &out)?;
    Ok(0)
}

fn run_disintegrate(
    input: &Path,
    precision: u32,
    budget: u32,
    strategy: Strategy,
    seed: u64,
    report: &Path,
) -> Run {
    let pres = load_presentation(input)?;
    let mut stages: Vec<Stage> = Vec::new();
    let mut error: Option<Error> = None;
    match seed_stage(&pres, 64) {
        Ok(stage) => {
            stages.push(stage);
            for lvl in 1..=budget {
                let prev = stages.last().unwrap();
                let k = (prev.k_n + 1).max(if lvl == budget { precision } else { 0 });
                match advance_stage(&pres, prev, k, lvl, strategy) {
                    Ok(next) => stages.push(next),
                    Err(e) => {
                        error = Some(e);
                        break;
                    }
                }
            }
        }
        Err(e) => error = Some(e),
    }
    let code = error.as_ref().map(exit_code).unwrap_or(0);
    let out = json!({
        "verb": "disintegrate",
        "seed": seed,
        "precision": precision,
        "budget": budget,
        "strategy": strategy,
        "stages": stages,
        "error": error.as_ref().map(|e| e.to_string()),
    });
    // budget exhaustion still writes the partial report; other errors abort
    if let Some(e) = error {
        if !matches!(e, Error::BudgetExhausted(_)) {
            return Err(fail(e));
        }
        write_report(report, &out)?;
        return Err((code, e_to_msg(&out)));
    }
    write_report(report, &out)?;
    Ok(0)
}

fn e_to_msg(out: &Value) -> String {
    out.get("error")
        .and_then(Value::as_str)
        .unwrap_or("unknown error")
        .to_string()
}

fn run_isometry(
    source: &Path,
    target: &Path,
    precision: u32,
    budget: u32,
    seed: u64,
    report: &Path,
) -> Run {
    let a = load_presentation(source)?;
    let b = load_presentation(target)?;
    match synthesize_isometry(&a, &b, precision, budget) {
        Ok(mut data) => {
            data.source = source.display().to_string();
            let out = json!({
                "verb": "isometry",
                "seed": seed,
                "precision": precision,
                "budget": budget,
                "isometry": data,
            });
            write_report(report, &out)?;
            Ok(0)
        }
        Err(e @ Error::BudgetExhausted(_)) => {
            let out = json!({
                "verb": "isometry",
                "seed": seed,
                "precision": precision,
                "budget": budget,
                "isometry": Value::Null,
                "error": e.to_string(),
            });
            write_report(report, &out)?;
            Err(fail(e))
        }
        Err(e) => Err(fail(e)),
    }
}

fn run_verify(
    input: &Path,
    source: &Path,
    target: Option<&Path>,
    precision: u32,
    seed: u64,
    report: &Path,
) -> Run {
    let doc = load_json(input)?;
    let verb = doc
        .get("verb")
        .and_then(Value::as_str)
        .ok_or((2u8, "report has no verb field".to_string()))?;
    match verb {
        "disintegrate" => verify_disintegrate_report(&doc, source, seed, report),
        "isometry" => {
            let target = target.ok_or((
                2u8,
                "verifying an isometry report needs a target spec".to_string(),
            ))?;
            verify_isometry_report(&doc, source, target, precision, seed, report)
        }
        other => Err((2u8, format!("cannot verify reports with verb {other:?}"))),
    }
}

fn verify_disintegrate_report(doc: &Value, source: &Path, seed: u64, report: &Path) -> Run {
    let pres = load_presentation(source)?;
    let stages: Vec<Stage> = serde_json::from_value(
        doc.get("stages")
            .cloned()
            .ok_or((2u8, "report has no stages".to_string()))?,
    )
    .map_err(|e| (2u8, format!("cannot parse stages: {e}")))?;
    let mut checks = Vec::new();
    let mut all_ok = true;
    for stage in &stages {
        // level-0 certificates are vacuous; recheck every later one
        let ok = if stage.n == 0 {
            true
        } else if pres.is_whitebox() {
            verify_certificate(&pres, &stage.values, &stage.certificate).map_err(fail)?
        } else {
            verify_certificate_oracle(&pres, &stage.coords_map(), &stage.certificate)
                .map_err(fail)?
        };
        all_ok &= ok;
        checks.push(json!({ "level": stage.n, "k_n": stage.k_n, "certified": ok }));
    }
    let out = json!({
        "verb": "verify",
        "seed": seed,
        "subject": "disintegrate",
        "checks": checks,
        "all_certified": all_ok,
    });
    write_report(report, &out)?;
    if all_ok {
        Ok(0)
    } else {
        Err((1, "certificate re-verification failed".to_string()))
    }
}

fn verify_isometry_report(
    doc: &Value,
    source: &Path,
    target: &Path,
    precision: u32,
    seed: u64,
    report: &Path,
) -> Run {
    let a = load_presentation(source)?;
    let b = load_presentation(target)?;
    let data: IsometryData = serde_json::from_value(
        doc.get("isometry")
            .cloned()
            .ok_or((2u8, "report has no isometry section".to_string()))?,
    )
    .map_err(|e| (2u8, format!("cannot parse isometry data: {e}")))?;
    // probes: each mapped generator, plus a combined probe mixing them all
    let mut probes: Vec<RationalVector> = data
        .images
        .iter()
        .map(|g| RationalVector::singleton(g.index, ComplexRational::one()))
        .collect();
    let mut mixed = RationalVector::new();
    for (j, g) in data.images.iter().enumerate() {
        mixed = mixed.add(&RationalVector::singleton(
            g.index,
            ComplexRational::from_int(1 + j as i64),
        ));
    }
    if !mixed.is_empty() {
        probes.push(mixed);
    }
    let rep = verify_isometry(&b, &data, &a, &probes, precision).map_err(fail)?;
    // accepted gap: residual mass of the synthesized images at the report's
    // own precision plus the enclosure width of this verification run
    let mut all_ok = true;
    let mut checks = Vec::new();
    for (probe, check) in probes.iter().zip(&rep.checks) {
        let mass: lpdis::Rational = probe.iter().map(|(_, c)| c.abs_bound()).sum();
        let tol = &(&mass + rat_int(1)) * &pow2(-(data.precision as i64) + 2)
            + pow2(-(precision as i64) + 1);
        let ok = check.norm_gap.hi() <= &tol && check.linearity.hi() <= &tol;
        all_ok &= ok;
        checks.push(json!({
            "probe": probe,
            "norm_source": check.norm_source,
            "norm_image": check.norm_image,
            "norm_gap": check.norm_gap,
            "linearity": check.linearity,
            "within_tolerance": ok,
        }));
    }
    let out = json!({
        "verb": "verify",
        "seed": seed,
        "subject": "isometry",
        "precision": precision,
        "checks": checks,
        "all_certified": all_ok,
    });
    write_report(report, &out)?;
    if all_ok {
        Ok(0)
    } else {
        Err((1, "isometry re-verification failed".to_string()))
    }
}
