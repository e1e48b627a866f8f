use mergelab::koashi_imoto::{build_ki_psi, verify_ki};
use mergelab::linalg::{cond_entropy, entropy, C64};
use mergelab::measure::{build_a_measurement, build_b_measurement, TOL_COMPLETE};
use mergelab::protocols::{
    build_one_way, build_two_way, decode_superposition, discriminate, simulate, Direction, Protocol, RunReport,
};
use mergelab::search::{optimize_one_way_zero_cost, SearchConfig};
use mergelab::states::{
    build_instance, easy_instance, elimination_instance, GammaParams, GammaViolation, MergeInstance, A, B, R,
};
use mergelab::Error;
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::{Command, ExportItem, InstanceName, ProtocolName};
use crate::output::to_value;

pub const TOL_ORTHONORMAL: f64 = 1e-12;
pub const TOL_EXACT: f64 = 1e-9;
pub const TOL_KI: f64 = 1e-10;

/// How a command ended, mapped to the process exit code.
#[derive(Debug)]
pub enum Failure {
    /// A check did not hold; exit code 1.
    Verification(String),
    /// Bad arguments; exit code 2.
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidAlpha(_) | Error::InvalidOutcome { .. } => Failure::Usage(e.to_string()),
            _ => Failure::Verification(e.to_string()),
        }
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Verification(format!("serialization failed: {e}"))
    }
}

/// A finished command: the JSON report, whether it passed, and any extra
/// lines to print instead of it.
pub struct Outcome {
    pub report: Value,
    pub passed: bool,
    pub lines: Option<Vec<Value>>,
}

impl Outcome {
    fn ok(report: Value) -> Self {
        Outcome { report, passed: true, lines: None }
    }
}

pub fn execute(cmd: &Command, gammas: GammaParams) -> Result<Outcome, Failure> {
    match cmd {
        Command::Verify => Ok(verify(gammas)),
        Command::Run { protocol, trace } => run(gammas, *protocol, *trace),
        Command::Entropy => entropy_report(gammas),
        Command::Discriminate { l, protocol } => {
            let inst = build_instance(&gammas)?;
            let p = build(gammas, *protocol)?;
            Ok(Outcome::ok(to_value(&discriminate(&p, &inst, *l)?)?))
        }
        Command::Decode { alpha, protocol } => decode(gammas, alpha, *protocol),
        Command::Search { restarts, seed, max_kraus, iterations, tolerance, instance } => {
            let cfg = SearchConfig {
                restarts: *restarts,
                max_kraus: *max_kraus,
                iterations: *iterations,
                seed: *seed,
                tolerance: *tolerance,
            };
            cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
            let inst = search_instance(gammas, *instance)?;
            Ok(Outcome::ok(to_value(&optimize_one_way_zero_cost(&inst, &cfg)?)?))
        }
        Command::Export { item } => {
            let v = match item {
                ExportItem::Instance => to_value(&build_instance(&gammas)?)?,
                ExportItem::Ki => to_value(&build_ki_psi(&gammas)?)?,
                ExportItem::Twoway => to_value(&build_two_way(&gammas)?)?,
                ExportItem::Oneway => to_value(&build_one_way(&gammas)?)?,
            };
            Ok(Outcome::ok(v))
        }
    }
}

fn build(g: GammaParams, name: ProtocolName) -> Result<Protocol, Error> {
    match name {
        ProtocolName::Twoway => build_two_way(&g),
        ProtocolName::Oneway => build_one_way(&g),
    }
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct Check {
    name: String,
    passed: bool,
    value: f64,
    tolerance: f64,
}

impl Check {
    /// Passes when `value <= tolerance`.
    fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Check { name: name.into(), passed: value <= tolerance, value, tolerance }
    }

    fn equals(name: impl Into<String>, value: f64, expected: f64) -> Self {
        Check { name: name.into(), passed: value == expected, value, tolerance: 0.0 }
    }
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct ProtocolSummary {
    name: String,
    cost_bits: f64,
    direction: Direction,
    branch_count: usize,
    total_prob: f64,
    min_fidelity_sq: f64,
    avg_fidelity_sq: f64,
    max_reference_deviation: Option<f64>,
}

impl From<&RunReport> for ProtocolSummary {
    fn from(r: &RunReport) -> Self {
        ProtocolSummary {
            name: r.protocol.clone(),
            cost_bits: r.cost_bits,
            direction: r.direction,
            branch_count: r.branch_count,
            total_prob: r.total_prob,
            min_fidelity_sq: r.min_fidelity_sq,
            avg_fidelity_sq: r.avg_fidelity_sq,
            max_reference_deviation: r.max_reference_deviation,
        }
    }
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct VerifyReport {
    gammas: GammaParams,
    passed: bool,
    failed: Vec<String>,
    violations: Vec<GammaViolation>,
    checks: Vec<Check>,
    protocols: Vec<ProtocolSummary>,
}

fn protocol_checks(checks: &mut Vec<Check>, rep: &RunReport, cost: f64, direction: Direction) {
    let n = &rep.protocol;
    checks.push(Check::at_most(format!("{n}: fidelity"), 1.0 - rep.min_fidelity_sq, TOL_EXACT));
    checks.push(Check::at_most(format!("{n}: total probability"), (rep.total_prob - 1.0).abs(), TOL_EXACT));
    checks.push(Check::equals(format!("{n}: cost bits"), rep.cost_bits, cost));
    checks.push(Check {
        name: format!("{n}: direction {}", direction.as_str()),
        passed: rep.direction == direction,
        value: if rep.direction == direction { 1.0 } else { 0.0 },
        tolerance: 0.0,
    });
}

/// Runs every check it can; a failed check never stops the later ones unless
/// they depend on its output.
fn verify(g: GammaParams) -> Outcome {
    let mut checks = Vec::new();
    let mut protocols = Vec::new();
    let mut errors = Vec::new();
    let violations = g.validate().err().unwrap_or_default();
    checks.push(Check { name: "gammas".into(), passed: violations.is_empty(), value: violations.len() as f64, tolerance: 0.0 });
    if violations.is_empty() {
        if let Err(e) = verify_valid(g, &mut checks, &mut protocols) {
            errors.push(e.to_string());
        }
    }
    // violations are listed individually below
    let mut failed: Vec<String> =
        checks.iter().filter(|c| !c.passed && c.name != "gammas").map(|c| c.name.clone()).collect();
    failed.extend(violations.iter().map(|v| format!("gammas: {v}")));
    failed.extend(errors);
    let report = VerifyReport { gammas: g, passed: failed.is_empty(), failed, violations, checks, protocols };
    let passed = report.passed;
    match to_value(&report) {
        Ok(v) => Outcome { report: v, passed, lines: None },
        Err(e) => Outcome { report: json!({ "passed": false, "failed": [e.to_string()] }), passed: false, lines: None },
    }
}

fn verify_valid(g: GammaParams, checks: &mut Vec<Check>, protocols: &mut Vec<ProtocolSummary>) -> Result<(), Error> {
    let inst = build_instance(&g)?;
    let gram = inst.gram()?;
    let dev = (0..gram.nrows())
        .flat_map(|i| (0..gram.ncols()).map(move |j| (i, j)))
        .map(|(i, j)| (gram[(i, j)] - if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) }).norm())
        .fold(0.0, f64::max);
    checks.push(Check::at_most("orthonormality", dev, TOL_ORTHONORMAL));
    checks.push(Check::at_most("completeness: B", build_b_measurement()?.completeness_residual(), TOL_COMPLETE));
    for j in 0..3 {
        let res = build_a_measurement(j, &g)?.completeness_residual();
        checks.push(Check::at_most(format!("completeness: A given j={j}"), res, TOL_COMPLETE));
    }
    let ki = build_ki_psi(&g)?;
    let kc = verify_ki(&inst.psi, &ki)?;
    checks.push(Check::at_most("block decomposition: reconstruction", kc.residual, TOL_KI));
    checks.push(Check::at_most("block decomposition: isometries", kc.isometry_residual, TOL_KI));
    let expected = [2.0 / 11.0, 3.0 / 11.0, 3.0 / 11.0, 3.0 / 11.0];
    let pdev = ki.blocks.iter().zip(expected).map(|(b, p)| (b.prob - p).abs()).fold(0.0, f64::max);
    checks.push(Check::at_most("block decomposition: weights", pdev, TOL_KI));
    let h = cond_entropy(&inst.psi, &[A], &[B])?;
    checks.push(Check::at_most("conditional entropy", (h - (3f64.log2() - 11f64.log2())).abs(), TOL_EXACT));

    let two = simulate(&build_two_way(&g)?, &inst)?;
    protocol_checks(checks, &two, 0.0, Direction::TwoWay);
    checks.push(Check::at_most(
        "two-way: reference maximally mixed",
        two.max_reference_deviation.unwrap_or(f64::INFINITY),
        TOL_EXACT,
    ));
    protocols.push((&two).into());
    let one = simulate(&build_one_way(&g)?, &inst)?;
    protocol_checks(checks, &one, 1.0, Direction::OneWayAB);
    protocols.push((&one).into());
    Ok(())
}

fn run(g: GammaParams, name: ProtocolName, trace: bool) -> Result<Outcome, Failure> {
    let inst = build_instance(&g)?;
    let rep = simulate(&build(g, name)?, &inst)?;
    let lines = if trace {
        let lines = rep
            .branches
            .iter()
            .map(|b| to_value(&json!({ "transcript": b.transcript, "prob": b.probability, "fidelitySq": b.fidelity_sq })))
            .collect::<Result<Vec<_>, _>>()?;
        Some(lines)
    } else {
        None
    };
    Ok(Outcome { report: to_value(&rep)?, passed: true, lines })
}

fn entropy_report(g: GammaParams) -> Result<Outcome, Failure> {
    let psi = build_instance(&g)?.psi;
    let h_r = entropy(&psi.partial_trace(&[R])?)?;
    let h_b = entropy(&psi.partial_trace(&[B])?)?;
    let h_ab = entropy(&psi.partial_trace(&[A, B])?)?;
    let h_a_given_b = cond_entropy(&psi, &[A], &[B])?;
    Ok(Outcome::ok(to_value(&json!({
        "H_R": h_r,
        "H_B": h_b,
        "H_AB": h_ab,
        "H_A_given_B": h_a_given_b,
    }))?))
}

fn decode(g: GammaParams, alpha: &[C64], name: ProtocolName) -> Result<Outcome, Failure> {
    let norm = alpha.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if alpha.len() != 3 || norm == 0.0 {
        return Err(Failure::Usage(format!("--alpha needs 3 amplitudes, not all zero (got {})", alpha.len())));
    }
    let alpha: Vec<C64> = alpha.iter().map(|z| z / norm).collect();
    let inst = build_instance(&g)?;
    let rep = decode_superposition(&build(g, name)?, &inst, &alpha)?;
    Ok(Outcome::ok(to_value(&json!({ "alpha": alpha, "report": rep }))?))
}

fn search_instance(g: GammaParams, which: InstanceName) -> Result<MergeInstance, Error> {
    match which {
        InstanceName::Psi => build_instance(&g),
        InstanceName::Easy => easy_instance(),
        InstanceName::Elimination => elimination_instance(),
    }
}
