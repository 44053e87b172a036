//! The acceptance suite: eleven numbered checks on closed forms, rate fits and properties.

use super::{parse_config_str, run};
use crate::expansion::{
    analyze, dyadic_eps, energy_slopes, fit_column, run_sweep, verify_nonmixed, Column, RateModel,
    Sweep, SweepOptions, SweepRecord,
};
use crate::fem::{FeFunction, FeSpace};
use crate::halfplane::{self, AEstimate};
use crate::mesh::{build_half_disk, build_unit_disk, GradingSpec};
use crate::problems::{solve_mixed_dirichlet, solve_robin, DirichletValues, ProblemData};
use crate::singular::{
    default_radii, extract_coefficient, f2_formula, hardy_check, log_weight_integral,
    verify_weak_identity, Cutoff,
};
use crate::{Error, Point, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;

/// One measured quantity and its requirement.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub label: String,
    pub measured: f64,
    pub target: String,
    pub pass: bool,
    /// Why a failure of this check is inherent to the requirement.
    pub expected_failure: Option<String>,
}

impl Check {
    fn new(label: impl Into<String>, measured: f64, target: impl Into<String>, pass: bool) -> Self {
        Self {
            label: label.into(),
            measured,
            target: target.into(),
            pass,
            expected_failure: None,
        }
    }

    fn within(label: impl Into<String>, measured: f64, target: f64, tol: f64) -> Self {
        let pass = (measured - target).abs() <= tol;
        Self::new(label, measured, format!("{target} +/- {tol:e}"), pass)
    }

    fn in_range(label: impl Into<String>, measured: f64, lo: f64, hi: f64) -> Self {
        Self::new(
            label,
            measured,
            format!("[{lo}, {hi}]"),
            (lo..=hi).contains(&measured),
        )
    }

    fn at_most(label: impl Into<String>, measured: f64, bound: f64) -> Self {
        Self::new(label, measured, format!("<= {bound}"), measured <= bound)
    }
}

/// Outcome of one numbered criterion.
#[derive(Debug, Clone, PartialEq)]
pub struct CriterionResult {
    pub id: usize,
    pub title: &'static str,
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl CriterionResult {
    fn new(id: usize, title: &'static str, checks: Vec<Check>) -> Self {
        let pass = !checks.is_empty() && checks.iter().all(|c| c.pass);
        Self {
            id,
            title,
            checks,
            pass,
        }
    }

    fn error(id: usize, title: &'static str, e: &Error) -> Self {
        Self::new(
            id,
            title,
            vec![Check::new(
                format!("error: {e}"),
                f64::NAN,
                "no error",
                false,
            )],
        )
    }

    /// True when every failing check carries an expected-failure explanation.
    pub fn only_expected_failures(&self) -> bool {
        self.checks
            .iter()
            .all(|c| c.pass || c.expected_failure.is_some())
    }
}

/// Primary benchmark mesh: `h = 0.02`, `beta = 3`.
pub const BENCH_H: f64 = 0.02;
pub const BENCH_BETA: f64 = 3.0;
/// Epsilon range for rate fits.
pub const RATE_EPS: (i32, i32) = (3, 16);
/// Largest epsilon entering the energy slope extrapolation.
pub const SLOPE_EPS_MAX: f64 = 1.0 / 64.0;
/// Half-plane radii and mesh size used for `A(1)`.
pub const AUX_H: f64 = 0.05;

/// Shared benchmark computations.
pub struct Context {
    pub space: Arc<FeSpace>,
    pub sweep: Sweep,
    pub fine_sweep: Sweep,
    pub a_unit: AEstimate,
    pub seed: u64,
}

fn benchmark_space(h: f64, beta: f64) -> Result<Arc<FeSpace>> {
    FeSpace::new(
        Arc::new(build_half_disk(GradingSpec::new(h, beta, 0.5))?),
        1,
    )
}

fn benchmark_sweep(space: &Arc<FeSpace>) -> Result<Sweep> {
    let data = ProblemData::half_disk_benchmark();
    let eps = dyadic_eps(RATE_EPS.0, RATE_EPS.1);
    let s = run_sweep(space, &data, &eps, SweepOptions::default())?;
    match &s.failure {
        Some(msg) => Err(Error::InvalidInput(format!(
            "benchmark sweep failed: {msg}"
        ))),
        None => Ok(s),
    }
}

impl Context {
    pub fn new(seed: u64) -> Result<Self> {
        let space = benchmark_space(BENCH_H, BENCH_BETA)?;
        let sweep = benchmark_sweep(&space)?;
        let fine_sweep = benchmark_sweep(&benchmark_space(BENCH_H / 2.0, BENCH_BETA)?)?;
        let a_unit = halfplane::estimate_a(1.0, &halfplane::DEFAULT_RADII, &[AUX_H])?;
        Ok(Self {
            space,
            sweep,
            fine_sweep,
            a_unit,
            seed,
        })
    }
}

const TITLES: [&str; 11] = [
    "disk closed form",
    "non-mixed expansion exponents",
    "benchmark limit energy",
    "coefficient extraction",
    "first-order energy coefficient",
    "sharp error rates",
    "auxiliary half-plane problem",
    "second-order energy cross-validation",
    "weak identity",
    "Hardy inequalities",
    "determinism",
];

/// Evaluates criterion `id` (1-based).
pub fn evaluate(id: usize, ctx: &Context) -> CriterionResult {
    let title = TITLES[id - 1];
    let out = match id {
        1 => disk_closed_form(),
        2 => nonmixed(),
        3 => limit_energy(),
        4 => extraction(ctx),
        5 => first_order(ctx),
        6 => rates(ctx),
        7 => auxiliary(ctx),
        8 => second_order(ctx),
        9 => weak_identity(ctx),
        10 => hardy(ctx.seed),
        11 => determinism(ctx.seed),
        _ => Err(Error::InvalidInput(format!("no criterion {id}"))),
    };
    match out {
        Ok(checks) => CriterionResult::new(id, title, checks),
        Err(e) => CriterionResult::error(id, title, &e),
    }
}

/// Builds the shared context and evaluates all criteria in order.
pub fn evaluate_all(seed: u64) -> Result<Vec<CriterionResult>> {
    let ctx = Context::new(seed)?;
    Ok((1..=11).map(|id| evaluate(id, &ctx)).collect())
}

fn disk_closed_form() -> Result<Vec<Check>> {
    let h = 0.05;
    let space = FeSpace::new(Arc::new(build_unit_disk(h)?), 1)?;
    let data = ProblemData::disk_cosine();
    let mut checks = Vec::new();
    for eps in [0.1, 0.01] {
        let u = solve_robin(&space, &*data.f, &*data.g, eps)?;
        let err = space
            .nodes()
            .iter()
            .zip(&u.coeffs)
            .map(|(p, v)| (v - p[0] / (1.0 + eps)).abs())
            .fold(0.0, f64::max);
        checks.push(Check::at_most(
            format!("max nodal error, eps = {eps}"),
            err,
            5.0 * h * h,
        ));
    }
    Ok(checks)
}

/// Disk mesh size for the non-mixed expansion.
pub const NONMIXED_H: f64 = 0.05;

fn nonmixed() -> Result<Vec<Check>> {
    let space = FeSpace::new(Arc::new(build_unit_disk(NONMIXED_H)?), 1)?;
    let data = ProblemData::disk_cosine();
    let t = verify_nonmixed(&space, &*data.f, &*data.g, &dyadic_eps(3, 10), 3)?;
    Ok(t.exponents
        .iter()
        .enumerate()
        .map(|(j, e)| {
            Check::within(
                format!("H1 remainder exponent, depth {}", j + 1),
                e.unwrap_or(f64::NAN),
                (j + 1) as f64,
                0.1,
            )
        })
        .collect())
}

fn limit_energy() -> Result<Vec<Check>> {
    let space = benchmark_space(0.02, 2.0)?;
    let data = ProblemData::half_disk_benchmark();
    let u0 = solve_mixed_dirichlet(&space, &*data.f, DirichletValues::Project(&*data.g))?;
    let f0 = crate::fem::energy(&u0, crate::fem::EnergyModel::Dirichlet { f: &*data.f });
    let exact = PI / 8.0;
    Ok(vec![Check::new(
        "F_0(u_0), relative error",
        (f0 - exact).abs() / exact,
        "<= 0.01",
        (f0 - exact).abs() <= 0.01 * exact,
    )])
}

fn extraction(ctx: &Context) -> Result<Vec<Check>> {
    let bench = ProblemData::half_disk_benchmark();
    let an = analyze(&ctx.sweep.u0, &*bench.f, &Cutoff::default())?;
    let smooth = ProblemData::linear_x();
    let u = solve_mixed_dirichlet(&ctx.space, &*smooth.f, DirichletValues::Project(&*smooth.g))?;
    let cutoff = Cutoff::default();
    let c0 = extract_coefficient(&u, &an.frames[0], &cutoff, &default_radii(&cutoff))?.c;
    Ok(vec![
        Check::within("c, benchmark", an.constants.c[0], 1.0, 0.02),
        Check::within("c, smooth harmonic datum", c0, 0.0, 0.02),
    ])
}

fn window(records: &[SweepRecord]) -> Vec<SweepRecord> {
    records
        .iter()
        .filter(|r| r.eps <= SLOPE_EPS_MAX)
        .cloned()
        .collect()
}

fn first_order(ctx: &Context) -> Result<Vec<Check>> {
    let an = analyze(&ctx.sweep.u0, &|_: Point| 0.0, &Cutoff::default())?;
    let s = energy_slopes(&window(&ctx.sweep.records), ctx.sweep.f0, &an.constants.c)?;
    Ok(vec![Check::within("extrapolated F1", s.f1, -0.125, 0.0125)])
}

fn rate_checks(label: &str, records: &[SweepRecord]) -> Result<Vec<Check>> {
    let grad = fit_column(records, Column::H1Semi, RateModel::Pow)?;
    let pow = fit_column(records, Column::L2Boundary, RateModel::Pow)?;
    let sqrtlog = fit_column(records, Column::L2Boundary, RateModel::PowSqrtLog)?;
    let margin = sqrtlog.determination - pow.determination;
    Ok(vec![
        Check::within(
            format!("{label}: gradient exponent"),
            grad.alpha.unwrap_or(f64::NAN),
            0.5,
            0.05,
        ),
        Check::in_range(
            format!("{label}: boundary POW exponent"),
            pow.alpha.unwrap_or(f64::NAN),
            0.9,
            1.0,
        ),
        Check::new(
            format!("{label}: R2(POW_SQRTLOG) - R2(POW)"),
            margin,
            ">= 0",
            margin >= 0.0,
        ),
    ])
}

fn rates(ctx: &Context) -> Result<Vec<Check>> {
    let mut checks = rate_checks(&format!("h = {BENCH_H}"), &ctx.sweep.records)?;
    checks.extend(rate_checks(
        &format!("h = {}", BENCH_H / 2.0),
        &ctx.fine_sweep.records,
    )?);
    Ok(checks)
}

fn auxiliary(ctx: &Context) -> Result<Vec<Check>> {
    let radii = halfplane::DEFAULT_RADII;
    let a0 = halfplane::estimate_a(0.0, &radii, &[AUX_H])?.a;
    let a1 = ctx.a_unit.a;
    let explicit = halfplane::explicit_competitor_j(1.0);
    let mut checks = vec![
        Check::new("A(0)", a0, "== 0", a0 == 0.0),
        Check::at_most("A(1)", a1, explicit),
    ];
    for c in [0.5, 2.0] {
        let ac = halfplane::estimate_a(c, &radii, &[AUX_H])?.a;
        let rel = (ac - c * c * a1).abs() / (c * c * a1).abs();
        checks.push(Check::at_most(
            format!("|A({c}) - {c}^2 A(1)| / |{c}^2 A(1)|"),
            rel,
            1e-6,
        ));
    }
    let r = 64.0;
    let space = halfplane::aux_space(r, AUX_H)?;
    let v = FeFunction::interpolate(space, halfplane::explicit_competitor(1.0));
    let jv = halfplane::j_value(&v, 1.0, r)?;
    let mut last = Check::within(
        "truncated J of explicit competitor at R = 64",
        jv,
        explicit,
        1e-3,
    );
    if !last.pass {
        last.expected_failure = Some(format!(
            "the competitor's energy outside B_R is pi/(16 R) = {:.3e} > 1e-3 at R = 64, so no exact evaluation meets this tolerance",
            halfplane::explicit_competitor_tail(1.0, r)
        ));
    }
    checks.push(last);
    Ok(checks)
}

fn second_order(ctx: &Context) -> Result<Vec<Check>> {
    let an = analyze(&ctx.sweep.u0, &|_: Point| 0.0, &Cutoff::default())?;
    let k = an.constants.with_unit_a(ctx.a_unit.a);
    let formula = f2_formula(&k)?;
    let s = energy_slopes(&window(&ctx.sweep.records), ctx.sweep.f0, &k.c)?;
    let rel = (s.f2 - formula).abs() / formula.abs();
    Ok(vec![Check::at_most(
        format!(
            "|F2_emp - F2_formula| / |F2_formula| (F2_emp = {:.4}, formula = {formula:.4})",
            s.f2
        ),
        rel,
        0.15,
    )])
}

/// A random smooth function: a trigonometric polynomial with random coefficients.
fn random_smooth(rng: &mut ChaCha8Rng, modes: usize) -> impl Fn(Point) -> f64 {
    let terms: Vec<(f64, f64, f64, f64)> = (0..modes)
        .map(|_| {
            (
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-4.0..4.0),
                rng.gen_range(-4.0..4.0),
                rng.gen_range(0.0..2.0 * PI),
            )
        })
        .collect();
    move |p: Point| {
        terms
            .iter()
            .map(|&(a, kx, ky, ph)| a * (kx * p[0] + ky * p[1] + ph).cos())
            .sum()
    }
}

fn random_nodal(rng: &mut ChaCha8Rng, space: &Arc<FeSpace>) -> FeFunction {
    let coeffs = (0..space.ndof())
        .map(|_| rng.gen_range(-1.0..1.0))
        .collect();
    FeFunction {
        space: space.clone(),
        coeffs,
    }
}

/// Number of random test functions in the weak identity check.
pub const WEAK_SAMPLES: usize = 20;

fn weak_identity(ctx: &Context) -> Result<Vec<Check>> {
    let an = analyze(&ctx.sweep.u0, &|_: Point| 0.0, &Cutoff::default())?;
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let mut worst = 0.0f64;
    for _ in 0..WEAK_SAMPLES {
        let psi = FeFunction::interpolate(ctx.space.clone(), random_smooth(&mut rng, 6));
        let w = verify_weak_identity(
            &ctx.sweep.u0,
            &an.constants.c,
            &an.frames,
            &Cutoff::default(),
            &|_| 0.0,
            &an.flux.trace,
            &psi,
        )?;
        worst = worst.max(w.relative);
    }
    Ok(vec![Check::at_most(
        format!("largest relative residual over {WEAK_SAMPLES} random test functions"),
        worst,
        0.02,
    )])
}

/// Number of random functions in the Hardy inequality check.
pub const HARDY_SAMPLES: usize = 100;

fn hardy(seed: u64) -> Result<Vec<Check>> {
    let space = FeSpace::new(Arc::new(build_unit_disk(0.05)?), 1)?;
    let one = FeFunction::interpolate(space.clone(), |_| 1.0);
    let rep = hardy_check(&one, 1.0);
    let target = (2.0 * PI).sqrt();
    let mut checks = vec![
        Check::at_most(
            "constant function: |lhs - sqrt(2 pi)| / sqrt(2 pi)",
            (rep.lhs - target).abs() / target,
            1e-6,
        ),
        Check::at_most(
            "constant function: |rhs - sqrt(2 pi)| / sqrt(2 pi)",
            (rep.rhs - target).abs() / target,
            1e-6,
        ),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let mut worst = 0.0f64;
    for k in 0..HARDY_SAMPLES {
        let h = if k % 2 == 0 {
            random_nodal(&mut rng, &space)
        } else {
            FeFunction::interpolate(space.clone(), random_smooth(&mut rng, 6))
        };
        worst = worst.max(hardy_check(&h, 1.0).ratio);
    }
    checks.push(Check::at_most(
        format!("largest lhs/rhs over {HARDY_SAMPLES} random functions"),
        worst,
        1.0,
    ));
    let mut wmax = 0.0f64;
    for r in [0.5, 1.0, 2.0, 10.0] {
        wmax = wmax.max((log_weight_integral(r) - 5.0 * r).abs() / (5.0 * r));
    }
    checks.push(Check::at_most(
        "log weight integral vs 5R, relative",
        wmax,
        1e-10,
    ));
    Ok(checks)
}

/// Configuration used for the determinism check.
pub const DETERMINISM_CONFIG: &str =
    "command=sweep\ndomain=halfdisk\nh=0.05\nbeta=2\neps=2^-3..2^-8\naux_h=0.1\n";

fn determinism(seed: u64) -> Result<Vec<Check>> {
    let base =
        std::env::temp_dir().join(format!("gamma-determinism-{}-{seed}", std::process::id()));
    let mut outputs = Vec::new();
    for k in 0..2 {
        let dir = base.join(format!("run{k}"));
        let mut plan = parse_config_str(DETERMINISM_CONFIG)?;
        plan.out = dir.clone();
        plan.seed = seed;
        let summary = run(&plan)?;
        let mut files = Vec::new();
        for p in summary
            .artifacts
            .iter()
            .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        {
            files.push((
                p.file_name().map(|n| n.to_os_string()),
                std::fs::read(p).map_err(|e| Error::io(p.display().to_string(), e))?,
            ));
        }
        outputs.push(files);
    }
    let _ = std::fs::remove_dir_all(&base);
    let same = !outputs[0].is_empty() && outputs[0] == outputs[1];
    Ok(vec![Check::new(
        format!(
            "{} CSV artifacts byte-identical across two runs",
            outputs[0].len()
        ),
        same as u8 as f64,
        "1",
        same,
    )])
}

/// One line per criterion: `PASS` or `FAIL`, with measured values.
pub fn summary_line(r: &CriterionResult) -> String {
    let verdict = if r.pass { "PASS" } else { "FAIL" };
    let mut line = format!("criterion {:>2} [{}] {}:", r.id, verdict, r.title);
    for c in &r.checks {
        let _ = write!(
            line,
            " {} = {:.6e} (target {}{});",
            c.label,
            c.measured,
            c.target,
            if c.pass { "" } else { ", failed" }
        );
    }
    if let Some(reason) = r.checks.iter().find_map(|c| {
        if c.pass {
            None
        } else {
            c.expected_failure.as_deref()
        }
    }) {
        let _ = write!(line, " expected failure: {reason}");
    }
    line
}

/// Markdown table of every check.
pub fn to_markdown(results: &[CriterionResult]) -> String {
    let mut out = String::from("# Acceptance report\n\nColumns of acceptance.csv: criterion, check, measured, target, pass (true or false).\n\n");
    out.push_str("| criterion | check | measured | target | verdict |\n|---|---|---|---|---|\n");
    for r in results {
        for c in &r.checks {
            let verdict = match (c.pass, &c.expected_failure) {
                (true, _) => "PASS".to_string(),
                (false, Some(why)) => format!("FAIL (expected: {why})"),
                (false, None) => "FAIL".to_string(),
            };
            let _ = writeln!(
                out,
                "| {} {} | {} | {:.17e} | {} | {} |",
                r.id, r.title, c.label, c.measured, c.target, verdict
            );
        }
    }
    let passed = results.iter().filter(|r| r.pass).count();
    let _ = writeln!(out, "\n{passed} of {} criteria pass.", results.len());
    out
}

/// CSV with columns `criterion,check,measured,target,pass`.
pub fn to_csv(results: &[CriterionResult]) -> String {
    let mut out = String::from("criterion,check,measured,target,pass\n");
    for r in results {
        for c in &r.checks {
            let _ = writeln!(
                out,
                "{},\"{}\",{:.17e},\"{}\",{}",
                r.id,
                c.label.replace('"', "'"),
                c.measured,
                c.target,
                c.pass
            );
        }
    }
    out
}
