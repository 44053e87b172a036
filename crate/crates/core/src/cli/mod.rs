//! Configuration parsing, command dispatch and artifact emission.
//!
//! A configuration is a list of `key=value` tokens separated by whitespace or newlines;
//! `#` starts a comment. Epsilon lists accept comma-separated values, `2^-k` tokens and
//! the dyadic range `2^-a..2^-b`.

pub mod criteria;

use crate::expansion::{
    analyze, corrector_diagnostic, energy_slopes, fit_column, run_sweep, sweep_csv,
    verify_nonmixed, Analysis, Column, CorrectorTable, EnergySlopes, NonmixedTable, RateFit,
    RateModel, Sweep, SweepOptions, SweepRecord,
};
use crate::fem::{energy, EnergyModel, FeFunction, FeSpace, NormKind};
use crate::halfplane::{self, AEstimate};
use crate::mesh::{
    build_half_disk, build_unit_disk, build_unit_square_mixed, read_mesh, validate, write_mesh,
    BoundaryTag, GradingSpec, Mesh,
};
use crate::problems::{solve_mixed_dirichlet, solve_robin, DirichletValues, ProblemData};
use crate::singular::{f2_formula, Cutoff, ExpansionConstants};
use crate::{Error, Result};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

/// Subcommands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Mesh,
    Solve,
    Sweep,
    Aux,
    Verify,
    Report,
}

impl Command {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "mesh" => Command::Mesh,
            "solve" => Command::Solve,
            "sweep" => Command::Sweep,
            "aux" => Command::Aux,
            "verify" => Command::Verify,
            "report" => Command::Report,
            _ => return None,
        })
    }
}

/// Benchmark geometries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    /// Unit disk, Robin everywhere.
    Disk,
    /// Upper unit half-disk with Neumann diameter `(-1, 0)`.
    HalfDisk,
    /// Unit square with Robin segment `(a, b) x {0}`.
    Square { a: f64, b: f64 },
}

impl Domain {
    pub fn build(&self, grading: GradingSpec) -> Result<Mesh> {
        match *self {
            Domain::Disk => build_unit_disk(grading.h_max),
            Domain::HalfDisk => build_half_disk(grading),
            Domain::Square { a, b } => build_unit_square_mixed(grading, a, b),
        }
    }

    /// Cutoff radius per domain: `1/2` on the half-disk, `min(b - a, a, 1 - b)/2` on the square.
    pub fn cutoff(&self) -> Cutoff {
        match *self {
            Domain::Square { a, b } => Cutoff {
                rho: 0.5 * (b - a).min(a).min(1.0 - b),
            },
            _ => Cutoff::default(),
        }
    }

    pub fn data(&self) -> ProblemData {
        match self {
            Domain::Disk => ProblemData::disk_cosine(),
            Domain::HalfDisk => ProblemData::half_disk_benchmark(),
            Domain::Square { .. } => ProblemData::square_linear(),
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Domain::Disk => "disk",
            Domain::HalfDisk => "halfdisk",
            Domain::Square { .. } => "square",
        }
    }
}

/// A validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunPlan {
    pub command: Command,
    pub domain: Domain,
    pub grading: GradingSpec,
    pub degree: usize,
    pub eps: Vec<f64>,
    /// Largest epsilon used for energy slopes.
    pub slope_eps_max: f64,
    pub depth: usize,
    pub out: PathBuf,
    pub seed: u64,
    pub aux_radii: Vec<f64>,
    pub aux_h: f64,
    pub aux_c: Vec<f64>,
    pub mesh_file: Option<PathBuf>,
}

const KEYS: [&str; 16] = [
    "command",
    "domain",
    "h",
    "beta",
    "grading_radius",
    "a",
    "b",
    "degree",
    "eps",
    "slope_eps_max",
    "depth",
    "out",
    "seed",
    "aux_R",
    "aux_h",
    "aux_c",
];
const EXTRA_KEYS: [&str; 1] = ["mesh_file"];

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_number(s: &str) -> Option<f64> {
    if let Some(k) = s.strip_prefix("2^") {
        return k.parse::<i32>().ok().map(|k| 2f64.powi(k));
    }
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Parses `2^-a..2^-b` or a comma-separated list of numbers.
pub fn parse_list(s: &str) -> Option<Vec<f64>> {
    if let Some((lo, hi)) = s.split_once("..") {
        let a = lo.strip_prefix("2^")?.parse::<i32>().ok()?;
        let b = hi.strip_prefix("2^")?.parse::<i32>().ok()?;
        let step = if b >= a { 1 } else { -1 };
        let mut out = Vec::new();
        let mut k = a;
        loop {
            out.push(2f64.powi(k));
            if k == b {
                break;
            }
            k += step;
        }
        return Some(out);
    }
    s.split(',').map(|t| parse_number(t.trim())).collect()
}

/// Parses configuration text. Later tokens never override earlier ones: duplicates are
/// rejected.
pub fn parse_config_str(text: &str) -> Result<RunPlan> {
    let mut map: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("");
        for token in content.split_whitespace() {
            let (k, v) = token
                .split_once('=')
                .ok_or_else(|| parse_err(line, format!("expected key=value, got '{token}'")))?;
            if !KEYS.contains(&k) && !EXTRA_KEYS.contains(&k) {
                return Err(parse_err(line, format!("unknown key '{k}'")));
            }
            if map.insert(k, (line, v)).is_some() {
                return Err(parse_err(line, format!("duplicate key '{k}'")));
            }
        }
    }
    let (cmd_line, cmd) = *map
        .get("command")
        .ok_or_else(|| parse_err(0, "missing required key 'command'"))?;
    let command = Command::parse(cmd)
        .ok_or_else(|| parse_err(cmd_line, format!("unknown command '{cmd}'")))?;
    let num = |k: &str, default: f64| -> Result<f64> {
        match map.get(k) {
            None => Ok(default),
            Some(&(line, v)) => parse_number(v)
                .ok_or_else(|| parse_err(line, format!("malformed number for '{k}': '{v}'"))),
        }
    };
    let list = |k: &str, default: Vec<f64>| -> Result<Vec<f64>> {
        match map.get(k) {
            None => Ok(default),
            Some(&(line, v)) => parse_list(v)
                .ok_or_else(|| parse_err(line, format!("malformed list for '{k}': '{v}'"))),
        }
    };
    let int = |k: &str, default: u64| -> Result<u64> {
        match map.get(k) {
            None => Ok(default),
            Some(&(line, v)) => v
                .parse()
                .map_err(|_| parse_err(line, format!("malformed integer for '{k}': '{v}'"))),
        }
    };
    let needs_domain = !matches!(command, Command::Aux | Command::Report | Command::Verify);
    let domain = match map.get("domain") {
        None if needs_domain => return Err(parse_err(0, "missing required key 'domain'")),
        None => Domain::Disk,
        Some(&(_, "disk")) => Domain::Disk,
        Some(&(_, "halfdisk")) => Domain::HalfDisk,
        Some(&(_, "square")) => Domain::Square {
            a: num("a", 0.25)?,
            b: num("b", 0.75)?,
        },
        Some(&(line, other)) => return Err(parse_err(line, format!("unknown domain '{other}'"))),
    };
    let eps = list("eps", crate::expansion::default_eps())?;
    if let Some(e) = eps.iter().find(|&&e| !(e > 0.0 && e < 1.0)) {
        let line = map.get("eps").map_or(0, |x| x.0);
        return Err(parse_err(
            line,
            format!("epsilon must lie in (0, 1), got {e}"),
        ));
    }
    let degree = int("degree", 1)? as usize;
    if degree != 1 && degree != 2 {
        return Err(parse_err(
            map["degree"].0,
            format!("degree must be 1 or 2, got {degree}"),
        ));
    }
    let plan = RunPlan {
        command,
        domain,
        grading: GradingSpec::new(
            num("h", 0.05)?,
            num("beta", 1.0)?,
            num("grading_radius", 0.5)?,
        ),
        degree,
        eps,
        slope_eps_max: num("slope_eps_max", 2f64.powi(-6))?,
        depth: int("depth", 3)? as usize,
        out: PathBuf::from(map.get("out").map_or("out", |x| x.1)),
        seed: int("seed", 0)?,
        aux_radii: list("aux_R", halfplane::DEFAULT_RADII.to_vec())?,
        aux_h: num("aux_h", 0.05)?,
        aux_c: list("aux_c", vec![1.0])?,
        mesh_file: map.get("mesh_file").map(|x| PathBuf::from(x.1)),
    };
    plan.grading.check()?;
    Ok(plan)
}

/// Reads and parses a configuration file.
pub fn parse_config(path: &Path) -> Result<RunPlan> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    parse_config_str(&text)
}

/// What a run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub assertions_passed: bool,
    pub artifacts: Vec<PathBuf>,
    pub report: String,
}

/// Process exit status: 0 on success, 1 on a failed assertion, 2 on any error.
pub fn exit_code(result: &Result<RunSummary>) -> i32 {
    match result {
        Ok(s) if s.assertions_passed => 0,
        Ok(_) => 1,
        Err(_) => 2,
    }
}

struct Artifacts {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Artifacts {
    fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, content: &str) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, content).map_err(|e| Error::io(path.display().to_string(), e))?;
        self.written.push(path);
        Ok(())
    }
}

/// Executes a plan, writing artifacts into `plan.out`.
pub fn run(plan: &RunPlan) -> Result<RunSummary> {
    let mut art = Artifacts::new(&plan.out)?;
    let (passed, report) = match plan.command {
        Command::Mesh => run_mesh(plan, &mut art)?,
        Command::Solve => run_solve(plan, &mut art)?,
        Command::Sweep => run_sweep_command(plan, &mut art)?,
        Command::Aux => run_aux(plan, &mut art)?,
        Command::Verify => run_verify(plan, &mut art)?,
        Command::Report => run_report(plan, &mut art)?,
    };
    art.write("report.md", &report)?;
    Ok(RunSummary {
        assertions_passed: passed,
        artifacts: art.written,
        report,
    })
}

fn load_mesh(plan: &RunPlan) -> Result<Mesh> {
    match &plan.mesh_file {
        Some(p) => read_mesh(p),
        None => plan.domain.build(plan.grading),
    }
}

fn load_space(plan: &RunPlan) -> Result<Arc<FeSpace>> {
    FeSpace::new(Arc::new(load_mesh(plan)?), plan.degree)
}

fn run_mesh(plan: &RunPlan, art: &mut Artifacts) -> Result<(bool, String)> {
    let mesh = load_mesh(plan)?;
    let path = art.dir.join("mesh.txt");
    write_mesh(&mesh, &path)?;
    art.written.push(path);
    let mut r = format!("# Mesh: {}\n\n", plan.domain.name());
    match validate(&mesh) {
        Ok(rep) => {
            let _ = writeln!(r, "| quantity | value |\n|---|---|");
            let _ = writeln!(r, "| vertices | {} |", rep.num_vertices);
            let _ = writeln!(r, "| triangles | {} |", rep.num_triangles);
            let _ = writeln!(r, "| edges | {} |", rep.num_edges);
            let _ = writeln!(r, "| boundary edges | {} |", rep.num_boundary_edges);
            let _ = writeln!(r, "| junctions | {} |", mesh.junctions.len());
            let _ = writeln!(r, "| min angle (deg) | {:.17e} |", rep.min_angle_deg);
            let _ = writeln!(r, "| max edge | {:.17e} |", rep.max_edge);
            let _ = writeln!(r, "| min edge | {:.17e} |", rep.min_edge);
            let _ = writeln!(r, "\nvalidation: PASS");
            Ok((true, r))
        }
        Err(e) => {
            let _ = writeln!(r, "validation: FAIL ({e})");
            Ok((false, r))
        }
    }
}

fn run_solve(plan: &RunPlan, art: &mut Artifacts) -> Result<(bool, String)> {
    let space = load_space(plan)?;
    let data = plan.domain.data();
    let mesh_name = "mesh.txt";
    write_mesh(space.mesh(), &art.dir.join(mesh_name))?;
    art.written.push(art.dir.join(mesh_name));
    let u0 = solve_mixed_dirichlet(&space, &*data.f, DirichletValues::Project(&*data.g))?;
    art.write("u0.txt", &u0.to_text(mesh_name))?;
    let mut csv = String::from("eps,energy,l2_norm,h1_semi_norm\n");
    let f0 = energy(&u0, EnergyModel::Dirichlet { f: &*data.f });
    let row = |e: f64, en: f64, u: &FeFunction| {
        format!(
            "{:.17e},{:.17e},{:.17e},{:.17e}\n",
            e,
            en,
            u.norm(NormKind::L2Domain),
            u.norm(NormKind::H1Semi)
        )
    };
    csv.push_str(&row(0.0, f0, &u0));
    for (k, &e) in plan.eps.iter().enumerate() {
        let u = solve_robin(&space, &*data.f, &*data.g, e)?;
        let en = energy(
            &u,
            EnergyModel::Robin {
                eps: e,
                f: &*data.f,
                g: &*data.g,
            },
        );
        art.write(&format!("u_eps_{k}.txt"), &u.to_text(mesh_name))?;
        csv.push_str(&row(e, en, &u));
    }
    art.write("solve.csv", &csv)?;
    let r = format!(
        "# Solve: {}\n\nColumns of solve.csv: eps (0 for the limit problem), energy, l2_norm, h1_semi_norm.\n\ndofs: {}\nF_0: {:.17e}\n",
        plan.domain.name(),
        space.ndof(),
        f0
    );
    Ok((true, r))
}

/// Everything computed by a benchmark sweep.
#[derive(Debug, Clone)]
pub struct SweepReport {
    pub domain: String,
    pub sweep: Sweep,
    pub fits: Vec<(Column, RateFit)>,
    pub slopes: Option<EnergySlopes>,
    pub analysis: Option<Analysis>,
    pub constants: Option<ExpansionConstants>,
    pub f2_formula: Option<f64>,
    pub a_unit: Option<AEstimate>,
    pub corrector: Option<CorrectorTable>,
    /// Non-mixed expansion table, for domains without Neumann part.
    pub nonmixed: Option<NonmixedTable>,
}

/// Runs a sweep with all diagnostics; `a_unit` supplies `A(1)` for the formula.
pub fn sweep_report(
    space: &Arc<FeSpace>,
    domain: &Domain,
    eps: &[f64],
    slope_eps_max: f64,
    a_unit: Option<AEstimate>,
) -> Result<SweepReport> {
    let data = domain.data();
    let cutoff = domain.cutoff();
    let sweep = run_sweep(
        space,
        &data,
        eps,
        SweepOptions {
            extract: true,
            keep_solutions: true,
            cutoff,
        },
    )?;
    if sweep.failure.is_some() {
        return Ok(SweepReport {
            domain: domain.name().into(),
            sweep,
            fits: Vec::new(),
            slopes: None,
            analysis: None,
            constants: None,
            f2_formula: None,
            a_unit,
            corrector: None,
            nonmixed: None,
        });
    }
    let mut fits = Vec::new();
    for col in [Column::L2Domain, Column::L2Boundary, Column::H1Semi] {
        for model in [RateModel::Pow, RateModel::PowSqrtLog, RateModel::PowLog] {
            if let Ok(fit) = fit_column(&sweep.records, col, model) {
                fits.push((col, fit));
            }
        }
    }
    let has_junctions = !crate::expansion::flat_junctions(space).is_empty();
    let nonmixed = if space.boundary_dofs(BoundaryTag::Neumann).is_empty() {
        Some(verify_nonmixed(
            space,
            &*data.f,
            &*data.g,
            eps,
            NONMIXED_DEPTH,
        )?)
    } else {
        None
    };
    let (analysis, constants, f2, corrector, slopes) = if has_junctions {
        let an = analyze(&sweep.u0, &*data.f, &cutoff)?;
        let mut k = an.constants.clone();
        if let Some(a) = &a_unit {
            k = k.with_unit_a(a.a);
        }
        let f2 = f2_formula(&k).ok();
        let window: Vec<SweepRecord> = sweep
            .records
            .iter()
            .filter(|r| r.eps <= slope_eps_max)
            .cloned()
            .collect();
        let slopes = energy_slopes(&window, sweep.f0, &k.c).ok();
        let corrector = corrector_diagnostic(&sweep, &an.u1, &k, &an.frames).ok();
        (Some(an), Some(k), f2, corrector, slopes)
    } else {
        (
            None,
            None,
            None,
            None,
            energy_slopes(&sweep.records, sweep.f0, &[]).ok(),
        )
    };
    Ok(SweepReport {
        domain: domain.name().into(),
        sweep,
        fits,
        slopes,
        analysis,
        constants,
        f2_formula: f2,
        a_unit,
        corrector,
        nonmixed,
    })
}

/// CSV with columns `junction,c,B,A,C_phi,flux_norm_sq`.
pub fn constants_csv(k: &ExpansionConstants) -> String {
    let mut out = String::from("junction,c,B,A,C_phi,flux_norm_sq\n");
    for i in 0..k.c.len() {
        let a = k.a.get(i).copied().flatten().unwrap_or(f64::NAN);
        let _ = writeln!(
            out,
            "{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
            i + 1,
            k.c[i],
            k.b[i],
            a,
            k.c_phi,
            k.flux_norm_sq
        );
    }
    out
}

fn column_name(c: Column) -> &'static str {
    match c {
        Column::L2Domain => "err_l2_dom",
        Column::L2Boundary => "err_l2_gd",
        Column::H1Semi => "err_h1",
    }
}

/// Human-readable summary of a sweep.
pub fn emit_report(rep: &SweepReport) -> Result<String> {
    if rep.sweep.records.is_empty() {
        return Err(Error::InvalidInput(
            "cannot report on an empty sweep".into(),
        ));
    }
    let mut r = String::new();
    let _ = writeln!(r, "# Sweep report: {}\n", rep.domain);
    let _ = writeln!(r, "Columns of sweep.csv: eps; err_l2_dom = ||u_eps - u_0||_L2(domain); err_l2_gd = ||u_eps - u_0||_L2(Robin part);");
    let _ = writeln!(r, "err_h1 = |u_eps - u_0|_H1; F_eps = penalised energy of u_eps; c1, c2 = coefficients extracted from u_eps (nan if none).");
    let _ = writeln!(r, "Columns of constants.csv: junction, c, B, A = c^2 A(1), C_phi, flux_norm_sq = ||d_nu u_reg||^2 on the Robin part.\n");
    let _ = writeln!(r, "F_0(u_0) = {:.17e}\n", rep.sweep.f0);
    let _ = writeln!(r, "## Rate fits\n\n| column | model | exponent | constant | determination |\n|---|---|---|---|---|");
    for (col, fit) in &rep.fits {
        let alpha = fit.alpha.map_or("-".to_string(), |a| format!("{a:.17e}"));
        let _ = writeln!(
            r,
            "| {} | {} | {} | {:.17e} | {:.17e} |",
            column_name(*col),
            fit.model.name(),
            alpha,
            fit.c,
            fit.determination
        );
    }
    if let Some(s) = &rep.slopes {
        let _ = writeln!(r, "\n## Energy coefficients\n");
        let _ = writeln!(r, "F1 (extrapolated) = {:.17e}", s.f1);
        let _ = writeln!(r, "F2 (empirical, extrapolated) = {:.17e}", s.f2);
    }
    if let Some(f2) = rep.f2_formula {
        let _ = writeln!(r, "F2 (formula) = {f2:.17e}");
    }
    if let Some(a) = &rep.a_unit {
        let _ = writeln!(
            r,
            "A(1) = {:.17e} (tail estimate {:.3e}, fitted q = {})",
            a.a,
            a.tail_bound,
            a.q.map_or("none".into(), |q| format!("{q:.6}"))
        );
    }
    if let Some(k) = &rep.constants {
        let _ = writeln!(r, "\n## Constants\n\n| junction | c | B |\n|---|---|---|");
        for i in 0..k.c.len() {
            let _ = writeln!(r, "| {} | {:.17e} | {:.17e} |", i + 1, k.c[i], k.b[i]);
        }
        let _ = writeln!(
            r,
            "\nC_phi = {:.17e}\nflux_norm_sq = {:.17e}",
            k.c_phi, k.flux_norm_sq
        );
    }
    if let Some(c) = &rep.corrector {
        let _ = writeln!(r, "\n## Corrector diagnostic\n\n| eps | norm |\n|---|---|");
        for (e, n) in c.eps.iter().zip(&c.norms) {
            let _ = writeln!(r, "| {e:.17e} | {n:.17e} |");
        }
        let _ = writeln!(
            r,
            "\nmax/min ratio = {:.6} ({})",
            c.ratio,
            if c.bounded() {
                "bounded"
            } else {
                "NOT bounded"
            }
        );
    }
    if let Some(t) = &rep.nonmixed {
        let _ = writeln!(r, "\n## Non-mixed expansion\n");
        r.push_str(&nonmixed_table(t));
    }
    Ok(r)
}

/// Depth of the non-mixed expansion reported for sweeps on the disk.
pub const NONMIXED_DEPTH: usize = 3;

fn nonmixed_table(t: &NonmixedTable) -> String {
    let mut r = String::from("| depth | fitted exponent | required |\n|---|---|---|\n");
    for (j, e) in t.exponents.iter().enumerate() {
        let _ = writeln!(
            r,
            "| {} | {} | >= {:.1} |",
            j + 1,
            e.map_or("round-off".into(), |e| format!("{e:.17e}")),
            j as f64 + 0.9
        );
    }
    let _ = writeln!(
        r,
        "| boundary | {} | >= 1.9 |",
        t.boundary_exponent
            .map_or("round-off".into(), |e| format!("{e:.17e}"))
    );
    r
}

fn run_sweep_command(plan: &RunPlan, art: &mut Artifacts) -> Result<(bool, String)> {
    let space = load_space(plan)?;
    let a_unit = if crate::expansion::flat_junctions(&space).is_empty() {
        None
    } else {
        Some(halfplane::estimate_a(1.0, &plan.aux_radii, &[plan.aux_h])?)
    };
    let rep = sweep_report(&space, &plan.domain, &plan.eps, plan.slope_eps_max, a_unit)?;
    art.write("sweep.csv", &sweep_csv(&rep.sweep.records))?;
    if let Some(msg) = &rep.sweep.failure {
        return Err(Error::InvalidInput(format!(
            "sweep aborted after {} records: {msg}",
            rep.sweep.records.len()
        )));
    }
    if let Some(k) = &rep.constants {
        art.write("constants.csv", &constants_csv(k))?;
    }
    let passed = rep.corrector.as_ref().is_none_or(|c| c.bounded())
        && rep.nonmixed.as_ref().is_none_or(|t| t.passes());
    Ok((passed, emit_report(&rep)?))
}

fn run_aux(plan: &RunPlan, art: &mut Artifacts) -> Result<(bool, String)> {
    let mut estimates = Vec::new();
    let mut r = String::from("# Auxiliary half-plane problem\n\n");
    let _ = writeln!(r, "Columns of aux.csv: c, R (truncation radius), h, J_R (truncated minimum), A_extrapolated, fit_q, fit_residual.\n");
    let mut passed = true;
    for &c in &plan.aux_c {
        let est = halfplane::estimate_a(c, &plan.aux_radii, &[plan.aux_h])?;
        for run in &est.runs {
            let space = halfplane::aux_space(run.radius, run.h)?;
            let v = FeFunction::interpolate(space, halfplane::explicit_competitor(c));
            let jv = halfplane::j_value(&v, c, run.radius)?;
            let ok = run.j <= jv.min(0.0) + 1e-12;
            passed &= ok;
            let _ = writeln!(
                r,
                "c = {c}, R = {}: J_R = {:.17e}, J_R(explicit) = {:.17e}, admissible bound {}",
                run.radius,
                run.j,
                jv,
                if ok { "holds" } else { "VIOLATED" }
            );
        }
        let _ = writeln!(
            r,
            "c = {c}: A = {:.17e}, q = {}, tail estimate {:.3e}{}\n",
            est.a,
            est.q.map_or("none".into(), |q| format!("{q:.6}")),
            est.tail_bound,
            if est.monotone || c == 0.0 {
                ""
            } else {
                " (WARNING: J_R not monotone in R; mesh may be under-resolved)"
            }
        );
        estimates.push(est);
    }
    art.write("aux.csv", &halfplane::to_csv(&estimates))?;
    Ok((passed, r))
}

fn nonmixed_csv(t: &NonmixedTable) -> String {
    let mut out = String::from("eps");
    for j in 1..=t.remainders.len() {
        let _ = write!(out, ",remainder_{j}");
    }
    out.push_str(",boundary_remainder\n");
    for (k, e) in t.eps.iter().enumerate() {
        let _ = write!(out, "{e:.17e}");
        for rem in &t.remainders {
            let _ = write!(out, ",{:.17e}", rem[k]);
        }
        let _ = writeln!(out, ",{:.17e}", t.boundary[k]);
    }
    out
}

fn run_verify(plan: &RunPlan, art: &mut Artifacts) -> Result<(bool, String)> {
    let space = FeSpace::new(Arc::new(build_unit_disk(plan.grading.h_max)?), plan.degree)?;
    let data = ProblemData::disk_cosine();
    let t = verify_nonmixed(&space, &*data.f, &*data.g, &plan.eps, plan.depth)?;
    art.write("verify.csv", &nonmixed_csv(&t))?;
    let mut r = String::from("# Non-mixed expansion on the unit disk (g = cos theta)\n\n");
    let names: Vec<String> = (1..=t.remainders.len())
        .map(|j| format!("remainder_{j}"))
        .collect();
    let _ = writeln!(r, "Columns of verify.csv: eps; {} with remainder_j = ||u_eps - sum_{{i<j}} eps^i u_i||_H1; boundary_remainder = ||u_eps - u_0 - eps u_1||_L2(boundary).\n", names.join(", "));
    r.push_str(&nonmixed_table(&t));
    let b_ok = t.boundary_exponent.is_none_or(|e| e >= 1.9);
    Ok((t.passes() && b_ok, r))
}

fn run_report(plan: &RunPlan, art: &mut Artifacts) -> Result<(bool, String)> {
    let results = criteria::evaluate_all(plan.seed)?;
    art.write("acceptance.csv", &criteria::to_csv(&results))?;
    let passed = results.iter().all(|c| c.pass);
    Ok((passed, criteria::to_markdown(&results)))
}
