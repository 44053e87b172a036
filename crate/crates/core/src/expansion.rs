//! Epsilon sweeps: errors and energies of the Robin solutions against the discrete limit,
//! rate fits, extrapolated energy coefficients and corrector diagnostics.

use crate::fem::{energy, EnergyModel, FeFunction, FeSpace, NormKind};
use crate::lsq::lstsq;
use crate::mesh::{BoundaryTag, JunctionFrame};
use crate::problems::{
    dirichlet_vector, recursive_chain, solve_mixed_dirichlet, solve_robin, solve_u1,
    DirichletValues, ProblemData,
};
use crate::singular::{
    constants, default_radii, extract_coefficient, regular_flux, Cutoff, ExpansionConstants,
    Extraction, RegularFlux,
};
use crate::{Error, Point, Result};
use rayon::prelude::*;
use std::sync::Arc;

/// `2^-k` for `k` in `k_min..=k_max`.
pub fn dyadic_eps(k_min: i32, k_max: i32) -> Vec<f64> {
    (k_min..=k_max).map(|k| 2f64.powi(-k)).collect()
}

/// The default sweep `2^-3, ..., 2^-10`.
pub fn default_eps() -> Vec<f64> {
    dyadic_eps(3, 10)
}

/// Errors and energy of one Robin solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub eps: f64,
    pub err_l2_dom: f64,
    pub err_l2_gd: f64,
    pub err_h1: f64,
    pub f_eps: f64,
    /// Extracted singular coefficients of `u_eps`, one per flat junction (`NaN` if skipped).
    pub c: Vec<f64>,
}

/// Results of [`run_sweep`].
#[derive(Debug, Clone)]
pub struct Sweep {
    pub u0: FeFunction,
    pub f0: f64,
    pub records: Vec<SweepRecord>,
    /// Robin solutions, aligned with `records`, when requested.
    pub solutions: Vec<FeFunction>,
    /// Message of the first failed solve; `records` then holds the solves before it.
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SweepOptions {
    /// Extract singular coefficients from each `u_eps`.
    pub extract: bool,
    /// Keep the Robin solutions.
    pub keep_solutions: bool,
    /// Cutoff used for extraction.
    pub cutoff: Cutoff,
}

/// Frames of the junctions at which the boundary is straight.
pub fn flat_junctions(space: &FeSpace) -> Vec<JunctionFrame> {
    let mesh = space.mesh();
    (0..mesh.junctions.len())
        .filter(|&j| mesh.is_flat_junction(j))
        .map(|j| mesh.junctions[j])
        .collect()
}

fn check_eps(eps: &[f64]) -> Result<()> {
    if eps.is_empty() {
        return Err(Error::InvalidInput("empty epsilon list".into()));
    }
    if let Some(e) = eps.iter().find(|&&e| !(e > 0.0 && e <= 0.125)) {
        return Err(Error::InvalidInput(format!("epsilon {e} outside (0, 1/8]")));
    }
    if eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidInput(
            "epsilon list must be strictly decreasing".into(),
        ));
    }
    Ok(())
}

/// Penalised energy with the datum replaced by its boundary projection, so that the
/// discrete limit `u0` has energy exactly `F_0(u0)`.
pub fn robin_energy(
    u: &FeFunction,
    f: &dyn Fn(Point) -> f64,
    g_proj: &FeFunction,
    eps: f64,
) -> f64 {
    let defect = u.axpy(-1.0, g_proj).expect("same space");
    energy(u, EnergyModel::Dirichlet { f })
        + 0.5 / eps * defect.norm_sq(NormKind::L2Boundary(BoundaryTag::RobinDirichlet))
}

/// Solves the limit problem once and the Robin problem for every `eps` (concurrently).
pub fn run_sweep(
    space: &Arc<FeSpace>,
    data: &ProblemData,
    eps: &[f64],
    opts: SweepOptions,
) -> Result<Sweep> {
    check_eps(eps)?;
    let f = &*data.f;
    let g = &*data.g;
    let u0 = solve_mixed_dirichlet(space, f, DirichletValues::Project(g))?;
    let g_proj = FeFunction::from_coeffs(
        space.clone(),
        dirichlet_vector(space, DirichletValues::Project(g))?,
    )?;
    let f0 = energy(&u0, EnergyModel::Dirichlet { f });
    let frames = flat_junctions(space);
    let cutoff = opts.cutoff;
    let outcomes: Vec<Result<(SweepRecord, FeFunction)>> = eps
        .par_iter()
        .map(|&e| {
            let u = solve_robin(space, f, g, e)?;
            let d = u.axpy(-1.0, &u0)?;
            let c = frames
                .iter()
                .map(|fr| {
                    if opts.extract {
                        extract_coefficient(&u, fr, &cutoff, &default_radii(&cutoff))
                            .map_or(f64::NAN, |x| x.c)
                    } else {
                        f64::NAN
                    }
                })
                .collect();
            let record = SweepRecord {
                eps: e,
                err_l2_dom: d.norm(NormKind::L2Domain),
                err_l2_gd: d.norm(NormKind::L2Boundary(BoundaryTag::RobinDirichlet)),
                err_h1: d.norm(NormKind::H1Semi),
                f_eps: robin_energy(&u, f, &g_proj, e),
                c,
            };
            Ok((record, u))
        })
        .collect();
    let mut records = Vec::new();
    let mut solutions = Vec::new();
    let mut failure = None;
    for o in outcomes {
        match o {
            Ok((r, u)) => {
                records.push(r);
                if opts.keep_solutions {
                    solutions.push(u);
                }
            }
            Err(e) => {
                failure = Some(e.to_string());
                break;
            }
        }
    }
    Ok(Sweep {
        u0,
        f0,
        records,
        solutions,
        failure,
    })
}

/// CSV with columns `eps,err_l2_dom,err_l2_gd,err_h1,F_eps,c1,c2`.
pub fn sweep_csv(records: &[SweepRecord]) -> String {
    let mut out = String::from("eps,err_l2_dom,err_l2_gd,err_h1,F_eps,c1,c2\n");
    for r in records {
        let c = |i: usize| r.c.get(i).copied().unwrap_or(f64::NAN);
        out.push_str(&format!(
            "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}\n",
            r.eps,
            r.err_l2_dom,
            r.err_l2_gd,
            r.err_h1,
            r.f_eps,
            c(0),
            c(1)
        ));
    }
    out
}

/// Candidate error scalings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateModel {
    /// `C eps^alpha`
    Pow,
    /// `C eps sqrt|log eps|`
    PowSqrtLog,
    /// `C eps |log eps|`
    PowLog,
}

impl RateModel {
    pub fn name(self) -> &'static str {
        match self {
            RateModel::Pow => "POW",
            RateModel::PowSqrtLog => "POW_SQRTLOG",
            RateModel::PowLog => "POW_LOG",
        }
    }

    fn shape(self, eps: f64) -> f64 {
        match self {
            RateModel::Pow => 1.0,
            RateModel::PowSqrtLog => eps * eps.ln().abs().sqrt(),
            RateModel::PowLog => eps * eps.ln().abs(),
        }
    }
}

/// Least-squares fit in log-log space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub model: RateModel,
    /// Fitted exponent (`Pow` only).
    pub alpha: Option<f64>,
    pub c: f64,
    /// Coefficient of determination of the log data, clamped to `[0, 1]`.
    pub determination: f64,
}

/// Fits `values ~ model(eps)`; needs at least four positive values.
pub fn fit_rate(eps: &[f64], values: &[f64], model: RateModel) -> Result<RateFit> {
    if eps.len() != values.len() {
        return Err(Error::InvalidInput(
            "eps and values differ in length".into(),
        ));
    }
    if eps.len() < 4 {
        return Err(Error::InvalidInput(format!(
            "rate fits need at least 4 points, got {}",
            eps.len()
        )));
    }
    if let Some(v) = values
        .iter()
        .chain(eps)
        .find(|&&v| !(v > 0.0 && v.is_finite()))
    {
        return Err(Error::InvalidInput(format!(
            "rate fits need positive finite data, got {v}"
        )));
    }
    let y: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let tss: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let (alpha, log_c, rss) = match model {
        RateModel::Pow => {
            let rows: Vec<Vec<f64>> = eps.iter().map(|e| vec![1.0, e.ln()]).collect();
            let (beta, rss) = lstsq(&rows, &y)?;
            (Some(beta[1]), beta[0], rss)
        }
        _ => {
            let z: Vec<f64> = eps
                .iter()
                .zip(&y)
                .map(|(e, y)| y - model.shape(*e).ln())
                .collect();
            let m = z.iter().sum::<f64>() / z.len() as f64;
            (None, m, z.iter().map(|v| (v - m).powi(2)).sum())
        }
    };
    let scale = y.iter().map(|v| v * v).sum::<f64>().max(1.0);
    let determination = if tss <= 1e-28 * scale {
        if rss <= 1e-24 * scale {
            1.0
        } else {
            0.0
        }
    } else {
        (1.0 - rss / tss).clamp(0.0, 1.0)
    };
    Ok(RateFit {
        model,
        alpha,
        c: log_c.exp(),
        determination,
    })
}

/// Error columns of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Column {
    L2Domain,
    L2Boundary,
    H1Semi,
}

impl Column {
    pub fn get(self, r: &SweepRecord) -> f64 {
        match self {
            Column::L2Domain => r.err_l2_dom,
            Column::L2Boundary => r.err_l2_gd,
            Column::H1Semi => r.err_h1,
        }
    }
}

/// [`fit_rate`] on one column of a sweep.
pub fn fit_column(records: &[SweepRecord], column: Column, model: RateModel) -> Result<RateFit> {
    let eps: Vec<f64> = records.iter().map(|r| r.eps).collect();
    let v: Vec<f64> = records.iter().map(|r| column.get(r)).collect();
    fit_rate(&eps, &v, model)
}

/// Extrapolated energy coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergySlopes {
    /// `lim (F_eps - F_0) / (eps |log eps|)`.
    pub f1: f64,
    /// Slope in `1/|log eps|` of the first-order quotients.
    pub f1_delta: f64,
    /// `lim (F_eps - F_0 - eps |log eps| F1_used) / eps` with `F1_used = -sum c_i^2 / 8`.
    pub f2: f64,
    pub f2_slope: f64,
    pub f1_hat: Vec<f64>,
    pub f2_hat: Vec<f64>,
}

/// Extracts `F_1` and `F_2` from a sweep, extrapolating linearly in `1/|log eps|`.
pub fn energy_slopes(records: &[SweepRecord], f0: f64, c: &[f64]) -> Result<EnergySlopes> {
    if records.len() < 4 {
        return Err(Error::InvalidInput(format!(
            "energy slopes need at least 4 records, got {}",
            records.len()
        )));
    }
    let f1_used = -0.125 * c.iter().map(|c| c * c).sum::<f64>();
    let mut f1_hat = Vec::new();
    let mut f2_hat = Vec::new();
    let mut rows = Vec::new();
    for r in records {
        let l = r.eps.ln().abs();
        f1_hat.push((r.f_eps - f0) / (r.eps * l));
        f2_hat.push((r.f_eps - f0 - r.eps * l * f1_used) / r.eps);
        rows.push(vec![1.0, 1.0 / l]);
    }
    let (b1, _) = lstsq(&rows, &f1_hat)?;
    let (b2, _) = lstsq(&rows, &f2_hat)?;
    Ok(EnergySlopes {
        f1: b1[0],
        f1_delta: b1[1],
        f2: b2[0],
        f2_slope: b2[1],
        f1_hat,
        f2_hat,
    })
}

/// Remainders of the full expansion on a domain without Neumann part.
#[derive(Debug, Clone, PartialEq)]
pub struct NonmixedTable {
    pub eps: Vec<f64>,
    /// `remainders[j-1][k] = ||u_eps - sum_{i<j} eps^i u_i||_{H^1}` at `eps[k]`.
    pub remainders: Vec<Vec<f64>>,
    /// `||u_eps - u_0 - eps u_1||_{L2(boundary)}`.
    pub boundary: Vec<f64>,
    /// Fitted exponents per depth (`None` when the remainder vanishes to round-off).
    pub exponents: Vec<Option<f64>>,
    pub boundary_exponent: Option<f64>,
}

impl NonmixedTable {
    /// Every fitted depth-`j` exponent is at least `j - 0.1`.
    pub fn passes(&self) -> bool {
        self.exponents
            .iter()
            .enumerate()
            .all(|(j, e)| e.is_none_or(|e| e >= j as f64 + 1.0 - 0.1))
    }
}

fn rate_or_none(eps: &[f64], v: &[f64], floor: f64) -> Result<Option<f64>> {
    if v.iter().any(|&x| x <= floor) {
        return Ok(None);
    }
    Ok(fit_rate(eps, v, RateModel::Pow)?.alpha)
}

/// Compares Robin solutions with truncations of the recursive chain.
pub fn verify_nonmixed(
    space: &Arc<FeSpace>,
    f: &(dyn Fn(Point) -> f64 + Sync),
    g: &(dyn Fn(Point) -> f64 + Sync),
    eps: &[f64],
    depth: usize,
) -> Result<NonmixedTable> {
    if depth == 0 || depth > 4 {
        return Err(Error::InvalidInput(format!(
            "depth must lie in 1..=4, got {depth}"
        )));
    }
    check_eps(eps)?;
    let chain = recursive_chain(space, f, g, depth)?;
    let sols: Vec<FeFunction> = eps
        .par_iter()
        .map(|&e| solve_robin(space, f, g, e))
        .collect::<Result<_>>()?;
    let h1 = |u: &FeFunction| (u.norm_sq(NormKind::L2Domain) + u.norm_sq(NormKind::H1Semi)).sqrt();
    let mut remainders = vec![Vec::new(); depth];
    let mut boundary = Vec::new();
    for (&e, u) in eps.iter().zip(&sols) {
        let mut r = u.clone();
        for (j, rem) in remainders.iter_mut().enumerate() {
            r = r.axpy(-e.powi(j as i32), &chain[j])?;
            rem.push(h1(&r));
        }
        let b = u.axpy(-1.0, &chain[0])?.axpy(-e, &chain[1])?;
        boundary.push(b.norm(NormKind::L2Boundary(BoundaryTag::RobinDirichlet)));
    }
    let scale = sols.iter().map(h1).fold(0.0, f64::max).max(1.0);
    let floor = 1e-11 * scale;
    let exponents = remainders
        .iter()
        .map(|v| rate_or_none(eps, v, floor))
        .collect::<Result<_>>()?;
    let boundary_exponent = rate_or_none(eps, &boundary, floor)?;
    Ok(NonmixedTable {
        eps: eps.to_vec(),
        remainders,
        boundary,
        exponents,
        boundary_exponent,
    })
}

/// Singular analysis of a discrete limit solution.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub frames: Vec<JunctionFrame>,
    pub extractions: Vec<Extraction>,
    pub flux: RegularFlux,
    pub constants: ExpansionConstants,
    /// Mixed solution with Dirichlet data `-d_nu u_reg` on the Robin part.
    pub u1: FeFunction,
}

/// Extracts coefficients at every flat junction, the regular flux, the constants
/// `B_i`, `C_phi` and the flux norm, and the first corrector `u_1`.
pub fn analyze(u0: &FeFunction, f: &dyn Fn(Point) -> f64, cutoff: &Cutoff) -> Result<Analysis> {
    let frames = flat_junctions(&u0.space);
    let radii = default_radii(cutoff);
    let extractions: Vec<Extraction> = frames
        .iter()
        .map(|fr| extract_coefficient(u0, fr, cutoff, &radii))
        .collect::<Result<_>>()?;
    let c: Vec<f64> = extractions.iter().map(|e| e.c).collect();
    let flux = regular_flux(u0, &c, &frames, cutoff, f)?;
    let constants = constants(&c, &frames, cutoff, &flux.trace);
    let data: Vec<f64> = flux.trace.coeffs.iter().map(|v| -v).collect();
    let u1 = solve_u1(&u0.space, DirichletValues::Nodal(&data))?;
    Ok(Analysis {
        frames,
        extractions,
        flux,
        constants,
        u1,
    })
}

/// Per-epsilon corrector norms and their spread.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectorTable {
    pub eps: Vec<f64>,
    pub norms: Vec<f64>,
    /// `max / min` of `norms` (1 when all vanish).
    pub ratio: f64,
}

impl CorrectorTable {
    pub fn bounded(&self) -> bool {
        self.ratio <= 10.0
    }
}

/// `|| (u_eps - u_0)/eps - u_1 - sum c_i psi_i ||` on the Robin boundary outside the
/// `eps`-balls around the junctions, for every kept solution of `sweep`.
pub fn corrector_diagnostic(
    sweep: &Sweep,
    u1: &FeFunction,
    k: &ExpansionConstants,
    frames: &[JunctionFrame],
) -> Result<CorrectorTable> {
    if sweep.solutions.len() != sweep.records.len() || sweep.solutions.is_empty() {
        return Err(Error::Missing(
            "sweep solutions (run the sweep with keep_solutions)".into(),
        ));
    }
    if frames.len() != k.c.len() {
        return Err(Error::InvalidInput(
            "one frame per coefficient is required".into(),
        ));
    }
    let mut eps = Vec::new();
    let mut norms = Vec::new();
    for (r, u) in sweep.records.iter().zip(&sweep.solutions) {
        let q = u
            .axpy(-1.0, &sweep.u0)?
            .scaled(1.0 / r.eps)
            .axpy(-1.0, u1)?;
        let sq = q.boundary_integral(BoundaryTag::RobinDirichlet, |x, v| {
            let mut s = v;
            for (c, fr) in k.c.iter().zip(frames) {
                let d = crate::dist(x, fr.center);
                if d < r.eps {
                    return 0.0;
                }
                s -= c * k.psi(d);
            }
            s * s
        });
        eps.push(r.eps);
        norms.push(sq.sqrt());
    }
    let max = norms.iter().cloned().fold(0.0, f64::max);
    let min = norms.iter().cloned().fold(f64::INFINITY, f64::min);
    let ratio = if max == 0.0 { 1.0 } else { max / min };
    Ok(CorrectorTable { eps, norms, ratio })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_law_round_trip() {
        let eps = dyadic_eps(3, 10);
        let v: Vec<f64> = eps.iter().map(|e| 3.0 * e.sqrt()).collect();
        let fit = fit_rate(&eps, &v, RateModel::Pow).unwrap();
        assert!((fit.alpha.unwrap() - 0.5).abs() < 1e-10 && (fit.c - 3.0).abs() < 1e-10);
        assert!((fit.determination - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_data_has_zero_exponent() {
        let eps = dyadic_eps(3, 8);
        let fit = fit_rate(&eps, &[2.0; 6], RateModel::Pow).unwrap();
        assert!(fit.alpha.unwrap().abs() < 1e-12);
        assert!(fit_rate(&eps[..3], &[1.0; 3], RateModel::Pow).is_err());
        assert!(fit_rate(&eps, &[1.0, 1.0, 0.0, 1.0, 1.0, 1.0], RateModel::Pow).is_err());
    }

    #[test]
    fn eps_list_checks() {
        assert!(check_eps(&[0.1, 0.05]).is_ok());
        assert!(check_eps(&[0.05, 0.1]).is_err());
        assert!(check_eps(&[0.2, 0.1]).is_err());
    }
}
