//! The auxiliary half-plane problem behind the constant `A`:
//!
//! ```text
//!   J(w) = int_{R^2_+} |grad w|^2 + int_0^1 (w^2 - c x^{-1/2} w) dx
//!          + int_1^inf (w - (c/2) x^{-1/2})^2 dx,        A = inf J.
//! ```
//!
//! `J` is minimised over the upper half-disk of radius `R` with a free (natural)
//! condition on the arc; `A` is then extrapolated from several radii.

use crate::fem::{assemble, edge_basis, FeFunction, FeSpace, Form, NormKind};
use crate::linsolve::{cg_solve, SolveOptions};
use crate::lsq::lstsq;
use crate::mesh::{build_log_polar_half_disk, BoundaryTag};
use crate::quad::{inv_sqrt_weighted, GaussLegendre};
use crate::{Error, Point, Result};
use rayon::prelude::*;
use std::f64::consts::PI;
use std::sync::Arc;

/// Default truncation radii for [`estimate_a`].
pub const DEFAULT_RADII: [f64; 3] = [16.0, 32.0, 64.0];

/// Outcome of one truncated minimisation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuxResult {
    pub c: f64,
    pub radius: f64,
    pub h: f64,
    /// Truncated functional at the discrete minimiser.
    pub j: f64,
    /// Estimate of the part of `J` beyond the arc `r = R`, from the far-field decay.
    pub tail: f64,
}

/// Extrapolated `A` from a sequence of radii.
#[derive(Debug, Clone, PartialEq)]
pub struct AEstimate {
    pub c: f64,
    pub a: f64,
    /// Fitted decay exponent of `J_R - A`; `None` when the sequence is flat or not monotone.
    pub q: Option<f64>,
    pub beta: f64,
    /// Residual sum of squares of the fit.
    pub residual: f64,
    /// Whether `J_R` is strictly monotone in `R`.
    pub monotone: bool,
    /// Tail estimate at the largest radius.
    pub tail_bound: f64,
    pub runs: Vec<AuxResult>,
}

/// P1 space on the log-polar half-disk of radius `radius`.
pub fn aux_space(radius: f64, h: f64) -> Result<Arc<FeSpace>> {
    FeSpace::new(Arc::new(build_log_polar_half_disk(radius, h)?), 1)
}

/// `l_i = int_0^R x^{-1/2} phi_i(x, 0) dx`.
pub fn trace_load(space: &FeSpace) -> Vec<f64> {
    let rule = GaussLegendre::new(4);
    let mesh = space.mesh();
    let mut l = vec![0.0; space.ndof()];
    for (k, e) in mesh.boundary_edges.iter().enumerate() {
        if e.tag != BoundaryTag::RobinDirichlet {
            continue;
        }
        let (xa, xb) = (mesh.vertices[e.v[0]][0], mesh.vertices[e.v[1]][0]);
        let dofs = space.boundary_edge_dofs(k);
        for (a, &i) in dofs.iter().enumerate() {
            l[i] += inv_sqrt_weighted(xa.min(xb), xa.max(xb), &rule, |x| {
                edge_basis(space.degree(), (x - xa) / (xb - xa))[a]
            });
        }
    }
    l
}

fn check_radius(radius: f64) -> Result<()> {
    if radius > 1.0 && radius.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "truncation radius must exceed 1, got {radius}"
        )))
    }
}

/// Truncated functional of `w` on the half-disk of radius `radius`; the part beyond the
/// arc is left out.
pub fn j_value(w: &FeFunction, c: f64, radius: f64) -> Result<f64> {
    check_radius(radius)?;
    let space = &w.space;
    let mesh = space.mesh();
    let rule = GaussLegendre::new(6);
    let mut total = w.norm_sq(NormKind::H1Semi);
    for (k, e) in mesh.boundary_edges.iter().enumerate() {
        if e.tag != BoundaryTag::RobinDirichlet {
            continue;
        }
        let (xa, xb) = (mesh.vertices[e.v[0]][0], mesh.vertices[e.v[1]][0]);
        let (x0, x1) = (xa.min(xb), xa.max(xb));
        if x0 >= radius {
            continue;
        }
        let x1 = x1.min(radius);
        let val = |x: f64| space.edge_value(&w.coeffs, k, (x - xa) / (xb - xa));
        if x1 <= 1.0 + 1e-12 {
            total += rule.integrate(x0, x1, |x| val(x).powi(2))
                - c * inv_sqrt_weighted(x0, x1, &rule, val);
        } else if x0 >= 1.0 - 1e-12 {
            total += rule.integrate(x0, x1, |x| (val(x) - 0.5 * c / x.sqrt()).powi(2));
        } else {
            return Err(Error::InvalidInput(
                "the trace mesh must have a vertex at x = 1".into(),
            ));
        }
    }
    Ok(total)
}

/// Far-field estimate of the part of `J` outside the half-disk of radius `radius`,
/// assuming `w = a(theta) r^{-1/2}` beyond the arc and a trace defect decaying like `1/x`.
pub fn tail_estimate(w: &FeFunction, c: f64, radius: f64) -> f64 {
    let n = 512;
    let r = radius * (1.0 - 1e-9);
    let mut grad = 0.0;
    for j in 0..n {
        let t = PI * (j as f64 + 0.5) / n as f64;
        let (v, g) = w.eval_with_grad_nearest([r * t.cos(), r * t.sin()]);
        let dtheta = r * (-g[0] * t.sin() + g[1] * t.cos());
        // (1/R) int (a^2/4 + a'^2) with a = sqrt(R) w, a' = sqrt(R) dw/dtheta.
        grad += (0.25 * v * v + dtheta * dtheta) * PI / n as f64;
    }
    let d = w.eval_with_grad_nearest([r, 0.0]).0 - 0.5 * c / radius.sqrt();
    grad + radius * d * d
}

/// Discrete minimiser of the truncated functional and its value.
pub fn solve_aux(c: f64, radius: f64, h: f64) -> Result<(FeFunction, AuxResult)> {
    check_radius(radius)?;
    let space = aux_space(radius, h)?;
    solve_aux_on(&space, c, radius, h)
}

/// [`solve_aux`] on a given space.
pub fn solve_aux_on(
    space: &Arc<FeSpace>,
    c: f64,
    radius: f64,
    h: f64,
) -> Result<(FeFunction, AuxResult)> {
    let (a, l) = system(space)?;
    let rhs: Vec<f64> = l.iter().map(|v| 0.5 * c * v).collect();
    let n = space.ndof();
    let opts = SolveOptions {
        tol: 1e-13,
        max_iter: Some(200 * (n as f64).sqrt() as usize + 2000),
        ..SolveOptions::default()
    };
    let x = if c == 0.0 {
        vec![0.0; n]
    } else {
        cg_solve(&a, &rhs, &opts)?.x
    };
    let quad = a.quadratic_form(&x) - c * dot(&l, &x) + 0.25 * c * c * radius.ln();
    let w = FeFunction::from_coeffs(space.clone(), x)?;
    let tail = tail_estimate(&w, c, radius);
    Ok((
        w,
        AuxResult {
            c,
            radius,
            h,
            j: quad,
            tail,
        },
    ))
}

fn system(space: &FeSpace) -> Result<(crate::fem::SparseSymMatrix, Vec<f64>)> {
    let k = assemble(space, Form::Stiffness);
    let m = assemble(space, Form::BoundaryMass(BoundaryTag::RobinDirichlet));
    Ok((k.plus_scaled(1.0, &m)?, trace_load(space)))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Relative Euler-Lagrange residual `|B(w, psi) - (c/2) l(psi)| / (|B(w, psi)| + |(c/2) l(psi)|)`
/// of the minimiser `w` against the test function `psi`.
pub fn euler_lagrange_residual(w: &FeFunction, c: f64, psi: &FeFunction) -> Result<f64> {
    if !Arc::ptr_eq(&w.space, &psi.space) {
        return Err(Error::InvalidInput("w and psi must share a space".into()));
    }
    let (a, l) = system(&w.space)?;
    let aw = a.matvec(&w.coeffs);
    let lhs = dot(&aw, &psi.coeffs);
    let rhs = 0.5 * c * dot(&l, &psi.coeffs);
    let scale = lhs.abs() + rhs.abs();
    Ok(if scale == 0.0 {
        0.0
    } else {
        (lhs - rhs).abs() / scale
    })
}

/// The explicit competitor `(c/2) r^{1/2}` for `r <= 1` and `(c/2) r^{-1/2}` beyond.
pub fn explicit_competitor(c: f64) -> impl Fn(Point) -> f64 + Send + Sync + Copy {
    move |p: Point| {
        let r = p[0].hypot(p[1]);
        if r <= 1.0 {
            0.5 * c * r.sqrt()
        } else {
            0.5 * c / r.sqrt()
        }
    }
}

/// `J` of the explicit competitor on the whole half-plane: `c^2 (pi - 3) / 8`.
pub fn explicit_competitor_j(c: f64) -> f64 {
    c * c * (PI - 3.0) / 8.0
}

/// Gradient energy of the explicit competitor outside radius `radius`: `pi c^2 / (16 R)`.
pub fn explicit_competitor_tail(c: f64, radius: f64) -> f64 {
    PI * c * c / (16.0 * radius)
}

/// Solves on every radius (concurrently) and fits `J_R = A + beta R^{-q}`.
///
/// `hs` holds one mesh size per radius, or a single size used for all.
pub fn estimate_a(c: f64, radii: &[f64], hs: &[f64]) -> Result<AEstimate> {
    if radii.len() < 3 {
        return Err(Error::InvalidInput(
            "at least three truncation radii are required".into(),
        ));
    }
    if hs.len() != 1 && hs.len() != radii.len() {
        return Err(Error::InvalidInput(
            "give one mesh size, or one per radius".into(),
        ));
    }
    if radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput(
            "truncation radii must be strictly increasing".into(),
        ));
    }
    let runs: Vec<AuxResult> = radii
        .par_iter()
        .enumerate()
        .map(|(i, &r)| solve_aux(c, r, hs[i.min(hs.len() - 1)]).map(|x| x.1))
        .collect::<Result<_>>()?;
    Ok(fit_a(c, runs))
}

/// Fits `J_R = A + beta R^{-q}` to completed runs (sorted by radius).
pub fn fit_a(c: f64, runs: Vec<AuxResult>) -> AEstimate {
    let js: Vec<f64> = runs.iter().map(|r| r.j).collect();
    let rs: Vec<f64> = runs.iter().map(|r| r.radius).collect();
    let tail_bound = runs.last().map_or(0.0, |r| r.tail);
    let diffs: Vec<f64> = js.windows(2).map(|w| w[1] - w[0]).collect();
    let monotone = diffs.iter().all(|d| *d > 0.0) || diffs.iter().all(|d| *d < 0.0);
    let last = *js.last().unwrap_or(&0.0);
    let flat = AEstimate {
        c,
        a: last,
        q: None,
        beta: 0.0,
        residual: 0.0,
        monotone,
        tail_bound,
        runs: runs.clone(),
    };
    if !monotone {
        return flat;
    }
    // |d_k| ~ R_k^{-q} when consecutive radii have a fixed ratio.
    let rows: Vec<Vec<f64>> = rs[..diffs.len()]
        .iter()
        .map(|r| vec![1.0, r.ln()])
        .collect();
    let y: Vec<f64> = diffs.iter().map(|d| d.abs().ln()).collect();
    let q = match lstsq(&rows, &y) {
        Ok((beta, _)) if rows.len() > 2 => -beta[1],
        _ => -(y[1] - y[0]) / (rs[1].ln() - rs[0].ln()),
    };
    if !(q.is_finite() && q > 0.0) {
        return flat;
    }
    let rows: Vec<Vec<f64>> = rs.iter().map(|r| vec![1.0, r.powf(-q)]).collect();
    match lstsq(&rows, &js) {
        Ok((beta, rss)) => AEstimate {
            c,
            a: beta[0],
            q: Some(q),
            beta: beta[1],
            residual: rss,
            monotone,
            tail_bound,
            runs,
        },
        Err(_) => flat,
    }
}

/// CSV with columns `c,R,h,J_R,A_extrapolated,fit_q,fit_residual`.
pub fn to_csv(estimates: &[AEstimate]) -> String {
    let mut out = String::from("c,R,h,J_R,A_extrapolated,fit_q,fit_residual\n");
    for e in estimates {
        for r in &e.runs {
            out.push_str(&format!(
                "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{},{:.17e}\n",
                r.c,
                r.radius,
                r.h,
                r.j,
                e.a,
                e.q.map_or("nan".to_string(), |q| format!("{q:.17e}")),
                e.residual
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::validate;

    #[test]
    fn log_polar_mesh_is_valid() {
        let mesh = build_log_polar_half_disk(16.0, 0.2).unwrap();
        let report = validate(&mesh).unwrap();
        assert!(report.min_angle_deg >= 20.0);
        assert!((mesh.area() - 128.0 * PI).abs() / (128.0 * PI) < 1e-2);
        assert!((mesh.boundary_length(BoundaryTag::RobinDirichlet) - 16.0).abs() < 1e-12);
    }

    #[test]
    fn zero_function_gives_log_term() {
        let space = aux_space(8.0, 0.3).unwrap();
        let w = FeFunction::zeros(space);
        let j = j_value(&w, 1.0, 8.0).unwrap();
        assert!((j - 0.25 * 8f64.ln()).abs() < 1e-9, "{j}");
        assert!(j_value(&w, 1.0, 1.0).is_err());
    }

    #[test]
    fn trace_load_integrates_inverse_sqrt() {
        let space = aux_space(8.0, 0.3).unwrap();
        let total: f64 = trace_load(&space).iter().sum();
        assert!((total - 2.0 * 8f64.sqrt()).abs() < 1e-12);
    }
}
