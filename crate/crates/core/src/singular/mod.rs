//! Singular functions at Dirichlet-Neumann junctions and the constants built from them.
//!
//! Near a flat junction the limit solution splits as
//! `u_0 = u_reg + sum_i c_i S_i` with `S_i = phi(r_i) r_i^{1/2} sin(theta_i / 2)`.
//! On the Robin ray `theta = 0` the outward normal points along `-e_theta`, so
//! `d_nu = -r^{-1} d_theta` there and `d_nu S_i = -phi / (2 sqrt r)`.

mod hardy;

pub use hardy::{hardy_check, hardy_half_ball, log_weight_integral, HalfBallHardy, HardyReport};

use crate::fem::{
    assemble, consistent_flux_from_residual, load_boundary_normal, load_domain, BoundaryTrace,
    FeFunction, FeSpace, Form,
};
use crate::lsq::lstsq;
use crate::mesh::{BoundaryTag, JunctionFrame};
use crate::problems::{solve_mixed_load, DirichletValues};
use crate::quad::{adaptive, inv_sqrt_weighted, GaussLegendre};
use crate::{Error, Point, Result};
use std::f64::consts::PI;
use std::sync::Arc;

/// Quintic smoothstep cutoff: one on `[0, rho/2]`, zero on `[rho, inf)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cutoff {
    pub rho: f64,
}

impl Default for Cutoff {
    fn default() -> Self {
        Self { rho: 0.5 }
    }
}

impl Cutoff {
    pub fn new(rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "cutoff radius must be positive, got {rho}"
            )));
        }
        Ok(Self { rho })
    }

    fn t(&self, r: f64) -> f64 {
        (2.0 * r / self.rho - 1.0).clamp(0.0, 1.0)
    }

    pub fn phi(&self, r: f64) -> f64 {
        let t = self.t(r);
        1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
    }

    pub fn dphi(&self, r: f64) -> f64 {
        let t = self.t(r);
        -60.0 / self.rho * t * t * (1.0 - t) * (1.0 - t)
    }

    pub fn d2phi(&self, r: f64) -> f64 {
        if r <= 0.5 * self.rho || r >= self.rho {
            return 0.0;
        }
        let t = self.t(r);
        -240.0 / (self.rho * self.rho) * t * (1.0 - t) * (1.0 - 2.0 * t)
    }

    /// `psi(r) = phi(r) r^{-1/2} / 2`.
    pub fn psi(&self, r: f64) -> f64 {
        0.5 * self.phi(r) / r.sqrt()
    }
}

/// Value, gradient and Laplacian of a cutoff singular function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularValue {
    pub value: f64,
    /// `None` at the junction itself, where the gradient is unbounded.
    pub grad: Option<[f64; 2]>,
    pub laplacian: f64,
}

/// Evaluates `S = phi(r) r^{1/2} sin(theta/2)` in the frame of a junction.
pub fn singular_eval(frame: &JunctionFrame, cutoff: &Cutoff, p: Point) -> SingularValue {
    let (r, theta) = frame.polar(p);
    if r == 0.0 {
        return SingularValue {
            value: 0.0,
            grad: None,
            laplacian: 0.0,
        };
    }
    if r >= cutoff.rho {
        return SingularValue {
            value: 0.0,
            grad: Some([0.0, 0.0]),
            laplacian: 0.0,
        };
    }
    let (s, c) = (0.5 * theta).sin_cos();
    let (phi, dphi, d2phi) = (cutoff.phi(r), cutoff.dphi(r), cutoff.d2phi(r));
    let sr = r.sqrt();
    let dr = (dphi * sr + 0.5 * phi / sr) * s;
    let dt = 0.5 * phi / sr * c;
    let (er, et) = frame.basis(theta);
    SingularValue {
        value: phi * sr * s,
        grad: Some([dr * er[0] + dt * et[0], dr * er[1] + dt * et[1]]),
        laplacian: s * (sr * (d2phi + dphi / r) + dphi / sr),
    }
}

/// Nodal interpolant of the singular function of `frame`.
pub fn singular_interpolant(
    space: &Arc<FeSpace>,
    frame: &JunctionFrame,
    cutoff: &Cutoff,
) -> FeFunction {
    FeFunction::interpolate(space.clone(), |p| singular_eval(frame, cutoff, p).value)
}

/// Default extraction radii `rho / 2^j`, `j = 2..=6`.
pub fn default_radii(cutoff: &Cutoff) -> Vec<f64> {
    (2..=6).map(|j| cutoff.rho / f64::powi(2.0, j)).collect()
}

/// Samples per semicircle in the extraction.
pub const EXTRACTION_SAMPLES: usize = 256;

/// Result of fitting `c_hat(r) = c + a r^{1/2} + b r`.
#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub c: f64,
    pub a: f64,
    pub b: f64,
    pub radii: Vec<f64>,
    pub c_hat: Vec<f64>,
    pub residual: f64,
}

/// Estimates the singular coefficient at a flat junction by projecting
/// `u - u(junction)` onto `sin(theta/2)` on semicircles and extrapolating to `r = 0`.
pub fn extract_coefficient(
    u: &FeFunction,
    frame: &JunctionFrame,
    cutoff: &Cutoff,
    radii: &[f64],
) -> Result<Extraction> {
    if radii.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "extraction needs at least 3 radii, got {}",
            radii.len()
        )));
    }
    if let Some(r) = radii.iter().find(|&&r| !(r > 0.0 && r < 0.5 * cutoff.rho)) {
        return Err(Error::InvalidInput(format!(
            "extraction radius {r} outside (0, rho/2)"
        )));
    }
    let u_center = u.eval(frame.center)?;
    let n = EXTRACTION_SAMPLES;
    let mut c_hat = Vec::with_capacity(radii.len());
    for &r in radii {
        let samples = u.semicircle_trace(frame, r, n)?;
        let proj: f64 = samples
            .iter()
            .map(|(t, v)| (v - u_center) * (0.5 * t).sin())
            .sum::<f64>()
            * PI
            / n as f64;
        c_hat.push(2.0 / PI * proj / r.sqrt());
    }
    let rows: Vec<Vec<f64>> = radii.iter().map(|&r| vec![1.0, r.sqrt(), r]).collect();
    let (beta, rss) = lstsq(&rows, &c_hat)?;
    Ok(Extraction {
        c: beta[0],
        a: beta[1],
        b: beta[2],
        radii: radii.to_vec(),
        c_hat,
        residual: rss.sqrt(),
    })
}

/// Flux of the regular part on the Robin boundary.
#[derive(Debug, Clone)]
pub struct RegularFlux {
    pub trace: BoundaryTrace,
    /// `L2` norm of the flux on the Robin boundary within `rho/2` of each junction.
    pub near_junction_norm: Vec<f64>,
}

/// Normal derivative of `u_reg = u0 - sum c_i S_i` on the Robin boundary.
///
/// `u_reg` is recomputed as the Galerkin solution of its own mixed problem: source
/// `f - sum c_i Delta S_i`, Neumann data `-sum c_i d_nu S_i`, and Dirichlet values
/// `u0 - sum c_i S_i` on the Robin closure. Its consistent flux is then free of the
/// `r^{-1/2}` singularity up to the error in `c`.
pub fn regular_flux(
    u0: &FeFunction,
    c: &[f64],
    frames: &[JunctionFrame],
    cutoff: &Cutoff,
    f: &dyn Fn(Point) -> f64,
) -> Result<RegularFlux> {
    if c.len() != frames.len() {
        return Err(Error::InvalidInput(
            "one coefficient per junction frame is required".into(),
        ));
    }
    let space = &u0.space;
    let sum_s = |p: Point| {
        c.iter()
            .zip(frames)
            .map(|(ci, fr)| ci * singular_eval(fr, cutoff, p).value)
            .sum::<f64>()
    };
    let source = |p: Point| {
        f(p) - c
            .iter()
            .zip(frames)
            .map(|(ci, fr)| ci * singular_eval(fr, cutoff, p).laplacian)
            .sum::<f64>()
    };
    let neumann = |p: Point| {
        let mut g = [0.0; 2];
        for (ci, fr) in c.iter().zip(frames) {
            if let Some(d) = singular_eval(fr, cutoff, p).grad {
                g[0] -= ci * d[0];
                g[1] -= ci * d[1];
            }
        }
        g
    };
    let bf = load_domain(space, &source);
    let bn = load_boundary_normal(space, BoundaryTag::Neumann, &neumann);
    // Weak form: int grad w . grad v = -int source v + int_{Gamma_N} g_N v.
    let load: Vec<f64> = bf.iter().zip(&bn).map(|(a, b)| -a + b).collect();
    let values: Vec<f64> = u0
        .coeffs
        .iter()
        .zip(space.nodes())
        .map(|(u, &p)| u - sum_s(p))
        .collect();
    let w = solve_mixed_load(space, &load, DirichletValues::Nodal(&values))?;
    let mut residual = assemble(space, Form::Stiffness).matvec(&w.coeffs);
    for (r, l) in residual.iter_mut().zip(&load) {
        *r -= l;
    }
    let trace = consistent_flux_from_residual(space, &residual, BoundaryTag::RobinDirichlet)?;
    let fun = trace.as_function();
    let near_junction_norm = frames
        .iter()
        .map(|fr| {
            fun.boundary_integral(BoundaryTag::RobinDirichlet, |x, v| {
                if crate::dist(x, fr.center) < 0.5 * cutoff.rho {
                    v * v
                } else {
                    0.0
                }
            })
            .sqrt()
        })
        .collect();
    Ok(RegularFlux {
        trace,
        near_junction_norm,
    })
}

/// Constants entering the second-order energy coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionConstants {
    pub c: Vec<f64>,
    pub b: Vec<f64>,
    /// Half-plane constants, once computed.
    pub a: Vec<Option<f64>>,
    pub c_phi: f64,
    pub flux_norm_sq: f64,
    pub cutoff: Cutoff,
}

impl ExpansionConstants {
    /// `psi_i(r) = phi(r) r^{-1/2} / 2` (identical for every junction).
    pub fn psi(&self, r: f64) -> f64 {
        self.cutoff.psi(r)
    }

    /// Sets `A_i = c_i^2 a_unit` for every junction.
    pub fn with_unit_a(mut self, a_unit: f64) -> Self {
        self.a = self.c.iter().map(|c| Some(c * c * a_unit)).collect();
        self
    }
}

const RAY_RULE_POINTS: usize = 8;

/// `C_phi = (1/8) int_{rho/2}^1 (1 - phi^2) / x dx`.
pub fn c_phi(cutoff: &Cutoff) -> f64 {
    let lo = 0.5 * cutoff.rho;
    if lo >= 1.0 {
        return 0.0;
    }
    let hi = cutoff.rho.min(1.0);
    let blend = adaptive(lo, hi, 1e-14, &|x| (1.0 - cutoff.phi(x).powi(2)) / x);
    0.125 * (blend + (1.0 / cutoff.rho).ln().max(0.0))
}

/// `B = (1/2) int_0^rho phi(r) r^{-1/2} F(r) dr` for a flux profile `F` along the ray,
/// by composite Gauss in `t = sqrt(r)`.
pub fn b_from_profile(cutoff: &Cutoff, profile: &dyn Fn(f64) -> f64) -> f64 {
    let rule = GaussLegendre::new(RAY_RULE_POINTS);
    let panels = 64;
    let t1 = cutoff.rho.sqrt();
    (0..panels)
        .map(|k| {
            let (a, b) = (
                t1 * k as f64 / panels as f64,
                t1 * (k + 1) as f64 / panels as f64,
            );
            inv_sqrt_weighted(a * a, b * b, &rule, |r| 0.5 * cutoff.phi(r) * profile(r))
        })
        .sum()
}

/// Assembles `B_i`, `C_phi` and the regular flux norm from a computed regular flux.
pub fn constants(
    c: &[f64],
    frames: &[JunctionFrame],
    cutoff: &Cutoff,
    flux: &BoundaryTrace,
) -> ExpansionConstants {
    let rule = GaussLegendre::new(RAY_RULE_POINTS);
    let b = frames
        .iter()
        .map(|fr| {
            flux.space.ray_integral_inv_sqrt(
                &flux.coeffs,
                fr,
                cutoff.rho,
                BoundaryTag::RobinDirichlet,
                &rule,
                |r| 0.5 * cutoff.phi(r),
            )
        })
        .collect();
    ExpansionConstants {
        c: c.to_vec(),
        b,
        a: vec![None; c.len()],
        c_phi: c_phi(cutoff),
        flux_norm_sq: flux.l2_norm_sq(),
        cutoff: *cutoff,
    }
}

/// `F_2 = sum_i (A_i/2 + B_i c_i + C_phi c_i^2) - (1/2) int_{Gamma_D} (d_nu u_reg)^2`.
pub fn f2_formula(k: &ExpansionConstants) -> Result<f64> {
    let mut total = -0.5 * k.flux_norm_sq;
    for (i, c) in k.c.iter().enumerate() {
        let a =
            k.a.get(i)
                .copied()
                .flatten()
                .ok_or_else(|| Error::Missing(format!("A for junction {i}")))?;
        total += 0.5 * a + k.b[i] * c + k.c_phi * c * c;
    }
    Ok(total)
}

/// Both sides of the weak identity
/// `int (grad u0 . grad psi + f psi) = int_{Gamma_D} d_nu u_reg psi - sum_i (c_i/2) int_0^rho phi r^{-1/2} psi(r, 0) dr`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakIdentity {
    pub lhs: f64,
    pub flux_term: f64,
    pub singular_term: f64,
    /// `|lhs - (flux_term - singular_term)|`.
    pub residual: f64,
    /// Residual over the largest magnitude among the three terms (zero if all vanish).
    pub relative: f64,
}

pub fn verify_weak_identity(
    u0: &FeFunction,
    c: &[f64],
    frames: &[JunctionFrame],
    cutoff: &Cutoff,
    f: &dyn Fn(Point) -> f64,
    flux: &BoundaryTrace,
    psi: &FeFunction,
) -> Result<WeakIdentity> {
    if !Arc::ptr_eq(&u0.space, &psi.space) || !Arc::ptr_eq(&u0.space, &flux.space) {
        return Err(Error::InvalidInput(
            "weak identity needs all functions on one space".into(),
        ));
    }
    let space = &u0.space;
    let lhs = {
        let mut total = 0.0;
        space.for_each_qp(&crate::quad::TRI7, |_, x, w, v, g, dofs| {
            let (mut gu, mut gp, mut p) = ([0.0; 2], [0.0; 2], 0.0);
            for (a, &d) in dofs.iter().enumerate() {
                gu[0] += u0.coeffs[d] * g[a][0];
                gu[1] += u0.coeffs[d] * g[a][1];
                gp[0] += psi.coeffs[d] * g[a][0];
                gp[1] += psi.coeffs[d] * g[a][1];
                p += psi.coeffs[d] * v[a];
            }
            total += w * (gu[0] * gp[0] + gu[1] * gp[1] + f(x) * p);
        });
        total
    };
    let flux_term = flux.pair_with(psi);
    let rule = GaussLegendre::new(RAY_RULE_POINTS);
    let singular_term: f64 = c
        .iter()
        .zip(frames)
        .map(|(ci, fr)| {
            ci * space.ray_integral_inv_sqrt(
                &psi.coeffs,
                fr,
                cutoff.rho,
                BoundaryTag::RobinDirichlet,
                &rule,
                |r| 0.5 * cutoff.phi(r),
            )
        })
        .sum();
    let residual = (lhs - (flux_term - singular_term)).abs();
    let scale = lhs.abs().max(flux_term.abs()).max(singular_term.abs());
    Ok(WeakIdentity {
        lhs,
        flux_term,
        singular_term,
        residual,
        relative: if scale > 0.0 { residual / scale } else { 0.0 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cutoff_shape() {
        let k = Cutoff::default();
        assert_eq!(k.phi(0.1), 1.0);
        assert_eq!(k.phi(0.25), 1.0);
        assert_eq!(k.phi(0.5), 0.0);
        assert_eq!(k.phi(0.7), 0.0);
        assert!((k.phi(0.375) - 0.5).abs() < 1e-15);
        let max_d = (0..=1000)
            .map(|i| k.dphi(0.25 + 0.25 * i as f64 / 1000.0).abs())
            .fold(0.0, f64::max);
        assert!(max_d <= 4.0 / k.rho);
        // Finite-difference check of the derivatives.
        for &r in &[0.26, 0.3, 0.4, 0.49] {
            let h = 1e-6;
            assert!(((k.phi(r + h) - k.phi(r - h)) / (2.0 * h) - k.dphi(r)).abs() < 1e-6);
            assert!(((k.dphi(r + h) - k.dphi(r - h)) / (2.0 * h) - k.d2phi(r)).abs() < 1e-5);
        }
    }

    #[test]
    fn singular_function_examples() {
        let k = Cutoff::default();
        let fr = JunctionFrame::new([0.0, 0.0], 0.0, 1.0);
        assert_eq!(singular_eval(&fr, &k, [0.3, 0.0]).value, 0.0);
        let v = singular_eval(&fr, &k, fr.point(k.rho / 4.0, PI));
        assert!((v.value - (k.rho / 4.0).sqrt()).abs() < 1e-15);
        let v = singular_eval(&fr, &k, [0.0, k.rho]);
        assert_eq!(v.value, 0.0);
        assert_eq!(v.grad, Some([0.0, 0.0]));
        assert!(singular_eval(&fr, &k, [0.0, 0.0]).grad.is_none());
    }

    #[test]
    fn gradient_and_laplacian_match_finite_differences() {
        let k = Cutoff::default();
        for fr in [
            JunctionFrame::new([0.0, 0.0], 0.0, 1.0),
            JunctionFrame::new([0.75, 0.0], PI, -1.0),
        ] {
            for &(r, t) in &[(0.1, 0.7), (0.3, 2.0), (0.45, 1.3)] {
                let p = fr.point(r, t);
                let s = |q: Point| singular_eval(&fr, &k, q).value;
                let h = 1e-5;
                let gx = (s([p[0] + h, p[1]]) - s([p[0] - h, p[1]])) / (2.0 * h);
                let gy = (s([p[0], p[1] + h]) - s([p[0], p[1] - h])) / (2.0 * h);
                let lap = (s([p[0] + h, p[1]])
                    + s([p[0] - h, p[1]])
                    + s([p[0], p[1] + h])
                    + s([p[0], p[1] - h])
                    - 4.0 * s(p))
                    / (h * h);
                let v = singular_eval(&fr, &k, p);
                let g = v.grad.unwrap();
                assert!(
                    (g[0] - gx).abs() < 1e-8 && (g[1] - gy).abs() < 1e-8,
                    "{fr:?} {r} {t}"
                );
                assert!(
                    (v.laplacian - lap).abs() < 1e-3,
                    "{} vs {}",
                    v.laplacian,
                    lap
                );
            }
        }
    }

    #[test]
    fn c_phi_bounds() {
        let k = Cutoff::default();
        let c = c_phi(&k);
        assert!(c > 0.125 * 2f64.ln() && c < 0.125 * 4f64.ln());
        assert_eq!(c_phi(&Cutoff { rho: 2.0 }), 0.0);
    }

    #[test]
    fn f2_requires_a() {
        let k = ExpansionConstants {
            c: vec![1.0],
            b: vec![0.0],
            a: vec![None],
            c_phi: 0.1,
            flux_norm_sq: 0.0,
            cutoff: Cutoff::default(),
        };
        assert!(matches!(f2_formula(&k), Err(Error::Missing(_))));
        let k = ExpansionConstants {
            c: vec![0.0],
            a: vec![None],
            ..k
        };
        // A is still required, even if its weight vanishes.
        assert!(f2_formula(&k).is_err());
        let k = ExpansionConstants {
            a: vec![Some(0.0)],
            flux_norm_sq: 0.5,
            ..k
        };
        assert_eq!(f2_formula(&k).unwrap(), -0.25);
    }
}
