//! Hardy-type inequalities on balls and half-balls centred at the origin, evaluated by
//! polar quadrature of finite element functions.
//!
//! The logarithmic weight `|x|^{-2} (1 + log R - log|x|)^{-2}` is integrated after the
//! change of variables `r = R exp(-s)`, `s = u / (1 - u)`, which turns
//! `dr / (r (1 + s)^2)` into `du` on `(0, 1)`.

use crate::fem::FeFunction;
use crate::mesh::{BoundaryTag, JunctionFrame};
use crate::quad::{adaptive, GaussLegendre};
use std::f64::consts::PI;

const RADIAL_PANELS: usize = 48;
const ANGULAR_SAMPLES: usize = 128;

/// Both sides of the full-ball inequality
/// `||h / (|x| (1 + log R - log|x|))|| <= (sqrt 2 / R) ||h|| + 2 (1 + sqrt 2) ||x/|x| . grad h||`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HardyReport {
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs / rhs`.
    pub ratio: f64,
    pub l2_norm: f64,
    pub radial_norm: f64,
}

/// Half-ball quantities: the weighted integral against gradient and axis-trace terms,
/// and the `x^{-1/2}` trace integral against its bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfBallHardy {
    /// `int_{B_R^+} h^2 / (|x|^2 (1 + log R - log|x|)^2)`
    pub weighted: f64,
    /// `int_{B_R^+} |grad h|^2`
    pub grad_sq: f64,
    /// `int_0^R h(x, 0)^2 dx`
    pub trace_sq: f64,
    /// `weighted / (grad_sq + trace_sq / R)`
    pub kappa_bar_hat: f64,
    /// `int_0^R x^{-1/2} |h(x, 0)| dx`
    pub trace_weighted: f64,
    /// `trace_weighted / (sqrt(R grad_sq) + sqrt(trace_sq))`
    pub kappa_hat: f64,
}

struct Angles {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

fn full_circle() -> Angles {
    let n = ANGULAR_SAMPLES;
    Angles {
        nodes: (0..n)
            .map(|k| 2.0 * PI * (k as f64 + 0.5) / n as f64)
            .collect(),
        weights: vec![2.0 * PI / n as f64; n],
    }
}

fn half_circle() -> Angles {
    let rule = GaussLegendre::new(4);
    let panels = ANGULAR_SAMPLES / 4;
    let (mut nodes, mut weights) = (Vec::new(), Vec::new());
    for k in 0..panels {
        let (a, b) = (
            PI * k as f64 / panels as f64,
            PI * (k + 1) as f64 / panels as f64,
        );
        for (x, w) in rule.unit() {
            nodes.push(a + x * (b - a));
            weights.push(w * (b - a));
        }
    }
    Angles { nodes, weights }
}

fn radial_nodes(lo: f64, hi: f64) -> Vec<(f64, f64)> {
    let rule = GaussLegendre::new(4);
    let mut out = Vec::new();
    for k in 0..RADIAL_PANELS {
        let a = lo + (hi - lo) * k as f64 / RADIAL_PANELS as f64;
        let b = lo + (hi - lo) * (k + 1) as f64 / RADIAL_PANELS as f64;
        for (x, w) in rule.unit() {
            out.push((a + x * (b - a), w * (b - a)));
        }
    }
    out
}

struct PolarSums {
    weighted: f64,
    l2: f64,
    radial: f64,
    grad: f64,
}

fn polar_sums(h: &FeFunction, radius: f64, angles: &Angles) -> PolarSums {
    let frame = JunctionFrame::new([0.0, 0.0], 0.0, 1.0);
    let mut out = PolarSums {
        weighted: 0.0,
        l2: 0.0,
        radial: 0.0,
        grad: 0.0,
    };
    let radial = radial_nodes(0.0, radius);
    let logmap = radial_nodes(0.0, 1.0);
    for (&t, &wt) in angles.nodes.iter().zip(&angles.weights) {
        let (er, _) = frame.basis(t);
        for &(r, wr) in &radial {
            let (v, g) = h.eval_with_grad_nearest(frame.point(r, t));
            let dr = g[0] * er[0] + g[1] * er[1];
            out.l2 += wt * wr * r * v * v;
            out.radial += wt * wr * r * dr * dr;
            out.grad += wt * wr * r * (g[0] * g[0] + g[1] * g[1]);
        }
        for &(u, wu) in &logmap {
            let r = radius * (-u / (1.0 - u)).exp();
            let v = h.eval_with_grad_nearest(frame.point(r, t)).0;
            out.weighted += wt * wu * v * v;
        }
    }
    out
}

/// Evaluates the full-ball inequality for `h` on a mesh covering `B_R(0)`.
pub fn hardy_check(h: &FeFunction, radius: f64) -> HardyReport {
    let s = polar_sums(h, radius, &full_circle());
    let lhs = s.weighted.sqrt();
    let (l2, radial) = (s.l2.sqrt(), s.radial.sqrt());
    let rhs = 2f64.sqrt() / radius * l2 + 2.0 * (1.0 + 2f64.sqrt()) * radial;
    HardyReport {
        lhs,
        rhs,
        ratio: lhs / rhs,
        l2_norm: l2,
        radial_norm: radial,
    }
}

/// Evaluates the half-ball quantities for `h` on a mesh covering `B_R^+(0)`, whose
/// positive axis is Robin-tagged.
pub fn hardy_half_ball(h: &FeFunction, radius: f64) -> HalfBallHardy {
    let s = polar_sums(h, radius, &half_circle());
    let frame = JunctionFrame::new([0.0, 0.0], 0.0, 1.0);
    let rule = GaussLegendre::new(8);
    let space = &h.space;
    let mut trace_sq = 0.0;
    let mut trace_weighted = 0.0;
    for seg in space.ray_segments(&frame, radius, BoundaryTag::RobinDirichlet) {
        let [ra, rb] = seg.r;
        let (r0, r1) = (ra.min(rb), ra.max(rb).min(radius));
        let val = |r: f64| space.edge_value(&h.coeffs, seg.edge, (r - ra) / (rb - ra));
        trace_sq += rule.integrate(r0, r1, |r| val(r).powi(2));
        trace_weighted += crate::quad::inv_sqrt_weighted(r0, r1, &rule, |r| val(r).abs());
    }
    let kappa_bar_hat = s.weighted / (s.grad + trace_sq / radius);
    let kappa_hat = trace_weighted / ((radius * s.grad).sqrt() + trace_sq.sqrt());
    HalfBallHardy {
        weighted: s.weighted,
        grad_sq: s.grad,
        trace_sq,
        kappa_bar_hat,
        trace_weighted,
        kappa_hat,
    }
}

/// `int_0^R (1 + log R - log r)^2 dr`, computed numerically (equals `5 R`).
pub fn log_weight_integral(radius: f64) -> f64 {
    // r = R exp(-s): integrand (1 + s)^2 R exp(-s) on (0, inf), then s = u / (1 - u).
    let f = |u: f64| {
        if u >= 1.0 {
            return 0.0;
        }
        let s = u / (1.0 - u);
        (1.0 + s).powi(2) * radius * (-s).exp() / ((1.0 - u) * (1.0 - u))
    };
    adaptive(0.0, 1.0, 1e-14 * radius, &f)
}
