use super::{signed_area, BoundaryEdge, BoundaryTag, JunctionFrame, Mesh};
use crate::{dist, Error, Point, Result};
use std::f64::consts::PI;

/// Algebraic grading toward junctions: the local element size at distance `d` from a
/// junction is `h_max * min(1, (d / radius)^(1 - 1/beta))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradingSpec {
    pub h_max: f64,
    pub beta: f64,
    pub radius: f64,
}

impl GradingSpec {
    pub fn new(h_max: f64, beta: f64, radius: f64) -> Self {
        Self {
            h_max,
            beta,
            radius,
        }
    }

    /// Quasi-uniform sizing.
    pub fn uniform(h_max: f64) -> Self {
        Self {
            h_max,
            beta: 1.0,
            radius: 1.0,
        }
    }

    pub fn check(&self) -> Result<()> {
        if !(self.h_max > 0.0 && self.h_max.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "h_max must be positive, got {}",
                self.h_max
            )));
        }
        if !(self.beta >= 1.0 && self.beta.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "grading exponent beta must be >= 1, got {}",
                self.beta
            )));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "grading radius must be positive, got {}",
                self.radius
            )));
        }
        Ok(())
    }

    /// Target element size at distance `d` from the junction.
    pub fn size(&self, d: f64) -> f64 {
        self.h_max * (d / self.radius).powf(1.0 - 1.0 / self.beta).min(1.0)
    }

    /// Radius of the innermost ring around a junction.
    pub fn first_ring(&self) -> f64 {
        self.radius
            * (self.h_max / (self.beta * self.radius))
                .min(1.0)
                .powf(self.beta)
    }
}

/// Ratio between radial spacing and radius in the self-similar core around a junction.
const CORE_RATIO: f64 = PI / 6.0;

fn radial_step(g: &GradingSpec, r: f64) -> f64 {
    if g.beta == 1.0 {
        return g.h_max;
    }
    (CORE_RATIO * r).min(g.size(r))
}

/// Radii of the concentric rings around a junction, from the innermost ring up to and
/// including `r_end`.
pub fn ring_radii(g: &GradingSpec, r_end: f64) -> Vec<f64> {
    let mut r = g.first_ring().min(0.5 * r_end).min(g.h_max);
    let mut out = vec![r];
    loop {
        let d = radial_step(g, r);
        if r + 1.5 * d >= r_end {
            break;
        }
        r += d;
        out.push(r);
    }
    out.push(r_end);
    out
}

/// Points of graded half-rings centred at `frame.center`, covering the angular range
/// `[0, pi]` of the frame; returns the points without the centre.
fn half_ring_points(frame: &JunctionFrame, g: &GradingSpec, r_end: f64) -> Vec<Point> {
    let radii = ring_radii(g, r_end);
    let mut pts = Vec::new();
    for &r in &radii {
        let n = ((PI * r / radial_step(g, r)).round() as usize).max(2);
        for j in 0..=n {
            let p = if j == 0 {
                frame.point(r, 0.0)
            } else if j == n {
                frame.point(r, PI)
            } else {
                frame.point(r, PI * j as f64 / n as f64)
            };
            pts.push(snap_axis(p, frame.center[1]));
        }
    }
    pts
}

fn snap_axis(mut p: Point, y0: f64) -> Point {
    if (p[1] - y0).abs() < 1e-13 {
        p[1] = y0;
    }
    p
}

/// Unit disk with every boundary edge Robin-tagged and no junctions.
///
/// Vertices lie on `n = ceil(1/h_max)` equispaced concentric rings, the `k`-th carrying
/// `6k` points.
pub fn build_unit_disk(h_max: f64) -> Result<Mesh> {
    GradingSpec::uniform(h_max).check()?;
    let n = (1.0 / h_max).ceil() as usize;
    let mut pts = vec![[0.0, 0.0]];
    for k in 1..=n {
        let r = k as f64 / n as f64;
        let m = 6 * k;
        let shift = if k % 2 == 0 { 0.5 } else { 0.0 };
        for j in 0..m {
            let t = 2.0 * PI * (j as f64 + shift) / m as f64;
            pts.push([r * t.cos(), r * t.sin()]);
        }
    }
    Mesh::from_points(pts, |_| BoundaryTag::RobinDirichlet, Vec::new())
}

/// Upper unit half-disk. The segment `(-1, 0) x {0}` is Neumann, the rest of the
/// boundary is Robin. Junctions sit at the origin (flat) and at `(-1, 0)` (corner).
///
/// Rings are graded toward the origin only.
pub fn build_half_disk(grading: GradingSpec) -> Result<Mesh> {
    grading.check()?;
    let origin = JunctionFrame::new([0.0, 0.0], 0.0, 1.0);
    let corner = JunctionFrame::new([-1.0, 0.0], 0.5 * PI, -1.0);
    let mut pts = vec![[0.0, 0.0]];
    pts.extend(half_ring_points(&origin, &grading, 1.0));
    Mesh::from_points(
        pts,
        |m| {
            if m[1].abs() < 1e-12 && m[0] < 0.0 {
                BoundaryTag::Neumann
            } else {
                BoundaryTag::RobinDirichlet
            }
        },
        vec![origin, corner],
    )
}

/// Unit square with Robin part `(a, b) x {0}` and Neumann elsewhere; junctions at
/// `(a, 0)` and `(b, 0)`.
///
/// Graded half-rings around both junctions are cut into a wall-conforming hexagonal
/// lattice of spacing about `h_max`; Delaunay refinement repairs the seams.
pub fn build_unit_square_mixed(grading: GradingSpec, a: f64, b: f64) -> Result<Mesh> {
    grading.check()?;
    if !(0.0 < a && a < b && b < 1.0) {
        return Err(Error::InvalidInput(format!(
            "need 0 < a < b < 1, got a = {a}, b = {b}"
        )));
    }
    let h = grading.h_max;
    let zone = 0.8 * (0.5 * (b - a)).min(a).min(1.0 - b);
    let g = GradingSpec {
        radius: grading.radius.min(zone),
        ..grading
    };
    let left = JunctionFrame::new([a, 0.0], 0.0, 1.0);
    let right = JunctionFrame::new([b, 0.0], PI, -1.0);

    let mut pts = vec![[a, 0.0], [b, 0.0]];
    pts.extend(half_ring_points(&left, &g, zone));
    pts.extend(half_ring_points(&right, &g, zone));

    let rows = (2.0 / (3f64.sqrt() * h)).ceil() as usize;
    let cols = (1.0 / h).ceil() as usize;
    let clear = 0.6 / cols as f64;
    for j in 0..=rows {
        let y = j as f64 / rows as f64;
        let xs: Vec<f64> = if j % 2 == 0 {
            (0..=cols).map(|i| i as f64 / cols as f64).collect()
        } else {
            std::iter::once(0.0)
                .chain((0..cols).map(|i| (2 * i + 1) as f64 / (2 * cols) as f64))
                .chain(std::iter::once(1.0))
                .collect()
        };
        for x in xs {
            let p = [x, y];
            let corner = (x == 0.0 || x == 1.0) && (y == 0.0 || y == 1.0);
            if corner || (dist(p, [a, 0.0]) >= zone + clear && dist(p, [b, 0.0]) >= zone + clear) {
                pts.push(p);
            }
        }
    }

    let classify = move |m: Point| {
        if m[1].abs() < 1e-12 && m[0] > a && m[0] < b {
            BoundaryTag::RobinDirichlet
        } else {
            BoundaryTag::Neumann
        }
    };
    let (pts, triangles) = refine_convex(pts, h)?;
    Ok(Mesh::from_triangles(
        pts,
        triangles,
        classify,
        vec![left, right],
    ))
}

/// Largest refined triangle: equilateral with side `MAX_SIDE * h`.
const MAX_SIDE: f64 = 1.3;

/// Minimum angle requested from Delaunay refinement.
const REFINE_ANGLE_DEG: f64 = 21.0;

/// Delaunay refinement of a convex domain given by `fixed` points: the boundary loop is
/// kept as constraints, Steiner points are added until every angle exceeds
/// [`REFINE_ANGLE_DEG`] and every triangle is smaller than an equilateral one of side `MAX_SIDE * h`.
fn refine_convex(fixed: Vec<Point>, h: f64) -> Result<(Vec<Point>, Vec<[usize; 3]>)> {
    use spade::{
        AngleLimit, ConstrainedDelaunayTriangulation, Point2, RefinementParameters, Triangulation,
    };
    let mut cdt: ConstrainedDelaunayTriangulation<Point2<f64>> =
        ConstrainedDelaunayTriangulation::new();
    for (i, p) in fixed.iter().enumerate() {
        let v = cdt
            .insert(Point2::new(p[0], p[1]))
            .map_err(|e| Error::MeshGeneration(format!("vertex {i}: {e:?}")))?;
        if v.index() != i {
            return Err(Error::MeshGeneration(format!(
                "duplicate vertex {i} at ({}, {})",
                p[0], p[1]
            )));
        }
    }
    let hull = Mesh::from_points(fixed.clone(), |_| BoundaryTag::Neumann, Vec::new())?;
    for [u, v] in hull.boundary_loop_from_triangles() {
        let (fu, fv) = (
            spade::handles::FixedVertexHandle::from_index(u),
            spade::handles::FixedVertexHandle::from_index(v),
        );
        cdt.add_constraint(fu, fv);
    }
    let params = RefinementParameters::<f64>::new()
        .with_angle_limit(AngleLimit::from_deg(REFINE_ANGLE_DEG))
        .with_max_allowed_area(0.25 * 3f64.sqrt() * (MAX_SIDE * h).powi(2))
        .with_max_additional_vertices(50 * fixed.len() + (40.0 / (h * h)) as usize);
    if !cdt.refine(params).refinement_complete {
        return Err(Error::MeshGeneration(
            "Delaunay refinement did not complete".into(),
        ));
    }
    let pts = cdt
        .vertices()
        .map(|v| [v.position().x, v.position().y])
        .collect();
    let triangles = cdt
        .inner_faces()
        .map(|f| f.vertices().map(|v| v.fix().index()))
        .collect();
    Ok((pts, triangles))
}

/// Innermost radius of the self-similar part of [`build_log_polar_half_disk`].
pub const LOG_POLAR_CORE: f64 = 1e-6;

/// Log-polar triangulation of the upper half-disk of radius `radius`, for half-plane
/// problems with a Robin trace on `(0, radius) x {0}` and Neumann data elsewhere.
///
/// The number of angular intervals is the smallest power of two `n >= pi / h`, with
/// angles clustered mildly toward the axis. Ring radii are `2^(k/m)` with `m` chosen so the
/// radial and angular steps match, so `r = 1` and every power-of-two radius is a ring.
/// Below [`LOG_POLAR_CORE`] the angular count is halved ring by ring down to a two-triangle
/// fan at the origin. Junctions sit at the origin and at `(radius, 0)`.
pub fn build_log_polar_half_disk(radius: f64, h: f64) -> Result<Mesh> {
    if !(radius > 1.0 && radius.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "radius must exceed 1, got {radius}"
        )));
    }
    if !(h > 0.0 && h <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "h must lie in (0, 1], got {h}"
        )));
    }
    let mut n = 4usize;
    while (n as f64) < PI / h {
        n *= 2;
    }
    let per_octave = ((2f64.ln() * n as f64 / PI).round() as usize).max(1);
    let delta = 2f64.ln() / per_octave as f64;
    let angle = |t: f64| PI * (t - 0.3 * (2.0 * PI * t).sin() / (2.0 * PI));

    // Rings from the outside in: (radius, angular intervals).
    let mut rings: Vec<(f64, usize)> = Vec::new();
    let outer = (radius.ln() / delta).ceil().max(1.0) as usize;
    let delta_out = radius.ln() / outer as f64;
    for k in (1..=outer).rev() {
        rings.push(((k as f64 * delta_out).exp(), n));
    }
    let inner = (-LOG_POLAR_CORE.ln() / delta).ceil() as usize;
    for k in 0..=inner {
        rings.push(((-(k as f64) * delta).exp(), n));
    }
    let mut m = n;
    let mut step = delta;
    while m > 2 {
        m /= 2;
        step *= 2.0;
        let r = rings.last().map(|r| r.0).unwrap_or(1.0) * (-0.75 * step).exp();
        rings.push((r, m));
    }

    let mut pts = vec![[0.0, 0.0]];
    let mut start = Vec::with_capacity(rings.len());
    for &(r, m) in &rings {
        start.push(pts.len());
        for j in 0..=m {
            let t = angle(j as f64 / m as f64);
            let p = if j == 0 {
                [r, 0.0]
            } else if j == m {
                [-r, 0.0]
            } else {
                [r * t.cos(), r * t.sin()]
            };
            pts.push(p);
        }
    }
    let mut tris = Vec::new();
    let mut push = |a: usize, b: usize, c: usize, pts: &[Point]| {
        tris.push(if signed_area(pts[a], pts[b], pts[c]) > 0.0 {
            [a, b, c]
        } else {
            [a, c, b]
        });
    };
    for w in 0..rings.len() - 1 {
        let (o, i) = (start[w], start[w + 1]);
        let (no, ni) = (rings[w].1, rings[w + 1].1);
        if no == ni {
            for j in 0..ni {
                push(i + j, o + j, o + j + 1, &pts);
                push(i + j, o + j + 1, i + j + 1, &pts);
            }
        } else {
            for j in 0..ni {
                push(i + j, o + 2 * j, o + 2 * j + 1, &pts);
                push(i + j, o + 2 * j + 1, i + j + 1, &pts);
                push(i + j + 1, o + 2 * j + 1, o + 2 * j + 2, &pts);
            }
        }
    }
    let last = *start.last().expect("at least one ring");
    push(0, last, last + 1, &pts);
    push(0, last + 1, last + 2, &pts);
    tris.sort_unstable();

    let junctions = vec![
        JunctionFrame::new([0.0, 0.0], 0.0, 1.0),
        JunctionFrame::new([radius, 0.0], PI, -1.0),
    ];
    let mut mesh = Mesh {
        vertices: pts,
        triangles: tris,
        boundary_edges: Vec::new(),
        junctions,
    };
    mesh.boundary_edges = mesh
        .boundary_loop_from_triangles()
        .into_iter()
        .map(|v| {
            let m = super::midpoint(mesh.vertices[v[0]], mesh.vertices[v[1]]);
            let tag = if m[1] == 0.0 && m[0] > 0.0 {
                BoundaryTag::RobinDirichlet
            } else {
                BoundaryTag::Neumann
            };
            BoundaryEdge { v, tag }
        })
        .collect();
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ring_radii_end_exactly_and_increase() {
        let g = GradingSpec::new(0.05, 2.0, 0.5);
        let r = ring_radii(&g, 1.0);
        assert_eq!(*r.last().unwrap(), 1.0);
        assert!(r.windows(2).all(|w| w[1] > w[0]));
        assert!((r[0] - g.first_ring()).abs() < 1e-15);
    }

    #[test]
    fn first_ring_law() {
        let g = GradingSpec::new(0.02, 2.0, 0.5);
        assert!((g.first_ring() - 0.5 * (0.02f64).powi(2)).abs() < 1e-18);
        assert_eq!(GradingSpec::uniform(0.1).first_ring(), 0.1);
    }

    #[test]
    fn size_law() {
        let g = GradingSpec::new(0.1, 2.0, 0.5);
        assert!((g.size(0.125) - 0.05).abs() < 1e-15);
        assert_eq!(g.size(0.7), 0.1);
    }
}
