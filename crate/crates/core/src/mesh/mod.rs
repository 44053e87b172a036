//! Conforming triangulations of convex planar domains with tagged boundaries.
//!
//! Every mesh carries a list of [`JunctionFrame`]s: the points where the Robin part of the
//! boundary meets the Neumann part, together with a local polar frame in which the Robin
//! side is the ray `theta = 0` and the domain lies in `theta > 0`.

mod build;
mod io;
mod validate;

pub use build::{
    build_half_disk, build_log_polar_half_disk, build_unit_disk, build_unit_square_mixed,
    ring_radii, GradingSpec, LOG_POLAR_CORE,
};
pub use io::{read_mesh, write_mesh};
pub use validate::{validate, MeshReport};

use crate::{dist, Error, Point, Result};
use std::collections::BTreeMap;
use std::f64::consts::PI;

/// Boundary classification of an edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BoundaryTag {
    /// Penalised (Robin) part, which becomes Dirichlet in the limit.
    RobinDirichlet,
    /// Homogeneous Neumann part.
    Neumann,
}

impl BoundaryTag {
    pub fn symbol(self) -> char {
        match self {
            BoundaryTag::RobinDirichlet => 'R',
            BoundaryTag::Neumann => 'N',
        }
    }

    pub fn from_symbol(s: &str) -> Option<Self> {
        match s {
            "R" => Some(BoundaryTag::RobinDirichlet),
            "N" => Some(BoundaryTag::Neumann),
            _ => None,
        }
    }
}

/// A boundary edge; `v` is ordered so that the domain lies to its left.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryEdge {
    pub v: [usize; 2],
    pub tag: BoundaryTag,
}

/// Local polar frame at a Dirichlet-Neumann junction.
///
/// A point at polar coordinates `(r, theta)` sits at
/// `center + r (cos(a + s theta), sin(a + s theta))` with `a = tangent_angle` and
/// `s = orientation`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JunctionFrame {
    pub center: Point,
    pub tangent_angle: f64,
    pub orientation: f64,
}

impl JunctionFrame {
    pub fn new(center: Point, tangent_angle: f64, orientation: f64) -> Self {
        Self {
            center,
            tangent_angle,
            orientation: orientation.signum(),
        }
    }

    /// Physical angle of the frame direction `theta`.
    #[inline]
    pub fn direction(&self, theta: f64) -> f64 {
        self.tangent_angle + self.orientation * theta
    }

    pub fn point(&self, r: f64, theta: f64) -> Point {
        let a = self.direction(theta);
        [self.center[0] + r * a.cos(), self.center[1] + r * a.sin()]
    }

    /// Polar coordinates of `p`, with `theta` in `[-pi/2, 3pi/2)`.
    pub fn polar(&self, p: Point) -> (f64, f64) {
        let dx = p[0] - self.center[0];
        let dy = p[1] - self.center[1];
        let r = dx.hypot(dy);
        let mut t = self.orientation * (dy.atan2(dx) - self.tangent_angle);
        t = (t + 0.5 * PI).rem_euclid(2.0 * PI) - 0.5 * PI;
        (r, t)
    }

    /// Cartesian unit vectors `e_r`, `e_theta` at frame angle `theta`.
    pub fn basis(&self, theta: f64) -> ([f64; 2], [f64; 2]) {
        let a = self.direction(theta);
        let (s, c) = a.sin_cos();
        ([c, s], [-self.orientation * s, self.orientation * c])
    }
}

/// A triangulation with tagged boundary edges and junction frames.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<Point>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary_edges: Vec<BoundaryEdge>,
    pub junctions: Vec<JunctionFrame>,
}

impl Mesh {
    /// Delaunay triangulation of a point set whose convex hull is the domain.
    ///
    /// Boundary edges are tagged by `classify` applied to their midpoints.
    pub fn from_points(
        points: Vec<Point>,
        classify: impl Fn(Point) -> BoundaryTag,
        junctions: Vec<JunctionFrame>,
    ) -> Result<Self> {
        use spade::{DelaunayTriangulation, Point2, Triangulation};
        let mut dt: DelaunayTriangulation<Point2<f64>> = DelaunayTriangulation::new();
        let mut handle_to_index = Vec::with_capacity(points.len());
        for (i, p) in points.iter().enumerate() {
            let h = dt
                .insert(Point2::new(p[0], p[1]))
                .map_err(|e| Error::MeshGeneration(format!("vertex {i}: {e:?}")))?;
            if h.index() != handle_to_index.len() {
                return Err(Error::MeshGeneration(format!(
                    "duplicate vertex {i} at ({}, {})",
                    p[0], p[1]
                )));
            }
            handle_to_index.push(i);
        }
        let triangles = dt
            .inner_faces()
            .map(|face| face.vertices().map(|v| handle_to_index[v.fix().index()]))
            .collect();
        Ok(Self::from_triangles(points, triangles, classify, junctions))
    }

    /// Mesh from a triangle list; orientation is normalised to counter-clockwise and
    /// boundary edges are tagged by `classify` applied to their midpoints.
    pub(crate) fn from_triangles(
        points: Vec<Point>,
        mut triangles: Vec<[usize; 3]>,
        classify: impl Fn(Point) -> BoundaryTag,
        junctions: Vec<JunctionFrame>,
    ) -> Self {
        for t in triangles.iter_mut() {
            if signed_area(points[t[0]], points[t[1]], points[t[2]]) < 0.0 {
                t.swap(1, 2);
            }
        }
        triangles.sort_unstable();
        let mut mesh = Mesh {
            vertices: points,
            triangles,
            boundary_edges: Vec::new(),
            junctions,
        };
        mesh.boundary_edges = mesh
            .boundary_loop_from_triangles()
            .into_iter()
            .map(|v| {
                let m = midpoint(mesh.vertices[v[0]], mesh.vertices[v[1]]);
                BoundaryEdge {
                    v,
                    tag: classify(m),
                }
            })
            .collect();
        mesh
    }

    /// Boundary edges of the triangle set, ordered along the boundary loop starting from
    /// the lowest vertex index.
    pub(crate) fn boundary_loop_from_triangles(&self) -> Vec<[usize; 2]> {
        let mut count: BTreeMap<(usize, usize), (usize, [usize; 2])> = BTreeMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                count.entry((a.min(b), a.max(b))).or_insert((0, [a, b])).0 += 1;
            }
        }
        let mut next: BTreeMap<usize, usize> = BTreeMap::new();
        for (n, e) in count.values() {
            if *n == 1 {
                next.insert(e[0], e[1]);
            }
        }
        let mut out = Vec::with_capacity(next.len());
        let mut visited = std::collections::BTreeSet::new();
        let starts: Vec<usize> = next.keys().copied().collect();
        for s in starts {
            if visited.contains(&s) {
                continue;
            }
            let mut a = s;
            while visited.insert(a) {
                let Some(&b) = next.get(&a) else { break };
                out.push([a, b]);
                a = b;
            }
        }
        out
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        self.triangles[t].map(|i| self.vertices[i])
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        signed_area(a, b, c)
    }

    /// Total area.
    pub fn area(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| self.triangle_area(t))
            .sum()
    }

    /// Longest edge length.
    pub fn max_edge(&self) -> f64 {
        self.triangles
            .iter()
            .flat_map(|t| (0..3).map(move |k| (t[k], t[(k + 1) % 3])))
            .map(|(a, b)| dist(self.vertices[a], self.vertices[b]))
            .fold(0.0, f64::max)
    }

    /// Total length of boundary edges carrying `tag`.
    pub fn boundary_length(&self, tag: BoundaryTag) -> f64 {
        self.boundary_edges
            .iter()
            .filter(|e| e.tag == tag)
            .map(|e| dist(self.vertices[e.v[0]], self.vertices[e.v[1]]))
            .sum()
    }

    /// Index of the vertex at junction `j`, if present.
    pub fn junction_vertex(&self, j: usize) -> Option<usize> {
        let c = self.junctions.get(j)?.center;
        self.find_vertex(c, 1e-12)
    }

    pub(crate) fn find_vertex(&self, p: Point, tol: f64) -> Option<usize> {
        self.vertices.iter().position(|v| dist(*v, p) <= tol)
    }

    /// Whether the boundary is straight through junction `j` (opening angle pi).
    pub fn is_flat_junction(&self, j: usize) -> bool {
        let Some(v) = self.junction_vertex(j) else {
            return false;
        };
        let mut dirs = Vec::new();
        for e in &self.boundary_edges {
            if e.v[0] == v {
                dirs.push(unit(self.vertices[v], self.vertices[e.v[1]]));
            } else if e.v[1] == v {
                dirs.push(unit(self.vertices[v], self.vertices[e.v[0]]));
            }
        }
        dirs.len() == 2 && (dirs[0][0] * dirs[1][0] + dirs[0][1] * dirs[1][1] + 1.0).abs() < 1e-9
    }

    /// Undirected edges as sorted vertex pairs, in ascending order.
    pub fn edges(&self) -> Vec<[usize; 2]> {
        let mut e: Vec<[usize; 2]> = self
            .triangles
            .iter()
            .flat_map(|t| {
                (0..3).map(move |k| {
                    let (a, b) = (t[k], t[(k + 1) % 3]);
                    [a.min(b), a.max(b)]
                })
            })
            .collect();
        e.sort_unstable();
        e.dedup();
        e
    }
}

#[inline]
pub(crate) fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

#[inline]
pub(crate) fn midpoint(a: Point, b: Point) -> Point {
    [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
}

fn unit(a: Point, b: Point) -> [f64; 2] {
    let d = dist(a, b);
    [(b[0] - a[0]) / d, (b[1] - a[1]) / d]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_round_trip() {
        let frames = [
            JunctionFrame::new([0.0, 0.0], 0.0, 1.0),
            JunctionFrame::new([0.75, 0.0], PI, -1.0),
            JunctionFrame::new([-1.0, 0.0], 0.5 * PI, -1.0),
        ];
        for f in frames {
            for &(r, t) in &[(0.3, 0.0), (0.1, 1.0), (0.2, PI), (0.05, 0.5 * PI)] {
                let (r2, t2) = f.polar(f.point(r, t));
                assert!(
                    (r - r2).abs() < 1e-14 && (t - t2).abs() < 1e-12,
                    "{f:?} {r} {t} -> {t2}"
                );
            }
        }
    }

    #[test]
    fn frame_interior_is_upper_half_for_square_junctions() {
        let left = JunctionFrame::new([0.25, 0.0], 0.0, 1.0);
        let right = JunctionFrame::new([0.75, 0.0], PI, -1.0);
        for f in [left, right] {
            let p = f.point(0.1, 0.5 * PI);
            assert!(p[1] > 0.099);
        }
        assert!(left.point(0.1, 0.0)[0] > 0.25);
        assert!(right.point(0.1, 0.0)[0] < 0.75);
    }
}
