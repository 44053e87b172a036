use crate::mesh::{BoundaryTag, JunctionFrame, Mesh};
use crate::quad::{GaussLegendre, TriangleRule};
use crate::{Error, Point, Result};
use std::collections::BTreeMap;
use std::sync::{Arc, OnceLock};

/// Lagrange space of degree 1 or 2 on a mesh.
///
/// Dof numbering: vertices first, then (for P2) edge midpoints in ascending order of the
/// sorted vertex pair. Local element order is `v0 v1 v2 m01 m12 m20`.
#[derive(Debug)]
pub struct FeSpace {
    mesh: Arc<Mesh>,
    degree: usize,
    ndof: usize,
    elem_dofs: Vec<[usize; 6]>,
    edge_dofs: Vec<[usize; 3]>,
    nodes: Vec<Point>,
    locator: OnceLock<Locator>,
}

/// Affine element data.
#[derive(Debug, Clone, Copy)]
pub struct ElementGeometry {
    pub points: [Point; 3],
    pub area: f64,
    /// Gradients of the barycentric coordinates.
    pub grad_lambda: [[f64; 2]; 3],
}

impl ElementGeometry {
    pub fn new(points: [Point; 3]) -> Self {
        let [p0, p1, p2] = points;
        let area2 = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
        let inv = 1.0 / area2;
        let grad_lambda = [
            [(p1[1] - p2[1]) * inv, (p2[0] - p1[0]) * inv],
            [(p2[1] - p0[1]) * inv, (p0[0] - p2[0]) * inv],
            [(p0[1] - p1[1]) * inv, (p1[0] - p0[0]) * inv],
        ];
        Self {
            points,
            area: 0.5 * area2,
            grad_lambda,
        }
    }

    pub fn point_at(&self, l: [f64; 3]) -> Point {
        let [p0, p1, p2] = self.points;
        [
            l[0] * p0[0] + l[1] * p1[0] + l[2] * p2[0],
            l[0] * p0[1] + l[1] * p1[1] + l[2] * p2[1],
        ]
    }

    pub fn barycentric(&self, p: Point) -> [f64; 3] {
        let [p0, _, _] = self.points;
        let g = self.grad_lambda;
        let d = [p[0] - p0[0], p[1] - p0[1]];
        let l1 = g[1][0] * d[0] + g[1][1] * d[1];
        let l2 = g[2][0] * d[0] + g[2][1] * d[1];
        [1.0 - l1 - l2, l1, l2]
    }
}

/// Values and gradients of the local basis at barycentric point `l`.
pub fn local_basis(
    degree: usize,
    l: [f64; 3],
    g: &[[f64; 2]; 3],
    val: &mut [f64; 6],
    grad: &mut [[f64; 2]; 6],
) {
    if degree == 1 {
        val[..3].copy_from_slice(&l);
        grad[..3].copy_from_slice(g);
        return;
    }
    for i in 0..3 {
        val[i] = l[i] * (2.0 * l[i] - 1.0);
        let s = 4.0 * l[i] - 1.0;
        grad[i] = [s * g[i][0], s * g[i][1]];
    }
    for (k, (i, j)) in [(0, 1), (1, 2), (2, 0)].into_iter().enumerate() {
        val[3 + k] = 4.0 * l[i] * l[j];
        grad[3 + k] = [
            4.0 * (l[j] * g[i][0] + l[i] * g[j][0]),
            4.0 * (l[j] * g[i][1] + l[i] * g[j][1]),
        ];
    }
}

/// Trace basis on a boundary edge at parameter `s` in `[0, 1]`, ordered `v0 v1 mid`.
#[inline]
pub fn edge_basis(degree: usize, s: f64) -> [f64; 3] {
    if degree == 1 {
        [1.0 - s, s, 0.0]
    } else {
        [
            (1.0 - s) * (1.0 - 2.0 * s),
            s * (2.0 * s - 1.0),
            4.0 * s * (1.0 - s),
        ]
    }
}

/// A stretch of a boundary edge lying on the ray `theta = 0` of a junction frame.
#[derive(Debug, Clone, Copy)]
pub struct RaySegment {
    pub edge: usize,
    /// Distances from the junction of the edge's first and second vertex.
    pub r: [f64; 2],
}

impl FeSpace {
    pub fn new(mesh: Arc<Mesh>, degree: usize) -> Result<Arc<Self>> {
        if degree != 1 && degree != 2 {
            return Err(Error::InvalidInput(format!(
                "polynomial degree must be 1 or 2, got {degree}"
            )));
        }
        let nv = mesh.vertices.len();
        let mut nodes = mesh.vertices.clone();
        let mut edge_id: BTreeMap<[usize; 2], usize> = BTreeMap::new();
        if degree == 2 {
            for e in mesh.edges() {
                let id = nv + edge_id.len();
                edge_id.insert(e, id);
                let (a, b) = (mesh.vertices[e[0]], mesh.vertices[e[1]]);
                nodes.push([0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]);
            }
        }
        let mid = |a: usize, b: usize| -> usize {
            if degree == 2 {
                edge_id[&[a.min(b), a.max(b)]]
            } else {
                usize::MAX
            }
        };
        let elem_dofs = mesh
            .triangles
            .iter()
            .map(|t| {
                [
                    t[0],
                    t[1],
                    t[2],
                    mid(t[0], t[1]),
                    mid(t[1], t[2]),
                    mid(t[2], t[0]),
                ]
            })
            .collect();
        let edge_dofs = mesh
            .boundary_edges
            .iter()
            .map(|e| [e.v[0], e.v[1], mid(e.v[0], e.v[1])])
            .collect();
        Ok(Arc::new(Self {
            ndof: nodes.len(),
            mesh,
            degree,
            elem_dofs,
            edge_dofs,
            nodes,
            locator: OnceLock::new(),
        }))
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn ndof(&self) -> usize {
        self.ndof
    }

    /// Number of local dofs per element.
    pub fn local_dofs(&self) -> usize {
        if self.degree == 1 {
            3
        } else {
            6
        }
    }

    pub fn element_dofs(&self, t: usize) -> &[usize] {
        &self.elem_dofs[t][..self.local_dofs()]
    }

    /// Dofs on boundary edge `k`: both vertices, plus the midpoint for P2.
    pub fn boundary_edge_dofs(&self, k: usize) -> &[usize] {
        &self.edge_dofs[k][..if self.degree == 1 { 2 } else { 3 }]
    }

    /// Interpolation nodes.
    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn geometry(&self, t: usize) -> ElementGeometry {
        ElementGeometry::new(self.mesh.triangle_points(t))
    }

    /// Dofs on the closure of the boundary part `tag`, sorted.
    pub fn boundary_dofs(&self, tag: BoundaryTag) -> Vec<usize> {
        let mut d: Vec<usize> = (0..self.mesh.boundary_edges.len())
            .filter(|&k| self.mesh.boundary_edges[k].tag == tag)
            .flat_map(|k| self.boundary_edge_dofs(k).to_vec())
            .collect();
        d.sort_unstable();
        d.dedup();
        d
    }

    /// Calls `f(element, x, weight, values, gradients, dofs)` at every quadrature point.
    pub fn for_each_qp(
        &self,
        rule: &TriangleRule,
        mut f: impl FnMut(usize, Point, f64, &[f64], &[[f64; 2]], &[usize]),
    ) {
        let n = self.local_dofs();
        let mut val = [0.0; 6];
        let mut grad = [[0.0; 2]; 6];
        for t in 0..self.mesh.triangles.len() {
            let geo = self.geometry(t);
            let dofs = self.element_dofs(t);
            for (l, w) in rule.points.iter().zip(rule.weights) {
                local_basis(self.degree, *l, &geo.grad_lambda, &mut val, &mut grad);
                f(
                    t,
                    geo.point_at(*l),
                    w * geo.area,
                    &val[..n],
                    &grad[..n],
                    dofs,
                );
            }
        }
    }

    /// Calls `f(edge, x, weight, trace values, dofs)` at Gauss points of boundary edges
    /// carrying `tag`.
    pub fn for_each_boundary_qp(
        &self,
        tag: BoundaryTag,
        rule: &GaussLegendre,
        mut f: impl FnMut(usize, Point, f64, &[f64], &[usize]),
    ) {
        let nd = if self.degree == 1 { 2 } else { 3 };
        for (k, e) in self.mesh.boundary_edges.iter().enumerate() {
            if e.tag != tag {
                continue;
            }
            let (a, b) = (self.mesh.vertices[e.v[0]], self.mesh.vertices[e.v[1]]);
            let len = crate::dist(a, b);
            let dofs = self.boundary_edge_dofs(k);
            for (s, w) in rule.unit() {
                let phi = edge_basis(self.degree, s);
                let x = [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
                f(k, x, w * len, &phi[..nd], dofs);
            }
        }
    }

    /// Value of the trace of `coeffs` on boundary edge `k` at parameter `s`.
    pub fn edge_value(&self, coeffs: &[f64], k: usize, s: f64) -> f64 {
        let phi = edge_basis(self.degree, s);
        self.boundary_edge_dofs(k)
            .iter()
            .zip(phi)
            .map(|(&d, p)| coeffs[d] * p)
            .sum()
    }

    /// Boundary edges with tag `tag` lying on the ray `theta = 0` of `frame` within
    /// distance `r_max` of its centre (edges straddling `r_max` are included whole).
    pub fn ray_segments(
        &self,
        frame: &JunctionFrame,
        r_max: f64,
        tag: BoundaryTag,
    ) -> Vec<RaySegment> {
        let mut out = Vec::new();
        for (k, e) in self.mesh.boundary_edges.iter().enumerate() {
            if e.tag != tag {
                continue;
            }
            let (ra, ta) = frame.polar(self.mesh.vertices[e.v[0]]);
            let (rb, tb) = frame.polar(self.mesh.vertices[e.v[1]]);
            let on_ray = |r: f64, t: f64| r < 1e-14 || t.abs() < 1e-9;
            if on_ray(ra, ta) && on_ray(rb, tb) && ra.min(rb) < r_max {
                out.push(RaySegment {
                    edge: k,
                    r: [ra, rb],
                });
            }
        }
        out.sort_by(|a, b| a.r[0].min(a.r[1]).total_cmp(&b.r[0].min(b.r[1])));
        out
    }

    /// Integral over `(0, r_max)` along the ray of `weight(r) r^{-1/2} trace(r)`, where the
    /// trace comes from `coeffs`. Uses `r = t^2` on every edge.
    pub fn ray_integral_inv_sqrt(
        &self,
        coeffs: &[f64],
        frame: &JunctionFrame,
        r_max: f64,
        tag: BoundaryTag,
        rule: &GaussLegendre,
        weight: impl Fn(f64) -> f64,
    ) -> f64 {
        let mut total = 0.0;
        for seg in self.ray_segments(frame, r_max, tag) {
            let (r0, r1) = (seg.r[0].min(seg.r[1]), seg.r[0].max(seg.r[1]).min(r_max));
            if r1 <= r0 {
                continue;
            }
            let [ra, rb] = seg.r;
            total += crate::quad::inv_sqrt_weighted(r0, r1, rule, |r| {
                let s = (r - ra) / (rb - ra);
                weight(r) * self.edge_value(coeffs, seg.edge, s)
            });
        }
        total
    }

    /// Closest point of the mesh boundary to `p`, nudged slightly inside.
    pub fn nearest_boundary_point(&self, p: Point) -> Point {
        let mut best = (f64::INFINITY, p, 0usize);
        for (k, e) in self.mesh.boundary_edges.iter().enumerate() {
            let (a, b) = (self.mesh.vertices[e.v[0]], self.mesh.vertices[e.v[1]]);
            let d = [b[0] - a[0], b[1] - a[1]];
            let s = (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / (d[0] * d[0] + d[1] * d[1]))
                .clamp(0.0, 1.0);
            let q = [a[0] + s * d[0], a[1] + s * d[1]];
            let dist = crate::dist(p, q);
            if dist < best.0 {
                best = (dist, q, k);
            }
        }
        best.1
    }

    pub(crate) fn locator(&self) -> &Locator {
        self.locator.get_or_init(|| Locator::new(&self.mesh))
    }

    /// Element containing `p` and its barycentric coordinates.
    pub fn locate(&self, p: Point) -> Result<(usize, [f64; 3])> {
        self.locator()
            .locate(&self.mesh, p)
            .ok_or(Error::PointOutsideMesh { x: p[0], y: p[1] })
    }
}

/// Uniform bucket grid over the bounding box.
#[derive(Debug)]
pub(crate) struct Locator {
    origin: Point,
    cell: f64,
    nx: usize,
    ny: usize,
    start: Vec<usize>,
    items: Vec<usize>,
}

impl Locator {
    fn new(mesh: &Mesh) -> Self {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for v in &mesh.vertices {
            for d in 0..2 {
                lo[d] = lo[d].min(v[d]);
                hi[d] = hi[d].max(v[d]);
            }
        }
        let w = (hi[0] - lo[0]).max(1e-300);
        let h = (hi[1] - lo[1]).max(1e-300);
        let nt = mesh.triangles.len().max(1) as f64;
        let cell = (w * h / nt).sqrt().max(w.max(h) / 1024.0) * 2.0;
        let nx = ((w / cell).ceil() as usize).max(1);
        let ny = ((h / cell).ceil() as usize).max(1);
        let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); nx * ny];
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let (mut a, mut b) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
            for &i in tri {
                for d in 0..2 {
                    a[d] = a[d].min(mesh.vertices[i][d]);
                    b[d] = b[d].max(mesh.vertices[i][d]);
                }
            }
            let (i0, j0) = Self::cell_of(lo, cell, nx, ny, a);
            let (i1, j1) = Self::cell_of(lo, cell, nx, ny, b);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    buckets[j * nx + i].push(t);
                }
            }
        }
        let mut start = Vec::with_capacity(nx * ny + 1);
        let mut items = Vec::new();
        start.push(0);
        for b in buckets {
            items.extend(b);
            start.push(items.len());
        }
        Self {
            origin: lo,
            cell,
            nx,
            ny,
            start,
            items,
        }
    }

    fn cell_of(lo: Point, cell: f64, nx: usize, ny: usize, p: Point) -> (usize, usize) {
        let i = ((p[0] - lo[0]) / cell).floor().clamp(0.0, (nx - 1) as f64) as usize;
        let j = ((p[1] - lo[1]) / cell).floor().clamp(0.0, (ny - 1) as f64) as usize;
        (i, j)
    }

    fn locate(&self, mesh: &Mesh, p: Point) -> Option<(usize, [f64; 3])> {
        let (i, j) = Self::cell_of(self.origin, self.cell, self.nx, self.ny, p);
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        for &t in &self.items[self.start[j * self.nx + i]..self.start[j * self.nx + i + 1]] {
            let geo = ElementGeometry::new(mesh.triangle_points(t));
            let l = geo.barycentric(p);
            let m = l[0].min(l[1]).min(l[2]);
            if m >= 0.0 {
                return Some((t, l));
            }
            if best.as_ref().is_none_or(|b| m > b.2) {
                best = Some((t, l, m));
            }
        }
        match best {
            Some((t, l, m)) if m > -1e-10 => {
                let c = l.map(|x| x.max(0.0));
                let s = c[0] + c[1] + c[2];
                Some((t, c.map(|x| x / s)))
            }
            _ => None,
        }
    }
}
