use super::{signed_area, BoundaryTag, Mesh};
use crate::{dist, Error, Result};
use std::collections::{BTreeMap, BTreeSet};

/// Summary statistics of a mesh that passed validation.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshReport {
    pub num_vertices: usize,
    pub num_triangles: usize,
    pub num_edges: usize,
    pub num_boundary_edges: usize,
    pub min_angle_deg: f64,
    pub max_edge: f64,
    pub min_edge: f64,
}

/// Smallest admissible interior angle, in degrees.
pub const MIN_ANGLE_DEG: f64 = 20.0;

/// Checks connectivity, orientation, Euler characteristic, tag partition, junction
/// presence and the minimum angle.
pub fn validate(mesh: &Mesh) -> Result<MeshReport> {
    let nv = mesh.vertices.len();
    let fail = |m: String| Err(Error::MeshValidation(m));

    for (t, tri) in mesh.triangles.iter().enumerate() {
        if tri.iter().any(|&i| i >= nv) {
            return fail(format!("triangle {t} references a vertex out of range"));
        }
    }
    for (k, e) in mesh.boundary_edges.iter().enumerate() {
        if e.v.iter().any(|&i| i >= nv) {
            return fail(format!(
                "boundary edge {k} references a vertex out of range"
            ));
        }
    }
    for j in 0..mesh.junctions.len() {
        if mesh.junction_vertex(j).is_none() {
            let c = mesh.junctions[j].center;
            return fail(format!(
                "missing junction vertex: junction {j} at ({}, {}) is not a mesh vertex",
                c[0], c[1]
            ));
        }
    }
    for t in 0..mesh.triangles.len() {
        if mesh.triangle_area(t) <= 0.0 {
            return fail(format!("triangle {t} is degenerate or clockwise"));
        }
    }

    let mut edge_count: BTreeMap<[usize; 2], usize> = BTreeMap::new();
    for tri in &mesh.triangles {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            *edge_count.entry([a.min(b), a.max(b)]).or_default() += 1;
        }
    }
    if let Some((e, n)) = edge_count.iter().find(|(_, &n)| n > 2) {
        return fail(format!("edge {e:?} is shared by {n} triangles"));
    }
    let topo: BTreeSet<[usize; 2]> = edge_count
        .iter()
        .filter(|(_, &n)| n == 1)
        .map(|(e, _)| *e)
        .collect();
    let mut tagged = BTreeSet::new();
    for e in &mesh.boundary_edges {
        let key = [e.v[0].min(e.v[1]), e.v[0].max(e.v[1])];
        if !tagged.insert(key) {
            return fail(format!(
                "tag partition violation: boundary edge {key:?} tagged twice"
            ));
        }
    }
    if tagged != topo {
        return fail(
            "tag partition violation: tagged edges differ from the topological boundary".into(),
        );
    }

    let used: BTreeSet<usize> = mesh.triangles.iter().flatten().copied().collect();
    let v_used = used.len() as i64;
    let euler = v_used - edge_count.len() as i64 + mesh.triangles.len() as i64;
    if euler != 1 {
        return fail(format!("Euler characteristic is {euler}, expected 1"));
    }

    check_tags(mesh)?;

    let mut min_angle = f64::INFINITY;
    let mut min_edge = f64::INFINITY;
    let mut max_edge: f64 = 0.0;
    for t in 0..mesh.triangles.len() {
        let p = mesh.triangle_points(t);
        let l = [dist(p[1], p[2]), dist(p[2], p[0]), dist(p[0], p[1])];
        let area = signed_area(p[0], p[1], p[2]);
        for k in 0..3 {
            // Angle opposite edge k from the law of sines via area.
            let (a, b) = (l[(k + 1) % 3], l[(k + 2) % 3]);
            let s = (2.0 * area / (a * b)).clamp(-1.0, 1.0);
            let c = (a * a + b * b - l[k] * l[k]) / (2.0 * a * b);
            min_angle = min_angle.min(s.atan2(c).to_degrees());
        }
        min_edge = min_edge.min(l[0].min(l[1]).min(l[2]));
        max_edge = max_edge.max(l[0].max(l[1]).max(l[2]));
    }
    if min_angle < MIN_ANGLE_DEG {
        return fail(format!(
            "minimum angle {min_angle:.3} degrees is below {MIN_ANGLE_DEG}"
        ));
    }
    Ok(MeshReport {
        num_vertices: nv,
        num_triangles: mesh.triangles.len(),
        num_edges: edge_count.len(),
        num_boundary_edges: mesh.boundary_edges.len(),
        min_angle_deg: min_angle,
        max_edge,
        min_edge,
    })
}

/// Tags must switch exactly at the junction vertices.
fn check_tags(mesh: &Mesh) -> Result<()> {
    let mut incident: BTreeMap<usize, Vec<BoundaryTag>> = BTreeMap::new();
    for e in &mesh.boundary_edges {
        for &v in &e.v {
            incident.entry(v).or_default().push(e.tag);
        }
    }
    if let Some((v, _)) = incident.iter().find(|(_, t)| t.len() != 2) {
        return Err(Error::MeshValidation(format!(
            "boundary is not a simple loop at vertex {v}"
        )));
    }
    let switches: BTreeSet<usize> = incident
        .iter()
        .filter(|(_, t)| t[0] != t[1])
        .map(|(v, _)| *v)
        .collect();
    let junctions: BTreeSet<usize> = (0..mesh.junctions.len())
        .filter_map(|j| mesh.junction_vertex(j))
        .collect();
    if switches != junctions {
        return Err(Error::MeshValidation(format!(
            "tag partition violation: tags switch at {} vertices but the mesh has {} junctions at different locations",
            switches.len(),
            junctions.len()
        )));
    }
    Ok(())
}
