use super::{FeSpace, SparseSymMatrix};
use crate::mesh::BoundaryTag;
use crate::quad::{GaussLegendre, TRI3, TRI7};
use crate::Point;

/// Bilinear forms that can be assembled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Form {
    /// `int grad u . grad v`
    Stiffness,
    /// `int u v`
    Mass,
    /// `int_{tag} u v`
    BoundaryMass(BoundaryTag),
}

/// Gauss points per boundary edge.
pub const EDGE_POINTS: usize = 4;

fn pattern(space: &FeSpace) -> SparseSymMatrix {
    let mut rows = vec![Vec::new(); space.ndof()];
    for t in 0..space.mesh().triangles.len() {
        let d = space.element_dofs(t);
        for &i in d {
            rows[i].extend_from_slice(d);
        }
    }
    SparseSymMatrix::from_pattern(rows)
}

/// Assembles `form` on the full dof pattern of `space`.
pub fn assemble(space: &FeSpace, form: Form) -> SparseSymMatrix {
    let mut m = pattern(space);
    match form {
        Form::Stiffness => space.for_each_qp(&TRI3, |_, _, w, _, g, dofs| {
            for (a, &i) in dofs.iter().enumerate() {
                for (b, &j) in dofs.iter().enumerate() {
                    m.add(i, j, w * (g[a][0] * g[b][0] + g[a][1] * g[b][1]));
                }
            }
        }),
        Form::Mass => {
            let rule = if space.degree() == 1 { TRI3 } else { TRI7 };
            space.for_each_qp(&rule, |_, _, w, v, _, dofs| {
                for (a, &i) in dofs.iter().enumerate() {
                    for (b, &j) in dofs.iter().enumerate() {
                        m.add(i, j, w * v[a] * v[b]);
                    }
                }
            })
        }
        Form::BoundaryMass(tag) => {
            let rule = GaussLegendre::new(EDGE_POINTS);
            space.for_each_boundary_qp(tag, &rule, |_, _, w, v, dofs| {
                for (a, &i) in dofs.iter().enumerate() {
                    for (b, &j) in dofs.iter().enumerate() {
                        m.add(i, j, w * v[a] * v[b]);
                    }
                }
            })
        }
    }
    m
}

/// `b_i = int f phi_i` with the seven-point rule.
pub fn load_domain(space: &FeSpace, f: &dyn Fn(Point) -> f64) -> Vec<f64> {
    let mut b = vec![0.0; space.ndof()];
    space.for_each_qp(&TRI7, |_, x, w, v, _, dofs| {
        let fx = f(x);
        if fx != 0.0 {
            for (a, &i) in dofs.iter().enumerate() {
                b[i] += w * fx * v[a];
            }
        }
    });
    b
}

/// `b_i = int_{tag} g phi_i`.
pub fn load_boundary(space: &FeSpace, tag: BoundaryTag, g: &dyn Fn(Point) -> f64) -> Vec<f64> {
    let mut b = vec![0.0; space.ndof()];
    let rule = GaussLegendre::new(EDGE_POINTS);
    space.for_each_boundary_qp(tag, &rule, |_, x, w, v, dofs| {
        let gx = g(x);
        for (a, &i) in dofs.iter().enumerate() {
            b[i] += w * gx * v[a];
        }
    });
    b
}

/// `b_i = int_{tag} (F . n) phi_i` with `n` the outward unit normal.
pub fn load_boundary_normal(
    space: &FeSpace,
    tag: BoundaryTag,
    field: &dyn Fn(Point) -> [f64; 2],
) -> Vec<f64> {
    let mut b = vec![0.0; space.ndof()];
    let rule = GaussLegendre::new(EDGE_POINTS);
    let mesh = space.mesh();
    space.for_each_boundary_qp(tag, &rule, |k, x, w, v, dofs| {
        let e = mesh.boundary_edges[k];
        let (p, q) = (mesh.vertices[e.v[0]], mesh.vertices[e.v[1]]);
        let len = crate::dist(p, q);
        let n = [(q[1] - p[1]) / len, (p[0] - q[0]) / len];
        let fx = field(x);
        let fn_ = fx[0] * n[0] + fx[1] * n[1];
        for (a, &i) in dofs.iter().enumerate() {
            b[i] += w * fn_ * v[a];
        }
    });
    b
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_unit_square_mixed, GradingSpec};
    use std::sync::Arc;

    #[test]
    fn mass_sums_to_area_and_stiffness_kills_constants() {
        let mesh =
            Arc::new(build_unit_square_mixed(GradingSpec::new(0.1, 2.0, 0.5), 0.3, 0.7).unwrap());
        for degree in [1, 2] {
            let space = FeSpace::new(mesh.clone(), degree).unwrap();
            let ones = vec![1.0; space.ndof()];
            let m = assemble(&space, Form::Mass);
            assert!((m.quadratic_form(&ones) - 1.0).abs() < 1e-12);
            let k = assemble(&space, Form::Stiffness);
            assert!(k.matvec(&ones).iter().all(|v| v.abs() < 1e-10));
            let mb = assemble(&space, Form::BoundaryMass(BoundaryTag::RobinDirichlet));
            assert!((mb.quadratic_form(&ones) - 0.4).abs() < 1e-12);
            assert!(k.asymmetry() < 1e-12 && m.asymmetry() < 1e-15);
        }
    }
}
