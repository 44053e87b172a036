//! Model problems: the penalised Robin problem, the mixed Dirichlet-Neumann limit and the
//! recursive Dirichlet chain of the expansion in powers of epsilon.

use crate::fem::{
    assemble, consistent_flux, load_boundary, load_domain, FeFunction, FeSpace, Form,
};
use crate::linsolve::{cg_solve, SolveOptions};
use crate::mesh::BoundaryTag;
use crate::{field, Error, Point, Result, ScalarField};
use std::f64::consts::PI;
use std::sync::Arc;

/// Source `f` and boundary datum `g` (with the convention `Delta u = f`).
#[derive(Clone)]
pub struct ProblemData {
    pub name: String,
    pub f: ScalarField,
    pub g: ScalarField,
    /// Exact limit solution and its gradient, when known.
    pub exact: Option<(ScalarField, Arc<dyn Fn(Point) -> [f64; 2] + Send + Sync>)>,
}

impl std::fmt::Debug for ProblemData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemData")
            .field("name", &self.name)
            .finish_non_exhaustive()
    }
}

impl ProblemData {
    /// Half-disk benchmark with limit `r^{1/2} sin(theta/2)` about the origin.
    pub fn half_disk_benchmark() -> Self {
        let u0 = |p: Point| {
            let (r, t) = (p[0].hypot(p[1]), p[1].atan2(p[0]).max(0.0));
            r.sqrt() * (0.5 * t).sin()
        };
        let grad = |p: Point| {
            let (r, t) = (p[0].hypot(p[1]), p[1].atan2(p[0]).max(0.0));
            if r == 0.0 {
                return [f64::NAN; 2];
            }
            // grad = (1/(2 sqrt r)) (sin(t/2) e_r + cos(t/2) e_t) = (1/(2 sqrt r)) (-sin(t/2), cos(t/2))
            let s = 0.5 / r.sqrt();
            [-s * (0.5 * t).sin(), s * (0.5 * t).cos()]
        };
        Self {
            name: "half-disk".into(),
            f: field(|_| 0.0),
            g: field(move |p| {
                if p[1].abs() < 1e-12 && p[0] >= 0.0 {
                    0.0
                } else {
                    u0(p)
                }
            }),
            exact: Some((field(u0), Arc::new(grad))),
        }
    }

    /// Unit disk with `g = cos(theta)`; the Robin solution is `x / (1 + eps)`.
    pub fn disk_cosine() -> Self {
        Self {
            name: "disk".into(),
            f: field(|_| 0.0),
            g: field(|p| p[0] / p[0].hypot(p[1])),
            exact: Some((field(|p| p[0]), Arc::new(|_| [1.0, 0.0]))),
        }
    }

    /// Unit square with `g = x` on the Robin segment and no source.
    pub fn square_linear() -> Self {
        Self {
            name: "square".into(),
            f: field(|_| 0.0),
            g: field(|p| p[0]),
            exact: None,
        }
    }

    /// Smooth data on a domain: `u = x` restricted to the boundary.
    pub fn linear_x() -> Self {
        Self {
            name: "linear".into(),
            f: field(|_| 0.0),
            g: field(|p| p[0]),
            exact: Some((field(|p| p[0]), Arc::new(|_| [1.0, 0.0]))),
        }
    }
}

/// How Dirichlet values on the closure of the Robin part are obtained.
#[derive(Clone, Copy)]
pub enum DirichletValues<'a> {
    /// Boundary `L2` projection of `g` onto the trace space (the discrete limit of the
    /// Robin problem as `eps -> 0`).
    Project(&'a dyn Fn(Point) -> f64),
    /// Nodal interpolation of `g`.
    Interpolate(&'a dyn Fn(Point) -> f64),
    /// Given values per global dof (only entries on the Robin closure are read).
    Nodal(&'a [f64]),
}

fn check_robin_part(space: &FeSpace) -> Result<()> {
    if space.boundary_dofs(BoundaryTag::RobinDirichlet).is_empty() {
        return Err(Error::IllPosed(
            "the Robin/Dirichlet boundary part is empty".into(),
        ));
    }
    Ok(())
}

fn solver_options(space: &FeSpace) -> SolveOptions {
    SolveOptions {
        max_iter: Some(200 * (space.ndof() as f64).sqrt() as usize + 1000),
        ..SolveOptions::default()
    }
}

/// Minimiser of the penalised energy: `(K + M_R / eps) u = -b_f + b_g / eps`.
pub fn solve_robin(
    space: &Arc<FeSpace>,
    f: &dyn Fn(Point) -> f64,
    g: &dyn Fn(Point) -> f64,
    eps: f64,
) -> Result<FeFunction> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "epsilon must be positive and finite, got {eps}"
        )));
    }
    check_robin_part(space)?;
    let k = assemble(space, Form::Stiffness);
    let m = assemble(space, Form::BoundaryMass(BoundaryTag::RobinDirichlet));
    let a = k.plus_scaled(1.0 / eps, &m)?;
    let bf = load_domain(space, f);
    let bg = load_boundary(space, BoundaryTag::RobinDirichlet, g);
    let rhs: Vec<f64> = bf.iter().zip(&bg).map(|(f, g)| -f + g / eps).collect();
    let x = cg_solve(
        &a,
        &rhs,
        &SolveOptions {
            tol: 1e-12,
            ..solver_options(space)
        },
    )?
    .x;
    FeFunction::from_coeffs(space.clone(), x)
}

/// Dirichlet values on the Robin closure, as a full-length vector.
pub fn dirichlet_vector(space: &Arc<FeSpace>, values: DirichletValues<'_>) -> Result<Vec<f64>> {
    let dofs = space.boundary_dofs(BoundaryTag::RobinDirichlet);
    let mut out = vec![0.0; space.ndof()];
    match values {
        DirichletValues::Nodal(v) => {
            if v.len() != space.ndof() {
                return Err(Error::InvalidInput(
                    "nodal Dirichlet values have the wrong length".into(),
                ));
            }
            for &i in &dofs {
                out[i] = v[i];
            }
        }
        DirichletValues::Interpolate(g) => {
            for &i in &dofs {
                out[i] = g(space.nodes()[i]);
            }
        }
        DirichletValues::Project(g) => {
            let m =
                assemble(space, Form::BoundaryMass(BoundaryTag::RobinDirichlet)).submatrix(&dofs);
            let b = load_boundary(space, BoundaryTag::RobinDirichlet, g);
            let rhs: Vec<f64> = dofs.iter().map(|&i| b[i]).collect();
            let x = cg_solve(&m, &rhs, &SolveOptions::with_tol(1e-14))?.x;
            for (&i, v) in dofs.iter().zip(x) {
                out[i] = v;
            }
        }
    }
    Ok(out)
}

/// Minimiser of `int |grad u|^2/2 + f u` with `u` prescribed on the Robin closure,
/// imposed by eliminating those dofs.
pub fn solve_mixed_dirichlet(
    space: &Arc<FeSpace>,
    f: &dyn Fn(Point) -> f64,
    values: DirichletValues<'_>,
) -> Result<FeFunction> {
    let load: Vec<f64> = load_domain(space, f).iter().map(|b| -b).collect();
    solve_mixed_load(space, &load, values)
}

/// Solves `K u = load` on the dofs off the Robin closure, with `u` prescribed on it.
pub fn solve_mixed_load(
    space: &Arc<FeSpace>,
    load: &[f64],
    values: DirichletValues<'_>,
) -> Result<FeFunction> {
    check_robin_part(space)?;
    let fixed = space.boundary_dofs(BoundaryTag::RobinDirichlet);
    let ud = dirichlet_vector(space, values)?;
    let mut is_fixed = vec![false; space.ndof()];
    for &i in &fixed {
        is_fixed[i] = true;
    }
    let free: Vec<usize> = (0..space.ndof()).filter(|&i| !is_fixed[i]).collect();
    let k = assemble(space, Form::Stiffness);
    let kud = k.matvec(&ud);
    let rhs: Vec<f64> = free.iter().map(|&i| load[i] - kud[i]).collect();
    let mut x = ud;
    if !free.is_empty() {
        let kff = k.submatrix(&free);
        let sol = cg_solve(
            &kff,
            &rhs,
            &SolveOptions {
                tol: 1e-12,
                ..solver_options(space)
            },
        )?
        .x;
        for (&i, v) in free.iter().zip(sol) {
            x[i] = v;
        }
    }
    FeFunction::from_coeffs(space.clone(), x)
}

/// Harmonic function with the given Dirichlet values on the Robin part and homogeneous
/// Neumann data elsewhere.
pub fn solve_u1(space: &Arc<FeSpace>, data: DirichletValues<'_>) -> Result<FeFunction> {
    solve_mixed_dirichlet(space, &|_| 0.0, data)
}

/// Recursive Dirichlet chain on a domain whose whole boundary is Robin-tagged:
/// `u_0` takes the projected datum, and `u_m = -d_nu u_{m-1}` on the boundary for
/// `m >= 1`, all harmonic except `u_0`, which carries the source. Returns
/// `u_0, ..., u_depth`.
pub fn recursive_chain(
    space: &Arc<FeSpace>,
    f: &dyn Fn(Point) -> f64,
    g: &dyn Fn(Point) -> f64,
    depth: usize,
) -> Result<Vec<FeFunction>> {
    if !space.boundary_dofs(BoundaryTag::Neumann).is_empty() {
        return Err(Error::InvalidInput(
            "the recursive chain needs a boundary without Neumann part".into(),
        ));
    }
    let mut chain = vec![solve_mixed_dirichlet(
        space,
        f,
        DirichletValues::Project(g),
    )?];
    for m in 1..=depth {
        let prev = &chain[m - 1];
        let lam = if m == 1 {
            consistent_flux(prev, f, BoundaryTag::RobinDirichlet)?
        } else {
            consistent_flux(prev, &|_| 0.0, BoundaryTag::RobinDirichlet)?
        };
        let data: Vec<f64> = lam.coeffs.iter().map(|v| -v).collect();
        chain.push(solve_u1(space, DirichletValues::Nodal(&data))?);
    }
    Ok(chain)
}

/// `sqrt(r) sin(theta/2)` about the origin, in the upper half plane.
pub fn half_disk_limit(p: Point) -> f64 {
    let t = p[1].atan2(p[0]).clamp(0.0, PI);
    p[0].hypot(p[1]).sqrt() * (0.5 * t).sin()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_unit_disk, GradingSpec};

    #[test]
    fn robin_rejects_nonpositive_eps() {
        let mesh = Arc::new(build_unit_disk(0.3).unwrap());
        let space = FeSpace::new(mesh, 1).unwrap();
        assert!(solve_robin(&space, &|_| 0.0, &|_| 0.0, 0.0).is_err());
        assert!(solve_robin(&space, &|_| 0.0, &|_| 0.0, -1.0).is_err());
    }

    #[test]
    fn linear_functions_are_reproduced() {
        let mesh = Arc::new(
            crate::mesh::build_unit_square_mixed(GradingSpec::new(0.1, 2.0, 0.5), 0.3, 0.7)
                .unwrap(),
        );
        let space = FeSpace::new(mesh, 1).unwrap();
        // x + 2y is harmonic; on the Neumann part its normal derivative is not zero, so
        // use the disk for the pure Dirichlet check instead.
        let disk = FeSpace::new(Arc::new(build_unit_disk(0.2).unwrap()), 1).unwrap();
        let u = solve_mixed_dirichlet(
            &disk,
            &|_| 0.0,
            DirichletValues::Interpolate(&|p| p[0] + 2.0 * p[1]),
        )
        .unwrap();
        for (c, p) in u.coeffs.iter().zip(disk.nodes()) {
            assert!((c - p[0] - 2.0 * p[1]).abs() < 1e-9);
        }
        // On the square, x is harmonic with zero normal derivative on the vertical sides
        // only, so use u = 1 instead.
        let u =
            solve_mixed_dirichlet(&space, &|_| 0.0, DirichletValues::Project(&|_| 1.0)).unwrap();
        assert!(u.coeffs.iter().all(|c| (c - 1.0).abs() < 1e-9));
    }
}
