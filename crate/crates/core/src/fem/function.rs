use super::{assemble, load_domain, FeSpace, Form, EDGE_POINTS};
use crate::linsolve::{cg_solve, SolveOptions};
use crate::mesh::{BoundaryTag, JunctionFrame};
use crate::quad::{GaussLegendre, TRI7};
use crate::{Error, Point, Result};
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

/// A finite element function: coefficient vector over a space.
#[derive(Debug, Clone)]
pub struct FeFunction {
    pub space: Arc<FeSpace>,
    pub coeffs: Vec<f64>,
}

/// A function living on the closure of one boundary part. Coefficients are indexed by
/// global dof and vanish away from that part.
#[derive(Debug, Clone)]
pub struct BoundaryTrace {
    pub space: Arc<FeSpace>,
    pub tag: BoundaryTag,
    pub coeffs: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    L2Domain,
    H1Semi,
    L2Boundary(BoundaryTag),
}

/// Which energy functional to evaluate.
#[derive(Clone, Copy)]
pub enum EnergyModel<'a> {
    /// `int |grad u|^2/2 + f u + 1/(2 eps) int_{Gamma_D} (u - g)^2`
    Robin {
        eps: f64,
        f: &'a dyn Fn(Point) -> f64,
        g: &'a dyn Fn(Point) -> f64,
    },
    /// `int |grad u|^2/2 + f u`
    Dirichlet { f: &'a dyn Fn(Point) -> f64 },
}

impl FeFunction {
    pub fn zeros(space: Arc<FeSpace>) -> Self {
        let n = space.ndof();
        Self {
            space,
            coeffs: vec![0.0; n],
        }
    }

    pub fn from_coeffs(space: Arc<FeSpace>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != space.ndof() {
            return Err(Error::InvalidInput(format!(
                "coefficient count {} does not match {} dofs",
                coeffs.len(),
                space.ndof()
            )));
        }
        Ok(Self { space, coeffs })
    }

    /// Nodal interpolant of `f`.
    pub fn interpolate(space: Arc<FeSpace>, f: impl Fn(Point) -> f64) -> Self {
        let coeffs = space.nodes().iter().map(|&p| f(p)).collect();
        Self { space, coeffs }
    }

    fn same_space(&self, other: &FeFunction) -> Result<()> {
        if Arc::ptr_eq(&self.space, &other.space) {
            Ok(())
        } else {
            Err(Error::InvalidInput(
                "functions live on different spaces".into(),
            ))
        }
    }

    /// `self + alpha * other`.
    pub fn axpy(&self, alpha: f64, other: &FeFunction) -> Result<FeFunction> {
        self.same_space(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a + alpha * b)
            .collect();
        Ok(FeFunction {
            space: self.space.clone(),
            coeffs,
        })
    }

    pub fn scaled(&self, alpha: f64) -> FeFunction {
        FeFunction {
            space: self.space.clone(),
            coeffs: self.coeffs.iter().map(|c| alpha * c).collect(),
        }
    }

    /// Value and gradient at `p`.
    pub fn eval_with_grad(&self, p: Point) -> Result<(f64, [f64; 2])> {
        let (t, l) = self.space.locate(p)?;
        let geo = self.space.geometry(t);
        let mut val = [0.0; 6];
        let mut grad = [[0.0; 2]; 6];
        super::space::local_basis(
            self.space.degree(),
            l,
            &geo.grad_lambda,
            &mut val,
            &mut grad,
        );
        let (mut v, mut g) = (0.0, [0.0; 2]);
        for (a, &d) in self.space.element_dofs(t).iter().enumerate() {
            let c = self.coeffs[d];
            v += c * val[a];
            g[0] += c * grad[a][0];
            g[1] += c * grad[a][1];
        }
        Ok((v, g))
    }

    pub fn eval(&self, p: Point) -> Result<f64> {
        self.eval_with_grad(p).map(|(v, _)| v)
    }

    /// Like [`FeFunction::eval_with_grad`], but points outside the mesh are moved to the
    /// nearest boundary point first (useful for curved domains approximated by polygons).
    pub fn eval_with_grad_nearest(&self, p: Point) -> (f64, [f64; 2]) {
        match self.eval_with_grad(p) {
            Ok(v) => v,
            Err(_) => {
                let q = self.space.nearest_boundary_point(p);
                self.eval_with_grad(q).unwrap_or((f64::NAN, [f64::NAN; 2]))
            }
        }
    }

    /// Samples on the semicircle of radius `r` around a flat junction, at the midpoint
    /// angles `theta_k = pi (k + 1/2) / n`; returns `(theta_k, u)` pairs.
    pub fn semicircle_trace(
        &self,
        frame: &JunctionFrame,
        r: f64,
        n: usize,
    ) -> Result<Vec<(f64, f64)>> {
        (0..n)
            .map(|k| {
                let t = PI * (k as f64 + 0.5) / n as f64;
                self.eval(frame.point(r, t)).map(|v| (t, v))
            })
            .collect()
    }

    pub fn norm(&self, kind: NormKind) -> f64 {
        self.norm_sq(kind).sqrt()
    }

    pub fn norm_sq(&self, kind: NormKind) -> f64 {
        match kind {
            NormKind::L2Domain => self.domain_integral(|_, v, _| v * v),
            NormKind::H1Semi => self.domain_integral(|_, _, g| g[0] * g[0] + g[1] * g[1]),
            NormKind::L2Boundary(tag) => self.boundary_integral(tag, |_, v| v * v),
        }
    }

    /// `int F(x, u, grad u)` with the seven-point rule.
    pub fn domain_integral(&self, mut f: impl FnMut(Point, f64, [f64; 2]) -> f64) -> f64 {
        let mut total = 0.0;
        self.space.for_each_qp(&TRI7, |_, x, w, v, g, dofs| {
            let (mut u, mut gu) = (0.0, [0.0; 2]);
            for (a, &d) in dofs.iter().enumerate() {
                let c = self.coeffs[d];
                u += c * v[a];
                gu[0] += c * g[a][0];
                gu[1] += c * g[a][1];
            }
            total += w * f(x, u, gu);
        });
        total
    }

    /// `int_{tag} F(x, u)` with Gauss-Legendre on every edge.
    pub fn boundary_integral(&self, tag: BoundaryTag, mut f: impl FnMut(Point, f64) -> f64) -> f64 {
        let rule = GaussLegendre::new(EDGE_POINTS);
        let mut total = 0.0;
        self.space
            .for_each_boundary_qp(tag, &rule, |_, x, w, v, dofs| {
                let u: f64 = dofs.iter().zip(v).map(|(&d, p)| self.coeffs[d] * p).sum();
                total += w * f(x, u);
            });
        total
    }

    /// `|| u - exact ||_{L2(Omega)}`.
    pub fn l2_error(&self, exact: impl Fn(Point) -> f64) -> f64 {
        self.domain_integral(|x, u, _| (u - exact(x)).powi(2))
            .sqrt()
    }

    /// `|| grad (u - exact) ||_{L2(Omega)}` given the exact gradient.
    pub fn h1_semi_error(&self, exact_grad: impl Fn(Point) -> [f64; 2]) -> f64 {
        self.domain_integral(|x, _, g| {
            let e = exact_grad(x);
            (g[0] - e[0]).powi(2) + (g[1] - e[1]).powi(2)
        })
        .sqrt()
    }

    /// `|| u - exact ||_{L2(tag)}`.
    pub fn boundary_l2_error(&self, tag: BoundaryTag, exact: impl Fn(Point) -> f64) -> f64 {
        self.boundary_integral(tag, |x, u| (u - exact(x)).powi(2))
            .sqrt()
    }

    /// Serialises as `gammafun 1`, dof count, mesh reference, one coefficient per line.
    pub fn to_text(&self, mesh_file: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "gammafun 1");
        let _ = writeln!(s, "{}", self.coeffs.len());
        let _ = writeln!(s, "mesh {mesh_file}");
        for c in &self.coeffs {
            let _ = writeln!(s, "{c:.17e}");
        }
        s
    }

    pub fn write(&self, path: &Path, mesh_file: &str) -> Result<()> {
        std::fs::write(path, self.to_text(mesh_file))
            .map_err(|e| Error::io(path.display().to_string(), e))
    }

    /// Parses the text format; returns the function and its mesh reference.
    pub fn from_text(space: Arc<FeSpace>, text: &str) -> Result<(Self, String)> {
        let mut lines = text.lines().enumerate();
        let mut next = || {
            lines.next().ok_or(Error::Parse {
                line: 0,
                message: "unexpected end of file".into(),
            })
        };
        let (i, l) = next()?;
        if l.trim() != "gammafun 1" {
            return Err(Error::Parse {
                line: i + 1,
                message: "expected header 'gammafun 1'".into(),
            });
        }
        let (i, l) = next()?;
        let n: usize = l.trim().parse().map_err(|_| Error::Parse {
            line: i + 1,
            message: "bad dof count".into(),
        })?;
        let (i, l) = next()?;
        let mesh = l
            .trim()
            .strip_prefix("mesh ")
            .ok_or(Error::Parse {
                line: i + 1,
                message: "expected 'mesh <file>'".into(),
            })?
            .to_string();
        let mut coeffs = Vec::with_capacity(n);
        for _ in 0..n {
            let (i, l) = next()?;
            coeffs.push(l.trim().parse().map_err(|_| Error::Parse {
                line: i + 1,
                message: "bad coefficient".into(),
            })?);
        }
        Ok((Self::from_coeffs(space, coeffs)?, mesh))
    }

    pub fn read(space: Arc<FeSpace>, path: &Path) -> Result<(Self, String)> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::from_text(space, &text)
    }
}

impl BoundaryTrace {
    pub fn l2_norm_sq(&self) -> f64 {
        FeFunction {
            space: self.space.clone(),
            coeffs: self.coeffs.clone(),
        }
        .norm_sq(NormKind::L2Boundary(self.tag))
    }

    /// Value on boundary edge `k` at parameter `s`.
    pub fn edge_value(&self, k: usize, s: f64) -> f64 {
        self.space.edge_value(&self.coeffs, k, s)
    }

    /// `int_{tag} trace * v`.
    pub fn pair_with(&self, v: &FeFunction) -> f64 {
        let rule = GaussLegendre::new(EDGE_POINTS);
        let mut total = 0.0;
        self.space
            .for_each_boundary_qp(self.tag, &rule, |_, _, w, phi, dofs| {
                let (mut a, mut b) = (0.0, 0.0);
                for (&d, p) in dofs.iter().zip(phi) {
                    a += self.coeffs[d] * p;
                    b += v.coeffs[d] * p;
                }
                total += w * a * b;
            });
        total
    }

    /// The trace as a function on the whole space (zero off the boundary part).
    pub fn as_function(&self) -> FeFunction {
        FeFunction {
            space: self.space.clone(),
            coeffs: self.coeffs.clone(),
        }
    }
}

/// Energy of `u` under `model`.
pub fn energy(u: &FeFunction, model: EnergyModel<'_>) -> f64 {
    match model {
        EnergyModel::Dirichlet { f } => {
            u.domain_integral(|x, v, g| 0.5 * (g[0] * g[0] + g[1] * g[1]) + f(x) * v)
        }
        EnergyModel::Robin { eps, f, g } => {
            energy(u, EnergyModel::Dirichlet { f })
                + 0.5 / eps
                    * u.boundary_integral(BoundaryTag::RobinDirichlet, |x, v| (v - g(x)).powi(2))
        }
    }
}

/// Discrete normal derivative of `u` on the boundary part `tag`: the trace `lambda` with
/// `int_{tag} lambda phi_i = int grad u . grad phi_i + int f phi_i` for all dofs `i` on
/// the closure of `tag`.
pub fn consistent_flux(
    u: &FeFunction,
    f: &dyn Fn(Point) -> f64,
    tag: BoundaryTag,
) -> Result<BoundaryTrace> {
    let k = assemble(&u.space, Form::Stiffness);
    let mut r = k.matvec(&u.coeffs);
    for (ri, bi) in r.iter_mut().zip(load_domain(&u.space, f)) {
        *ri += bi;
    }
    consistent_flux_from_residual(&u.space, &r, tag)
}

/// Solves `int_{tag} lambda phi_i = residual_i` over the dofs on the closure of `tag`.
pub fn consistent_flux_from_residual(
    space: &Arc<FeSpace>,
    residual: &[f64],
    tag: BoundaryTag,
) -> Result<BoundaryTrace> {
    let dofs = space.boundary_dofs(tag);
    let mut coeffs = vec![0.0; space.ndof()];
    if !dofs.is_empty() {
        let m = assemble(space, Form::BoundaryMass(tag)).submatrix(&dofs);
        let rhs: Vec<f64> = dofs.iter().map(|&i| residual[i]).collect();
        let lam = cg_solve(&m, &rhs, &SolveOptions::with_tol(1e-14))?.x;
        for (&i, l) in dofs.iter().zip(lam) {
            coeffs[i] = l;
        }
    }
    Ok(BoundaryTrace {
        space: space.clone(),
        tag,
        coeffs,
    })
}
