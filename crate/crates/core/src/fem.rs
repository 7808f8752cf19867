//! P1 Lagrange discretization with homogeneous Dirichlet conditions.
//!
//! All vectors and matrices returned here are indexed by free dofs, i.e. the
//! interior vertices of the mesh in increasing vertex order.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::SparseMatrix;
use crate::mesh::{ElementGeometry, Mesh, Point};
use crate::problem::{DiffusionKind, ProblemSpec};
use crate::quadrature::{triangle_deg5, TRIANGLE_DEG4};

/// A continuous piecewise-linear function given by its vertex values.
#[derive(Debug, Clone)]
pub struct P1Function {
    mesh: Arc<Mesh>,
    coeffs: Vec<f64>,
}

impl P1Function {
    pub fn new(mesh: Arc<Mesh>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != mesh.num_vertices() {
            return Err(Error::DimensionMismatch {
                expected: mesh.num_vertices(),
                found: coeffs.len(),
            });
        }
        Ok(Self { mesh, coeffs })
    }

    pub fn zeros(mesh: Arc<Mesh>) -> Self {
        let n = mesh.num_vertices();
        Self {
            mesh,
            coeffs: vec![0.0; n],
        }
    }

    /// Expands a free-dof vector, setting boundary values to zero.
    pub fn from_free(mesh: Arc<Mesh>, free: &[f64]) -> Result<Self> {
        if free.len() != mesh.num_free_dofs() {
            return Err(Error::DimensionMismatch {
                expected: mesh.num_free_dofs(),
                found: free.len(),
            });
        }
        let mut coeffs = vec![0.0; mesh.num_vertices()];
        for (&v, &x) in mesh.free_dofs().iter().zip(free) {
            coeffs[v] = x;
        }
        Ok(Self { mesh, coeffs })
    }

    /// Nodal interpolant of `f` (boundary values are taken from `f` as well).
    pub fn interpolate(mesh: Arc<Mesh>, f: impl Fn(f64, f64) -> f64) -> Self {
        let coeffs = mesh.vertices().iter().map(|p| f(p[0], p[1])).collect();
        Self { mesh, coeffs }
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn free_values(&self) -> Vec<f64> {
        self.mesh.free_dofs().iter().map(|&v| self.coeffs[v]).collect()
    }

    /// Adds a free-dof increment in place.
    pub fn add_free(&mut self, w: &[f64]) {
        assert_eq!(w.len(), self.mesh.num_free_dofs());
        for (&v, &x) in self.mesh.free_dofs().iter().zip(w) {
            self.coeffs[v] += x;
        }
    }

    pub fn element_values(&self, t: usize) -> [f64; 3] {
        self.mesh.triangles()[t].map(|v| self.coeffs[v])
    }

    /// Value at a point of the domain, `None` outside.
    pub fn eval(&self, p: Point) -> Option<f64> {
        let (t, bary) = self.mesh.locate(p)?;
        let vals = self.element_values(t);
        Some(bary.iter().zip(vals).map(|(l, v)| l * v).sum())
    }
}

/// Residual pieces assembled at one iterate: `g(u)`, the load, `g'(u)` and
/// the Laplacian, all on free dofs.
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub g_vec: Vec<f64>,
    pub f_vec: Vec<f64>,
    pub jac: SparseMatrix,
    pub lap: SparseMatrix,
}

impl AssembledSystem {
    pub fn new(u: &P1Function, problem: &ProblemSpec) -> Result<Self> {
        let (g_vec, jac) = assemble_g_and_jacobian(u, problem)?;
        Ok(Self {
            g_vec,
            f_vec: assemble_load(problem, u.mesh())?,
            jac,
            lap: assemble_laplacian(u.mesh()),
        })
    }
}

/// `r = -g + delta f`.
pub fn residual(delta: f64, sys: &AssembledSystem) -> Vec<f64> {
    residual_from(delta, &sys.g_vec, &sys.f_vec)
}

pub fn residual_from(delta: f64, g: &[f64], f: &[f64]) -> Vec<f64> {
    g.iter().zip(f).map(|(g, f)| -g + delta * f).collect()
}

/// Zero matrix on free dofs with the vertex-adjacency pattern.
pub fn free_pattern(mesh: &Mesh) -> SparseMatrix {
    let mut rows = vec![Vec::new(); mesh.num_free_dofs()];
    for tri in mesh.triangles() {
        for &a in tri {
            if let Some(i) = mesh.dof(a) {
                rows[i].extend(tri.iter().filter_map(|&b| mesh.dof(b)));
            }
        }
    }
    SparseMatrix::from_pattern(&rows)
}

/// Local stiffness `(grad phi_i, grad phi_j)_T`.
pub fn element_laplacian(geom: &ElementGeometry) -> [[f64; 3]; 3] {
    let mut k = [[0.0; 3]; 3];
    for (i, row) in k.iter_mut().enumerate() {
        for (j, kij) in row.iter_mut().enumerate() {
            let (a, b) = (geom.grads[i], geom.grads[j]);
            *kij = geom.area * (a[0] * b[0] + a[1] * b[1]);
        }
    }
    k
}

/// Laplacian stiffness on free dofs.
pub fn assemble_laplacian(mesh: &Mesh) -> SparseMatrix {
    let mut a = free_pattern(mesh);
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let k = element_laplacian(&mesh.geometry(t));
        for (li, &vi) in tri.iter().enumerate() {
            let Some(i) = mesh.dof(vi) else { continue };
            for (lj, &vj) in tri.iter().enumerate() {
                if let Some(j) = mesh.dof(vj) {
                    a.add(i, j, k[li][lj]);
                }
            }
        }
    }
    a
}

/// Laplacian stiffness over all vertices, before boundary elimination.
pub fn assemble_full_laplacian(mesh: &Mesh) -> SparseMatrix {
    let mut trips = Vec::with_capacity(9 * mesh.num_triangles());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let k = element_laplacian(&mesh.geometry(t));
        for li in 0..3 {
            for lj in 0..3 {
                trips.push((tri[li], tri[lj], k[li][lj]));
            }
        }
    }
    SparseMatrix::from_triplets(mesh.num_vertices(), &trips)
}

/// Load vector `(f, phi_i)` on free dofs.
pub fn assemble_load(problem: &ProblemSpec, mesh: &Mesh) -> Result<Vec<f64>> {
    let mut load = vec![0.0; mesh.num_free_dofs()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let geom = mesh.geometry(t);
        let mut local = [0.0; 3];
        for q in &TRIANGLE_DEG4 {
            let p = geom.point(q.bary);
            let f = (problem.source)(p[0], p[1]);
            if !f.is_finite() {
                return Err(Error::NonFinite {
                    what: "source",
                    element: t,
                });
            }
            for (l, b) in local.iter_mut().zip(q.bary) {
                *l += q.weight * geom.area * f * b;
            }
        }
        for (l, &v) in local.iter().zip(tri) {
            if let Some(i) = mesh.dof(v) {
                load[i] += l;
            }
        }
    }
    Ok(load)
}

fn checked_kappa(problem: &ProblemSpec, s: f64, element: usize) -> Result<(f64, f64)> {
    let k = (problem.kappa)(s);
    let dk = (problem.dkappa)(s);
    if !k.is_finite() {
        return Err(Error::NonFinite {
            what: "kappa",
            element,
        });
    }
    if !dk.is_finite() {
        return Err(Error::NonFinite {
            what: "kappa derivative",
            element,
        });
    }
    if k < problem.kappa_min {
        return Err(Error::KappaTooSmall {
            element,
            value: k,
            min: problem.kappa_min,
        });
    }
    Ok((k, dk))
}

fn dot2(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Element contributions to `g` and `g'` for nodal values `vals`.
fn element_kernel(
    problem: &ProblemSpec,
    geom: &ElementGeometry,
    vals: [f64; 3],
    element: usize,
    with_jacobian: bool,
) -> Result<([f64; 3], [[f64; 3]; 3])> {
    let grad = geom.gradient(vals);
    let gdot: [f64; 3] = geom.grads.map(|g| dot2(grad, g));
    let mut g = [0.0; 3];
    let mut jac = [[0.0; 3]; 3];
    match problem.kind {
        DiffusionKind::SolutionDependent => {
            // kappa averaged with the quadrature weights, and the kappa'
            // moments against each barycentric coordinate
            let mut kbar = 0.0;
            let mut dk_moment = [0.0; 3];
            for q in &TRIANGLE_DEG4 {
                let uq: f64 = q.bary.iter().zip(vals).map(|(b, v)| b * v).sum();
                let (k, dk) = checked_kappa(problem, uq, element)?;
                kbar += q.weight * k;
                for (m, b) in dk_moment.iter_mut().zip(q.bary) {
                    *m += q.weight * dk * b;
                }
            }
            for i in 0..3 {
                g[i] = geom.area * kbar * gdot[i];
                if with_jacobian {
                    for j in 0..3 {
                        jac[i][j] = geom.area
                            * (kbar * dot2(geom.grads[i], geom.grads[j]) + dk_moment[j] * gdot[i]);
                    }
                }
            }
        }
        DiffusionKind::GradientDependent => {
            let (k, dk) = checked_kappa(problem, dot2(grad, grad), element)?;
            for i in 0..3 {
                g[i] = geom.area * k * gdot[i];
                if with_jacobian {
                    for j in 0..3 {
                        jac[i][j] = geom.area
                            * (k * dot2(geom.grads[i], geom.grads[j]) + 2.0 * dk * gdot[i] * gdot[j]);
                    }
                }
            }
        }
    }
    Ok((g, jac))
}

fn assemble_nonlinear(
    u: &P1Function,
    problem: &ProblemSpec,
    with_jacobian: bool,
) -> Result<(Vec<f64>, Option<SparseMatrix>)> {
    let mesh = u.mesh();
    let mut g = vec![0.0; mesh.num_free_dofs()];
    let mut jac = with_jacobian.then(|| free_pattern(mesh));
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let geom = mesh.geometry(t);
        let (gl, jl) = element_kernel(problem, &geom, u.element_values(t), t, with_jacobian)?;
        for (li, &vi) in tri.iter().enumerate() {
            let Some(i) = mesh.dof(vi) else { continue };
            g[i] += gl[li];
            if let Some(jac) = jac.as_mut() {
                for (lj, &vj) in tri.iter().enumerate() {
                    if let Some(j) = mesh.dof(vj) {
                        jac.add(i, j, jl[li][lj]);
                    }
                }
            }
        }
    }
    Ok((g, jac))
}

/// `g(u)_i = (kappa(.) grad u, grad phi_i)` on free dofs.
pub fn assemble_g(u: &P1Function, problem: &ProblemSpec) -> Result<Vec<f64>> {
    Ok(assemble_nonlinear(u, problem, false)?.0)
}

/// Gateaux derivative `g'(u)` on free dofs.
pub fn assemble_jacobian(u: &P1Function, problem: &ProblemSpec) -> Result<SparseMatrix> {
    Ok(assemble_nonlinear(u, problem, true)?.1.expect("jacobian requested"))
}

pub fn assemble_g_and_jacobian(u: &P1Function, problem: &ProblemSpec) -> Result<(Vec<f64>, SparseMatrix)> {
    let (g, j) = assemble_nonlinear(u, problem, true)?;
    Ok((g, j.expect("jacobian requested")))
}

/// `(|u - u_h|_0, |u - u_h|_1)` against the problem's exact solution.
pub fn error_norms(u: &P1Function, problem: &ProblemSpec) -> Result<(f64, f64)> {
    let exact = problem.exact.as_ref().ok_or(Error::MissingExactSolution)?;
    let rule = triangle_deg5();
    let mesh = u.mesh();
    let (mut l2, mut h1) = (0.0, 0.0);
    for t in 0..mesh.num_triangles() {
        let geom = mesh.geometry(t);
        let vals = u.element_values(t);
        let grad_h = geom.gradient(vals);
        for q in &rule {
            let p = geom.point(q.bary);
            let uh: f64 = q.bary.iter().zip(vals).map(|(b, v)| b * v).sum();
            let e = (exact.value)(p[0], p[1]) - uh;
            let ge = (exact.gradient)(p[0], p[1]);
            let w = q.weight * geom.area;
            l2 += w * e * e;
            h1 += w * ((ge[0] - grad_h[0]).powi(2) + (ge[1] - grad_h[1]).powi(2));
        }
    }
    Ok((l2.sqrt(), h1.sqrt()))
}
