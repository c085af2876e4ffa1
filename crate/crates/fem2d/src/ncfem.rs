//! Odd-order nonconforming finite elements (k = 1 Crouzeix-Raviart, k = 3).
//!
//! Degrees of freedom are normalized edge moments
//! `N_{F,j}(v) = (1/||L_j||^2) int_F v L_{j,F} ds` for j < k, plus (k = 3)
//! one interior moment `int_K v dx`. The local dual basis is built
//! numerically per element; its traces reproduce the closed forms
//! (L_j on the own edge for even j, L_j - L_k for odd j) which the tests
//! use as oracles.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::coeff::Coefficient;
use crate::mesh::{EdgeKind, Mesh};
use crate::poly::{dim_p, monomials, ElemPoly, Frame};
use crate::quad::{edge_norm_sq, legendre, quad_edge, quad_tri};
use crate::sparse::{pcg, CgOptions, Csr, Triplets};
use crate::{FemError, Result};

/// Interior DOFs per element: 0 for k = 1, 1 (the constant moment) for k = 3.
pub fn m_k(k: usize) -> usize {
    if k == 3 {
        1
    } else {
        0
    }
}

pub(crate) fn check_order(k: usize) -> Result<()> {
    if k == 1 || k == 3 {
        Ok(())
    } else {
        Err(FemError::UnsupportedOrder {
            k,
            reason: "only the odd orders 1 and 3 are supported",
        })
    }
}

/// DOF layout: edge DOFs first (edge id major, moment minor), then interior
/// DOFs by element id.
#[derive(Debug, Clone)]
pub struct NCSpace {
    pub k: usize,
    pub n_edges: usize,
    pub n_elems: usize,
}

impl NCSpace {
    pub fn new(mesh: &Mesh, k: usize) -> Result<NCSpace> {
        check_order(k)?;
        Ok(NCSpace {
            k,
            n_edges: mesh.n_edges(),
            n_elems: mesh.n_triangles(),
        })
    }

    pub fn n_dofs(&self) -> usize {
        self.k * self.n_edges + m_k(self.k) * self.n_elems
    }

    pub fn edge_dof(&self, f: usize, j: usize) -> usize {
        debug_assert!(j < self.k);
        f * self.k + j
    }

    pub fn interior_dof(&self, elem: usize) -> usize {
        debug_assert_eq!(m_k(self.k), 1);
        self.k * self.n_edges + elem
    }

    /// Global ids of Dirichlet-constrained DOFs.
    pub fn dirichlet_dofs(&self, mesh: &Mesh) -> Vec<usize> {
        let mut out = Vec::new();
        for f in mesh.edges_of_kind(EdgeKind::Dirichlet) {
            for j in 0..self.k {
                out.push(self.edge_dof(f, j));
            }
        }
        out
    }
}

/// Dual basis of one element: polynomials ordered (local edge 0, j = 0..k),
/// (local edge 1, ...), (local edge 2, ...), then the interior function.
#[derive(Debug, Clone)]
pub struct ElementBasis {
    pub funcs: Vec<ElemPoly>,
    /// global DOF id per basis function, same order
    pub dofs: Vec<usize>,
}

/// Legendre parameter of a physical point on the stored edge f.
pub fn edge_param(mesh: &Mesh, f: usize, x: [f64; 2]) -> Result<f64> {
    let s = mesh.edge_start(f);
    let t = mesh.edge_tangent(f);
    let h = mesh.edge_len(f);
    let along = (x[0] - s[0]) * t[0] + (x[1] - s[1]) * t[1];
    let perp = ((x[0] - s[0] - along * t[0]).powi(2)
        + (x[1] - s[1] - along * t[1]).powi(2))
    .sqrt();
    if perp > 1e-9 * h || !(-1e-9 * h..=h * (1.0 + 1e-9)).contains(&along) {
        return Err(FemError::PointOffEdge {
            edge: f,
            x: x[0],
            y: x[1],
            dist: perp,
        });
    }
    Ok(2.0 * along / h - 1.0)
}

/// L_{j,F} at a physical point on edge f.
pub fn legendre_edge_eval(mesh: &Mesh, j: usize, f: usize, x: [f64; 2]) -> Result<f64> {
    Ok(legendre(j, edge_param(mesh, f, x)?))
}

/// Rows of the local DOF functionals applied to the monomial basis of
/// P_k(K), plus the matching global DOF ids.
fn dof_matrix(
    mesh: &Mesh,
    space: &NCSpace,
    elem: usize,
) -> Result<(DMatrix<f64>, Vec<usize>, Frame)> {
    let k = space.k;
    let n = dim_p(k);
    let v = mesh.tri_vertices(elem);
    let frame = Frame::of_triangle(&v);
    let mons = monomials(k);
    let n_local = 3 * k + m_k(k);
    let mut d = DMatrix::zeros(n_local, n);
    let mut dofs = Vec::with_capacity(n_local);
    let eq = quad_edge(2 * k)?;
    for le in 0..3 {
        let f = mesh.edge_of_triangle[elem][le];
        let h = mesh.edge_len(f);
        let (pts, wts) = eq.mapped(mesh.edge_start(f), mesh.edge_end(f));
        for j in 0..k {
            let row = le * k + j;
            let norm = edge_norm_sq(j, h);
            for ((&p, &w), &s) in pts.iter().zip(&wts).zip(&eq.nodes) {
                let [xi, eta] = frame.local(p);
                let lj = legendre(j, s);
                for (i, &(a, b)) in mons.iter().enumerate() {
                    d[(row, i)] += w * lj * xi.powi(a as i32) * eta.powi(b as i32) / norm;
                }
            }
            dofs.push(space.edge_dof(f, j));
        }
    }
    if m_k(k) == 1 {
        let tq = quad_tri(k)?;
        let (pts, wts) = tq.mapped(&v);
        let row = 3 * k;
        for (&p, &w) in pts.iter().zip(&wts) {
            let [xi, eta] = frame.local(p);
            for (i, &(a, b)) in mons.iter().enumerate() {
                d[(row, i)] += w * xi.powi(a as i32) * eta.powi(b as i32);
            }
        }
        dofs.push(space.interior_dof(elem));
    }
    Ok((d, dofs, frame))
}

/// Dual basis of the local DOF functionals on one element.
pub fn local_basis(mesh: &Mesh, space: &NCSpace, elem: usize) -> Result<ElementBasis> {
    let (d, dofs, frame) = dof_matrix(mesh, space, elem)?;
    let n = d.nrows();
    let inv = d.lu().solve(&DMatrix::identity(n, n)).ok_or(
        FemError::SingularLocalSystem {
            element: elem,
            reason: "nonconforming DOF matrix",
        },
    )?;
    // column beta of inv holds the monomial coefficients of basis beta
    let funcs = (0..n)
        .map(|beta| ElemPoly {
            frame,
            degree: space.k,
            coeffs: inv.column(beta).as_slice().to_vec(),
        })
        .collect();
    Ok(ElementBasis { funcs, dofs })
}

/// Problem data handed to assembly. `g` is only consulted on Neumann edges,
/// `u_d` only on Dirichlet edges.
pub struct ProblemData<'a> {
    pub f: &'a (dyn Fn([f64; 2]) -> f64 + Sync),
    pub g: &'a (dyn Fn([f64; 2]) -> f64 + Sync),
    pub u_d: &'a (dyn Fn([f64; 2]) -> f64 + Sync),
}

/// Dirichlet DOF values from the boundary-data moments.
pub fn dirichlet_values(
    mesh: &Mesh,
    space: &NCSpace,
    u_d: &(dyn Fn([f64; 2]) -> f64 + Sync),
) -> Result<Vec<(usize, f64)>> {
    let k = space.k;
    let eq = quad_edge((2 * k + 10).min(crate::quad::MAX_DEGREE))?;
    let mut out = Vec::new();
    for f in mesh.edges_of_kind(EdgeKind::Dirichlet) {
        let h = mesh.edge_len(f);
        let (pts, wts) = eq.mapped(mesh.edge_start(f), mesh.edge_end(f));
        for j in 0..k {
            let norm = edge_norm_sq(j, h);
            let mut m = 0.0;
            for ((&p, &w), &s) in pts.iter().zip(&wts).zip(&eq.nodes) {
                m += w * u_d(p) * legendre(j, s) / norm;
            }
            out.push((space.edge_dof(f, j), m));
        }
    }
    Ok(out)
}

struct LocalContribution {
    dofs: Vec<usize>,
    mat: DMatrix<f64>,
    rhs: Vec<f64>,
}

fn local_system(
    mesh: &Mesh,
    coeff: &Coefficient,
    data: &ProblemData,
    space: &NCSpace,
    basis: &ElementBasis,
    elem: usize,
) -> Result<LocalContribution> {
    let k = space.k;
    let n = basis.funcs.len();
    let v = mesh.tri_vertices(elem);
    let a = coeff.on_element(mesh, elem);
    let tq = quad_tri(2 * k + 2)?;
    let (pts, wts) = tq.mapped(&v);
    let mut mat = DMatrix::zeros(n, n);
    let mut rhs = vec![0.0; n];
    for (&p, &w) in pts.iter().zip(&wts) {
        let grads: Vec<[f64; 2]> = basis.funcs.iter().map(|phi| phi.grad(p)).collect();
        let fv = (data.f)(p);
        for i in 0..n {
            rhs[i] += w * fv * basis.funcs[i].eval(p);
            let agi = a.apply(grads[i]);
            for j in 0..=i {
                let s = w * (agi[0] * grads[j][0] + agi[1] * grads[j][1]);
                mat[(i, j)] += s;
                if i != j {
                    mat[(j, i)] += s;
                }
            }
        }
    }
    // Neumann load -<g, phi>
    let eq = quad_edge(2 * k + 2)?;
    for le in 0..3 {
        let f = mesh.edge_of_triangle[elem][le];
        if mesh.edge_kind[f] != EdgeKind::Neumann {
            continue;
        }
        let (pts, wts) = eq.mapped(mesh.edge_start(f), mesh.edge_end(f));
        for (&p, &w) in pts.iter().zip(&wts) {
            let gv = (data.g)(p);
            for i in 0..n {
                rhs[i] -= w * gv * basis.funcs[i].eval(p);
            }
        }
    }
    Ok(LocalContribution {
        dofs: basis.dofs.clone(),
        mat,
        rhs,
    })
}

/// Assembled global system with Dirichlet DOFs eliminated symmetrically:
/// constrained rows/columns are identity with the prescribed value on the
/// right side.
pub struct NCSystem {
    pub space: NCSpace,
    pub mat: Csr,
    pub rhs: Vec<f64>,
    pub bases: Vec<ElementBasis>,
    pub dirichlet: Vec<(usize, f64)>,
}

pub fn assemble(
    mesh: &Mesh,
    coeff: &Coefficient,
    data: &ProblemData,
    k: usize,
) -> Result<NCSystem> {
    let space = NCSpace::new(mesh, k)?;
    if !mesh.has_dirichlet_boundary() {
        return Err(FemError::EmptyDirichletBoundary);
    }
    let bases: Vec<ElementBasis> = (0..mesh.n_triangles())
        .into_par_iter()
        .map(|e| local_basis(mesh, &space, e))
        .collect::<Result<_>>()?;
    let locals: Vec<LocalContribution> = (0..mesh.n_triangles())
        .into_par_iter()
        .map(|e| local_system(mesh, coeff, data, &space, &bases[e], e))
        .collect::<Result<_>>()?;

    let n = space.n_dofs();
    let dirichlet = dirichlet_values(mesh, &space, data.u_d)?;
    let mut fixed = vec![f64::NAN; n];
    for &(d, v) in &dirichlet {
        fixed[d] = v;
    }
    let is_fixed = |d: usize| !fixed[d].is_nan();

    let mut trip = Triplets::new(n);
    let mut rhs = vec![0.0; n];
    for lc in &locals {
        let nd = lc.dofs.len();
        for i in 0..nd {
            let gi = lc.dofs[i];
            if is_fixed(gi) {
                continue;
            }
            rhs[gi] += lc.rhs[i];
            for j in 0..nd {
                let gj = lc.dofs[j];
                if is_fixed(gj) {
                    rhs[gi] -= lc.mat[(i, j)] * fixed[gj];
                } else {
                    trip.push(gi, gj, lc.mat[(i, j)]);
                }
            }
        }
    }
    for &(d, v) in &dirichlet {
        trip.push(d, d, 1.0);
        rhs[d] = v;
    }
    Ok(NCSystem {
        space,
        mat: trip.to_csr(),
        rhs,
        bases,
        dirichlet,
    })
}

/// Nonconforming solution with a per-element polynomial expansion.
pub struct NCSolution {
    pub k: usize,
    pub coeffs: Vec<f64>,
    pub per_elem: Vec<ElemPoly>,
    pub bases: Vec<ElementBasis>,
    pub mesh_checksum: u64,
}

/// Expand DOF coefficients into per-element polynomials.
pub fn expand(mesh: &Mesh, bases: &[ElementBasis], k: usize, coeffs: &[f64]) -> Vec<ElemPoly> {
    bases
        .iter()
        .enumerate()
        .map(|(e, basis)| {
            let v = mesh.tri_vertices(e);
            let mut p = ElemPoly::zero(Frame::of_triangle(&v), k);
            for (phi, &d) in basis.funcs.iter().zip(&basis.dofs) {
                p.axpy(coeffs[d], phi);
            }
            p
        })
        .collect()
}

pub fn solve(
    mesh: &Mesh,
    coeff: &Coefficient,
    data: &ProblemData,
    k: usize,
    opts: CgOptions,
) -> Result<NCSolution> {
    let sys = assemble(mesh, coeff, data, k)?;
    let (coeffs, _hist) = pcg(&sys.mat, &sys.rhs, opts)?;
    let per_elem = expand(mesh, &sys.bases, k, &coeffs);
    Ok(NCSolution {
        k,
        coeffs,
        per_elem,
        bases: sys.bases,
        mesh_checksum: mesh.checksum(),
    })
}

impl NCSolution {
    /// (value, gradient) of u_T at x in element `elem`.
    pub fn eval(&self, mesh: &Mesh, elem: usize, x: [f64; 2]) -> Result<(f64, [f64; 2])> {
        let v = mesh.tri_vertices(elem);
        // barycentric containment check
        let det = (v[1][0] - v[0][0]) * (v[2][1] - v[0][1])
            - (v[2][0] - v[0][0]) * (v[1][1] - v[0][1]);
        let l1 = ((x[0] - v[0][0]) * (v[2][1] - v[0][1])
            - (v[2][0] - v[0][0]) * (x[1] - v[0][1]))
            / det;
        let l2 = ((v[1][0] - v[0][0]) * (x[1] - v[0][1])
            - (x[0] - v[0][0]) * (v[1][1] - v[0][1]))
            / det;
        if l1 < -1e-9 || l2 < -1e-9 || l1 + l2 > 1.0 + 1e-9 {
            return Err(FemError::PointOutsideElement {
                element: elem,
                x: x[0],
                y: x[1],
            });
        }
        let p = &self.per_elem[elem];
        Ok((p.eval(x), p.grad(x)))
    }

    /// Numerical gradient rho~ = grad u_T on element `elem`.
    pub fn rho_tilde(&self, elem: usize, x: [f64; 2]) -> [f64; 2] {
        self.per_elem[elem].grad(x)
    }

    /// Numerical flux sigma~ = -A grad u_T on element `elem`.
    pub fn sigma_tilde(
        &self,
        mesh: &Mesh,
        coeff: &Coefficient,
        elem: usize,
        x: [f64; 2],
    ) -> [f64; 2] {
        let g = self.per_elem[elem].grad(x);
        let ag = coeff.on_element(mesh, elem).apply(g);
        [-ag[0], -ag[1]]
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "ncsol v1");
        let _ = writeln!(s, "checksum {:#018x}", self.mesh_checksum);
        let _ = writeln!(s, "k {}", self.k);
        let _ = writeln!(s, "dofs {}", self.coeffs.len());
        for c in &self.coeffs {
            let _ = writeln!(s, "{c:.17e}");
        }
        s
    }
}
