//! Symmetric interior-penalty DG discretization (k = 1) with
//! coefficient-weighted averages, plus the DG-side recovery entry points.
//!
//! The penalty is gamma * (alpha_H / h_F) with alpha_H the harmonic average
//! of the smaller eigenvalues across the edge; averages use the weights
//! omega^{-+} = lambda^{+-} / (lambda^- + lambda^+). Dirichlet data enters
//! through Nitsche terms, so the recovered flux stays exactly equilibrated.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::coeff::{edge_weights, Coefficient};
use crate::mesh::{EdgeKind, Mesh};
use crate::ncfem::ProblemData;
use crate::poly::{ElemPoly, Frame};
use crate::quad::{quad_edge, quad_tri, MAX_DEGREE};
use crate::recovery::{recover_gradient_from, NEField};
use crate::sparse::{pcg, CgOptions, Csr, Triplets};
use crate::{FemError, Result};

pub const DG_ORDER: usize = 1;
/// Default SIPG penalty factor gamma.
pub const DEFAULT_GAMMA: f64 = 10.0;
const DOFS_PER_ELEM: usize = 3;

/// Fully discontinuous P1 space: three local monomial coefficients per
/// element, no interelement constraints.
#[derive(Debug, Clone, Copy)]
pub struct DGSpace {
    pub n_elems: usize,
}

impl DGSpace {
    pub fn new(mesh: &Mesh, k: usize) -> Result<DGSpace> {
        if k != DG_ORDER {
            return Err(FemError::UnsupportedOrder {
                k,
                reason: "the interior-penalty DG path is implemented for k = 1",
            });
        }
        Ok(DGSpace {
            n_elems: mesh.n_triangles(),
        })
    }

    pub fn n_dofs(&self) -> usize {
        DOFS_PER_ELEM * self.n_elems
    }

    pub fn dof(&self, elem: usize, j: usize) -> usize {
        DOFS_PER_ELEM * elem + j
    }
}

/// Local monomial basis {1, xi, eta} of P1(K) in the element frame.
fn p1_basis(frame: Frame) -> [ElemPoly; 3] {
    std::array::from_fn(|j| {
        let mut p = ElemPoly::zero(frame, 1);
        p.coeffs[j] = 1.0;
        p
    })
}

pub struct DGSystem {
    pub space: DGSpace,
    pub mat: Csr,
    pub rhs: Vec<f64>,
    pub gamma: f64,
}

pub fn assemble_sipg(
    mesh: &Mesh,
    coeff: &Coefficient,
    data: &ProblemData,
    gamma: f64,
) -> Result<DGSystem> {
    assert!(gamma > 0.0, "penalty parameter must be positive");
    if !mesh.has_dirichlet_boundary() {
        return Err(FemError::EmptyDirichletBoundary);
    }
    let space = DGSpace::new(mesh, DG_ORDER)?;
    let k = DG_ORDER;
    let tq = quad_tri(2 * k + 2)?;
    let eq = quad_edge(2 * k + 2)?;
    let eq_data = quad_edge((2 * k + 10).min(MAX_DEGREE))?;
    let mut trip = Triplets::new(space.n_dofs());
    let mut rhs = vec![0.0; space.n_dofs()];

    // volume terms and load, element-parallel
    let frames: Vec<Frame> = (0..mesh.n_triangles())
        .map(|e| Frame::of_triangle(&mesh.tri_vertices(e)))
        .collect();
    let locals: Vec<([[f64; 3]; 3], [f64; 3])> = (0..mesh.n_triangles())
        .into_par_iter()
        .map(|elem| {
            let v = mesh.tri_vertices(elem);
            let basis = p1_basis(frames[elem]);
            let a = coeff.on_element(mesh, elem);
            let (pts, wts) = tq.mapped(&v);
            let mut mat = [[0.0; 3]; 3];
            let mut load = [0.0; 3];
            let area = mesh.area(elem);
            let c = mesh.centroid(elem);
            for i in 0..3 {
                let gi = basis[i].grad(c);
                for j in 0..3 {
                    let gj = basis[j].grad(c);
                    mat[i][j] = area * a.bilinear(gi, gj);
                }
            }
            for (&p, &w) in pts.iter().zip(&wts) {
                let fv = (data.f)(p);
                for (i, b) in basis.iter().enumerate() {
                    load[i] += w * fv * b.eval(p);
                }
            }
            (mat, load)
        })
        .collect();
    for (elem, (m, l)) in locals.into_iter().enumerate() {
        for i in 0..3 {
            rhs[space.dof(elem, i)] += l[i];
            for j in 0..3 {
                trip.push(space.dof(elem, i), space.dof(elem, j), m[i][j]);
            }
        }
    }

    // edge terms
    for fid in 0..mesh.n_edges() {
        let kind = mesh.edge_kind[fid];
        let (km, kp) = mesh.elements_of_edge[fid];
        let h = mesh.edge_len(fid);
        let n = mesh.edge_normal(fid);
        let w_edge = edge_weights(mesh, coeff, fid);
        let pen = gamma * w_edge.alpha_h / h;
        match kind {
            EdgeKind::Neumann => {
                // only the load term -<g, v>
                let (pts, wts) = eq.mapped(mesh.edge_start(fid), mesh.edge_end(fid));
                let basis = p1_basis(frames[km]);
                for (&p, &w) in pts.iter().zip(&wts) {
                    let gv = (data.g)(p);
                    for (i, b) in basis.iter().enumerate() {
                        rhs[space.dof(km, i)] -= w * gv * b.eval(p);
                    }
                }
            }
            EdgeKind::Interior => {
                let kp = kp.expect("interior edge has two elements");
                let (pts, wts) = eq.mapped(mesh.edge_start(fid), mesh.edge_end(fid));
                let bm = p1_basis(frames[km]);
                let bp = p1_basis(frames[kp]);
                let am = coeff.on_element(mesh, km);
                let ap = coeff.on_element(mesh, kp);
                // signed trace list: (global dof, jump sign, side tensor,
                // averaging weight, basis)
                let sides = [
                    (km, 1.0, am, w_edge.omega_minus, &bm),
                    (kp, -1.0, ap, w_edge.omega_plus, &bp),
                ];
                for (&p, &w) in pts.iter().zip(&wts) {
                    // per-dof jump values and weighted normal fluxes at p
                    let mut jump = [0.0; 6];
                    let mut flux = [0.0; 6];
                    let mut dofs = [0usize; 6];
                    for (s, &(elem, sign, a, om, basis)) in sides.iter().enumerate() {
                        for (i, b) in basis.iter().enumerate() {
                            let idx = 3 * s + i;
                            dofs[idx] = space.dof(elem, i);
                            jump[idx] = sign * b.eval(p);
                            let ag = a.apply(b.grad(p));
                            flux[idx] = om * (ag[0] * n[0] + ag[1] * n[1]);
                        }
                    }
                    for i in 0..6 {
                        for j in 0..6 {
                            let v = pen * jump[i] * jump[j]
                                - flux[i] * jump[j]
                                - flux[j] * jump[i];
                            trip.push(dofs[i], dofs[j], w * v);
                        }
                    }
                }
            }
            EdgeKind::Dirichlet => {
                let basis = p1_basis(frames[km]);
                let a = coeff.on_element(mesh, km);
                let (pts, wts) =
                    eq_data.mapped(mesh.edge_start(fid), mesh.edge_end(fid));
                for (&p, &w) in pts.iter().zip(&wts) {
                    let mut tr = [0.0; 3];
                    let mut flux = [0.0; 3];
                    for (i, b) in basis.iter().enumerate() {
                        tr[i] = b.eval(p);
                        let ag = a.apply(b.grad(p));
                        flux[i] = ag[0] * n[0] + ag[1] * n[1];
                    }
                    for i in 0..3 {
                        for j in 0..3 {
                            let v = pen * tr[i] * tr[j]
                                - flux[i] * tr[j]
                                - flux[j] * tr[i];
                            trip.push(space.dof(km, i), space.dof(km, j), w * v);
                        }
                    }
                    // Nitsche data terms: gamma(alpha_H/h)<u_D, v> - <A grad v . n, u_D>
                    let ud = (data.u_d)(p);
                    for i in 0..3 {
                        rhs[space.dof(km, i)] += w * (pen * tr[i] - flux[i]) * ud;
                    }
                }
            }
        }
    }

    Ok(DGSystem {
        space,
        mat: trip.to_csr(),
        rhs,
        gamma,
    })
}

pub struct DGSolution {
    pub k: usize,
    pub coeffs: Vec<f64>,
    pub per_elem: Vec<ElemPoly>,
    pub mesh_checksum: u64,
}

pub fn solve_dg(
    mesh: &Mesh,
    coeff: &Coefficient,
    data: &ProblemData,
    gamma: f64,
    opts: CgOptions,
) -> Result<DGSolution> {
    let sys = assemble_sipg(mesh, coeff, data, gamma)?;
    let coeffs = match pcg(&sys.mat, &sys.rhs, opts) {
        Ok((x, _)) => x,
        Err(FemError::NotSpd { reason }) => {
            return Err(FemError::NotSpd {
                reason: format!(
                    "{reason}; SIPG system with gamma = {gamma} is not coercive, \
                     increase the penalty parameter"
                ),
            })
        }
        Err(e) => return Err(e),
    };
    let per_elem: Vec<ElemPoly> = (0..mesh.n_triangles())
        .map(|elem| {
            let frame = Frame::of_triangle(&mesh.tri_vertices(elem));
            ElemPoly {
                frame,
                degree: DG_ORDER,
                coeffs: (0..DOFS_PER_ELEM)
                    .map(|j| coeffs[sys.space.dof(elem, j)])
                    .collect(),
            }
        })
        .collect();
    Ok(DGSolution {
        k: DG_ORDER,
        coeffs,
        per_elem,
        mesh_checksum: mesh.checksum(),
    })
}

impl DGSolution {
    /// Jump seminorm sum_F h_F^{-1} ||[u]||_{0,F}^2 over interior and
    /// Dirichlet edges (boundary jump = trace).
    pub fn jump_seminorm(&self, mesh: &Mesh) -> Result<f64> {
        let eq = quad_edge(2 * self.k + 2)?;
        let mut total = 0.0;
        for fid in 0..mesh.n_edges() {
            if mesh.edge_kind[fid] == EdgeKind::Neumann {
                continue;
            }
            let (km, kp) = mesh.elements_of_edge[fid];
            let (pts, wts) = eq.mapped(mesh.edge_start(fid), mesh.edge_end(fid));
            let mut acc = 0.0;
            for (&p, &w) in pts.iter().zip(&wts) {
                let jump = match kp {
                    Some(kp) => self.per_elem[km].eval(p) - self.per_elem[kp].eval(p),
                    None => self.per_elem[km].eval(p),
                };
                acc += w * jump * jump;
            }
            total += acc / mesh.edge_len(fid);
        }
        Ok(total)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "dgsol v1");
        let _ = writeln!(s, "checksum {:#018x}", self.mesh_checksum);
        let _ = writeln!(s, "k {}", self.k);
        let _ = writeln!(s, "dofs {}", self.coeffs.len());
        for c in &self.coeffs {
            let _ = writeln!(s, "{c:.17e}");
        }
        s
    }
}

/// Gradient recovery for a DG solution: same weighted-average construction
/// as for nonconforming solutions, applied to rho~ = grad_h u^dg.
pub fn recover_gradient_dg(
    mesh: &Mesh,
    coeff: &Coefficient,
    sol: &DGSolution,
    u_d: &(dyn Fn([f64; 2]) -> f64 + Sync),
) -> Result<NEField> {
    if sol.mesh_checksum != mesh.checksum() {
        return Err(FemError::ChecksumMismatch {
            expected: sol.mesh_checksum,
            got: mesh.checksum(),
        });
    }
    recover_gradient_from(mesh, coeff, &sol.per_elem, sol.k, u_d, sol.mesh_checksum)
}
