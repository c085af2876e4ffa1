//! Explicit equilibrated flux recovery into RT^{k-1} and weighted-average
//! gradient recovery into NE^{k-1}, plus H(div)/H(curl) conformity checkers.
//!
//! Edge moments are stored once per edge (unnormalized, against the global
//! edge orientation), so normal/tangential continuity holds by data layout;
//! the per-element expansion only has to reproduce the shared numbers.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::coeff::{edge_weights, Coefficient};
use crate::mesh::{EdgeKind, Mesh};
use crate::ncfem::NCSolution;
use crate::poly::{dim_p, monomials, ne_basis, rt_basis, ElemPoly, Frame, VecPoly};
use crate::quad::{legendre, quad_edge, quad_tri};
use crate::{FemError, Result};

/// H(div)-conforming recovered flux: shared edge moments
/// `int_F (sigma . n_F) L_i ds` plus the per-element RT expansion.
pub struct RTField {
    pub k: usize,
    pub edge_moments: Vec<Vec<f64>>,
    pub elems: Vec<VecPoly>,
    pub mesh_checksum: u64,
}

/// H(curl)-conforming recovered gradient: shared tangential edge moments
/// `S_{i,F} = int_F (rho . t_F) L_i ds` (weighted average) plus expansion.
pub struct NEField {
    pub k: usize,
    pub edge_moments: Vec<Vec<f64>>,
    pub elems: Vec<VecPoly>,
    pub mesh_checksum: u64,
}

/// Solve the per-element RT/NE DOF system for the expansion coefficients.
/// `normal` selects RT (normal moments) versus NE (tangential moments).
fn expand_element(
    mesh: &Mesh,
    elem: usize,
    k: usize,
    normal: bool,
    edge_moments: &[Vec<f64>],
    interior_rhs: Option<&DVector<f64>>,
) -> Result<VecPoly> {
    let m = k - 1;
    let v = mesh.tri_vertices(elem);
    let frame = Frame::of_triangle(&v);
    let basis = if normal {
        rt_basis(frame, m)
    } else {
        ne_basis(frame, m)
    };
    let n = basis.len();
    let n_int = if k >= 2 { 2 * dim_p(k - 2) } else { 0 };
    debug_assert_eq!(n, 3 * k + n_int);
    let eq = quad_edge(2 * k + 2)?;
    let tq = quad_tri(2 * k + 2)?;
    let mut mat = DMatrix::zeros(n, n);
    let mut rhs = DVector::zeros(n);
    for le in 0..3 {
        let f = mesh.edge_of_triangle[elem][le];
        let h = mesh.edge_len(f);
        let dir = if normal {
            mesh.edge_normal(f)
        } else {
            mesh.edge_tangent(f)
        };
        let (pts, wts) = eq.mapped(mesh.edge_start(f), mesh.edge_end(f));
        for i in 0..k {
            let row = le * k + i;
            for (b, tau) in basis.iter().enumerate() {
                let mut val = 0.0;
                for ((&p, &w), &s) in pts.iter().zip(&wts).zip(&eq.nodes) {
                    let t = tau.eval(p);
                    val += w * (t[0] * dir[0] + t[1] * dir[1]) * legendre(i, s);
                }
                mat[(row, b)] = val / h;
            }
            rhs[row] = edge_moments[f][i] / h;
        }
    }
    if n_int > 0 {
        // interior DOFs against the monomial basis of P_{k-2}(K)^2 in the
        // local frame, assembled for every RT/NE basis member at once
        let (pts, wts) = tq.mapped(&v);
        let mons = monomials(k - 2);
        let area = mesh.area(elem);
        for (b, tau) in basis.iter().enumerate() {
            for (&p, &w) in pts.iter().zip(&wts) {
                let t = tau.eval(p);
                let [xi, eta] = frame.local(p);
                for (z, &(a, bb)) in mons.iter().enumerate() {
                    let mz = xi.powi(a as i32) * eta.powi(bb as i32);
                    mat[(3 * k + 2 * z, b)] += w * t[0] * mz / area;
                    mat[(3 * k + 2 * z + 1, b)] += w * t[1] * mz / area;
                }
            }
        }
        let ir = interior_rhs.expect("interior moments required for k >= 2");
        debug_assert_eq!(ir.len(), n_int);
        for z in 0..n_int {
            rhs[3 * k + z] = ir[z] / area;
        }
    }
    let coeffs = mat
        .lu()
        .solve(&rhs)
        .ok_or(FemError::SingularLocalSystem {
            element: elem,
            reason: "RT/NE DOF matrix",
        })?;
    let mut out = VecPoly::zero(frame, m + 1);
    for (b, tau) in basis.iter().enumerate() {
        out.axpy(coeffs[b], tau);
    }
    Ok(out)
}

/// Interior moments `int_K field . zeta dx` for all monomial
/// `zeta in P_{k-2}(K)^2`, interleaved (x-component, y-component).
fn interior_moments(
    mesh: &Mesh,
    elem: usize,
    k: usize,
    field: &dyn Fn([f64; 2]) -> [f64; 2],
) -> Result<DVector<f64>> {
    let v = mesh.tri_vertices(elem);
    let frame = Frame::of_triangle(&v);
    let tq = quad_tri(2 * k + 2)?;
    let (pts, wts) = tq.mapped(&v);
    let mons = monomials(k - 2);
    let mut out = DVector::zeros(2 * mons.len());
    for (&p, &w) in pts.iter().zip(&wts) {
        let t = field(p);
        let [xi, eta] = frame.local(p);
        for (z, &(a, b)) in mons.iter().enumerate() {
            let mz = xi.powi(a as i32) * eta.powi(b as i32);
            out[2 * z] += w * t[0] * mz;
            out[2 * z + 1] += w * t[1] * mz;
        }
    }
    Ok(out)
}

/// Equilibrated flux recovery for a nonconforming solution. Edge moments are
/// computed from both neighbors and cross-checked; a disagreement means the
/// Galerkin solve does not satisfy its orthogonality and is reported as an
/// error rather than silently averaged.
pub fn recover_flux(
    mesh: &Mesh,
    coeff: &Coefficient,
    sol: &NCSolution,
    f: &(dyn Fn([f64; 2]) -> f64 + Sync),
    g: &(dyn Fn([f64; 2]) -> f64 + Sync),
) -> Result<RTField> {
    let k = sol.k;
    if sol.mesh_checksum != mesh.checksum() {
        return Err(FemError::ChecksumMismatch {
            expected: sol.mesh_checksum,
            got: mesh.checksum(),
        });
    }
    let tq = quad_tri(2 * k + 2)?;
    let eq = quad_edge(2 * k + 2)?;
    // per-element candidate moments for each of its non-Neumann edges
    let candidates: Vec<Vec<Vec<f64>>> = (0..mesh.n_triangles())
        .into_par_iter()
        .map(|elem| {
            let v = mesh.tri_vertices(elem);
            let (pts, wts) = tq.mapped(&v);
            // quadrature on the element's own Neumann edges: the Galerkin
            // equation carries the boundary load -<g, phi> there, so the
            // candidate moments must carry it too
            let bdry: Vec<(Vec<[f64; 2]>, Vec<f64>)> = (0..3)
                .map(|le| mesh.edge_of_triangle[elem][le])
                .filter(|&fid| mesh.edge_kind[fid] == EdgeKind::Neumann)
                .map(|fid| eq.mapped(mesh.edge_start(fid), mesh.edge_end(fid)))
                .collect();
            let mut per_edge = vec![vec![0.0; k]; 3];
            for le in 0..3 {
                let fid = mesh.edge_of_triangle[elem][le];
                if mesh.edge_kind[fid] == EdgeKind::Neumann {
                    continue;
                }
                let mu = mesh.sign_mu(elem, fid)? as f64;
                for i in 0..k {
                    let phi = &sol.bases[elem].funcs[le * k + i];
                    let mut val = 0.0;
                    for (&p, &w) in pts.iter().zip(&wts) {
                        let st = sol.sigma_tilde(mesh, coeff, elem, p);
                        let gp = phi.grad(p);
                        val += w * (st[0] * gp[0] + st[1] * gp[1] + f(p) * phi.eval(p));
                    }
                    for (bp, bw) in &bdry {
                        for (&p, &w) in bp.iter().zip(bw) {
                            val -= w * g(p) * phi.eval(p);
                        }
                    }
                    per_edge[le][i] = mu * val;
                }
            }
            Ok(per_edge)
        })
        .collect::<Result<_>>()?;

    let mut edge_moments = vec![vec![0.0; k]; mesh.n_edges()];
    for fid in 0..mesh.n_edges() {
        if mesh.edge_kind[fid] == EdgeKind::Neumann {
            let (pts, wts) = eq.mapped(mesh.edge_start(fid), mesh.edge_end(fid));
            for i in 0..k {
                let mut val = 0.0;
                for ((&p, &w), &s) in pts.iter().zip(&wts).zip(&eq.nodes) {
                    val += w * g(p) * legendre(i, s);
                }
                edge_moments[fid][i] = val;
            }
            continue;
        }
        let (km, kp) = mesh.elements_of_edge[fid];
        let le_m = mesh.local_edge_index(km, fid)?;
        for i in 0..k {
            let minus = candidates[km][le_m][i];
            if let Some(kp) = kp {
                let le_p = mesh.local_edge_index(kp, fid)?;
                let plus = candidates[kp][le_p][i];
                if (minus - plus).abs() > 1e-9 * (1.0 + minus.abs().max(plus.abs())) {
                    return Err(FemError::FluxMomentMismatch {
                        edge: fid,
                        minus,
                        plus,
                    });
                }
            }
            edge_moments[fid][i] = minus;
        }
    }

    let elems: Vec<VecPoly> = (0..mesh.n_triangles())
        .into_par_iter()
        .map(|elem| {
            let ir = if k >= 2 {
                Some(interior_moments(mesh, elem, k, &|p| {
                    sol.sigma_tilde(mesh, coeff, elem, p)
                })?)
            } else {
                None
            };
            expand_element(mesh, elem, k, true, &edge_moments, ir.as_ref())
        })
        .collect::<Result<_>>()?;
    Ok(RTField {
        k,
        edge_moments,
        elems,
        mesh_checksum: sol.mesh_checksum,
    })
}

/// Weighted-average gradient recovery shared by the NC and DG paths:
/// `per_elem` holds the broken solution polynomials, `rho~ = grad u`.
///
/// On Dirichlet edges the tangential moments are those of the boundary-data
/// tangential derivative d(u_D)/dt (zero for homogeneous data), computed by
/// integration by parts so only values of `u_d` are needed.
pub fn recover_gradient_from(
    mesh: &Mesh,
    coeff: &Coefficient,
    per_elem: &[ElemPoly],
    k: usize,
    u_d: &(dyn Fn([f64; 2]) -> f64 + Sync),
    mesh_checksum: u64,
) -> Result<NEField> {
    let eq = quad_edge(2 * k + 2)?;
    // higher degree on Dirichlet edges: u_D is generally not polynomial,
    // matching the quadrature used for the Dirichlet solution moments
    let eq_d = quad_edge((2 * k + 10).min(crate::quad::MAX_DEGREE))?;
    let mut edge_moments = vec![vec![0.0; k]; mesh.n_edges()];
    for fid in 0..mesh.n_edges() {
        if mesh.edge_kind[fid] == EdgeKind::Dirichlet {
            // int_F (du_D/dt) L_i ds = [u_D L_i] - int u_D L_i' dsigma on the
            // reference edge; the arclength Jacobians cancel
            let a = mesh.edge_start(fid);
            let b = mesh.edge_end(fid);
            for i in 0..k {
                let mut val = u_d(b) * legendre(i, 1.0) - u_d(a) * legendre(i, -1.0);
                for (&s, &w) in eq_d.nodes.iter().zip(&eq_d.weights) {
                    let t = 0.5 * (s + 1.0);
                    let p = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
                    let (_, dl) = crate::quad::legendre_with_deriv(i, s);
                    val -= w * u_d(p) * dl;
                }
                edge_moments[fid][i] = val;
            }
            continue;
        }
        let t = mesh.edge_tangent(fid);
        let (pts, wts) = eq.mapped(mesh.edge_start(fid), mesh.edge_end(fid));
        let (km, kp) = mesh.elements_of_edge[fid];
        let w_edge = edge_weights(mesh, coeff, fid);
        for i in 0..k {
            let trace = |elem: usize| -> f64 {
                pts.iter()
                    .zip(&wts)
                    .zip(&eq.nodes)
                    .map(|((&p, &w), &s)| {
                        let g = per_elem[elem].grad(p);
                        w * (g[0] * t[0] + g[1] * t[1]) * legendre(i, s)
                    })
                    .sum()
            };
            edge_moments[fid][i] = match kp {
                Some(kp) => {
                    w_edge.theta * trace(km) + (1.0 - w_edge.theta) * trace(kp)
                }
                None => trace(km), // Neumann: one-sided from K_F^-
            };
        }
    }
    let elems: Vec<VecPoly> = (0..mesh.n_triangles())
        .into_par_iter()
        .map(|elem| {
            let ir = if k >= 2 {
                Some(interior_moments(mesh, elem, k, &|p| per_elem[elem].grad(p))?)
            } else {
                None
            };
            expand_element(mesh, elem, k, false, &edge_moments, ir.as_ref())
        })
        .collect::<Result<_>>()?;
    Ok(NEField {
        k,
        edge_moments,
        elems,
        mesh_checksum,
    })
}

pub fn recover_gradient(
    mesh: &Mesh,
    coeff: &Coefficient,
    sol: &NCSolution,
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

/// Equilibrated flux recovery for a SIPG solution (k = 1). The normal trace
/// is prescribed directly on every edge, so the moments are single-valued by
/// construction:
/// on interior edges -{A grad u . n}_w + gamma (alpha_H / h_F) [u],
/// on Dirichlet edges -A grad u . n + gamma (alpha_H / h_F)(u - u_D),
/// and g on Neumann edges. The quadrature rules match the SIPG assembly so
/// the divergence identity holds to machine precision.
pub fn recover_flux_dg(
    mesh: &Mesh,
    coeff: &Coefficient,
    sol: &crate::dgfem::DGSolution,
    data: &crate::ncfem::ProblemData,
    gamma: f64,
) -> Result<RTField> {
    let k = sol.k;
    if sol.mesh_checksum != mesh.checksum() {
        return Err(FemError::ChecksumMismatch {
            expected: sol.mesh_checksum,
            got: mesh.checksum(),
        });
    }
    let eq = quad_edge(2 * k + 2)?;
    let eq_data = quad_edge((2 * k + 10).min(crate::quad::MAX_DEGREE))?;
    let mut edge_moments = vec![vec![0.0; k]; mesh.n_edges()];
    for fid in 0..mesh.n_edges() {
        let (km, kp) = mesh.elements_of_edge[fid];
        let n = mesh.edge_normal(fid);
        let h = mesh.edge_len(fid);
        let w_edge = edge_weights(mesh, coeff, fid);
        let pen = gamma * w_edge.alpha_h / h;
        let rule = if mesh.edge_kind[fid] == EdgeKind::Dirichlet {
            &eq_data
        } else {
            &eq
        };
        let (pts, wts) = rule.mapped(mesh.edge_start(fid), mesh.edge_end(fid));
        for i in 0..k {
            let mut val = 0.0;
            for ((&p, &w), &s) in pts.iter().zip(&wts).zip(&rule.nodes) {
                let li = legendre(i, s);
                let trace = match mesh.edge_kind[fid] {
                    EdgeKind::Neumann => (data.g)(p),
                    EdgeKind::Dirichlet => {
                        let a = coeff.on_element(mesh, km);
                        let ag = a.apply(sol.per_elem[km].grad(p));
                        -(ag[0] * n[0] + ag[1] * n[1])
                            + pen * (sol.per_elem[km].eval(p) - (data.u_d)(p))
                    }
                    EdgeKind::Interior => {
                        let kp = kp.expect("interior edge has two elements");
                        let am = coeff.on_element(mesh, km);
                        let ap = coeff.on_element(mesh, kp);
                        let gm = am.apply(sol.per_elem[km].grad(p));
                        let gp = ap.apply(sol.per_elem[kp].grad(p));
                        let avg = w_edge.omega_minus * (gm[0] * n[0] + gm[1] * n[1])
                            + w_edge.omega_plus * (gp[0] * n[0] + gp[1] * n[1]);
                        let jump =
                            sol.per_elem[km].eval(p) - sol.per_elem[kp].eval(p);
                        -avg + pen * jump
                    }
                };
                val += w * trace * li;
            }
            edge_moments[fid][i] = val;
        }
    }
    let elems: Vec<VecPoly> = (0..mesh.n_triangles())
        .into_par_iter()
        .map(|elem| expand_element(mesh, elem, k, true, &edge_moments, None))
        .collect::<Result<_>>()?;
    Ok(RTField {
        k,
        edge_moments,
        elems,
        mesh_checksum: sol.mesh_checksum,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct HdivReport {
    pub max_normal_jump: f64,
    pub max_div_defect: f64,
    pub max_neumann_defect: f64,
}

/// Verify H(div) conformity and equilibration of a recovered flux:
/// normal-trace jumps at edge quadrature points, per-element
/// `|| div sigma - Pi_{k-1} f ||_{0,K}`, and the Neumann trace defect.
pub fn check_hdiv(
    mesh: &Mesh,
    field: &RTField,
    f: &(dyn Fn([f64; 2]) -> f64 + Sync),
    g: &(dyn Fn([f64; 2]) -> f64 + Sync),
) -> Result<HdivReport> {
    let k = field.k;
    let eq = quad_edge(2 * k + 2)?;
    let tq = quad_tri(2 * k + 2)?;
    let mut max_jump: f64 = 0.0;
    let mut max_neumann: f64 = 0.0;
    for fid in 0..mesh.n_edges() {
        let n = mesh.edge_normal(fid);
        let (pts, wts) = eq.mapped(mesh.edge_start(fid), mesh.edge_end(fid));
        let (km, kp) = mesh.elements_of_edge[fid];
        match kp {
            Some(kp) => {
                for &p in &pts {
                    let a = field.elems[km].eval(p);
                    let b = field.elems[kp].eval(p);
                    let jump = (a[0] - b[0]) * n[0] + (a[1] - b[1]) * n[1];
                    max_jump = max_jump.max(jump.abs());
                }
            }
            None if mesh.edge_kind[fid] == EdgeKind::Neumann => {
                // the flux can carry g only through its k edge moments, so
                // compare against the L2 projection of g onto P_{k-1}(F)
                let h = mesh.edge_len(fid);
                let mut leg = vec![0.0; k];
                for ((&p, &w), &s) in pts.iter().zip(&wts).zip(&eq.nodes) {
                    for (i, c) in leg.iter_mut().enumerate() {
                        *c += w * g(p) * legendre(i, s) * (2 * i + 1) as f64 / h;
                    }
                }
                let mut defect2 = 0.0;
                let mut gnorm2 = 0.0;
                for ((&p, &w), &s) in pts.iter().zip(&wts).zip(&eq.nodes) {
                    let gk: f64 = leg
                        .iter()
                        .enumerate()
                        .map(|(i, c)| c * legendre(i, s))
                        .sum();
                    let a = field.elems[km].eval(p);
                    let d = a[0] * n[0] + a[1] * n[1] - gk;
                    defect2 += w * d * d;
                    gnorm2 += w * g(p) * g(p);
                }
                max_neumann =
                    max_neumann.max(defect2.sqrt() / (1.0 + gnorm2.sqrt()));
            }
            None => {}
        }
    }
    let max_div = (0..mesh.n_triangles())
        .into_par_iter()
        .map(|elem| {
            let v = mesh.tri_vertices(elem);
            let proj = ElemPoly::project(&v, k - 1, &tq, &|p| f(p))?;
            let (pts, wts) = tq.mapped(&v);
            let mut defect2 = 0.0;
            let mut fnorm2 = 0.0;
            for (&p, &w) in pts.iter().zip(&wts) {
                let d = field.elems[elem].div(p) - proj.eval(p);
                defect2 += w * d * d;
                fnorm2 += w * f(p) * f(p);
            }
            Ok(defect2.sqrt() / (1.0 + fnorm2.sqrt()))
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0f64, f64::max);
    Ok(HdivReport {
        max_normal_jump: max_jump,
        max_div_defect: max_div,
        max_neumann_defect: max_neumann,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct HcurlReport {
    pub max_tangential_jump: f64,
    pub max_dirichlet_trace: f64,
}

pub fn check_hcurl(mesh: &Mesh, field: &NEField) -> Result<HcurlReport> {
    let eq = quad_edge(2 * field.k + 2)?;
    let mut max_jump: f64 = 0.0;
    let mut max_dirichlet: f64 = 0.0;
    for fid in 0..mesh.n_edges() {
        let t = mesh.edge_tangent(fid);
        let (pts, _) = eq.mapped(mesh.edge_start(fid), mesh.edge_end(fid));
        let (km, kp) = mesh.elements_of_edge[fid];
        match kp {
            Some(kp) => {
                for &p in &pts {
                    let a = field.elems[km].eval(p);
                    let b = field.elems[kp].eval(p);
                    let jump = (a[0] - b[0]) * t[0] + (a[1] - b[1]) * t[1];
                    max_jump = max_jump.max(jump.abs());
                }
            }
            None if mesh.edge_kind[fid] == EdgeKind::Dirichlet => {
                for &p in &pts {
                    let a = field.elems[km].eval(p);
                    max_dirichlet = max_dirichlet.max((a[0] * t[0] + a[1] * t[1]).abs());
                }
            }
            None => {}
        }
    }
    Ok(HcurlReport {
        max_tangential_jump: max_jump,
        max_dirichlet_trace: max_dirichlet,
    })
}

fn dump_field(tag: &str, k: usize, checksum: u64, moments: &[Vec<f64>], elems: &[VecPoly]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{tag} v1");
    let _ = writeln!(s, "checksum {checksum:#018x}");
    let _ = writeln!(s, "k {k}");
    let _ = writeln!(s, "edges {}", moments.len());
    for m in moments {
        let line: Vec<String> = m.iter().map(|v| format!("{v:.17e}")).collect();
        let _ = writeln!(s, "{}", line.join(" "));
    }
    let _ = writeln!(s, "elements {}", elems.len());
    for e in elems {
        let line: Vec<String> = e
            .cx
            .iter()
            .chain(&e.cy)
            .map(|v| format!("{v:.17e}"))
            .collect();
        let _ = writeln!(s, "{}", line.join(" "));
    }
    s
}

impl RTField {
    pub fn to_text(&self) -> String {
        dump_field("rtfield", self.k, self.mesh_checksum, &self.edge_moments, &self.elems)
    }
}

impl NEField {
    pub fn to_text(&self) -> String {
        dump_field("nefield", self.k, self.mesh_checksum, &self.edge_moments, &self.elems)
    }
}
