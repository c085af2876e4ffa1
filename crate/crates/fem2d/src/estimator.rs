//! Error indicators from the recovered fields, data oscillation, exact
//! energy error, and the efficiency index.

use rayon::prelude::*;

use crate::coeff::Coefficient;
use crate::mesh::Mesh;
use crate::poly::ElemPoly;
use crate::quad::{quad_tri, TriQuad};
use crate::recovery::{NEField, RTField};
use crate::{FemError, Result};

/// Per-element indicators and oscillation, with root-sum-square totals.
#[derive(Debug, Clone)]
pub struct IndicatorSet {
    pub eta_sigma_k: Vec<f64>,
    pub eta_rho_k: Vec<f64>,
    pub eta_k: Vec<f64>,
    pub osc_k: Vec<f64>,
}

fn rss(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

impl IndicatorSet {
    pub fn eta_sigma(&self) -> f64 {
        rss(&self.eta_sigma_k)
    }
    pub fn eta_rho(&self) -> f64 {
        rss(&self.eta_rho_k)
    }
    pub fn eta(&self) -> f64 {
        rss(&self.eta_k)
    }
    pub fn osc(&self) -> f64 {
        rss(&self.osc_k)
    }
}

/// eta_{sigma,K} = ||A^{-1/2}(sigma_hat - sigma~)||_{0,K} and
/// eta_{rho,K} = ||A^{1/2}(rho_hat - rho~)||_{0,K}, with
/// sigma~ = -A grad u and rho~ = grad u taken from the broken solution
/// `per_elem`; `f` only enters the oscillation term.
pub fn indicators(
    mesh: &Mesh,
    coeff: &Coefficient,
    per_elem: &[ElemPoly],
    k: usize,
    rt: &RTField,
    ne: &NEField,
    f: &(dyn Fn([f64; 2]) -> f64 + Sync),
) -> Result<IndicatorSet> {
    let cks = mesh.checksum();
    if rt.mesh_checksum != cks || ne.mesh_checksum != cks {
        return Err(FemError::ChecksumMismatch {
            expected: cks,
            got: if rt.mesh_checksum != cks {
                rt.mesh_checksum
            } else {
                ne.mesh_checksum
            },
        });
    }
    let tq = quad_tri(2 * k + 2)?;
    let tq_osc = quad_tri((2 * k + 4).min(crate::quad::MAX_DEGREE))?;
    let per_k: Vec<(f64, f64, f64)> = (0..mesh.n_triangles())
        .into_par_iter()
        .map(|elem| {
            let v = mesh.tri_vertices(elem);
            let a = coeff.on_element(mesh, elem);
            let a_inv = a.inverse();
            let (pts, wts) = tq.mapped(&v);
            let mut s2 = 0.0;
            let mut r2 = 0.0;
            for (&p, &w) in pts.iter().zip(&wts) {
                let g = per_elem[elem].grad(p);
                let ag = a.apply(g);
                let sh = rt.elems[elem].eval(p);
                let rh = ne.elems[elem].eval(p);
                let ds = [sh[0] + ag[0], sh[1] + ag[1]];
                let dr = [rh[0] - g[0], rh[1] - g[1]];
                s2 += w * a_inv.bilinear(ds, ds);
                r2 += w * a.bilinear(dr, dr);
            }
            // osc(f, K) = (h_K / sqrt(lambda_K)) ||f - f_{k-1}||_{0,K}
            let proj = ElemPoly::project(&v, k - 1, &tq_osc, &|p| f(p))?;
            let d2 = proj.l2_diff_sq(&v, &tq_osc, &|p| f(p));
            let osc = mesh.diameter(elem) / coeff.lambda_min(mesh, elem).sqrt()
                * d2.sqrt();
            Ok((s2.max(0.0).sqrt(), r2.max(0.0).sqrt(), osc))
        })
        .collect::<Result<_>>()?;
    let eta_sigma_k: Vec<f64> = per_k.iter().map(|x| x.0).collect();
    let eta_rho_k: Vec<f64> = per_k.iter().map(|x| x.1).collect();
    let osc_k: Vec<f64> = per_k.iter().map(|x| x.2).collect();
    let eta_k = eta_sigma_k
        .iter()
        .zip(&eta_rho_k)
        .map(|(s, r)| (s * s + r * r).sqrt())
        .collect();
    Ok(IndicatorSet {
        eta_sigma_k,
        eta_rho_k,
        eta_k,
        osc_k,
    })
}

fn tri_touches(v: &[[f64; 2]; 3], p: [f64; 2]) -> Option<usize> {
    (0..3).find(|&i| {
        (v[i][0] - p[0]).abs() < 1e-12 && (v[i][1] - p[1]).abs() < 1e-12
    })
}

fn quad_err_sq(
    v: &[[f64; 2]; 3],
    rule: &TriQuad,
    a: &crate::coeff::Tensor2,
    uh: &ElemPoly,
    exact_grad: &dyn Fn([f64; 2]) -> [f64; 2],
) -> Result<f64> {
    let (pts, wts) = rule.mapped(v);
    let mut acc = 0.0;
    for (&p, &w) in pts.iter().zip(&wts) {
        let ge = exact_grad(p);
        if !ge[0].is_finite() || !ge[1].is_finite() {
            return Err(FemError::NonFiniteExactGradient { x: p[0], y: p[1] });
        }
        let gh = uh.grad(p);
        let d = [ge[0] - gh[0], ge[1] - gh[1]];
        acc += w * a.bilinear(d, d);
    }
    Ok(acc)
}

/// ||A^{1/2} grad_h (u - u_T)||: degree-20 quadrature; elements with a
/// vertex at a listed singular point are subdivided once at the edge
/// midpoints before the rule is applied, and the rule has strictly interior
/// points, so the singular vertex itself is never sampled.
pub fn energy_error(
    mesh: &Mesh,
    coeff: &Coefficient,
    per_elem: &[ElemPoly],
    exact_grad: &(dyn Fn([f64; 2]) -> [f64; 2] + Sync),
    singular: &[[f64; 2]],
) -> Result<(Vec<f64>, f64)> {
    let rule = quad_tri(20)?;
    let per: Vec<f64> = (0..mesh.n_triangles())
        .into_par_iter()
        .map(|elem| {
            let v = mesh.tri_vertices(elem);
            let a = coeff.on_element(mesh, elem);
            let uh = &per_elem[elem];
            let hit = singular.iter().find_map(|&p| tri_touches(&v, p));
            let sq = match hit {
                None => quad_err_sq(&v, &rule, a, uh, &exact_grad)?,
                Some(_) => {
                    // one level of midpoint subdivision, then the
                    // interior-point rule on each of the four children
                    let m01 = [0.5 * (v[0][0] + v[1][0]), 0.5 * (v[0][1] + v[1][1])];
                    let m12 = [0.5 * (v[1][0] + v[2][0]), 0.5 * (v[1][1] + v[2][1])];
                    let m20 = [0.5 * (v[2][0] + v[0][0]), 0.5 * (v[2][1] + v[0][1])];
                    quad_err_sq(&[v[0], m01, m20], &rule, a, uh, &exact_grad)?
                        + quad_err_sq(&[m01, v[1], m12], &rule, a, uh, &exact_grad)?
                        + quad_err_sq(&[m20, m12, v[2]], &rule, a, uh, &exact_grad)?
                        + quad_err_sq(&[m01, m12, m20], &rule, a, uh, &exact_grad)?
                }
            };
            Ok(sq.max(0.0).sqrt())
        })
        .collect::<Result<_>>()?;
    let total = rss(&per);
    Ok((per, total))
}

pub fn efficiency_index(eta: f64, energy_error: f64) -> f64 {
    eta / energy_error
}

/// One history line: `iter,ndof,energy_error,eta_sigma,eta_rho,eta,osc,eff_index`.
pub fn csv_row(iter: usize, ndof: usize, energy_err: f64, ind: &IndicatorSet) -> String {
    let eta = ind.eta();
    format!(
        "{},{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.6}",
        iter,
        ndof,
        energy_err,
        ind.eta_sigma(),
        ind.eta_rho(),
        eta,
        ind.osc(),
        efficiency_index(eta, energy_err)
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::Tensor2;
    use crate::mesh::generators::{refine_uniform, unit_square_two};
    use crate::ncfem::{solve, ProblemData};
    use crate::poly::Frame;
    use crate::recovery::{recover_flux, recover_gradient};
    use crate::sparse::CgOptions;

    fn zero(_: [f64; 2]) -> f64 {
        0.0
    }

    #[test]
    fn linear_solution_gives_zero_eta() {
        let m = refine_uniform(&unit_square_two(), 1);
        let coeff = Coefficient::isotropic(&[1.0]);
        let exact = |p: [f64; 2]| 2.0 * p[0] - p[1];
        let data = ProblemData {
            f: &zero,
            g: &zero,
            u_d: &exact,
        };
        let sol = solve(&m, &coeff, &data, 1, CgOptions::default()).unwrap();
        let rt = recover_flux(&m, &coeff, &sol, &zero, &zero).unwrap();
        let ne = recover_gradient(&m, &coeff, &sol, &exact).unwrap();
        let ind = indicators(&m, &coeff, &sol.per_elem, 1, &rt, &ne, &zero).unwrap();
        assert!(ind.eta() < 1e-10, "eta = {}", ind.eta());
        assert!(ind.osc() < 1e-13);
        let (_, err) = energy_error(
            &m,
            &coeff,
            &sol.per_elem,
            &|_| [2.0, -1.0],
            &[],
        )
        .unwrap();
        assert!(err < 1e-10);
    }

    #[test]
    fn pythagoras_and_rss_consistency() {
        let m = refine_uniform(&unit_square_two(), 2);
        let coeff = Coefficient::isotropic(&[3.0]);
        let f = |p: [f64; 2]| p[0] * p[1] + 1.0;
        let data = ProblemData {
            f: &f,
            g: &zero,
            u_d: &zero,
        };
        let sol = solve(&m, &coeff, &data, 1, CgOptions::default()).unwrap();
        let rt = recover_flux(&m, &coeff, &sol, &f, &zero).unwrap();
        let ne = recover_gradient(&m, &coeff, &sol, &zero).unwrap();
        let ind = indicators(&m, &coeff, &sol.per_elem, 1, &rt, &ne, &f).unwrap();
        for e in 0..m.n_triangles() {
            let lhs = ind.eta_k[e] * ind.eta_k[e];
            let rhs = ind.eta_sigma_k[e].powi(2) + ind.eta_rho_k[e].powi(2);
            assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs));
        }
        let total = (ind.eta_sigma().powi(2) + ind.eta_rho().powi(2)).sqrt();
        assert!((ind.eta() - total).abs() <= 1e-12 * (1.0 + total));
        assert!(ind.eta() > 0.0);
    }

    #[test]
    fn eta_scales_with_coefficient() {
        // fix the discrete solution; scaling A and f by c scales sigma~ and
        // sigma_hat by c, so eta_sigma and eta_rho both scale by sqrt(c)
        let m = refine_uniform(&unit_square_two(), 2);
        let f = |p: [f64; 2]| p[0] - p[1] * p[1];
        let mut etas = Vec::new();
        for c in [1.0, 4.0] {
            let coeff = Coefficient::isotropic(&[c]);
            let fc = move |p: [f64; 2]| c * f(p);
            let data = ProblemData {
                f: &fc,
                g: &zero,
                u_d: &zero,
            };
            let sol = solve(&m, &coeff, &data, 1, CgOptions::default()).unwrap();
            let rt = recover_flux(&m, &coeff, &sol, &fc, &zero).unwrap();
            let ne = recover_gradient(&m, &coeff, &sol, &zero).unwrap();
            let ind = indicators(&m, &coeff, &sol.per_elem, 1, &rt, &ne, &fc).unwrap();
            etas.push((ind.eta_sigma(), ind.eta_rho(), ind.osc()));
        }
        assert!((etas[1].0 / etas[0].0 - 2.0).abs() < 1e-9);
        assert!((etas[1].1 / etas[0].1 - 2.0).abs() < 1e-9);
        // osc: f -> 4f gives x4, lambda^{-1/2} gives 1/2 => net x2
        assert!((etas[1].2 / etas[0].2 - 2.0).abs() < 1e-9);
    }

    #[test]
    fn oscillation_hand_value() {
        // reference triangle, k=1, f = x: ||x - 1/3||^2 = 1/36, h = sqrt(2)
        let m = crate::mesh::generators::reference_triangle();
        let coeff = Coefficient::isotropic(&[4.0]);
        let f = |p: [f64; 2]| p[0];
        // build trivial fields via a solve just to reach the osc computation
        let data = ProblemData {
            f: &f,
            g: &zero,
            u_d: &zero,
        };
        let sol = solve(&m, &coeff, &data, 1, CgOptions::default()).unwrap();
        let rt = recover_flux(&m, &coeff, &sol, &f, &zero).unwrap();
        let ne = recover_gradient(&m, &coeff, &sol, &zero).unwrap();
        let ind = indicators(&m, &coeff, &sol.per_elem, 1, &rt, &ne, &f).unwrap();
        let expect = 2f64.sqrt() / 2.0 * (1.0f64 / 36.0).sqrt();
        assert!(
            (ind.osc_k[0] - expect).abs() < 1e-12,
            "{} vs {}",
            ind.osc_k[0],
            expect
        );
        // polynomial f of degree <= k-1 has zero oscillation
        let fc = |_: [f64; 2]| 7.5;
        let ind0 = indicators(&m, &coeff, &sol.per_elem, 1, &rt, &ne, &fc).unwrap();
        assert!(ind0.osc() < 1e-13);
    }

    #[test]
    fn energy_error_against_oracle_quadratic() {
        // u = x^2 versus its linear interpolant on one element, A = I:
        // compare with a dense degree-25 quadrature oracle
        let m = crate::mesh::generators::reference_triangle();
        let coeff = Coefficient::isotropic(&[1.0]);
        let v = m.tri_vertices(0);
        let frame = Frame::of_triangle(&v);
        // linear interpolant of x^2 at the vertices (0,0),(1,0),(0,1): x
        let mut uh = ElemPoly::zero(frame, 1);
        // represent u_h(x, y) = x in the local frame
        uh.coeffs[0] = frame.center[0];
        uh.coeffs[1] = frame.scale;
        let grad = |p: [f64; 2]| [2.0 * p[0], 0.0];
        let (per, total) =
            energy_error(&m, &coeff, &[uh.clone()], &grad, &[]).unwrap();
        let oracle_rule = quad_tri(25).unwrap();
        let oracle = quad_err_sq(&v, &oracle_rule, &Tensor2::iso(1.0), &uh, &grad)
            .unwrap()
            .sqrt();
        assert!((total - oracle).abs() < 1e-12);
        assert!((per[0] - total).abs() < 1e-15);
    }

    #[test]
    fn singular_element_rule_against_polar_oracle() {
        // integral of |grad r^{2/3}|^2 = (4/9) r^{-2/3} over the reference
        // triangle; polar oracle: int_0^{pi/2} (1/3) (cos + sin)^{-4/3} dt.
        // The single-subdivision rule is a deliberate approximation near the
        // singular vertex: it must land within a fraction of a percent of the
        // exact value here and beat the unsubdivided rule.
        let m = crate::mesh::generators::reference_triangle();
        let coeff = Coefficient::isotropic(&[1.0]);
        let v = m.tri_vertices(0);
        let uh = ElemPoly::zero(Frame::of_triangle(&v), 1);
        let grad = |p: [f64; 2]| {
            let r2 = p[0] * p[0] + p[1] * p[1];
            let s = (2.0 / 3.0) * r2.powf(-2.0 / 3.0);
            [s * p[0], s * p[1]]
        };
        let (_, total) =
            energy_error(&m, &coeff, &[uh.clone()], &grad, &[[0.0, 0.0]]).unwrap();
        let (_, plain) = energy_error(&m, &coeff, &[uh], &grad, &[]).unwrap();
        let (gn, gw) = crate::quad::gauss_legendre(60);
        let oracle: f64 = gn
            .iter()
            .zip(&gw)
            .map(|(&x, &w)| {
                let t = std::f64::consts::FRAC_PI_4 * (x + 1.0);
                std::f64::consts::FRAC_PI_4
                    * w
                    * (1.0 / 3.0)
                    * (t.cos() + t.sin()).powf(-4.0 / 3.0)
            })
            .sum();
        let sq = total * total;
        assert!(
            (sq - oracle).abs() < 5e-3 * oracle,
            "{sq} too far from {oracle}"
        );
        assert!(
            (sq - oracle).abs() < (plain * plain - oracle).abs(),
            "subdivision must improve on the plain rule"
        );
    }

    #[test]
    fn nonfinite_gradient_is_reported() {
        let m = crate::mesh::generators::reference_triangle();
        let coeff = Coefficient::isotropic(&[1.0]);
        let uh = ElemPoly::zero(Frame::of_triangle(&m.tri_vertices(0)), 1);
        let grad = |_: [f64; 2]| [f64::NAN, 0.0];
        assert!(matches!(
            energy_error(&m, &coeff, &[uh], &grad, &[]),
            Err(FemError::NonFiniteExactGradient { .. })
        ));
    }

    #[test]
    fn csv_row_format() {
        let ind = IndicatorSet {
            eta_sigma_k: vec![3.0],
            eta_rho_k: vec![4.0],
            eta_k: vec![5.0],
            osc_k: vec![0.5],
        };
        let row = csv_row(2, 17, 5.0, &ind);
        assert!(row.starts_with("2,17,"));
        assert_eq!(row.split(',').count(), 8);
        assert!(row.ends_with("1.000000"));
        assert!((efficiency_index(ind.eta(), 5.0) - 1.0).abs() < 1e-15);
    }
}
