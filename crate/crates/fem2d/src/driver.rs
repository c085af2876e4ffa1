//! Adaptive solve-estimate-mark-refine driver.
//!
//! The loop is sequential across iterations (each depends on the previous
//! mesh); within an iteration the solver, recovery, and estimator modules
//! parallelize internally.

use std::fmt;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::coeff::Coefficient;
use crate::dgfem::{self, DGSpace};
use crate::estimator::{efficiency_index, energy_error, indicators, IndicatorSet};
use crate::mesh::{dorfler_mark, refine, Mesh};
use crate::ncfem::{self, NCSpace, ProblemData};
use crate::sparse::CgOptions;
use crate::poly::ElemPoly;
use crate::problems::{exact_energy_norm, ProblemSpec};
use crate::recovery::{self, NEField, RTField};
use crate::{FemError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Nc1,
    Nc3,
    Dg1,
}

impl Method {
    pub fn order(self) -> usize {
        match self {
            Method::Nc1 | Method::Dg1 => 1,
            Method::Nc3 => 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Nc1 => "nc1",
            Method::Nc3 => "nc3",
            Method::Dg1 => "dg1",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = FemError;

    fn from_str(s: &str) -> Result<Method> {
        match s {
            "nc1" => Ok(Method::Nc1),
            "nc3" => Ok(Method::Nc3),
            "dg1" => Ok(Method::Dg1),
            other => Err(FemError::Parse {
                what: "method",
                detail: format!("unknown method {other:?}, expected nc1, nc3, or dg1"),
            }),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Stopping rule: the loop stops as soon as any enabled criterion is met.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StopRule {
    /// relative energy error ||e|| / ||A^{1/2} grad u|| (needs an exact
    /// solution)
    pub rel_error: Option<f64>,
    /// stop once the DOF count reaches this bound
    pub max_dof: Option<usize>,
    /// index of the last iteration to run (0 = single solve)
    pub max_iter: Option<usize>,
}

impl StopRule {
    pub fn max_iterations(n: usize) -> StopRule {
        StopRule {
            rel_error: None,
            max_dof: None,
            max_iter: Some(n),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DriverConfig {
    pub method: Method,
    /// Dorfler bulk parameter
    pub theta: f64,
    pub stop: StopRule,
    /// SIPG penalty (dg1 only)
    pub gamma: f64,
    /// uniform refinement rounds for the exact-energy denominator
    pub denominator_rounds: usize,
}

impl DriverConfig {
    pub fn new(method: Method, stop: StopRule) -> DriverConfig {
        DriverConfig {
            method,
            theta: 0.2,
            stop,
            gamma: dgfem::DEFAULT_GAMMA,
            denominator_rounds: 4,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceRecord {
    pub iteration: usize,
    pub ndof: usize,
    /// absolute energy error; NaN when no exact solution is available
    pub energy_error: f64,
    pub eta_sigma: f64,
    pub eta_rho: f64,
    pub eta: f64,
    pub osc: f64,
    pub eff_index: f64,
    pub wall_time_s: f64,
}

/// Recovered fields and broken solution from the last iteration.
pub struct FinalState {
    pub per_elem: Vec<ElemPoly>,
    pub rt: RTField,
    pub ne: NEField,
    pub solution_text: String,
}

pub struct RunResult {
    pub records: Vec<ConvergenceRecord>,
    pub initial_mesh: Mesh,
    pub final_mesh: Mesh,
    pub final_indicators: IndicatorSet,
    pub final_state: FinalState,
    /// ||A^{1/2} grad u|| of the exact solution, when known
    pub exact_energy: Option<f64>,
}

impl RunResult {
    /// `history.csv` contents, one line per iteration.
    pub fn history_csv(&self) -> String {
        let mut s =
            String::from("iter,ndof,energy_error,eta_sigma,eta_rho,eta,osc,eff_index\n");
        for r in &self.records {
            s.push_str(&format!(
                "{},{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.6}\n",
                r.iteration,
                r.ndof,
                r.energy_error,
                r.eta_sigma,
                r.eta_rho,
                r.eta,
                r.osc,
                r.eff_index
            ));
        }
        s
    }
}

struct IterationOutput {
    ndof: usize,
    per_elem: Vec<ElemPoly>,
    rt: RTField,
    ne: NEField,
    ind: IndicatorSet,
    solution_text: String,
}

fn solve_and_recover(
    mesh: &Mesh,
    coeff: &Coefficient,
    data: &ProblemData,
    cfg: &DriverConfig,
) -> Result<IterationOutput> {
    // tight residual: with f = 0 the flux estimator must vanish to roundoff,
    // which needs the Galerkin orthogonality satisfied well below the
    // default CG tolerance
    let cg = CgOptions {
        rel_tol: 1e-14,
        max_iter: 0,
    };
    match cfg.method {
        Method::Nc1 | Method::Nc3 => {
            let k = cfg.method.order();
            let ndof = NCSpace::new(mesh, k)?.n_dofs();
            let sol = ncfem::solve(mesh, coeff, data, k, cg)?;
            let rt = recovery::recover_flux(mesh, coeff, &sol, data.f, data.g)?;
            let ne = recovery::recover_gradient(mesh, coeff, &sol, data.u_d)?;
            let ind = indicators(mesh, coeff, &sol.per_elem, k, &rt, &ne, data.f)?;
            let solution_text = sol.to_text();
            Ok(IterationOutput {
                ndof,
                per_elem: sol.per_elem,
                rt,
                ne,
                ind,
                solution_text,
            })
        }
        Method::Dg1 => {
            let ndof = DGSpace::new(mesh, 1)?.n_dofs();
            let sol = dgfem::solve_dg(mesh, coeff, data, cfg.gamma, cg)?;
            let rt = recovery::recover_flux_dg(mesh, coeff, &sol, data, cfg.gamma)?;
            let ne = dgfem::recover_gradient_dg(mesh, coeff, &sol, data.u_d)?;
            let ind = indicators(mesh, coeff, &sol.per_elem, sol.k, &rt, &ne, data.f)?;
            let solution_text = sol.to_text();
            Ok(IterationOutput {
                ndof,
                per_elem: sol.per_elem,
                rt,
                ne,
                ind,
                solution_text,
            })
        }
    }
}

/// Adaptive loop: solve, recover, estimate, (measure the true error when the
/// exact solution is known), Dorfler-mark, refine; one `ConvergenceRecord`
/// per iteration. Solver failures carry the iteration index as context.
pub fn run_adaptive(spec: &ProblemSpec, cfg: &DriverConfig) -> Result<RunResult> {
    if !(cfg.theta > 0.0 && cfg.theta < 1.0) {
        return Err(FemError::Parse {
            what: "theta",
            detail: format!("theta = {} must lie in (0, 1)", cfg.theta),
        });
    }
    if cfg.stop.rel_error.is_none() && cfg.stop.max_dof.is_none() && cfg.stop.max_iter.is_none()
    {
        return Err(FemError::Parse {
            what: "stop rule",
            detail: "at least one stopping criterion must be set".into(),
        });
    }
    if cfg.stop.rel_error.is_some() && spec.exact.is_none() {
        return Err(FemError::OracleFailure(
            "rel_error stopping needs an exact solution".into(),
        ));
    }

    let exact_energy = match &spec.exact {
        Some(_) => Some(exact_energy_norm(spec, cfg.denominator_rounds)?),
        None => None,
    };

    let data = ProblemData {
        f: &*spec.f,
        g: &*spec.g,
        u_d: &*spec.u_d,
    };

    let t0 = Instant::now();
    let initial_mesh = spec.mesh.clone();
    let mut mesh = spec.mesh.clone();
    let mut records: Vec<ConvergenceRecord> = Vec::new();
    let mut iter = 0usize;
    loop {
        let out = solve_and_recover(&mesh, &spec.coeff, &data, cfg).map_err(|e| {
            FemError::OracleFailure(format!("iteration {iter} failed: {e}"))
        })?;
        if let Some(prev) = records.last() {
            debug_assert!(out.ndof > prev.ndof, "DOF count must strictly increase");
        }
        let err = match &spec.exact {
            Some(exact) => {
                let (_, total) = energy_error(
                    &mesh,
                    &spec.coeff,
                    &out.per_elem,
                    &*exact.gradient,
                    &exact.singular,
                )?;
                total
            }
            None => f64::NAN,
        };
        let eta = out.ind.eta();
        records.push(ConvergenceRecord {
            iteration: iter,
            ndof: out.ndof,
            energy_error: err,
            eta_sigma: out.ind.eta_sigma(),
            eta_rho: out.ind.eta_rho(),
            eta,
            osc: out.ind.osc(),
            eff_index: efficiency_index(eta, err),
            wall_time_s: t0.elapsed().as_secs_f64(),
        });

        let stop_rel = cfg
            .stop
            .rel_error
            .zip(exact_energy)
            .is_some_and(|(tol, denom)| err / denom < tol);
        let stop_dof = cfg.stop.max_dof.is_some_and(|cap| out.ndof >= cap);
        let stop_iter = cfg.stop.max_iter.is_some_and(|cap| iter >= cap);
        if stop_rel || stop_dof || stop_iter {
            let final_indicators = out.ind;
            let final_state = FinalState {
                per_elem: out.per_elem,
                rt: out.rt,
                ne: out.ne,
                solution_text: out.solution_text,
            };
            return Ok(RunResult {
                records,
                initial_mesh,
                final_mesh: mesh,
                final_indicators,
                final_state,
                exact_energy,
            });
        }

        let marked = dorfler_mark(&out.ind.eta_k, cfg.theta);
        if marked.is_empty() {
            // estimator is identically zero: nothing left to refine
            let final_state = FinalState {
                per_elem: out.per_elem,
                rt: out.rt,
                ne: out.ne,
                solution_text: out.solution_text,
            };
            return Ok(RunResult {
                records,
                initial_mesh,
                final_mesh: mesh,
                final_indicators: out.ind,
                final_state,
                exact_energy,
            });
        }
        mesh = refine(&mesh, &marked)?;
        iter += 1;
    }
}

/// Least-squares slope of log10(y) against log10(ndof) over the last
/// `window` records, using the `pick` field (estimator or error).
pub fn loglog_slope(records: &[ConvergenceRecord], window: usize, pick: impl Fn(&ConvergenceRecord) -> f64) -> f64 {
    let n = records.len();
    let lo = n.saturating_sub(window);
    let pts: Vec<(f64, f64)> = records[lo..]
        .iter()
        .map(|r| ((r.ndof as f64).log10(), pick(r).log10()))
        .collect();
    let m = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    (m * sxy - sx * sy) / (m * sxx - sx * sx)
}
