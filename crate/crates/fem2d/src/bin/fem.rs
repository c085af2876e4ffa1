//! Command-line front end: adaptive benchmark runs and self-check suites.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use fem2d::driver::{run_adaptive, DriverConfig, Method, StopRule};
use fem2d::mesh::generators::{lshape_fan, refine_uniform, square_interface};
use fem2d::ncfem::{self, ProblemData};
use fem2d::problems::{kellogg_problem, lshape_problem, manufactured_problem, ProblemSpec};
use fem2d::recovery::{check_hcurl, check_hdiv, recover_flux, recover_gradient};
use fem2d::sparse::CgOptions;
use fem2d::Result;

#[derive(Parser)]
#[command(name = "fem", about = "Adaptive FEM benchmarks with equilibrated error estimators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum ProblemName {
    Kellogg,
    Lshape,
    Manufactured,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MethodArg {
    Nc1,
    Nc3,
    Dg1,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::Nc1 => Method::Nc1,
            MethodArg::Nc3 => Method::Nc3,
            MethodArg::Dg1 => Method::Dg1,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SuiteName {
    Conformity,
    Equilibration,
    Patch,
    Oracle,
}

#[derive(Subcommand)]
enum Command {
    /// Run an adaptive benchmark and write history/mesh artifacts.
    Run {
        #[arg(long, value_enum)]
        problem: ProblemName,
        #[arg(long, value_enum)]
        method: MethodArg,
        /// Dorfler bulk parameter
        #[arg(long, default_value_t = 0.2)]
        theta: f64,
        /// stop when the relative energy error drops below this
        #[arg(long)]
        stop_rel: Option<f64>,
        /// stop when the DOF count reaches this
        #[arg(long)]
        stop_dof: Option<usize>,
        /// stop after this many refinement iterations
        #[arg(long)]
        stop_iter: Option<usize>,
        /// SIPG penalty (dg1 only)
        #[arg(long, default_value_t = 10.0)]
        gamma: f64,
        /// coefficient jump ratio (manufactured problem only)
        #[arg(long, default_value_t = 1.0)]
        jump: f64,
        /// output directory
        #[arg(long)]
        out: PathBuf,
        /// also write the recovered flux/gradient and solution coefficients
        #[arg(long, default_value_t = false)]
        dump_fields: bool,
    },
    /// Run a self-check suite; prints one pass/fail line per check.
    Verify {
        #[arg(long, value_enum)]
        suite: SuiteName,
    },
}

#[derive(Serialize)]
struct ConfigEcho {
    problem: ProblemName,
    jump: f64,
    config: DriverConfig,
    out: PathBuf,
    dump_fields: bool,
}

fn build_problem(problem: ProblemName, method: Method, jump: f64) -> Result<ProblemSpec> {
    match problem {
        ProblemName::Kellogg => kellogg_problem(),
        ProblemName::Lshape => lshape_problem(),
        ProblemName::Manufactured => manufactured_problem(method.order(), jump),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_run(
    problem: ProblemName,
    method: Method,
    theta: f64,
    stop_rel: Option<f64>,
    stop_dof: Option<usize>,
    stop_iter: Option<usize>,
    gamma: f64,
    jump: f64,
    out: PathBuf,
    dump_fields: bool,
) -> Result<()> {
    let spec = build_problem(problem, method, jump)?;
    let mut cfg = DriverConfig::new(
        method,
        StopRule {
            rel_error: stop_rel,
            max_dof: stop_dof,
            max_iter: stop_iter,
        },
    );
    cfg.theta = theta;
    cfg.gamma = gamma;

    let echo = ConfigEcho {
        problem,
        jump,
        config: cfg.clone(),
        out: out.clone(),
        dump_fields,
    };

    let res = run_adaptive(&spec, &cfg)?;

    fs::create_dir_all(&out)?;
    let config_json = serde_json::to_string_pretty(&echo)
        .map_err(|e| fem2d::FemError::Invalid(format!("config serialization: {e}")))?;
    fs::write(out.join("config.json"), config_json + "\n")?;
    fs::write(out.join("history.csv"), res.history_csv())?;
    fs::write(out.join("mesh_initial.svg"), res.initial_mesh.to_svg(800.0))?;
    fs::write(out.join("mesh_final.svg"), res.final_mesh.to_svg(800.0))?;
    if dump_fields {
        fs::write(out.join("solution.txt"), &res.final_state.solution_text)?;
        fs::write(out.join("flux_rt.txt"), res.final_state.rt.to_text())?;
        fs::write(out.join("gradient_ne.txt"), res.final_state.ne.to_text())?;
    }

    let last = res.records.last().expect("at least one record");
    println!(
        "{} {} finished: {} iterations, {} DOFs, eta = {:.4e}",
        spec.name,
        method,
        res.records.len(),
        last.ndof,
        last.eta
    );
    if let Some(denom) = res.exact_energy {
        println!(
            "relative error = {:.4}%, efficiency index = {:.3}",
            100.0 * last.energy_error / denom,
            last.eff_index
        );
    }
    println!("artifacts written to {}", out.display());
    Ok(())
}

struct SuiteReport {
    failures: usize,
}

impl SuiteReport {
    fn new() -> SuiteReport {
        SuiteReport { failures: 0 }
    }

    fn check(&mut self, name: &str, ok: bool, detail: String) {
        if ok {
            println!("PASS {name} ({detail})");
        } else {
            println!("FAIL {name} ({detail})");
            self.failures += 1;
        }
    }
}

fn suite_conformity(rep: &mut SuiteReport) -> Result<()> {
    let mesh = refine_uniform(&lshape_fan(), 3);
    let coeff = fem2d::coeff::Coefficient::isotropic(&[1.0]);
    let f = |p: [f64; 2]| p[0] + 2.0 * p[1];
    let zero = |_: [f64; 2]| 0.0;
    let data = ProblemData {
        f: &f,
        g: &zero,
        u_d: &zero,
    };
    for k in [1usize, 3] {
        let sol = ncfem::solve(&mesh, &coeff, &data, k, CgOptions::default())?;
        let rt = recover_flux(&mesh, &coeff, &sol, &f, &zero)?;
        let ne = recover_gradient(&mesh, &coeff, &sol, &zero)?;
        let hd = check_hdiv(&mesh, &rt, &f, &zero)?;
        let hc = check_hcurl(&mesh, &ne)?;
        rep.check(
            &format!("normal-trace continuity k={k}"),
            hd.max_normal_jump <= 1e-10,
            format!("max jump {:.3e}", hd.max_normal_jump),
        );
        rep.check(
            &format!("tangential-trace continuity k={k}"),
            hc.max_tangential_jump <= 1e-10,
            format!("max jump {:.3e}", hc.max_tangential_jump),
        );
    }
    Ok(())
}

fn suite_equilibration(rep: &mut SuiteReport) -> Result<()> {
    for (label, jump) in [("unit", 1.0), ("jump 1e4", 1e4)] {
        let mesh = refine_uniform(&square_interface(2), 2);
        let coeff = fem2d::coeff::Coefficient::isotropic(&[jump, 1.0]);
        let f = |p: [f64; 2]| p[0] * p[1] - 0.25;
        let zero = |_: [f64; 2]| 0.0;
        let data = ProblemData {
            f: &f,
            g: &zero,
            u_d: &zero,
        };
        for k in [1usize, 3] {
            let sol = ncfem::solve(&mesh, &coeff, &data, k, CgOptions::default())?;
            let rt = recover_flux(&mesh, &coeff, &sol, &f, &zero)?;
            let hd = check_hdiv(&mesh, &rt, &f, &zero)?;
            rep.check(
                &format!("divergence identity k={k}, {label}"),
                hd.max_div_defect <= 1e-10,
                format!("max defect {:.3e}", hd.max_div_defect),
            );
        }
    }
    Ok(())
}

fn suite_patch(rep: &mut SuiteReport) -> Result<()> {
    for method in [Method::Nc1, Method::Nc3, Method::Dg1] {
        let spec = manufactured_problem(method.order(), 1.0)?;
        let cfg = DriverConfig::new(method, StopRule::max_iterations(0));
        let res = run_adaptive(&spec, &cfg)?;
        let r = &res.records[0];
        rep.check(
            &format!("patch test {method}"),
            r.energy_error <= 1e-10 && r.eta <= 1e-9,
            format!("err {:.3e}, eta {:.3e}", r.energy_error, r.eta),
        );
    }
    let spec = manufactured_problem(1, 1e4)?;
    let cfg = DriverConfig::new(Method::Nc1, StopRule::max_iterations(0));
    let res = run_adaptive(&spec, &cfg)?;
    rep.check(
        "transmission patch test nc1, jump 1e4",
        res.records[0].eta <= 1e-9,
        format!("eta {:.3e}", res.records[0].eta),
    );
    Ok(())
}

fn suite_oracle(rep: &mut SuiteReport) {
    rep.check(
        "checkerboard exact-solution oracle",
        kellogg_problem().is_ok(),
        "interface continuity, flux continuity, FD Laplacian".into(),
    );
    rep.check(
        "L-shape exact-solution oracle",
        lshape_problem().is_ok(),
        "FD Laplacian residual vs f = -2".into(),
    );
    for k in [1usize, 3] {
        rep.check(
            &format!("manufactured consistency k={k}"),
            manufactured_problem(k, 1.0).is_ok() && manufactured_problem(k, 1e6).is_ok(),
            "FD residual of -div(A grad u) - f".into(),
        );
    }
}

fn cmd_verify(suite: SuiteName) -> Result<bool> {
    let mut rep = SuiteReport::new();
    match suite {
        SuiteName::Conformity => suite_conformity(&mut rep)?,
        SuiteName::Equilibration => suite_equilibration(&mut rep)?,
        SuiteName::Patch => suite_patch(&mut rep)?,
        SuiteName::Oracle => suite_oracle(&mut rep),
    }
    Ok(rep.failures == 0)
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("FEM_THREADS") {
        match threads.parse::<usize>() {
            Ok(n) if n >= 1 => {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()
                    .expect("rayon pool already initialized");
            }
            _ => {
                eprintln!("error: FEM_THREADS must be a positive integer, got {threads:?}");
                return ExitCode::FAILURE;
            }
        }
    }
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run {
            problem,
            method,
            theta,
            stop_rel,
            stop_dof,
            stop_iter,
            gamma,
            jump,
            out,
            dump_fields,
        } => cmd_run(
            problem,
            method.into(),
            theta,
            stop_rel,
            stop_dof,
            stop_iter,
            gamma,
            jump,
            out,
            dump_fields,
        )
        .map(|()| true),
        Command::Verify { suite } => cmd_verify(suite),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
