//! Command implementations behind the `lsfem` binary: `solve`, `study` and
//! `tables`. Each returns the process exit status.

pub mod config;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

pub use config::{
    parse_levels, MeshConfig, OutputConfig, Overrides, QuadratureConfig, Run, RunPlan, StudyConfig,
};

use crate::analysis::output::{
    gnuplot_script, markdown_comparison, markdown_summary, to_csv, to_markdown, write_vtk,
    VtkFields,
};
use crate::analysis::LevelSolution;
use crate::analysis::{
    expected_rates, k_expansions, level_errors, run_study_with, solve_level, supported_pairs,
    ConvergenceReport, ErrorReport, MeshSource, Norm, PostProcessed,
};
use crate::assembly::{assemble_with, AssemblyOptions};
use crate::error::{Error, Result};
use crate::linalg::SolveReport;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitStatus {
    Success,
    GateFailure,
    Usage,
    Numerical,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        match self {
            ExitStatus::Success => 0,
            ExitStatus::GateFailure => 1,
            ExitStatus::Usage => 2,
            ExitStatus::Numerical => 3,
        }
    }

    pub fn from_error(e: &Error) -> ExitStatus {
        match e {
            Error::NotConverged { .. }
            | Error::NonFinite(_)
            | Error::SingularLocalSystem { .. }
            | Error::NonPositiveCoefficient { .. }
            | Error::Inconsistent { .. }
            | Error::SizeExceeded { .. } => ExitStatus::Numerical,
            _ => ExitStatus::Usage,
        }
    }
}

fn finish<T>(r: Result<T>, ok: impl FnOnce(T) -> ExitStatus) -> ExitStatus {
    match r {
        Ok(v) => ok(v),
        Err(e) => {
            eprintln!("error: {e}");
            ExitStatus::from_error(&e)
        }
    }
}

fn slug(problem: &str, run: &Run) -> String {
    format!(
        "{problem}_{}_w{}",
        run.pair.to_string().replace('/', "-"),
        run.omega
    )
}

fn out_dir(outputs: &OutputConfig) -> Result<Option<PathBuf>> {
    match &outputs.dir {
        Some(d) => {
            fs::create_dir_all(d)?;
            Ok(Some(d.clone()))
        }
        None => Ok(None),
    }
}

fn write_vtk_file(
    path: &Path,
    title: &str,
    sol: &LevelSolution,
    post: Option<&PostProcessed>,
) -> Result<()> {
    let mut w = io::BufWriter::new(fs::File::create(path)?);
    let fields = VtkFields {
        mesh: &sol.mesh,
        flux: &sol.flux,
        scalar: &sol.scalar,
        q_h: &sol.q_h,
        u_h: &sol.u_h,
        post,
    };
    write_vtk(&mut w, title, &fields)?;
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct SolveSummary<'a> {
    problem: &'a str,
    pair: String,
    omega: f64,
    triangles: usize,
    h: f64,
    flux_dofs: usize,
    scalar_dofs: usize,
    solver: &'a SolveReport,
    errors: Option<&'a ErrorReport>,
    plan_hash: String,
}

/// One assembly and solve on the finest configured mesh.
pub fn cmd_solve(cfg: &StudyConfig, out: &mut dyn Write) -> ExitStatus {
    finish(solve(cfg, out), |_| ExitStatus::Success)
}

fn solve(cfg: &StudyConfig, out: &mut dyn Write) -> Result<()> {
    let plan = cfg.plan()?;
    let [run] = plan.runs.as_slice() else {
        return Err(Error::Config(format!(
            "solve takes one pair and one omega, got {} runs",
            plan.runs.len()
        )));
    };
    let problem = plan.problem_for(run)?;
    let mesh = match &plan.meshes {
        MeshSource::Structured(l) => crate::mesh::Mesh::structured(*l.last().unwrap())?,
        m => m.meshes()?.pop().unwrap(),
    };
    let dir = out_dir(&plan.outputs)?;
    if let (true, Some(d)) = (plan.outputs.matrix_market, &dir) {
        let flux = crate::spaces::FluxSpace::new(&mesh, run.pair.family, run.pair.k);
        let scalar = crate::spaces::ScalarSpace::new(&mesh, run.pair.m)?;
        let aopts = AssemblyOptions {
            degree: plan.options.assembly_degree,
            execution: plan.options.execution,
            dirichlet: None,
        };
        let system = assemble_with(&mesh, &flux, &scalar, &problem, &aopts)?;
        let mut w = io::BufWriter::new(fs::File::create(d.join("matrix.mtx"))?);
        system.matrix.write_matrix_market(&mut w)?;
        w.flush()?;
    }
    let sol = solve_level(mesh, run.pair, &problem, &plan.options)?;
    let (errors, post) = if problem.exact.is_some() {
        let (e, p) = level_errors(&sol, run.pair, &problem, &plan.options)?;
        (Some(e), p)
    } else {
        (None, None)
    };
    let summary = SolveSummary {
        problem: &plan.problem,
        pair: run.pair.to_string(),
        omega: run.omega,
        triangles: sol.mesh.num_triangles(),
        h: sol.mesh.h(),
        flux_dofs: sol.flux.dofs.num_dofs(),
        scalar_dofs: sol.scalar.dofs.num_dofs(),
        solver: &sol.report,
        errors: errors.as_ref(),
        plan_hash: plan.hash(),
    };
    writeln!(
        out,
        "{} {} omega={} triangles={} dofs={}+{}",
        summary.problem,
        summary.pair,
        summary.omega,
        summary.triangles,
        summary.flux_dofs,
        summary.scalar_dofs
    )?;
    writeln!(
        out,
        "solver: {:?}, {} iterations, relative residual {:.3e}",
        sol.report.method, sol.report.iterations, sol.report.relative_residual
    )?;
    if let Some(e) = &errors {
        for (n, v) in &e.norms {
            writeln!(out, "  {:<14} {v:.6e}", n.key())?;
        }
    }
    if let Some(d) = dir {
        fs::write(
            d.join("solve.json"),
            serde_json::to_string_pretty(&summary)? + "\n",
        )?;
        if plan.outputs.vtk {
            let title = format!("{} {} omega={}", plan.problem, run.pair, run.omega);
            write_vtk_file(&d.join("solution.vtk"), &title, &sol, post.as_ref())?;
        }
    }
    Ok(())
}

/// Runs every (pair, omega) of the plan; gate failures give exit status 1.
pub fn cmd_study(cfg: &StudyConfig, out: &mut dyn Write) -> ExitStatus {
    finish(study(cfg, out), |reports| {
        if reports.iter().all(|r| r.passed()) {
            ExitStatus::Success
        } else {
            ExitStatus::GateFailure
        }
    })
}

/// Runs the plan and writes the configured outputs.
pub fn study(cfg: &StudyConfig, out: &mut dyn Write) -> Result<Vec<ConvergenceReport>> {
    let plan = cfg.plan()?;
    let dir = out_dir(&plan.outputs)?;
    let mut reports = Vec::new();
    for run in &plan.runs {
        let problem = plan.problem_for(run)?;
        let name = slug(&plan.problem, run);
        let vtk_dir = dir.as_ref().filter(|_| plan.outputs.vtk);
        let report = run_study_with(
            &problem,
            run.pair,
            &plan.meshes,
            &plan.options,
            |level, sol, post| {
                if let Some(d) = vtk_dir {
                    let title = format!(
                        "{} {} omega={} level {level}",
                        plan.problem, run.pair, run.omega
                    );
                    write_vtk_file(&d.join(format!("{name}_L{level}.vtk")), &title, sol, post)?;
                }
                Ok(())
            },
        )?;
        let status = if !report.gated {
            "not gated"
        } else if report.passed() {
            "pass"
        } else {
            "FAIL"
        };
        writeln!(
            out,
            "{} {} omega={}: {status}",
            plan.problem, run.pair, run.omega
        )?;
        for c in report.failures() {
            writeln!(
                out,
                "  {}: observed {} vs {} ({})",
                c.norm.key(),
                c.observed.map_or("-".into(), |r| format!("{r:.3}")),
                c.gate,
                c.note
            )?;
        }
        if let (true, Some(d)) = (plan.outputs.gnuplot, &dir) {
            fs::write(
                d.join(format!("{name}.gp")),
                gnuplot_script(&report, &format!("{name}.png")),
            )?;
        }
        reports.push(report);
    }
    let markdown = study_markdown(&plan, &reports);
    if let Some(d) = &dir {
        if plan.outputs.csv {
            fs::write(d.join("study.csv"), to_csv(&reports))?;
        }
        if plan.outputs.markdown {
            fs::write(d.join("study.md"), &markdown)?;
        }
        if plan.outputs.json {
            fs::write(
                d.join("study.json"),
                serde_json::to_string_pretty(&reports)? + "\n",
            )?;
        }
    } else if plan.outputs.markdown {
        writeln!(out, "\n{markdown}")?;
    }
    Ok(reports)
}

fn study_markdown(plan: &RunPlan, reports: &[ConvergenceReport]) -> String {
    let mut md = format!("# {} study\n\nplan {}\n\n", plan.problem, plan.hash());
    if reports.len() > 1 {
        md.push_str("## Final-interval rates (observed / expected)\n\n");
        md.push_str(&markdown_summary(reports, &Norm::SUPER));
        md.push('\n');
    }
    if let Some(norm) = plan.compare {
        md.push_str(&markdown_comparison(reports, norm));
        md.push('\n');
    }
    for r in reports {
        md.push_str(&to_markdown(r));
        md.push('\n');
    }
    md
}

/// Prints the encoded rate predictions for every supported pair.
pub fn cmd_tables(out: &mut dyn Write) -> ExitStatus {
    finish(tables(out), |_| ExitStatus::Success)
}

fn tables(out: &mut dyn Write) -> Result<()> {
    writeln!(
        out,
        "Predicted rates for smooth data (omega != 0 unless noted)."
    )?;
    writeln!(
        out,
        "A starred rate needs H^3 regularity; gates use the fallback.\n"
    )?;
    for pair in supported_pairs() {
        let [k1, k2, k3] = k_expansions(pair.k);
        writeln!(
            out,
            "{pair}  k={} m={}  k1=min(k-2,1)={k1}  k2=min(k,2)={k2}  k3=min(k,1)={k3}",
            pair.k, pair.m
        )?;
        let e = expected_rates(pair, f64::INFINITY, 1.0)?;
        let e0 = expected_rates(pair, f64::INFINITY, 0.0)?;
        for norm in Norm::PLAIN.into_iter().chain(Norm::SUPER) {
            let x = e.get(norm).unwrap();
            let mut line = format!(
                "  {:<16} {} = {}",
                norm.label(),
                x.formula,
                x.display_value()
            );
            if let Some(f) = x.fallback {
                line += &format!(", fallback {f}");
            }
            let y = e0.get(norm).unwrap();
            if y.value != x.value {
                line += &format!("; omega = 0: {} = {}", y.formula, y.display_value());
            }
            writeln!(out, "{line}")?;
        }
    }
    writeln!(
        out,
        "\nSingular data (u in H^(2+t), t = 1/4), supercloseness norms; (x) = observed better:"
    )?;
    for pair in supported_pairs() {
        let e = expected_rates(pair, 0.25, 0.0)?;
        if !e.from_singular_table {
            continue;
        }
        let cells: Vec<String> = e.superclose.iter().map(|x| x.display_value()).collect();
        writeln!(out, "  {pair:<8} {}", cells.join("  "))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tables_list_expansions() {
        let mut buf = Vec::new();
        assert_eq!(cmd_tables(&mut buf), ExitStatus::Success);
        let text = String::from_utf8(buf).unwrap();
        let block = |pair: &str| -> String {
            let start = text.find(&format!("{pair}  k=")).unwrap();
            text[start..].lines().take(9).collect::<Vec<_>>().join("\n")
        };
        let bdm21 = block("BDM2/P1");
        assert!(bdm21.contains("k1=min(k-2,1)=0"));
        assert!(
            bdm21.contains("‖Πq−q_h‖         (k+k1)* = 2*, fallback 2"),
            "{bdm21}"
        );
        assert!(block("RT1/P1").contains("‖∇·(Πq−q_h)‖     k+1 = 2"));
        assert!(block("RT0/P1").contains("‖u−u_h‖          k+2 = 2"));
        assert!(block("BDM1/P2").contains("omega = 0: k+2 = 3"));
        assert_eq!(
            text.lines()
                .filter(|l| l.starts_with("  ") && l.contains("1.25"))
                .count(),
            6
        );
    }

    #[test]
    fn solve_reports_residual() {
        let cfg = StudyConfig {
            flux: Some("RT0".into()),
            scalar: Some("P1".into()),
            levels: Some(vec![8]),
            ..Default::default()
        };
        let mut buf = Vec::new();
        assert_eq!(cmd_solve(&cfg, &mut buf), ExitStatus::Success);
        let text = String::from_utf8(buf).unwrap();
        let res: f64 = text
            .split("relative residual ")
            .nth(1)
            .unwrap()
            .split_whitespace()
            .next()
            .unwrap()
            .parse()
            .unwrap();
        assert!(res <= 1e-11);
    }

    #[test]
    fn usage_errors_exit_2() {
        let mut cfg = StudyConfig {
            flux: Some("RT7q".into()),
            scalar: Some("P1".into()),
            levels: Some(vec![8]),
            ..Default::default()
        };
        assert_eq!(cmd_solve(&cfg, &mut io::sink()), ExitStatus::Usage);
        cfg.flux = Some("RT0".into());
        cfg.levels = Some(vec![1]);
        assert_eq!(cmd_solve(&cfg, &mut io::sink()), ExitStatus::Usage);
        assert_eq!(ExitStatus::Usage.code(), 2);
    }

    #[test]
    fn override_gives_gate_failure() {
        let mut cfg = StudyConfig {
            pairs: vec!["RT0/P1".into()],
            levels: Some(vec![4, 8, 16]),
            ..Default::default()
        };
        assert_eq!(cmd_study(&cfg, &mut io::sink()), ExitStatus::Success);
        cfg.expected_overrides.insert(Norm::SuperDivQ, 4.0);
        assert_eq!(cmd_study(&cfg, &mut io::sink()), ExitStatus::GateFailure);
        assert_eq!(ExitStatus::GateFailure.code(), 1);
    }

    #[test]
    fn study_writes_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = StudyConfig {
            pairs: vec!["RT0/P1".into()],
            omegas: vec![0.0, 1.0],
            levels: Some(vec![2, 4, 8]),
            compare: Some(Norm::SuperDivQ),
            postprocess: true,
            gate: false,
            outputs: OutputConfig {
                dir: Some(dir.path().to_path_buf()),
                vtk: true,
                gnuplot: true,
                json: true,
                ..Default::default()
            },
            ..Default::default()
        };
        assert_eq!(cmd_study(&cfg, &mut io::sink()), ExitStatus::Success);
        for f in [
            "study.csv",
            "study.md",
            "study.json",
            "smooth1_RT0-P1_w0.gp",
            "smooth1_RT0-P1_w1_L2.vtk",
        ] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        let md = fs::read_to_string(dir.path().join("study.md")).unwrap();
        assert!(md.contains("RT0/P1 omega=0 | rate | RT0/P1 omega=1 | rate |"));
    }
}
