//! Report serializers: CSV, markdown, gnuplot and VTK legacy.

use std::fmt::Write as _;
use std::io;

use super::postprocess::PostProcessed;
use super::rates::Norm;
use super::study::ConvergenceReport;
use crate::field::{FluxField, ScalarField};
use crate::mesh::Mesh;
use crate::spaces::{FluxSpace, ScalarSpace};

pub const CSV_HEADER: &str = "problem,pair,omega,level,n,h,flux_dofs,scalar_dofs,norm,error,rate";

fn fmt_rate(r: Option<f64>) -> String {
    r.map_or_else(|| "-".to_string(), |r| format!("{r:.2}"))
}

fn norms_of(report: &ConvergenceReport) -> Vec<Norm> {
    Norm::ALL
        .into_iter()
        .filter(|n| report.rates.contains_key(n))
        .collect()
}

/// One row per level per norm. The rate column refers to the interval
/// ending at that level.
pub fn csv_rows(report: &ConvergenceReport, out: &mut String) {
    for norm in norms_of(report) {
        for (i, e) in report.errors.iter().enumerate() {
            let rate = if i == 0 {
                String::new()
            } else {
                report.rates[&norm][i - 1].map_or_else(String::new, |r| format!("{r:.6}"))
            };
            let n = report.levels[i].map_or_else(String::new, |n| n.to_string());
            writeln!(
                out,
                "{},{},{},{},{},{:.12e},{},{},{},{:.12e},{}",
                report.problem,
                report.pair,
                report.omega,
                i,
                n,
                e.h,
                e.flux_dofs,
                e.scalar_dofs,
                norm.key(),
                e.get(norm).unwrap(),
                rate
            )
            .unwrap();
        }
    }
}

pub fn to_csv(reports: &[ConvergenceReport]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in reports {
        csv_rows(r, &mut out);
    }
    out
}

/// Per-level error/rate table for one study, followed by the gate results.
pub fn to_markdown(report: &ConvergenceReport) -> String {
    let norms = norms_of(report);
    let mut out = String::new();
    writeln!(
        out,
        "### {} {} (omega = {})\n",
        report.problem, report.pair, report.omega
    )
    .unwrap();
    out.push_str("| n | h |");
    for n in &norms {
        write!(out, " {} | rate |", n.label()).unwrap();
    }
    out.push_str("\n|---|---|");
    for _ in &norms {
        out.push_str("---|---|");
    }
    out.push('\n');
    for (i, e) in report.errors.iter().enumerate() {
        let n = report.levels[i].map_or_else(|| format!("L{i}"), |n| n.to_string());
        write!(out, "| {n} | {:.4e} |", e.h).unwrap();
        for norm in &norms {
            let rate = if i == 0 {
                String::new()
            } else {
                fmt_rate(report.rates[norm][i - 1])
            };
            write!(out, " {:.4e} | {rate} |", e.get(*norm).unwrap()).unwrap();
        }
        out.push('\n');
    }
    if report.gated {
        out.push_str("\n| norm | gate | observed | result | note |\n|---|---|---|---|---|\n");
        for c in &report.checks {
            writeln!(
                out,
                "| {} | {} | {} | {} | {} |",
                c.norm.label(),
                c.gate,
                fmt_rate(c.observed),
                if c.passed { "pass" } else { "FAIL" },
                c.note
            )
            .unwrap();
        }
    } else {
        out.push_str("\nnot gated\n");
    }
    out
}

/// Errors and rates of `norm` for several studies side by side; the studies
/// must share their levels.
pub fn markdown_comparison(reports: &[ConvergenceReport], norm: Norm) -> String {
    let mut out = String::new();
    writeln!(out, "### {}\n", norm.label()).unwrap();
    out.push_str("| n |");
    for r in reports {
        write!(out, " {} omega={} | rate |", r.pair, r.omega).unwrap();
    }
    out.push_str("\n|---|");
    for _ in reports {
        out.push_str("---|---|");
    }
    out.push('\n');
    let levels = reports.iter().map(|r| r.errors.len()).min().unwrap_or(0);
    for i in 0..levels {
        let n = reports[0].levels[i].map_or_else(|| format!("L{i}"), |n| n.to_string());
        write!(out, "| {n} |").unwrap();
        for r in reports {
            let e = r.errors[i].get(norm).unwrap_or(f64::NAN);
            let rate = if i == 0 {
                String::new()
            } else {
                fmt_rate(r.rates.get(&norm).and_then(|v| v[i - 1]))
            };
            write!(out, " {e:.4e} | {rate} |").unwrap();
        }
        out.push('\n');
    }
    out
}

/// One row per study with final-interval rates and the expected values.
pub fn markdown_summary(reports: &[ConvergenceReport], norms: &[Norm]) -> String {
    let mut out = String::from("| pair | omega |");
    for n in norms {
        write!(out, " {} |", n.label()).unwrap();
    }
    out.push_str(" result |\n|---|---|");
    for _ in norms {
        out.push_str("---|");
    }
    out.push_str("---|\n");
    for r in reports {
        write!(out, "| {} | {} |", r.pair, r.omega).unwrap();
        for &n in norms {
            let expected = r
                .expected
                .as_ref()
                .and_then(|e| e.get(n))
                .map_or_else(String::new, |e| format!(" / {}", e.display_value()));
            write!(out, " {}{expected} |", fmt_rate(r.final_rate(n))).unwrap();
        }
        let result = if !r.gated {
            "not gated"
        } else if r.passed() {
            "pass"
        } else {
            "FAIL"
        };
        writeln!(out, " {result} |").unwrap();
    }
    out
}

/// Log-log error-vs-h plot with inline data blocks.
pub fn gnuplot_script(report: &ConvergenceReport, image: &str) -> String {
    let norms = norms_of(report);
    let mut out = String::new();
    writeln!(out, "set terminal pngcairo size 900,700").unwrap();
    writeln!(out, "set output '{image}'").unwrap();
    writeln!(
        out,
        "set logscale xy\nset format y '%.0e'\nset key left top"
    )
    .unwrap();
    writeln!(out, "set xlabel 'h'\nset ylabel 'error'").unwrap();
    writeln!(
        out,
        "set title '{} {} omega={}'",
        report.problem, report.pair, report.omega
    )
    .unwrap();
    for (j, norm) in norms.iter().enumerate() {
        writeln!(out, "$d{j} << EOD").unwrap();
        for e in &report.errors {
            let v = e.get(*norm).unwrap();
            if v > 0.0 {
                writeln!(out, "{:.12e} {:.12e}", e.h, v).unwrap();
            }
        }
        writeln!(out, "EOD").unwrap();
    }
    let plots: Vec<String> = norms
        .iter()
        .enumerate()
        .map(|(j, n)| format!("$d{j} using 1:2 with linespoints title '{}'", n.key()))
        .collect();
    writeln!(out, "plot {}", plots.join(", \\\n     ")).unwrap();
    out
}

/// Fields written per triangle corner (discontinuous representation) so
/// that `q_h` and `u*_h` keep their element-wise values.
pub struct VtkFields<'a> {
    pub mesh: &'a Mesh,
    pub flux: &'a FluxSpace,
    pub scalar: &'a ScalarSpace,
    pub q_h: &'a FluxField,
    pub u_h: &'a ScalarField,
    pub post: Option<&'a PostProcessed>,
}

pub fn write_vtk(w: &mut impl io::Write, title: &str, f: &VtkFields) -> io::Result<()> {
    let mesh = f.mesh;
    let nt = mesh.num_triangles();
    let corners = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "{}", title.replace('\n', " "))?;
    writeln!(w, "ASCII\nDATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {} double", 3 * nt)?;
    for t in 0..nt {
        for p in mesh.triangle_points(t) {
            writeln!(w, "{:.12e} {:.12e} 0", p[0], p[1])?;
        }
    }
    writeln!(w, "CELLS {} {}", nt, 4 * nt)?;
    for t in 0..nt {
        writeln!(w, "3 {} {} {}", 3 * t, 3 * t + 1, 3 * t + 2)?;
    }
    writeln!(w, "CELL_TYPES {nt}")?;
    for _ in 0..nt {
        writeln!(w, "5")?;
    }
    writeln!(w, "POINT_DATA {}", 3 * nt)?;
    writeln!(w, "SCALARS u_h double 1\nLOOKUP_TABLE default")?;
    for t in 0..nt {
        for c in corners {
            writeln!(w, "{:.12e}", f.u_h.eval(mesh, f.scalar, t, c).0)?;
        }
    }
    if let Some(post) = f.post {
        writeln!(w, "SCALARS u_star double 1\nLOOKUP_TABLE default")?;
        for t in 0..nt {
            for c in corners {
                writeln!(w, "{:.12e}", post.eval(mesh, t, c).0)?;
            }
        }
    }
    writeln!(w, "VECTORS q_h double")?;
    for t in 0..nt {
        for c in corners {
            let (q, _) = f.q_h.eval(mesh, f.flux, t, c);
            writeln!(w, "{:.12e} {:.12e} 0", q[0], q[1])?;
        }
    }
    writeln!(
        w,
        "CELL_DATA {nt}\nSCALARS div_q_h double 1\nLOOKUP_TABLE default"
    )?;
    for t in 0..nt {
        writeln!(
            w,
            "{:.12e}",
            f.q_h.eval(mesh, f.flux, t, [1.0 / 3.0, 1.0 / 3.0]).1
        )?;
    }
    Ok(())
}
