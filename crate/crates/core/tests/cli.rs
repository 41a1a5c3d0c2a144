use std::path::Path;
use std::process::{Command, Output};

fn lsfem(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lsfem"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn tables_rows() {
    let o = lsfem(&["tables"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    // header line of the pair plus its indented norm lines
    let row = |pair: &str| {
        let mut lines = text
            .lines()
            .skip_while(|l| !l.starts_with(&format!("{pair}  k=")));
        let head = lines.next().unwrap().to_string();
        lines
            .take_while(|l| l.starts_with("  "))
            .fold(head, |acc, l| acc + "\n" + l)
    };
    assert!(
        row("BDM2/P1").contains("(k+k1)* = 2*, fallback 2"),
        "{}",
        row("BDM2/P1")
    );
    assert!(
        row("RT1/P1").contains("‖∇·(Πq−q_h)‖     k+1 = 2"),
        "{}",
        row("RT1/P1")
    );
    assert!(
        row("RT0/P1").contains("‖u−u_h‖          k+2 = 2"),
        "{}",
        row("RT0/P1")
    );
    assert!(row("RT0/P1").contains("k1=min(k-2,1)=-2"));
}

#[test]
fn solve_writes_report_and_fields() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = lsfem(&[
        "solve",
        "--flux",
        "RT0",
        "--scalar",
        "P1",
        "--levels",
        "8",
        "--out",
        out,
        "--vtk",
        "--matrix-market",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("solve.json")).unwrap()).unwrap();
    assert!(report["solver"]["relative_residual"].as_f64().unwrap() <= 1e-11);
    assert_eq!(report["triangles"], 128);
    let vtk = std::fs::read_to_string(dir.path().join("solution.vtk")).unwrap();
    assert!(vtk.starts_with("# vtk DataFile Version"));
    let mtx = std::fs::read_to_string(dir.path().join("matrix.mtx")).unwrap();
    assert!(mtx.starts_with("%%MatrixMarket matrix coordinate real"));
}

#[test]
fn usage_errors_exit_2() {
    let o = lsfem(&["solve", "--flux", "XY1", "--scalar", "P1", "--levels", "8"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(
        stderr(&o).contains("RT0") && stderr(&o).contains("BDM2"),
        "{}",
        stderr(&o)
    );

    let o = lsfem(&["solve", "--flux", "RT0", "--scalar", "P1", "--levels", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("degenerate"), "{}", stderr(&o));

    assert_eq!(lsfem(&["study", "--bogus"]).status.code(), Some(2));
    assert_eq!(
        lsfem(&["study", "--flux", "RT0", "--scalar", "P1", "--levels", "8,4,16"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        lsfem(&["study", "-c", "/nonexistent/config.json"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn wrong_expected_rate_fails_the_gate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("wrong.json");
    std::fs::write(
        &cfg,
        r#"{"problem": "smooth1", "flux": "RT0", "scalar": "P1", "levels": [4, 8, 16], "expected_overrides": {"u": 5.0}}"#,
    )
    .unwrap();
    let o = lsfem(&["study", "-c", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    // the same run without the override passes
    std::fs::write(
        &cfg,
        r#"{"problem": "smooth1", "flux": "RT0", "scalar": "P1", "levels": [4, 8, 16, 32]}"#,
    )
    .unwrap();
    assert_eq!(
        lsfem(&["study", "-c", cfg.to_str().unwrap()]).status.code(),
        Some(0)
    );
}

#[test]
fn table4_config_writes_comparison() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../reproduce/table4.json");
    let o = lsfem(&[
        "study",
        "-c",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "--gnuplot",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    let md = std::fs::read_to_string(dir.path().join("study.md")).unwrap();
    assert!(md.contains("omega = 0") && md.contains("omega = 1"), "{md}");
    let csv = std::fs::read_to_string(dir.path().join("study.csv")).unwrap();
    assert!(csv.starts_with("problem,pair,omega,level,n,h,flux_dofs,scalar_dofs,norm,error,rate\n"));
    assert!(dir.path().join("smooth1_BDM1-P2_w0.gp").exists());
}
