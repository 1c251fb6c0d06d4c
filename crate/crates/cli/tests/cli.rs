use std::path::Path;
use std::process::{Command, Output};

use oum_core::imaging::{save_pgm, PgmEncoding, Raster};
use oum_core::mesh::structured_grid_mesh;
use serde_json::Value;

fn oum(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oum")).args(args).output().expect("spawn oum")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn ok(args: &[&str]) -> Output {
    let out = oum(args);
    assert_eq!(code(&out), 0, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn rows(path: &Path) -> Vec<Vec<f64>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(code(&oum(&["--help"])), 0);
    assert_eq!(code(&oum(&["solve", "--help"])), 0);
    assert_eq!(code(&oum(&[])), 1);
    assert_eq!(code(&oum(&["frobnicate"])), 1);
    assert_eq!(code(&oum(&["solve", "--grid", "9"])), 1);
    assert_eq!(code(&oum(&["solve", "--grid", "9", "9", "--bogus"])), 1);
    assert_eq!(code(&oum(&["solve", "--grid", "9", "9", "--mesh", "m.json"])), 1);
}

#[test]
fn config_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = s(dir.path());
    let cases: &[&[&str]] = &[
        &["solve", "--out", out],
        &["solve", "--grid", "9", "9", "--preset", "nope", "--out", out],
        &["solve", "--grid", "9", "9", "--param", "A=2", "--out", out],
        &["solve", "--grid", "9", "9", "--param", "f", "--out", out],
        &["solve", "--grid", "9", "9", "--discipline", "fifo", "--out", out],
        &["solve", "--grid", "1", "9", "--out", out],
        &["solve", "--grid", "9", "9", "--q", "-1", "--out", out],
        &["solve", "--grid", "9", "9", "--preset", "image_derived", "--out", out],
        &["solve", "--mesh", "/nonexistent/mesh.json", "--out", out],
        &["solve", "--grid", "9", "9", "--config", "/nonexistent/run.json", "--out", out],
        &["convergence", "--sizes", "17", "--out", out],
        &["convergence", "--sizes", "17,17", "--out", out],
        &["trajectory", "--grid", "9", "9", "--out", out],
        &["trajectory", "--grid", "9", "9", "--from", "2", "0.5", "--out", out],
        &["trajectory", "--grid", "9", "9", "--from", "0.5", "0.5", "--step", "0", "--out", out],
        &["image", "--grid", "9", "9", "--out", out],
        &["oracle", "--grid", "9", "9", "--oracle-k", "0.5", "--out", out],
    ];
    for args in cases {
        let o = oum(args);
        assert_eq!(code(&o), 1, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn unwritable_output_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("plain");
    std::fs::write(&file, "x").unwrap();
    assert_eq!(code(&oum(&["solve", "--grid", "5", "5", "--out", s(&file)])), 1);
}

#[test]
fn failed_write_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::create_dir(dir.path().join("field.csv")).unwrap();
    assert_eq!(code(&oum(&["solve", "--grid", "5", "5", "--out", s(dir.path())])), 2);
}

#[test]
fn solve_writes_field_files_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["solve", "--grid", "65", "65", "--preset", "constant_isotropic", "--q", "0", "--out", s(dir.path())]);
    let field = rows(&dir.path().join("field.csv"));
    assert_eq!(field.len(), 4225);
    assert!(dir.path().join("field.pgm").exists());
    assert_eq!(rows(&dir.path().join("acceptance.csv")).len(), 4225);
    let m = manifest(dir.path());
    assert!((m["h"].as_f64().unwrap() - 2f64.sqrt() / 64.0).abs() < 1e-12);
    assert_eq!(m["vertex_count"], 4225);
    assert_eq!(m["discipline"], "exact");
    assert_eq!(m["bounds"]["f_min"], 1.0);
    assert!((m["anisotropy_radius"].as_f64().unwrap() - 2f64.sqrt() / 64.0).abs() < 1e-12);
    assert_eq!(m["config_hash"].as_str().unwrap().len(), 64);
    assert!(m["wall_time_s"].as_f64().unwrap() >= 0.0);
}

#[test]
fn discipline_recorded() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["solve", "--grid", "17", "17", "--discipline", "slf-lll", "--out", s(dir.path())]);
    assert_eq!(manifest(dir.path())["discipline"], "slf-lll");
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(
        &cfg,
        r#"{"grid": [9, 9], "preset": "constant_isotropic", "params": {"l": 2}, "q": 3, "out": "res"}"#,
    )
    .unwrap();
    ok(&["solve", "--config", s(&cfg), "--q", "0"]);
    let out = dir.path().join("res");
    let field = rows(&out.join("field.csv"));
    let centre = field.iter().find(|r| r[1] == 0.5 && r[2] == 0.5).unwrap();
    assert!((centre[3] - 1.0).abs() < 1e-12);
    assert!(field.iter().any(|r| r[3] == 0.0));
    let base = manifest(&out)["config_hash"].clone();
    ok(&["solve", "--config", s(&cfg), "--q", "1"]);
    assert_ne!(manifest(&out)["config_hash"], base);
}

#[test]
fn mesh_file_solve_has_no_pgm() {
    let dir = tempfile::tempdir().unwrap();
    let mesh_path = dir.path().join("mesh.json");
    structured_grid_mesh(9, 5, (0.0, 2.0), (0.0, 1.0)).unwrap().save_json(&mesh_path).unwrap();
    let out = dir.path().join("out");
    ok(&["solve", "--mesh", s(&mesh_path), "--out", s(&out)]);
    assert_eq!(rows(&out.join("field.csv")).len(), 45);
    assert!(!out.join("field.pgm").exists());

    std::fs::write(&mesh_path, r#"{"vertices": [[0, 0], [1, 0], [2, 0]], "triangles": [[0, 1, 2]]}"#).unwrap();
    assert_eq!(code(&oum(&["solve", "--mesh", s(&mesh_path), "--out", s(&out)])), 1);
}

#[test]
fn speed_grid_sets_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("speed.csv");
    std::fs::write(&csv, "# speeds\n0.5,1,2\n1,1,1\n2,1,0.5\n").unwrap();
    let out = dir.path().join("out");
    ok(&["solve", "--grid", "17", "17", "--speed-grid", s(&csv), "--param", "l=2", "--out", s(&out)]);
    let m = manifest(&out);
    assert_eq!(m["bounds"]["f_min"], 0.5);
    assert_eq!(m["bounds"]["f_max"], 2.0);
    assert_eq!(m["bounds"]["l_max"], 2.0);
    assert_eq!(
        code(&oum(&[
            "solve",
            "--grid",
            "9",
            "9",
            "--speed-grid",
            s(&csv),
            "--preset",
            "constant_isotropic",
            "--out",
            s(&out)
        ])),
        1
    );
}

#[test]
fn image_command_records_speed_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let pgm = dir.path().join("fp.pgm");
    let r = Raster::from_fn(32, 24, 255, |c, r| if (c / 3 + r / 4) % 2 == 0 { 220 } else { 30 }).unwrap();
    save_pgm(&r, &pgm, PgmEncoding::Binary).unwrap();
    let out = dir.path().join("out");
    ok(&["image", "--in", s(&pgm), "--invert", "--param", "f_min=0.2", "--param", "f_max=1.5", "--out", s(&out)]);
    for f in ["field.csv", "field.pgm", "acceptance.csv", "manifest.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let m = manifest(&out);
    assert_eq!(m["f_min"], 0.2);
    assert_eq!(m["f_max"], 1.5);
    assert_eq!(m["invert"], true);
    assert_eq!(m["vertex_count"], 32 * 24);
    std::fs::write(&pgm, "P2\n2 2\n255\n1 2 3\n").unwrap();
    assert_eq!(code(&oum(&["image", "--in", s(&pgm), "--out", s(&out)])), 1);
}

#[test]
fn oracle_examples() {
    let dir = tempfile::tempdir().unwrap();
    let run = |k: &str, extra: &[&str]| {
        let out = dir.path().join(format!("k{k}{}", extra.len()));
        let mut args = vec!["oracle", "--grid", "33", "33", "--oracle-k", k, "--out", s(&out)];
        args.extend_from_slice(extra);
        ok(&args);
        let m = manifest(&out);
        assert_eq!(m["oracle_k"].as_f64().unwrap(), k.parse::<f64>().unwrap());
        assert_eq!(rows(&out.join("oracle.csv")).len(), 33 * 33);
        (m["oracle_max_diff"].as_f64().unwrap(), m["h"].as_f64().unwrap())
    };
    let (d, h) = run("3", &[]);
    assert!(d <= 3.0 * h);
    let rotated = ["--preset", "elliptic_anisotropic", "--param", "A=2", "--param", "B=1", "--param", "theta=0.5"];
    let (d1, _) = run("1", &rotated);
    let (d3, _) = run("3", &rotated);
    assert!(d1 > d3, "k=1 {d1} vs k=3 {d3}");
}

#[test]
fn default_oracle_radius_is_three() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["oracle", "--grid", "9", "9", "--out", s(dir.path())]);
    assert_eq!(manifest(dir.path())["oracle_k"], 3.0);
}

#[test]
fn trajectory_from_centre() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["trajectory", "--grid", "65", "65", "--from", "0.5", "0.5", "--out", s(dir.path())]);
    let m = manifest(dir.path());
    let h = m["h"].as_f64().unwrap();
    let exit = [m["exit"][0].as_f64().unwrap(), m["exit"][1].as_f64().unwrap()];
    let midpoints = [[0.5, 0.0], [0.5, 1.0], [0.0, 0.5], [1.0, 0.5]];
    let nearest = midpoints
        .iter()
        .map(|p| ((p[0] - exit[0]).powi(2) + (p[1] - exit[1]).powi(2)).sqrt())
        .fold(f64::INFINITY, f64::min);
    assert!(nearest <= 2.0 * h);
    let t = rows(&dir.path().join("trajectory.csv"));
    assert_eq!(t.len(), m["points"].as_u64().unwrap() as usize);
    assert_eq!(t[0][0], 0.0);
    assert_eq!((t[0][1], t[0][2]), (0.5, 0.5));
}

#[test]
fn residual_command() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["residual", "--grid", "65", "65", "--out", s(dir.path())]);
    let r = rows(&dir.path().join("residual.csv"));
    assert_eq!(r.len(), 2 * 64 * 64);
    assert!(manifest(dir.path())["residual_median_abs"].as_f64().unwrap() <= 0.05);
}

#[test]
fn convergence_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("iso");
    ok(&["convergence", "--sizes", "9,17", "--out", s(&out)]);
    let header = std::fs::read_to_string(out.join("convergence.csv")).unwrap();
    assert!(header.starts_with("h,max_error,mean_error,ratio_vs_previous\n"));
    assert_eq!(rows(&out.join("convergence.csv")).len(), 2);
    assert_eq!(manifest(&out)["reference"], "exact");

    let out = dir.path().join("pv");
    ok(&["convergence", "--sizes", "9,17", "--preset", "position_varying", "--out", s(&out)]);
    let t = rows(&out.join("convergence.csv"));
    assert_eq!(manifest(&out)["reference"], "fine_grid_33");
    assert!(t[1][1] < t[0][1]);
}

#[test]
fn negative_coordinates_parse() {
    let dir = tempfile::tempdir().unwrap();
    let mesh_path = dir.path().join("mesh.json");
    structured_grid_mesh(9, 9, (-1.0, 1.0), (-1.0, 1.0)).unwrap().save_json(&mesh_path).unwrap();
    ok(&["trajectory", "--mesh", s(&mesh_path), "--from", "-0.25", "-0.5", "--out", s(dir.path())]);
}
