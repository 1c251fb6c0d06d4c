use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use anyhow::{anyhow, Context};
use serde_json::{json, Value};

use oum_core::field::{acceptance_csv, median_abs, FieldFormat};
use oum_core::imaging::{load_pgm, raster_to_mesh, raster_to_model, ImageModelParams, Raster};
use oum_core::mesh::structured_grid_mesh;
use oum_core::model::{preset, validate_bounds, PresetKind, ScalarGrid};
use oum_core::oracle::graph_value;
use oum_core::solver::solve;
use oum_core::study::{convergence_csv, convergence_study, isotropic_exact, Reference};
use oum_core::trajectory::extract_trajectory;
use oum_core::{Point, SolveOptions, SpeedCostModel, TrajectoryError, TriMesh, ValueField};

use crate::config::{MeshSource, RunConfig};

/// Exit 1 for bad input, exit 2 for failures while computing.
#[derive(Debug)]
pub enum CliError {
    Config(anyhow::Error),
    Runtime(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(e) | CliError::Runtime(e) => write!(f, "{e:#}"),
        }
    }
}

trait Classify<T> {
    fn config(self) -> Result<T, CliError>;
    fn runtime(self) -> Result<T, CliError>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn config(self) -> Result<T, CliError> {
        self.map_err(|e| CliError::Config(e.into()))
    }
    fn runtime(self) -> Result<T, CliError> {
        self.map_err(|e| CliError::Runtime(e.into()))
    }
}

fn config_err(msg: impl std::fmt::Display) -> CliError {
    CliError::Config(anyhow!("{msg}"))
}

struct Problem {
    mesh: Arc<TriMesh>,
    model: SpeedCostModel,
}

fn take_keys(params: &BTreeMap<String, f64>, allowed: &[&str], context: &str) -> Result<(), CliError> {
    match params.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(config_err(format!("unknown parameter `{k}` for {context}"))),
        None => Ok(()),
    }
}

fn image_params(cfg: &RunConfig) -> Result<ImageModelParams, CliError> {
    take_keys(&cfg.params, &["f_min", "f_max", "l", "pixel_size"], "an image model")?;
    let d = ImageModelParams::default();
    let get = |k: &str, default: f64| cfg.params.get(k).copied().unwrap_or(default);
    Ok(ImageModelParams {
        f_min: get("f_min", d.f_min),
        f_max: get("f_max", d.f_max),
        invert: cfg.invert,
        l_const: get("l", d.l_const),
        q_const: cfg.q,
        pixel_size: get("pixel_size", d.pixel_size),
    })
}

fn preset_kind(cfg: &RunConfig) -> Result<PresetKind, CliError> {
    match &cfg.preset {
        Some(name) => name.parse().config(),
        None if cfg.speed_grid.is_some() => Ok(PresetKind::PositionVarying),
        None => Ok(PresetKind::ConstantIsotropic),
    }
}

/// Model over the rectangle `lo..hi` for non-image sources.
fn analytic_model(cfg: &RunConfig, lo: Point, hi: Point) -> Result<SpeedCostModel, CliError> {
    let kind = preset_kind(cfg)?;
    if kind == PresetKind::ImageDerived {
        return Err(config_err("preset image_derived needs --image"));
    }
    if let Some(path) = &cfg.speed_grid {
        if kind != PresetKind::PositionVarying {
            return Err(config_err("--speed-grid only applies to the position_varying preset"));
        }
        take_keys(&cfg.params, &["l"], "position_varying with --speed-grid")?;
        let grid = ScalarGrid::from_csv(path, (lo.x, hi.x), (lo.y, hi.y)).config()?;
        let l = cfg.params.get("l").copied().unwrap_or(1.0);
        return SpeedCostModel::position_varying_grid(grid, l, cfg.q).config();
    }
    preset(kind, &cfg.params, cfg.q).config()
}

fn load_problem(cfg: &RunConfig) -> Result<Problem, CliError> {
    let (mesh, model) = match &cfg.source {
        None => return Err(config_err("no mesh source: give one of --grid, --mesh, --image")),
        Some(MeshSource::Image(path)) => {
            if !matches!(preset_kind(cfg)?, PresetKind::ImageDerived) && cfg.preset.is_some() {
                return Err(config_err("--image implies the image_derived preset"));
            }
            let raster: Raster = load_pgm(path).with_context(|| format!("loading {}", path.display())).config()?;
            let params = image_params(cfg)?;
            let mesh = raster_to_mesh(&raster, params.pixel_size).config()?;
            let model = raster_to_model(&raster, &params).config()?;
            (mesh, model)
        }
        Some(src) => {
            let mesh = match src {
                MeshSource::Grid { nx, ny } => structured_grid_mesh(*nx, *ny, (0.0, 1.0), (0.0, 1.0)).config()?,
                MeshSource::File(path) => {
                    TriMesh::load_json(path).with_context(|| format!("loading {}", path.display())).config()?
                }
                MeshSource::Image(_) => unreachable!(),
            };
            let (lo, hi) = mesh.bounding_box();
            let model = analytic_model(cfg, lo, hi)?;
            (mesh, model)
        }
    };
    let report = validate_bounds(&model, &mesh, 16);
    if !report.is_ok() {
        let first = &report.violations[0];
        return Err(config_err(format!(
            "model `{}` violates its declared bounds ({} violations, first: {first:?})",
            model.name(),
            report.violations.len()
        )));
    }
    Ok(Problem { mesh: Arc::new(mesh), model })
}

fn options(cfg: &RunConfig) -> SolveOptions {
    SolveOptions { discipline: cfg.discipline, radius_scale: cfg.radius_scale, ..Default::default() }
}

fn prepare_out(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display())).config()
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<(), CliError> {
    let path = dir.join(name);
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display())).runtime()
}

fn write_field_files(dir: &Path, field: &ValueField) -> Result<Vec<&'static str>, CliError> {
    let mut written = vec!["field.csv"];
    field.write(dir.join("field.csv"), FieldFormat::Csv).runtime()?;
    if field.mesh().grid_shape().is_some() {
        field.write(dir.join("field.pgm"), FieldFormat::PgmGrid).runtime()?;
        written.push("field.pgm");
    }
    if let Some(log) = field.acceptance_order() {
        write_text(dir, "acceptance.csv", &acceptance_csv(log))?;
        written.push("acceptance.csv");
    }
    Ok(written)
}

fn manifest(cfg: &RunConfig, p: &Problem, wall_time: f64, extra: Value) -> Result<Value, CliError> {
    let bounds = p.model.bounds();
    let radius = bounds.anisotropy_radius(p.mesh.h()).ok().map(|r| r * cfg.radius_scale);
    let mut m = json!({
        "command": cfg.command,
        "config_hash": cfg.hash().config()?,
        "model": p.model.name(),
        "vertex_count": p.mesh.num_vertices(),
        "triangle_count": p.mesh.triangles().len(),
        "h": p.mesh.h(),
        "bounds": bounds,
        "anisotropy_radius": radius,
        "radius_scale": cfg.radius_scale,
        "discipline": cfg.discipline.as_str(),
        "wall_time_s": wall_time,
    });
    if let (Value::Object(m), Value::Object(extra)) = (&mut m, extra) {
        m.extend(extra);
    }
    Ok(m)
}

fn write_manifest(dir: &Path, m: &Value) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(m).runtime()?;
    write_text(dir, "manifest.json", &(text + "\n"))
}

/// Loads the problem, solves it and writes the field files.
fn solve_and_write(cfg: &RunConfig) -> Result<(Problem, ValueField, f64), CliError> {
    solve_problem(cfg, load_problem(cfg)?)
}

fn solve_problem(cfg: &RunConfig, problem: Problem) -> Result<(Problem, ValueField, f64), CliError> {
    prepare_out(&cfg.out)?;
    let start = Instant::now();
    let field = solve(&problem.mesh, &problem.model, &options(cfg)).runtime()?;
    let wall = start.elapsed().as_secs_f64();
    let written = write_field_files(&cfg.out, &field)?;
    let (lo, hi) = field.min_max();
    println!(
        "solved {} vertices (h = {:.5}) in {:.3} s; U in [{lo:.6}, {hi:.6}]; wrote {}",
        problem.mesh.num_vertices(),
        problem.mesh.h(),
        wall,
        written.join(", ")
    );
    Ok((problem, field, wall))
}

pub fn cmd_solve(cfg: &RunConfig) -> Result<(), CliError> {
    let (p, _, wall) = solve_and_write(cfg)?;
    write_manifest(&cfg.out, &manifest(cfg, &p, wall, json!({}))?)
}

pub fn cmd_image(cfg: &RunConfig) -> Result<(), CliError> {
    if !matches!(cfg.source, Some(MeshSource::Image(_))) {
        return Err(config_err("image needs --image FILE (or --in FILE)"));
    }
    let (p, _, wall) = solve_and_write(cfg)?;
    let extra = json!({ "invert": cfg.invert, "f_min": p.model.bounds().f_min, "f_max": p.model.bounds().f_max });
    write_manifest(&cfg.out, &manifest(cfg, &p, wall, extra)?)
}

pub fn cmd_convergence(cfg: &RunConfig) -> Result<(), CliError> {
    let distinct: std::collections::BTreeSet<_> = cfg.sizes.iter().collect();
    if distinct.len() < 2 {
        return Err(config_err("convergence needs at least two distinct grid sizes (--sizes N1,N2,...)"));
    }
    if cfg.sizes.iter().any(|&n| n < 2) {
        return Err(config_err("grid sizes must be at least 2"));
    }
    if matches!(cfg.source, Some(MeshSource::File(_)) | Some(MeshSource::Image(_))) {
        return Err(config_err("convergence runs on unit-square grids given by --sizes"));
    }
    let model = analytic_model(cfg, Point::new(0.0, 0.0), Point::new(1.0, 1.0))?;
    let kind = preset_kind(cfg)?;
    prepare_out(&cfg.out)?;

    let exact = isotropic_exact(&model);
    let finest = *cfg.sizes.iter().max().expect("non-empty");
    let (reference, reference_name) = if kind == PresetKind::ConstantIsotropic {
        (Reference::Exact(&exact), "exact".to_string())
    } else {
        let n = 2 * (finest - 1) + 1;
        (Reference::FineGrid(n), format!("fine_grid_{n}"))
    };
    let start = Instant::now();
    let rows = convergence_study(&cfg.sizes, &model, &options(cfg), reference).runtime()?;
    let wall = start.elapsed().as_secs_f64();
    write_text(&cfg.out, "convergence.csv", &convergence_csv(&rows))?;

    println!("{:>6} {:>12} {:>12} {:>12} {:>8}", "n", "h", "max_error", "mean_error", "ratio");
    for r in &rows {
        println!(
            "{:>6} {:>12.5e} {:>12.5e} {:>12.5e} {:>8.3}",
            r.n, r.h, r.max_error, r.mean_error, r.ratio_vs_previous
        );
    }
    let m = json!({
        "command": cfg.command,
        "config_hash": cfg.hash().config()?,
        "model": model.name(),
        "bounds": model.bounds(),
        "discipline": cfg.discipline.as_str(),
        "radius_scale": cfg.radius_scale,
        "reference": reference_name,
        "sizes": cfg.sizes,
        "wall_time_s": wall,
    });
    write_manifest(&cfg.out, &m)
}

pub fn cmd_oracle(cfg: &RunConfig) -> Result<(), CliError> {
    let (p, field, wall) = solve_and_write(cfg)?;
    let start = Instant::now();
    let graph = graph_value(&p.mesh, &p.model, cfg.oracle_k);
    let graph_wall = start.elapsed().as_secs_f64();
    let mut csv = String::from("vertex,U_solver,U_graph,diff\n");
    let mut max_diff = 0.0f64;
    for (v, (&u, &g)) in field.values().iter().zip(&graph).enumerate() {
        let d = u - g;
        max_diff = max_diff.max(d.abs());
        writeln!(csv, "{v},{u:.16e},{g:.16e},{d:.16e}").expect("string write");
    }
    write_text(&cfg.out, "oracle.csv", &csv)?;
    let h = p.mesh.h();
    println!("oracle k = {}: max |U_solver - U_graph| = {max_diff:.6e} ({:.4} h)", cfg.oracle_k, max_diff / h);
    let extra = json!({
        "oracle_k": cfg.oracle_k,
        "oracle_max_diff": max_diff,
        "oracle_max_diff_over_h": max_diff / h,
        "oracle_wall_time_s": graph_wall,
    });
    write_manifest(&cfg.out, &manifest(cfg, &p, wall, extra)?)
}

pub fn cmd_trajectory(cfg: &RunConfig) -> Result<(), CliError> {
    let [x, y] = cfg.from.ok_or_else(|| config_err("trajectory needs --from X Y"))?;
    let x0 = Point::new(x, y);
    let problem = load_problem(cfg)?;
    if problem.mesh.locate_simplex(x0).is_err() {
        return Err(config_err(format!("start point ({x}, {y}) is outside the domain")));
    }
    let (p, field, wall) = solve_problem(cfg, problem)?;
    let step = cfg.step.unwrap_or(p.mesh.h() / 2.0);
    let traj = extract_trajectory(&field, &p.model, x0, step).map_err(|e| match e {
        TrajectoryError::OutsideDomain { .. } | TrajectoryError::InvalidStep(_) => CliError::Config(e.into()),
        other => CliError::Runtime(other.into()),
    })?;
    write_text(&cfg.out, "trajectory.csv", &traj.to_csv())?;
    let u0 = field.interpolate(x0).runtime()?;
    let exit = traj.exit_point();
    println!(
        "trajectory from ({x}, {y}): {} points, exit ({:.6}, {:.6}), J = {:.6}, U(x0) = {u0:.6}",
        traj.points.len(),
        exit.x,
        exit.y,
        traj.total_cost
    );
    let extra = json!({
        "from": [x, y],
        "step": step,
        "points": traj.points.len(),
        "exit": [exit.x, exit.y],
        "value_at_start": u0,
        "running_cost": traj.running_cost,
        "terminal_cost": traj.terminal_cost,
        "total_cost": traj.total_cost,
    });
    write_manifest(&cfg.out, &manifest(cfg, &p, wall, extra)?)
}

pub fn cmd_residual(cfg: &RunConfig) -> Result<(), CliError> {
    const RESIDUAL_DIRECTIONS: usize = 64;
    let (p, field, wall) = solve_and_write(cfg)?;
    let r = field.hjb_residual(&p.model, RESIDUAL_DIRECTIONS).runtime()?;
    let mut csv = String::from("triangle,cx,cy,residual\n");
    for (t, &res) in r.iter().enumerate() {
        let c = p.mesh.centroid(t);
        writeln!(csv, "{t},{:.16e},{:.16e},{res:.16e}", c.x, c.y).expect("string write");
    }
    write_text(&cfg.out, "residual.csv", &csv)?;
    let median = median_abs(&r);
    let max = r.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    println!("residual over {} triangles: median |r| = {median:.6e}, max |r| = {max:.6e}", r.len());
    let extra =
        json!({ "residual_median_abs": median, "residual_max_abs": max, "residual_directions": RESIDUAL_DIRECTIONS });
    write_manifest(&cfg.out, &manifest(cfg, &p, wall, extra)?)
}
