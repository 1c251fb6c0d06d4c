//! The converged value field and what can be asked of it.

use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;
use std::sync::Arc;

use thiserror::Error;

use crate::mesh::{MeshError, Point, TriMesh};
use crate::minimize::golden_section;
use crate::model::{Direction, SpeedCostModel};
use crate::solver::{Acceptance, UpwindSource};

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("field has {got} values for a mesh with {expected} vertices")]
    LengthMismatch { expected: usize, got: usize },
    #[error("vertex {0} has a non-finite value")]
    NonFinite(usize),
    #[error("triangle {0} is degenerate")]
    DegenerateTriangle(usize),
    #[error("mesh is not a structured grid")]
    NotStructuredGrid,
    #[error("malformed field file, line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Per-vertex values `U` on a mesh, extended to the whole domain by
/// piecewise-linear interpolation.
#[derive(Debug, Clone)]
pub struct ValueField {
    mesh: Arc<TriMesh>,
    values: Vec<f64>,
    acceptance: Option<Vec<Acceptance>>,
    upwind: Option<Vec<UpwindSource>>,
}

impl ValueField {
    pub fn new(mesh: Arc<TriMesh>, values: Vec<f64>) -> Result<Self, FieldError> {
        if values.len() != mesh.num_vertices() {
            return Err(FieldError::LengthMismatch { expected: mesh.num_vertices(), got: values.len() });
        }
        if let Some(v) = values.iter().position(|u| !u.is_finite()) {
            return Err(FieldError::NonFinite(v));
        }
        Ok(Self { mesh, values, acceptance: None, upwind: None })
    }

    /// Samples `g` at every vertex.
    pub fn from_fn(mesh: Arc<TriMesh>, g: impl Fn(Point) -> f64) -> Result<Self, FieldError> {
        let values = mesh.vertices().iter().map(|&p| g(p)).collect();
        Self::new(mesh, values)
    }

    pub fn with_acceptance(mut self, log: Vec<Acceptance>) -> Self {
        self.acceptance = Some(log);
        self
    }

    pub fn with_upwind(mut self, upwind: Vec<UpwindSource>) -> Self {
        self.upwind = Some(upwind);
        self
    }

    pub fn mesh(&self) -> &Arc<TriMesh> {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, v: usize) -> f64 {
        self.values[v]
    }

    pub fn acceptance_order(&self) -> Option<&[Acceptance]> {
        self.acceptance.as_deref()
    }

    pub fn upwind(&self) -> Option<&[UpwindSource]> {
        self.upwind.as_deref()
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &u| (lo.min(u), hi.max(u)))
    }

    /// `U(p) = Σ ζ_i U(x_i)` over the triangle containing `p`.
    pub fn interpolate(&self, p: Point) -> Result<f64, FieldError> {
        let (t, z) = self.mesh.locate_simplex(p)?;
        let [i, j, k] = self.mesh.triangles()[t];
        Ok(z[0] * self.values[i] + z[1] * self.values[j] + z[2] * self.values[k])
    }

    /// Constant gradient of the linear interpolant on triangle `t`.
    pub fn gradient_in_simplex(&self, t: usize) -> Result<Point, FieldError> {
        let [i, j, k] = self.mesh.triangles()[t];
        let (a, b, c) = (self.mesh.vertex(i), self.mesh.vertex(j), self.mesh.vertex(k));
        let (e1, e2) = (b - a, c - a);
        let det = e1.cross(e2);
        let scale = e1.dot(e1).max(e2.dot(e2));
        if !(det.abs() > 1e-14 * scale) {
            return Err(FieldError::DegenerateTriangle(t));
        }
        let d1 = self.values[j] - self.values[i];
        let d2 = self.values[k] - self.values[i];
        // [e1; e2] g = [d1; d2]
        Ok(Point::new((d1 * e2.y - d2 * e1.y) / det, (e1.x * d2 - e2.x * d1) / det))
    }

    /// Per-triangle signed residual of `min_a (Du . a) f / l + 1` at the
    /// centroid, with `n_dirs` angular samples (at least 16) refined by
    /// golden section around the best sample.
    pub fn hjb_residual(&self, model: &SpeedCostModel, n_dirs: usize) -> Result<Vec<f64>, FieldError> {
        let n_dirs = n_dirs.max(16);
        let dtheta = TAU / n_dirs as f64;
        (0..self.mesh.triangles().len())
            .map(|t| {
                let du = self.gradient_in_simplex(t)?;
                let x = self.mesh.centroid(t);
                let g = |theta: f64| {
                    let a = Direction::from_angle(theta);
                    du.dot(a.as_point()) * model.speed(x, a) / model.running_cost(x, a)
                };
                let (mut best_theta, mut best) = (0.0, g(0.0));
                for k in 1..n_dirs {
                    let theta = k as f64 * dtheta;
                    let v = g(theta);
                    if v < best {
                        best = v;
                        best_theta = theta;
                    }
                }
                let (_, refined) = golden_section(g, best_theta - dtheta, best_theta + dtheta, 1e-10);
                Ok(best.min(refined) + 1.0)
            })
            .collect()
    }

    /// CSV with header `vertex_index,x,y,U`, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(64 * self.values.len() + 32);
        s.push_str("vertex_index,x,y,U\n");
        for (v, (&p, &u)) in self.mesh.vertices().iter().zip(&self.values).enumerate() {
            writeln!(s, "{v},{:.16e},{:.16e},{:.16e}", p.x, p.y, u).expect("string write");
        }
        s
    }

    /// Grayscale P2 image of a structured-grid field, row 0 at the top.
    /// Values map affinely from `[min U, max U]` to `0..=255`; a constant
    /// field maps to all zeros.
    pub fn to_pgm(&self) -> Result<String, FieldError> {
        let g = self.mesh.grid_shape().ok_or(FieldError::NotStructuredGrid)?;
        let (lo, hi) = self.min_max();
        let span = hi - lo;
        let mut s = format!("P2\n{} {}\n255\n", g.nx, g.ny);
        for row in 0..g.ny {
            let j = g.ny - 1 - row;
            let line: Vec<String> = (0..g.nx)
                .map(|i| {
                    let u = self.values[j * g.nx + i];
                    let level = if span > 0.0 { (255.0 * (u - lo) / span).round() as u32 } else { 0 };
                    level.min(255).to_string()
                })
                .collect();
            s.push_str(&line.join(" "));
            s.push('\n');
        }
        Ok(s)
    }

    pub fn write(&self, path: impl AsRef<Path>, format: FieldFormat) -> Result<(), FieldError> {
        let text = match format {
            FieldFormat::Csv => self.to_csv(),
            FieldFormat::PgmGrid => self.to_pgm()?,
        };
        let mut f = std::fs::File::create(path)?;
        f.write_all(text.as_bytes())?;
        Ok(())
    }

    /// Reads a field CSV written by [`ValueField::to_csv`] back onto `mesh`.
    /// Vertex positions in the file must match the mesh.
    pub fn read_csv(path: impl AsRef<Path>, mesh: Arc<TriMesh>) -> Result<Self, FieldError> {
        Self::from_csv_str(&std::fs::read_to_string(path)?, mesh)
    }

    pub fn from_csv_str(text: &str, mesh: Arc<TriMesh>) -> Result<Self, FieldError> {
        let mut values = vec![f64::NAN; mesh.num_vertices()];
        let mut seen = 0;
        for (lineno, line) in text.lines().enumerate().skip(1) {
            let err = |msg: String| FieldError::Parse { line: lineno + 1, msg };
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 4 {
                return Err(err(format!("expected 4 columns, found {}", cols.len())));
            }
            let v: usize = cols[0].trim().parse().map_err(|e| err(format!("{e}")))?;
            let nums: Vec<f64> = cols[1..]
                .iter()
                .map(|c| c.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| err(format!("{e}")))?;
            if v >= values.len() {
                return Err(err(format!("vertex {v} out of range")));
            }
            let p = mesh.vertex(v);
            let tol = 1e-12 * (1.0 + p.x.abs().max(p.y.abs()));
            if (p.x - nums[0]).abs() > tol || (p.y - nums[1]).abs() > tol {
                return Err(err(format!("vertex {v} position does not match the mesh")));
            }
            values[v] = nums[2];
            seen += 1;
        }
        if seen != mesh.num_vertices() {
            return Err(FieldError::LengthMismatch { expected: mesh.num_vertices(), got: seen });
        }
        Self::new(mesh, values)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldFormat {
    Csv,
    PgmGrid,
}

/// Acceptance log as CSV: `vertex_index,accepted_value,step`.
pub fn acceptance_csv(log: &[Acceptance]) -> String {
    let mut s = String::from("vertex_index,accepted_value,step\n");
    for a in log {
        writeln!(s, "{},{:.16e},{}", a.vertex, a.value, a.step).expect("string write");
    }
    s
}

/// Median of absolute values; `NaN` for an empty slice.
pub fn median_abs(values: &[f64]) -> f64 {
    let mut a: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    if a.is_empty() {
        return f64::NAN;
    }
    a.sort_by(f64::total_cmp);
    let m = a.len() / 2;
    if a.len() % 2 == 1 {
        a[m]
    } else {
        0.5 * (a[m - 1] + a[m])
    }
}
