//! Problem data: speed `f(x, a)`, running cost `l(x, a)` and terminal cost
//! `q(x)`, together with the bounds the model author declares for them.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::mesh::{Point, TriMesh};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid bounds: {0}")]
    InvalidBounds(String),
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// A unit vector. Construction normalizes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction(Point);

impl Direction {
    /// Normalizes `v`; `None` for zero or non-finite input.
    pub fn new(v: Point) -> Option<Self> {
        let n = v.norm();
        if n > 0.0 && n.is_finite() {
            Some(Self(v * (1.0 / n)))
        } else {
            None
        }
    }

    pub fn from_angle(theta: f64) -> Self {
        Self(Point::new(theta.cos(), theta.sin()))
    }

    pub fn x(self) -> f64 {
        self.0.x
    }

    pub fn y(self) -> f64 {
        self.0.y
    }

    pub fn as_point(self) -> Point {
        self.0
    }
}

/// Declared bounds `f1 <= f <= f2`, `l1 <= l <= l2`, `q1 <= q <= q2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bounds {
    pub f_min: f64,
    pub f_max: f64,
    pub l_min: f64,
    pub l_max: f64,
    pub q_min: f64,
    pub q_max: f64,
}

impl Bounds {
    /// Checks `0 < f1 <= f2 < inf`, `0 < l1 <= l2 < inf`, `0 <= q1 <= q2 < inf`.
    /// `q1 = 0` is accepted so the pure exit-distance problem (`q = 0`) is
    /// expressible.
    pub fn validate(&self) -> Result<(), ModelError> {
        let all = [self.f_min, self.f_max, self.l_min, self.l_max, self.q_min, self.q_max];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::InvalidBounds(format!("non-finite bound in {self:?}")));
        }
        if !(self.f_min > 0.0) || !(self.l_min > 0.0) {
            return Err(ModelError::InvalidBounds(format!(
                "f_min = {} and l_min = {} must be positive",
                self.f_min, self.l_min
            )));
        }
        if self.q_min < 0.0 {
            return Err(ModelError::InvalidBounds(format!("q_min = {} is negative", self.q_min)));
        }
        if self.f_min > self.f_max || self.l_min > self.l_max || self.q_min > self.q_max {
            return Err(ModelError::InvalidBounds(format!("lower bound above upper in {self:?}")));
        }
        Ok(())
    }

    /// `f2 l2 / (f1 l1)`.
    pub fn anisotropy_ratio(&self) -> Result<f64, ModelError> {
        if !(self.f_min > 0.0) || !(self.l_min > 0.0) {
            return Err(ModelError::InvalidBounds(format!(
                "f_min = {} and l_min = {} must be positive",
                self.f_min, self.l_min
            )));
        }
        Ok(self.f_max * self.l_max / (self.f_min * self.l_min))
    }

    /// Radius `h f2 l2 / (f1 l1)` of the near-front neighbourhood. The optimal
    /// path from a vertex crosses the current accepted level set no further
    /// than this from the vertex.
    pub fn anisotropy_radius(&self, h: f64) -> Result<f64, ModelError> {
        Ok(h * self.anisotropy_ratio()?)
    }

    /// Upper bound on cost per unit length, `l2 / f1`.
    pub fn max_cost_per_length(&self) -> f64 {
        self.l_max / self.f_min
    }

    /// Lower bound on cost per unit length, `l1 / f2`.
    pub fn min_cost_per_length(&self) -> f64 {
        self.l_min / self.f_max
    }
}

type DirectionalFn = Arc<dyn Fn(Point, Direction) -> f64 + Send + Sync>;
type ScalarFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;

/// The `(f, l, q)` triple. Cheap to clone; evaluation is pure.
#[derive(Clone)]
pub struct SpeedCostModel {
    name: String,
    speed: DirectionalFn,
    cost: DirectionalFn,
    terminal: ScalarFn,
    bounds: Bounds,
}

impl fmt::Debug for SpeedCostModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpeedCostModel").field("name", &self.name).field("bounds", &self.bounds).finish_non_exhaustive()
    }
}

impl SpeedCostModel {
    pub fn new<F, L, Q>(
        name: impl Into<String>,
        speed: F,
        cost: L,
        terminal: Q,
        bounds: Bounds,
    ) -> Result<Self, ModelError>
    where
        F: Fn(Point, Direction) -> f64 + Send + Sync + 'static,
        L: Fn(Point, Direction) -> f64 + Send + Sync + 'static,
        Q: Fn(Point) -> f64 + Send + Sync + 'static,
    {
        bounds.validate()?;
        Ok(Self {
            name: name.into(),
            speed: Arc::new(speed),
            cost: Arc::new(cost),
            terminal: Arc::new(terminal),
            bounds,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn bounds(&self) -> Bounds {
        self.bounds
    }

    /// `f(x, a)`.
    pub fn speed(&self, x: Point, a: Direction) -> f64 {
        (self.speed)(x, a)
    }

    /// `l(x, a)`.
    pub fn running_cost(&self, x: Point, a: Direction) -> f64 {
        (self.cost)(x, a)
    }

    /// `q(x)`.
    pub fn terminal_cost(&self, x: Point) -> f64 {
        (self.terminal)(x)
    }

    /// `l(x, a) / f(x, a)`: cost of moving one unit of length.
    pub fn cost_per_length(&self, x: Point, a: Direction) -> f64 {
        (self.cost)(x, a) / (self.speed)(x, a)
    }

    /// Replaces the terminal cost and its bounds.
    pub fn with_terminal<Q>(&self, terminal: Q, q_min: f64, q_max: f64) -> Result<Self, ModelError>
    where
        Q: Fn(Point) -> f64 + Send + Sync + 'static,
    {
        let bounds = Bounds { q_min, q_max, ..self.bounds };
        bounds.validate()?;
        Ok(Self { terminal: Arc::new(terminal), bounds, ..self.clone() })
    }

    /// Multiplies both `l` and `q` by `c > 0`.
    pub fn scale_costs(&self, c: f64) -> Result<Self, ModelError> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(ModelError::InvalidParams(format!("cost scale {c} must be positive")));
        }
        let cost = self.cost.clone();
        let terminal = self.terminal.clone();
        let b = self.bounds;
        let bounds = Bounds { l_min: c * b.l_min, l_max: c * b.l_max, q_min: c * b.q_min, q_max: c * b.q_max, ..b };
        bounds.validate()?;
        Ok(Self {
            name: self.name.clone(),
            speed: self.speed.clone(),
            cost: Arc::new(move |x, a| c * cost(x, a)),
            terminal: Arc::new(move |x| c * terminal(x)),
            bounds,
        })
    }

    /// `f = c_f`, `l = c_l`, `q = c_q` everywhere.
    pub fn constant_isotropic(c_f: f64, c_l: f64, c_q: f64) -> Result<Self, ModelError> {
        let bounds = Bounds { f_min: c_f, f_max: c_f, l_min: c_l, l_max: c_l, q_min: c_q, q_max: c_q };
        Self::new("constant_isotropic", move |_, _| c_f, move |_, _| c_l, move |_| c_q, bounds)
    }

    /// Speed with an elliptic polar plot: `a_axis` along `e1`, `b_axis`
    /// along `e2`, `f(a) = 1 / sqrt((a.e1 / A)^2 + (a.e2 / B)^2)`.
    pub fn elliptic_anisotropic(a_axis: f64, b_axis: f64, c_l: f64, c_q: f64) -> Result<Self, ModelError> {
        Self::elliptic_rotated(a_axis, b_axis, 0.0, c_l, c_q)
    }

    /// Elliptic speed with the ellipse axes rotated by `theta` radians
    /// counter-clockwise from the coordinate axes.
    pub fn elliptic_rotated(a_axis: f64, b_axis: f64, theta: f64, c_l: f64, c_q: f64) -> Result<Self, ModelError> {
        if !(a_axis > 0.0 && b_axis > 0.0) || !a_axis.is_finite() || !b_axis.is_finite() || !theta.is_finite() {
            return Err(ModelError::InvalidParams(format!(
                "ellipse axes must be positive, got A = {a_axis}, B = {b_axis}, theta = {theta}"
            )));
        }
        let bounds = Bounds {
            f_min: a_axis.min(b_axis),
            f_max: a_axis.max(b_axis),
            l_min: c_l,
            l_max: c_l,
            q_min: c_q,
            q_max: c_q,
        };
        let (c, s) = (theta.cos(), theta.sin());
        let speed = move |_: Point, a: Direction| {
            let u = (c * a.x() + s * a.y()) / a_axis;
            let v = (c * a.y() - s * a.x()) / b_axis;
            1.0 / (u * u + v * v).sqrt()
        };
        Self::new("elliptic_anisotropic", speed, move |_, _| c_l, move |_| c_q, bounds)
    }

    /// Isotropic, smoothly varying speed and cost on the plane:
    /// `f = f1 + (f2 - f1) s(x)`, `l = l1 + (l2 - l1) r(x)` with periodic
    /// profiles `s, r` valued in `[0, 1]` at spatial frequency `freq`.
    pub fn position_varying(f_range: (f64, f64), l_range: (f64, f64), c_q: f64, freq: f64) -> Result<Self, ModelError> {
        let (f1, f2) = f_range;
        let (l1, l2) = l_range;
        if !(freq.is_finite() && freq > 0.0) {
            return Err(ModelError::InvalidParams(format!("frequency {freq} must be positive")));
        }
        let bounds = Bounds { f_min: f1, f_max: f2, l_min: l1, l_max: l2, q_min: c_q, q_max: c_q };
        let w = TAU * freq;
        let speed = move |p: Point, _: Direction| {
            let s = 0.5 * (1.0 + (w * p.x).sin() * (w * p.y).cos());
            f1 + (f2 - f1) * s
        };
        let cost = move |p: Point, _: Direction| {
            let r = 0.5 * (1.0 + (w * p.x + 1.0).cos() * (w * p.y + 0.5).sin());
            l1 + (l2 - l1) * r
        };
        Self::new("position_varying", speed, cost, move |_| c_q, bounds)
    }

    /// Isotropic speed sampled on a raster and evaluated bilinearly.
    pub fn position_varying_grid(speed: ScalarGrid, c_l: f64, c_q: f64) -> Result<Self, ModelError> {
        let (f_min, f_max) = speed.value_range();
        let bounds = Bounds { f_min, f_max, l_min: c_l, l_max: c_l, q_min: c_q, q_max: c_q };
        Self::new(
            "position_varying",
            move |p: Point, _: Direction| speed.eval(p),
            move |_, _| c_l,
            move |_| c_q,
            bounds,
        )
    }
}

/// Named model families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PresetKind {
    ConstantIsotropic,
    EllipticAnisotropic,
    PositionVarying,
    ImageDerived,
}

impl PresetKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PresetKind::ConstantIsotropic => "constant_isotropic",
            PresetKind::EllipticAnisotropic => "elliptic_anisotropic",
            PresetKind::PositionVarying => "position_varying",
            PresetKind::ImageDerived => "image_derived",
        }
    }
}

impl FromStr for PresetKind {
    type Err = ModelError;
    fn from_str(s: &str) -> Result<Self, ModelError> {
        match s {
            "constant_isotropic" => Ok(PresetKind::ConstantIsotropic),
            "elliptic_anisotropic" => Ok(PresetKind::EllipticAnisotropic),
            "position_varying" => Ok(PresetKind::PositionVarying),
            "image_derived" => Ok(PresetKind::ImageDerived),
            other => Err(ModelError::UnknownPreset(other.to_string())),
        }
    }
}

impl fmt::Display for PresetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Builds a preset from string-keyed parameters. Recognised keys:
///
/// - `constant_isotropic`: `f` (1), `l` (1)
/// - `elliptic_anisotropic`: `A` (2), `B` (1), `theta` (0), `l` (1)
/// - `position_varying`: `f_min` (0.5), `f_max` (2), `l_min` (1), `l_max` (1), `freq` (1)
///
/// `q` is the constant terminal cost in every family. `image_derived`
/// needs a raster; see [`crate::imaging::raster_to_model`].
pub fn preset(kind: PresetKind, params: &BTreeMap<String, f64>, q: f64) -> Result<SpeedCostModel, ModelError> {
    let get = |key: &str, default: f64| params.get(key).copied().unwrap_or(default);
    let allowed: &[&str] = match kind {
        PresetKind::ConstantIsotropic => &["f", "l"],
        PresetKind::EllipticAnisotropic => &["A", "B", "theta", "l"],
        PresetKind::PositionVarying => &["f_min", "f_max", "l_min", "l_max", "freq"],
        PresetKind::ImageDerived => {
            return Err(ModelError::InvalidParams("image_derived requires an input image".into()))
        }
    };
    if let Some(key) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(ModelError::InvalidParams(format!("unknown parameter `{key}` for {kind}")));
    }
    match kind {
        PresetKind::ConstantIsotropic => SpeedCostModel::constant_isotropic(get("f", 1.0), get("l", 1.0), q),
        PresetKind::EllipticAnisotropic => {
            SpeedCostModel::elliptic_rotated(get("A", 2.0), get("B", 1.0), get("theta", 0.0), get("l", 1.0), q)
        }
        PresetKind::PositionVarying => SpeedCostModel::position_varying(
            (get("f_min", 0.5), get("f_max", 2.0)),
            (get("l_min", 1.0), get("l_max", 1.0)),
            q,
            get("freq", 1.0),
        ),
        PresetKind::ImageDerived => unreachable!(),
    }
}

/// Row-major scalar raster stretched over a rectangle. Row 0 is the top
/// edge (largest y), matching image conventions. Samples sit on the
/// rectangle's corners and are interpolated bilinearly in between.
#[derive(Debug, Clone)]
pub struct ScalarGrid {
    width: usize,
    height: usize,
    values: Vec<f64>,
    x_range: (f64, f64),
    y_range: (f64, f64),
}

impl ScalarGrid {
    pub fn new(
        width: usize,
        height: usize,
        values: Vec<f64>,
        x_range: (f64, f64),
        y_range: (f64, f64),
    ) -> Result<Self, ModelError> {
        if width < 2 || height < 2 || values.len() != width * height {
            return Err(ModelError::InvalidParams(format!("grid {width}x{height} with {} samples", values.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::InvalidParams("non-finite grid sample".into()));
        }
        if !(x_range.1 > x_range.0) || !(y_range.1 > y_range.0) {
            return Err(ModelError::InvalidParams(format!("empty range {x_range:?} x {y_range:?}")));
        }
        Ok(Self { width, height, values, x_range, y_range })
    }

    /// Reads a CSV raster: one row of comma-separated numbers per line, top
    /// row first. Blank lines and lines starting with `#` are skipped.
    pub fn from_csv(path: impl AsRef<Path>, x_range: (f64, f64), y_range: (f64, f64)) -> Result<Self, ModelError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_csv_str(&text, x_range, y_range)
    }

    pub fn from_csv_str(text: &str, x_range: (f64, f64), y_range: (f64, f64)) -> Result<Self, ModelError> {
        let mut width = None;
        let mut values = Vec::new();
        let mut height = 0;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row: Vec<f64> = line
                .split(',')
                .map(|tok| tok.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| ModelError::InvalidParams(format!("line {}: {e}", lineno + 1)))?;
            match width {
                None => width = Some(row.len()),
                Some(w) if w != row.len() => {
                    return Err(ModelError::InvalidParams(format!(
                        "line {}: expected {w} columns, found {}",
                        lineno + 1,
                        row.len()
                    )))
                }
                _ => {}
            }
            values.extend(row);
            height += 1;
        }
        Self::new(width.unwrap_or(0), height, values, x_range, y_range)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn value_range(&self) -> (f64, f64) {
        self.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    /// Sample at column `col`, row `row` (row 0 on top).
    pub fn sample(&self, col: usize, row: usize) -> f64 {
        self.values[row * self.width + col]
    }

    /// Bilinear evaluation; points outside the rectangle are clamped onto it.
    pub fn eval(&self, p: Point) -> f64 {
        let fx = (p.x - self.x_range.0) / (self.x_range.1 - self.x_range.0) * (self.width - 1) as f64;
        let fy = (self.y_range.1 - p.y) / (self.y_range.1 - self.y_range.0) * (self.height - 1) as f64;
        let fx = fx.clamp(0.0, (self.width - 1) as f64);
        let fy = fy.clamp(0.0, (self.height - 1) as f64);
        let c0 = (fx.floor() as usize).min(self.width - 2);
        let r0 = (fy.floor() as usize).min(self.height - 2);
        let tx = fx - c0 as f64;
        let ty = fy - r0 as f64;
        let top = (1.0 - tx) * self.sample(c0, r0) + tx * self.sample(c0 + 1, r0);
        let bottom = (1.0 - tx) * self.sample(c0, r0 + 1) + tx * self.sample(c0 + 1, r0 + 1);
        (1.0 - ty) * top + ty * bottom
    }
}

/// Which declared bound a sample broke.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BoundKind {
    Speed,
    RunningCost,
    TerminalCost,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundViolation {
    pub kind: BoundKind,
    pub vertex: usize,
    /// Sampled direction angle in radians; `None` for terminal cost.
    pub angle: Option<f64>,
    pub value: f64,
    pub declared: (f64, f64),
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundsReport {
    pub violations: Vec<BoundViolation>,
    pub speed_range: (f64, f64),
    pub cost_range: (f64, f64),
    /// `(inf, -inf)` when the mesh has no boundary vertices.
    pub terminal_range: (f64, f64),
}

impl BoundsReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Samples `f` and `l` at every vertex in `n_dirs` equally spaced directions
/// (at least 4) and `q` at every boundary vertex, and reports samples
/// outside the declared bounds.
pub fn validate_bounds(model: &SpeedCostModel, mesh: &TriMesh, n_dirs: usize) -> BoundsReport {
    let n_dirs = n_dirs.max(4);
    let b = model.bounds();
    let mut violations = Vec::new();
    let mut speed_range = (f64::INFINITY, f64::NEG_INFINITY);
    let mut cost_range = speed_range;
    let mut terminal_range = speed_range;
    let widen = |r: &mut (f64, f64), v: f64| {
        r.0 = r.0.min(v);
        r.1 = r.1.max(v);
    };
    let outside = |v: f64, lo: f64, hi: f64| !(v >= lo && v <= hi);
    for (vertex, &x) in mesh.vertices().iter().enumerate() {
        for k in 0..n_dirs {
            let angle = 2.0 * PI * k as f64 / n_dirs as f64;
            let a = Direction::from_angle(angle);
            let f = model.speed(x, a);
            let l = model.running_cost(x, a);
            widen(&mut speed_range, f);
            widen(&mut cost_range, l);
            if outside(f, b.f_min, b.f_max) {
                violations.push(BoundViolation {
                    kind: BoundKind::Speed,
                    vertex,
                    angle: Some(angle),
                    value: f,
                    declared: (b.f_min, b.f_max),
                });
            }
            if outside(l, b.l_min, b.l_max) {
                violations.push(BoundViolation {
                    kind: BoundKind::RunningCost,
                    vertex,
                    angle: Some(angle),
                    value: l,
                    declared: (b.l_min, b.l_max),
                });
            }
        }
    }
    for &vertex in mesh.boundary_vertices() {
        let q = model.terminal_cost(mesh.vertex(vertex));
        widen(&mut terminal_range, q);
        if outside(q, b.q_min, b.q_max) {
            violations.push(BoundViolation {
                kind: BoundKind::TerminalCost,
                vertex,
                angle: None,
                value: q,
                declared: (b.q_min, b.q_max),
            });
        }
    }
    BoundsReport { violations, speed_range, cost_range, terminal_range }
}
