//! Single-pass ordered upwind construction of the discrete value function.
//!
//! Vertices move through three labels. Boundary vertices start `Accepted`
//! with `U = q`. Their neighbours become `Considered` with tentative values.
//! The loop repeatedly accepts a `Considered` vertex `x̄`, freezes its value,
//! updates the accepted front (AF), and lowers the tentative value of every
//! `Considered` vertex whose near-front set `NF(x)` gained an AF edge incident
//! to `x̄`.
//!
//! The tentative value of `x` over an AF edge `(x_j, x_k)` is the
//! semi-Lagrangian update [`simplex_update`]: move in a straight line from
//! `x` to `x̃ = ζ x_j + (1 - ζ) x_k`, pay `‖x̃ - x‖ l / f` on the way, then
//! pay the interpolated value at `x̃`. `NF(x)` contains every AF edge within
//! `h f2 l2 / (f1 l1)` of `x`; the optimal characteristic from `x` meets the
//! accepted region within that distance, so updates from farther edges are
//! never needed.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::field::ValueField;
use crate::mesh::{point_segment_distance, Point, TriMesh};
use crate::minimize::golden_section;
use crate::model::{Direction, ModelError, SpeedCostModel};
use crate::spatial::BucketGrid;

/// Apex-to-edge distance below which an update is refused.
pub const APEX_EPS: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("apex lies on the opposite edge of its simplex")]
    ApexOnEdge,
    #[error("mesh has no boundary segments")]
    NoBoundary,
    #[error("no considered vertex left to accept")]
    EmptyQueue,
    #[error("{} vertices unreachable from the boundary (first: {:?})", .stranded.len(), .stranded.first())]
    Unreachable { stranded: Vec<usize> },
    #[error("fixed-point sweep did not converge in {iterations} sweeps (last change {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("invalid solver options: {0}")]
    InvalidOptions(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Label {
    Far,
    Considered,
    Accepted,
}

/// How the next vertex to accept is selected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum QueueDiscipline {
    /// Binary heap; smallest tentative value, ties to the lowest index.
    #[default]
    ExactMin,
    /// Two-ended list with Small-Label-First insertion and Large-Label-Last
    /// rotation. Cheaper per operation but does not guarantee the minimum.
    SlfLll,
}

impl QueueDiscipline {
    pub fn as_str(self) -> &'static str {
        match self {
            QueueDiscipline::ExactMin => "exact",
            QueueDiscipline::SlfLll => "slf-lll",
        }
    }
}

impl FromStr for QueueDiscipline {
    type Err = SolveError;
    fn from_str(s: &str) -> Result<Self, SolveError> {
        match s {
            "exact" | "exact-min" => Ok(QueueDiscipline::ExactMin),
            "slf-lll" | "slf_lll" => Ok(QueueDiscipline::SlfLll),
            other => Err(SolveError::InvalidOptions(format!("unknown discipline `{other}`"))),
        }
    }
}

impl fmt::Display for QueueDiscipline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveOptions {
    pub discipline: QueueDiscipline,
    /// Bracket width at which golden-section refinement over ζ stops.
    pub zeta_tolerance: f64,
    /// Equispaced ζ samples (endpoints included) before refinement.
    pub zeta_coarse_samples: usize,
    /// Multiplier on the near-front radius `h f2 l2 / (f1 l1)`.
    pub radius_scale: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { discipline: QueueDiscipline::ExactMin, zeta_tolerance: 1e-9, zeta_coarse_samples: 17, radius_scale: 1.0 }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<(), SolveError> {
        if !(self.zeta_tolerance > 0.0) {
            return Err(SolveError::InvalidOptions(format!("zeta_tolerance {} must be positive", self.zeta_tolerance)));
        }
        if self.zeta_coarse_samples < 3 {
            return Err(SolveError::InvalidOptions(format!(
                "zeta_coarse_samples {} must be at least 3",
                self.zeta_coarse_samples
            )));
        }
        if !(self.radius_scale >= 0.0) {
            return Err(SolveError::InvalidOptions(format!("radius_scale {} must be non-negative", self.radius_scale)));
        }
        Ok(())
    }
}

/// Where a vertex's final value came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum UpwindSource {
    /// Boundary vertex, `U = q`.
    Boundary,
    /// Straight move to a single accepted vertex.
    Vertex(usize),
    /// Move to `zeta * a + (1 - zeta) * b` on the accepted edge `(a, b)`.
    Edge { a: usize, b: usize, zeta: f64 },
}

/// One entry of the acceptance log. Boundary vertices are logged at step 0,
/// interior acceptances at steps `1, 2, ...`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Acceptance {
    pub vertex: usize,
    pub value: f64,
    pub step: usize,
}

/// Semi-Lagrangian update of apex `x` from the segment `(x1, x2)` carrying
/// values `u1`, `u2`:
///
/// `min over ζ in [0, 1] of d(ζ) l(x, a_ζ) / f(x, a_ζ) + ζ u1 + (1 - ζ) u2`
///
/// with `x̃ = ζ x1 + (1 - ζ) x2`, `d = ‖x̃ - x‖`, `a_ζ = (x̃ - x) / d`.
/// Returns `(value, ζ*)`; ties go to the smaller ζ.
pub fn simplex_update(
    x: Point,
    x1: Point,
    x2: Point,
    u1: f64,
    u2: f64,
    model: &SpeedCostModel,
    opts: &SolveOptions,
) -> Result<(f64, f64), SolveError> {
    if point_segment_distance(x, x1, x2) < APEX_EPS {
        return Err(SolveError::ApexOnEdge);
    }
    let cost = |z: f64| {
        let target = x1.lerp(x2, z);
        let step = target - x;
        let d = step.norm();
        let a = Direction::new(step).expect("apex off segment");
        d * model.cost_per_length(x, a) + z * u1 + (1.0 - z) * u2
    };

    let n = opts.zeta_coarse_samples.max(3);
    let last = (n - 1) as f64;
    let mut best_i = 0;
    let mut best = (0.0, cost(0.0));
    for i in 1..n {
        let z = if i == n - 1 { 1.0 } else { i as f64 / last };
        let g = cost(z);
        if g < best.1 {
            best = (z, g);
            best_i = i;
        }
    }
    let lo = if best_i == 0 { 0.0 } else { (best_i - 1) as f64 / last };
    let hi = if best_i + 1 >= n { 1.0 } else { (best_i + 1) as f64 / last };
    let (z, g) = golden_section(cost, lo, hi, opts.zeta_tolerance);
    if g < best.1 || (g == best.1 && z < best.0) {
        best = (z, g);
    }
    Ok((best.1, best.0))
}

/// Degenerate update from a single accepted vertex `xb`.
pub fn point_update(x: Point, xb: Point, ub: f64, model: &SpeedCostModel) -> Result<f64, SolveError> {
    let step = xb - x;
    let d = step.norm();
    if d < APEX_EPS {
        return Err(SolveError::ApexOnEdge);
    }
    let a = Direction::new(step).ok_or(SolveError::ApexOnEdge)?;
    Ok(d * model.cost_per_length(x, a) + ub)
}

/// Accepted-front edges with a spatial index for radius queries.
#[derive(Debug, Clone)]
struct AcceptedFront {
    edges: Vec<(usize, usize)>,
    active: Vec<bool>,
    index: HashMap<(usize, usize), usize>,
    grid: BucketGrid,
    n_active: usize,
}

impl AcceptedFront {
    fn new(mesh: &TriMesh, cell: f64) -> Self {
        let (lo, hi) = mesh.bounding_box();
        Self {
            edges: Vec::new(),
            active: Vec::new(),
            index: HashMap::new(),
            grid: BucketGrid::new(lo, hi, cell.max(mesh.h())),
            n_active: 0,
        }
    }

    fn key(a: usize, b: usize) -> (usize, usize) {
        if a < b {
            (a, b)
        } else {
            (b, a)
        }
    }

    fn insert(&mut self, mesh: &TriMesh, a: usize, b: usize) {
        let key = Self::key(a, b);
        if let Some(&id) = self.index.get(&key) {
            if !self.active[id] {
                self.active[id] = true;
                self.n_active += 1;
            }
            return;
        }
        let id = self.edges.len();
        self.edges.push(key);
        self.active.push(true);
        self.index.insert(key, id);
        self.n_active += 1;
        let (pa, pb) = (mesh.vertex(key.0), mesh.vertex(key.1));
        let lo = Point::new(pa.x.min(pb.x), pa.y.min(pb.y));
        let hi = Point::new(pa.x.max(pb.x), pa.y.max(pb.y));
        self.grid.insert(id as u32, lo, hi);
    }

    fn remove(&mut self, a: usize, b: usize) {
        if let Some(&id) = self.index.get(&Self::key(a, b)) {
            if self.active[id] {
                self.active[id] = false;
                self.n_active -= 1;
            }
        }
    }

    fn contains(&self, a: usize, b: usize) -> bool {
        self.index.get(&Self::key(a, b)).is_some_and(|&id| self.active[id])
    }

    /// Active edges within `radius` of `p`, in insertion order.
    fn near(&self, mesh: &TriMesh, p: Point, radius: f64) -> Vec<(usize, usize)> {
        let mut ids: Vec<u32> = Vec::new();
        if radius.is_finite() {
            let r = Point::new(radius, radius);
            self.grid.query(p - r, p + r, &mut ids);
            ids.sort_unstable();
            ids.dedup();
        } else {
            ids = (0..self.edges.len() as u32).collect();
        }
        ids.into_iter()
            .map(|id| id as usize)
            .filter(|&id| self.active[id])
            .map(|id| self.edges[id])
            .filter(|&(a, b)| point_segment_distance(p, mesh.vertex(a), mesh.vertex(b)) <= radius)
            .collect()
    }

    fn active_edges(&self) -> Vec<(usize, usize)> {
        self.edges.iter().zip(&self.active).filter(|(_, &on)| on).map(|(&e, _)| e).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct HeapEntry {
    value: f64,
    vertex: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    // Reversed so BinaryHeap pops the smallest (value, vertex).
    fn cmp(&self, other: &Self) -> Ordering {
        other.value.total_cmp(&self.value).then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone)]
enum CandidateQueue {
    Heap(BinaryHeap<HeapEntry>),
    SlfLll { list: VecDeque<usize>, member: Vec<bool> },
}

/// Solver state between steps. Use [`solve`] for a complete run; the
/// step-wise API exists for tracing and instrumentation.
#[derive(Debug, Clone)]
pub struct Solver {
    mesh: Arc<TriMesh>,
    model: SpeedCostModel,
    opts: SolveOptions,
    radius: f64,
    min_cost_per_length: f64,
    labels: Vec<Label>,
    values: Vec<f64>,
    upwind: Vec<Option<UpwindSource>>,
    front: AcceptedFront,
    queue: CandidateQueue,
    acceptance: Vec<Acceptance>,
    steps: usize,
}

impl Solver {
    /// Labels the boundary `Accepted` at `q`, seeds the front with the
    /// boundary segments, and gives every vertex adjacent to the boundary a
    /// tentative value.
    pub fn new(mesh: Arc<TriMesh>, model: &SpeedCostModel, opts: SolveOptions) -> Result<Self, SolveError> {
        opts.validate()?;
        if mesh.boundary_segments().is_empty() {
            return Err(SolveError::NoBoundary);
        }
        let radius = model.bounds().anisotropy_radius(mesh.h())? * opts.radius_scale;
        let n = mesh.num_vertices();
        let queue = match opts.discipline {
            QueueDiscipline::ExactMin => CandidateQueue::Heap(BinaryHeap::new()),
            QueueDiscipline::SlfLll => CandidateQueue::SlfLll { list: VecDeque::new(), member: vec![false; n] },
        };
        let mut s = Self {
            front: AcceptedFront::new(&mesh, radius),
            mesh,
            model: model.clone(),
            opts,
            radius,
            min_cost_per_length: model.bounds().min_cost_per_length(),
            labels: vec![Label::Far; n],
            values: vec![f64::INFINITY; n],
            upwind: vec![None; n],
            queue,
            acceptance: Vec::new(),
            steps: 0,
        };

        let mesh = s.mesh.clone();
        for &v in mesh.boundary_vertices() {
            s.labels[v] = Label::Accepted;
            s.values[v] = s.model.terminal_cost(mesh.vertex(v));
            s.upwind[v] = Some(UpwindSource::Boundary);
            s.acceptance.push(Acceptance { vertex: v, value: s.values[v], step: 0 });
        }
        for &[a, b] in mesh.boundary_segments() {
            s.front.insert(&mesh, a, b);
        }
        for (a, b) in mesh.edges() {
            if s.labels[a] == Label::Accepted && s.labels[b] == Label::Accepted && s.edge_faces_unaccepted(a, b) {
                s.front.insert(&mesh, a, b);
            }
        }

        for v in 0..n {
            if s.labels[v] != Label::Far || !mesh.neighbors(v).iter().any(|&w| s.labels[w] == Label::Accepted) {
                continue;
            }
            s.labels[v] = Label::Considered;
            // Mesh simplexes whose opposite edge is fully accepted.
            for simplex in mesh.vertex_star(v) {
                let (a, b) = simplex.others;
                if s.labels[a] == Label::Accepted && s.labels[b] == Label::Accepted {
                    s.try_edge(v, a, b)?;
                }
            }
            s.update_from_near_front(v)?;
            for &w in mesh.neighbors(v) {
                if s.labels[w] == Label::Accepted {
                    s.try_vertex(v, w)?;
                }
            }
        }
        Ok(s)
    }

    pub fn mesh(&self) -> &Arc<TriMesh> {
        &self.mesh
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn options(&self) -> &SolveOptions {
        &self.opts
    }

    /// Near-front radius in use, `h f2 l2 / (f1 l1) * radius_scale`.
    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn acceptance_log(&self) -> &[Acceptance] {
        &self.acceptance
    }

    /// Active accepted-front edges as sorted vertex pairs.
    pub fn front_edges(&self) -> Vec<(usize, usize)> {
        self.front.active_edges()
    }

    pub fn front_contains(&self, a: usize, b: usize) -> bool {
        self.front.contains(a, b)
    }

    /// `NF(x)` for an arbitrary radius: AF edges within `radius` of `x`.
    pub fn near_front(&self, x: usize, radius: f64) -> Vec<(usize, usize)> {
        self.front.near(&self.mesh, self.mesh.vertex(x), radius)
    }

    pub fn has_considered(&self) -> bool {
        self.labels.contains(&Label::Considered)
    }

    fn edge_faces_unaccepted(&self, a: usize, b: usize) -> bool {
        self.mesh.edge_triangles(a, b).iter().any(|&t| !self.triangle_accepted(t))
    }

    fn triangle_accepted(&self, t: usize) -> bool {
        self.mesh.triangles()[t].iter().all(|&v| self.labels[v] == Label::Accepted)
    }

    fn offer(&mut self, x: usize, value: f64, source: UpwindSource) {
        if value < self.values[x] {
            self.values[x] = value;
            self.upwind[x] = Some(source);
            self.enqueue(x);
        }
    }

    fn try_edge(&mut self, x: usize, a: usize, b: usize) -> Result<(), SolveError> {
        let m = &self.mesh;
        // Any update from (a, b) is at least this; skip edges that cannot win.
        let floor = self.values[a].min(self.values[b])
            + point_segment_distance(m.vertex(x), m.vertex(a), m.vertex(b)) * self.min_cost_per_length;
        if floor > self.values[x] {
            return Ok(());
        }
        let (value, zeta) = simplex_update(
            m.vertex(x),
            m.vertex(a),
            m.vertex(b),
            self.values[a],
            self.values[b],
            &self.model,
            &self.opts,
        )?;
        self.offer(x, value, UpwindSource::Edge { a, b, zeta });
        Ok(())
    }

    fn try_vertex(&mut self, x: usize, b: usize) -> Result<(), SolveError> {
        let value = point_update(self.mesh.vertex(x), self.mesh.vertex(b), self.values[b], &self.model)?;
        self.offer(x, value, UpwindSource::Vertex(b));
        Ok(())
    }

    fn update_from_near_front(&mut self, x: usize) -> Result<(), SolveError> {
        for (a, b) in self.near_front(x, self.radius) {
            self.try_edge(x, a, b)?;
        }
        Ok(())
    }

    fn enqueue(&mut self, x: usize) {
        let value = self.values[x];
        match &mut self.queue {
            CandidateQueue::Heap(heap) => heap.push(HeapEntry { value, vertex: x }),
            CandidateQueue::SlfLll { list, member } => {
                if member[x] {
                    return;
                }
                member[x] = true;
                // Small Label First.
                match list.front() {
                    Some(&f) if value <= self.values[f] => list.push_front(x),
                    _ => list.push_back(x),
                }
            }
        }
    }

    fn pop_candidate(&mut self) -> Option<usize> {
        match &mut self.queue {
            CandidateQueue::Heap(heap) => {
                while let Some(e) = heap.pop() {
                    if self.labels[e.vertex] == Label::Considered && self.values[e.vertex] == e.value {
                        return Some(e.vertex);
                    }
                }
                None
            }
            CandidateQueue::SlfLll { list, member } => {
                if list.is_empty() {
                    return None;
                }
                // Large Label Last: rotate entries above the mean to the back.
                let mean = list.iter().map(|&v| self.values[v]).sum::<f64>() / list.len() as f64;
                for _ in 0..list.len() {
                    let f = *list.front().expect("non-empty");
                    if self.values[f] <= mean {
                        break;
                    }
                    list.rotate_left(1);
                }
                let v = list.pop_front().expect("non-empty");
                member[v] = false;
                Some(v)
            }
        }
    }

    /// Selects the next vertex, freezes it and updates the accepted front:
    /// edges from `x̄` to accepted neighbours that still bound a triangle
    /// with an unaccepted vertex join the front; front edges whose triangles
    /// are now all accepted leave it.
    pub fn accept_min(&mut self) -> Result<usize, SolveError> {
        let v = self.pop_candidate().ok_or(SolveError::EmptyQueue)?;
        self.labels[v] = Label::Accepted;
        self.steps += 1;
        self.acceptance.push(Acceptance { vertex: v, value: self.values[v], step: self.steps });

        let mesh = self.mesh.clone();
        for &w in mesh.neighbors(v) {
            if self.labels[w] == Label::Accepted && self.edge_faces_unaccepted(v, w) {
                self.front.insert(&mesh, v, w);
            }
        }
        for &t in mesh.vertex_triangles(v) {
            if !self.triangle_accepted(t) {
                continue;
            }
            let [i, j, k] = mesh.triangles()[t];
            for (a, b) in [(i, j), (j, k), (k, i)] {
                if !self.edge_faces_unaccepted(a, b) {
                    self.front.remove(a, b);
                }
            }
        }
        Ok(v)
    }

    /// Brings `Far` neighbours of the just-accepted `x̄` into the candidate
    /// set and lowers tentative values through the new front edges at `x̄`.
    pub fn reevaluate_neighbors(&mut self, accepted: usize) -> Result<(), SolveError> {
        let mesh = self.mesh.clone();
        let new_edges: Vec<(usize, usize)> = mesh
            .neighbors(accepted)
            .iter()
            .filter(|&&w| self.labels[w] == Label::Accepted && self.front.contains(accepted, w))
            .map(|&w| (accepted, w))
            .collect();

        let mut fresh = Vec::new();
        for &w in mesh.neighbors(accepted) {
            if self.labels[w] == Label::Far {
                self.labels[w] = Label::Considered;
                fresh.push(w);
            }
        }
        for &w in &fresh {
            self.update_from_near_front(w)?;
            self.try_vertex(w, accepted)?;
        }

        let reach = self.radius + mesh.h();
        for x in mesh.vertices_within(mesh.vertex(accepted), reach) {
            if self.labels[x] != Label::Considered || fresh.contains(&x) {
                continue;
            }
            let px = mesh.vertex(x);
            for &(a, b) in &new_edges {
                if point_segment_distance(px, mesh.vertex(a), mesh.vertex(b)) <= self.radius {
                    self.try_edge(x, a, b)?;
                }
            }
            if mesh.neighbors(accepted).binary_search(&x).is_ok() {
                self.try_vertex(x, accepted)?;
            }
        }
        Ok(())
    }

    /// One accept + reevaluate round. `Ok(None)` once nothing is left.
    pub fn step(&mut self) -> Result<Option<usize>, SolveError> {
        match self.accept_min() {
            Ok(v) => {
                self.reevaluate_neighbors(v)?;
                Ok(Some(v))
            }
            Err(SolveError::EmptyQueue) => Ok(None),
            Err(e) => Err(e),
        }
    }

    /// Runs to completion.
    pub fn run(mut self) -> Result<ValueField, SolveError> {
        while self.step()?.is_some() {}
        let stranded: Vec<usize> = (0..self.labels.len()).filter(|&v| self.labels[v] != Label::Accepted).collect();
        if !stranded.is_empty() {
            return Err(SolveError::Unreachable { stranded });
        }
        let upwind = self.upwind.into_iter().map(|u| u.expect("accepted vertex has a source")).collect();
        Ok(ValueField::new(self.mesh, self.values)
            .expect("accepted values are finite")
            .with_acceptance(self.acceptance)
            .with_upwind(upwind))
    }
}

/// Solves for the discrete value function on every mesh vertex.
pub fn solve(mesh: &Arc<TriMesh>, model: &SpeedCostModel, opts: &SolveOptions) -> Result<ValueField, SolveError> {
    Solver::new(mesh.clone(), model, *opts)?.run()
}

/// Result of [`sweep_to_fixed_point`].
#[derive(Debug, Clone)]
pub struct FixedPoint {
    pub field: ValueField,
    pub sweeps: usize,
    /// Largest per-vertex change in the final sweep.
    pub last_change: f64,
}

/// Gauss-Seidel iteration of `U(x) <- min(U(x), min over S(x) of V_s(x))`
/// over mesh triangles only, alternating forward and backward vertex order,
/// until a sweep changes no vertex by `tol` or more. Boundary vertices keep
/// their initial values. Non-finite initial values are allowed.
pub fn sweep_to_fixed_point(
    mesh: &Arc<TriMesh>,
    model: &SpeedCostModel,
    init: &[f64],
    opts: &SolveOptions,
    tol: f64,
    max_iters: usize,
) -> Result<FixedPoint, SolveError> {
    opts.validate()?;
    assert_eq!(init.len(), mesh.num_vertices(), "one initial value per vertex");
    let n = mesh.num_vertices();
    let mut u = init.to_vec();
    let stars: Vec<_> = (0..n).map(|v| mesh.vertex_star(v)).collect();
    let mut last_change = f64::INFINITY;
    for sweep in 0..max_iters {
        let mut change: f64 = 0.0;
        let order: Box<dyn Iterator<Item = usize>> =
            if sweep % 2 == 0 { Box::new(0..n) } else { Box::new((0..n).rev()) };
        for x in order {
            if mesh.is_boundary(x) {
                continue;
            }
            let px = mesh.vertex(x);
            let mut best = u[x];
            for s in &stars[x] {
                let (a, b) = s.others;
                let (ua, ub) = (u[a], u[b]);
                let v = match (ua.is_finite(), ub.is_finite()) {
                    (true, true) => simplex_update(px, mesh.vertex(a), mesh.vertex(b), ua, ub, model, opts)?.0,
                    (true, false) => point_update(px, mesh.vertex(a), ua, model)?,
                    (false, true) => point_update(px, mesh.vertex(b), ub, model)?,
                    (false, false) => continue,
                };
                best = best.min(v);
            }
            if best < u[x] {
                let delta = if u[x].is_finite() { u[x] - best } else { f64::INFINITY };
                change = change.max(delta);
                u[x] = best;
            }
        }
        last_change = change;
        if change < tol {
            let field = ValueField::new(mesh.clone(), u).map_err(|_| SolveError::Unreachable {
                stranded: (0..n).filter(|&v| !init[v].is_finite()).collect(),
            })?;
            return Ok(FixedPoint { field, sweeps: sweep + 1, last_change });
        }
    }
    Err(SolveError::NoConvergence { iterations: max_iters, residual: last_change })
}
