//! Independent reference for the value function: a label-setting shortest
//! path over a dense graph that links every vertex to all vertices within
//! `k h`. Straight graph edges approximate admissible controls, so the graph
//! value converges to `v` as the direction set gets richer.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::mesh::{Point, TriMesh};
use crate::model::{Direction, SpeedCostModel};

/// Points used by the trapezoid rule along each graph edge.
pub const EDGE_QUADRATURE_POINTS: usize = 8;

/// Cost of moving in a straight line from `from` to `to`: the segment length
/// times the trapezoid average of `l / f` at equally spaced points, with the
/// direction fixed to `(to - from) / |to - from|`.
pub fn segment_cost(model: &SpeedCostModel, from: Point, to: Point) -> f64 {
    let len = from.dist(to);
    let Some(a) = Direction::new(to - from) else { return 0.0 };
    let n = EDGE_QUADRATURE_POINTS;
    let mut sum = 0.0;
    for i in 0..n {
        let t = i as f64 / (n - 1) as f64;
        let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        sum += w * model.cost_per_length(to.lerp(from, t), a);
    }
    len * sum / (n - 1) as f64
}

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, o: &Self) -> Ordering {
        o.0.total_cmp(&self.0).then_with(|| o.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// Dijkstra from the boundary (seeded at `q`) over the graph with edges to
/// every vertex within `k * h`. Boundary values stay at `q`.
pub fn graph_value(mesh: &TriMesh, model: &SpeedCostModel, k: f64) -> Vec<f64> {
    let n = mesh.num_vertices();
    let radius = k * mesh.h();
    let mut dist = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    for &b in mesh.boundary_vertices() {
        dist[b] = model.terminal_cost(mesh.vertex(b));
        heap.push(Entry(dist[b], b));
    }
    while let Some(Entry(d, y)) = heap.pop() {
        if done[y] || d > dist[y] {
            continue;
        }
        done[y] = true;
        let py = mesh.vertex(y);
        for x in mesh.vertices_within(py, radius) {
            if done[x] || mesh.is_boundary(x) || x == y {
                continue;
            }
            // The vehicle travels from x toward y.
            let cand = d + segment_cost(model, mesh.vertex(x), py);
            if cand < dist[x] {
                dist[x] = cand;
                heap.push(Entry(cand, x));
            }
        }
    }
    dist
}
