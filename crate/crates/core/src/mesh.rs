//! Triangulated planar domains.
//!
//! The boundary is detected topologically: an edge used by exactly one
//! triangle lies on the boundary. `h` is the longest edge of the mesh.

use std::collections::HashMap;
use std::ops::{Add, Mul, Sub};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spatial::BucketGrid;

/// Barycentric slack accepted by point location.
pub const LOCATE_EPS: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("triangle {triangle} is degenerate (zero area or repeated vertex)")]
    DegenerateTriangle { triangle: usize },
    #[error("edge ({a}, {b}) is shared by more than two triangles")]
    NonManifoldEdge { a: usize, b: usize },
    #[error("vertex {vertex} belongs to no triangle")]
    DanglingVertex { vertex: usize },
    #[error("triangle {triangle} references vertex {index} but only {len} vertices exist")]
    IndexOutOfRange { triangle: usize, index: usize, len: usize },
    #[error("mesh has no triangles")]
    NoTriangles,
    #[error("vertex {vertex} has a non-finite coordinate")]
    NonFinite { vertex: usize },
    #[error("invalid grid range: {0}")]
    InvalidRange(String),
    #[error("point ({x}, {y}) lies outside the meshed domain")]
    OutsideDomain { x: f64, y: f64 },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("mesh file: {0}")]
    Format(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Point) -> f64 {
        (self - o).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// `t * self + (1 - t) * other`.
    pub fn lerp(self, other: Point, t: f64) -> Point {
        Point::new(t * self.x + (1.0 - t) * other.x, t * self.y + (1.0 - t) * other.y)
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

/// A triangle seen from one of its vertices: `apex` plus the opposite pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Simplex {
    pub apex: usize,
    pub others: (usize, usize),
}

/// Shape of a mesh produced by [`structured_grid_mesh`]. Vertex `(i, j)` has
/// index `j * nx + i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridShape {
    pub nx: usize,
    pub ny: usize,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
}

#[derive(Debug, Clone)]
struct EdgeRecord {
    a: usize,
    b: usize,
    triangles: [usize; 2],
    count: u8,
}

/// Immutable triangulated domain.
#[derive(Debug, Clone)]
pub struct TriMesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    boundary_segments: Vec<[usize; 2]>,
    is_boundary: Vec<bool>,
    boundary_vertices: Vec<usize>,
    h: f64,
    vertex_triangles: Vec<Vec<usize>>,
    neighbors: Vec<Vec<usize>>,
    edges: Vec<EdgeRecord>,
    edge_index: HashMap<(usize, usize), usize>,
    bbox: (Point, Point),
    grid: Option<GridShape>,
    triangle_locator: BucketGrid,
    vertex_locator: BucketGrid,
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl TriMesh {
    /// Builds a mesh, computing boundary, adjacency and `h`.
    pub fn new(points: Vec<Point>, triangles: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        if triangles.is_empty() {
            return Err(MeshError::NoTriangles);
        }
        if let Some(vertex) = points.iter().position(|p| !p.is_finite()) {
            return Err(MeshError::NonFinite { vertex });
        }
        let n = points.len();
        for (t, tri) in triangles.iter().enumerate() {
            if let Some(&index) = tri.iter().find(|&&i| i >= n) {
                return Err(MeshError::IndexOutOfRange { triangle: t, index, len: n });
            }
        }

        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &points {
            lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        let diam2 = (hi - lo).dot(hi - lo);

        let mut vertex_triangles = vec![Vec::new(); n];
        let mut edges: Vec<EdgeRecord> = Vec::new();
        let mut edge_index = HashMap::new();
        for (t, &[i, j, k]) in triangles.iter().enumerate() {
            if i == j || j == k || i == k {
                return Err(MeshError::DegenerateTriangle { triangle: t });
            }
            let area2 = (points[j] - points[i]).cross(points[k] - points[i]);
            if area2.abs() * 0.5 <= 1e-12 * diam2 {
                return Err(MeshError::DegenerateTriangle { triangle: t });
            }
            for v in [i, j, k] {
                vertex_triangles[v].push(t);
            }
            for (a, b) in [(i, j), (j, k), (k, i)] {
                let key = edge_key(a, b);
                let id = *edge_index.entry(key).or_insert_with(|| {
                    edges.push(EdgeRecord { a: key.0, b: key.1, triangles: [t, t], count: 0 });
                    edges.len() - 1
                });
                let rec = &mut edges[id];
                if rec.count >= 2 {
                    return Err(MeshError::NonManifoldEdge { a: key.0, b: key.1 });
                }
                rec.triangles[rec.count as usize] = t;
                rec.count += 1;
            }
        }
        if let Some(vertex) = vertex_triangles.iter().position(Vec::is_empty) {
            return Err(MeshError::DanglingVertex { vertex });
        }

        let mut neighbors = vec![Vec::new(); n];
        let mut boundary_segments = Vec::new();
        let mut is_boundary = vec![false; n];
        let mut h: f64 = 0.0;
        for e in &edges {
            neighbors[e.a].push(e.b);
            neighbors[e.b].push(e.a);
            h = h.max(points[e.a].dist(points[e.b]));
            if e.count == 1 {
                boundary_segments.push([e.a, e.b]);
                is_boundary[e.a] = true;
                is_boundary[e.b] = true;
            }
        }
        for nb in &mut neighbors {
            nb.sort_unstable();
        }
        let boundary_vertices = (0..n).filter(|&v| is_boundary[v]).collect();

        let mut triangle_locator = BucketGrid::new(lo, hi, h);
        let pad = Point::new(1e-9 * h, 1e-9 * h);
        for (t, tri) in triangles.iter().enumerate() {
            let (tlo, thi) = tri_bbox(&points, tri);
            triangle_locator.insert(t as u32, tlo - pad, thi + pad);
        }
        let mut vertex_locator = BucketGrid::new(lo, hi, h);
        for (v, &p) in points.iter().enumerate() {
            vertex_locator.insert(v as u32, p, p);
        }

        Ok(Self {
            vertices: points,
            triangles,
            boundary_segments,
            is_boundary,
            boundary_vertices,
            h,
            vertex_triangles,
            neighbors,
            edges,
            edge_index,
            bbox: (lo, hi),
            grid: None,
            triangle_locator,
            vertex_locator,
        })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn vertex(&self, v: usize) -> Point {
        self.vertices[v]
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_segments(&self) -> &[[usize; 2]] {
        &self.boundary_segments
    }

    /// Sorted indices of vertices on the boundary.
    pub fn boundary_vertices(&self) -> &[usize] {
        &self.boundary_vertices
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.is_boundary[v]
    }

    /// Maximum edge length.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        self.bbox
    }

    /// Structured-grid layout, when the mesh came from [`structured_grid_mesh`].
    pub fn grid_shape(&self) -> Option<GridShape> {
        self.grid
    }

    /// Sorted mesh neighbours of `v`.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }

    /// Triangles that have `v` as a vertex, ascending.
    pub fn vertex_triangles(&self, v: usize) -> &[usize] {
        &self.vertex_triangles[v]
    }

    /// Triangles incident to the mesh edge `(a, b)`, or an empty slice when
    /// `(a, b)` is not an edge.
    pub fn edge_triangles(&self, a: usize, b: usize) -> &[usize] {
        match self.edge_index.get(&edge_key(a, b)) {
            Some(&id) => {
                let e = &self.edges[id];
                &e.triangles[..e.count as usize]
            }
            None => &[],
        }
    }

    /// Every mesh edge as a sorted vertex pair, in discovery order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().map(|e| (e.a, e.b))
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [i, j, k] = self.triangles[t];
        let p = &self.vertices;
        0.5 * (p[j] - p[i]).cross(p[k] - p[i]).abs()
    }

    pub fn centroid(&self, t: usize) -> Point {
        let [i, j, k] = self.triangles[t];
        let p = &self.vertices;
        Point::new((p[i].x + p[j].x + p[k].x) / 3.0, (p[i].y + p[j].y + p[k].y) / 3.0)
    }

    /// The star `S(v)`: every triangle containing `v`, seen from `v`.
    pub fn vertex_star(&self, v: usize) -> Vec<Simplex> {
        self.vertex_triangles[v]
            .iter()
            .map(|&t| {
                let [i, j, k] = self.triangles[t];
                let others = if i == v {
                    (j, k)
                } else if j == v {
                    (k, i)
                } else {
                    (i, j)
                };
                Simplex { apex: v, others }
            })
            .collect()
    }

    /// Euclidean distance from `p` to the nearest boundary segment.
    pub fn distance_to_boundary(&self, p: Point) -> f64 {
        self.nearest_boundary_point(p).1
    }

    /// Closest point on the boundary and its distance from `p`.
    pub fn nearest_boundary_point(&self, p: Point) -> (Point, f64) {
        let mut best = (p, f64::INFINITY);
        for &[a, b] in &self.boundary_segments {
            let (q, d) = closest_on_segment(p, self.vertices[a], self.vertices[b]);
            if d < best.1 {
                best = (q, d);
            }
        }
        best
    }

    /// Locates `p` and returns the containing triangle with barycentric
    /// coordinates in triangle vertex order. On shared edges the lowest
    /// triangle index wins.
    pub fn locate_simplex(&self, p: Point) -> Result<(usize, [f64; 3]), MeshError> {
        let (lo, hi) = self.bbox;
        let slack = LOCATE_EPS * self.h;
        let outside = MeshError::OutsideDomain { x: p.x, y: p.y };
        if !p.is_finite() || p.x < lo.x - slack || p.x > hi.x + slack || p.y < lo.y - slack || p.y > hi.y + slack {
            return Err(outside);
        }
        for &t in self.triangle_locator.bucket_at(p) {
            let t = t as usize;
            let z = self.barycentric(t, p);
            if z.iter().all(|&c| c >= -LOCATE_EPS) {
                return Ok((t, z));
            }
        }
        Err(outside)
    }

    /// Barycentric coordinates of `p` relative to triangle `t`.
    pub fn barycentric(&self, t: usize, p: Point) -> [f64; 3] {
        let [i, j, k] = self.triangles[t];
        let (a, b, c) = (self.vertices[i], self.vertices[j], self.vertices[k]);
        let det = (b - a).cross(c - a);
        let zb = (p - a).cross(c - a) / det;
        let zc = (b - a).cross(p - a) / det;
        [1.0 - zb - zc, zb, zc]
    }

    /// Vertices within Euclidean distance `radius` of `p`, ascending.
    pub fn vertices_within(&self, p: Point, radius: f64) -> Vec<usize> {
        let r = Point::new(radius, radius);
        let mut cand = Vec::new();
        self.vertex_locator.query(p - r, p + r, &mut cand);
        let mut out: Vec<usize> =
            cand.into_iter().map(|v| v as usize).filter(|&v| self.vertices[v].dist(p) <= radius).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn from_json_str(s: &str) -> Result<Self, MeshError> {
        let file: MeshFile = serde_json::from_str(s)?;
        let points = file.vertices.iter().map(|&[x, y]| Point::new(x, y)).collect();
        TriMesh::new(points, file.triangles)
    }

    pub fn to_json_string(&self) -> String {
        let file = MeshFile {
            vertices: self.vertices.iter().map(|p| [p.x, p.y]).collect(),
            triangles: self.triangles.clone(),
        };
        serde_json::to_string(&file).expect("finite mesh serializes")
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self, MeshError> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<(), MeshError> {
        std::fs::write(path, self.to_json_string())?;
        Ok(())
    }
}

/// On-disk mesh layout: `{"vertices": [[x, y], ...], "triangles": [[i, j, k], ...]}`.
#[derive(Debug, Serialize, Deserialize)]
struct MeshFile {
    vertices: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
}

fn tri_bbox(points: &[Point], tri: &[usize; 3]) -> (Point, Point) {
    let mut lo = points[tri[0]];
    let mut hi = lo;
    for &v in &tri[1..] {
        let p = points[v];
        lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    (lo, hi)
}

fn closest_on_segment(p: Point, a: Point, b: Point) -> (Point, f64) {
    let ab = b - a;
    let len2 = ab.dot(ab);
    let t = if len2 > 0.0 { ((p - a).dot(ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
    let q = a + ab * t;
    (q, q.dist(p))
}

/// Distance from `p` to the closed segment `[a, b]`.
pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    closest_on_segment(p, a, b).1
}

/// Rectangular grid of `nx * ny` vertices, each cell split along one
/// diagonal. The diagonal alternates with cell parity so the triangulation has
/// no preferred direction.
pub fn structured_grid_mesh(
    nx: usize,
    ny: usize,
    x_range: (f64, f64),
    y_range: (f64, f64),
) -> Result<TriMesh, MeshError> {
    if nx < 2 || ny < 2 {
        return Err(MeshError::InvalidRange(format!("need nx, ny >= 2, got {nx} x {ny}")));
    }
    let valid = |r: (f64, f64)| r.0.is_finite() && r.1.is_finite() && r.1 > r.0;
    if !valid(x_range) || !valid(y_range) {
        return Err(MeshError::InvalidRange(format!("x {x_range:?}, y {y_range:?}")));
    }
    let dx = (x_range.1 - x_range.0) / (nx - 1) as f64;
    let dy = (y_range.1 - y_range.0) / (ny - 1) as f64;
    let mut points = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            // Snap the last row/column onto the range end exactly.
            let x = if i == nx - 1 { x_range.1 } else { x_range.0 + i as f64 * dx };
            let y = if j == ny - 1 { y_range.1 } else { y_range.0 + j as f64 * dy };
            points.push(Point::new(x, y));
        }
    }
    let mut triangles = Vec::with_capacity(2 * (nx - 1) * (ny - 1));
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let v00 = j * nx + i;
            let v10 = v00 + 1;
            let v01 = v00 + nx;
            let v11 = v01 + 1;
            if (i + j) % 2 == 0 {
                triangles.push([v00, v10, v11]);
                triangles.push([v00, v11, v01]);
            } else {
                triangles.push([v00, v10, v01]);
                triangles.push([v10, v11, v01]);
            }
        }
    }
    let mut mesh = TriMesh::new(points, triangles)?;
    mesh.grid = Some(GridShape { nx, ny, x_range, y_range });
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> TriMesh {
        let pts = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(1.0, 1.0), Point::new(0.0, 1.0)];
        TriMesh::new(pts, vec![[0, 1, 2], [0, 2, 3]]).unwrap()
    }

    #[test]
    fn unit_square_boundary() {
        let m = unit_square();
        assert!((m.h() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(m.boundary_vertices().len(), 4);
        assert_eq!(m.boundary_segments().len(), 4);
        assert!(!m.boundary_segments().contains(&[0, 2]));
    }

    #[test]
    fn single_triangle() {
        let pts = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)];
        let m = TriMesh::new(pts, vec![[0, 1, 2]]).unwrap();
        assert_eq!(m.boundary_vertices(), &[0, 1, 2]);
        assert!((m.h() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn construction_errors() {
        let pts = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)];
        assert!(matches!(
            TriMesh::new(pts.clone(), vec![[0, 1, 1]]),
            Err(MeshError::DegenerateTriangle { triangle: 0 })
        ));
        let collinear = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(2.0, 0.0)];
        assert!(matches!(TriMesh::new(collinear, vec![[0, 1, 2]]), Err(MeshError::DegenerateTriangle { .. })));
        let mut with_extra = pts.clone();
        with_extra.push(Point::new(5.0, 5.0));
        assert!(matches!(TriMesh::new(with_extra, vec![[0, 1, 2]]), Err(MeshError::DanglingVertex { vertex: 3 })));
        let fan = vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(0.0, 1.0),
            Point::new(0.0, -1.0),
            Point::new(1.0, 1.0),
        ];
        assert!(matches!(
            TriMesh::new(fan, vec![[0, 1, 2], [0, 1, 3], [0, 1, 4]]),
            Err(MeshError::NonManifoldEdge { a: 0, b: 1 })
        ));
        assert!(matches!(TriMesh::new(pts.clone(), vec![[0, 1, 7]]), Err(MeshError::IndexOutOfRange { index: 7, .. })));
        assert!(matches!(TriMesh::new(pts, vec![]), Err(MeshError::NoTriangles)));
    }

    #[test]
    fn grid_counts() {
        let m = structured_grid_mesh(2, 2, (0.0, 1.0), (0.0, 1.0)).unwrap();
        assert_eq!((m.num_vertices(), m.triangles().len()), (4, 2));
        let m = structured_grid_mesh(3, 3, (0.0, 1.0), (0.0, 1.0)).unwrap();
        assert_eq!((m.num_vertices(), m.triangles().len()), (9, 8));
        assert!((m.h() - 2f64.sqrt() / 2.0).abs() < 1e-15);
        assert_eq!(m.boundary_vertices().len(), 8);
        assert!(structured_grid_mesh(1, 3, (0.0, 1.0), (0.0, 1.0)).is_err());
        assert!(matches!(structured_grid_mesh(3, 3, (1.0, 1.0), (0.0, 1.0)), Err(MeshError::InvalidRange(_))));
    }

    #[test]
    fn grid_65_diameter() {
        let m = structured_grid_mesh(65, 65, (0.0, 1.0), (0.0, 1.0)).unwrap();
        // Brute-force max over triangle edges.
        let mut h: f64 = 0.0;
        for &[i, j, k] in m.triangles() {
            for (a, b) in [(i, j), (j, k), (k, i)] {
                h = h.max(m.vertex(a).dist(m.vertex(b)));
            }
        }
        assert_eq!(m.h(), h);
        assert!((h - 2f64.sqrt() / 64.0).abs() < 1e-15);
    }

    #[test]
    fn star_sizes() {
        let m = unit_square();
        assert_eq!(m.vertex_star(1).len(), 1);
        assert_eq!(m.vertex_star(0).len(), 2);
        assert!(m.vertex_star(2).iter().all(|s| s.apex == 2));

        let g = structured_grid_mesh(3, 3, (0.0, 1.0), (0.0, 1.0)).unwrap();
        let count = g.triangles().iter().filter(|t| t.contains(&4)).count();
        assert_eq!(g.vertex_star(4).len(), count);
        assert_eq!(count, 8);
        let g = structured_grid_mesh(4, 3, (0.0, 1.0), (0.0, 1.0)).unwrap();
        // Vertex (2, 1) has the other diagonal parity.
        assert_eq!(g.vertex_star(6).len(), 4);
    }

    #[test]
    fn boundary_distance() {
        let m = unit_square();
        assert_eq!(m.distance_to_boundary(Point::new(0.5, 0.5)), 0.5);
        assert_eq!(m.distance_to_boundary(Point::new(1.0, 0.0)), 0.0);
        assert!((m.distance_to_boundary(Point::new(0.25, 0.4)) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn segment_distance() {
        let d = point_segment_distance(Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0));
        assert!((d - 2f64.sqrt() / 2.0).abs() < 1e-15);
        let a = Point::new(0.3, 0.7);
        assert_eq!(point_segment_distance(a, a, Point::new(2.0, 2.0)), 0.0);
        let d = point_segment_distance(Point::new(2.0, 0.0), Point::new(0.0, 0.0), Point::new(1.0, 0.0));
        assert_eq!(d, 1.0);
    }

    #[test]
    fn locate() {
        let m = unit_square();
        let (_, z) = m.locate_simplex(Point::new(1.0, 0.0)).unwrap();
        assert!(z.iter().any(|&c| (c - 1.0).abs() < 1e-12));
        let c = m.centroid(1);
        let (t, z) = m.locate_simplex(c).unwrap();
        assert_eq!(t, 1);
        for zi in z {
            assert!((zi - 1.0 / 3.0).abs() < 1e-12);
        }
        // Diagonal point: shared by both triangles, lowest index wins.
        assert_eq!(m.locate_simplex(Point::new(0.5, 0.5)).unwrap().0, 0);
        assert!(matches!(m.locate_simplex(Point::new(3.0, 0.5)), Err(MeshError::OutsideDomain { .. })));
    }

    #[test]
    fn locate_outside_nonconvex() {
        // L-shape: the notch is inside the bounding box but outside the mesh.
        let pts = vec![
            Point::new(0.0, 0.0),
            Point::new(2.0, 0.0),
            Point::new(2.0, 1.0),
            Point::new(1.0, 1.0),
            Point::new(1.0, 2.0),
            Point::new(0.0, 2.0),
            Point::new(0.0, 1.0),
        ];
        let m = TriMesh::new(pts, vec![[0, 1, 2], [0, 2, 3], [0, 3, 6], [6, 3, 4], [6, 4, 5]]).unwrap();
        assert!(m.locate_simplex(Point::new(1.5, 1.5)).is_err());
        assert!(m.locate_simplex(Point::new(0.5, 1.5)).is_ok());
    }

    #[test]
    fn json_roundtrip_and_rejects_nonfinite() {
        let m = structured_grid_mesh(4, 3, (0.0, 2.0), (-1.0, 1.0)).unwrap();
        let back = TriMesh::from_json_str(&m.to_json_string()).unwrap();
        assert_eq!(back.vertices(), m.vertices());
        assert_eq!(back.triangles(), m.triangles());
        assert_eq!(back.boundary_segments(), m.boundary_segments());
        let bad = r#"{"vertices": [[0,0],[1,0],[0,1e999]], "triangles": [[0,1,2]]}"#;
        assert!(TriMesh::from_json_str(bad).is_err());
        assert!(TriMesh::from_json_str(r#"{"vertices": [[0,0]]}"#).is_err());
    }

    #[test]
    fn vertices_within_radius() {
        let g = structured_grid_mesh(5, 5, (0.0, 1.0), (0.0, 1.0)).unwrap();
        let near = g.vertices_within(Point::new(0.5, 0.5), 0.25 + 1e-12);
        assert_eq!(near, vec![7, 11, 12, 13, 17]);
    }
}
